"""Windowed quasi-Newton (Anderson-type) acceleration of the SFI fixed-point map.

The least-squares problem ``min ||r - dR gamma||_2`` is solved through a thin
QR factorization of the residual-difference window that is updated in place
when a column is appended on the right or removed from the left.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigurationError


@dataclass(frozen=True)
class QnConfig:
    enabled: bool = True
    m: int = 3
    omega: float = 0.5
    omega0: float = 1.0
    drop_tol: float = 1e-12

    def __post_init__(self):
        if not 1 <= self.m <= 20:
            raise ConfigurationError("QN window depth m must lie in [1, 20]")
        if not (0 < self.omega <= 1 and 0 < self.omega0 <= 1):
            raise ConfigurationError("QN damping factors must lie in (0, 1]")


class QnWorkspace:
    def __init__(self, m=3, drop_tol=1e-12):
        self.m = m
        self.drop_tol = drop_tol
        self.dX = []
        self.dR = []
        self.Q = None
        self.R = np.zeros((0, 0))
        self.x_prev = None
        self.r_prev = None

    @property
    def ncols(self):
        return len(self.dR)

    def reset(self):
        self.__init__(self.m, self.drop_tol)

    def _append_qr(self, v):
        v = np.array(v, dtype=float)
        n = v.size
        k = self.ncols
        h = np.zeros(k)
        if k:
            for _ in range(2):  # classical Gram-Schmidt with one reorthogonalization
                c = self.Q.T @ v
                v -= self.Q @ c
                h += c
        rho = np.linalg.norm(v)
        q = v / rho if rho > 0 else np.zeros(n)
        self.Q = q[:, None] if k == 0 else np.column_stack([self.Q, q])
        R = np.zeros((k + 1, k + 1))
        R[:k, :k] = self.R
        R[:k, k] = h
        R[k, k] = rho
        self.R = R

    def delete(self, j):
        """Remove column ``j`` from the window, restoring triangularity with Givens rotations."""
        del self.dX[j]
        del self.dR[j]
        R = np.delete(self.R, j, axis=1)
        Q = self.Q
        for i in range(j, R.shape[1]):
            a, b = R[i, i], R[i + 1, i]
            r = np.hypot(a, b)
            if r == 0:
                continue
            c, s = a / r, b / r
            G = np.array([[c, s], [-s, c]])
            R[[i, i + 1], :] = G @ R[[i, i + 1], :]
            Q[:, [i, i + 1]] = Q[:, [i, i + 1]] @ G.T
            R[i + 1, i] = 0.0
        self.R = R[:-1, :]
        self.Q = Q[:, :-1] if R.shape[1] else None

    def append(self, dx, dr):
        self._append_qr(dr)
        self.dX.append(np.array(dx, dtype=float))
        self.dR.append(np.array(dr, dtype=float))
        if self.ncols > self.m:
            self.delete(0)
        self._drop_ill_conditioned()

    def _drop_ill_conditioned(self):
        while self.ncols:
            scale = max(np.linalg.norm(c) for c in self.dR)
            diag = np.abs(np.diag(self.R))
            bad = np.flatnonzero(diag <= self.drop_tol * scale) if scale > 0 else np.arange(self.ncols)
            if bad.size == 0:
                return
            self.delete(int(bad[0]))

    def solve(self, r):
        """Least-squares coefficients gamma with R gamma = Q^T r."""
        if self.ncols == 0:
            return np.zeros(0)
        return solve_triangular(self.R, self.Q.T @ r, lower=False)

    def matrices(self):
        if self.ncols == 0:
            return None, None
        return np.column_stack(self.dX), np.column_stack(self.dR)


def qn_update(ws: QnWorkspace, x, x_tilde, qn: QnConfig, nu):
    """Accelerated iterate from the current input ``x`` and the SFI output ``x_tilde``.

    Returns the new iterate; the caller projects it onto admissible states.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(x_tilde, dtype=float) - x
    if nu == 0 or ws.x_prev is None:
        x_new = x + qn.omega0 * r
    else:
        dx = x - ws.x_prev
        # a pass that left x unchanged carries no secant information
        if np.linalg.norm(dx) > 1e-14 * max(1.0, np.linalg.norm(x)):
            ws.append(dx, r - ws.r_prev)
        if ws.ncols == 0:
            x_new = x + qn.omega * r
        else:
            gamma = ws.solve(r)
            dX, dR = ws.matrices()
            x_new = x + qn.omega * r - (dX + qn.omega * dR) @ gamma
    ws.x_prev = x.copy()
    ws.r_prev = r.copy()
    return x_new
