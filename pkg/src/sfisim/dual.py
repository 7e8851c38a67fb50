"""Minimal forward-mode derivative carrier for cell- and face-local kernels.

A ``Dual`` holds values ``val`` of shape ``(n,)`` and local derivatives
``der`` of shape ``(n, k)``.  For cell quantities ``k`` is the number of
unknowns per cell; for face quantities ``k`` is twice that, the first half
referring to the face's ``i`` cell and the second half to its ``j`` cell.
"""
from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("val", "der")
    __array_ufunc__ = None

    def __init__(self, val, der):
        self.val = np.asarray(val, dtype=float)
        self.der = np.asarray(der, dtype=float)

    @classmethod
    def const(cls, val, k):
        val = np.atleast_1d(np.asarray(val, dtype=float))
        return cls(val, np.zeros((val.size, k)))

    @classmethod
    def variable(cls, val, col, k):
        val = np.atleast_1d(np.asarray(val, dtype=float))
        der = np.zeros((val.size, k))
        der[:, col] = 1.0
        return cls(val, der)

    @property
    def k(self):
        return self.der.shape[1]

    def __len__(self):
        return self.val.size

    def _lift(self, other):
        if isinstance(other, Dual):
            return other
        return Dual(np.broadcast_to(np.asarray(other, dtype=float), self.val.shape),
                    np.zeros_like(self.der))

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.der + other.der)
        return Dual(self.val + other, self.der)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.der - other.der)
        return Dual(self.val - other, self.der)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.der)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.der * other.val[:, None] + other.der * self.val[:, None])
        other = np.asarray(other, dtype=float)
        return Dual(self.val * other, self.der * (other[:, None] if other.ndim else other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            return Dual(self.val * inv,
                        (self.der - other.der * (self.val * inv)[:, None]) * inv[:, None])
        other = np.asarray(other, dtype=float)
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        c = np.broadcast_to(np.asarray(other, dtype=float), self.val.shape)
        return Dual(c * inv, -self.der * (c * inv * inv)[:, None])

    def safe_div(self, other, mask=None):
        """Quotient that is zero (with zero derivative) where the divisor vanishes."""
        other = self._lift(other)
        zero = other.val == 0 if mask is None else mask
        den = Dual(np.where(zero, 1.0, other.val), np.where(zero[:, None], 0.0, other.der))
        q = self / den
        q.val[zero] = 0.0
        q.der[zero] = 0.0
        return q

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.der[idx])

    def __repr__(self):
        return f"Dual(val={self.val!r})"


def where(cond, a, b):
    cond = np.asarray(cond, dtype=bool)
    if not isinstance(a, Dual):
        a = b._lift(a)
    if not isinstance(b, Dual):
        b = a._lift(b)
    return Dual(np.where(cond, a.val, b.val), np.where(cond[:, None], a.der, b.der))


def dsum(terms):
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def to_face(cell: Dual, face_i, face_j):
    """Gather cell quantity onto faces from both sides: returns (at_i, at_j)."""
    k = cell.k
    n = face_i.size
    zi = np.zeros((n, k))
    at_i = Dual(cell.val[face_i], np.hstack([cell.der[face_i], zi]))
    at_j = Dual(cell.val[face_j], np.hstack([zi, cell.der[face_j]]))
    return at_i, at_j
