"""Residuals and sparse Jacobians for the pressure, transport and coupled systems.

Unknowns per cell, in order: pressure, then the first ``n_p - 1``
saturations; the last phase is eliminated through the saturation constraint.
Global vectors are cell-major.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import rockfluid as rf
from .dual import Dual, dsum, to_face, where
from .flux import face_context, phase_flux_hu, phase_flux_ppu, total_velocity
from .units import GRAVITY


@dataclass(frozen=True, eq=False)
class Discretization:
    grid: object
    model: object
    gravity: float = GRAVITY

    @property
    def n_phases(self):
        return self.model.n_phases

    @property
    def n_cells(self):
        return self.grid.n_cells


@dataclass(eq=False)
class SimState:
    p: np.ndarray
    s: np.ndarray  # (n_cells, n_phases)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).copy()
        self.s = np.atleast_2d(np.asarray(self.s, dtype=float)).copy()

    @property
    def primary(self):
        return self.s[:, :-1].ravel()

    @classmethod
    def from_primary(cls, p, x, n_phases):
        sp_ = np.asarray(x, dtype=float).reshape(-1, n_phases - 1)
        return cls(p, np.column_stack([sp_, 1.0 - sp_.sum(axis=1)]))

    def copy(self):
        return SimState(self.p, self.s)

    def check(self, tol=1e-9):
        return bool(np.all(np.abs(self.s.sum(axis=1) - 1) <= tol)
                    and np.all(self.s >= -tol) and np.all(self.s <= 1 + tol))


@dataclass(eq=False)
class ResidualSystem:
    r: np.ndarray
    J: sp.csr_matrix
    scale: np.ndarray
    n_eq: int = 1

    def norm(self):
        if self.r.size == 0:
            return 0.0
        return float(np.max(np.abs(self.r) / self.scale))

    def block_norms(self):
        """Normalized infinity norm per equation type (row position within a cell)."""
        q = np.abs(self.r / self.scale).reshape(-1, self.n_eq)
        return q.max(axis=0) if q.size else np.zeros(self.n_eq)


def normalized_residual_norm(rs: ResidualSystem):
    return rs.norm()


class _Builder:
    def __init__(self, nc, neq, nv, active):
        self.nc, self.neq, self.nv = nc, neq, nv
        self.val = np.zeros((nc, neq))
        self.rows, self.cols, self.data = [], [], []
        self.colmap = -np.ones(nv, dtype=int)
        self.colmap[list(active)] = np.arange(len(active))
        self.na = len(active)

    def _emit(self, rows, cells, der):
        for v in range(der.shape[1]):
            c = self.colmap[v]
            if c < 0:
                continue
            self.rows.append(rows)
            self.cols.append(cells * self.na + c)
            self.data.append(der[:, v])

    def cell(self, eq, d: Dual, cells=None):
        cells = np.arange(self.nc) if cells is None else np.asarray(cells)
        np.add.at(self.val[:, eq], cells, d.val)
        self._emit(cells * self.neq + eq, cells, d.der)

    def face(self, eq, d: Dual, row_cells, fi, fj):
        nv = self.nv
        self.val[:, eq] += np.bincount(row_cells, d.val, minlength=self.nc)
        rows = row_cells * self.neq + eq
        self._emit(rows, fi, d.der[:, :nv])
        self._emit(rows, fj, d.der[:, nv:])

    def build(self, scale):
        n = self.nc * self.neq
        if self.rows:
            J = sp.coo_matrix(
                (np.concatenate(self.data), (np.concatenate(self.rows), np.concatenate(self.cols))),
                shape=(n, self.nc * self.na),
            ).tocsr()
        else:
            J = sp.csr_matrix((n, self.nc * self.na))
        return ResidualSystem(self.val.ravel(), J, scale.ravel(), self.neq)


def _cell_props(disc, p: Dual, s_prim: list):
    model = disc.model
    s_full = s_prim + [1.0 - dsum(s_prim)]
    sval = np.column_stack([x.val for x in s_full])
    lam_v, dlam = rf.mobility(model, sval)
    lam, b, rho = [], [], []
    for l, ph in enumerate(model.phases):
        der = sum(dlam[:, l, m][:, None] * s_full[m].der for m in range(len(s_full)))
        lam.append(Dual(lam_v[:, l], der))
        bv, db = rf.b_of_p(ph, p.val, model.p_ref)
        b.append(Dual(bv, db[:, None] * p.der))
        rho.append(b[-1] * ph.surface_density)
    phi_v, dphi = rf.porosity(model, p.val)
    phi = Dual(phi_v, dphi[:, None] * p.der)
    return phi, b, rho, lam, s_full


def _old_props(disc, old: SimState):
    model = disc.model
    phi, _ = rf.porosity(model, old.p)
    b = [rf.b_of_p(ph, old.p, model.p_ref)[0] for ph in model.phases]
    return phi, b


def _variables(disc, p, s):
    nc, nph = disc.n_cells, disc.n_phases
    nv = nph
    pd = Dual.variable(p, 0, nv)
    s_prim = [Dual.variable(s[:, l], 1 + l, nv) for l in range(nph - 1)]
    return pd, s_prim, nv


def _row_scale(disc, neq, pressure_rows):
    phi_ref = disc.model.poro_ref
    cols = []
    if pressure_rows:
        cols.append(phi_ref)
    for l in range(neq - len(cols)):
        cols.append(phi_ref * disc.model.phases[l].b_ref)
    return np.column_stack(cols)


def _producer_terms(disc, w, p, lam):
    """Reservoir-volume phase rates WI * lam_l * (p - bhp)+ at the well cell."""
    c = np.array([w.cell])
    dpw = p[c] - w.bhp
    dpw = where(dpw.val > 0, dpw, 0.0)
    return [lam[l][c] * dpw * w.wi for l in range(len(lam))]


def _assemble(disc, p, s, old, dt, wells, mode, uT=None):
    grid, model = disc.grid, disc.model
    nc, nph = disc.n_cells, disc.n_phases
    pd, s_prim, nv = _variables(disc, p, s)
    phi, b, rho, lam, s_full = _cell_props(disc, pd, s_prim)
    phi_n, b_n = _old_props(disc, old)
    ctx = face_context(grid, pd, b, rho, lam, disc.gravity)
    fi, fj = grid.face_i, grid.face_j
    dtv = dt / grid.volume
    dtv_f_i, dtv_f_j = dtv[fi], dtv[fj]

    if mode == "pressure":
        neq, active, pressure_rows = 1, [0], True
    elif mode == "transport":
        neq, active, pressure_rows = nph - 1, list(range(1, nph)), False
    else:
        neq, active, pressure_rows = nph, list(range(nph)), True
    bld = _Builder(nc, neq, nv, active)
    eq0 = 0

    if pressure_rows:
        acc = phi - phi_n * dsum([(b_n[l] * old.s[:, l]) / b[l] for l in range(nph)])
        bld.cell(0, acc)
        ppu = phase_flux_ppu(ctx)
        row_i = dsum([ppu.mass[l] / ctx.b_i[l] for l in range(nph)]) * dtv_f_i
        row_j = dsum([ppu.mass[l] / ctx.b_j[l] for l in range(nph)]) * (-dtv_f_j)
        bld.face(0, row_i, fi, fi, fj)
        bld.face(0, row_j, fj, fi, fj)
        for w in wells:
            c = np.array([w.cell])
            if w.kind == "producer":
                q = dsum(_producer_terms(disc, w, pd, lam)) * dtv[c]
            else:
                q = (-dtv[c] * w.rate) / b[w.phase][c]
            bld.cell(0, q, c)
        eq0 = 1

    if mode in ("transport", "fi"):
        if mode == "fi":
            uT = total_velocity(ctx)
        hu = phase_flux_hu(ctx, uT)
        for l in range(nph - 1):
            eq = eq0 + l
            acc = phi * b[l] * s_full[l] - phi_n * b_n[l] * old.s[:, l]
            bld.cell(eq, acc)
            bld.face(eq, hu.mass[l] * dtv_f_i, fi, fi, fj)
            bld.face(eq, hu.mass[l] * (-dtv_f_j), fj, fi, fj)
        for w in wells:
            c = np.array([w.cell])
            if w.kind == "producer":
                q = _producer_terms(disc, w, pd, lam)
                for l in range(nph - 1):
                    bld.cell(eq0 + l, b[l][c] * q[l] * dtv[c], c)
            elif w.phase < nph - 1:
                bld.cell(eq0 + w.phase, Dual.const(-dtv[c] * w.rate, nv), c)

    return bld.build(_row_scale(disc, neq, pressure_rows))


def assemble_pressure(disc, p, s_frozen, old: SimState, dt, wells=()):
    """Pressure-equation residual at trial ``p`` with mobilities frozen at ``s_frozen``."""
    return _assemble(disc, p, np.asarray(s_frozen), old, dt, wells, "pressure")


def assemble_transport(disc, s, old: SimState, p_fixed, uT_fixed, dt, wells=()):
    """Transport residual for the first n_p - 1 phases with p and u_T frozen."""
    uT = np.asarray(uT_fixed, dtype=float)
    return _assemble(disc, np.asarray(p_fixed), np.asarray(s), old, dt, wells, "transport",
                     uT=Dual.const(uT, 2 * disc.n_phases))


def assemble_fi(disc, state: SimState, old: SimState, dt, wells=()):
    """Coupled residual whose root is the converged SFI fixed point."""
    return _assemble(disc, state.p, state.s, old, dt, wells, "fi")


def compute_total_velocity(disc, p, s):
    nph = disc.n_phases
    pd, s_prim, _ = _variables(disc, p, s)
    _, b, rho, lam, _ = _cell_props(disc, pd, s_prim)
    return total_velocity(face_context(disc.grid, pd, b, rho, lam, disc.gravity)).val


def phase_mass_residuals(disc, state, old, dt, wells=(), scheme="hu"):
    """Per-phase conservation residuals (all phases) using HU or PPU fluxes; values only."""
    grid, model = disc.grid, disc.model
    nph = disc.n_phases
    pd, s_prim, _ = _variables(disc, state.p, state.s)
    phi, b, rho, lam, s_full = _cell_props(disc, pd, s_prim)
    phi_n, b_n = _old_props(disc, old)
    ctx = face_context(grid, pd, b, rho, lam, disc.gravity)
    fl = phase_flux_hu(ctx, total_velocity(ctx)) if scheme == "hu" else phase_flux_ppu(ctx)
    dtv = dt / grid.volume
    out = np.zeros((disc.n_cells, nph))
    for l in range(nph):
        out[:, l] = (phi * b[l] * s_full[l]).val - phi_n * b_n[l] * old.s[:, l]
        m = fl.mass[l].val
        out[:, l] += np.bincount(grid.face_i, m * dtv[grid.face_i], minlength=disc.n_cells)
        out[:, l] -= np.bincount(grid.face_j, m * dtv[grid.face_j], minlength=disc.n_cells)
    for w in wells:
        c = np.array([w.cell])
        if w.kind == "producer":
            q = _producer_terms(disc, w, pd, lam)
            for l in range(nph):
                out[w.cell, l] += (b[l][c] * q[l]).val[0] * dtv[w.cell]
        else:
            out[w.cell, w.phase] -= dtv[w.cell] * w.rate
    return out


def mass_imbalance(disc, state, old, dt, wells=()):
    """Global per-phase surface-volume imbalance: change in storage minus net well inflow."""
    grid, model = disc.grid, disc.model
    V = grid.volume
    phi1, _ = rf.porosity(model, state.p)
    phi0, _ = rf.porosity(model, old.p)
    out = np.zeros(disc.n_phases)
    lam, _ = rf.mobility(model, state.s)
    for l, ph in enumerate(model.phases):
        b1, _ = rf.b_of_p(ph, state.p, model.p_ref)
        b0, _ = rf.b_of_p(ph, old.p, model.p_ref)
        out[l] = np.sum(V * (phi1 * b1 * state.s[:, l] - phi0 * b0 * old.s[:, l]))
        for w in wells:
            if w.kind == "producer":
                out[l] += dt * b1[w.cell] * w.wi * lam[w.cell, l] * max(state.p[w.cell] - w.bhp, 0.0)
            elif w.phase == l:
                out[l] -= dt * w.rate
    return out
