"""Face fluxes: PPU total velocity and phase fluxes, hybrid-upwind phase fluxes.

Orientation: a positive flux on face ``(i, j)`` leaves cell ``i``.  The phase
potential difference is ``dphi_l = (p_i - p_j) - g_l`` with gravity weight
``g_l = rho_l,ij * g * (h_i - h_j)``; ``rho_l,ij`` is the arithmetic mean of
the two cell densities.  Upwind selectors are frozen in the derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dual import Dual, dsum, to_face, where
from .units import GRAVITY


@dataclass
class FaceFluxContext:
    trans: np.ndarray
    dh: np.ndarray  # h_j - h_i
    p_i: Dual
    p_j: Dual
    grav: list  # per-phase gravity weights g_l (Dual)
    rho: list  # per-phase face densities (Dual)
    lam_i: list
    lam_j: list
    b_i: list
    b_j: list

    @property
    def n_phases(self):
        return len(self.grav)


@dataclass
class FluxResult:
    flux: list  # volumetric F_l, m^3/s
    mass: list  # b_l,ij * F_l, surface m^3/s
    stagnant: np.ndarray = field(default=None)


def face_context(grid, p: Dual, b: list, rho: list, lam: list, gravity=GRAVITY):
    fi, fj = grid.face_i, grid.face_j
    p_i, p_j = to_face(p, fi, fj)
    ctx_b_i, ctx_b_j, ctx_l_i, ctx_l_j, ctx_rho, ctx_g = [], [], [], [], [], []
    for l in range(len(b)):
        bi, bj = to_face(b[l], fi, fj)
        li, lj = to_face(lam[l], fi, fj)
        ri, rj = to_face(rho[l], fi, fj)
        rho_f = 0.5 * (ri + rj)
        ctx_b_i.append(bi)
        ctx_b_j.append(bj)
        ctx_l_i.append(li)
        ctx_l_j.append(lj)
        ctx_rho.append(rho_f)
        ctx_g.append(rho_f * (-gravity * grid.dh))
    return FaceFluxContext(grid.trans, grid.dh, p_i, p_j, ctx_g, ctx_rho,
                           ctx_l_i, ctx_l_j, ctx_b_i, ctx_b_j)


def phase_flux_ppu(ctx: FaceFluxContext):
    dp = ctx.p_i - ctx.p_j
    flux, mass = [], []
    for l in range(ctx.n_phases):
        dphi = dp - ctx.grav[l]
        up = dphi.val >= 0
        F = where(up, ctx.lam_i[l], ctx.lam_j[l]) * dphi * ctx.trans
        flux.append(F)
        mass.append(where(up, ctx.b_i[l], ctx.b_j[l]) * F)
    return FluxResult(flux, mass)


def total_velocity(ctx: FaceFluxContext):
    """u_T as the sum of PPU phase fluxes."""
    return dsum(phase_flux_ppu(ctx).flux)


def _pick(ctx, l, from_i):
    return where(from_i, ctx.lam_i[l], ctx.lam_j[l]), where(from_i, ctx.b_i[l], ctx.b_j[l])


def phase_flux_hu(ctx: FaceFluxContext, uT):
    """Hybrid upwinding: viscous part upwinded by sign(u_T), buoyancy part by density order.

    In each buoyancy pair the denser phase mobility comes from the upper cell
    and the lighter one from the lower cell.  The shared buoyancy denominator
    takes each phase from the upper cell if its density exceeds the mean face
    density, otherwise from the lower cell.
    """
    if not isinstance(uT, Dual):
        uT = Dual.const(np.broadcast_to(uT, ctx.trans.shape), ctx.p_i.k)
    n_ph = ctx.n_phases
    upv = uT.val >= 0
    lam_v, b_v = zip(*[_pick(ctx, l, upv) for l in range(n_ph)])
    lamT = dsum(list(lam_v))
    stagnant = lamT.val <= 0
    flux = [(lam_v[l] * uT).safe_div(lamT, stagnant) for l in range(n_ph)]
    mass = [b_v[l] * flux[l] for l in range(n_ph)]

    upper_i = ctx.dh >= 0
    rho = np.array([r.val for r in ctx.rho])
    rho_mean = rho.mean(axis=0)
    lamG = []
    for k in range(n_ph):
        sel = np.where(rho[k] > rho_mean, upper_i, np.where(rho[k] < rho_mean, ~upper_i, True))
        lamG.append(_pick(ctx, k, sel)[0])
    den = dsum(lamG)
    zero_den = (den.val <= 0) | stagnant
    for l in range(n_ph):
        for m in range(n_ph):
            if m == l:
                continue
            heavy = rho[l] > rho[m]
            tie = rho[l] == rho[m]
            l_from_i = np.where(tie, True, np.where(heavy, upper_i, ~upper_i))
            m_from_i = np.where(tie, True, ~l_from_i)
            lam_l, b_l = _pick(ctx, l, l_from_i)
            lam_m, _ = _pick(ctx, m, m_from_i)
            term = (lam_l * lam_m * (ctx.grav[m] - ctx.grav[l])).safe_div(den, zero_den) * ctx.trans
            flux[l] = flux[l] + term
            mass[l] = mass[l] + b_l * term
    return FluxResult(flux, mass, stagnant)
