"""Rock and fluid properties with analytic derivatives.

Every evaluator returns ``(value, derivative)``.  Saturation arrays have
shape ``(n, n_phases)``; relperm derivatives are ``d kr[:, l] / d s[:, m]``
with all saturations treated as independent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SaturationDomainError

SAT_TOL = 1e-10


@dataclass(frozen=True)
class PhaseProps:
    name: str
    viscosity: float  # Pa s
    surface_density: float  # kg/m^3
    compressibility: float = 0.0  # 1/Pa
    b_ref: float = 1.0
    n: float = 2.0

    def __post_init__(self):
        if self.b_ref <= 0 or self.viscosity <= 0 or self.surface_density <= 0:
            raise ConfigurationError(f"phase {self.name}: b_ref, viscosity, density must be > 0")
        if self.compressibility < 0 or self.n <= 0:
            raise ConfigurationError(f"phase {self.name}: bad compressibility or exponent")


@dataclass(frozen=True, eq=False)
class RockFluidModel:
    phases: tuple
    rock_compressibility: float
    p_ref: float
    poro_ref: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not 2 <= len(self.phases) <= 3:
            raise ConfigurationError("two or three phases required")
        if self.rock_compressibility < 0:
            raise ConfigurationError("rock compressibility must be >= 0")
        object.__setattr__(self, "poro_ref", np.asarray(self.poro_ref, dtype=float))

    @property
    def n_phases(self):
        return len(self.phases)

    @property
    def names(self):
        return [ph.name for ph in self.phases]

    def phase_index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigurationError(f"unknown phase {name!r}; have {self.names}") from None


def b_of_p(phase: PhaseProps, p, p_ref):
    b = phase.b_ref * np.exp((np.asarray(p, dtype=float) - p_ref) * phase.compressibility)
    return b, phase.compressibility * b


def density(phase: PhaseProps, p, p_ref):
    b, db = b_of_p(phase, p, p_ref)
    return b * phase.surface_density, db * phase.surface_density


def porosity(model: RockFluidModel, p, cells=slice(None)):
    phi = model.poro_ref[cells] * np.exp(
        (np.asarray(p, dtype=float) - model.p_ref) * model.rock_compressibility
    )
    return phi, model.rock_compressibility * phi


def _check_saturation(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < -SAT_TOL) or np.any(s > 1 + SAT_TOL):
        bad = s[(s < -SAT_TOL) | (s > 1 + SAT_TOL)]
        raise SaturationDomainError(f"saturation outside [0, 1]: {bad[:5]}")
    return np.clip(s, 0.0, 1.0)


def _power(s, n):
    kr = s**n
    dkr = n * s ** (n - 1) if n != 1 else np.ones_like(s)
    return kr, dkr


def baker(sw, sg, krow, dkrow, krog, dkrog):
    """Saturation-weighted oil relperm; returns value and d/d(sw, so, sg).

    ``dkrow``/``dkrog`` are derivatives with respect to oil saturation.
    When ``sw + sg`` vanishes the two-phase curves are averaged.
    """
    den = sw + sg
    small = den <= 1e-14
    safe = np.where(small, 1.0, den)
    kro = np.where(small, 0.5 * (krow + krog), (sw * krow + sg * krog) / safe)
    d_sw = np.where(small, 0.0, sg * (krow - krog) / safe**2)
    d_sg = np.where(small, 0.0, sw * (krog - krow) / safe**2)
    d_so = np.where(small, 0.5 * (dkrow + dkrog), (sw * dkrow + sg * dkrog) / safe)
    return kro, d_sw, d_so, d_sg


def relperm(model: RockFluidModel, s):
    s = np.atleast_2d(_check_saturation(s))
    n, np_ = s.shape
    if np_ != model.n_phases:
        raise ConfigurationError(f"expected {model.n_phases} saturations per cell, got {np_}")
    kr = np.zeros_like(s)
    dkr = np.zeros((n, np_, np_))
    if np_ == 2:
        for l, ph in enumerate(model.phases):
            kr[:, l], dkr[:, l, l] = _power(s[:, l], ph.n)
        return kr, dkr
    # water, oil, gas
    w, o, g = 0, 1, 2
    kr[:, w], dkr[:, w, w] = _power(s[:, w], model.phases[w].n)
    kr[:, g], dkr[:, g, g] = _power(s[:, g], model.phases[g].n)
    krow, dkrow = _power(s[:, o], model.phases[o].n)
    kr[:, o], dkr[:, o, w], dkr[:, o, o], dkr[:, o, g] = baker(
        s[:, w], s[:, g], krow, dkrow, krow, dkrow
    )
    return kr, dkr


def mobility(model: RockFluidModel, s):
    """Phase mobilities kr/mu, shape (n, n_phases), with d/ds (n, n_phases, n_phases)."""
    kr, dkr = relperm(model, s)
    mu = np.array([ph.viscosity for ph in model.phases])
    return kr / mu, dkr / mu[None, :, None]
