"""Structured 2D (x-z) cell-centred grid with TPFA transmissibilities.

Cells are numbered row-major, ``c = k * nx + i`` with ``k`` the vertical
index counted from the top.  Depth increases downward.  All external
boundaries are no-flow.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, IngestionError
from .units import MD


@dataclass(frozen=True, eq=False)
class PermeabilityField:
    perm: np.ndarray  # m^2
    poro: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=float).ravel()
        poro = np.broadcast_to(np.asarray(self.poro, dtype=float), perm.shape).copy()
        if np.any(perm <= 0):
            raise ConfigurationError("permeability must be positive")
        if np.any((poro <= 0) | (poro >= 1)):
            raise ConfigurationError("porosity must lie in (0, 1)")
        perm.setflags(write=False)
        poro.setflags(write=False)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "poro", poro)

    @classmethod
    def uniform(cls, n, perm, poro):
        return cls(np.full(n, float(perm)), np.full(n, float(poro)))

    def __len__(self):
        return self.perm.size


@dataclass(frozen=True, eq=False)
class StructuredGrid:
    nx: int
    nz: int
    dx: float
    dy: float
    dz: float
    perm: np.ndarray
    poro: np.ndarray
    depth: np.ndarray
    face_i: np.ndarray
    face_j: np.ndarray
    trans: np.ndarray
    dh: np.ndarray  # h_j - h_i per face
    vertical: np.ndarray = field(repr=False)

    @property
    def n_cells(self):
        return self.nx * self.nz

    @property
    def n_faces(self):
        return self.face_i.size

    @property
    def cell_volume(self):
        return self.dx * self.dy * self.dz

    @property
    def volume(self):
        return np.full(self.n_cells, self.cell_volume)

    def cell_index(self, i, k):
        if not (0 <= i < self.nx and 0 <= k < self.nz):
            raise ConfigurationError(f"cell ({i}, {k}) outside {self.nx}x{self.nz} grid")
        return k * self.nx + i

    def pore_volume(self):
        return self.poro * self.cell_volume


def _half_trans(perm, area, length):
    return perm * area / (0.5 * length)


def build_cartesian_grid(nx, nz, dx, dy, dz, perm: PermeabilityField, top_depth=0.0):
    if nx < 1 or nz < 1:
        raise ConfigurationError("nx and nz must be >= 1")
    if min(dx, dy, dz) <= 0:
        raise ConfigurationError("cell dimensions must be positive")
    if len(perm) != nx * nz:
        raise ConfigurationError(
            f"permeability field has {len(perm)} values, grid has {nx * nz} cells"
        )
    idx = np.arange(nx * nz).reshape(nz, nx)
    depth = top_depth + (np.arange(nz) + 0.5) * dz
    depth = np.repeat(depth, nx)

    hi, hj = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    vi, vj = idx[:-1, :].ravel(), idx[1:, :].ravel()
    face_i = np.concatenate([hi, vi])
    face_j = np.concatenate([hj, vj])
    K = perm.perm
    th_i = _half_trans(K[hi], dy * dz, dx)
    th_j = _half_trans(K[hj], dy * dz, dx)
    tv_i = _half_trans(K[vi], dx * dy, dz)
    tv_j = _half_trans(K[vj], dx * dy, dz)
    trans = np.concatenate([th_i * th_j / (th_i + th_j), tv_i * tv_j / (tv_i + tv_j)])
    vertical = np.concatenate([np.zeros(hi.size, bool), np.ones(vi.size, bool)])
    dh = depth[face_j] - depth[face_i]
    for a in (depth, face_i, face_j, trans, dh, vertical):
        a.setflags(write=False)
    return StructuredGrid(
        nx=int(nx), nz=int(nz), dx=float(dx), dy=float(dy), dz=float(dz),
        perm=perm.perm, poro=perm.poro, depth=depth,
        face_i=face_i, face_j=face_j, trans=trans, dh=dh, vertical=vertical,
    )


_SPLIT = re.compile(r"[,\s]+")


def load_values_csv(path, n, what="value"):
    """Read ``n`` positive numbers (comma- or whitespace-separated, row-major)."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"{path}: file not found")
    values = []
    for row, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for col, tok in enumerate((t for t in _SPLIT.split(line) if t), start=1):
            try:
                v = float(tok)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {row}, column {col}: non-numeric {what} {tok!r}"
                ) from None
            if not np.isfinite(v) or v <= 0:
                raise IngestionError(
                    f"{path}: row {row}, column {col}: {what} must be positive, got {tok!r}"
                )
            values.append(v)
    if len(values) != n:
        raise IngestionError(f"{path}: expected {n} values, found {len(values)}")
    return np.array(values)


def load_permeability_csv(path, nx, nz, poro=0.1, poro_path=None):
    """Permeability in mD, converted to m^2.  Porosity is uniform unless a file is given."""
    n = nx * nz
    perm = load_values_csv(path, n, "permeability") * MD
    if poro_path is not None:
        phi = load_values_csv(poro_path, n, "porosity")
        if np.any(phi >= 1):
            raise IngestionError(f"{poro_path}: porosity must be < 1")
    else:
        phi = np.full(n, float(poro))
    return PermeabilityField(perm, phi)


def lognormal_field(n, seed, mean_md=100.0, sigma_log10=1.0, poro_mean=0.1):
    """Seeded log-normal permeability with loosely correlated porosity."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    perm_md = mean_md * 10.0 ** (sigma_log10 * z)
    poro = np.clip(poro_mean * (perm_md / mean_md) ** 0.1, 0.02, 0.35)
    return PermeabilityField(perm_md * MD, poro)
