"""Case definitions: JSON-style configs in field units, converted to SI on build.

Heterogeneous cases draw a seeded log-normal permeability field.  Cases
built on the bottom SPE10 layer expect a user-supplied permeability file
(60 x 220 values in mD, row-major from the top row); without one they run
on the homogeneous Table-style 100 mD field.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import units as u
from .assembly import Discretization, SimState
from .errors import ConfigurationError
from .grid import PermeabilityField, build_cartesian_grid, load_permeability_csv, lognormal_field
from .qn import QnConfig
from .rockfluid import PhaseProps, RockFluidModel
from .sfi import OuterConfig
from .wells import Well, well_index

_BASE_GRID = {"nx": 60, "nz": 60, "lx_ft": 600.0, "ly_ft": 10.0, "lz_ft": 600.0}
_BASE_ROCK = {"perm_md": 100.0, "porosity": 0.1, "compressibility_per_psi": 1e-6}
_WATER = {"name": "water", "viscosity_cp": 1.0, "density_kg_m3": 1000.0,
          "compressibility_per_psi": 0.0, "n": 2}
_OIL = {"name": "oil", "viscosity_cp": 4.0, "density_kg_m3": 500.0,
        "compressibility_per_psi": 6.9e-6, "n": 2}
_GAS = {"name": "gas", "viscosity_cp": 0.25, "density_kg_m3": 100.0,
        "compressibility_per_psi": 6.9e-5, "n": 3}
_CONTROL = {"dtmax_days": 50.0, "t_end_days": 400.0, "max_outer": 30, "outer_tol": 0.001,
            "gravity": True}
_SPE10_GRID = {"nx": 60, "nz": 220, "lx_ft": 600.0, "ly_ft": 10.0, "lz_ft": 2200.0}


def _five_spot(rate_ft3, phase="water", schedule=None):
    inj = {"name": "INJ", "kind": "injector", "x": 0.5, "z": 0.5,
           "rate_ft3_per_day": rate_ft3, "phase": phase}
    if schedule:
        inj["schedule"] = schedule
    prods = [{"name": f"P{k + 1}", "kind": "producer", "x": x, "z": z, "bhp_psi": 500.0}
             for k, (x, z) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)])]
    return [inj] + prods


def _with(phase, **kw):
    return {**phase, **kw}


def _wag_schedule(interval, t_end):
    out, t, k = [], 0.0, 0
    while t < t_end:
        out.append([t, min(t + interval, t_end), "water" if k % 2 == 0 else "gas"])
        t += interval
        k += 1
    return out


REGISTRY = {
    "lock_exchange": {
        "grid": _BASE_GRID, "rock": _BASE_ROCK, "phases": [_WATER, _OIL],
        "initial": {"pressure_psi": 2000.0, "layout": "split",
                    "left": {"oil": 1.0}, "right": {"water": 1.0}},
        "wells": [], "control": _CONTROL,
    },
    "lock_exchange_hetero": {
        "grid": _BASE_GRID, "rock": {**_BASE_ROCK, "heterogeneous": True, "seed": 1},
        "phases": [_WATER, _with(_OIL, density_kg_m3=800.0)],
        "initial": {"pressure_psi": 2000.0, "layout": "split",
                    "left": {"oil": 1.0}, "right": {"water": 1.0}},
        "wells": [], "control": {**_CONTROL, "dtmax_days": 20.0, "t_end_days": 200.0},
    },
    "grav_segregation": {
        "grid": _BASE_GRID, "rock": {**_BASE_ROCK, "heterogeneous": True, "seed": 2},
        "phases": [_WATER, _with(_OIL, density_kg_m3=800.0)],
        "initial": {"pressure_psi": 2000.0, "layout": "layered",
                    "top": {"water": 1.0}, "bottom": {"oil": 1.0}},
        "wells": [], "control": {**_CONTROL, "dtmax_days": 20.0, "t_end_days": 200.0},
    },
    "quarter_five_spot": {
        "grid": _SPE10_GRID, "rock": _BASE_ROCK, "phases": [_WATER, _OIL],
        "initial": {"pressure_psi": 2000.0, "layout": "uniform",
                    "saturation": {"water": 0.01, "oil": 0.99}},
        "wells": _five_spot(664.0),
        "control": {**_CONTROL, "dtmax_days": 20.0, "t_end_days": 200.0},
    },
    "water_into_oil": {
        "grid": _SPE10_GRID, "rock": _BASE_ROCK, "phases": [_WATER, _OIL],
        "initial": {"pressure_psi": 2000.0, "layout": "uniform",
                    "saturation": {"water": 0.01, "oil": 0.99}},
        "wells": _five_spot(1328.0),
        "control": {**_CONTROL, "dtmax_days": 20.0, "t_end_days": 200.0, "gravity": False},
    },
    "water_into_gas": {
        "grid": _SPE10_GRID, "rock": _BASE_ROCK,
        "phases": [_with(_WATER, n=3), _GAS],
        "initial": {"pressure_psi": 2000.0, "layout": "uniform",
                    "saturation": {"water": 0.1, "gas": 0.9}},
        "wells": _five_spot(1328.0),
        "control": {**_CONTROL, "dtmax_days": 20.0, "t_end_days": 200.0, "gravity": False},
    },
    "wag_3phase": {
        "grid": _SPE10_GRID, "rock": _BASE_ROCK,
        "phases": [_with(_WATER, n=3), _with(_OIL, viscosity_cp=1.0, n=3), _GAS],
        "initial": {"pressure_psi": 2000.0, "layout": "uniform",
                    "saturation": {"water": 0.1, "oil": 0.9, "gas": 0.0}},
        "wells": _five_spot(1328.0, schedule=_wag_schedule(20.0, 400.0)),
        "control": {**_CONTROL, "dtmax_days": 20.0, "t_end_days": 400.0, "gravity": False},
    },
    "water_inject_3phase": {
        "grid": _SPE10_GRID, "rock": _BASE_ROCK,
        "phases": [_with(_WATER, n=3), _with(_OIL, n=3), _GAS],
        "initial": {"pressure_psi": 2000.0, "layout": "uniform",
                    "saturation": {"water": 0.1, "oil": 0.2, "gas": 0.7}},
        "wells": _five_spot(2656.0),
        "control": {**_CONTROL, "dtmax_days": 20.0, "t_end_days": 200.0, "gravity": False},
    },
}


@dataclass(eq=False)
class CaseSpec:
    name: str
    nx: int
    nz: int
    lx: float
    ly: float
    lz: float
    perm: float  # m^2, homogeneous value
    porosity: float
    rock_compressibility: float
    phases: tuple
    p_init: float
    initial: dict
    wells: list  # dicts with SI values and relative (x, z) positions
    dtmax: float
    t_end: float
    gravity: bool = True
    heterogeneous: bool = False
    seed: int = 0
    perm_file: str | None = None
    poro_file: str | None = None
    outer: OuterConfig = field(default_factory=OuterConfig)
    qn: QnConfig = field(default_factory=QnConfig)

    def scaled(self, factor):
        """Coarsen the grid and dtmax by ``factor`` (domain size is kept)."""
        if factor <= 0:
            raise ConfigurationError("scale factor must be positive")
        if factor != 1 and self.perm_file:
            raise ConfigurationError("cases with a permeability file cannot be rescaled")
        return replace(self, nx=max(1, int(round(self.nx * factor))),
                       nz=max(1, int(round(self.nz * factor))), dtmax=self.dtmax * factor)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def build(self):
        """Return (Discretization, initial SimState, wells, p_scale)."""
        n = self.nx * self.nz
        if self.perm_file:
            field_ = load_permeability_csv(self.perm_file, self.nx, self.nz, self.porosity,
                                           self.poro_file)
        elif self.heterogeneous:
            field_ = lognormal_field(n, self.seed, self.perm / u.MD, 1.0, self.porosity)
        else:
            field_ = PermeabilityField.uniform(n, self.perm, self.porosity)
        grid = build_cartesian_grid(self.nx, self.nz, self.lx / self.nx, self.ly,
                                    self.lz / self.nz, field_)
        model = RockFluidModel(self.phases, self.rock_compressibility, self.p_init, grid.poro)
        disc = Discretization(grid, model, u.GRAVITY if self.gravity else 0.0)
        state = SimState(np.full(n, self.p_init), self._initial_saturation(model))
        wells = [self._well(grid, model, w) for w in self.wells]
        return disc, state, wells, self.p_init

    def _sat_row(self, model, d):
        row = np.zeros(model.n_phases)
        for name, v in d.items():
            row[model.phase_index(name)] = v
        if abs(row.sum() - 1) > 1e-10 or np.any(row < 0):
            raise ConfigurationError(f"initial saturations {d} must be non-negative and sum to 1")
        return row

    def _initial_saturation(self, model):
        n = self.nx * self.nz
        ini = self.initial
        layout = ini.get("layout", "uniform")
        ii = np.tile(np.arange(self.nx), self.nz)
        kk = np.repeat(np.arange(self.nz), self.nx)
        if layout == "uniform":
            return np.tile(self._sat_row(model, ini["saturation"]), (n, 1))
        if layout == "split":
            left = ii < self.nx / 2
            return np.where(left[:, None], self._sat_row(model, ini["left"]),
                            self._sat_row(model, ini["right"]))
        if layout == "layered":
            top = kk < self.nz / 2
            return np.where(top[:, None], self._sat_row(model, ini["top"]),
                            self._sat_row(model, ini["bottom"]))
        raise ConfigurationError(f"unknown initial layout {layout!r}")

    def _well(self, grid, model, w):
        i = min(int(w["x"] * self.nx), self.nx - 1)
        k = min(int(w["z"] * self.nz), self.nz - 1)
        cell = grid.cell_index(i, k)
        sched = tuple((t0, t1, model.phase_index(ph)) for t0, t1, ph in w.get("schedule", ()))
        if w["kind"] == "injector":
            return Well(w["name"], "injector", cell, rate=w["rate"],
                        phase=model.phase_index(w["phase"]), schedule=sched)
        return Well(w["name"], "producer", cell, bhp=w["bhp"], wi=well_index(grid, cell))


def case_from_config(cfg, name=None):
    cfg = copy.deepcopy(cfg)
    try:
        g, rock, ctl, ini = cfg["grid"], cfg["rock"], cfg["control"], cfg["initial"]
        phases = tuple(
            PhaseProps(ph["name"], u.cp(ph["viscosity_cp"]), ph["density_kg_m3"],
                       u.per_psi(ph.get("compressibility_per_psi", 0.0)), 1.0, ph.get("n", 2))
            for ph in cfg["phases"])
        wells = []
        for w in cfg.get("wells", []):
            w2 = {k: w[k] for k in ("name", "kind", "x", "z")}
            if w["kind"] == "injector":
                w2["rate"] = u.ft3_per_day(w["rate_ft3_per_day"])
                w2["phase"] = w["phase"]
                if "schedule" in w:
                    w2["schedule"] = [(u.days(a), u.days(b), ph) for a, b, ph in w["schedule"]]
            else:
                w2["bhp"] = u.psi(w["bhp_psi"])
            wells.append(w2)
        tol = ctl.get("outer_tol", 1e-3)
        outer = OuterConfig(eps_p_out=tol, eps_t_out=tol, max_outer=ctl.get("max_outer", 30),
                            eps_final=ctl.get("eps_final", 1e-5))
        qn_cfg = cfg.get("qn", {})
        qn = QnConfig(**qn_cfg) if qn_cfg else QnConfig()
        return CaseSpec(
            name=name or cfg.get("name", "custom"),
            nx=int(g["nx"]), nz=int(g["nz"]),
            lx=u.ft(g["lx_ft"]), ly=u.ft(g["ly_ft"]), lz=u.ft(g["lz_ft"]),
            perm=u.md(rock.get("perm_md", 100.0)), porosity=rock.get("porosity", 0.1),
            rock_compressibility=u.per_psi(rock.get("compressibility_per_psi", 0.0)),
            phases=phases, p_init=u.psi(ini["pressure_psi"]),
            initial={k: v for k, v in ini.items() if k != "pressure_psi"},
            wells=wells, dtmax=u.days(ctl["dtmax_days"]), t_end=u.days(ctl["t_end_days"]),
            gravity=bool(ctl.get("gravity", True)),
            heterogeneous=bool(rock.get("heterogeneous", False)), seed=int(rock.get("seed", 0)),
            perm_file=rock.get("perm_file"), poro_file=rock.get("poro_file"),
            outer=outer, qn=qn,
        )
    except KeyError as exc:
        raise ConfigurationError(f"case config missing key {exc}") from None


def case_to_config(case: CaseSpec):
    """Inverse of case_from_config (field units)."""
    wells = []
    for w in case.wells:
        d = {k: w[k] for k in ("name", "kind", "x", "z")}
        if w["kind"] == "injector":
            d["rate_ft3_per_day"] = w["rate"] / u.ft3_per_day(1.0)
            d["phase"] = w["phase"]
            if w.get("schedule"):
                d["schedule"] = [[a / u.DAY, b / u.DAY, ph] for a, b, ph in w["schedule"]]
        else:
            d["bhp_psi"] = w["bhp"] / u.PSI
        wells.append(d)
    rock = {"perm_md": case.perm / u.MD, "porosity": case.porosity,
            "compressibility_per_psi": case.rock_compressibility * u.PSI,
            "heterogeneous": case.heterogeneous, "seed": case.seed}
    if case.perm_file:
        rock["perm_file"] = case.perm_file
    if case.poro_file:
        rock["poro_file"] = case.poro_file
    return {
        "name": case.name,
        "grid": {"nx": case.nx, "nz": case.nz, "lx_ft": case.lx / u.FT,
                 "ly_ft": case.ly / u.FT, "lz_ft": case.lz / u.FT},
        "rock": rock,
        "phases": [{"name": ph.name, "viscosity_cp": ph.viscosity / u.CP,
                    "density_kg_m3": ph.surface_density,
                    "compressibility_per_psi": ph.compressibility * u.PSI, "n": ph.n}
                   for ph in case.phases],
        "initial": {"pressure_psi": case.p_init / u.PSI, **case.initial},
        "wells": wells,
        "control": {"dtmax_days": case.dtmax / u.DAY, "t_end_days": case.t_end / u.DAY,
                    "max_outer": case.outer.max_outer, "outer_tol": case.outer.eps_t_out,
                    "eps_final": case.outer.eps_final, "gravity": case.gravity},
        "qn": {"enabled": case.qn.enabled, "m": case.qn.m, "omega": case.qn.omega,
               "omega0": case.qn.omega0, "drop_tol": case.qn.drop_tol},
    }


def builtin_case(name, scale=1.0):
    if name not in REGISTRY:
        raise ConfigurationError(f"unknown case {name!r}; available: {', '.join(sorted(REGISTRY))}")
    case = case_from_config(REGISTRY[name], name=name)
    return case.scaled(scale) if scale != 1 else case


def load_case_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"{path}: config file not found")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    return case_from_config(cfg)
