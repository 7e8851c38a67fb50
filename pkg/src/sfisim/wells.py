"""Point wells: fixed-rate injectors and BHP-controlled producers."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigurationError

WELL_RADIUS = 0.1  # m


@dataclass(frozen=True)
class Well:
    name: str
    kind: str  # "injector" | "producer"
    cell: int
    rate: float = 0.0  # surface m^3/s, injectors
    bhp: float = 0.0  # Pa, producers
    phase: int = 0  # injected phase
    wi: float = 0.0  # m^3, producers
    schedule: tuple = ()  # ((t_start, t_end, phase), ...) for alternating injection

    def __post_init__(self):
        if self.kind not in ("injector", "producer"):
            raise ConfigurationError(f"well {self.name}: unknown kind {self.kind!r}")
        if self.kind == "injector" and self.rate < 0:
            raise ConfigurationError(f"well {self.name}: injection rate must be >= 0")

    def at(self, t):
        """Well with the scheduled injected phase active at time ``t``."""
        for t0, t1, phase in self.schedule:
            if t0 <= t < t1:
                return replace(self, phase=phase, schedule=())
        return replace(self, schedule=())


def well_index(grid, cell, rw=WELL_RADIUS):
    """Peaceman index for a well normal to the x-z plane: 2 pi K dy / ln(re / rw), re = 0.2 dx."""
    re = 0.2 * grid.dx
    if re <= rw:
        raise ConfigurationError(f"equivalent radius {re:.3g} m <= well radius {rw} m; grid too fine")
    return 2.0 * math.pi * grid.perm[cell] * grid.dy / math.log(re / rw)


def schedule_breaks(wells):
    return sorted({t for w in wells for (t0, t1, _) in w.schedule for t in (t0, t1)})


def active_wells(wells, t):
    return [w.at(t) for w in wells]
