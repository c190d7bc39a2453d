"""Billiard tables: periodic planes, tubes and hard-wall tubes."""

import itertools
import math
from dataclasses import dataclass, field

from ..errors import ValidationError

PLANE = "plane"
TUBE = "tube"


@dataclass(frozen=True)
class Scatterer:
    center: tuple
    radius: float


@dataclass(frozen=True)
class LorentzConfig:
    """Scatterer geometry and numerical tolerances.

    ``plane``: disks repeated over the lattice spanned by ``basis``; the cell
    index lives in Z^2. ``tube``: disks repeated with period ``period`` along
    x and wrapped on a circle of circumference ``width`` along y; the cell
    index lives in Z. With ``walls=True`` the tube is instead bounded by flat
    mirrors at y = 0 and y = width. ``horizon_cells`` bounds the free-flight
    search (in lattice cells).
    """

    geometry: str
    scatterers: tuple
    basis: tuple = ((1.0, 0.0), (0.0, 1.0))
    width: float = 1.0
    period: float = 1.0
    walls: bool = False
    horizon_cells: int = 4
    eps_tangent: float = 1e-12
    eps_reversal: float = 1e-6
    name: str = "custom"
    _derived: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        scat = tuple(s if isinstance(s, Scatterer) else Scatterer(tuple(map(float, s[0])), float(s[1]))
                     for s in self.scatterers)
        object.__setattr__(self, "scatterers", scat)
        object.__setattr__(self, "basis", tuple(tuple(map(float, b)) for b in self.basis))
        issues = config_issues(self)
        if issues:
            raise ValidationError("; ".join(issues))
        object.__setattr__(self, "_derived", _derive(self))

    @property
    def cell_dim(self) -> int:
        return 2 if self.geometry == PLANE else 1

    @property
    def translations(self):
        """Lattice generators of the unfolded table (tube: y period is the torus)."""
        if self.geometry == PLANE:
            return self.basis
        return ((self.period, 0.0), (0.0, 2 * self.width if self.walls else self.width))

    def to_dict(self) -> dict:
        return {"geometry": self.geometry, "name": self.name,
                "scatterers": [{"center": list(s.center), "radius": s.radius} for s in self.scatterers],
                "basis": [list(b) for b in self.basis], "width": self.width, "period": self.period,
                "walls": self.walls, "horizon_cells": self.horizon_cells,
                "eps_tangent": self.eps_tangent, "eps_reversal": self.eps_reversal}


def config_issues(cfg: LorentzConfig) -> list:
    issues = []
    if cfg.geometry not in (PLANE, TUBE):
        return [f"geometry must be '{PLANE}' or '{TUBE}'"]
    if not cfg.scatterers:
        issues.append("at least one scatterer is required")
    if cfg.walls and cfg.geometry != TUBE:
        issues.append("walls are only supported for tubes")
    if cfg.horizon_cells < 1:
        issues.append("horizon_cells must be >= 1")
    (a, b), (c, d) = cfg.basis if cfg.geometry == PLANE else ((cfg.period, 0.0), (0.0, cfg.width))
    if abs(a * d - b * c) < 1e-12:
        issues.append("lattice basis is degenerate")
        return issues
    for k, s in enumerate(cfg.scatterers):
        if not s.radius > 0:
            issues.append(f"scatterer {k}: radius must be positive")
        if cfg.geometry == TUBE and not cfg.walls and 2 * s.radius >= cfg.width:
            issues.append(f"scatterer {k}: does not fit within the torus width")
        if cfg.walls and not (s.radius < s.center[1] < cfg.width - s.radius):
            issues.append(f"scatterer {k}: touches a wall")
    if issues:
        return issues
    gen = cfg.basis if cfg.geometry == PLANE else ((cfg.period, 0.0), (0.0, cfg.width))
    H = cfg.horizon_cells
    for (i, s), (j, t) in itertools.combinations_with_replacement(enumerate(cfg.scatterers), 2):
        for o1, o2 in itertools.product(range(-H, H + 1), repeat=2):
            if i == j and o1 == o2 == 0:
                continue
            if cfg.walls and o2 != 0:
                continue
            x = t.center[0] + o1 * gen[0][0] + o2 * gen[1][0] - s.center[0]
            y = t.center[1] + o1 * gen[0][1] + o2 * gen[1][1] - s.center[1]
            if math.hypot(x, y) <= s.radius + t.radius:
                issues.append(f"scatterers {i} and {j} overlap (copy offset {(o1, o2)})")
    return issues


def _derive(cfg: LorentzConfig) -> dict:
    """Unfolded disk list, candidate lattice offsets and the safe search radius."""
    disks = [(s.center[0], s.center[1], s.radius, k, False) for k, s in enumerate(cfg.scatterers)]
    if cfg.walls:
        disks += [(s.center[0], -s.center[1], s.radius, k, True) for k, s in enumerate(cfg.scatterers)]
    (a, b), (c, d) = cfg.translations
    det = abs(a * d - b * c)
    heights = (det / math.hypot(c, d), det / math.hypot(a, b))
    H = cfg.horizon_cells
    reach = H * min(heights)
    offsets = sorted(((o1, o2) for o1, o2 in itertools.product(range(-H, H + 1), repeat=2)
                      if math.hypot(o1 * a + o2 * c, o1 * b + o2 * d) <= reach),
                     key=lambda o: (abs(o[0]) + abs(o[1]), o))
    r0 = max(math.hypot(x, y) + r for x, y, r, _, _ in disks)
    safe = reach - 2 * r0
    if safe <= 0:
        raise ValidationError("horizon_cells too small for the scatterer layout")
    return {"disks": disks, "offsets": offsets, "safe_flight": safe}


# --------------------------------------------------------------- presets

def finite_horizon_square() -> LorentzConfig:
    """Unit square lattice; r=0.4 at the corners plus r=0.2 at the center.

    The big disks close every corridor except the axis-parallel ones, which
    the small disk closes.
    """
    return LorentzConfig(PLANE, (((0.0, 0.0), 0.4), ((0.5, 0.5), 0.2)), name="finite-horizon-square")


def infinite_horizon_square(radius: float = 0.3) -> LorentzConfig:
    return LorentzConfig(PLANE, (((0.0, 0.0), radius),), name="infinite-horizon-square")


def finite_horizon_tube() -> LorentzConfig:
    """Tube of circumference 1 with the same two disks per period."""
    return LorentzConfig(TUBE, (((0.0, 0.0), 0.4), ((0.5, 0.5), 0.2)), width=1.0,
                         name="finite-horizon-tube")


def hard_wall_tube() -> LorentzConfig:
    """Strip 0 <= y <= 1 between flat mirrors, one r=0.4 disk per unit period.

    The gaps between disks and walls are open corridors (no disk may touch a
    wall), so the horizon is infinite; a 16-cell search keeps escapes near
    one per thousand collisions.
    """
    return LorentzConfig(TUBE, (((0.0, 0.5), 0.4),), width=1.0, walls=True, horizon_cells=16,
                         name="hard-wall-tube")


PRESETS = {
    "finite-horizon-square": finite_horizon_square,
    "infinite-horizon-square": infinite_horizon_square,
    "finite-horizon-tube": finite_horizon_tube,
    "hard-wall-tube": hard_wall_tube,
}


def preset(name: str) -> LorentzConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
