"""Scalar billiard map with exact integer cell bookkeeping.

Positions are kept relative to the current cell: a line element stores the
scatterer, the integer cell index and the boundary point in the coordinates
of the fundamental cell. The displacement of one collision is the integer
lattice offset of the disk copy that is hit, so the cell index is never
recovered by rounding a position.

Every function takes an optional ``backend``: ``FLOAT`` (double precision)
or an :class:`MPBackend` (mpmath, arbitrary precision).
"""

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from ..errors import HorizonEscapeError, SingularTrajectoryError, ValidationError
from .config import TUBE, LorentzConfig


class _FloatBackend:
    name = "float"
    num = staticmethod(float)
    sqrt = staticmethod(math.sqrt)
    sin = staticmethod(math.sin)
    cos = staticmethod(math.cos)
    asin = staticmethod(math.asin)
    atan2 = staticmethod(math.atan2)
    pi = math.pi


class MPBackend:
    """mpmath with a private working precision (digits)."""

    def __init__(self, dps: int = 120):
        self.ctx = mpmath.MPContext()
        self.ctx.dps = dps
        self.name = f"mpmath{dps}"
        self.num = self.ctx.mpf
        self.sqrt, self.sin, self.cos = self.ctx.sqrt, self.ctx.sin, self.ctx.cos
        self.asin, self.atan2, self.pi = self.ctx.asin, self.ctx.atan2, self.ctx.pi


FLOAT = _FloatBackend()


@dataclass(frozen=True)
class LineElement:
    """Outgoing state on a scatterer: point q = center + r (cos t, sin t)."""

    scatterer: int
    cell: tuple
    theta: object
    velocity: tuple
    point: tuple = None

    def normal(self, backend=FLOAT):
        return backend.cos(self.theta), backend.sin(self.theta)


@dataclass(frozen=True)
class CollisionEvent:
    start: LineElement
    end: LineElement
    flight_time: object
    displacement: tuple


def reflect(v, n, eps_tangent: float = 1e-12):
    """Specular reflection v - 2 (v.n) n of an incoming velocity."""
    vn = v[0] * n[0] + v[1] * n[1]
    if vn > eps_tangent:
        raise ValidationError("reflect expects an incoming velocity (v.n <= 0)")
    if abs(vn) < eps_tangent:
        raise SingularTrajectoryError("grazing collision (|v.n| below tangency tolerance)")
    return v[0] - 2 * vn * n[0], v[1] - 2 * vn * n[1]


def _disks(cfg):
    return cfg._derived["disks"]


def _shift(cfg, o, backend):
    (a, b), (c, d) = cfg.translations
    return backend.num(o[0]) * backend.num(a) + backend.num(o[1]) * backend.num(c), \
        backend.num(o[0]) * backend.num(b) + backend.num(o[1]) * backend.num(d)


def next_collision(q, v, config: LorentzConfig, exclude=None, backend=FLOAT):
    """First disk copy hit by the ray q + t v, t > 0.

    ``q`` is in fundamental-cell coordinates. ``exclude`` is the
    ``(disk, offset)`` copy the ray is leaving. Returns
    ``(disk, offset, hit_point, tau)`` where ``disk`` indexes the unfolded
    disk list (mirror images included for walled tubes) and ``hit_point`` is
    in the coordinates of the starting cell.
    """
    num = backend.num
    qx, qy = num(q[0]), num(q[1])
    vx, vy = num(v[0]), num(v[1])
    eps = config.eps_tangent
    best = None
    grazing_first = None
    for k, (cx, cy, r, _, _) in enumerate(_disks(config)):
        for o in config._derived["offsets"]:
            if exclude == (k, o):
                continue
            sx, sy = _shift(config, o, backend)
            dx, dy = qx - (num(cx) + sx), qy - (num(cy) + sy)
            b = dx * vx + dy * vy
            cc = dx * dx + dy * dy - num(r) * num(r)
            if cc < 0 and exclude is None:
                raise ValidationError("starting point lies inside a scatterer")
            if b >= 0:
                continue
            disc = b * b - cc
            rel = disc / (num(r) * num(r))
            if disc < 0:
                if rel > -eps:
                    grazing_first = -b if grazing_first is None else min(grazing_first, -b)
                continue
            t = -b - backend.sqrt(disc)
            if t > 0 and (best is None or t < best[0]):
                best = (t, k, o, rel)
    if best is None or best[0] > config._derived["safe_flight"]:
        raise HorizonEscapeError(
            f"no collision within {config.horizon_cells} cells along v={tuple(float(x) for x in v)}")
    t, k, o, rel = best
    if rel < eps or (grazing_first is not None and grazing_first < t):
        raise SingularTrajectoryError("tangent collision: trajectory is in the singular set")
    return k, o, (qx + t * vx, qy + t * vy), t


def _fold(config, k, local, vel):
    """Map a hit on a mirror image back into the walled strip."""
    cx, cy, r, source, mirrored = _disks(config)[k]
    if not mirrored:
        return k, local, vel
    return source, (local[0], -local[1]), (vel[0], -vel[1])


def billiard_step(le: LineElement, config: LorentzConfig, backend=FLOAT) -> CollisionEvent:
    """Free flight to the next scatterer followed by specular reflection."""
    num = backend.num
    cx, cy, r, _, _ = _disks(config)[le.scatterer]
    q = le.point if le.point is not None else \
        (num(cx) + num(r) * backend.cos(le.theta), num(cy) + num(r) * backend.sin(le.theta))
    k, o, hit, tau = next_collision(q, le.velocity, config, exclude=(le.scatterer, (0, 0)), backend=backend)
    hx, hy = hit
    kx, ky, kr, _, _ = _disks(config)[k]
    sx, sy = _shift(config, o, backend)
    nx, ny = (hx - num(kx) - sx) / num(kr), (hy - num(ky) - sy) / num(kr)
    norm = backend.sqrt(nx * nx + ny * ny)
    nx, ny = nx / norm, ny / norm
    v2 = reflect(le.velocity, (nx, ny), config.eps_tangent)
    speed = backend.sqrt(v2[0] * v2[0] + v2[1] * v2[1])
    v2 = (v2[0] / speed, v2[1] / speed)  # stay on the energy shell
    local = (num(kx) + num(kr) * nx, num(ky) + num(kr) * ny)
    k2, local, v2 = _fold(config, k, local, v2)
    psi = (o[0],) if config.geometry == TUBE else (o[0], o[1])
    cell = tuple(a + b for a, b in zip(le.cell, psi))
    c2x, c2y, c2r, _, _ = _disks(config)[k2]
    theta = backend.atan2(local[1] - num(c2y), local[0] - num(c2x))
    end = LineElement(k2, cell, theta, v2, local)
    return CollisionEvent(le, end, tau, psi)


def line_element(config: LorentzConfig, scatterer: int, theta, angle, cell=None, backend=FLOAT):
    """Outgoing element at boundary angle ``theta`` with velocity at ``angle`` from the normal."""
    num = backend.num
    theta, angle = num(theta), num(angle)
    cx, cy, r, _, _ = _disks(config)[scatterer]
    nx, ny = backend.cos(theta), backend.sin(theta)
    ca, sa = backend.cos(angle), backend.sin(angle)
    v = (ca * nx - sa * ny, sa * nx + ca * ny)
    point = (num(cx) + num(r) * nx, num(cy) + num(r) * ny)
    return LineElement(scatterer, tuple(cell or (0,) * config.cell_dim), theta, v, point)


def sample_invariant_measure(rng, config: LorentzConfig, backend=FLOAT) -> LineElement:
    """Draw from (v . n_q) dq dv on the scatterer boundaries.

    Scatterer chosen with probability proportional to its circumference,
    boundary angle uniform, angle from the normal arcsin(2u - 1).
    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    if not hasattr(rng, "random"):
        rng = np.random.default_rng(rng)
    u = rng.random(3)
    radii = [s.radius for s in config.scatterers]
    total = math.fsum(radii)
    acc, pick = 0.0, len(radii) - 1
    for k, r in enumerate(radii):
        acc += r
        if u[0] * total < acc:
            pick = k
            break
    theta = 2 * math.pi * float(u[1])
    angle = math.asin(2 * float(u[2]) - 1)
    return line_element(config, pick, theta, angle, backend=backend)


def reverse(le: LineElement) -> LineElement:
    """Same point, velocity negated (an incoming element, to be re-emitted)."""
    return LineElement(le.scatterer, le.cell, le.theta, (-le.velocity[0], -le.velocity[1]), le.point)


def retrace_step(event: CollisionEvent, config: LorentzConfig, backend=FLOAT):
    """Fly the reflected-back velocity of ``event.end`` backwards.

    Reversal of the billiard map: the end point with velocity -v_in, where
    v_in is the incoming velocity there (the reflection of the outgoing one),
    leads back to the start point.
    """
    end = event.end
    nx, ny = end.normal(backend)
    vx, vy = end.velocity
    vn = vx * nx + vy * ny
    incoming = (vx - 2 * vn * nx, vy - 2 * vn * ny)
    back = LineElement(end.scatterer, end.cell, end.theta, (-incoming[0], -incoming[1]), end.point)
    return billiard_step(back, config, backend)


def trajectory(le: LineElement, config: LorentzConfig, n: int, backend=FLOAT) -> list:
    """``n`` consecutive collision events starting from ``le``."""
    events = []
    for _ in range(n):
        ev = billiard_step(le, config, backend)
        events.append(ev)
        le = ev.end
    return events


def reversal_defect(le: LineElement, config: LorentzConfig, n: int, backend=FLOAT) -> float:
    """Largest distance between the forward collision points and those of the reversed orbit.

    Runs ``n`` collisions forward, reverses the velocity at the last one and
    runs ``n`` collisions back; the back orbit must revisit the forward
    points in reverse order with the same cell indices.
    """
    forward = trajectory(le, config, n, backend)
    points = [(le.scatterer, le.cell, le.point)] + [(e.end.scatterer, e.end.cell, e.end.point) for e in forward]
    end = forward[-1].end
    nx, ny = end.normal(backend)
    vx, vy = end.velocity
    vn = vx * nx + vy * ny
    back = LineElement(end.scatterer, end.cell, end.theta, (-(vx - 2 * vn * nx), -(vy - 2 * vn * ny)), end.point)
    worst = 0.0
    for k, ev in enumerate(trajectory(back, config, n, backend), start=1):
        scat, cell, p = points[n - k]
        if ev.end.scatterer != scat or ev.end.cell != cell:
            return math.inf
        worst = max(worst, float(backend.sqrt((ev.end.point[0] - p[0]) ** 2 + (ev.end.point[1] - p[1]) ** 2)))
    return worst
