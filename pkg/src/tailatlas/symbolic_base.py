"""Finite Markov base systems, exact and pointwise.

A base system is carried twice: symbolically, as a row-stochastic matrix of
exact rationals over a Markov partition with a vector of cell masses; and
pointwise, as a piecewise-linear Markov map of [0, 1) whose branches realize
that matrix. The symbolic side feeds the exact decomposition engine, the
pointwise side feeds Monte Carlo sampling.
"""

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import graphs
from .errors import SingularPointError, ValidationError
from .reports import ValidationReport, fraction_str


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and "p/q" strings; floats are rejected (inexact)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True)
class SymbolicBaseSystem:
    """Markov representation of the base (cells, weights, cell masses).

    ``transition[c][c2]`` is the conditional mass flowing from cell ``c`` to
    cell ``c2`` in one step. ``cell_measure`` need not be normalized.
    Construction only checks shapes; use :func:`validate_base` for the
    invariants.
    """

    cells: tuple
    transition: tuple
    cell_measure: tuple
    measure_preserving: bool = False

    def __post_init__(self):
        cells = tuple(self.cells)
        n = len(cells)
        if n == 0:
            raise ValidationError("a base system needs at least one cell")
        if len(set(cells)) != n:
            raise ValidationError("cell identifiers must be distinct")
        rows = tuple(tuple(as_fraction(p) for p in row) for row in self.transition)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValidationError(f"transition must be {n}x{n}")
        measure = tuple(as_fraction(m) for m in self.cell_measure)
        if len(measure) != n:
            raise ValidationError(f"cell_measure must have {n} entries")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "transition", rows)
        object.__setattr__(self, "cell_measure", measure)

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def total_measure(self) -> Fraction:
        return sum(self.cell_measure, Fraction(0))

    def index(self, cell) -> int:
        return self.cells.index(cell)

    def successors(self) -> dict:
        """Index graph: ``c -> [c2 with transition[c][c2] > 0]``."""
        return {c: [d for d, p in enumerate(row) if p > 0]
                for c, row in enumerate(self.transition)}

    def predecessors(self) -> dict:
        pred = {c: [] for c in range(self.size)}
        for c, row in enumerate(self.transition):
            for d, p in enumerate(row):
                if p > 0:
                    pred[d].append(c)
        return pred

    def pushforward(self, vector: Sequence) -> tuple:
        """Row vector times the transition matrix, exactly."""
        n = self.size
        return tuple(sum((as_fraction(vector[c]) * self.transition[c][d] for c in range(n)),
                         Fraction(0)) for d in range(n))

    def as_float_matrix(self) -> np.ndarray:
        return np.array([[float(p) for p in row] for row in self.transition])


def stationary_measure(transition) -> tuple:
    """Exact stationary probability vector of an irreducible stochastic matrix.

    Grassmann-Taksar-Heyman state reduction carried out in rationals; no
    subtraction occurs, so the result is exact and strictly positive.
    """
    a = [[as_fraction(p) for p in row] for row in transition]
    n = len(a)
    for k in range(n - 1, 0, -1):
        s = sum(a[k][:k], Fraction(0))
        if s == 0:
            raise ValidationError("matrix is reducible; no unique stationary vector")
        for i in range(k):
            a[i][k] /= s
        for i in range(k):
            if a[i][k] == 0:
                continue
            for j in range(k):
                a[i][j] += a[i][k] * a[k][j]
    pi = [Fraction(1)] + [Fraction(0)] * (n - 1)
    for k in range(1, n):
        pi[k] = sum((pi[i] * a[i][k] for i in range(k)), Fraction(0))
    total = sum(pi, Fraction(0))
    return tuple(p / total for p in pi)


def base_from_matrix(transition, cells=None, cell_measure=None) -> SymbolicBaseSystem:
    """Convenience constructor; without ``cell_measure`` the stationary vector is used."""
    n = len(transition)
    cells = tuple(cells) if cells is not None else tuple(range(n))
    if cell_measure is None:
        return SymbolicBaseSystem(cells, transition, stationary_measure(transition), True)
    return SymbolicBaseSystem(cells, transition, cell_measure, False)


def full_shift(k: int = 2, cells=None) -> SymbolicBaseSystem:
    row = [Fraction(1, k)] * k
    return SymbolicBaseSystem(tuple(cells) if cells else tuple("abcdefghij"[:k]),
                              [row] * k, [Fraction(1, k)] * k, True)


def validate_base(base: SymbolicBaseSystem) -> ValidationReport:
    """Check the invariants and classify the transition graph.

    ``details`` holds ``irreducible``, ``period`` (irreducible case),
    ``closed_classes`` / ``transient_cells`` (cell ids), per-class periods and
    ``exactness_candidate`` (irreducible and aperiodic).
    """
    report = ValidationReport("base")
    for c, row in enumerate(base.transition):
        neg = [base.cells[d] for d, p in enumerate(row) if p < 0]
        if neg:
            report.issues.append(f"transition[{c}] has negative entries at {neg}")
        s = sum(row, Fraction(0))
        if s != 1:
            report.issues.append(f"transition[{c}] (cell {base.cells[c]!r}) sums to {fraction_str(s)}, not 1")
    for c, m in enumerate(base.cell_measure):
        if m <= 0:
            report.issues.append(f"cell_measure[{c}] (cell {base.cells[c]!r}) is {fraction_str(m)}, not positive")
    if base.measure_preserving:
        pushed = base.pushforward(base.cell_measure)
        for c, (got, want) in enumerate(zip(pushed, base.cell_measure)):
            if got != want:
                report.issues.append(
                    f"cell_measure not stationary at cell {base.cells[c]!r}: "
                    f"pushed {fraction_str(got)} != {fraction_str(want)}")

    succ = base.successors()
    comps = graphs.strongly_connected_components(succ)
    closed, transient = graphs.closed_classes(succ, comps)
    periods = [graphs.class_period(succ, comp) for comp in closed]
    irreducible = len(comps) == 1
    period = periods[0] if irreducible else None
    report.details.update(
        irreducible=irreducible,
        period=period,
        closed_classes=[[base.cells[c] for c in comp] for comp in closed],
        closed_class_periods=periods,
        transient_cells=[base.cells[c] for comp in transient for c in comp],
        exactness_candidate=irreducible and period == 1,
    )
    return report


@dataclass(frozen=True)
class PiecewiseLinearRealization:
    """Increasing piecewise-affine Markov map of [0, 1).

    ``cell_bounds`` delimit the cells (lengths proportional to the base cell
    masses). ``breakpoints`` delimit the branches and refine ``cell_bounds``;
    branch ``b`` lies in cell ``branch_cell[b]`` and is mapped affinely and
    increasingly onto the union of cells ``branch_images[b] = (first, last)``.
    """

    cells: tuple
    cell_bounds: tuple
    breakpoints: tuple
    branch_cell: tuple
    branch_images: tuple

    def __post_init__(self):
        object.__setattr__(self, "cell_bounds", tuple(as_fraction(x) for x in self.cell_bounds))
        object.__setattr__(self, "breakpoints", tuple(as_fraction(x) for x in self.breakpoints))
        object.__setattr__(self, "branch_cell", tuple(int(c) for c in self.branch_cell))
        object.__setattr__(self, "branch_images", tuple((int(a), int(b)) for a, b in self.branch_images))
        nb = len(self.breakpoints) - 1
        if len(self.branch_cell) != nb or len(self.branch_images) != nb:
            raise ValidationError("one cell and one image per branch required")
        if self.breakpoints[0] != 0 or self.breakpoints[-1] != 1:
            raise ValidationError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        if not set(self.cell_bounds) <= set(self.breakpoints):
            raise ValidationError("branch breakpoints must refine the cell partition")

    def image_interval(self, b: int) -> tuple:
        first, last = self.branch_images[b]
        return self.cell_bounds[first], self.cell_bounds[last + 1]

    @property
    def slopes(self) -> tuple:
        out = []
        for b in range(len(self.branch_cell)):
            lo, hi = self.image_interval(b)
            out.append((hi - lo) / (self.breakpoints[b + 1] - self.breakpoints[b]))
        return tuple(out)

    def induced_transition(self) -> tuple:
        """Cell-to-cell transition matrix this map induces under Lebesgue measure."""
        n = len(self.cells)
        lengths = [self.cell_bounds[c + 1] - self.cell_bounds[c] for c in range(n)]
        rows = [[Fraction(0)] * n for _ in range(n)]
        for b, c in enumerate(self.branch_cell):
            blen = self.breakpoints[b + 1] - self.breakpoints[b]
            first, last = self.branch_images[b]
            ilen = self.cell_bounds[last + 1] - self.cell_bounds[first]
            for d in range(first, last + 1):
                rows[c][d] += blen * lengths[d] / ilen / lengths[c]
        return tuple(tuple(r) for r in rows)


def realize(base: SymbolicBaseSystem) -> PiecewiseLinearRealization:
    """Build a piecewise-linear Markov map whose induced matrix is ``base.transition``.

    Cell lengths are the normalized cell masses. A row whose support is a
    contiguous run of cells with weights proportional to their lengths gets
    one full branch (the doubling map stays the doubling map); any other row
    is split into one branch per positive entry, each mapped onto one cell.
    """
    n = base.size
    total = base.total_measure
    lengths = [m / total for m in base.cell_measure]
    bounds = [Fraction(0)]
    for length in lengths:
        bounds.append(bounds[-1] + length)
    breaks, bcell, images = [Fraction(0)], [], []
    for c, row in enumerate(base.transition):
        support = [d for d in range(n) if row[d] > 0]
        lo, hi = bounds[c], bounds[c + 1]
        contiguous = support == list(range(support[0], support[-1] + 1)) if support else False
        if contiguous:
            span = sum(lengths[d] for d in support)
            contiguous = all(row[d] == lengths[d] / span for d in support)
        if contiguous:
            breaks.append(hi)
            bcell.append(c)
            images.append((support[0], support[-1]))
            continue
        x = lo
        for d in support:
            x = x + (hi - lo) * row[d]
            breaks.append(x)
            bcell.append(c)
            images.append((d, d))
        breaks[-1] = hi
    return PiecewiseLinearRealization(base.cells, bounds, breaks, bcell, images)


def realization_from_images(cells, cell_lengths, images) -> PiecewiseLinearRealization:
    """Explicit realization: cell ``c`` maps onto cells ``images[c] = (first, last)``."""
    lengths = [as_fraction(x) for x in cell_lengths]
    total = sum(lengths, Fraction(0))
    bounds = [Fraction(0)]
    for length in lengths:
        bounds.append(bounds[-1] + length / total)
    return PiecewiseLinearRealization(tuple(cells), bounds, bounds, range(len(lengths)), images)


def check_realization(real: PiecewiseLinearRealization,
                      base: Optional[SymbolicBaseSystem] = None) -> ValidationReport:
    report = ValidationReport("realization")
    n = len(real.cells)
    for b, (first, last) in enumerate(real.branch_images):
        if not (0 <= first <= last < n):
            report.issues.append(f"branch {b} image ({first}, {last}) is not a run of cells")
    if report.ok and base is not None:
        if tuple(real.cells) != base.cells:
            report.issues.append("realization cells differ from base cells")
        elif real.induced_transition() != base.transition:
            report.issues.append("induced transition matrix differs from the base transition")
    report.details["slopes"] = list(real.slopes) if report.ok else []
    return report


def step_base(real: PiecewiseLinearRealization, x):
    """One application of the map: returns ``(T(x), cell of x)``.

    Works exactly for Fractions and in double precision for floats. Interior
    branch endpoints form a null set and raise :class:`SingularPointError`.
    """
    if not 0 <= x < 1:
        raise ValueError(f"x={x!r} outside [0, 1)")
    bps = real.breakpoints
    b = bisect_right(bps, x) - 1
    if x == bps[b] and b > 0:
        raise SingularPointError(f"x={x!r} is a branch endpoint")
    lo, hi = real.image_interval(b)
    slope = (hi - lo) / (bps[b + 1] - bps[b])
    if isinstance(x, Fraction):
        y = lo + slope * (x - bps[b])
    else:
        y = float(lo) + float(slope) * (x - float(bps[b]))
        y = min(y, np.nextafter(float(hi), 0.0))
    return y, real.cells[real.branch_cell[b]]


def empirical_transitions(real: PiecewiseLinearRealization, n_steps: int,
                          rng: np.random.Generator, segment: int = 16) -> np.ndarray:
    """Cell-to-cell transition counts from ``n_steps`` float iterates.

    Orbits restart from a fresh uniform point every ``segment`` steps:
    expanding maps shed about log2(slope) mantissa bits per step, so long
    float orbits collapse onto dyadic points.
    """
    n = len(real.cells)
    bps = np.array([float(x) for x in real.breakpoints])
    starts = bps[:-1]
    cell_of = np.array(real.branch_cell)
    lo = np.array([float(real.image_interval(b)[0]) for b in range(len(cell_of))])
    hi = np.array([float(real.image_interval(b)[1]) for b in range(len(cell_of))])
    slope = (hi - lo) / (bps[1:] - starts)
    counts = np.zeros((n, n), dtype=np.int64)
    n_orbits = -(-n_steps // segment)
    x = rng.random(n_orbits)
    done = 0
    for _ in range(segment):
        take = min(n_orbits, n_steps - done)
        if take <= 0:
            break
        xs = x[:take]
        b = np.searchsorted(bps, xs, side="right") - 1
        y = np.minimum(lo[b] + slope[b] * (xs - starts[b]), np.nextafter(hi[b], 0.0))
        c_from = cell_of[b]
        b2 = np.searchsorted(bps, y, side="right") - 1
        np.add.at(counts, (c_from, cell_of[b2]), 1)
        x[:take] = y
        done += take
    return counts
