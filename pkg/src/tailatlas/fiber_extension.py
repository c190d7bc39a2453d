"""Fiber-surjective / fiber-bijective extensions over a finite Markov base.

The extension lives on cells x F. The fiber action is constant on cells: on
a finite fiber set it is a map sigma_c of {0, ..., k-1} per cell, on a
lattice Z^d it is a translation i -> i + psi_c (a group extension). The
product transition graph has an edge (c, i) -> (c2, sigma_c(i)) for every
base edge c -> c2, carrying the base weight.
"""

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Optional

from . import graphs, lattice
from .errors import HypothesisError, ValidationError, WindowUnderflowError
from .reports import CheckReport, ValidationReport, fraction_str
from .symbolic_base import SymbolicBaseSystem, validate_base

SURJECTIVE = "surjective"
BIJECTIVE = "bijective"


@dataclass(frozen=True)
class FiberSet:
    """``Finite(k)`` = {0..k-1}, or ``Lattice(d)`` = Z^d seen through the window |i_j| <= L."""

    kind: str
    size: int = 0
    dim: int = 0
    window: int = 0

    def __post_init__(self):
        if self.kind == "finite":
            if self.size < 1:
                raise ValidationError("a finite fiber set needs k >= 1")
        elif self.kind == "lattice":
            if self.dim not in (1, 2, 3):
                raise ValidationError("lattice dimension must be 1, 2 or 3")
            if self.window < 1:
                raise ValidationError("lattice window L must be >= 1")
        else:
            raise ValidationError(f"unknown fiber kind {self.kind!r}")

    @classmethod
    def finite(cls, k: int) -> "FiberSet":
        return cls("finite", size=k)

    @classmethod
    def lattice(cls, d: int, window: int) -> "FiberSet":
        return cls("lattice", dim=d, window=window)

    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice"

    def elements(self) -> list:
        if not self.is_lattice:
            return list(range(self.size))
        span = range(-self.window, self.window + 1)
        return [tuple(v) for v in iproduct(span, repeat=self.dim)]

    def contains(self, i) -> bool:
        if not self.is_lattice:
            return 0 <= i < self.size
        return all(abs(a) <= self.window for a in i)

    def with_window(self, window: int) -> "FiberSet":
        return FiberSet.lattice(self.dim, window)


@dataclass(frozen=True)
class FiberAction:
    """Cell-constant fiber maps, indexed by base cell position.

    Exactly one of ``maps`` (finite fibers: ``maps[c][i]`` is the image of
    fiber ``i`` over cell ``c``) and ``displacements`` (lattice fibers:
    ``psi_c`` as an integer vector) is set.
    """

    maps: Optional[tuple] = None
    displacements: Optional[tuple] = None
    mode: str = BIJECTIVE

    def __post_init__(self):
        if (self.maps is None) == (self.displacements is None):
            raise ValidationError("give exactly one of maps / displacements")
        if self.mode not in (SURJECTIVE, BIJECTIVE):
            raise ValidationError(f"mode must be {SURJECTIVE!r} or {BIJECTIVE!r}")
        if self.maps is not None:
            object.__setattr__(self, "maps", tuple(tuple(int(j) for j in m) for m in self.maps))
        else:
            object.__setattr__(self, "displacements",
                               tuple(tuple(int(a) for a in v) for v in self.displacements))

    @classmethod
    def permutations(cls, maps, mode: str = BIJECTIVE) -> "FiberAction":
        return cls(maps=maps, mode=mode)

    @classmethod
    def translations(cls, displacements) -> "FiberAction":
        disps = [(v,) if isinstance(v, int) else v for v in displacements]
        return cls(displacements=disps, mode=BIJECTIVE)

    @property
    def is_lattice(self) -> bool:
        return self.displacements is not None

    @property
    def n_cells(self) -> int:
        return len(self.maps if self.maps is not None else self.displacements)

    def apply(self, c: int, i):
        if self.maps is not None:
            return self.maps[c][i]
        return tuple(a + b for a, b in zip(i, self.displacements[c]))

    def preimages(self, c: int, j) -> list:
        if self.maps is not None:
            return [i for i, v in enumerate(self.maps[c]) if v == j]
        return [tuple(a - b for a, b in zip(j, self.displacements[c]))]

    def conjugate(self, perm) -> "FiberAction":
        """Rename fibers by ``perm`` (finite case): sigma'_c = perm o sigma_c o perm^-1."""
        inv = {v: k for k, v in enumerate(perm)}
        maps = [[perm[m[inv[j]]] for j in range(len(perm))] for m in self.maps]
        return FiberAction(maps=maps, mode=self.mode)


def cycle_displacement_generators(base: SymbolicBaseSystem, displacements, cells=None,
                                  with_time: bool = False):
    """Generators of the group spanned by displacement sums of closed walks.

    Works on the base subgraph spanned by ``cells`` (default: all), one
    strongly connected component at a time, via spanning-tree potentials:
    every internal edge u -> v contributes p(u) + psi_u - p(v). With
    ``with_time`` each step also carries a leading time coordinate 1.
    Returns ``(generators, potentials)``.
    """
    succ = base.successors()
    members = set(range(base.size) if cells is None else cells)
    sub = {c: [d for d in succ[c] if d in members] for c in members}
    d = len(displacements[0])

    def step(c):
        return ((1,) if with_time else ()) + tuple(displacements[c])

    dim = d + (1 if with_time else 0)
    gens, pot = [], {}
    for comp in graphs.strongly_connected_components(sub):
        comp_set = set(comp)
        root = comp[0]
        pot[root] = (0,) * dim
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in sub[u]:
                if v in comp_set and v not in pot:
                    pot[v] = tuple(a + b for a, b in zip(pot[u], step(u)))
                    queue.append(v)
        for u in comp:
            for v in sub[u]:
                if v in comp_set:
                    g = tuple(a + b - c for a, b, c in zip(pot[u], step(u), pot[v]))
                    if any(g):
                        gens.append(g)
    return gens, pot


def validate_action(action: FiberAction, fiber: FiberSet,
                    base: Optional[SymbolicBaseSystem] = None) -> ValidationReport:
    """Per-cell surjectivity / bijectivity against the declared mode.

    For lattice actions with a ``base`` supplied, ``details`` reports the
    subgroup of Z^d generated by the differences psi_c - psi_c' together
    with the displacement sums of closed walks.
    """
    report = ValidationReport("action")
    names = base.cells if base is not None else tuple(range(action.n_cells))
    if base is not None and action.n_cells != base.size:
        report.issues.append(f"action defines {action.n_cells} cells, base has {base.size}")
        return report
    if fiber.is_lattice != action.is_lattice:
        report.issues.append("action kind does not match fiber kind")
        return report
    if not action.is_lattice:
        k = fiber.size
        for c, m in enumerate(action.maps):
            if len(m) != k:
                report.issues.append(f"cell {names[c]!r}: map has {len(m)} entries, fiber set has {k}")
                continue
            bad = [j for j in m if not 0 <= j < k]
            if bad:
                report.issues.append(f"cell {names[c]!r}: values {bad} outside the fiber set")
                continue
            for j in sorted(set(range(k)) - set(m)):
                report.issues.append(f"cell {names[c]!r}: fiber value {j} unreached (not onto)")
            if action.mode == BIJECTIVE:
                for j in sorted(set(m)):
                    hits = [i for i, v in enumerate(m) if v == j]
                    if len(hits) > 1:
                        report.issues.append(
                            f"cell {names[c]!r}: fiber value {j} duplicated (from fibers {hits})")
        return report

    if action.mode != BIJECTIVE:
        report.issues.append("lattice (translation) actions are always bijective")
    for c, v in enumerate(action.displacements):
        if len(v) != fiber.dim:
            report.issues.append(f"cell {names[c]!r}: displacement has dimension {len(v)}, expected {fiber.dim}")
    if report.ok and base is not None:
        disps = action.displacements
        diffs = [tuple(a - b for a, b in zip(disps[c], disps[0])) for c in range(1, len(disps))]
        cycles, _ = cycle_displacement_generators(base, disps)
        report.details["cycle_group"] = lattice.describe(lattice.hermite_basis(cycles, fiber.dim), fiber.dim)
        report.details["generated_subgroup"] = lattice.describe(
            lattice.hermite_basis(diffs + cycles, fiber.dim), fiber.dim)
    return report


@dataclass(frozen=True, eq=False)
class ProductSystem:
    """Transition structure of T(x, i) = (T_o x, Phi(x, i)) on cells x window.

    ``edges[s]`` lists ``(target, weight)`` pairs inside the window;
    ``boundary[s]`` lists the pairs whose target falls outside it (lattice
    only). States are ``(cell_index, fiber)`` pairs in sorted order.
    """

    base: SymbolicBaseSystem
    fiber: FiberSet
    action: FiberAction
    states: tuple
    edges: dict
    boundary: dict = field(default_factory=dict)

    def lifted_measure(self, state) -> Fraction:
        return self.base.cell_measure[state[0]]

    def successors(self) -> dict:
        return {s: [t for t, _ in self.edges[s]] for s in self.states}

    def predecessors(self) -> dict:
        pred = {s: [] for s in self.states}
        for s in self.states:
            for t, w in self.edges[s]:
                pred[t].append((s, w))
        return pred

    def step(self, state):
        """All one-step images of a state (including out-of-window ones)."""
        c, i = state
        j = self.action.apply(c, i)
        return [(d, j) for d, p in enumerate(self.base.transition[c]) if p > 0]

    def cell_name(self, c):
        return self.base.cells[c]

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self.edges.values())


def build_product(base: SymbolicBaseSystem, fiber: FiberSet, action: FiberAction,
                  validate: bool = True) -> ProductSystem:
    """Construct the product transition graph.

    Lattice edges leaving the window are kept in ``boundary``. A lattice
    window so small that some cell has no in-window step at all raises
    :class:`WindowUnderflowError`. ``validate=False`` skips the hypothesis
    checks (used to build deliberately broken systems in tests).
    """
    if validate:
        problems = validate_base(base).issues + validate_action(action, fiber, base).issues
        if problems:
            raise HypothesisError("; ".join(problems))
    if fiber.is_lattice:
        for c, v in enumerate(action.displacements):
            if max(abs(a) for a in v) > 2 * fiber.window:
                raise WindowUnderflowError(
                    f"window L={fiber.window} cannot hold a step of cell {base.cells[c]!r} "
                    f"(displacement {list(v)}); enlarge L")
    succ = base.successors()
    states = sorted((c, i) for c in range(base.size) for i in fiber.elements())
    edges, boundary = {}, {}
    for c, i in states:
        j = action.apply(c, i)
        inside, outside = [], []
        for d in succ[c]:
            (inside if fiber.contains(j) else outside).append(((d, j), base.transition[c][d]))
        edges[(c, i)] = tuple(inside)
        if outside:
            boundary[(c, i)] = tuple(outside)
    return ProductSystem(base, fiber, action, tuple(states), edges, boundary)


def project_graph(ps: ProductSystem) -> dict:
    """Collapse fibers: ``{c: {c2: weight}}``; raises if fibers disagree."""
    out = {}
    for s in ps.states:
        row = {}
        for (d, _), w in ps.edges[s] + ps.boundary.get(s, ()):
            row[d] = row.get(d, Fraction(0)) + w
        if s[0] in out and out[s[0]] != row:
            raise AssertionError(f"fibers over cell {s[0]} project to different rows")
        out[s[0]] = row
    return out


def _cylinder_words(base, length):
    succ = base.successors()
    words = [(c,) for c in range(base.size)]
    for _ in range(length - 1):
        words = [w + (d,) for w in words for d in succ[w[-1]]]
    return words


def _extend_words(base, words, length):
    succ = base.successors()
    out = set()
    for w in words:
        frontier = [w]
        while frontier and len(frontier[0]) < length:
            frontier = [u + (d,) for u in frontier for d in succ[u[-1]]]
        out.update(frontier)
    return frozenset(out)


def random_symbolic_set(ps: ProductSystem, rng: random.Random, depth: int = 3, max_members: int = 6):
    """A random union of (cylinder word of length <= depth, fiber) pairs."""
    succ = ps.base.successors()
    fibers = ps.fiber.elements()
    members = []
    for _ in range(rng.randint(1, max_members)):
        k = rng.randint(1, depth)
        w = [rng.randrange(ps.base.size)]
        while len(w) < k:
            nxt = succ[w[-1]]
            if not nxt:
                break
            w.append(rng.choice(nxt))
        members.append((tuple(w), rng.choice(fibers)))
    return members


def check_projection_identity(ps: ProductSystem, trials: int = 100, seed: int = 0,
                              depth: int = 3, sets=None) -> CheckReport:
    """Exact check of pi T^-1 A = T_o^-1 pi A on symbolic sets.

    A symbolic set is a list of ``(word, fiber)`` members, each standing for
    [word] x {fiber}. Both sides are computed as sets of base cylinders,
    normalized to a common word length, and compared for equality.
    """
    report = CheckReport("projection_identity")
    rng = random.Random(seed)
    if sets is None:
        sets = [random_symbolic_set(ps, rng, depth) for _ in range(trials)]
    pred = ps.base.predecessors()
    for members in sets:
        report.checked += 1
        if not members:
            continue
        length = max(len(w) for w, _ in members) + 1
        lhs, rhs = [], []
        for w, j in members:
            for c in pred[w[0]]:
                rhs.append((c,) + tuple(w))
                if ps.action.preimages(c, j):
                    lhs.append((c,) + tuple(w))
        lhs = _extend_words(ps.base, lhs, length)
        rhs = _extend_words(ps.base, rhs, length)
        if lhs != rhs:
            missing = sorted(rhs - lhs)[:5]
            report.fail(f"set {members}: cylinders {missing} in T_o^-1 pi A but not in pi T^-1 A")
    return report


def check_measure_preservation(ps: ProductSystem) -> CheckReport:
    """Exact stationarity of the lifted measure m(c, i) = mu_o(c).

    Requires a declared bijective action. Lattice states with a predecessor
    outside the window cannot be balanced inside it; they are counted as
    boundary nodes and skipped.
    """
    if ps.action.mode != BIJECTIVE:
        raise HypothesisError("measure preservation of the extension needs a fiber-bijective action")
    report = CheckReport("measure_preservation")
    base = ps.base
    pred = base.predecessors()
    if not base.measure_preserving:
        report.notes.append("base is not declared measure preserving; lifted stationarity is expected to fail")
    boundary_nodes = []
    for c2, j in ps.states:
        total = Fraction(0)
        inside = True
        for c in pred[c2]:
            for i in ps.action.preimages(c, j):
                if not ps.fiber.contains(i):
                    inside = False
                total += base.cell_measure[c] * base.transition[c][c2]
        if not inside:
            boundary_nodes.append((c2, j))
            continue
        report.checked += 1
        if total != base.cell_measure[c2]:
            report.fail(f"state ({base.cells[c2]!r}, {j}): inflow {fraction_str(total)} "
                        f"!= mass {fraction_str(base.cell_measure[c2])}")
    report.details["boundary_nodes"] = len(boundary_nodes)
    report.details["interior_nodes"] = report.checked
    return report


def check_indegree_pattern(ps: ProductSystem) -> CheckReport:
    """Bijective actions: every (c2, j) has as many in-edges as c2 has in the base."""
    report = CheckReport("indegree_pattern")
    pred = ps.base.predecessors()
    incoming = {s: 0 for s in ps.states}
    for s in ps.states:
        for t, _ in ps.edges[s]:
            incoming[t] += 1
    for c2, j in ps.states:
        expected = sum(1 for c in pred[c2] if ps.fiber.contains(ps.action.preimages(c, j)[0]))
        report.checked += 1
        if incoming[(c2, j)] != expected:
            report.fail(f"state ({c2}, {j}): in-degree {incoming[(c2, j)]}, expected {expected}")
    return report
