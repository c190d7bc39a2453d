"""Invertible (K-mixing) bases: reduction to an exact one-sided factor.

The two-sided Markov shift over a base is its natural extension. Points are
bi-infinite admissible sequences x, T is the left shift (Tx)_n = x_(n+1),
and the generating algebra B_o is the one generated by the coordinates
n >= 0. With this orientation T B_o = sigma(x_n : n >= -1) contains B_o, the
partition Q_o of B_o identifies sequences that agree on n >= 0, and the
induced map [x] -> [Tx] on Q_o is the one-sided shift, i.e. the base itself.

At truncation depth k a two-sided point is represented by its word on the
coordinates -k .. k-1 (k history symbols, the present x_0, k-1 forward
symbols); the quotient class of a truncated state keeps x_0 .. x_(k-1) and
the fiber. The quotient base is the k-block presentation of the one-sided
base, which is isomorphic to it.

A fiber action keyed to coordinate ``coordinate`` uses the map of cell
x_coordinate. Keys in 0 .. k-1 are B-measurable; negative keys depend on the
discarded history and are detected as ill-posed quotients.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct

from .decomposition import DecompositionReport, certify_exactness, decompose
from .errors import HypothesisError, NotBMeasurableError, ValidationError
from .fiber_extension import BIJECTIVE, FiberAction, FiberSet, ProductSystem, build_product
from .reports import CheckReport
from .symbolic_base import SymbolicBaseSystem, stationary_measure, validate_base

K_MIXING = "K-mixing of T^m on atom (via exactness of quotient factor)"


@dataclass(frozen=True)
class TwoSidedSymbolicSystem:
    """Natural extension of ``base``, truncated to the window [-depth, depth)."""

    base: SymbolicBaseSystem
    depth: int

    def __post_init__(self):
        if not isinstance(self.depth, int) or self.depth < 1:
            raise ValidationError("depth must be a positive integer")
        report = validate_base(self.base)
        if not report.ok:
            raise HypothesisError("; ".join(report.issues))

    @property
    def window(self) -> range:
        return range(-self.depth, self.depth)

    def coordinate(self, word, n):
        """Symbol x_n of a truncated word."""
        return word[n + self.depth]

    def words(self) -> list:
        """Admissible words on the window with their cylinder masses."""
        return admissible_words(self.base, 2 * self.depth)

    def step(self, word):
        """Truncated shift: forget x_-k, read one new forward symbol."""
        last = word[-1]
        return [(word[1:] + (s,), p) for s, p in enumerate(self.base.transition[last]) if p > 0]

    def one_sided_factor(self) -> SymbolicBaseSystem:
        """Marginal of the forward coordinates x_0, x_1: the paired base."""
        n = self.base.size
        mass = [Fraction(0)] * n
        flow = [[Fraction(0)] * n for _ in range(n)]
        for word, w in self.words():
            a, b = self.coordinate(word, 0), self.coordinate(word, 1) if self.depth > 1 else None
            mass[a] += w
            if b is not None:
                flow[a][b] += w
        if self.depth == 1:
            for word, w in self.words():
                a = self.coordinate(word, 0)
                for b, p in enumerate(self.base.transition[a]):
                    flow[a][b] += w * p
        rows = [[flow[a][b] / mass[a] if mass[a] else self.base.transition[a][b] for b in range(n)]
                for a in range(n)]
        return SymbolicBaseSystem(self.base.cells, rows, mass, True)


def admissible_words(base: SymbolicBaseSystem, length: int) -> list:
    """All words of ``length`` with positive cylinder mass mu(x_0) prod P."""
    out = [((c,), base.cell_measure[c]) for c in range(base.size) if base.cell_measure[c] > 0]
    for _ in range(length - 1):
        out = [(w + (s,), m * p) for w, m in out
               for s, p in enumerate(base.transition[w[-1]]) if p > 0]
    return out


def k_block_base(base: SymbolicBaseSystem, k: int) -> SymbolicBaseSystem:
    """Presentation of the one-sided base with cells = admissible k-words."""
    words = admissible_words(base, k)
    pos = {w: n for n, (w, _) in enumerate(words)}
    rows = []
    for w, _ in words:
        row = [Fraction(0)] * len(words)
        for s, p in enumerate(base.transition[w[-1]]):
            if p > 0:
                row[pos[w[1:] + (s,)]] = p
        rows.append(row)
    cells = tuple(tuple(base.cells[c] for c in w) if k > 1 else base.cells[w[0]] for w, _ in words)
    return SymbolicBaseSystem(cells, rows, [m for _, m in words], base.measure_preserving)


@dataclass
class QuotientResult:
    """Quotient one-sided product and the map from truncated states to it."""

    quotient_base: SymbolicBaseSystem
    product: ProductSystem
    class_map: dict
    depth_used: int
    coordinate: int
    checks: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"depth": self.depth_used, "coordinate": self.coordinate,
                "truncated_states": len(self.class_map),
                "quotient_classes": len(set(self.class_map.values())),
                "quotient_cells": self.quotient_base.size}


def _require_stationary(base):
    if base.pushforward(base.cell_measure) != base.cell_measure:
        raise HypothesisError("the natural extension needs an invariant cell measure")


def build_quotient(ts: TwoSidedSymbolicSystem, action: FiberAction, fiber: FiberSet = None,
                   coordinate: int = 0) -> QuotientResult:
    """Quotient of the truncated two-sided product by Q = Q_o x F.

    Raises :class:`NotBMeasurableError` when the induced map on classes is
    not single-valued, which is the case exactly when the action reads
    coordinates outside the generating algebra.
    """
    base, k = ts.base, ts.depth
    _require_stationary(base)
    if action.mode != BIJECTIVE:
        raise HypothesisError("the invertible case needs a fiber-bijective action")
    if coordinate >= k:
        raise ValidationError(f"coordinate {coordinate} is not inside depth {k}; raise depth")
    fiber = fiber or FiberSet.finite(len(action.maps[0]))
    qbase = k_block_base(base, k)
    qindex = {w: n for n, (w, _) in enumerate(admissible_words(base, k))}
    qmaps = None
    if not fiber.is_lattice:
        qmaps = [list(action.maps[w[max(coordinate, 0)]]) for w in qindex]
        qaction = FiberAction(maps=qmaps, mode=BIJECTIVE)
    else:
        qaction = FiberAction.translations([action.displacements[w[max(coordinate, 0)]] for w in qindex])
    qps = build_product(qbase, fiber, qaction)

    class_map = {}
    for word, _ in ts.words():
        u = word[k:]
        for i in fiber.elements():
            class_map[(word, i)] = (qindex[u], i)

    check = CheckReport("factor_commutation")
    images = {}
    for (word, i), cls in class_map.items():
        check.checked += 1
        j = action.apply(ts.coordinate(word, coordinate), i)
        img = tuple(sorted(((qindex[w2[k:]], j), p) for w2, p in ts.step(word)))
        seen = images.setdefault(cls, img)
        if seen != img:
            raise NotBMeasurableError(
                f"induced map on classes is not single-valued at class {cls}: the action reads "
                f"coordinate {coordinate}, outside the generating algebra")
    qedges = {s: tuple(sorted(qps.edges[s] + qps.boundary.get(s, ()))) for s in qps.states}
    for cls, img in images.items():
        if tuple(sorted(img)) != qedges[cls]:
            check.fail(f"class {cls}: two-sided image and quotient step disagree")
    return QuotientResult(qbase, qps, class_map, k, coordinate, [check])


def check_quotient_roundtrip(ts: TwoSidedSymbolicSystem, result: QuotientResult) -> CheckReport:
    """The 1-block marginal of the quotient base equals the base exactly."""
    out = CheckReport("quotient_roundtrip")
    base, q = ts.base, result.quotient_base
    n = base.size
    first = [w[0] for w, _ in admissible_words(base, ts.depth)]
    mass = [Fraction(0)] * n
    flow = [[Fraction(0)] * n for _ in range(n)]
    for a, (m, row) in enumerate(zip(q.cell_measure, q.transition)):
        mass[first[a]] += m
        for b, p in enumerate(row):
            flow[first[a]][first[b]] += m * p
    out.checked = n * n + n
    if mass != list(base.cell_measure):
        out.fail(f"cell measures differ: {mass} vs {list(base.cell_measure)}")
    for a in range(n):
        if mass[a] == 0:
            continue
        for b in range(n):
            if flow[a][b] / mass[a] != base.transition[a][b]:
                out.fail(f"weight {base.cells[a]!r}->{base.cells[b]!r} differs")
    factor = ts.one_sided_factor()
    if factor.transition != base.transition or factor.cell_measure != base.cell_measure:
        out.fail("forward-coordinate factor of the two-sided system differs from the base")
    return out


# ------------------------------------------------------------- filtrations

def _partition(states, key):
    blocks = {}
    for s in states:
        blocks.setdefault(key(s), set()).add(s)
    return blocks


def _refines(states, fine, coarse):
    image = {}
    for s in states:
        if image.setdefault(fine(s), coarse(s)) != coarse(s):
            return False
    return True


def check_filtration_inclusions(ts: TwoSidedSymbolicSystem, action: FiberAction, depth: int = None,
                                dynamics: str = "shift", coordinate: int = 0,
                                fiber: FiberSet = None) -> CheckReport:
    """Finite-partition versions of the filtration identities.

    With B_j the partition by (x_0 .. x_(j-1), fiber) and k the depth:
    (a) T B_(j+1) refines B_j for j < k, and T B_1 is not refined by B_k
        (the latter only when some cell has two predecessors);
    (b) T^n B_k refines the lift (x_(-n) .. x_(k-1-n), fiber) of T_o^n B_o
        for n = 1 .. k;
    (c) the join over n = 0 .. k of those lifts equals the partition by
        (x_(-k) .. x_(k-1), fiber).
    ``dynamics="identity"`` replaces T by the identity (negative control).
    """
    k = depth or ts.depth
    if k > ts.depth:
        raise ValidationError("check depth exceeds the truncation depth")
    fiber = fiber or FiberSet.finite(len(action.maps[0]))
    states = [(w, i) for w, _ in ts.words() for i in fiber.elements()]
    coord = ts.coordinate
    shift = 1 if dynamics == "shift" else 0
    if dynamics not in ("shift", "identity"):
        raise ValidationError("dynamics must be 'shift' or 'identity'")

    def pull(state, n):
        """T^-n state as (lookup offset, fiber)."""
        word, i = state
        if shift == 0:
            return 0, i
        for step in range(1, n + 1):
            i = action.preimages(coord(word, coordinate - step), i)[0]
        return n, i

    def T_n_B(j, n):
        def key(s):
            off, i = pull(s, n)
            return tuple(coord(s[0], m - off) for m in range(j)), i
        return key

    def lift(lo, hi):
        return lambda s: (tuple(coord(s[0], m) for m in range(lo, hi)), s[1])

    out = CheckReport("filtration_inclusions", details={"depth": k, "dynamics": dynamics})
    a_ok = True
    for j in range(1, k):
        out.checked += 1
        if not _refines(states, T_n_B(j + 1, 1), T_n_B(j, 0)):
            a_ok = False
            out.fail(f"(a) T B_{j + 1} does not refine B_{j}")
    # strictness needs a branching past; a base with no merging transitions has none
    T = ts.base.transition
    branching = any(sum(1 for row in T if row[c] > 0) > 1 for c in range(len(T)))
    if branching:
        out.checked += 1
        if _refines(states, T_n_B(k, 0), T_n_B(1, 1)):
            a_ok = False
            out.fail(f"(a) T B_1 is already measurable w.r.t. B_{k}: no strict refinement")
    b_ok = True
    for n in range(1, k + 1):
        out.checked += 1
        target = lift(-n * shift, k - n * shift)
        if not _refines(states, T_n_B(k, n), target):
            b_ok = False
            out.fail(f"(b) T^{n} B_{k} does not refine the lift of T_o^{n} B_o")
    out.checked += 1
    lifts = [lift(-n * shift, k - n * shift) for n in range(k + 1)]
    joined = lambda s: tuple(f(s) for f in lifts)
    full = lift(-k * shift, k)
    c_ok = _refines(states, joined, full) and _refines(states, full, joined)
    if not c_ok:
        out.fail("(c) joined lifts differ from the depth-limited product algebra")
    out.details.update({"a": a_ok, "b": b_ok, "c": c_ok, "strictness_checked": branching,
                        "states": len(states)})
    return out


# ---------------------------------------------------------------- decompose

def decompose_k(ts: TwoSidedSymbolicSystem, action: FiberAction, fiber: FiberSet = None,
                coordinate: int = 0, tolerance: float = 1e-9, max_power: int = 10_000,
                certify: bool = True) -> DecompositionReport:
    """Decompose the quotient and lift atoms back to truncated states.

    ``report.extra["quotient"]`` records depth and class counts;
    ``report.extra["lifted_atoms"][(k, j)]`` is the set of truncated
    two-sided states whose class lies in quotient atom (k, j).
    """
    result = build_quotient(ts, action, fiber, coordinate)
    report = decompose(result.product)
    if certify and not result.product.fiber.is_lattice:
        certify_exactness(report, result.product, tolerance, max_power, kind=K_MIXING)
    lifted = {}
    where = {s: (k, j) for k, j, atom in report.atoms() for s in atom.states}
    for state, cls in result.class_map.items():
        if cls in where:
            lifted.setdefault(where[cls], set()).add(state)
    report.extra["quotient"] = result.summary()
    report.extra["lifted_atoms"] = lifted
    report.extra["quotient_result"] = result
    return report


def atom_signature(report: DecompositionReport, ps: ProductSystem) -> list:
    """Depth-free summary: atoms projected to (x_0 cell, fiber) pairs."""
    def first(c):
        name = ps.base.cells[c]
        return name[0] if isinstance(name, tuple) else name

    return sorted(
        (comp.kind, comp.period, str(comp.fiber_count),
         tuple(tuple(sorted({(first(c), i) for c, i in atom.states})) for atom in comp.atoms))
        for comp in report.components)


def two_sided(base: SymbolicBaseSystem, depth: int) -> TwoSidedSymbolicSystem:
    """Natural extension with the invariant measure filled in when missing."""
    if base.pushforward(base.cell_measure) != base.cell_measure:
        base = SymbolicBaseSystem(base.cells, base.transition, stationary_measure(base.transition), True)
    return TwoSidedSymbolicSystem(base, depth)


__all__ = ["TwoSidedSymbolicSystem", "QuotientResult", "build_quotient", "check_quotient_roundtrip",
           "check_filtration_inclusions", "decompose_k", "atom_signature", "admissible_words",
           "k_block_base", "two_sided", "K_MIXING"]
