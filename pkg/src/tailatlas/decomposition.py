"""Atoms, cycles and chains of the tail sigma-algebra of a product system.

Finite fibers
    The product graph is finite. Its closed communication classes are the
    ergodic components; the cyclic classes of a closed class of period m
    are the atoms of an m-cycle, listed in image order. Exactness of T^m on
    an atom is certified numerically by convergence of the restricted
    m-step transfer matrix to its rank-one limit.

Lattice fibers (group extensions by Z^d)
    Each base edge c -> c2 carries the space-time step (1, psi_c). With
    spanning-tree potentials p over a closed base class and H the subgroup
    of Z^(1+d) generated by the potential defects of all edges, a state
    (c, i) gets the label (0, i) - p(c) mod H. Two states share an atom iff
    they share a label, and one step of T subtracts e_t = (1, 0, ..., 0)
    from every label. The component is an m-cycle when m is the order of
    e_t modulo H and a chain when e_t has infinite order. The finite
    window of the product graph is used to list atom states and as a
    cross-check: a cycle must show up as an in-window strongly connected
    class of the same period, a chain must show none.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import graphs, lattice
from .errors import (ExactnessCertificationError, HypothesisError, InconclusiveWindowError,
                     SlowMixingError, UnsupportedClassificationError)
from .fiber_extension import BIJECTIVE, FiberAction, FiberSet, ProductSystem, build_product, cycle_displacement_generators
from .reports import CheckReport, fraction_str
from .symbolic_base import SymbolicBaseSystem, stationary_measure

INF = math.inf
CYCLE = "cycle"
CHAIN = "chain"


@dataclass
class Atom:
    """One element of the generating partition.

    ``states`` is the full state set for finite fibers and the in-window
    part for lattice fibers. ``fiber_counts`` maps each cell to its fiber
    multiplicity; ``fiber_count`` is the common value (None if the cells
    disagree, which the invariant check reports).
    """

    states: frozenset
    measure: object
    fiber_count: object
    fiber_counts: dict
    cells: frozenset
    label: Optional[tuple] = None
    index: int = 0
    pattern: Optional[dict] = None


@dataclass
class Certificate:
    component: int
    atom: int
    power: int
    norm: float
    kind: str = "exactness of T^m on atom"

    def to_dict(self):
        return {"component": self.component, "atom": self.atom, "n": self.power,
                "achieved_norm": self.norm, "kind": self.kind}


@dataclass
class Component:
    atoms: list
    kind: str
    period: Optional[int]
    fiber_count: object
    conservative: bool
    base_class: int
    drift: Optional[tuple] = None
    certificates: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    label: Optional[tuple] = None
    level_shift: Optional[tuple] = None

    @property
    def measure(self):
        return sum((a.measure for a in self.atoms), Fraction(0)) if self.kind == CYCLE else INF


@dataclass
class DecompositionReport:
    components: list
    base_atoms: list
    base_classes: list
    projection_table: dict
    lifted_totals: dict
    transient_cells: list
    transient_states: list
    fiber_kind: str
    extra: dict = field(default_factory=dict)

    def atoms(self):
        for k, comp in enumerate(self.components):
            for j, atom in enumerate(comp.atoms):
                yield k, j, atom


# ---------------------------------------------------------------- decompose

def decompose(ps: ProductSystem) -> DecompositionReport:
    """Generating partition of the tail sigma-algebra of ``ps``.

    Reducible bases are handled one closed base class at a time; states over
    transient base cells belong to no atom and are reported separately.
    """
    base = ps.base
    succ = base.successors()
    closed, transient = graphs.closed_classes(succ)
    base_atoms, base_class_of_atom = [], []
    for b, cls in enumerate(closed):
        for cyc in graphs.cyclic_classes(succ, cls):
            base_atoms.append(frozenset(cyc))
            base_class_of_atom.append(b)
    transient_cells = sorted(c for comp in transient for c in comp)

    if ps.fiber.is_lattice:
        if ps.action.mode != BIJECTIVE:
            raise UnsupportedClassificationError(
                "only translation (bijective) actions on infinite fibers are classified")
        components = []
        for b, cls in enumerate(closed):
            components.extend(_lattice_components(ps, b, cls))
        transient_states = sorted(s for s in ps.states if s[0] in set(transient_cells))
    else:
        components, transient_states = _finite_components(ps, closed)

    components.sort(key=lambda comp: min(min(a.states) for a in comp.atoms))
    projection = _projection_table(components, base_atoms)

    totals = {}
    if not ps.fiber.is_lattice:
        recurrent = [s for s in ps.states if s[0] not in set(transient_cells)]
        totals["lifted_measure"] = sum((ps.lifted_measure(s) for s in recurrent), Fraction(0))
        totals["component_measures"] = sum((c.measure for c in components), Fraction(0))
    return DecompositionReport(components, base_atoms, [frozenset(c) for c in closed],
                               projection, totals, transient_cells, transient_states,
                               ps.fiber.kind)


def _projection_table(components, base_atoms):
    table = {}
    for k, comp in enumerate(components):
        for j, atom in enumerate(comp.atoms):
            match = [n for n, ba in enumerate(base_atoms) if ba == atom.cells]
            table[(k, j)] = match[0] if match else None
    return table


def _count_fibers(states):
    counts = {}
    for c, _ in states:
        counts[c] = counts.get(c, 0) + 1
    return counts


def _common(counts):
    values = set(counts.values())
    return values.pop() if len(values) == 1 else None


def _finite_components(ps, closed_base):
    succ = ps.successors()
    comps = graphs.strongly_connected_components(succ)
    closed, transient = graphs.closed_classes(succ, comps)
    class_of_cell = {c: b for b, cls in enumerate(closed_base) for c in cls}
    components = []
    for cls in closed:
        m = graphs.class_period(succ, cls)
        atoms = []
        for j, cyc in enumerate(graphs.cyclic_classes(succ, cls, m)):
            counts = _count_fibers(cyc)
            atoms.append(Atom(
                states=frozenset(cyc),
                measure=sum((ps.lifted_measure(s) for s in cyc), Fraction(0)),
                fiber_count=_common(counts), fiber_counts=counts,
                cells=frozenset(counts), index=j))
        counts = _count_fibers(cls)
        components.append(Component(
            atoms=atoms, kind=CYCLE, period=m, fiber_count=_common(counts),
            conservative=True, base_class=class_of_cell[cls[0][0]]))
    transient_states = sorted(s for comp in transient for s in comp)
    return components, transient_states


def _rational_residual(vec, basis):
    v = [Fraction(a) for a in vec]
    for row in basis:
        p = lattice.pivot(row)
        c = v[p] / row[p]
        v = [a - c * b for a, b in zip(v, row)]
    return v


def _lattice_components(ps, b, cls):
    base = ps.base
    d = ps.fiber.dim
    disps = ps.action.displacements
    gens, pot = cycle_displacement_generators(base, disps, cells=cls, with_time=True)
    H = lattice.hermite_basis(gens, d + 1)
    e_t = (1,) + (0,) * d
    m = lattice.order_of(e_t, H)
    comp_basis = lattice.hermite_basis(list(H) + [e_t], d + 1)
    level_lattice = [row[1:] for row in H if lattice.pivot(row) >= 1]
    walk_basis = [row[1:] for row in comp_basis if lattice.pivot(row) >= 1]
    walk_rank = len(walk_basis)
    n_p = 1 if not level_lattice else INF
    n_e = 1 if walk_rank == 0 else INF

    sub = [[base.transition[c][c2] for c2 in cls] for c in cls]
    weights = dict(zip(cls, stationary_measure(sub)))
    drift = tuple(sum((weights[c] * disps[c][k] for c in cls), Fraction(0)) for k in range(d))
    notes = []
    if m is not None and n_e != INF:
        conservative = True
        notes.append("finite-measure component: conservative by Poincare recurrence")
    elif any(drift):
        conservative = False
        notes.append("nonzero drift: dissipative (imported rule: zero-mean cocycles are the recurrent ones)")
    elif walk_rank <= 2:
        conservative = True
        notes.append(f"zero drift on a rank-{walk_rank} walk lattice: conservative "
                     "(imported rule: Atkinson for rank 1, CLT-implies-recurrence for rank 2)")
    else:
        conservative = False
        notes.append("zero drift on a rank-3 walk lattice: not-conservative (transient regime)")
    if m is None and conservative:
        raise UnsupportedClassificationError("a chain cannot be conservative; inconsistent classification")

    first = H[0] if H and lattice.pivot(H[0]) == 0 else None
    level_shift = tuple(first[1:]) if first is not None and first[0] == 1 else None

    def label(state):
        c, i = state
        return lattice.reduce(tuple(a - p for a, p in zip((0,) + tuple(i), pot[c])), H)

    cls_set = set(cls)
    window_states = [s for s in ps.states if s[0] in cls_set]
    by_comp = {}
    for s in window_states:
        by_comp.setdefault(lattice.reduce(label(s), comp_basis), []).append(s)

    succ = ps.successors()
    components = []
    for key, states in sorted(by_comp.items(), key=lambda kv: min(kv[1])):
        states.sort()
        l0 = label(states[0])
        groups = {}
        for s in states:
            groups.setdefault(label(s), []).append(s)
        if m is not None:
            order = [lattice.reduce(tuple(a - k * b for a, b in zip(l0, e_t)), H) for k in range(m)]
            missing = [k for k, lab in enumerate(order) if lab not in groups]
            if missing:
                raise InconclusiveWindowError(
                    f"atoms {missing} of a {m}-cycle have no state in window L={ps.fiber.window}; enlarge window")
            indexed = list(enumerate(order))
        else:
            r_e = _rational_residual(e_t, H)
            p = next(k for k, a in enumerate(r_e) if a != 0)
            indexed = []
            for lab in groups:
                r_v = _rational_residual(tuple(a - b for a, b in zip(lab, l0)), H)
                k = -r_v[p] / r_e[p]
                indexed.append((int(k), lab))
            indexed.sort()
        _check_window(ps, succ, states, m, cls, key)

        atoms = []
        mu_cells = {c: base.cell_measure[c] for c in cls}
        for k, lab in indexed:
            members = groups[lab]
            counts = _count_fibers(members)
            cells = frozenset(counts)
            per_level = sum((mu_cells[c] for c in cells), Fraction(0))
            atoms.append(Atom(
                states=frozenset(members),
                measure=per_level if n_p == 1 else INF,
                fiber_count=n_p, fiber_counts={c: n_p for c in cells}, cells=cells,
                label=lab, index=k,
                pattern={c: {"offset": list(_coset_rep(i, level_lattice)), "lattice": [list(r) for r in level_lattice]}
                         for c, i in sorted({c: i for c, i in reversed(members)}.items())}))
        comp = Component(atoms=atoms, kind=CYCLE if m is not None else CHAIN, period=m,
                         fiber_count=n_e, conservative=conservative, base_class=b,
                         drift=drift, notes=list(notes), label=key, level_shift=level_shift)
        for a in atoms:
            a.per_level_measure = sum((mu_cells[c] for c in a.cells), Fraction(0))
        components.append(comp)
    return components


def _coset_rep(i, basis):
    return lattice.reduce(tuple(i), lattice.hermite_basis(basis, len(i))) if basis else tuple(i)


def _check_window(ps, succ, states, m, cls, key):
    members = set(states)
    sub = {s: [t for t in succ[s] if t in members] for s in states}
    nontrivial = [comp for comp in graphs.strongly_connected_components(sub)
                  if any(t in set(comp) for s in comp for t in sub[s])]
    if m is None:
        if nontrivial:
            raise UnsupportedClassificationError(
                "an in-window cycle exists in a class classified as a chain")
        return
    for comp in nontrivial:
        if {c for c, _ in comp} == set(cls) and graphs.class_period(sub, comp) == m:
            return
    raise InconclusiveWindowError(
        f"window L={ps.fiber.window} does not resolve the {m}-cycle of component {key}; enlarge window")


# -------------------------------------------------------------- certificates

def transfer_matrix(ps: ProductSystem):
    """Float transition matrix of the product over its (in-window) states."""
    index = {s: k for k, s in enumerate(ps.states)}
    M = np.zeros((len(index), len(index)))
    for s in ps.states:
        for t, w in ps.edges[s]:
            M[index[s], index[t]] += float(w)
    return M, index


def certify_exactness(report: DecompositionReport, ps: ProductSystem,
                      tolerance: float = 1e-9, max_power: int = 10_000,
                      kind: str = "exactness of T^m on atom") -> list:
    """Certify that T^m restricted to each finite atom is exact.

    For atom P of an m-cycle, A = (M^m)[P, P] must be primitive (checked
    exactly on its support graph), and the smallest n <= ``max_power`` with
    ||A^n - 1 pi^T||_inf < ``tolerance`` is recorded, pi being the
    stationary vector of A and the norm the maximum absolute row sum.
    """
    if ps.fiber.is_lattice:
        raise HypothesisError("exactness certificates need a finite fiber set")
    M, index = transfer_matrix(ps)
    certs = []
    for k, comp in enumerate(report.components):
        m = comp.period
        Mm = np.linalg.matrix_power(M, m)
        comp.certificates = []
        for j, atom in enumerate(comp.atoms):
            idx = [index[s] for s in sorted(atom.states)]
            A = Mm[np.ix_(idx, idx)]
            if not np.allclose(A.sum(axis=1), 1.0, atol=1e-12) or not _is_primitive(A > 0):
                raise ExactnessCertificationError(
                    f"component {k} atom {j}: restricted {m}-step matrix is not primitive")
            pi = _stationary(A)
            Pi = np.outer(np.ones(len(idx)), pi)
            An = A.copy()
            for n in range(1, max_power + 1):
                norm = float(np.abs(An - Pi).sum(axis=1).max())
                if norm < tolerance:
                    cert = Certificate(k, j, n, norm, kind)
                    comp.certificates.append(cert)
                    certs.append(cert)
                    break
                An = An @ A
            else:
                raise SlowMixingError(
                    f"component {k} atom {j}: no convergence below {tolerance} within {max_power} powers; raise max_power")
    return certs


def _is_primitive(support):
    n = support.shape[0]
    succ = {a: [b for b in range(n) if support[a, b]] for a in range(n)}
    comps = graphs.strongly_connected_components(succ)
    return len(comps) == 1 and graphs.class_period(succ, comps[0]) == 1


def _stationary(A):
    n = A.shape[0]
    lhs = np.vstack([A.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return pi


# ------------------------------------------------------------------ checks

def verify_theorem_invariants(report: DecompositionReport, ps: ProductSystem) -> CheckReport:
    """Exact set-level checks of the structural conclusions.

    (a) one step maps each atom onto the next one; (b) fiber multiplicities
    are constant per atom and per component; (c) mu(P) = N_P mu_o(pi P),
    mu(E) = N_E mu_o(pi E) and mu(E) = m mu(P); (d) every atom weighs at
    least its base atom. Lattice atoms are checked on the window interior.
    """
    out = CheckReport("theorem_invariants")
    base = ps.base
    base_mass = lambda cells: sum((base.cell_measure[c] for c in cells), Fraction(0))
    seen = set()
    for k, comp in enumerate(report.components):
        n_atoms = len(comp.atoms)
        for j, atom in enumerate(comp.atoms):
            out.checked += 1
            overlap = seen & atom.states
            if overlap:
                out.fail(f"component {k} atom {j}: states {sorted(overlap)[:3]} already in another atom")
            seen |= atom.states
            if comp.kind == CYCLE:
                nxt = comp.atoms[(j + 1) % n_atoms]
            elif j + 1 < n_atoms and comp.atoms[j + 1].index == atom.index + 1:
                nxt = comp.atoms[j + 1]
            else:
                nxt = None
            _check_image(out, ps, k, j, atom, nxt)
            if atom.fiber_count is None:
                out.fail(f"component {k} atom {j}: fiber counts vary across cells {atom.fiber_counts}")
            if ps.fiber.is_lattice:
                if atom.fiber_count == 1 and any(v > 1 for v in _count_fibers(atom.states).values()):
                    out.fail(f"component {k} atom {j}: N_P = 1 but a cell carries several window fibers")
                if (atom.fiber_count == INF) != (atom.measure == INF):
                    out.fail(f"component {k} atom {j}: infinite count and measure disagree")
                continue
            if atom.fiber_count is not None and atom.measure != atom.fiber_count * base_mass(atom.cells):
                out.fail(f"component {k} atom {j}: mu(P) = {fraction_str(atom.measure)} != "
                         f"N_P * mu_o(pi P) = {atom.fiber_count} * {fraction_str(base_mass(atom.cells))}")
            floor = max((base_mass(ba) for ba in report.base_atoms if ba & atom.cells), default=Fraction(0))
            if atom.measure < floor:
                out.fail(f"component {k} atom {j}: measure below its base atom's measure")
        if ps.fiber.is_lattice:
            continue
        comp_states = [s for a in comp.atoms for s in a.states]
        counts = _count_fibers(comp_states)
        if len(set(counts.values())) != 1:
            out.fail(f"component {k}: N_E varies across cells {counts}")
            continue
        cells = set(counts)
        n_e = counts[next(iter(cells))]
        if comp.measure != n_e * base_mass(cells):
            out.fail(f"component {k}: mu(E) != N_E * mu_o(pi E)")
        if any(a.measure != comp.atoms[0].measure for a in comp.atoms):
            out.fail(f"component {k}: atoms of one cycle have different measures")
        if comp.measure != comp.period * comp.atoms[0].measure:
            out.fail(f"component {k}: mu(E) != m * mu(P)")
        if comp.atoms[0].fiber_count is not None and n_e * len(comp.atoms[0].cells) != \
                comp.period * comp.atoms[0].fiber_count * len(cells):
            out.fail(f"component {k}: N_E inconsistent with m * N_P")
    if not ps.fiber.is_lattice:
        expected = {s for s in ps.states if s[0] not in set(report.transient_cells)}
        if seen != expected:
            out.fail("atoms do not partition the recurrent product states")
        totals = report.lifted_totals
        if totals.get("lifted_measure") != totals.get("component_measures"):
            out.fail("component measures do not add up to the lifted measure")
    return out


def _check_image(out, ps, k, j, atom, nxt):
    image, preimage_ok = set(), True
    for s in atom.states:
        if s in ps.boundary:
            continue
        image.update(t for t, _ in ps.edges[s])
    if nxt is None:
        if image and ps.fiber.is_lattice:
            out.fail(f"component {k} atom {j}: in-window image but no next atom listed")
        return
    if ps.fiber.is_lattice:
        if not image <= nxt.states:
            out.fail(f"component {k} atom {j}: image leaves the next atom")
        pred = ps.predecessors()
        for t in nxt.states:
            sources = [s for s, _ in pred[t]]
            if len(sources) == _expected_indegree(ps, t) and not any(s in atom.states for s in sources):
                preimage_ok = False
        if not preimage_ok:
            out.fail(f"component {k} atom {j}: next atom not covered by the image")
        return
    if image != set(nxt.states):
        out.fail(f"component {k} atom {j}: image is not exactly the next atom")


def _expected_indegree(ps, state):
    c2, j = state
    return sum(1 for c in ps.base.predecessors()[c2] if ps.fiber.contains(ps.action.preimages(c, j)[0]))


def project_atoms(report: DecompositionReport) -> CheckReport:
    """Every product atom projects exactly onto one base atom."""
    out = CheckReport("atom_projection")
    transient = set(report.transient_cells)
    for k, j, atom in report.atoms():
        out.checked += 1
        if atom.cells not in report.base_atoms:
            out.fail(f"component {k} atom {j}: projection {sorted(atom.cells)} is not a base atom")
        if atom.cells & transient:
            out.fail(f"component {k} atom {j}: contains transient base cells")
    if transient:
        out.notes.append(f"transient base cells outside every atom: {sorted(transient)}")
    return out


# --------------------------------------------------------------- relabeling

@dataclass
class ConjugacyTable:
    """Per-cell fiber relabeling Phi_c and the evidence that it conjugates."""

    maps: dict
    refined: bool
    verification: CheckReport
    relabeled_report: Optional[DecompositionReport] = None

    def to_dict(self, cells):
        return {"refined_base": self.refined,
                "maps": {str(cells[c]): list(m) for c, m in sorted(self.maps.items())},
                "verification": self.verification.to_dict()}


def relabel_levels(report: DecompositionReport, ps: ProductSystem):
    """Conjugate T to T1 = Phi T Phi^-1 whose atoms are unions of levels.

    Over each cell c the fibers of atom P are enumerated increasingly
    i_1 < i_2 < ... and the j-th is sent to level offset(P) + j, offsets
    being cumulative over the atoms sharing a base atom. When the
    conjugated fiber map over c depends on the next cell as well, T1 is
    returned over the 2-block presentation of the base (cells = allowed
    transitions), which is isomorphic to the base.

    Returns ``(T1, ConjugacyTable)``.
    """
    if ps.fiber.is_lattice:
        raise HypothesisError("level relabeling is implemented for finite fiber sets")
    if not all(comp.conservative for comp in report.components):
        raise HypothesisError("relabeling needs a conservative system")
    base, k = ps.base, ps.fiber.size
    phi = {c: list(range(k)) for c in range(base.size)}
    offsets = {}
    for comp in report.components:
        for atom in comp.atoms:
            group = frozenset(atom.cells)
            start = offsets.get(group, 0)
            for c in atom.cells:
                fibers = sorted(i for cc, i in atom.states if cc == c)
                for j, i in enumerate(fibers):
                    phi[c][i] = start + j
            offsets[group] = start + (atom.fiber_count or 0)
    for c, m in phi.items():
        if sorted(m) != list(range(k)):
            raise HypothesisError(f"relabeling over cell {base.cells[c]!r} is not a bijection")
    inv = {c: {v: i for i, v in enumerate(m)} for c, m in phi.items()}
    succ = base.successors()

    def conj(c, c2, level):
        return phi[c2][ps.action.maps[c][inv[c][level]]]

    refined = any(conj(c, c2, x) != conj(c, succ[c][0], x)
                  for c in range(base.size) for c2 in succ[c] for x in range(k))
    if not refined:
        maps = [[conj(c, succ[c][0], x) for x in range(k)] for c in range(base.size)]
        new_base, new_action = base, FiberAction(maps=maps, mode=ps.action.mode)
        cell_phi = phi
        lift = lambda c, c2: c
    else:
        edges = [(c, c2) for c in range(base.size) for c2 in succ[c]]
        pos = {e: n for n, e in enumerate(edges)}
        rows = [[base.transition[e[1]][f[1]] if f[0] == e[1] else Fraction(0) for f in edges] for e in edges]
        meas = [base.cell_measure[c] * base.transition[c][c2] for c, c2 in edges]
        new_base = SymbolicBaseSystem(tuple((base.cells[c], base.cells[c2]) for c, c2 in edges),
                                      rows, meas, base.measure_preserving)
        new_action = FiberAction(maps=[[conj(c, c2, x) for x in range(k)] for c, c2 in edges],
                                 mode=ps.action.mode)
        cell_phi = {pos[e]: phi[e[0]] for e in edges}
        lift = lambda c, c2: pos[(c, c2)]
    t1 = build_product(new_base, ps.fiber, new_action)

    check = CheckReport("relabel_conjugacy")
    t1_edges = {s: dict(t1.edges[s]) for s in t1.states}
    for c in range(base.size):
        for c2 in succ[c]:
            here = lift(c, c2)
            for i in range(k):
                j = ps.action.maps[c][i]
                src = (here, cell_phi[here][i])
                if not refined:
                    check.checked += 1
                    if t1_edges[src].get((c2, phi[c2][j])) != base.transition[c][c2]:
                        check.fail(f"edge from state ({base.cells[c]!r}, {i}) not conjugated")
                    continue
                for c3 in succ[c2]:
                    check.checked += 1
                    dst = (lift(c2, c3), cell_phi[lift(c2, c3)][j])
                    if t1_edges[src].get(dst) != base.transition[c2][c3]:
                        check.fail(f"edge from state ({base.cells[c]!r}, {i}) not conjugated")
    t1_report = decompose(t1)
    for kk, jj, atom in t1_report.atoms():
        check.checked += 1
        levels = {c: frozenset(i for cc, i in atom.states if cc == c) for c in atom.cells}
        if len(set(levels.values())) != 1:
            check.fail(f"relabeled component {kk} atom {jj} is not a union of levels")
    table = ConjugacyTable(maps={c: tuple(m) for c, m in phi.items()}, refined=refined,
                           verification=check, relabeled_report=t1_report)
    return t1, table


# ------------------------------------------------------------- test hooks

def corrupt_report(report: DecompositionReport) -> DecompositionReport:
    """Merge two atoms of the first multi-atom component (or two components).

    Produces a wrong partition on purpose; downstream checks must catch it.
    """
    for comp in report.components:
        if len(comp.atoms) >= 2:
            a, b = comp.atoms[0], comp.atoms[1]
            merged = _merge(a, b)
            comp.atoms = [merged] + comp.atoms[2:]
            break
    else:
        if len(report.components) >= 2:
            first, second = report.components[0], report.components[1]
            first.atoms = [_merge(first.atoms[0], second.atoms[0])] + first.atoms[1:]
            report.components.pop(1)
    report.projection_table = _projection_table(report.components, report.base_atoms)
    return report


def _merge(a, b):
    states = a.states | b.states
    counts = _count_fibers(states)
    measure = a.measure + b.measure
    return Atom(states=frozenset(states), measure=measure, fiber_count=_common(counts),
                fiber_counts=counts, cells=frozenset(counts), index=a.index)


# ----------------------------------------------------------- serialization

def _count_str(n):
    return "inf" if n == INF else n


def _measure_str(x):
    return "inf" if x == INF else fraction_str(x)


def report_to_dict(report: DecompositionReport, ps: ProductSystem) -> dict:
    """JSON-ready rendering with canonical ordering."""
    cells = ps.base.cells

    def cell_id(c):
        name = cells[c]
        return list(name) if isinstance(name, tuple) else name

    def fiber_id(i):
        return list(i) if isinstance(i, tuple) else i

    comps = []
    for comp in report.components:
        atoms = []
        for atom in comp.atoms:
            entry = {"index": atom.index, "N_P": _count_str(atom.fiber_count),
                     "measure": _measure_str(atom.measure),
                     "cells": sorted((cell_id(c) for c in atom.cells), key=repr)}
            if ps.fiber.is_lattice:
                entry["measure_per_level"] = fraction_str(atom.per_level_measure)
                entry["pattern"] = {str(cells[c]): v for c, v in sorted(atom.pattern.items())}
                entry["window_states"] = [[cell_id(c), fiber_id(i)] for c, i in sorted(atom.states)]
            else:
                entry["states"] = [[cell_id(c), fiber_id(i)] for c, i in sorted(atom.states)]
            atoms.append(entry)
        item = {"kind": comp.kind, "period": comp.period, "N_E": _count_str(comp.fiber_count),
                "conservative": comp.conservative, "measure": _measure_str(comp.measure),
                "atoms": atoms, "certificates": [c.to_dict() for c in comp.certificates],
                "notes": list(comp.notes)}
        if comp.drift is not None:
            item["drift"] = [fraction_str(x) for x in comp.drift]
        if ps.fiber.is_lattice:
            item["level_offset_rule"] = (
                {"atom_k_equals_atom_0_translated_by": [list(comp.level_shift)], "per_step": "k"}
                if comp.level_shift is not None else {"atom_k_plus_1": "image of atom k under one step"})
        comps.append(item)
    return {
        "fiber_kind": report.fiber_kind,
        "components": comps,
        "base_atoms": [sorted((cell_id(c) for c in ba), key=repr) for ba in report.base_atoms],
        "projection_table": [[k, j, v] for (k, j), v in sorted(report.projection_table.items())],
        "transient_cells": [cell_id(c) for c in report.transient_cells],
        "lifted_totals": {k: fraction_str(v) for k, v in report.lifted_totals.items()},
        **({"quotient": report.extra["quotient"]} if "quotient" in report.extra else {}),
    }
