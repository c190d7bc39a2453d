import random
from fractions import Fraction

import pytest

from tailatlas.decomposition import (CHAIN, CYCLE, INF, certify_exactness, corrupt_report, decompose,
                                     project_atoms, relabel_levels, report_to_dict, verify_theorem_invariants)
from tailatlas.errors import (ExactnessCertificationError, HypothesisError, InconclusiveWindowError,
                              SlowMixingError, UnsupportedClassificationError)
from tailatlas.fiber_extension import FiberAction, FiberSet, build_product
from tailatlas.symbolic_base import SymbolicBaseSystem, full_shift
from named import (NAMED, drift_lattice, identity_example, parity_example, swap_example, three_cycle_example,
                   two_shifts_base, zero_mean_lattice)
from oracles import conjugacy_holds, random_permutation_action, random_reducible_base, tv_atoms

h = Fraction(1, 2)


def states_of(comp):
    return [set(a.states) for a in comp.atoms]


def test_swap_single_atom(swap):
    rep = decompose(swap)
    (comp,) = rep.components
    assert comp.kind == CYCLE and comp.period == 1 and comp.fiber_count == 2
    assert states_of(comp) == [set(swap.states)]


def test_parity_two_levels(parity):
    (comp,) = decompose(parity).components
    assert comp.period == 2
    assert states_of(comp) == [{(0, 0), (1, 0)}, {(0, 1), (1, 1)}]
    assert [a.fiber_count for a in comp.atoms] == [1, 1]


def test_identity_three_components():
    rep = decompose(identity_example())
    assert [(c.period, c.fiber_count) for c in rep.components] == [(1, 1)] * 3


def test_zero_mean_lattice_cycle_of_two():
    (comp,) = decompose(zero_mean_lattice()).components
    assert comp.kind == CYCLE and comp.period == 2
    assert comp.fiber_count == INF and all(a.fiber_count == INF for a in comp.atoms)
    assert comp.drift == (0,) and comp.conservative
    parity = [{i[0] % 2 for _, i in a.states} for a in comp.atoms]
    assert sorted(map(sorted, parity)) == [[0], [1]]


def test_uniform_drift_is_a_dissipative_chain():
    ps = drift_lattice()
    (comp,) = decompose(ps).components
    assert comp.kind == CHAIN and not comp.conservative and comp.drift == (1,)
    assert [sorted(a.states) for a in comp.atoms] == [[(0, (i,))] for i in range(-6, 7)]
    assert [a.index for a in comp.atoms] == list(range(13))


def test_displacement_two_splits_into_two_chains():
    one = SymbolicBaseSystem(("x",), [[1]], [1], True)
    rep = decompose(build_product(one, FiberSet.lattice(1, 5), FiberAction.translations([2])))
    assert [c.kind for c in rep.components] == [CHAIN, CHAIN]


def test_planar_zero_mean_walk_is_conservative_and_three_d_is_not():
    base4 = full_shift(4)
    ps2 = build_product(base4, FiberSet.lattice(2, 3), FiberAction.translations([(1, 0), (-1, 0), (0, 1), (0, -1)]))
    comps = decompose(ps2).components
    assert comps and all(c.conservative and c.kind == CYCLE for c in comps)
    base6 = full_shift(6)
    moves = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    ps3 = build_product(base6, FiberSet.lattice(3, 2), FiberAction.translations(moves))
    comps = decompose(ps3).components
    assert comps and not any(c.conservative for c in comps)
    assert any("rank-3" in n for c in comps for n in c.notes)


def test_window_stability_between_L_and_L_plus_two():
    for L in (3, 4, 6):
        small, big = decompose(zero_mean_lattice(L)), decompose(zero_mean_lattice(L + 2))
        assert [(c.kind, c.period) for c in small.components] == [(c.kind, c.period) for c in big.components]
        inner = lambda rep: [sorted(s for s in a.states if abs(s[1][0]) <= L - 2)
                             for c in rep.components for a in c.atoms]
        assert inner(small) == inner(big)


def test_tiny_window_is_inconclusive_not_guessed():
    # +-3 steps never return inside |i| <= 2 often enough to expose the cycle
    ps = build_product(full_shift(2), FiberSet.lattice(1, 2), FiberAction.translations([3, -3]))
    with pytest.raises(InconclusiveWindowError):
        decompose(ps)


def test_surjective_lattice_actions_are_unsupported():
    ps = build_product(full_shift(2), FiberSet.lattice(1, 3), FiberAction.translations([1, -1]))
    object.__setattr__(ps.action, "mode", "surjective")
    with pytest.raises(UnsupportedClassificationError):
        decompose(ps)


# ----------------------------------------------------------- certificates

def test_swap_certificate_within_200_powers(swap):
    rep = decompose(swap)
    (cert,) = certify_exactness(rep, swap)
    assert cert.power <= 200 and cert.norm < 1e-9


def test_parity_certificate_converges_at_one(parity):
    rep = decompose(parity)
    certs = certify_exactness(rep, parity)
    assert [c.power for c in certs] == [1, 1]


def test_corrupted_atom_fails_certification(parity):
    rep = corrupt_report(decompose(parity))
    with pytest.raises(ExactnessCertificationError):
        certify_exactness(rep, parity)


def test_slow_mixing_is_reported():
    rows = [[Fraction(999, 1000), Fraction(1, 1000)], [Fraction(1, 1000), Fraction(999, 1000)]]
    base = SymbolicBaseSystem("ab", rows, [h, h], True)
    ps = build_product(base, FiberSet.finite(1), FiberAction.permutations([[0], [0]]))
    with pytest.raises(SlowMixingError):
        certify_exactness(decompose(ps), ps, max_power=50)


def test_lattice_certificates_refused():
    ps = zero_mean_lattice()
    with pytest.raises(HypothesisError):
        certify_exactness(decompose(ps), ps)


# -------------------------------------------------------------- invariants

@pytest.mark.parametrize("name", sorted(NAMED))
def test_named_examples_satisfy_invariants(name):
    ps = NAMED[name]()
    assert verify_theorem_invariants(decompose(ps), ps).passed


def test_swap_measure_identity(swap):
    rep = decompose(swap)
    assert rep.components[0].measure == 2 * swap.base.total_measure


def test_parity_measure_identity(parity):
    (comp,) = decompose(parity).components
    assert comp.measure == 2 * comp.atoms[0].measure


def test_corruption_breaks_invariants(parity):
    rep = corrupt_report(decompose(parity))
    assert not verify_theorem_invariants(rep, parity).passed


def test_invariants_on_lattice_drift():
    ps = drift_lattice()
    assert verify_theorem_invariants(decompose(ps), ps).passed


# -------------------------------------------------------------- projection

def test_two_disjoint_shifts_project_onto_base_classes():
    base = two_shifts_base()
    ps = build_product(base, FiberSet.finite(2), FiberAction.permutations([[0, 1], [1, 0]] * 2))
    rep = decompose(ps)
    assert project_atoms(rep).passed
    assert {frozenset(a.cells) for _, _, a in rep.atoms()} == {frozenset({0, 1}), frozenset({2, 3})}


def test_irreducible_base_single_base_atom(swap):
    rep = decompose(swap)
    assert rep.base_atoms == [frozenset({0, 1})] and project_atoms(rep).passed


def test_transient_cells_are_excluded():
    base = two_shifts_base(transient=True)
    ps = build_product(base, FiberSet.finite(2), FiberAction.permutations([[0, 1], [1, 0]] * 2 + [[0, 1]]))
    rep = decompose(ps)
    assert rep.transient_cells == [4]
    assert rep.transient_states == [(4, 0), (4, 1)]
    assert all(4 not in a.cells for _, _, a in rep.atoms())
    out = project_atoms(rep)
    assert out.passed and out.notes


@pytest.mark.parametrize("seed", range(10))
def test_reducible_bases_match_the_oracle(seed):
    rng = random.Random(seed)
    base = random_reducible_base(rng)
    k = rng.randint(1, 3)
    ps = build_product(base, FiberSet.finite(k), random_permutation_action(rng, base.size, k))
    rep = decompose(ps)
    assert {frozenset(a.states) for _, _, a in rep.atoms()} == tv_atoms(ps)[0]
    assert project_atoms(rep).passed


# -------------------------------------------------------------- relabeling

def test_swap_relabel_spans_both_levels(swap):
    t1, table = relabel_levels(decompose(swap), swap)
    assert table.verification.passed
    (atom,) = [a for _, _, a in table.relabeled_report.atoms()]
    assert {i for _, i in atom.states} == {0, 1}


def test_three_cycle_relabels_to_single_levels():
    ps = three_cycle_example()
    rep = decompose(ps)
    assert rep.components[0].period == 3
    t1, table = relabel_levels(rep, ps)
    levels = [{i for _, i in a.states} for _, _, a in table.relabeled_report.atoms()]
    assert sorted(map(sorted, levels)) == [[0], [1], [2]]
    assert conjugacy_holds(ps, t1, table.maps, table.refined)


def test_parity_relabel_is_the_identity(parity):
    _, table = relabel_levels(decompose(parity), parity)
    assert all(m == (0, 1) for m in table.maps.values()) and not table.refined


def test_relabel_refuses_dissipative_systems():
    ps = drift_lattice()
    with pytest.raises(HypothesisError):
        relabel_levels(decompose(ps), ps)


def test_refined_relabel_on_mixed_action():
    ps = build_product(full_shift(2), FiberSet.finite(3), FiberAction.permutations([[1, 0, 2], [0, 2, 1]]))
    rep = decompose(ps)
    t1, table = relabel_levels(rep, ps)
    assert table.verification.passed
    assert conjugacy_holds(ps, t1, table.maps, table.refined)


# ----------------------------------------------------------- serialization

@pytest.mark.parametrize("name", sorted(NAMED))
def test_report_dict_is_deterministic(name):
    a = report_to_dict(decompose(NAMED[name]()), NAMED[name]())
    b = report_to_dict(decompose(NAMED[name]()), NAMED[name]())
    assert a == b


def test_lattice_report_has_pattern_and_offset_rule():
    ps = zero_mean_lattice()
    d = report_to_dict(decompose(ps), ps)
    comp = d["components"][0]
    assert comp["N_E"] == "inf" and comp["drift"] == ["0"]
    assert "level_offset_rule" in comp and "pattern" in comp["atoms"][0]


def test_fiber_permutation_invariance():
    rng = random.Random(4)
    for _ in range(20):
        k = rng.randint(2, 5)
        act = random_permutation_action(rng, 2, k)
        perm = list(range(k))
        rng.shuffle(perm)
        ps = build_product(full_shift(2), FiberSet.finite(k), act)
        ps2 = build_product(full_shift(2), FiberSet.finite(k), act.conjugate(perm))
        renamed = {frozenset((c, perm[i]) for c, i in a.states) for _, _, a in decompose(ps).atoms()}
        assert renamed == {frozenset(a.states) for _, _, a in decompose(ps2).atoms()}
