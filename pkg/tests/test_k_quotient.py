from fractions import Fraction

import pytest

from tailatlas.decomposition import decompose, project_atoms
from tailatlas.errors import HypothesisError, NotBMeasurableError, ValidationError
from tailatlas.fiber_extension import FiberAction, FiberSet, build_product
from tailatlas.k_quotient import (K_MIXING, TwoSidedSymbolicSystem, atom_signature, build_quotient,
                                  check_filtration_inclusions, check_quotient_roundtrip, decompose_k,
                                  k_block_base, two_sided)
from tailatlas.symbolic_base import SymbolicBaseSystem, full_shift
from named import two_shifts_base
from oracles import k_suite

SWAP = FiberAction.permutations([[0, 1], [1, 0]])
PARITY = FiberAction.permutations([[1, 0], [1, 0]])


def test_swap_quotient_is_the_one_sided_swap():
    ts = TwoSidedSymbolicSystem(full_shift(2), 3)
    res = build_quotient(ts, SWAP)
    assert len(ts.words()) == 64
    assert res.quotient_base.size == 8
    assert check_quotient_roundtrip(ts, res).passed
    assert all(c.passed for c in res.checks)
    assert atom_signature(decompose(res.product), res.product) == \
        atom_signature(decompose(build_product(full_shift(2), FiberSet.finite(2), SWAP)),
                       build_product(full_shift(2), FiberSet.finite(2), SWAP))


def test_depth_one_and_four_agree():
    sigs = []
    for depth in (1, 4):
        rep = decompose_k(TwoSidedSymbolicSystem(full_shift(2), depth), SWAP)
        sigs.append(atom_signature(rep, rep.extra["quotient_result"].product))
    assert sigs[0] == sigs[1]


def test_history_coordinate_is_not_measurable():
    ts = TwoSidedSymbolicSystem(full_shift(2), 3)
    with pytest.raises(NotBMeasurableError):
        build_quotient(ts, SWAP, coordinate=-1)


def test_coordinate_beyond_depth_is_rejected():
    with pytest.raises(ValidationError):
        build_quotient(TwoSidedSymbolicSystem(full_shift(2), 2), SWAP, coordinate=2)


def test_forward_coordinates_inside_depth_are_fine():
    rep = decompose_k(TwoSidedSymbolicSystem(full_shift(2), 3), SWAP, coordinate=2)
    assert rep.components


def test_non_stationary_base_is_refused():
    base = SymbolicBaseSystem("ab", [[Fraction(1, 2)] * 2, [1, 0]], [Fraction(1, 2)] * 2)
    with pytest.raises(HypothesisError):
        build_quotient(TwoSidedSymbolicSystem(base, 2), SWAP)
    assert two_sided(base, 2).base.cell_measure == (Fraction(2, 3), Fraction(1, 3))


def test_filtration_on_full_shift():
    rep = check_filtration_inclusions(TwoSidedSymbolicSystem(full_shift(2), 3), SWAP)
    assert rep.passed and rep.details["states"] == 2 ** 6 * 2


def test_identity_dynamics_fails_strict_refinement():
    rep = check_filtration_inclusions(TwoSidedSymbolicSystem(full_shift(2), 3), SWAP, dynamics="identity")
    assert not rep.details["a"]


def test_single_cell_base_skips_strictness():
    one = SymbolicBaseSystem(["a"], [[Fraction(1)]], [Fraction(1)])
    rep = check_filtration_inclusions(TwoSidedSymbolicSystem(one, 2), FiberAction.permutations([[1, 0]]))
    assert rep.passed and not rep.details["strictness_checked"]


def test_depth_one_join_holds():
    rep = check_filtration_inclusions(TwoSidedSymbolicSystem(full_shift(2), 1), PARITY)
    assert rep.details["c"]


def test_parity_gives_two_level_atoms_with_k_mixing_certificates():
    rep = decompose_k(TwoSidedSymbolicSystem(full_shift(2), 2), PARITY)
    (comp,) = rep.components
    assert comp.period == 2
    assert [{i for _, i in a.states} for a in comp.atoms] == [{0}, {1}]
    assert all(c.kind == K_MIXING for c in comp.certificates)
    lifted = rep.extra["lifted_atoms"]
    assert {i for _, i in lifted[(0, 0)]} == {0}


def test_identity_action_components_are_levels():
    rep = decompose_k(TwoSidedSymbolicSystem(full_shift(2), 2), FiberAction.permutations([[0, 1, 2]] * 2))
    assert [(c.period, {i for _, i in c.atoms[0].states}) for c in rep.components] == [(1, {0}), (1, {1}), (1, {2})]


def test_reducible_two_sided_base():
    ts = TwoSidedSymbolicSystem(two_shifts_base(), 2)
    rep = decompose_k(ts, FiberAction.permutations([[0, 1], [1, 0]] * 2))
    assert project_atoms(rep).passed
    assert check_quotient_roundtrip(ts, rep.extra["quotient_result"]).passed


def test_k_block_base_is_stochastic():
    base = k_block_base(full_shift(3), 3)
    assert base.size == 27
    assert all(sum(r) == 1 for r in base.transition)
    assert sum(base.cell_measure) == 1


@pytest.mark.parametrize("index", range(0, 20, 4))
def test_small_suite_matches_one_sided_oracle(index):
    base, action, fiber = k_suite()[index]
    oracle_ps = build_product(base, fiber, action)
    oracle = atom_signature(decompose(oracle_ps), oracle_ps)
    for depth in (1, 2, 3):
        rep = decompose_k(TwoSidedSymbolicSystem(base, depth), action, fiber)
        assert atom_signature(rep, rep.extra["quotient_result"].product) == oracle
