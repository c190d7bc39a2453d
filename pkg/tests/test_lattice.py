import math
from itertools import combinations

from hypothesis import given, settings, strategies as st

from tailatlas import lattice

vec2 = st.tuples(st.integers(-6, 6), st.integers(-6, 6))


@given(st.lists(st.integers(-20, 20), max_size=5))
def test_rank_one_basis_is_the_gcd(values):
    basis = lattice.hermite_basis([(v,) for v in values], 1)
    g = math.gcd(*values) if values else 0
    assert basis == ([(g,)] if g else [])


@given(st.lists(vec2, max_size=5))
@settings(max_examples=300)
def test_index_equals_gcd_of_minors(vectors):
    basis = lattice.hermite_basis(vectors, 2)
    minors = [a[0] * b[1] - a[1] * b[0] for a, b in combinations(vectors, 2)]
    g = math.gcd(*minors) if minors else 0
    info = lattice.describe(basis, 2)
    if g:
        assert info["rank"] == 2 and info["index"] == g
    else:
        assert info["rank"] < 2


@given(st.lists(vec2, min_size=1, max_size=5), vec2)
@settings(max_examples=300)
def test_generators_are_members_and_reduction_is_canonical(vectors, probe):
    basis = lattice.hermite_basis(vectors, 2)
    for v in vectors:
        assert lattice.contains(basis, v)
    shifted = tuple(p + 3 * v for p, v in zip(probe, vectors[0]))
    assert lattice.reduce(probe, basis) == lattice.reduce(shifted, basis)


def test_hermite_form_shape():
    basis = lattice.hermite_basis([(2, 3), (4, 1)], 2)
    assert [lattice.pivot(r) for r in basis] == [0, 1]
    assert all(r[lattice.pivot(r)] > 0 for r in basis)
    assert 0 <= basis[0][1] < basis[1][1]


def test_order_of():
    basis = lattice.hermite_basis([(2, 0), (0, 3)], 2)
    assert lattice.order_of((1, 0), basis) == 2
    assert lattice.order_of((1, 1), basis) == 6
    assert lattice.order_of((1, 0), lattice.hermite_basis([(0, 1)], 2)) is None
