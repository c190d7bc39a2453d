"""Independent reference computations and random configuration generators.

Nothing here reuses the package's graph code: recurrence comes from
networkx, periods from boolean matrix powers and atoms from the rows of
high powers of the float transfer matrix.
"""

import math
import random
from fractions import Fraction

import networkx as nx
import numpy as np

from tailatlas.fiber_extension import FiberAction, FiberSet, build_product
from tailatlas.symbolic_base import SymbolicBaseSystem, base_from_matrix


# ------------------------------------------------------------ generators

def _weights(rng, support):
    raw = [rng.randint(1, 4) for _ in support]
    total = sum(raw)
    return {c: Fraction(w, total) for c, w in zip(support, raw)}


def random_primitive_matrix(rng, n):
    """Irreducible aperiodic support: a Hamiltonian cycle, a self-loop, random extras."""
    rows = []
    loop = rng.randrange(n)
    for c in range(n):
        support = {(c + 1) % n}
        if c == loop:
            support.add(c)
        support |= {d for d in range(n) if rng.random() < 0.3}
        w = _weights(rng, sorted(support))
        rows.append([w.get(d, Fraction(0)) for d in range(n)])
    return rows


def random_permutation_action(rng, n_cells, k):
    maps = []
    for _ in range(n_cells):
        p = list(range(k))
        rng.shuffle(p)
        maps.append(p)
    return FiberAction.permutations(maps)


def random_finite_config(rng, max_cells=6, max_fibers=6):
    n = rng.randint(1, max_cells)
    k = rng.randint(1, max_fibers)
    base = base_from_matrix(random_primitive_matrix(rng, n))
    return build_product(base, FiberSet.finite(k), random_permutation_action(rng, n, k))


def suite_configs(count=200, seed=20240601):
    rng = random.Random(seed)
    return [random_finite_config(rng) for _ in range(count)]


def random_reducible_base(rng):
    """2-3 closed classes (some periodic) plus up to 2 transient cells."""
    blocks = []
    for _ in range(rng.randint(2, 3)):
        period = rng.choice([1, 1, 2, 3])
        size = period * rng.randint(1, 2)
        blocks.append(_strong_block(rng, size, period))
    n_trans = rng.randint(0, 2)
    n = sum(len(b) for b in blocks) + n_trans
    rows = [[Fraction(0)] * n for _ in range(n)]
    offset = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, w in enumerate(row):
                rows[offset + i][offset + j] = w
        offset += len(b)
    closed_cells = offset
    for t in range(n_trans):
        c = closed_cells + t
        support = {rng.randrange(closed_cells)} | {d for d in range(n) if rng.random() < 0.3 and d != c}
        for d, w in _weights(rng, sorted(support)).items():
            rows[c][d] = w
    measure = [Fraction(rng.randint(1, 5), 7) for _ in range(n)]
    return SymbolicBaseSystem(tuple(f"c{i}" for i in range(n)), rows, measure)


def _strong_block(rng, size, period):
    """Irreducible block of exact period: a Hamiltonian cycle stepping group to group."""
    rows = [[Fraction(0)] * size for _ in range(size)]
    for c in range(size):
        nxt = (c % period + 1) % period
        support = {(c + 1) % size} | {d for d in range(size) if d % period == nxt and rng.random() < 0.4}
        if period == 1 and c == 0:
            support.add(0)
        for d, w in _weights(rng, sorted(support)).items():
            rows[c][d] = w
    return rows


# --------------------------------------------------------------- oracles

def float_matrix(ps):
    index = {s: k for k, s in enumerate(ps.states)}
    M = np.zeros((len(index), len(index)))
    for s in ps.states:
        for t, w in ps.edges[s]:
            M[index[s], index[t]] += float(w)
    return M, index


def digraph(ps):
    g = nx.DiGraph()
    g.add_nodes_from(ps.states)
    g.add_edges_from((s, t) for s in ps.states for t, _ in ps.edges[s])
    return g


def matrix_period(adj, i, horizon=None):
    """gcd of return times n <= horizon of state i in a boolean adjacency matrix."""
    n = adj.shape[0]
    horizon = horizon or 2 * n + 2
    reach = np.eye(n, dtype=bool)
    g = 0
    for step in range(1, horizon + 1):
        reach = (reach.astype(np.int64) @ adj.astype(np.int64)) > 0
        if reach[i, i]:
            g = math.gcd(g, step)
    return g


def tv_atoms(ps, tol=1e-9, max_power=10_000):
    """Atoms as classes of equal limiting row profiles of M^(L n).

    L is the lcm of the periods of recurrent states. Returns the partition of
    recurrent states and the power n at which every pair of rows is either
    within ``tol`` or at distance above 1 - ``tol`` in total variation.
    """
    M, index = float_matrix(ps)
    g = digraph(ps)
    recurrent = sorted(s for comp in nx.attracting_components(g) for s in comp)
    adj = M > 0
    L = 1
    for s in recurrent:
        L = math.lcm(L, matrix_period(adj, index[s]))
    Q = np.linalg.matrix_power(M, L)
    idx = [index[s] for s in recurrent]
    n = 1
    while n <= max_power:
        Q2 = Q @ Q
        if np.abs(Q2 - Q).max() < tol:
            rows = Q2[idx]
            tv = 0.5 * np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2)
            assert np.all((tv < tol) | (tv > 1 - tol)), "limit profiles overlap"
            classes, seen = [], set()
            for a, s in enumerate(recurrent):
                if s in seen:
                    continue
                cls = frozenset(recurrent[b] for b in np.nonzero(tv[a] < tol)[0])
                seen |= cls
                classes.append(cls)
            return set(classes), n
        Q = Q2
        n *= 2
    raise AssertionError("transfer-matrix rows did not separate within max_power")


def brute_chain_levels(displacement, steps):
    """Single-cell uniform drift: level after n steps."""
    return [i * displacement for i in range(steps)]


def conjugacy_holds(ps, t1, maps, refined):
    """State-by-state check of Phi o T = T1 o Phi for a fiber relabeling.

    ``maps[c][i]`` is the new level of fiber i over cell c. Without
    refinement Phi(c, i) = (c, maps[c][i]); with it, T1 lives on the 2-block
    base and Phi(c, i) is read at the cell pair (c, next cell).
    """
    base = ps.base
    succ = {c: [d for d, p in enumerate(base.transition[c]) if p > 0] for c in range(base.size)}
    t1_edges = {s: dict(t1.edges[s]) for s in t1.states}
    for c in range(base.size):
        for i in range(ps.fiber.size):
            j = ps.action.maps[c][i]
            for c2 in succ[c]:
                if not refined:
                    got = t1_edges[(c, maps[c][i])]
                    if got.get((c2, maps[c2][j])) != base.transition[c][c2]:
                        return False
                    continue
                here = t1.base.cells.index((base.cells[c], base.cells[c2]))
                for c3 in succ[c2]:
                    nxt = t1.base.cells.index((base.cells[c2], base.cells[c3]))
                    if t1_edges[(here, maps[c][i])].get((nxt, maps[c2][j])) != base.transition[c2][c3]:
                        return False
    return True


def k_suite(count=20, seed=777, max_cells=3, max_fibers=3):
    """Two-sided test configs: (base, action, fiber) over small primitive bases."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(1, max_cells)
        k = rng.randint(1, max_fibers)
        base = base_from_matrix(random_primitive_matrix(rng, n))
        out.append((base, random_permutation_action(rng, n, k), FiberSet.finite(k)))
    return out
