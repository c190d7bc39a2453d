"""Subgroups of Z^n in Hermite normal form.

A subgroup is stored as the echelon rows of its Hermite normal form: pivots
strictly increase, pivot entries are positive, and entries above a pivot are
reduced into [0, pivot). Reduction of a vector against such a basis gives a
canonical coset representative, which is what the lattice decomposition uses
as an atom label.
"""

from fractions import Fraction
from math import gcd


def hermite_basis(vectors, dim):
    rows = [list(map(int, v)) for v in vectors if any(v)]
    out = []
    for col in range(dim):
        while True:
            nz = [k for k, r in enumerate(rows) if r[col] != 0]
            if len(nz) <= 1:
                break
            k0 = min(nz, key=lambda k: abs(rows[k][col]))
            for k in nz:
                if k != k0:
                    q = rows[k][col] // rows[k0][col]
                    rows[k] = [a - q * b for a, b in zip(rows[k], rows[k0])]
        nz = [k for k, r in enumerate(rows) if r[col] != 0]
        if nz:
            row = rows.pop(nz[0])
            if row[col] < 0:
                row = [-a for a in row]
            out.append(row)
        rows = [r for r in rows if any(r)]
    for i, row in enumerate(out):
        p = pivot(row)
        for j in range(i):
            q = out[j][p] // row[p]
            if q:
                out[j] = [a - q * b for a, b in zip(out[j], row)]
    return [tuple(r) for r in out]


def pivot(row):
    return next(k for k, a in enumerate(row) if a != 0)


def reduce(vector, basis):
    """Canonical representative of ``vector`` modulo the subgroup."""
    v = list(vector)
    for row in basis:
        p = pivot(row)
        q = v[p] // row[p]
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    return tuple(v)


def contains(basis, vector):
    return not any(reduce(vector, basis))


def order_of(vector, basis):
    """Least m > 0 with m*vector in the subgroup, or None if there is none."""
    v = [Fraction(a) for a in vector]
    coeffs = []
    for row in basis:
        p = pivot(row)
        c = v[p] / row[p]
        coeffs.append(c)
        v = [a - c * b for a, b in zip(v, row)]
    if any(v):
        return None
    m = 1
    for c in coeffs:
        m = m * c.denominator // gcd(m, c.denominator)
    return m


def describe(basis, dim):
    """Human-readable summary: rank, index when full rank, generators."""
    rank = len(basis)
    index = None
    if rank == dim:
        index = 1
        for row in basis:
            index *= row[pivot(row)]
    return {"rank": rank, "index": index, "generators": [list(r) for r in basis]}
