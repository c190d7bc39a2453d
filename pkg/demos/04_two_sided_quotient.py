"""Two-sided base: the fiber only reads the forward coordinates.

An invertible Markov shift is not exact, but a fiber action that depends on
the present symbol factors through the one-sided shift. Truncating the
two-sided words at several depths gives the same tail partition each time.
"""

from tailatlas import FiberAction, TwoSidedSymbolicSystem, build_quotient, decompose_k, full_shift
from tailatlas.k_quotient import atom_signature

parity = FiberAction.permutations([[1, 0], [1, 0]])
for depth in (1, 2, 3):
    ts = TwoSidedSymbolicSystem(full_shift(2), depth)
    report = decompose_k(ts, parity)
    quotient = report.extra["quotient_result"]
    (comp,) = report.components
    print(f"depth {depth}: {len(ts.words())} words -> {quotient.quotient_base.size} quotient cells, "
          f"period {comp.period}, signature {atom_signature(report, quotient.product)}")

# The quotient map is just the forward block; its construction checks itself.
res = build_quotient(TwoSidedSymbolicSystem(full_shift(2), 2), parity)
print("quotient checks:", [(c.name, c.passed) for c in res.checks])
