"""Two permutation extensions of the fair coin that look alike but split differently.

Over the full 2-shift, "swap" exchanges the two fiber points on symbol b
only, while "parity" exchanges them on every step. The first extension is
exact; the second carries a deterministic period-2 rotation, so its tail
splits into two atoms that trade places at each step.
"""

from fractions import Fraction

from tailatlas import FiberAction, FiberSet, build_product, decompose, full_shift, relabel_levels

EXTENSIONS = {
    "swap": [[0, 1], [1, 0]],
    "parity": [[1, 0], [1, 0]],
}

for name, maps in EXTENSIONS.items():
    ps = build_product(full_shift(2), FiberSet.finite(2), FiberAction.permutations(maps))
    report = decompose(ps)
    print(f"--- {name}")
    for comp in report.components:
        print(f"  {comp.kind} of period {comp.period}, {comp.fiber_count} fiber point(s) per cell")
        for atom in comp.atoms:
            share = Fraction(atom.measure)
            print(f"    atom {atom.index}: {sorted(atom.states)}  measure {share}")
    # Relabeling makes each atom a union of whole fiber levels.
    _, table = relabel_levels(report, ps)
    print(f"  level relabeling verified: {table.verification.passed}")
