"""A base with two closed classes and a transient feeder cell.

Cell t leaks into two disjoint full shifts {a, b} and {c, d}. Each closed
class carries its own fiber dynamics, and every atom of the extension sits
over exactly one cyclic class of the base.
"""

from fractions import Fraction

from tailatlas import FiberAction, FiberSet, SymbolicBaseSystem, build_product, decompose, project_atoms

h, q = Fraction(1, 2), Fraction(1, 4)
base = SymbolicBaseSystem(
    ("a", "b", "c", "d", "t"),
    [[h, h, 0, 0, 0], [h, h, 0, 0, 0], [0, 0, h, h, 0], [0, 0, h, h, 0], [q, q, q, q, 0]],
    [q, q, q, q, q],
)
# identity on the first class, a 3-cycle on the second
action = FiberAction.permutations([[0, 1, 2], [0, 1, 2], [1, 2, 0], [1, 2, 0], [0, 1, 2]])
report = decompose(build_product(base, FiberSet.finite(3), action))

print("transient cells:", report.transient_cells)
for k, comp in enumerate(report.components):
    cells = sorted(report.base_classes[comp.base_class])
    print(f"component {k} over {cells}: {comp.kind}, period {comp.period}, {len(comp.atoms)} atom(s)")
print("every atom projects onto a base atom:", project_atoms(report).passed)
