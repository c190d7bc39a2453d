"""Integer-lattice fibers: recurrent versus drifting walks.

With steps +1 and -1 chosen by a fair coin the fiber walk is recurrent and
its tail sees only the parity of the position: two infinite atoms. A
constant +1 step escapes to infinity, so the extension is dissipative.
The fiber is truncated to a finite window; results are stable once the
window is wide enough, which the demo checks by widening it.
"""

from tailatlas import FiberAction, FiberSet, SymbolicBaseSystem, build_product, decompose, full_shift


def describe(label, ps):
    (comp,) = decompose(ps).components
    print(f"{label:>22}: {comp.kind}, period {comp.period}, conservative={comp.conservative}, drift={comp.drift}")

for window in (6, 8):
    describe(f"+-1 walk, window {window}",
             build_product(full_shift(2), FiberSet.lattice(1, window), FiberAction.translations([1, -1])))

one_cell = SymbolicBaseSystem(("x",), [[1]], [1])
describe("+1 drift, window 6", build_product(one_cell, FiberSet.lattice(1, 6), FiberAction.translations([1])))
