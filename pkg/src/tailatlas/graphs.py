"""Finite directed-graph machinery: communication classes, periods, cyclic classes.

Graphs are adjacency mappings ``node -> iterable of successors``. Nodes must
be mutually comparable; every result is returned in canonical (sorted) order
so that downstream reports do not depend on dict iteration order.
"""

from collections import deque
from math import gcd


def strongly_connected_components(succ):
    """Tarjan's algorithm, iterative. Components sorted, listed by least node."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = 0
    for root in sorted(succ):
        if root in index:
            continue
        work = [(root, iter(sorted(succ[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(succ[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def closed_classes(succ, components=None):
    """Split components into (closed, transient): closed = no edge leaves it."""
    if components is None:
        components = strongly_connected_components(succ)
    closed, transient = [], []
    for comp in components:
        members = set(comp)
        if all(w in members for v in comp for w in succ[v]):
            closed.append(comp)
        else:
            transient.append(comp)
    return closed, transient


def class_period(succ, nodes):
    """gcd of cycle lengths inside a strongly connected node set.

    Uses BFS depths d: the period is gcd over internal edges u->v of
    d(u) + 1 - d(v). A single node without a self-loop has no cycles; 0 is
    returned for it.
    """
    members = set(nodes)
    depth = _bfs_depths(succ, min(members), members)
    g = 0
    for u in members:
        for v in succ[u]:
            if v in members:
                g = gcd(g, abs(depth[u] + 1 - depth[v]))
    return g


def cyclic_classes(succ, nodes, period=None):
    """Cyclic classes of an irreducible node set, in image order.

    Class 0 contains the least node; every edge leads from class k to class
    k+1 mod period.
    """
    members = set(nodes)
    if period is None:
        period = class_period(succ, members)
    if period <= 1:
        return [sorted(members)]
    depth = _bfs_depths(succ, min(members), members)
    classes = [[] for _ in range(period)]
    for v in members:
        classes[depth[v] % period].append(v)
    return [sorted(c) for c in classes]


def reachable(succ, sources):
    seen = set(sources)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def _bfs_depths(succ, root, members):
    depth = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in sorted(succ[v]):
            if w in members and w not in depth:
                depth[w] = depth[v] + 1
                queue.append(w)
    return depth
