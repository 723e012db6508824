"""Exact solvers for the discrete transportation problem.

Given supplies a_i, demands b_j (equal totals) and costs c_ij, find a
flow x >= 0 with row sums a and column sums b minimising sum x_ij c_ij.
This is the optimisation underlying the Kantorovich distance between
finite distributions; the optimal flow is the optimal coupling.

Two independent routes are provided:

* :func:`solve_transport` -- transportation simplex on the bipartite
  support graph.  All pivoting is done in exact ``Fraction`` arithmetic
  with Bland's anti-cycling rule, so it terminates and the optimum is
  exact.  The basic flow doubles as the coupling witness.

* :func:`brute_force_transport` -- enumerates every basic feasible
  solution (spanning trees of the complete bipartite graph) and takes
  the cheapest.  Exponential, only for cross-checking small instances.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

Flow = Dict[Tuple[int, int], Fraction]


class TransportError(ValueError):
    pass


def _validate(supplies, demands, costs) -> None:
    if not supplies or not demands:
        raise TransportError("empty transportation instance")
    if any(a < 0 for a in supplies) or any(b < 0 for b in demands):
        raise TransportError("negative supply or demand")
    if sum(supplies) != sum(demands):
        raise TransportError(
            f"unbalanced instance: supply {sum(supplies)} != demand {sum(demands)}"
        )
    if len(costs) != len(supplies) or any(len(row) != len(demands) for row in costs):
        raise TransportError("cost matrix shape mismatch")


def solve_transport(
    supplies: Sequence[Fraction],
    demands: Sequence[Fraction],
    costs: Sequence[Sequence[Fraction]],
) -> Tuple[Fraction, Flow]:
    """Exact minimum-cost transportation plan.

    Returns ``(optimal_cost, flow)`` where ``flow`` maps basic cells
    (i, j) to their (possibly zero) shipped amount.  Rows or columns
    with zero supply/demand are allowed and receive no flow.
    """
    supplies = [Fraction(a) for a in supplies]
    demands = [Fraction(b) for b in demands]
    costs = [[Fraction(c) for c in row] for row in costs]
    _validate(supplies, demands, costs)

    # Drop zero rows/columns; they carry no mass.
    rows = [i for i, a in enumerate(supplies) if a > 0]
    cols = [j for j, b in enumerate(demands) if b > 0]
    if not rows:
        return Fraction(0), {}
    a = [supplies[i] for i in rows]
    b = [demands[j] for j in cols]
    c = [[costs[i][j] for j in cols] for i in rows]
    m, n = len(a), len(b)

    # Northwest-corner initial basis (m + n - 1 cells, zeros kept for
    # degeneracy).
    x: Flow = {}
    basis: List[Tuple[int, int]] = []
    i = j = 0
    rem_a = a[:]
    rem_b = b[:]
    while i < m and j < n:
        q = min(rem_a[i], rem_b[j])
        x[(i, j)] = q
        basis.append((i, j))
        rem_a[i] -= q
        rem_b[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if rem_a[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1

    def duals() -> Tuple[List[Fraction], List[Fraction]]:
        u: List = [None] * m
        v: List = [None] * n
        u[0] = Fraction(0)
        by_row: Dict[int, List[int]] = {}
        by_col: Dict[int, List[int]] = {}
        for (bi, bj) in basis:
            by_row.setdefault(bi, []).append(bj)
            by_col.setdefault(bj, []).append(bi)
        stack = [("r", 0)]
        while stack:
            kind, k = stack.pop()
            if kind == "r":
                for bj in by_row.get(k, []):
                    if v[bj] is None:
                        v[bj] = c[k][bj] - u[k]
                        stack.append(("c", bj))
            else:
                for bi in by_col.get(k, []):
                    if u[bi] is None:
                        u[bi] = c[bi][k] - v[k]
                        stack.append(("r", bi))
        if any(ui is None for ui in u) or any(vj is None for vj in v):
            raise TransportError("disconnected basis (internal error)")
        return u, v

    def cycle_from(cell: Tuple[int, int]) -> List[Tuple[int, int]]:
        # Unique alternating cycle in basis + {cell}: path in the basis
        # tree from row node cell[0] to column node cell[1].
        adj: Dict[object, List[Tuple[object, Tuple[int, int]]]] = {}
        for (bi, bj) in basis:
            adj.setdefault(("r", bi), []).append((("c", bj), (bi, bj)))
            adj.setdefault(("c", bj), []).append((("r", bi), (bi, bj)))
        start, goal = ("r", cell[0]), ("c", cell[1])
        prev: Dict[object, Tuple[object, Tuple[int, int]]] = {start: (None, None)}
        stack = [start]
        while stack:
            node = stack.pop()
            if node == goal:
                break
            for nxt, edge in adj.get(node, []):
                if nxt not in prev:
                    prev[nxt] = (node, edge)
                    stack.append(nxt)
        path_cells = []
        node = goal
        while node != start:
            node, edge = prev[node]
            path_cells.append(edge)
        path_cells.reverse()
        return [cell] + path_cells

    guard = 0
    degenerate_streak = 0
    bland = False  # switch to Bland's rule if degeneracy threatens cycling
    while True:
        guard += 1
        if guard > 200000:
            raise TransportError("pivot limit exceeded (internal error)")
        u, v = duals()
        entering = None
        best = Fraction(0)
        for bi in range(m):
            ui = u[bi]
            row = c[bi]
            for bj in range(n):
                if (bi, bj) in x:
                    continue
                rc = row[bj] - ui - v[bj]
                if rc < 0:
                    if bland:
                        entering = (bi, bj)
                        break
                    if rc < best:
                        best = rc
                        entering = (bi, bj)
            if bland and entering:
                break
        if entering is None:
            break
        cyc = cycle_from(entering)
        minus = cyc[1::2]
        theta = min(x[cell] for cell in minus)
        if theta == 0:
            degenerate_streak += 1
            if degenerate_streak > 2 * (m + n):
                bland = True
        else:
            degenerate_streak = 0
        leaving = min(cell for cell in minus if x[cell] == theta)
        x[entering] = Fraction(0)
        basis.append(entering)
        for k, cell in enumerate(cyc):
            x[cell] = x[cell] + theta if k % 2 == 0 else x[cell] - theta
        del x[leaving]
        basis.remove(leaving)

    cost = sum((x[cell] * c[cell[0]][cell[1]] for cell in x), Fraction(0))
    flow: Flow = {}
    for (bi, bj), q in x.items():
        if q > 0:
            flow[(rows[bi], cols[bj])] = q
    return cost, flow


def brute_force_transport(
    supplies: Sequence[Fraction],
    demands: Sequence[Fraction],
    costs: Sequence[Sequence[Fraction]],
) -> Tuple[Fraction, Flow]:
    """Oracle: cheapest vertex of the transportation polytope.

    Every vertex is the flow of a spanning tree of the complete
    bipartite support graph, so enumerating trees and keeping the
    feasible ones finds the exact optimum.  Independent of the simplex
    code path.
    """
    supplies = [Fraction(a) for a in supplies]
    demands = [Fraction(b) for b in demands]
    costs = [[Fraction(c) for c in row] for row in costs]
    _validate(supplies, demands, costs)

    rows = [i for i, a in enumerate(supplies) if a > 0]
    cols = [j for j, b in enumerate(demands) if b > 0]
    if not rows:
        return Fraction(0), {}
    a = [supplies[i] for i in rows]
    b = [demands[j] for j in cols]
    m, n = len(a), len(b)
    cells = [(i, j) for i in range(m) for j in range(n)]

    best: Tuple[Fraction, Flow] | None = None
    for tree in itertools.combinations(cells, m + n - 1):
        # Solve flows by leaf elimination; infeasible trees are skipped.
        deg: Dict[object, int] = {}
        for (i, j) in tree:
            deg[("r", i)] = deg.get(("r", i), 0) + 1
            deg[("c", j)] = deg.get(("c", j), 0) + 1
        if len(deg) != m + n:
            continue
        rem_a = a[:]
        rem_b = b[:]
        remaining = set(tree)
        flow: Flow = {}
        ok = True
        while remaining:
            leaf = None
            for (i, j) in sorted(remaining):
                if deg[("r", i)] == 1 or deg[("c", j)] == 1:
                    leaf = (i, j)
                    break
            if leaf is None:
                ok = False  # cycle
                break
            i, j = leaf
            q = rem_a[i] if deg[("r", i)] == 1 else rem_b[j]
            if q < 0:
                ok = False
                break
            flow[leaf] = q
            rem_a[i] -= q
            rem_b[j] -= q
            deg[("r", i)] -= 1
            deg[("c", j)] -= 1
            remaining.remove(leaf)
        if not ok or any(q < 0 for q in flow.values()):
            continue
        if any(q != 0 for q in rem_a) or any(q != 0 for q in rem_b):
            continue
        cost = sum(
            (q * costs[rows[i]][cols[j]] for (i, j), q in flow.items()), Fraction(0)
        )
        if best is None or cost < best[0]:
            best = (
                cost,
                {(rows[i], cols[j]): q for (i, j), q in flow.items() if q > 0},
            )
    if best is None:
        raise TransportError("no feasible vertex found (internal error)")
    return best
