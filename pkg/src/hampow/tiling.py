"""Transversal clique enumeration, perfect fractional tilings by exact rational
LP with a dual certificate, exact-cover integral tilings, and a direct greedy
path cover guided by the fractional solution.

Every feasibility and optimality decision is made in exact arithmetic; there is
no floating tolerance anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import GraphValidationError, SearchExhaustedError
from .graphs import Config, MultipartiteGraph
from .paths import VertexSeq, is_path, is_properly_terminated


def enumerate_cliques(graph: MultipartiteGraph, r: int) -> list[tuple[int, ...]]:
    """All r-cliques with one vertex in each of r distinct parts, in part order.

    Backtracking over parts in ascending index with common-neighborhood pruning.
    """
    out: list[tuple[int, ...]] = []
    k = graph.k

    def rec(start: int, chosen: list[int], common: frozenset[int] | None):
        depth = len(chosen)
        if depth == r:
            out.append(tuple(chosen))
            return
        for p in range(start, k - (r - depth) + 1):
            pool = graph.parts[p] if common is None else [v for v in graph.parts[p] if v in common]
            for v in pool:
                nxt = graph.adj[v] if common is None else common & graph.adj[v]
                chosen.append(v)
                rec(p + 1, chosen, nxt)
                chosen.pop()

    rec(0, [], None)
    return out


def _simplex_max(
    columns: Sequence[Sequence[int]], m: int
) -> tuple[Fraction, list[Fraction], list[Fraction]]:
    """Maximize sum(x) over column-incidence constraints A x <= 1, x >= 0.

    columns[j] lists the rows with a one in column j.  Returns (value, x, y)
    where y is the dual certificate (row prices).  Bland's rule, exact rationals.
    """
    ncols = len(columns)
    width = ncols + m + 1
    rows: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(0)] * width
        row[-1] = Fraction(1)
        row[ncols + i] = Fraction(1)
        rows.append(row)
    for j, col in enumerate(columns):
        for i in col:
            rows[i][j] = Fraction(1)
    obj = [Fraction(-1)] * ncols + [Fraction(0)] * (m + 1)
    basis = [ncols + i for i in range(m)]

    while True:
        enter = next((j for j in range(ncols + m) if obj[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        assert leave is not None, "the tiling LP is bounded"
        piv = rows[leave][enter]
        rows[leave] = [v / piv for v in rows[leave]]
        for i in range(m):
            if i != leave and rows[i][enter]:
                f = rows[i][enter]
                rows[i] = [v - f * p for v, p in zip(rows[i], rows[leave])]
        if obj[enter]:
            f = obj[enter]
            obj = [v - f * p for v, p in zip(obj, rows[leave])]
        basis[leave] = enter

    x = [Fraction(0)] * ncols
    for i, bi in enumerate(basis):
        if bi < ncols:
            x[bi] = rows[i][-1]
    y = [obj[ncols + i] for i in range(m)]
    return obj[-1], x, y


@dataclass(frozen=True)
class FractionalTiling:
    """Rational weights on transversal cliques with per-vertex load at most one,
    together with the LP optimum and its dual certificate."""

    n: int
    r: int
    weights: dict[tuple[int, ...], Fraction]
    value: Fraction
    dual: tuple[Fraction, ...]

    @property
    def is_perfect(self) -> bool:
        return self.value == Fraction(self.n, self.r)

    def load(self, v: int) -> Fraction:
        return sum((w for K, w in self.weights.items() if v in K), Fraction(0))

    def to_json_list(self) -> list[dict]:
        return [
            {"clique": list(K), "weight": str(w)}
            for K, w in sorted(self.weights.items())
        ]


def fractional_tiling(graph: MultipartiteGraph, r: int) -> FractionalTiling:
    """Exact LP relaxation of the perfect tiling problem; perfect iff the optimum
    equals n/r.  The dual certificate is audited before returning."""
    if graph.k != r:
        raise GraphValidationError("fractional tiling expects an r-partite graph")
    cliques = enumerate_cliques(graph, r)
    value, x, y = _simplex_max([K for K in cliques], graph.n)
    weights = {K: w for K, w in zip(cliques, x) if w > 0}
    tiling = FractionalTiling(
        n=graph.n, r=r, weights=weights, value=value, dual=tuple(y)
    )
    # Exact duality audit: primal feasible, dual feasible, objectives equal.
    for v in range(graph.n):
        assert tiling.load(v) <= 1
    assert all(p >= 0 for p in y)
    for K in cliques:
        assert sum(y[v] for v in K) >= 1
    assert sum(y) == value == sum(weights.values(), Fraction(0))
    return tiling


def perfect_tiling_bruteforce(
    graph: MultipartiteGraph, r: int
) -> list[tuple[int, ...]] | None:
    """Exact-cover search for a perfect tiling by transversal cliques.

    Branches on the uncovered vertex contained in the fewest remaining cliques.
    """
    if graph.n % r != 0:
        raise GraphValidationError(f"n={graph.n} is not divisible by r={r}")
    cliques = enumerate_cliques(graph, r)
    by_vertex: list[list[tuple[int, ...]]] = [[] for _ in range(graph.n)]
    for K in cliques:
        for v in K:
            by_vertex[v].append(K)

    chosen: list[tuple[int, ...]] = []
    covered: set[int] = set()

    def rec() -> bool:
        if len(covered) == graph.n:
            return True
        pivot, options = None, None
        for v in range(graph.n):
            if v in covered:
                continue
            opts = [K for K in by_vertex[v] if not covered.intersection(K)]
            if options is None or len(opts) < len(options):
                pivot, options = v, opts
                if not opts:
                    return False
        assert options is not None
        for K in options:
            chosen.append(K)
            covered.update(K)
            if rec():
                return True
            chosen.pop()
            covered.difference_update(K)
        return False

    return chosen if rec() else None


@dataclass(frozen=True)
class PathCover:
    """Disjoint properly terminated power-paths plus the balanced leftover."""

    paths: tuple[VertexSeq, ...]
    leftover: frozenset[int]
    allocation: tuple[dict, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "paths": [p.to_json() for p in self.paths],
            "leftover": sorted(self.leftover),
        }


def cover_with_paths(
    graph: MultipartiteGraph, r: int, alpha: Fraction, cfg: Config
) -> PathCover:
    """Cover all but alpha*n vertices by properly terminated power-paths.

    Greedy clique chaining guided by the fractional tiling: heavier support
    cliques are preferred as building blocks, paths grow while the next clique
    splices legally, reshuffled retries on shortfall.  The leftover of a
    balanced host is automatically balanced because every path meets all parts
    equally.
    """
    if graph.k != r:
        raise GraphValidationError("path cover expects an r-partite graph")
    sizes = {len(p) for p in graph.parts}
    if len(sizes) != 1:
        raise GraphValidationError("path cover expects a balanced host")
    n = graph.n
    target = alpha * n

    tiling = fractional_tiling(graph, r)
    support = sorted(tiling.weights, key=lambda K: (-tiling.weights[K], K))
    others = sorted(K for K in enumerate_cliques(graph, r) if K not in tiling.weights)
    ordered = support + others
    allocation = _allocation_report(tiling, alpha)

    rng = cfg.rng("cover")
    best: int | None = None
    for attempt in range(cfg.retry_limit):
        order = ordered[:]
        if attempt:
            rng.shuffle(order)
        used: set[int] = set()
        paths: list[VertexSeq] = []

        def next_clique(tail: Sequence[int]) -> tuple[int, ...] | None:
            for K in order:
                if used.intersection(K):
                    continue
                if tail and not _splices(graph, tail, K, r):
                    continue
                return K
            return None

        while n - len(used) > target:
            current: list[int] = []
            while True:
                K = next_clique(current[-r:])
                if K is None:
                    break
                current.extend(K)
                used.update(K)
                if n - len(used) <= target:
                    break
            if not current:
                break
            paths.append(VertexSeq(tuple(current), r))

        leftover = frozenset(v for v in range(n) if v not in used)
        if len(leftover) <= target and _balanced(graph, leftover):
            for p in paths:
                assert is_path(graph, p) and is_properly_terminated(graph, p)
            return PathCover(tuple(paths), leftover, allocation)
        if best is None or len(leftover) < best:
            best = len(leftover)
    raise SearchExhaustedError(
        f"cover shortfall after {cfg.retry_limit} attempts: best leftover {best} > {target}"
    )


def _splices(graph: MultipartiteGraph, tail: Sequence[int], clique: Sequence[int], r: int) -> bool:
    """Appending a part-ordered clique after a part-ordered tail keeps all windows."""
    for b, w in enumerate(clique, start=1):
        nb = graph.adj[w]
        for a in range(b + 1, r + 1):
            if a <= len(tail) and tail[a - 1] not in nb:
                return False
    return True


def _balanced(graph: MultipartiteGraph, vertices: Iterable[int]) -> bool:
    counts = [0] * graph.k
    for v in vertices:
        counts[graph.part_of(v)] += 1
    return len(set(counts)) == 1


def _allocation_report(tiling: FractionalTiling, alpha: Fraction) -> tuple[dict, ...]:
    """Report-only bookkeeping: per support clique, floor((1-alpha) * w * m) with
    m the common part size, mirroring the allocation arithmetic the regularity
    proof would perform on clusters."""
    m = tiling.n // tiling.r if tiling.r else 0
    rows = []
    for K, w in sorted(tiling.weights.items()):
        z = int((1 - alpha) * w * m)  # floor: the operands are exact rationals
        rows.append({"clique": list(K), "weight": str(w), "z": z})
    return tuple(rows)
