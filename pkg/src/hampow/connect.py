"""Exact counting and sampling of connecting walks between terminated walks,
plus the rich/poor neighborhood predicate.

The count is exact dynamic programming over the last r-1 chosen vertices; no
lower-bound constants are involved.  Sampling back-traces the DP table with
probability proportional to the counts, so every connecting walk is equally
likely.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import GraphValidationError, SearchExhaustedError
from .graphs import Config, MultipartiteGraph
from .paths import VertexSeq, final_respects, initial_respects, is_walk

# Default connecting length from the construction: r * (2r - 2).
def default_connector_length(r: int) -> int:
    return r * (2 * r - 2)


State = tuple[int, ...]


@dataclass(frozen=True)
class WalkDPTable:
    """Layered exact counts: layers[t] maps the last r-1 vertices of a legal
    t-step extension to the number of such extensions; the final layer is
    filtered by the right-hand terminal, so its total is the connecting count."""

    ell: int
    layers: tuple[dict[State, int], ...]
    final: dict[State, int]

    @property
    def total(self) -> int:
        return sum(self.final.values())


def _check_terminated(
    graph: MultipartiteGraph,
    seq: VertexSeq,
    part_order: Sequence[int],
    which: str,
) -> None:
    r = len(part_order)
    if len(seq) < r:
        raise GraphValidationError(f"{which} has fewer than r={r} vertices")
    if not is_walk(graph, seq):
        raise GraphValidationError(f"{which} is not a power-walk")
    parts = [graph.parts[i] for i in part_order]
    head = initial_respects(seq.vertices, parts)
    tail = final_respects(seq.vertices, parts)
    if not (head and tail):
        raise GraphValidationError(
            f"{which} is ill-terminated with respect to the given set sequence"
        )


def count_connecting_walks(
    graph: MultipartiteGraph,
    u_sets: Sequence[Iterable[int]],
    p1: VertexSeq,
    p2: VertexSeq,
    ell: int,
) -> tuple[int, WalkDPTable]:
    """Exact number of length-ell walks Q inside the union of the given sets such
    that p1 Q p2 is a power-walk.  Repeated vertices are allowed in Q."""
    r = p1.r
    if ell < 1:
        raise GraphValidationError("connector length must be at least 1")
    u_frozen = [frozenset(u) for u in u_sets]
    if len(u_frozen) != r:
        raise GraphValidationError(f"expected r={r} sets")
    part_order = []
    for i, u in enumerate(u_frozen):
        owners = {graph.part_of(v) for v in u}
        if len(owners) != 1:
            raise GraphValidationError(f"set {i} must lie inside a single part")
        part_order.append(owners.pop())
    if len(set(part_order)) != r:
        raise GraphValidationError("the sets must lie in r distinct parts")
    _check_terminated(graph, p1, part_order, "P1")
    _check_terminated(graph, p2, part_order, "P2")

    pool = sorted(frozenset().union(*u_frozen))
    pool_set = frozenset(pool)
    in_pool = {v: graph.adj[v] & pool_set for v in pool}
    for v in set(p1.vertices) | set(p2.vertices):
        in_pool.setdefault(v, graph.adj[v] & pool_set)
    window = r - 1
    seed: State = p1.vertices[-window:]
    layers: list[dict[State, int]] = [{seed: 1}]
    for _ in range(ell):
        nxt: dict[State, int] = {}
        for state, cnt in layers[-1].items():
            cands = frozenset.intersection(*(in_pool[u] for u in state))
            for w in cands:
                key = state[1:] + (w,)
                nxt[key] = nxt.get(key, 0) + cnt
        layers.append(nxt)

    head = p2.vertices[:window]
    final: dict[State, int] = {}
    for state, cnt in layers[-1].items():
        if _accepts(graph, state, head):
            final[state] = cnt
    table = WalkDPTable(ell=ell, layers=tuple(layers), final=final)
    return table.total, table


def _accepts(graph: MultipartiteGraph, state: State, head: Sequence[int]) -> bool:
    """Cross-seam windows between the last r-1 chosen vertices and the right head."""
    w = len(state)
    for b, v in enumerate(head, start=1):
        nb = graph.adj[v]
        for j in range(1, w + 1):
            # state[j-1] sits b + (w - j) + ... positions before v; adjacency is
            # required when that distance is at most r-1 = w.
            if (w - j) + b <= w and state[j - 1] not in nb:
                return False
    return True


def find_connector(
    graph: MultipartiteGraph,
    u_sets: Sequence[Iterable[int]],
    p1: VertexSeq,
    p2: VertexSeq,
    ell: int,
    forbidden: Iterable[int],
    cfg: Config,
) -> VertexSeq:
    """Sample connecting walks uniformly until one is a path avoiding `forbidden`.

    Raises SearchExhaustedError (quoting the exact walk count) when the retry
    budget runs out or no connecting walk exists at all.
    """
    total, table = count_connecting_walks(graph, u_sets, p1, p2, ell)
    if total == 0:
        raise SearchExhaustedError("no connecting walks exist (exact count 0)")
    bad = set(forbidden)
    rng = cfg.rng("connector")
    r = p1.r
    for _ in range(cfg.retry_limit):
        walk = _sample_walk(graph, table, rng)
        if len(set(walk)) != len(walk) or any(v in bad for v in walk):
            continue
        q = VertexSeq(walk, r)
        assert is_walk(graph, p1.concat(q).concat(p2))
        return q
    raise SearchExhaustedError(
        f"no path connector found in {cfg.retry_limit} samples "
        f"({total} connecting walks exist)"
    )


def _sample_walk(graph: MultipartiteGraph, table: WalkDPTable, rng) -> State:
    """Back-trace the DP table proportionally to the counts."""
    state = _weighted_choice(rng, table.final)
    out = [state]
    for t in range(table.ell - 1, 0, -1):
        layer = table.layers[t]
        cur = out[-1]
        w = cur[-1]
        nb = graph.adj[w]
        cand: dict[State, int] = {}
        for u in range(graph.n):
            prev = (u,) + cur[:-1]
            cnt = layer.get(prev)
            # w had to be adjacent to all of prev; the shared overlap is already
            # certified by cur being reachable, only the dropped u needs checking.
            if cnt and u in nb:
                cand[prev] = cnt
        out.append(_weighted_choice(rng, cand))
    return tuple(state[-1] for state in reversed(out))


def _weighted_choice(rng, weighted: dict[State, int]) -> State:
    total = sum(weighted.values())
    pick = rng.randrange(total)
    for key, cnt in weighted.items():
        if pick < cnt:
            return key
        pick -= cnt
    raise AssertionError("weights were empty")


def is_rich(
    graph: MultipartiteGraph,
    w: VertexSeq | Sequence[int],
    u_set: Iterable[int],
    sigma: Fraction,
) -> bool:
    """At least sigma*n vertices of the set have the whole sequence in their
    neighborhood (vacuously satisfied containment for the empty sequence)."""
    vs = set(w.vertices if isinstance(w, VertexSeq) else w)
    count = sum(1 for u in u_set if vs <= graph.adj[u])
    return count >= sigma * graph.n
