"""Shared helpers: independent brute-force checkers the tests trust instead of
the library's own predicates."""

from __future__ import annotations

import itertools

from hampow.graphs import MultipartiteGraph, gen_random


def complete(k: int, sizes) -> MultipartiteGraph:
    return gen_random(k, list(sizes), 1, 0)


def naive_is_walk(graph: MultipartiteGraph, seq, r: int) -> bool:
    """Window-by-window clique check, straight from the definition."""
    vs = list(seq)
    if len(vs) < r:
        return True
    for t in range(len(vs) - r + 1):
        window = vs[t : t + r]
        for a, b in itertools.combinations(window, 2):
            if a == b or b not in graph.adj[a]:
                return False
    return True


def naive_is_cycle(graph: MultipartiteGraph, order, r: int) -> bool:
    """Cyclic windows over a candidate spanning order."""
    vs = list(order)
    n = len(vs)
    if n != graph.n or set(vs) != set(range(n)):
        return False
    for t in range(n):
        window = [vs[(t + d) % n] for d in range(r)]
        for a, b in itertools.combinations(window, 2):
            if a == b or b not in graph.adj[a]:
                return False
    return True


def naive_cycle_exists(graph: MultipartiteGraph, r: int) -> bool:
    """Permutation enumeration with the first position pinned; only for tiny n."""
    n = graph.n
    if n == 0:
        return True
    for rest in itertools.permutations(range(1, n)):
        if naive_is_cycle(graph, (0,) + rest, r):
            return True
    return False
