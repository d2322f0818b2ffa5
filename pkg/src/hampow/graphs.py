"""Multipartite graph model, proportional degree statistics, generators, and part reductions.

Vertices are dense integers 0..n-1.  Parts are stored as sorted id tuples and the
part order is semantic: it is the ordered partition that every other module
(termination checks, templates, sequencing) refers to.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from math import ceil
from typing import IO, Iterable, NamedTuple, Sequence

from .errors import GraphFormatError, GraphValidationError, InfeasibleError


@dataclass(frozen=True)
class MultipartiteGraph:
    """A k-partite graph: ordered independent parts plus a symmetric adjacency."""

    parts: tuple[tuple[int, ...], ...]
    adj: tuple[frozenset[int], ...]
    name: str | None = None

    def __post_init__(self):
        self.validate()

    @property
    def n(self) -> int:
        return len(self.adj)

    @property
    def k(self) -> int:
        return len(self.parts)

    @cached_property
    def part_index(self) -> tuple[int, ...]:
        """part_index[v] is the index of the part containing v."""
        idx = [-1] * self.n
        for i, part in enumerate(self.parts):
            for v in part:
                idx[v] = i
        return tuple(idx)

    @cached_property
    def part_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(p) for p in self.parts)

    def part_of(self, v: int) -> int:
        return self.part_index[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def neighbors(self, v: int) -> frozenset[int]:
        return self.adj[v]

    def degree_into(self, v: int, target: Iterable[int]) -> int:
        nb = self.adj[v]
        return sum(1 for u in target if u in nb)

    def edges(self) -> list[tuple[int, int]]:
        """Canonical edge list: each pair sorted ascending, list sorted lexicographically."""
        return sorted((min(u, v), max(u, v)) for u in range(self.n) for v in self.adj[u] if u < v)

    def validate(self) -> None:
        n = self.n
        seen: set[int] = set()
        for part in self.parts:
            if list(part) != sorted(part):
                raise GraphValidationError("parts must be stored as sorted id lists")
            for v in part:
                if not 0 <= v < n:
                    raise GraphValidationError(f"vertex id {v} out of range 0..{n - 1}")
                if v in seen:
                    raise GraphValidationError(f"vertex {v} appears in more than one part")
                seen.add(v)
        if len(seen) != n:
            missing = next(v for v in range(n) if v not in seen)
            raise GraphValidationError(f"vertex {missing} is not covered by any part")
        part_of = [-1] * n
        for i, part in enumerate(self.parts):
            for v in part:
                part_of[v] = i
        for u in range(n):
            for v in self.adj[u]:
                if v == u:
                    raise GraphValidationError(f"self-loop at vertex {u}")
                if u not in self.adj[v]:
                    raise GraphValidationError(f"adjacency not symmetric on ({u},{v})")
                if part_of[u] == part_of[v]:
                    raise GraphValidationError(
                        f"edge inside part: ({u},{v}) both in part {part_of[u]}"
                    )

    @classmethod
    def from_edges(
        cls,
        parts: Sequence[Sequence[int]],
        edges: Iterable[Sequence[int]],
        name: str | None = None,
    ) -> "MultipartiteGraph":
        norm_parts = tuple(tuple(sorted(p)) for p in parts)
        n = sum(len(p) for p in norm_parts)
        adj: list[set[int]] = [set() for _ in range(n)]
        for e in edges:
            if len(e) != 2:
                raise GraphFormatError(f"edge {e!r} is not a 2-element pair")
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphValidationError(f"edge ({u},{v}) references a dangling vertex id")
            adj[u].add(v)
            adj[v].add(u)
        return cls(norm_parts, tuple(frozenset(s) for s in adj), name)

    def with_parts(self, order: Sequence[int]) -> "MultipartiteGraph":
        """Same graph with its parts permuted into the given order."""
        if sorted(order) != list(range(self.k)):
            raise GraphValidationError("part order must be a permutation of 0..k-1")
        return replace(self, parts=tuple(self.parts[i] for i in order))

    def to_json_dict(self) -> dict:
        doc: dict = {
            "k": self.k,
            "parts": [list(p) for p in self.parts],
            "edges": [list(e) for e in self.edges()],
        }
        if self.name is not None:
            doc["name"] = self.name
        return doc


def save_graph(graph: MultipartiteGraph) -> str:
    """Serialize to the canonical JSON format (bit-exact: sorted edges, fixed key order)."""
    return json.dumps(graph.to_json_dict(), separators=(",", ":"))


def load_graph(source: bytes | str | IO, fmt: str = "json") -> MultipartiteGraph:
    """Parse and validate a graph from a byte stream / string in the declared format."""
    if fmt != "json":
        raise GraphFormatError(f"unknown graph format tag {fmt!r}")
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphFormatError("graph document must be a JSON object")
    try:
        k = doc["k"]
        parts = doc["parts"]
        edges = doc["edges"]
    except KeyError as exc:
        raise GraphFormatError(f"missing required field {exc}") from exc
    if not isinstance(parts, list) or not all(isinstance(p, list) for p in parts):
        raise GraphFormatError("'parts' must be an array of arrays of ints")
    if k != len(parts):
        raise GraphValidationError(f"declared k={k} but {len(parts)} parts given")
    return MultipartiteGraph.from_edges(parts, edges, doc.get("name"))


@dataclass(frozen=True)
class DegreeProfile:
    """Minimum proportional degrees per ordered part pair, exact rationals."""

    delta_ij: tuple[tuple[Fraction | None, ...], ...]
    delta_p: Fraction

    def __post_init__(self):
        entries = [d for row in self.delta_ij for d in row if d is not None]
        if entries and (self.delta_p != min(entries) or not all(0 <= d <= 1 for d in entries)):
            raise GraphValidationError("inconsistent degree profile")


def degree_profile(graph: MultipartiteGraph) -> DegreeProfile:
    """Exact proportional minimum degree of every ordered part pair, and their minimum."""
    if graph.k < 2:
        raise GraphValidationError("degree profile needs at least two parts")
    for i, part in enumerate(graph.parts):
        if not part:
            raise GraphValidationError(f"part {i} is empty")
    rows: list[tuple[Fraction | None, ...]] = []
    overall: Fraction | None = None
    for i in range(graph.k):
        row: list[Fraction | None] = []
        for j in range(graph.k):
            if i == j:
                row.append(None)
                continue
            target = graph.parts[j]
            worst = min(graph.degree_into(v, target) for v in graph.parts[i])
            d = Fraction(worst, len(target))
            row.append(d)
            overall = d if overall is None else min(overall, d)
        rows.append(tuple(row))
    assert overall is not None
    return DegreeProfile(tuple(rows), overall)


@dataclass(frozen=True)
class Config:
    """Slack constants, seed and retry budget shared by the randomized routines."""

    r: int
    gamma: Fraction
    sigma: Fraction
    beta: Fraction
    nu: Fraction
    alpha: Fraction
    seed: int = 0
    retry_limit: int = 200

    def __post_init__(self):
        if self.r < 2:
            raise GraphValidationError("power parameter r must be at least 2")
        if not (0 < self.beta < self.sigma < self.gamma <= Fraction(1, self.r)):
            raise GraphValidationError("constants must satisfy 0 < beta < sigma < gamma <= 1/r")
        if self.retry_limit < 1:
            raise GraphValidationError("retry_limit must be at least 1")

    @classmethod
    def default(cls, r: int, seed: int = 0, **overrides) -> "Config":
        """Desk-scale defaults; sigma is kept below 1/(2r(r+1)) so the trim index stays <= r."""
        sigma = Fraction(1, 2 * r * (r + 1) + 1)
        base = dict(
            r=r,
            gamma=Fraction(1, 2 * r),
            sigma=sigma,
            beta=sigma / 8,
            nu=sigma,
            alpha=sigma,
            seed=seed,
        )
        base.update(overrides)
        return cls(**base)

    def floor_m(self, n: int) -> int:
        """Integer stand-in for beta*n; floored at 1 so every group stays nonempty."""
        return max(1, ceil(self.beta * n))

    def rng(self, label: str) -> random.Random:
        """Deterministic per-purpose stream derived from the seed."""
        return random.Random(f"{self.seed}:{label}")


def gen_random(
    k: int, sizes: Sequence[int], target_delta: Fraction | float, seed: int
) -> MultipartiteGraph:
    """Independent cross-part edges with the given probability; deterministic per seed.

    The realized degree profile may deviate from the target; callers recheck via
    degree_profile.
    """
    if k != len(sizes):
        raise GraphValidationError(f"k={k} but {len(sizes)} sizes given")
    if not 0 <= target_delta <= 1:
        raise GraphValidationError("target_delta must lie in [0,1]")
    parts = _parts_from_sizes(sizes)
    rng = random.Random(seed)
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            for u in parts[i]:
                for v in parts[j]:
                    if rng.random() < target_delta:
                        edges.append((u, v))
    return MultipartiteGraph.from_edges(parts, edges)


def gen_extremal(k: int, sizes: Sequence[int], r: int) -> MultipartiteGraph:
    """Complete k-partite graph minus all edges inside a planted oversized independent set.

    The planted set takes floor(|V_i|/r)+1 vertices from each part, so its size
    exceeds floor(n/r) and the graph has no spanning power-of-a-cycle.
    """
    if r < 2:
        raise GraphValidationError("r must be at least 2")
    parts = _parts_from_sizes(sizes)
    planted: set[int] = set()
    for part in parts:
        planted.update(part[: len(part) // r + 1])
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            for u in parts[i]:
                for v in parts[j]:
                    if u in planted and v in planted:
                        continue
                    edges.append((u, v))
    return MultipartiteGraph.from_edges(parts, edges)


def _parts_from_sizes(sizes: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    if any(s < 0 for s in sizes):
        raise GraphValidationError("part sizes must be nonnegative")
    parts = []
    next_id = 0
    for s in sizes:
        parts.append(tuple(range(next_id, next_id + s)))
        next_id += s
    return tuple(parts)


def balanced_sizes(n: int, k: int) -> list[int]:
    """Split n into k nearly equal descending sizes."""
    base, extra = divmod(n, k)
    return [base + 1] * extra + [base] * (k - extra)


class ReduceResult(NamedTuple):
    graph: MultipartiteGraph
    part_map: tuple[int, ...]


def reduce_parts(
    graph: MultipartiteGraph, r: int, tiny: Fraction | None = None
) -> ReduceResult:
    """Merge and split parts until r <= k' <= 2r-1 with no part below the tiny threshold.

    Merging takes the two smallest parts while their combined size is at most n/r
    (deleting the cross edges between them).  A part smaller than tiny*n is then
    dissolved greedily into the largest-remaining-capacity parts, subject to
    |V_i| <= n/r throughout.  Only deletions occur, so any spanning power-cycle of
    the output is one of the input.  Returns the graph (parts reordered by
    descending size) and the vertex-to-new-part mapping.
    """
    n = graph.n
    for i, part in enumerate(graph.parts):
        if r * len(part) > n:
            raise GraphValidationError(f"part {i} has size {len(part)} > n/r")
    if tiny is None:
        tiny = Fraction(1, 2 * r) / (2 * r)  # gamma/(2r) at the default gamma

    groups: list[list[int]] = [list(p) for p in graph.parts]

    # Merge phase: smallest pair first.
    while len(groups) > 1:
        order = sorted(range(len(groups)), key=lambda g: (len(groups[g]), g))
        a, b = order[0], order[1]
        if r * (len(groups[a]) + len(groups[b])) > n:
            break
        keep, gone = min(a, b), max(a, b)
        groups[keep].extend(groups[gone])
        del groups[gone]

    # Split phase: dissolve tiny parts, smallest first, into largest remaining capacity.
    while True:
        tiny_idx = [g for g in range(len(groups)) if len(groups[g]) < tiny * n]
        if not tiny_idx:
            break
        g = min(tiny_idx, key=lambda t: (len(groups[t]), t))
        victims = groups.pop(g)
        capacity = {h: (n - r * len(groups[h])) // r for h in range(len(groups))}
        if sum(capacity.values()) < len(victims):
            raise InfeasibleError(
                f"infeasible split: part of size {len(victims)} cannot be dissolved "
                f"while keeping every part at most n/r"
            )
        for v in victims:
            h = max(capacity, key=lambda t: (capacity[t], -t))
            groups[h].append(v)
            capacity[h] -= 1

    if not (r <= len(groups) <= 2 * r - 1):
        raise InfeasibleError(
            f"reduction produced k'={len(groups)} outside [{r}, {2 * r - 1}]"
        )

    groups.sort(key=lambda g: (-len(g), min(g)))
    part_map = [-1] * n
    for idx, g in enumerate(groups):
        for v in g:
            part_map[v] = idx
    new_adj = tuple(
        frozenset(u for u in graph.adj[v] if part_map[u] != part_map[v]) for v in range(n)
    )
    reduced = MultipartiteGraph(tuple(tuple(sorted(g)) for g in groups), new_adj, graph.name)
    return ReduceResult(reduced, tuple(part_map))


def induced_subgraph(
    graph: MultipartiteGraph, parts: Sequence[Iterable[int]]
) -> tuple[MultipartiteGraph, tuple[int, ...]]:
    """Subgraph induced by the given ordered vertex sets, relabeled to 0..m-1.

    Returns the subgraph and old_ids, where old_ids[new] is the original id.
    """
    old_ids: list[int] = []
    new_parts: list[tuple[int, ...]] = []
    for part in parts:
        chunk = sorted(part)
        start = len(old_ids)
        old_ids.extend(chunk)
        new_parts.append(tuple(range(start, start + len(chunk))))
    rev = {old: new for new, old in enumerate(old_ids)}
    if len(rev) != len(old_ids):
        raise GraphValidationError("induced parts overlap")
    adj = tuple(
        frozenset(rev[u] for u in graph.adj[old] if u in rev) for old in old_ids
    )
    return MultipartiteGraph(tuple(new_parts), adj), tuple(old_ids)
