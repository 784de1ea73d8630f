"""Interrupted-OD detection and greedy rerouting over spare capacity.

Rerouting is a truncated, path-based variant of Edmonds-Karp: for each
interrupted OD the few shortest surviving paths (by geographic length) are
tried in order and each is filled up to its bottleneck residual capacity.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import islice
from typing import NamedTuple

from gridshock.errors import DegenerateDemand
from gridshock.network import AssetNetwork, FlowLayer, path_length

_EPS = 1e-9


class Path(NamedTuple):
    edges: tuple[str, ...]
    length: float


@dataclass(frozen=True)
class ReroutePolicy:
    max_paths: int = 5
    detour_factor: float = 2.0
    min_trips: float = 15.0
    min_length: float = 30.0

    def __post_init__(self):
        if self.max_paths < 1:
            raise ValueError("max_paths must be >= 1")
        if self.detour_factor < 1:
            raise ValueError("detour_factor must be >= 1")


@dataclass
class RerouteResult:
    delivered: dict[str, float] = field(default_factory=dict)
    paths_used: dict[str, list[tuple[Path, float]]] = field(default_factory=dict)
    skipped: set[str] = field(default_factory=set)
    residual: dict[str, float] = field(default_factory=dict)

    @property
    def total_delivered(self) -> float:
        return math.fsum(self.delivered.values())

    def edge_flows(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for uses in self.paths_used.values():
            for path, f in uses:
                for e in path.edges:
                    out[e] = out.get(e, 0.0) + f
        return out


def find_interrupted(flow: FlowLayer, removed: Iterable[str]) -> set[str]:
    """OD ids whose original path uses at least one removed edge."""
    out: set[str] = set()
    for e in removed:
        out.update(flow.edge_users.get(e, ()))
    return out


def immediate_disruption(flow: FlowLayer, removed: Iterable[str]) -> float:
    """Share of daily demand cut off by the removal, before any rerouting."""
    if flow.total_daily_demand <= 0:
        raise DegenerateDemand("flow layer has zero total demand")
    hit = find_interrupted(flow, removed)
    return math.fsum(flow.pairs[od].demand for od in hit) / flow.total_daily_demand


def initial_residual(network: AssetNetwork, removed: Iterable[str]) -> dict[str, float]:
    removed = set(removed)
    return {eid: e.spare_capacity for eid, e in network.edges.items() if eid not in removed}


# ------------------------------------------------------------ path search


class _Index:
    """Integer view of a network for path search.

    Edge indices follow the canonical (sorted) id order, so comparing index
    sequences orders paths exactly like comparing id sequences.
    """

    def __init__(self, network: AssetNetwork):
        self.edge_ids = list(network.edges)
        self.node_ids = list(network.nodes)
        self.edge_pos = {e: i for i, e in enumerate(self.edge_ids)}
        self.node_pos = {n: i for i, n in enumerate(self.node_ids)}
        self.lengths = [network.edges[e].length for e in self.edge_ids]
        self.nbrs = [
            tuple(
                (self.edge_pos[eid], self.node_pos[network.edges[eid].other(n)], network.edges[eid].length)
                for eid in network.adjacency[n]
            )
            for n in self.node_ids
        ]

    def length(self, seq) -> float:
        # same summation order as path_length
        total = 0.0
        for i in seq:
            total += self.lengths[i]
        return total


@lru_cache(maxsize=64)
def _index(network: AssetNetwork) -> _Index:
    return _Index(network)


def _distances_to(nbrs, target, blocked_edges, n_nodes):
    """Exact distances to ``target`` avoiding ``blocked_edges`` (inf if unreachable)."""
    dist = [math.inf] * n_nodes
    dist[target] = 0.0
    heap = [(0.0, target)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist[node]:
            continue
        for eid, other, length in nbrs[node]:
            if eid in blocked_edges:
                continue
            nd = d + length
            if nd < dist[other]:
                dist[other] = nd
                heapq.heappush(heap, (nd, other))
    return dist


def _astar(nbrs, h, source, target, blocked_nodes, blocked_edges, bound):
    """Shortest path by (length, edge sequence); returns (edges, nodes) or None.

    ``h`` is a consistent lower bound on the remaining distance, so labels
    are settled in the same order as plain Dijkstra would settle them.
    """
    if h[source] > bound:
        return None
    best = {source: (0.0, ())}
    heap = [(h[source], (), 0.0, source, (source,))]
    done = set()
    while heap:
        _, seq, d, node, nodes = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == target:
            return seq, nodes
        for eid, other, length in nbrs[node]:
            if other in done or eid in blocked_edges or other in blocked_nodes:
                continue
            nd = d + length
            f = nd + h[other]
            if f > bound:
                continue
            cur = best.get(other)
            if cur is not None and nd > cur[0]:
                continue
            nseq = seq + (eid,)
            if cur is None or (nd, nseq) < cur:
                best[other] = (nd, nseq)
                heapq.heappush(heap, (f, nseq, nd, other, nodes + (other,)))
    return None


def iter_shortest_paths(
    network: AssetNetwork,
    removed: Iterable[str],
    origin: str,
    destination: str,
    max_length: float = math.inf,
) -> Iterator[Path]:
    """Yield loopless paths in increasing length (ties by edge-id sequence).

    Yen-style deviation search, generated lazily.  Paths longer than
    ``max_length`` are never produced, which also prunes the search.
    """
    if origin == destination:
        return
    ix = _index(network)
    nbrs = ix.nbrs
    src, dst = ix.node_pos[origin], ix.node_pos[destination]
    removed = frozenset(ix.edge_pos[e] for e in removed if e in ix.edge_pos)
    bound = max_length * (1 + _EPS) if math.isfinite(max_length) else math.inf
    # blocking more edges only lengthens paths, so these stay valid lower bounds
    h = [x * (1 - _EPS) for x in _distances_to(nbrs, dst, removed, len(nbrs))]
    first = _astar(nbrs, h, src, dst, frozenset(), removed, bound)
    if first is None:
        return
    accepted = [first]
    seen = {first[0]}
    candidates: list = []
    yield Path(tuple(ix.edge_ids[i] for i in first[0]), ix.length(first[0]))
    while True:
        edges, nodes = accepted[-1]
        root_len = 0.0
        for i in range(len(edges)):
            if i:
                root_len += ix.lengths[edges[i - 1]]
            root = edges[:i]
            blocked_e = set(removed)
            for p_edges, _ in accepted:
                if p_edges[:i] == root:
                    blocked_e.add(p_edges[i])
            spur = _astar(nbrs, h, nodes[i], dst, frozenset(nodes[:i]), blocked_e, bound - root_len)
            if spur is None:
                continue
            total = root + spur[0]
            if total in seen:
                continue
            seen.add(total)
            length = ix.length(total)
            if length > bound:
                continue
            heapq.heappush(candidates, (length, total, nodes[:i] + spur[1]))
        if not candidates:
            return
        length, total, tnodes = heapq.heappop(candidates)
        accepted.append((total, tnodes))
        yield Path(tuple(ix.edge_ids[i] for i in total), length)


def k_shortest_paths(
    network: AssetNetwork,
    removed: Iterable[str],
    origin: str,
    destination: str,
    k: int,
    max_length: float = math.inf,
) -> list[Path]:
    """Up to ``k`` loopless paths in the surviving graph, shortest first."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return list(islice(iter_shortest_paths(network, removed, origin, destination, max_length), k))


def _reachable(network: AssetNetwork, residual: Mapping[str, float], origin: str, destination: str) -> bool:
    """Whether some path joins the two nodes using only edges with spare capacity.

    When it does not, every candidate path has a zero bottleneck and the
    path search can be skipped without changing the outcome.
    """
    ix = _index(network)
    dst = ix.node_pos[destination]
    ids = ix.edge_ids
    stack = [ix.node_pos[origin]]
    seen = {stack[0]}
    while stack:
        node = stack.pop()
        for eid, other, _ in ix.nbrs[node]:
            if other not in seen and residual.get(ids[eid], 0.0) > 0:
                if other == dst:
                    return True
                seen.add(other)
                stack.append(other)
    return False


# -------------------------------------------------------------- rerouting


def reroute_interrupted(
    network: AssetNetwork,
    removed: Iterable[str],
    flow: FlowLayer,
    demands: Mapping[str, float],
    policy: ReroutePolicy = ReroutePolicy(),
    residual: dict[str, float] | None = None,
) -> RerouteResult:
    """Greedily reassign interrupted OD demand to surviving spare capacity.

    ODs with small daily demand or short original paths are not rerouted.
    The rest are served in descending order of current demand (ties by OD
    id); each tries its shortest admissible paths in turn.  ``residual`` is
    consumed in place when given.
    """
    removed = frozenset(removed)
    if residual is None:
        residual = initial_residual(network, removed)
    result = RerouteResult(residual=residual)

    active = []
    for od_id in demands:
        od = flow.pairs[od_id]
        if od.demand < policy.min_trips or od.original_length < policy.min_length:
            result.skipped.add(od_id)
            result.delivered[od_id] = 0.0
        else:
            active.append(od_id)
    active.sort(key=lambda o: (-demands[o], o))

    for od_id in active:
        od = flow.pairs[od_id]
        remaining = float(demands[od_id])
        delivered = 0.0
        used = []
        if remaining > 0 and _reachable(network, residual, od.origin, od.destination):
            limit = policy.detour_factor * od.original_length
            # lazily: later candidates are only searched for if still needed
            candidates = iter_shortest_paths(network, removed, od.origin, od.destination, limit)
            for path in islice(candidates, policy.max_paths):
                if path.length > limit:
                    continue
                bottleneck = min(residual[e] for e in path.edges)
                if bottleneck <= 0:
                    continue
                f = min(remaining, bottleneck)
                for e in path.edges:
                    residual[e] = max(residual[e] - f, 0.0)
                used.append((path, f))
                delivered += f
                remaining -= f
                if remaining <= 0:
                    break
        result.delivered[od_id] = delivered
        if used:
            result.paths_used[od_id] = used
    return result
