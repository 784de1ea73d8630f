"""Bi-layer network model: an undirected asset graph plus an OD flow layer.

Tables are read from CSV (a path, an open text file, or an iterable of row
dicts).  Everything is validated on load and treated as immutable afterwards.
"""

from __future__ import annotations

import csv
import io
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from gridshock.errors import (
    BrokenPath,
    DuplicateId,
    InvalidGeometry,
    UnknownEdge,
    UnknownNode,
)

DEFAULT_SPARE_FRACTION = 0.5

NODE_COLUMNS = ("id", "lat", "lon")
EDGE_COLUMNS = ("id", "u", "v", "length_km", "daily_traffic")
OD_COLUMNS = ("origin", "destination", "demand", "path")


@dataclass(frozen=True)
class AssetNode:
    id: str
    lat: float
    lon: float


@dataclass(frozen=True)
class AssetEdge:
    id: str
    u: str
    v: str
    length: float
    daily_traffic: float
    spare_capacity_fraction: float = DEFAULT_SPARE_FRACTION

    @property
    def endpoints(self) -> tuple[str, str]:
        return (self.u, self.v)

    @property
    def spare_capacity(self) -> float:
        """Extra trips/day the edge can carry on top of its regular traffic."""
        return self.spare_capacity_fraction * self.daily_traffic

    def other(self, node: str) -> str:
        if node == self.u:
            return self.v
        if node == self.v:
            return self.u
        raise UnknownNode(f"node {node!r} is not an endpoint of edge {self.id!r}")


@dataclass(frozen=True, eq=False)
class AssetNetwork:
    nodes: Mapping[str, AssetNode]
    edges: Mapping[str, AssetEdge]
    adjacency: Mapping[str, tuple[str, ...]]

    @classmethod
    def build(cls, nodes: Iterable[AssetNode], edges: Iterable[AssetEdge]) -> "AssetNetwork":
        node_map: dict[str, AssetNode] = {}
        for node in nodes:
            if node.id in node_map:
                raise DuplicateId(f"duplicate node id {node.id!r}")
            if not (-90.0 <= node.lat <= 90.0) or not (-180.0 <= node.lon <= 180.0):
                raise InvalidGeometry(f"node {node.id!r} has coordinates out of range")
            node_map[node.id] = node

        edge_map: dict[str, AssetEdge] = {}
        adjacency: dict[str, list[str]] = {nid: [] for nid in node_map}
        for edge in edges:
            if edge.id in edge_map:
                raise DuplicateId(f"duplicate edge id {edge.id!r}")
            for end in (edge.u, edge.v):
                if end not in node_map:
                    raise UnknownNode(f"edge {edge.id!r} references unknown node {end!r}")
            if edge.u == edge.v:
                raise InvalidGeometry(f"edge {edge.id!r} is a self-loop")
            if not edge.length > 0:
                raise InvalidGeometry(f"edge {edge.id!r} has non-positive length {edge.length}")
            if edge.daily_traffic < 0:
                raise InvalidGeometry(f"edge {edge.id!r} has negative traffic")
            if not 0.0 <= edge.spare_capacity_fraction <= 1.0:
                raise InvalidGeometry(f"edge {edge.id!r} spare fraction outside [0, 1]")
            edge_map[edge.id] = edge
            adjacency[edge.u].append(edge.id)
            adjacency[edge.v].append(edge.id)

        return cls(
            nodes=MappingProxyType(dict(sorted(node_map.items()))),
            edges=MappingProxyType(dict(sorted(edge_map.items()))),
            adjacency=MappingProxyType({n: tuple(sorted(adjacency[n])) for n in sorted(adjacency)}),
        )

    def __reduce__(self):
        # mapping proxies do not pickle; rebuilding also re-validates
        return (AssetNetwork.build, (list(self.nodes.values()), list(self.edges.values())))

    def degree(self, node: str) -> int:
        return len(self.adjacency[node])

    def edge_ids(self) -> list[str]:
        """Edge ids in canonical (lexicographic) order."""
        return list(self.edges)

    def midpoint(self, edge_id: str) -> tuple[float, float]:
        return self.point_along(edge_id, 0.5)

    def point_along(self, edge_id: str, frac: float) -> tuple[float, float]:
        # straight segment in lat/lon space; no antimeridian handling
        edge = self.edges[edge_id]
        a, b = self.nodes[edge.u], self.nodes[edge.v]
        return (a.lat + frac * (b.lat - a.lat), a.lon + frac * (b.lon - a.lon))

    def with_edges(self, edges: Iterable[AssetEdge]) -> "AssetNetwork":
        return AssetNetwork.build(self.nodes.values(), edges)

    def incident_edges(self, failed_nodes: Iterable[str]) -> set[str]:
        """Edge ids to remove so that the given nodes are out of service."""
        out: set[str] = set()
        for n in failed_nodes:
            if n not in self.adjacency:
                raise UnknownNode(f"unknown node {n!r}")
            out.update(self.adjacency[n])
        return out


@dataclass(frozen=True)
class OdPair:
    id: str
    origin: str
    destination: str
    demand: float
    original_path: tuple[str, ...]
    original_length: float


@dataclass(frozen=True, eq=False)
class FlowLayer:
    pairs: Mapping[str, OdPair]
    total_daily_demand: float
    # edge id -> OD ids whose original path uses it
    edge_users: Mapping[str, tuple[str, ...]] = field(repr=False)

    @classmethod
    def build(cls, pairs: Iterable[OdPair], network: AssetNetwork) -> "FlowLayer":
        pair_map: dict[str, OdPair] = {}
        users: dict[str, list[str]] = {}
        for od in pairs:
            if od.id in pair_map:
                raise DuplicateId(f"duplicate OD id {od.id!r}")
            if od.demand < 0:
                raise ValueError(f"OD {od.id!r} has negative demand")
            check_walk(od.original_path, od.origin, od.destination, network)
            pair_map[od.id] = od
            for e in od.original_path:
                users.setdefault(e, []).append(od.id)
        ordered = dict(sorted(pair_map.items()))
        return cls(
            pairs=MappingProxyType(ordered),
            total_daily_demand=float(sum(od.demand for od in ordered.values())),
            edge_users=MappingProxyType({e: tuple(sorted(v)) for e, v in sorted(users.items())}),
        )


    def __reduce__(self):
        return (_restore_flow, (dict(self.pairs), self.total_daily_demand, dict(self.edge_users)))


def _restore_flow(pairs, total, users) -> FlowLayer:
    return FlowLayer(MappingProxyType(pairs), total, MappingProxyType(users))


def path_length(path: Iterable[str], network: AssetNetwork) -> float:
    """Total length in km of a sequence of edge ids (0 for the empty path)."""
    total = 0.0
    for e in path:
        try:
            total += network.edges[e].length
        except KeyError:
            raise UnknownEdge(f"unknown edge id {e!r}") from None
    return total


def check_walk(path: Iterable[str], origin: str, destination: str, network: AssetNetwork) -> None:
    """Raise unless ``path`` is an origin->destination walk without repeated edges."""
    path = list(path)
    for end in (origin, destination):
        if end not in network.nodes:
            raise UnknownNode(f"unknown node {end!r}")
    if not path:
        raise BrokenPath(f"empty path from {origin!r} to {destination!r}")
    if len(set(path)) != len(path):
        raise BrokenPath("path repeats an edge")
    here = origin
    for e in path:
        edge = network.edges.get(e)
        if edge is None:
            raise UnknownEdge(f"unknown edge id {e!r}")
        if here == edge.u:
            here = edge.v
        elif here == edge.v:
            here = edge.u
        else:
            raise BrokenPath(f"edge {e!r} does not continue the walk at node {here!r}")
    if here != destination:
        raise BrokenPath(f"path ends at {here!r}, expected {destination!r}")


# ---------------------------------------------------------------- CSV I/O


def _rows(source, required: tuple[str, ...]) -> list[dict[str, str]]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _rows(fh, required)
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        reader = csv.DictReader(source)
        missing = [c for c in required if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"table is missing columns {missing}")
        return list(reader)
    rows = [dict(r) for r in source]
    for r in rows:
        missing = [c for c in required if c not in r]
        if missing:
            raise ValueError(f"row is missing columns {missing}")
    return rows


def load_asset_network(nodes_table, edges_table) -> AssetNetwork:
    nodes = [
        AssetNode(id=str(r["id"]), lat=float(r["lat"]), lon=float(r["lon"]))
        for r in _rows(nodes_table, NODE_COLUMNS)
    ]
    edges = []
    for r in _rows(edges_table, EDGE_COLUMNS):
        spare = r.get("spare_fraction")
        edges.append(
            AssetEdge(
                id=str(r["id"]),
                u=str(r["u"]),
                v=str(r["v"]),
                length=float(r["length_km"]),
                daily_traffic=float(r["daily_traffic"]),
                spare_capacity_fraction=(
                    float(spare) if spare not in (None, "") else DEFAULT_SPARE_FRACTION
                ),
            )
        )
    return AssetNetwork.build(nodes, edges)


def load_flow_layer(od_table, network: AssetNetwork) -> FlowLayer:
    pairs = []
    for r in _rows(od_table, OD_COLUMNS):
        path = tuple(p for p in str(r["path"]).split("|") if p)
        origin, destination = str(r["origin"]), str(r["destination"])
        od_id = r.get("id") or f"{origin}->{destination}"
        length = path_length(path, network)
        pairs.append(
            OdPair(
                id=str(od_id),
                origin=origin,
                destination=destination,
                demand=float(r["demand"]),
                original_path=path,
                original_length=length,
            )
        )
    return FlowLayer.build(pairs, network)


def _num(x: float) -> str:
    return repr(float(x))


def write_asset_network(network: AssetNetwork, nodes_path, edges_path) -> None:
    """Write the canonical CSV form (rows ordered by id, shortest float repr)."""
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NODE_COLUMNS)
        for n in network.nodes.values():
            w.writerow([n.id, _num(n.lat), _num(n.lon)])
    extra = any(e.spare_capacity_fraction != DEFAULT_SPARE_FRACTION for e in network.edges.values())
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_COLUMNS + (("spare_fraction",) if extra else ()))
        for e in network.edges.values():
            row = [e.id, e.u, e.v, _num(e.length), _num(e.daily_traffic)]
            if extra:
                row.append(_num(e.spare_capacity_fraction))
            w.writerow(row)


def write_flow_layer(flow: FlowLayer, od_path) -> None:
    with open(od_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("id",) + OD_COLUMNS)
        for od in flow.pairs.values():
            w.writerow([od.id, od.origin, od.destination, _num(od.demand), "|".join(od.original_path)])


def traffic_from_flows(network: AssetNetwork, flow: FlowLayer) -> AssetNetwork:
    """Return a copy of ``network`` whose edge traffic is the OD demand routed over it."""
    load = {e: 0.0 for e in network.edges}
    for od in flow.pairs.values():
        for e in od.original_path:
            load[e] += od.demand
    return network.with_edges(
        AssetEdge(e.id, e.u, e.v, e.length, load[e.id], e.spare_capacity_fraction)
        for e in network.edges.values()
    )
