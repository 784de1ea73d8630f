"""Synthetic networks and weather fields for demos and tests.

The generator mimics the structure that matters for heat-driven failures: a
dense, busy core around a "metro" centre surrounded by a sparse periphery,
gravity-model OD demand with heavy-tailed (power-law) node weights, and
weather fields whose hot spot sits over the core.
"""

from __future__ import annotations

import datetime as dt
import heapq
import math

import numpy as np

from gridshock.hazard import (
    FragilityFunction,
    LocalConditions,
    WeatherEvent,
    WeatherGrid,
    expected_failed_edges,
    failure_probabilities,
    project_event,
)
from gridshock.network import (
    AssetEdge,
    AssetNetwork,
    AssetNode,
    FlowLayer,
    OdPair,
    path_length,
    traffic_from_flows,
)

EARTH_RADIUS_KM = 6371.0088


def haversine_km(lat1, lon1, lat2, lon2) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def _shortest_path(network: AssetNetwork, origin: str, destination: str):
    dist = {origin: 0.0}
    prev = {}
    heap = [(0.0, origin)]
    while heap:
        d, node = heapq.heappop(heap)
        if node == destination:
            break
        if d > dist[node]:
            continue
        for eid in network.adjacency[node]:
            edge = network.edges[eid]
            other = edge.other(node)
            nd = d + edge.length
            if nd < dist.get(other, math.inf):
                dist[other] = nd
                prev[other] = eid
                heapq.heappush(heap, (nd, other))
    if destination not in prev:
        return None
    path, node = [], destination
    while node != origin:
        eid = prev[node]
        path.append(eid)
        node = network.edges[eid].other(node)
    return tuple(reversed(path))


def synthetic_network(
    n_nodes: int = 100,
    n_edges: int = 150,
    n_od: int = 500,
    seed: int = 0,
    bbox=(50.0, -3.0, 54.0, 1.0),
    core=(51.5, 0.0),
    core_share: float = 0.4,
    core_spread_deg: float = 0.45,
    pareto_shape: float = 1.2,
    demand_scale: float = 400.0,
    spare_fraction: float = 0.5,
    extra_edges: str = "spread",
) -> tuple[AssetNetwork, FlowLayer]:
    """Build a connected asset layer and a gravity-model flow layer.

    Edges form a minimum spanning tree plus extra links: by default each
    node in turn gains a link to its nearest non-neighbour
    (``extra_edges="spread"``); ``"shortest"`` adds the globally shortest
    remaining pairs instead, which concentrates redundancy in the core.  Edge traffic is the OD demand routed over each edge along the
    OD's shortest original path.
    """
    if n_edges < n_nodes - 1:
        raise ValueError("need at least n_nodes - 1 edges for a connected network")
    rng = np.random.default_rng(seed)
    lat_lo, lon_lo, lat_hi, lon_hi = bbox
    n_core = int(round(core_share * n_nodes))
    lat = np.concatenate([rng.normal(core[0], core_spread_deg * 0.6, n_core), rng.uniform(lat_lo, lat_hi, n_nodes - n_core)])
    lon = np.concatenate([rng.normal(core[1], core_spread_deg, n_core), rng.uniform(lon_lo, lon_hi, n_nodes - n_core)])
    lat = np.clip(lat, lat_lo, lat_hi)
    lon = np.clip(lon, lon_lo, lon_hi)
    # heavy-tailed weights, larger in the core
    weight = rng.pareto(pareto_shape, n_nodes) + 1.0
    weight[:n_core] *= 2.0

    ids = [f"n{i:03d}" for i in range(n_nodes)]
    nodes = [AssetNode(ids[i], float(round(lat[i], 6)), float(round(lon[i], 6))) for i in range(n_nodes)]
    dist = np.array([[haversine_km(lat[i], lon[i], lat[j], lon[j]) for j in range(n_nodes)] for i in range(n_nodes)])

    # Prim's MST, then the shortest unused pairs
    in_tree = np.zeros(n_nodes, bool)
    in_tree[0] = True
    best = dist[0].copy()
    parent = np.zeros(n_nodes, int)
    pairs = set()
    for _ in range(n_nodes - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(cand.argmin())
        pairs.add((min(j, parent[j]), max(j, parent[j])))
        in_tree[j] = True
        closer = dist[j] < best
        best = np.where(closer, dist[j], best)
        parent = np.where(closer, j, parent)
    iu, ju = np.triu_indices(n_nodes, 1)
    if extra_edges == "shortest":
        for k in np.argsort(dist[iu, ju], kind="stable"):
            if len(pairs) >= n_edges:
                break
            pairs.add((int(iu[k]), int(ju[k])))
    else:
        # round-robin: each node in turn gains a link to its nearest non-neighbour
        order = np.argsort(dist, axis=1, kind="stable")
        cursor = np.ones(n_nodes, int)
        visit = rng.permutation(n_nodes)
        while len(pairs) < n_edges:
            for i in visit:
                if len(pairs) >= n_edges:
                    break
                while cursor[i] < n_nodes:
                    j = int(order[i, cursor[i]])
                    cursor[i] += 1
                    pair = (min(i, j), max(i, j))
                    if pair not in pairs:
                        pairs.add(pair)
                        break

    edges = [
        AssetEdge(f"e{k:03d}", ids[i], ids[j], float(round(max(dist[i, j], 0.5), 6)), 0.0, spare_fraction)
        for k, (i, j) in enumerate(sorted(pairs))
    ]
    network = AssetNetwork.build(nodes, edges)

    # gravity-model OD sampling without replacement
    w = np.outer(weight, weight) / np.maximum(dist, 1.0)
    np.fill_diagonal(w, 0.0)
    flat = w[iu, ju]
    n_pick = min(n_od, len(flat))
    chosen = rng.choice(len(flat), size=n_pick, replace=False, p=flat / flat.sum())
    od_pairs = []
    for k in sorted(chosen):
        i, j = int(iu[k]), int(ju[k])
        if rng.random() < 0.5:
            i, j = j, i
        path = _shortest_path(network, ids[i], ids[j])
        demand = float(round(demand_scale * weight[i] * weight[j] / math.sqrt(max(dist[i, j], 1.0)), 3))
        od_pairs.append(OdPair(f"{ids[i]}->{ids[j]}", ids[i], ids[j], demand, path, path_length(path, network)))
    flow = FlowLayer.build(od_pairs, network)
    return traffic_from_flows(network, flow), flow


def hotspot_grid(
    bbox=(49.5, -3.5, 54.5, 1.5),
    centre=(51.5, 0.0),
    peak: float = 10.0,
    base: float = 24.0,
    radius_deg: float = 1.2,
    res: float = 0.11,
    noise: float = 0.3,
    seed: int = 0,
) -> WeatherGrid:
    """Temperature field: ``base`` plus a Gaussian bump of height ``peak`` at ``centre``."""
    lat_lo, lon_lo, lat_hi, lon_hi = bbox
    nrows = int(math.ceil((lat_hi - lat_lo) / res)) + 1
    ncols = int(math.ceil((lon_hi - lon_lo) / res)) + 1
    la = lat_lo + res * np.arange(nrows)
    lo = lon_lo + res * np.arange(ncols)
    glat, glon = np.meshgrid(la, lo, indexing="ij")
    r2 = ((glat - centre[0]) / radius_deg) ** 2 + ((glon - centre[1]) / (radius_deg * 1.6)) ** 2
    field = base + peak * np.exp(-0.5 * r2)
    if noise:
        field = field + np.random.default_rng(seed).normal(0.0, noise, field.shape)
    return WeatherGrid(lat_lo, lon_lo, res, res, field)


def calibrate_offset(
    network: AssetNetwork, grid: WeatherGrid, fragility: FragilityFunction, psi: float, tol: float = 1e-9
) -> float:
    """Uniform temperature shift that makes the expected failure count equal ``psi``."""
    event = WeatherEvent(dt.date(2000, 1, 1), grid)
    omega = project_event(event, network).omega

    def psi_at(shift):
        cond = LocalConditions({k: v + shift for k, v in omega.items()})
        return expected_failed_edges(failure_probabilities(cond, fragility))

    lo, hi = -100.0, 100.0
    if not psi_at(lo) <= psi <= psi_at(hi):
        raise ValueError(f"psi={psi} not reachable by shifting the field")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if psi_at(mid) < psi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shifted(grid: WeatherGrid, shift: float) -> WeatherGrid:
    return WeatherGrid(grid.lat0, grid.lon0, grid.dlat, grid.dlon, grid.values + shift, grid.units)


def daily_series(
    start: dt.date,
    days: int,
    seed: int = 0,
    trend_per_year: float = 0.05,
    **grid_kwargs,
) -> list[WeatherEvent]:
    """A run of summer-like daily fields with a warming trend and random hot days."""
    rng = np.random.default_rng(seed)
    events = []
    for d in range(days):
        date = start + dt.timedelta(days=d)
        years = (date - start).days / 365.25
        season = math.sin(math.pi * (date.timetuple().tm_yday - 120) / 153.0) if 120 <= date.timetuple().tm_yday <= 273 else 0.0
        base = 16.0 + 6.0 * season + trend_per_year * years + rng.normal(0.0, 2.5)
        peak = max(0.0, rng.normal(6.0, 3.0))
        grid = hotspot_grid(base=base, peak=peak, seed=int(rng.integers(2**31)), **grid_kwargs)
        events.append(WeatherEvent(date, grid))
    return events
