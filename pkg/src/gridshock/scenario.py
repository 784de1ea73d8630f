"""Failure scenario generation: climate sampling and matched-intensity baselines."""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

import numpy as np

from gridshock.errors import TooManyRemovals
from gridshock.hazard import FailureProbabilities
from gridshock.network import AssetNetwork

CLIMATE, RANDOM, TARGETED = "climate", "random", "targeted"
STRATEGIES = (CLIMATE, RANDOM, TARGETED)

# substream purposes; part of the (seed, purpose, run_index) keying
_STREAM_CLIMATE = 0
_STREAM_RANDOM = 1
STREAM_RECOVERY = 2


def substream(seed: int, purpose: int, run_index: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, purpose, run_index)``.

    Streams do not depend on how many other runs exist or in which order
    they execute, so runs can be distributed across workers freely.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(purpose), int(run_index)))
    return np.random.Generator(np.random.PCG64(ss))


class ScenarioStates(Mapping):
    """Read-only asset -> state map (1 intact, 0 failed) over a boolean row.

    Avoids building one dict per run when thousands of runs are sampled.
    """

    __slots__ = ("_assets", "_pos", "_up")

    def __init__(self, assets: tuple, pos: Mapping[str, int], up: np.ndarray):
        self._assets, self._pos, self._up = assets, pos, up

    def __getitem__(self, key: str) -> int:
        return int(self._up[self._pos[key]])

    def __iter__(self) -> Iterator[str]:
        return iter(self._assets)

    def __len__(self) -> int:
        return len(self._assets)

    def __repr__(self) -> str:
        return f"ScenarioStates({dict(self)!r})"

    def failed_ids(self) -> frozenset:
        return frozenset(self._assets[i] for i in np.flatnonzero(~self._up))


@dataclass(frozen=True)
class FailureScenario:
    states: Mapping[str, int]
    strategy: str
    run_index: int = 0
    failed: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.states, ScenarioStates):
            failed = self.states.failed_ids()
        else:
            failed = frozenset(k for k, s in self.states.items() if s == 0)
        object.__setattr__(self, "failed", failed)

    @classmethod
    def from_failed(cls, assets: Iterable[str], failed: Iterable[str], strategy: str, run_index: int = 0):
        failed = set(failed)
        return cls({a: 0 if a in failed else 1 for a in sorted(assets)}, strategy, run_index)


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: list[FailureScenario]
    event_ref: object = None
    seed: int = 0
    strategy: str = CLIMATE

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def sample_climate_scenarios(p: FailureProbabilities, n_runs: int, seed: int, event_ref=None) -> ScenarioSet:
    """Draw independent Bernoulli failure states; an asset fails with its probability."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    assets = tuple(sorted(p.p))
    pos = {a: i for i, a in enumerate(assets)}
    probs = np.array([p.p[a] for a in assets], dtype=float)
    scenarios = []
    for j in range(n_runs):
        u = substream(seed, _STREAM_CLIMATE, j).random(len(assets))
        scenarios.append(FailureScenario(ScenarioStates(assets, pos, u >= probs), CLIMATE, j))
    return ScenarioSet(scenarios, event_ref, seed, CLIMATE)


def _removal_count(network: AssetNetwork, psi: float) -> int:
    m = round_half_up(psi)
    if m < 0:
        raise ValueError("psi must be non-negative")
    if m > len(network.edges):
        raise TooManyRemovals(f"cannot remove {m} edges from a network with {len(network.edges)}")
    return m


def generate_random_scenarios(
    network: AssetNetwork, psi: float, n_runs: int, seed: int, event_ref=None
) -> ScenarioSet:
    """Remove exactly round-half-up(psi) edges chosen uniformly in every run."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    m = _removal_count(network, psi)
    edges = network.edge_ids()
    scenarios = []
    for j in range(n_runs):
        idx = substream(seed, _STREAM_RANDOM, j).choice(len(edges), size=m, replace=False)
        scenarios.append(FailureScenario.from_failed(edges, (edges[i] for i in idx), RANDOM, j))
    return ScenarioSet(scenarios, event_ref, seed, RANDOM)


def targeted_edges(network: AssetNetwork, m: int) -> list[str]:
    ranked = sorted(network.edges.values(), key=lambda e: (-e.daily_traffic, e.id))
    return [e.id for e in ranked[:m]]


def generate_targeted_scenario(network: AssetNetwork, psi: float, run_index: int = 0) -> FailureScenario:
    """Remove the round-half-up(psi) busiest edges (ties by edge id)."""
    m = _removal_count(network, psi)
    return FailureScenario.from_failed(network.edge_ids(), targeted_edges(network, m), TARGETED, run_index)


def targeted_scenarios(network: AssetNetwork, psi: float, n_runs: int, seed: int, event_ref=None) -> ScenarioSet:
    """The single targeted scenario repeated ``n_runs`` times (recovery still varies per run)."""
    base = generate_targeted_scenario(network, psi)
    runs = [FailureScenario(base.states, TARGETED, j) for j in range(n_runs)]
    return ScenarioSet(runs, event_ref, seed, TARGETED)


def write_scenarios_jsonl(scenarios: ScenarioSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in scenarios:
            fh.write(json.dumps({"run_index": s.run_index, "failed_edges": sorted(s.failed)}) + "\n")


def read_scenarios_jsonl(path, network: AssetNetwork, strategy: str = CLIMATE) -> ScenarioSet:
    scenarios = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc = json.loads(line)
                scenarios.append(
                    FailureScenario.from_failed(network.edge_ids(), doc["failed_edges"], strategy, doc["run_index"])
                )
    scenarios.sort(key=lambda s: s.run_index)
    return ScenarioSet(scenarios, None, 0, strategy)
