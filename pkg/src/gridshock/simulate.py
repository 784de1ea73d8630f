"""Day-by-day disruption, rerouting and recovery of a failure scenario."""

from __future__ import annotations

import math
import os
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gridshock.errors import DegenerateDemand, HorizonExceeded
from gridshock.hazard import FailureProbabilities
from gridshock.network import AssetNetwork, FlowLayer
from gridshock.routing import (
    ReroutePolicy,
    find_interrupted,
    initial_residual,
    reroute_interrupted,
)
from gridshock.scenario import (
    STREAM_RECOVERY,
    FailureScenario,
    ScenarioSet,
    sample_climate_scenarios,
    substream,
)

DEFAULT_HORIZON = 10_000
_TINY = 1e-9


@dataclass(frozen=True)
class RecoveryModel:
    per_step_recovery_prob: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.per_step_recovery_prob <= 1.0:
            raise ValueError("per_step_recovery_prob must lie in (0, 1]")


@dataclass
class ScenarioOutcome:
    q_series: list[float]
    los: float
    recovery_day: int
    run_index: int = 0
    delivered: list[float] = field(default_factory=list, repr=False)
    demanded: list[float] = field(default_factory=list, repr=False)
    # per day: OD id -> [(edge ids, flow)], only when requested
    paths: list[dict] | None = field(default=None, repr=False)


@dataclass
class LosDistribution:
    samples: np.ndarray
    event_date: object = None
    strategy: str = "climate"
    recovery_days: np.ndarray | None = None
    n_removed: int | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)

    def __len__(self):
        return len(self.samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))

    def summary(self) -> dict:
        return {
            "n": len(self),
            "mean": self.mean,
            "q025": self.quantile(0.025),
            "q975": self.quantile(0.975),
            "min": float(self.samples.min()),
            "max": float(self.samples.max()),
        }


def quality_of_service(delivered: float, demanded: float) -> float:
    """Fraction of demand satisfied."""
    if demanded <= 0:
        raise DegenerateDemand("demand is zero")
    return min(max(delivered / demanded, 0.0), 1.0)


def step_recovery(failed: Iterable[str], model: RecoveryModel, rng: np.random.Generator) -> set[str]:
    """Repair each failed edge independently; returns the edges still failed."""
    order = sorted(failed)
    if not order:
        return set()
    u = rng.random(len(order))
    return {e for e, x in zip(order, u) if x >= model.per_step_recovery_prob}


def _drain_rates(network: AssetNetwork, flow: FlowLayer) -> dict[str, float]:
    # backlog cleared per day over a recovered original path
    rates = {}
    for od_id, od in flow.pairs.items():
        frac = min(network.edges[e].spare_capacity_fraction for e in od.original_path)
        rates[od_id] = frac * od.demand
    return rates


def run_scenario(
    network: AssetNetwork,
    flow: FlowLayer,
    scenario: FailureScenario,
    policy: ReroutePolicy = ReroutePolicy(),
    recovery: RecoveryModel = RecoveryModel(),
    seed: int = 0,
    horizon: int = DEFAULT_HORIZON,
    drain_rates: dict[str, float] | None = None,
    record_paths: bool = False,
) -> ScenarioOutcome:
    """Simulate one scenario from the failure day until full recovery.

    Each day: ODs on intact original paths deliver their daily demand, plus
    part of any backlog once their path is back; interrupted ODs are
    rerouted over spare capacity; anything undelivered carries over to the
    next day.  Failed edges are then repaired at random.  The run ends once
    no edge is failed and no backlog remains.
    """
    if flow.total_daily_demand <= 0:
        raise DegenerateDemand("flow layer has zero total demand")
    rng = substream(seed, STREAM_RECOVERY, scenario.run_index)
    rates = drain_rates if drain_rates is not None else _drain_rates(network, flow)
    failed = {e for e in scenario.failed if e in network.edges}
    backlog: dict[str, float] = {}
    q_series, delivered_log, demanded_log = [], [], []
    path_log = [] if record_paths else None

    t = 0
    while True:
        if t >= horizon:
            raise HorizonExceeded(f"not recovered within {horizon} days")
        interrupted = find_interrupted(flow, failed)
        demanded = flow.total_daily_demand + math.fsum(backlog.values())

        new_backlog: dict[str, float] = {}
        day_paths = {}
        for od_id, b in backlog.items():
            if od_id in interrupted:
                continue
            left = b - min(b, rates[od_id])
            if left > _TINY:
                new_backlog[od_id] = left

        if interrupted:
            demands = {o: flow.pairs[o].demand + backlog.get(o, 0.0) for o in sorted(interrupted)}
            rr = reroute_interrupted(network, failed, flow, demands, policy, initial_residual(network, failed))
            day_paths = {o: [(list(p.edges), f) for p, f in uses] for o, uses in rr.paths_used.items()}
            for o, d in demands.items():
                left = d - rr.delivered[o]
                if left > _TINY:
                    new_backlog[o] = left

        # whatever is not carried over was delivered; Q is exactly 1 on a clear day
        delivered = demanded - math.fsum(new_backlog.values())
        q_series.append(quality_of_service(delivered, demanded))
        delivered_log.append(delivered)
        demanded_log.append(demanded)
        if path_log is not None:
            path_log.append(day_paths)
        backlog = new_backlog
        failed = step_recovery(failed, recovery, rng)
        if not failed and not backlog:
            break
        t += 1

    los = math.fsum(1.0 - q for q in q_series)
    return ScenarioOutcome(
        q_series, los, len(q_series) - 1, scenario.run_index, delivered_log, demanded_log, path_log
    )


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("GRIDSHOCK_THREADS")
    return max(1, int(env)) if env else 1


def _run_chunk(args):
    network, flow, scenarios, policy, recovery, seed, horizon, record = args
    rates = _drain_rates(network, flow)
    return [run_scenario(network, flow, s, policy, recovery, seed, horizon, rates, record) for s in scenarios]


def run_scenarios(
    network: AssetNetwork,
    flow: FlowLayer,
    scenarios: ScenarioSet | Sequence[FailureScenario],
    policy: ReroutePolicy = ReroutePolicy(),
    recovery: RecoveryModel = RecoveryModel(),
    seed: int = 0,
    horizon: int = DEFAULT_HORIZON,
    workers: int | None = None,
    record_paths: bool = False,
) -> list[ScenarioOutcome]:
    """Run every scenario; outcomes come back sorted by run index.

    ``workers`` (default: ``$GRIDSHOCK_THREADS`` or 1) spreads runs over
    processes.  Results do not depend on the worker count.
    """
    scenarios = list(scenarios)
    n = _worker_count(workers)
    if n == 1 or len(scenarios) < 2:
        outcomes = _run_chunk((network, flow, scenarios, policy, recovery, seed, horizon, record_paths))
    else:
        chunks = [scenarios[i::n] for i in range(n)]
        with ProcessPoolExecutor(max_workers=n) as pool:
            parts = pool.map(_run_chunk, [(network, flow, c, policy, recovery, seed, horizon, record_paths) for c in chunks if c])
            outcomes = [o for part in parts for o in part]
    outcomes.sort(key=lambda o: o.run_index)
    return outcomes


def los_distribution(outcomes: Sequence[ScenarioOutcome], event_date=None, strategy="climate", n_removed=None):
    return LosDistribution(
        samples=np.array([o.los for o in outcomes]),
        event_date=event_date,
        strategy=strategy,
        recovery_days=np.array([o.recovery_day for o in outcomes]),
        n_removed=n_removed,
    )


def assess_event(
    network: AssetNetwork,
    flow: FlowLayer,
    p: FailureProbabilities,
    n_runs: int = 250,
    policy: ReroutePolicy = ReroutePolicy(),
    recovery: RecoveryModel = RecoveryModel(),
    seed: int = 0,
    event_date=None,
    workers: int | None = None,
) -> LosDistribution:
    """LOS distribution of a weather event under sampled climate failures."""
    scenarios = sample_climate_scenarios(p, n_runs, seed, event_date)
    outcomes = run_scenarios(network, flow, scenarios, policy, recovery, seed, workers=workers)
    return los_distribution(outcomes, event_date, "climate")
