import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, flow_of, line_network
from gridshock.errors import DegenerateDemand, HorizonExceeded
from gridshock.hazard import FailureProbabilities
from gridshock.network import load_asset_network, load_flow_layer
from gridshock.routing import ReroutePolicy
from gridshock.scenario import FailureScenario, generate_random_scenarios, substream
from gridshock.simulate import (
    RecoveryModel,
    assess_event,
    quality_of_service,
    run_scenario,
    run_scenarios,
    step_recovery,
)
from gridshock.synthetic import synthetic_network

INSTANT = RecoveryModel(1.0)


def scenario(net, failed, run_index=0):
    return FailureScenario.from_failed(net.edge_ids(), failed, "climate", run_index)


def test_quality_of_service_examples():
    assert quality_of_service(100, 100) == 1.0
    assert quality_of_service(0, 100) == 0.0
    assert quality_of_service(70, 100) == 0.7
    with pytest.raises(DegenerateDemand):
        quality_of_service(0, 0)


def test_recovery_examples():
    rng = np.random.default_rng(0)
    assert step_recovery({"a", "b", "c"}, INSTANT, rng) == set()
    failed = {f"e{i}" for i in range(100)}
    for _ in range(10):
        failed = step_recovery(failed, RecoveryModel(1e-12), rng)
    assert len(failed) == 100
    with pytest.raises(ValueError):
        RecoveryModel(0.0)


def test_geometric_recovery_time():
    rng = substream(1, 2, 0)
    failed = {f"e{i:05d}" for i in range(10_000)}
    total, day = 0, 0
    while failed:
        day += 1
        still = step_recovery(failed, RecoveryModel(0.5), rng)
        total += day * (len(failed) - len(still))
        failed = still
    assert 1.95 <= total / 10_000 <= 2.05


def test_no_failures():
    net = line_network([("e", "a", "b", 50, 10)])
    flow = flow_of(net, [("a", "b", 10, ["e"])])
    out = run_scenario(net, flow, scenario(net, []), seed=0)
    assert out.q_series == [1.0] and out.los == 0.0 and out.recovery_day == 0


def test_golden_trace():
    doc = json.loads((FIXTURES / "golden_trace.json").read_text())
    net = load_asset_network(doc["nodes"], doc["edges"])
    flow = load_flow_layer(doc["od"], net)
    out = run_scenario(net, flow, scenario(net, doc["failed"]), ReroutePolicy(), RecoveryModel(doc["recovery_prob"]), 0)
    assert out.q_series == doc["q_series"]
    assert out.los == doc["los"]
    assert out.delivered == [0.0, 15.0, 15.0] and out.demanded == [10.0, 20.0, 15.0]


def closed_form_all_fail(f):
    """Q(t) when every edge fails on day 0 and is repaired for day 1.

    In units of daily demand: day 0 delivers nothing, then each day brings 1
    new unit plus backlog b, of which 1 + min(b, f) is delivered.
    """
    q, b = [0.0], 1.0
    while b > 1e-12:
        d = min(b, f)
        q.append((1 + d) / (1 + b))
        b -= d
    q.append(1.0) if q[-1] != 1.0 else None
    return q


@pytest.mark.parametrize("f", [0.5, 0.3, 0.25, 1.0, 0.1])
def test_all_edges_fail_closed_form(f):
    net = line_network(
        [("e1", "a", "b", 40, 100), ("e2", "b", "c", 40, 60), ("e3", "a", "c", 90, 20)], spare=f
    )
    flow = flow_of(net, [("a", "b", 30, ["e1"]), ("a", "c", 20, ["e1", "e2"]), ("c", "a", 50, ["e3"])])
    out = run_scenario(net, flow, scenario(net, ["e1", "e2", "e3"]), ReroutePolicy(), INSTANT, 0)
    expected = closed_form_all_fail(f)
    assert out.q_series == pytest.approx(expected, abs=1e-12)
    assert out.los == pytest.approx(math.fsum(1 - q for q in expected), abs=1e-12)


def test_zero_spare_never_drains():
    net = line_network([("e", "a", "b", 40, 10)], spare=0.0)
    flow = flow_of(net, [("a", "b", 10, ["e"])])
    with pytest.raises(HorizonExceeded):
        run_scenario(net, flow, scenario(net, ["e"]), ReroutePolicy(), INSTANT, 0, horizon=50)


def test_rerouting_reduces_loss():
    # direct a-b fails; the a-c-b detour has 20 spare trips/day
    net = line_network([("ab", "a", "b", 40, 100), ("ac", "a", "c", 30, 40), ("cb", "c", "b", 30, 40)])
    flow = flow_of(net, [("a", "b", 30, ["ab"])])
    out = run_scenario(net, flow, scenario(net, ["ab"]), ReroutePolicy(), INSTANT, 0, record_paths=True)
    # day 0: 20 of 30 rerouted; day 1: 30 + min(10, 15) of 40
    assert out.q_series == [pytest.approx(2 / 3), 1.0]
    assert out.paths[0] == {"a->b": [(["ac", "cb"], 20.0)]}


_NET, _FLOW = synthetic_network(n_nodes=25, n_edges=40, n_od=60, seed=4, demand_scale=60)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 12.0), st.sampled_from([0.3, 0.5, 0.9]))
def test_conservation_and_bounds(seed, psi, prob):
    runs = generate_random_scenarios(_NET, psi, 1, seed)
    out = run_scenario(_NET, _FLOW, runs.scenarios[0], ReroutePolicy(), RecoveryModel(prob), seed)
    days = len(out.q_series)
    assert all(0.0 <= q <= 1.0 for q in out.q_series) and out.q_series[-1] == 1.0
    assert all(d <= m + 1e-9 for d, m in zip(out.delivered, out.demanded))
    assert math.fsum(out.delivered) == pytest.approx(days * _FLOW.total_daily_demand, rel=1e-9)
    assert out.los == math.fsum(1 - q for q in out.q_series)
    assert out.recovery_day == days - 1


def test_assess_event_examples():
    zero = FailureProbabilities({e: 0.0 for e in _NET.edges})
    assert list(assess_event(_NET, _FLOW, zero, n_runs=5, seed=1).samples) == [0.0] * 5
    p = FailureProbabilities({e: 0.1 for e in _NET.edges})
    one = assess_event(_NET, _FLOW, p, n_runs=1, seed=3)
    again = assess_event(_NET, _FLOW, p, n_runs=8, seed=3)
    assert len(one) == 1 and one.samples[0] == again.samples[0]
    assert list(assess_event(_NET, _FLOW, p, n_runs=8, seed=3).samples) == list(again.samples)
    summary = again.summary()
    assert summary["n"] == 8 and summary["q025"] <= summary["mean"] <= summary["q975"]
    assert (again.samples >= 0).all()


def test_worker_count_does_not_change_results():
    runs = generate_random_scenarios(_NET, 6, 6, seed=9)
    serial = run_scenarios(_NET, _FLOW, runs, seed=9, workers=1)
    parallel = run_scenarios(_NET, _FLOW, runs, seed=9, workers=2)
    assert [o.q_series for o in serial] == [o.q_series for o in parallel]
    assert [o.run_index for o in parallel] == list(range(6))
