"""From a temperature field to expected damage.

A synthetic rail-like network is laid over a weather field with a hot spot
above its busy core.  Each edge reads the temperature of the grid cell
nearest its midpoint, the fragility curve turns that into a failure
probability, and the probabilities add up to the expected number of failed
edges (psi).  Warming the whole field a degree at a time shows how quickly
psi climbs once temperatures approach the curve's midpoint.

Run:  python demos/01_fragility_and_projection.py
"""

import datetime as dt

import numpy as np

from gridshock.hazard import (
    FragilityFunction,
    WeatherEvent,
    expected_failed_edges,
    failure_probabilities,
    project_event,
)
from gridshock.synthetic import calibrate_offset, hotspot_grid, shifted, synthetic_network

network, flow = synthetic_network(seed=2)
grid = hotspot_grid(radius_deg=0.8, seed=2)
fragility = FragilityFunction.sigmoid(mu=35.0, sigma=2.5)

print(f"network: {len(network.nodes)} nodes, {len(network.edges)} edges, {len(flow.pairs)} OD pairs")
print(f"total daily demand: {flow.total_daily_demand:,.0f} trips")
print()

# a few points on the curve
for omega in (30.0, 32.5, 35.0, 37.5, 40.0):
    print(f"  P(fail | {omega:4.1f} C) = {fragility(omega):.4f}")
print()

print(" shift   hottest edge   psi")
for shift in range(0, 9, 2):
    event = WeatherEvent(dt.date(2022, 7, 19), shifted(grid, shift))
    cond = project_event(event, network)
    p = failure_probabilities(cond, fragility)
    print(f"  +{shift} C   {max(cond.omega.values()):6.2f} C   {expected_failed_edges(p):7.3f}")
print()

# sampling several points per edge only ever raises its reading
event = WeatherEvent(dt.date(2022, 7, 19), shifted(grid, 6))
mid = project_event(event, network)
multi = project_event(event, network, samples=5)
raised = sum(multi.omega[e] > mid.omega[e] for e in network.edges)
print(f"max-of-5 sampling raises the reading on {raised} of {len(network.edges)} edges")

# the shift that yields a chosen psi, as used for matched-intensity comparisons
for target in (2, 5, 10, 20):
    shift = calibrate_offset(network, grid, fragility, target)
    p = failure_probabilities(project_event(WeatherEvent(None, shifted(grid, shift)), network), fragility)
    top = np.sort(list(p.p.values()))[::-1][:3]
    print(f"psi={target:>2}: shift {shift:+.2f} C, top edge probabilities {np.round(top, 3)}")
