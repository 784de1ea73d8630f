"""Probabilistic resilience of flow networks to gridded weather hazards."""

from gridshock.hazard import (
    FailureProbabilities,
    FragilityFunction,
    LocalConditions,
    WeatherEvent,
    WeatherGrid,
    evaluate_fragility,
    expected_failed_edges,
    failure_probabilities,
    load_weather_event,
    load_weather_series,
    project_event,
)
from gridshock.network import (
    AssetEdge,
    AssetNetwork,
    AssetNode,
    FlowLayer,
    OdPair,
    load_asset_network,
    load_flow_layer,
    path_length,
)
from gridshock.routing import (
    ReroutePolicy,
    RerouteResult,
    find_interrupted,
    immediate_disruption,
    k_shortest_paths,
    reroute_interrupted,
)
from gridshock.scenario import (
    FailureScenario,
    ScenarioSet,
    generate_random_scenarios,
    generate_targeted_scenario,
    sample_climate_scenarios,
)
from gridshock.simulate import (
    LosDistribution,
    RecoveryModel,
    ScenarioOutcome,
    assess_event,
    quality_of_service,
    run_scenario,
    run_scenarios,
    step_recovery,
)

__version__ = "0.1.0"
