"""Command-line pipelines: ``assess``, ``compare``, ``cluster`` and ``trend``.

Settings come from an optional TOML file (``--config``) with flags taking
precedence.  Every command writes its resolved settings to ``config.toml``
in the output directory; feeding that file back reproduces the outputs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import json
import logging
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gridshock import hazard
from gridshock.analysis import (
    DayFeatureMatrix,
    bin_samples,
    convolve_annual,
    default_bin_width,
    format_p_value,
    kmeans_days,
    mann_whitney_u,
    savitzky_golay,
)
from gridshock.errors import ConfigError, GridshockError
from gridshock.network import AssetEdge, load_asset_network, load_flow_layer
from gridshock.routing import ReroutePolicy, immediate_disruption
from gridshock.scenario import (
    CLIMATE,
    RANDOM,
    STRATEGIES,
    generate_random_scenarios,
    round_half_up,
    sample_climate_scenarios,
    targeted_scenarios,
)
from gridshock.simulate import RecoveryModel, los_distribution, run_scenarios

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("gridshock")

DECISIONS = {
    "psi_rounding": "round-half-up",
    "od_order": "descending current demand, ties by OD id",
    "backlog_drain": "spare_fraction x daily demand per day over the recovered original path",
    "reroute_filter": "daily demand < min_trips or original length < min_length_km",
    "q_day0": "after same-day rerouting",
}


@dataclass
class RunConfig:
    nodes: str | None = None
    edges: str | None = None
    od: str | None = None
    weather_dir: str | None = None
    fragility: str = "sigmoid"
    mu: float = 35.0
    sigma: float = 2.5
    threshold: float = 35.0
    runs: int = 250
    seed: int = 0
    spare_fraction: float | None = None
    recovery_prob: float = 0.5
    max_paths: int = 5
    detour_factor: float = 2.0
    min_trips: float = 15.0
    min_length_km: float = 30.0
    strategies: tuple = (CLIMATE,)
    cluster: bool = False
    k: int = 10
    group_years: int = 5
    summer_start: str = "05-01"
    summer_end: str = "09-30"
    projection_samples: int = 1
    sg_window: int = 11
    sg_order: int = 2
    bins: int = 200
    dump_paths: bool = False
    out: str = "out"

    def validate(self, files=("nodes", "edges", "od")) -> None:
        for name in files:
            value = getattr(self, name)
            if not value:
                raise ConfigError(name, "is required")
            if not Path(value).is_file():
                raise ConfigError(name, f"file {value!r} does not exist")
        if not self.weather_dir:
            raise ConfigError("weather_dir", "is required")
        if not Path(self.weather_dir).is_dir():
            raise ConfigError("weather_dir", f"directory {self.weather_dir!r} does not exist")
        if self.fragility not in ("sigmoid", "step"):
            raise ConfigError("fragility", "must be 'sigmoid' or 'step'")
        if self.fragility == "sigmoid" and not self.sigma > 0:
            raise ConfigError("sigma", "must be positive")
        if self.runs < 1:
            raise ConfigError("runs", "must be >= 1")
        if self.spare_fraction is not None and not 0 <= self.spare_fraction <= 1:
            raise ConfigError("spare_fraction", "must lie in [0, 1]")
        if not 0 < self.recovery_prob <= 1:
            raise ConfigError("recovery_prob", "must lie in (0, 1]")
        if self.max_paths < 1:
            raise ConfigError("max_paths", "must be >= 1")
        if self.detour_factor < 1:
            raise ConfigError("detour_factor", "must be >= 1")
        if not self.strategies:
            raise ConfigError("strategies", "at least one strategy is required")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise ConfigError("strategies", f"unknown strategies {bad}")
        if self.k < 1:
            raise ConfigError("k", "must be >= 1")
        if self.group_years < 1:
            raise ConfigError("group_years", "must be >= 1")
        for name in ("summer_start", "summer_end"):
            try:
                _month_day(getattr(self, name))
            except ValueError:
                raise ConfigError(name, "must look like MM-DD") from None
        if self.projection_samples < 1:
            raise ConfigError("projection_samples", "must be >= 1")
        if self.sg_window < 1 or self.sg_window % 2 == 0:
            raise ConfigError("sg_window", "must be a positive odd integer")
        if self.sg_order < 0:
            raise ConfigError("sg_order", "must be >= 0")
        if self.bins < 1:
            raise ConfigError("bins", "must be >= 1")

    @property
    def fragility_function(self) -> hazard.FragilityFunction:
        if self.fragility == "step":
            return hazard.FragilityFunction.step(self.threshold)
        return hazard.FragilityFunction.sigmoid(self.mu, self.sigma)

    @property
    def policy(self) -> ReroutePolicy:
        return ReroutePolicy(self.max_paths, self.detour_factor, self.min_trips, self.min_length_km)

    def to_toml(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_toml_value(value)}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["strategies"] = list(self.strategies)
        return d


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return json.dumps(str(v))


def _month_day(text: str) -> tuple[int, int]:
    month, day = (int(x) for x in text.split("-"))
    dt.date(2000, month, day)
    return month, day


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value):
    default = getattr(RunConfig, name, None)
    try:
        if name == "strategies":
            if isinstance(value, str):
                value = [s.strip() for s in value.split(",") if s.strip()]
            return tuple(value)
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int) and not isinstance(value, bool):
            return int(value)
        if isinstance(default, float) or name == "spare_fraction":
            return float(value)
        return value
    except (TypeError, ValueError):
        raise ConfigError(name, f"invalid value {value!r}") from None


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    unknown = sorted(set(doc) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(unknown[0], "unknown setting")
    return {k: _coerce(k, v) for k, v in doc.items()}


# ------------------------------------------------------------------ inputs


def _load_inputs(cfg: RunConfig):
    network = load_asset_network(cfg.nodes, cfg.edges)
    if cfg.spare_fraction is not None:
        network = network.with_edges(
            AssetEdge(e.id, e.u, e.v, e.length, e.daily_traffic, cfg.spare_fraction) for e in network.edges.values()
        )
    flow = load_flow_layer(cfg.od, network)
    events = hazard.load_weather_series(cfg.weather_dir)
    if not events:
        raise ConfigError("weather_dir", "contains no weather events")
    return network, flow, events


def event_seed(seed: int, date: dt.date) -> int:
    """Per-event seed derived from the top-level seed and the event date."""
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=(date.toordinal(),)).generate_state(1)[0])


def _in_summer(date: dt.date, cfg: RunConfig) -> bool:
    return _month_day(cfg.summer_start) <= (date.month, date.day) <= _month_day(cfg.summer_end)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------- clustering


def _cluster_events(cfg: RunConfig, network, events):
    """Cluster summer days per year group; returns (rows, [(rep_event, members)])."""
    summer = [e for e in events if _in_summer(e.date, cfg)]
    if not summer:
        raise ConfigError("summer_start", "no weather events fall inside the summer window")
    first_year = summer[0].date.year
    groups = defaultdict(list)
    for e in summer:
        groups[(e.date.year - first_year) // cfg.group_years].append(e)

    rows, clusters = [], []
    for g in sorted(groups):
        members = groups[g]
        conds = [hazard.project_event(e, network, cfg.projection_samples) for e in members]
        features = DayFeatureMatrix.from_conditions([e.date for e in members], conds)
        k = min(cfg.k, len(members))
        cl = kmeans_days(features, k=k, seed=cfg.seed)
        by_date = {e.date: e for e in members}
        label = first_year + g * cfg.group_years
        for c in range(k):
            dates = [d for d in features.dates if cl.assignments[d] == c]
            clusters.append((by_date[cl.representatives[c]], [by_date[d] for d in dates]))
        for d in features.dates:
            c = cl.assignments[d]
            rows.append([d.isoformat(), f"{label}-{c}", int(cl.representatives[c] == d), cl.sizes[c]])
    return rows, clusters


# ------------------------------------------------------------------- assess


def _assess_events(cfg: RunConfig, network, flow, events, strategies, with_onset=False):
    frag = cfg.fragility_function
    recovery = RecoveryModel(cfg.recovery_prob)
    policy = cfg.policy
    los_rows, mwu_rows, onset_rows, onset_mwu_rows, path_rows = [], [], [], [], []
    summaries = []
    for event in events:
        cond = hazard.project_event(event, network, cfg.projection_samples)
        p = hazard.failure_probabilities(cond, frag)
        psi = hazard.expected_failed_edges(p)
        n_removed = round_half_up(psi)
        seed = event_seed(cfg.seed, event.date)
        entry = {
            "date": event.date.isoformat(),
            "psi": psi,
            "n_removed": n_removed,
            "mean_omega": float(np.mean(list(cond.omega.values()))),
            "projection": cond.mode,
            "strategies": {},
        }
        dists = {}
        onsets = {}
        for strategy in strategies:
            if strategy == CLIMATE:
                scen = sample_climate_scenarios(p, cfg.runs, seed, event.date)
            elif strategy == RANDOM:
                scen = generate_random_scenarios(network, psi, cfg.runs, seed, event.date)
            else:
                scen = targeted_scenarios(network, psi, cfg.runs, seed, event.date)
            outcomes = run_scenarios(network, flow, scen, policy, recovery, seed, record_paths=cfg.dump_paths)
            dist = los_distribution(outcomes, event.date, strategy, n_removed)
            dists[strategy] = dist
            for o in outcomes:
                los_rows.append([event.date.isoformat(), strategy, o.run_index, _fmt(o.los), o.recovery_day])
                if cfg.dump_paths:
                    path_rows.append(
                        {"event_date": event.date.isoformat(), "strategy": strategy, "run_index": o.run_index, "days": o.paths}
                    )
            entry["strategies"][strategy] = dist.summary()
            if with_onset:
                onsets[strategy] = [immediate_disruption(flow, s.failed) for s in scen]
                for s, v in zip(scen, onsets[strategy]):
                    onset_rows.append([event.date.isoformat(), strategy, s.run_index, _fmt(v)])
                entry["strategies"][strategy]["onset_mean"] = float(np.mean(onsets[strategy]))
            log.info("%s %s psi=%.3f mean LOS=%.4f", event.date, strategy, psi, dist.mean)
        if CLIMATE in dists and RANDOM in dists:
            r = mann_whitney_u(dists[CLIMATE].samples, dists[RANDOM].samples)
            mwu_rows.append([event.date.isoformat(), n_removed, _fmt(r.u), _fmt(format_p_value(r.p_value))])
            entry["mwu_climate_vs_random"] = {"u": r.u, "p_value": r.p_value}
            if with_onset:
                r = mann_whitney_u(onsets[CLIMATE], onsets[RANDOM])
                onset_mwu_rows.append([event.date.isoformat(), n_removed, _fmt(r.u), _fmt(format_p_value(r.p_value))])
        summaries.append(entry)
    return los_rows, mwu_rows, onset_rows, onset_mwu_rows, path_rows, summaries


def _summary_doc(cfg: RunConfig, command: str, **extra) -> dict:
    return {"command": command, "config": cfg.as_dict(), "seed": cfg.seed, "decisions": DECISIONS, **extra}


def cmd_assess(cfg: RunConfig, command: str = "assess", with_onset: bool = False) -> None:
    cfg.validate()
    network, flow, events = _load_inputs(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.cluster:
        cluster_rows, clusters = _cluster_events(cfg, network, events)
        events = sorted((rep for rep, _ in clusters), key=lambda e: e.date)
        _write_csv(out / "clusters.csv", ["date", "cluster", "is_representative", "cluster_size"], cluster_rows)

    los_rows, mwu_rows, onset_rows, onset_mwu_rows, path_rows, summaries = _assess_events(
        cfg, network, flow, events, cfg.strategies, with_onset
    )
    _write_csv(out / "los.csv", ["event_date", "strategy", "run_index", "los", "recovery_day"], los_rows)
    _write_csv(out / "mwu.csv", ["event_date", "n_removed", "u", "p_value"], mwu_rows)
    if with_onset:
        _write_csv(out / "onset.csv", ["event_date", "strategy", "run_index", "disruption"], onset_rows)
        _write_csv(out / "onset_mwu.csv", ["event_date", "n_removed", "u", "p_value"], onset_mwu_rows)
    if cfg.dump_paths:
        with open(out / "paths.jsonl", "w", encoding="utf-8") as fh:
            for row in path_rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    _write_json(out / "summary.json", _summary_doc(cfg, command, events=summaries))
    (out / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")


def cmd_compare(cfg: RunConfig) -> None:
    cmd_assess(cfg, command="compare", with_onset=True)


def cmd_cluster(cfg: RunConfig) -> None:
    cfg.validate(files=("nodes", "edges"))
    network = load_asset_network(cfg.nodes, cfg.edges)
    events = hazard.load_weather_series(cfg.weather_dir)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, _ = _cluster_events(cfg, network, events)
    _write_csv(out / "clusters.csv", ["date", "cluster", "is_representative", "cluster_size"], rows)
    (out / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")


def cmd_trend(cfg: RunConfig) -> None:
    cfg.validate()
    network, flow, events = _load_inputs(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.cluster:
        cluster_rows, clusters = _cluster_events(cfg, network, events)
        _write_csv(out / "clusters.csv", ["date", "cluster", "is_representative", "cluster_size"], cluster_rows)
    else:
        clusters = [(e, [e]) for e in events if _in_summer(e.date, cfg)]
        if not clusters:
            raise ConfigError("summer_start", "no weather events fall inside the summer window")

    reps = sorted({rep.date: rep for rep, _ in clusters}.values(), key=lambda e: e.date)
    los_rows, _, _, _, _, summaries = _assess_events(cfg, network, flow, reps, (CLIMATE,))
    samples = defaultdict(list)
    for date, _, _, los, _ in los_rows:
        samples[date].append(float(los))
    all_samples = np.concatenate([np.asarray(v) for v in samples.values()])
    width = default_bin_width(all_samples, cfg.bins)
    binned = {d: bin_samples(v, width) for d, v in samples.items()}

    per_year = defaultdict(list)
    for rep, members in clusters:
        counts = defaultdict(int)
        for m in members:
            counts[m.date.year] += 1
        for year, c in counts.items():
            per_year[year].append((c, binned[rep.date.isoformat()]))
    years = sorted(per_year)
    annual = [convolve_annual(per_year[y], year=y) for y in years]
    means = np.array([a.mean for a in annual])
    window = min(cfg.sg_window, len(means) if len(means) % 2 else len(means) - 1)
    smoothed = savitzky_golay(means, window, min(cfg.sg_order, window - 1)) if window >= 1 else means

    _write_csv(out / "los.csv", ["event_date", "strategy", "run_index", "los", "recovery_day"], los_rows)
    _write_csv(
        out / "annual_los.csv",
        ["year", "mean", "q05", "q95", "smoothed_mean"],
        [[a.year, _fmt(a.mean), _fmt(a.q05), _fmt(a.q95), _fmt(s)] for a, s in zip(annual, smoothed)],
    )
    _write_json(
        out / "summary.json",
        _summary_doc(cfg, "trend", bin_width=width, smoothing={"window": window}, events=summaries),
    )
    (out / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")


COMMANDS = {"assess": cmd_assess, "compare": cmd_compare, "cluster": cmd_cluster, "trend": cmd_trend}


# ------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridshock", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML settings file; flags override it")
    common.add_argument("--nodes")
    common.add_argument("--edges")
    common.add_argument("--od")
    common.add_argument("--weather-dir", dest="weather_dir")
    common.add_argument("--fragility", choices=["sigmoid", "step"])
    common.add_argument("--mu", type=float)
    common.add_argument("--sigma", type=float)
    common.add_argument("--threshold", type=float)
    common.add_argument("--runs", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--spare-fraction", dest="spare_fraction", type=float)
    common.add_argument("--recovery-prob", dest="recovery_prob", type=float)
    common.add_argument("--max-paths", dest="max_paths", type=int)
    common.add_argument("--detour-factor", dest="detour_factor", type=float)
    common.add_argument("--min-trips", dest="min_trips", type=float)
    common.add_argument("--min-length-km", dest="min_length_km", type=float)
    common.add_argument("--strategies", help="comma-separated subset of climate,random,targeted")
    common.add_argument("--k", type=int)
    common.add_argument("--group-years", dest="group_years", type=int)
    common.add_argument("--summer-start", dest="summer_start")
    common.add_argument("--summer-end", dest="summer_end")
    common.add_argument("--projection-samples", dest="projection_samples", type=int)
    common.add_argument("--cluster", dest="cluster", action="store_true", default=None)
    common.add_argument("--no-cluster", dest="cluster", action="store_false")
    common.add_argument("--sg-window", dest="sg_window", type=int)
    common.add_argument("--sg-order", dest="sg_order", type=int)
    common.add_argument("--bins", type=int)
    common.add_argument("--dump-paths", dest="dump_paths", action="store_true", default=None)
    common.add_argument("--out")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("assess", parents=[common], help="LOS distributions per weather event")
    sub.add_parser("compare", parents=[common], help="climate vs random vs targeted at matched intensity")
    sub.add_parser("cluster", parents=[common], help="representative-day clustering only")
    sub.add_parser("trend", parents=[common], help="annual total-LOS time series")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.command == "compare":
        values["strategies"] = STRATEGIES
    if args.command == "trend":
        values["cluster"] = True
    if args.config:
        values.update(load_config(args.config))
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = _coerce(name, v)
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"gridshock: configuration error in {exc.field}: {exc}", file=sys.stderr)
        return 2
    except (GridshockError, OSError, ValueError) as exc:
        print(f"gridshock: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
