"""Gridded weather events, projection onto assets, and fragility curves."""

from __future__ import annotations

import datetime as dt
import json
import math
import os
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gridshock.errors import InvalidGrid, OutOfDomain
from gridshock.network import AssetNetwork


@dataclass(frozen=True, eq=False)
class WeatherGrid:
    """Regular lat/lon grid; row 0 is the southernmost row.

    Cell ``(r, c)`` is centred on ``(lat0 + r*dlat, lon0 + c*dlon)``.
    """

    lat0: float
    lon0: float
    dlat: float
    dlon: float
    values: np.ndarray
    units: str = "degC"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise InvalidGrid("grid values must be a non-empty 2-D array")
        if not (self.dlat > 0 and self.dlon > 0):
            raise InvalidGrid("grid spacing must be positive (coordinates must increase)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    def cell_index(self, lat: float, lon: float) -> tuple[int, int] | None:
        """Nearest cell to a point, or None outside the grid's bounding box.

        On an exact tie the lower index wins on each axis, which is the
        lower row-major index overall.
        """
        fr = (lat - self.lat0) / self.dlat
        fc = (lon - self.lon0) / self.dlon
        if not (-0.5 <= fr <= self.nrows - 0.5 and -0.5 <= fc <= self.ncols - 0.5):
            return None
        r = min(max(math.ceil(fr - 0.5), 0), self.nrows - 1)
        c = min(max(math.ceil(fc - 0.5), 0), self.ncols - 1)
        return r, c

    def value_at(self, lat: float, lon: float) -> float | None:
        idx = self.cell_index(lat, lon)
        return None if idx is None else float(self.values[idx])


@dataclass(frozen=True)
class WeatherEvent:
    date: dt.date
    grid: WeatherGrid


@dataclass(frozen=True)
class LocalConditions:
    omega: Mapping[str, float]
    mode: str = "midpoint"


@dataclass(frozen=True)
class FailureProbabilities:
    p: Mapping[str, float]

    def __post_init__(self):
        for k, v in self.p.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"probability for {k!r} outside [0, 1]: {v}")


@dataclass(frozen=True)
class FragilityFunction:
    kind: str = "gaussian_sigmoid"
    mu: float = 35.0
    sigma: float = 2.5
    threshold: float = 35.0

    def __post_init__(self):
        if self.kind not in ("gaussian_sigmoid", "step"):
            raise ValueError(f"unknown fragility kind {self.kind!r}")
        if self.kind == "gaussian_sigmoid" and not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def sigmoid(cls, mu: float = 35.0, sigma: float = 2.5) -> "FragilityFunction":
        return cls("gaussian_sigmoid", mu=mu, sigma=sigma)

    @classmethod
    def step(cls, threshold: float) -> "FragilityFunction":
        return cls("step", threshold=threshold)

    def __call__(self, omega: float) -> float:
        return evaluate_fragility(self, omega)


def normal_cdf(x: float) -> float:
    # erfc keeps full relative precision in the lower tail
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def evaluate_fragility(f: FragilityFunction, omega: float) -> float:
    if f.kind == "step":
        # at the threshold itself the asset is taken to fail
        return 1.0 if omega >= f.threshold else 0.0
    return normal_cdf((omega - f.mu) / f.sigma)


def project_event(event: WeatherEvent, network: AssetNetwork, samples: int = 1) -> LocalConditions:
    """Assign each edge the weather value of the cell nearest its midpoint.

    With ``samples > 1`` the edge is sampled at that many evenly spaced points
    and receives the maximum value found.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    grid = event.grid
    omega = {}
    for eid in network.edges:
        best = -math.inf
        for i in range(samples):
            lat, lon = network.point_along(eid, (i + 0.5) / samples)
            v = grid.value_at(lat, lon)
            if v is None:
                raise OutOfDomain(eid)
            best = max(best, v)
        omega[eid] = best
    return LocalConditions(omega=omega, mode="midpoint" if samples == 1 else f"max-of-{samples}")


def failure_probabilities(cond: LocalConditions, f: FragilityFunction) -> FailureProbabilities:
    return FailureProbabilities({k: evaluate_fragility(f, w) for k, w in cond.omega.items()})


def expected_failed_edges(p: FailureProbabilities) -> float:
    """Expected number of failed assets (sum of failure probabilities)."""
    return math.fsum(p.p.values())


# ------------------------------------------------------------ weather files


def load_weather_event(path) -> WeatherEvent:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return weather_event_from_dict(doc)


def weather_event_from_dict(doc: Mapping) -> WeatherEvent:
    try:
        nrows, ncols = int(doc["nrows"]), int(doc["ncols"])
        values = np.asarray(doc["values"], dtype=float)
        date = dt.date.fromisoformat(doc["date"])
        lat0, lon0 = float(doc["lat0"]), float(doc["lon0"])
        dlat, dlon = float(doc["dlat"]), float(doc["dlon"])
    except KeyError as exc:
        raise InvalidGrid(f"weather document missing field {exc.args[0]!r}") from None
    if nrows < 1 or ncols < 1:
        raise InvalidGrid("nrows and ncols must be positive")
    if values.size != nrows * ncols:
        raise InvalidGrid(f"expected {nrows * ncols} values, got {values.size}")
    grid = WeatherGrid(lat0, lon0, dlat, dlon, values.reshape(nrows, ncols), doc.get("units", "degC"))
    return WeatherEvent(date=date, grid=grid)


def weather_event_to_dict(event: WeatherEvent) -> dict:
    g = event.grid
    return {
        "date": event.date.isoformat(),
        "lat0": g.lat0,
        "lon0": g.lon0,
        "dlat": g.dlat,
        "dlon": g.dlon,
        "nrows": g.nrows,
        "ncols": g.ncols,
        "units": g.units,
        "values": [float(v) for v in g.values.ravel()],
    }


def write_weather_event(event: WeatherEvent, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(weather_event_to_dict(event), fh)


def load_weather_series(directory) -> list[WeatherEvent]:
    """Load every ``*.json`` event in a directory, sorted by date."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"weather directory {os.fspath(directory)!r} not found")
    events = [load_weather_event(p) for p in sorted(directory.glob("*.json"))]
    events.sort(key=lambda e: e.date)
    return events
