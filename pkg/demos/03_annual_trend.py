"""A multi-year LOS trend through the command-line pipeline.

Simulating every summer day of every year is too costly, so the trend
pipeline clusters the days of each five-year block by how hot they were
on each edge, simulates only one representative per cluster, and credits
its LOS distribution to every day of that cluster.  Per year the daily
distributions are convolved into an annual total, and the annual means are
smoothed to expose the trend.

The script writes synthetic inputs to a temporary directory, runs
``gridshock trend`` on them and prints the annual table.

Run:  python demos/03_annual_trend.py
"""

import csv
import datetime as dt
import tempfile
from pathlib import Path

from gridshock.cli import main
from gridshock.hazard import WeatherEvent, write_weather_event
from gridshock.network import write_asset_network, write_flow_layer
from gridshock.synthetic import daily_series, shifted, synthetic_network

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    network, flow = synthetic_network(n_nodes=60, n_edges=90, n_od=200, seed=2)
    write_asset_network(network, tmp / "nodes.csv", tmp / "edges.csv")
    write_flow_layer(flow, tmp / "od.csv")

    weather = tmp / "weather"
    weather.mkdir()
    # June to August of ten years, warming 0.3 C per year
    for year in range(2030, 2040):
        warming = 0.3 * (year - 2030)
        for event in daily_series(dt.date(year, 6, 1), 92, seed=year, trend_per_year=0.0, res=0.25):
            warmer = WeatherEvent(event.date, shifted(event.grid, warming))
            write_weather_event(warmer, weather / f"{event.date.isoformat()}.json")

    out = tmp / "out"
    code = main([
        "trend",
        "--nodes", str(tmp / "nodes.csv"),
        "--edges", str(tmp / "edges.csv"),
        "--od", str(tmp / "od.csv"),
        "--weather-dir", str(weather),
        "--k", "4",
        "--runs", "30",
        "--sg-window", "5",
        "--seed", "7",
        "--out", str(out),
    ])
    if code:
        raise SystemExit(code)

    with open(out / "annual_los.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'year':>6} {'mean':>8} {'5%':>8} {'95%':>8} {'smoothed':>9}")
    for r in rows:
        print(f"{r['year']:>6} {float(r['mean']):8.3f} {float(r['q05']):8.3f} {float(r['q95']):8.3f} {float(r['smoothed_mean']):9.3f}")
    print()
    print("outputs:", ", ".join(sorted(p.name for p in out.iterdir())))
