from pathlib import Path

import pytest

from gridshock.network import AssetEdge, AssetNetwork, AssetNode, FlowLayer, OdPair, path_length

FIXTURES = Path(__file__).parent / "fixtures"

# acceptance lines collected during the run and printed in the summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def line_network(spec, coords=None, spare=0.5):
    """Network from ``[(edge_id, u, v, length, traffic), ...]``.

    Node coordinates are arbitrary unless given.
    """
    names = sorted({x for _, u, v, *_ in spec for x in (u, v)})
    coords = coords or {}
    nodes = [AssetNode(n, *coords.get(n, (50.0 + 0.01 * i, 0.01 * i))) for i, n in enumerate(names)]
    edges = [AssetEdge(eid, u, v, float(length), float(traffic), spare) for eid, u, v, length, traffic in spec]
    return AssetNetwork.build(nodes, edges)


def flow_of(network, ods):
    """Flow layer from ``[(origin, destination, demand, [edge ids]), ...]``."""
    pairs = [
        OdPair(f"{o}->{d}", o, d, float(q), tuple(p), path_length(p, network))
        for o, d, q, p in ods
    ]
    return FlowLayer.build(pairs, network)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def record(number, title, passed, detail=""):
    """Log one acceptance line for the terminal summary."""
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number:>2}: {title}  {detail}".rstrip())
    print(ACCEPTANCE_LINES[-1])
