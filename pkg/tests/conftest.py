import numpy as np
import pytest

from contactseir.graph import ContactGraph


def star(n: int) -> ContactGraph:
    """Hub 0 joined to leaves 1..n-1."""
    return ContactGraph.from_edges(n, [(0, i) for i in range(1, n)])


def path(n: int) -> ContactGraph:
    return ContactGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def triangle() -> ContactGraph:
    return ContactGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def random_graph(n: int, p: float, seed: int) -> ContactGraph:
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return ContactGraph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance verdicts ------------------------------------------------------------

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool | None, detail: str = "") -> None:
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"[{status}] criterion {number:>2}: {title}" + (f" | {detail}" if detail else "")
        _VERDICTS.append(line)
        print(line)
        if ok is None:
            pytest.skip(detail)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
