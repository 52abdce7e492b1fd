"""Replicate runner: mean curves with 95% bands, summary statistics, CSV output."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .engine import replicate_seed, run
from .graph import ContactGraph
from .scenario import Scenario

log = logging.getLogger(__name__)

Z95 = 1.96
CURVE_HEADER = ["day", "S_mean", "S_lo", "S_hi", "E_mean", "E_lo", "E_hi",
                "I_mean", "I_lo", "I_hi", "R_mean", "R_lo", "R_hi", "cum_infected_mean"]
SUMMARY_HEADER = ["peak_infected", "peak_day", "final_attack_rate", "n", "replicates",
                  "scenario_hash"]


@dataclass
class CurveSet:
    """Daily compartment counts over replicates.

    ``mean``, ``lo`` and ``hi`` have shape (days + 1, 4); ``raw`` has shape
    (replicates, days + 1, 4) when the per-replicate curves are kept.
    """

    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n: int
    raw: np.ndarray | None = None

    @classmethod
    def from_replicates(cls, raw, ci: str = "normal") -> CurveSet:
        raw = np.asarray(raw, dtype=float)
        reps = raw.shape[0]
        mean = raw.mean(axis=0)
        if reps == 1:
            lo = hi = mean.copy()
        elif ci == "percentile":
            lo = np.minimum(np.percentile(raw, 2.5, axis=0), mean)
            hi = np.maximum(np.percentile(raw, 97.5, axis=0), mean)
        else:
            half = Z95 * raw.std(axis=0, ddof=1) / np.sqrt(reps)
            lo, hi = mean - half, mean + half
        n = int(round(raw[0, 0].sum()))
        # counts live in [0, n]; the normal band can overshoot near the edges
        return cls(mean, np.clip(lo, 0, n), np.clip(hi, 0, n), n, raw)

    @property
    def days(self) -> int:
        return len(self.mean) - 1

    @property
    def cum_infected(self) -> np.ndarray:
        """Mean number ever infected (E + I + R) per day."""
        return self.n - self.mean[:, 0]

    def summary(self) -> SummaryStats:
        infected = self.mean[:, 2]
        day = int(np.argmax(infected))
        attack = (self.n - self.mean[-1, 0]) / self.n
        return SummaryStats(float(infected[day]), day, float(min(max(attack, 0.0), 1.0)))


@dataclass
class SummaryStats:
    peak_infected: float
    peak_day: int
    final_attack_rate: float


def _replicate(args) -> np.ndarray:
    graph, scenario, counts, seed = args
    return run(graph, scenario.disease, scenario.mask, scenario.timeline, scenario.days,
               seed, counts, scenario.noncompliance)


def run_replicates(graph: ContactGraph, scenario: Scenario, threads: int = 1) -> np.ndarray:
    counts = scenario.initial_counts(graph.n)
    jobs = [(graph, scenario, counts, replicate_seed(scenario.seed, i))
            for i in range(scenario.replicates)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(_replicate, jobs)))
    return np.array([_replicate(j) for j in jobs])


def run_scenario(scenario: Scenario, graph: ContactGraph | None = None,
                 threads: int = 1) -> tuple[CurveSet, SummaryStats]:
    """Run every replicate of ``scenario`` and reduce to a CurveSet.

    Replicate ``i`` is seeded from ``(scenario.seed, i)``. The graph is
    built from the scenario unless one is passed in.
    """
    if graph is None:
        graph = scenario.build_graph()
    raw = run_replicates(graph, scenario, threads)
    curves = CurveSet.from_replicates(raw, scenario.ci)
    return curves, curves.summary()


# -- output -------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.4f}"


def curves_csv(curves: CurveSet, digest: str = "") -> str:
    buf = io.StringIO()
    buf.write(f"# scenario_hash={digest} version={__version__}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    cum = curves.cum_infected
    for d in range(curves.days + 1):
        row = [str(d)]
        for c in range(4):
            row += [_fmt(curves.mean[d, c]), _fmt(curves.lo[d, c]), _fmt(curves.hi[d, c])]
        row.append(_fmt(cum[d]))
        writer.writerow(row)
    return buf.getvalue()


def summary_csv(stats: SummaryStats, n: int, replicates: int, digest: str = "") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    writer.writerow([_fmt(stats.peak_infected), stats.peak_day, f"{stats.final_attack_rate:.6f}",
                     n, replicates, digest])
    return buf.getvalue()


def write_outputs(out_dir: str | Path, curves: CurveSet, stats: SummaryStats,
                  replicates: int, digest: str = "") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "curves.csv", curves_csv(curves, digest))
    atomic_write(out / "summary.csv", summary_csv(stats, curves.n, replicates, digest))


def atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    tmp.replace(path)


def read_curves(path: str | Path) -> CurveSet:
    """Load the means and bands written by ``curves_csv`` (raw curves are not stored)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, body = rows[0], rows[1:]
    if header != CURVE_HEADER:
        raise ValueError(f"{path}: unexpected header {header}")
    data = np.array([[float(x) for x in r] for r in body])
    cols = {name: data[:, i] for i, name in enumerate(header)}
    stack = lambda suffix: np.column_stack([cols[f"{c}_{suffix}"] for c in "SEIR"])  # noqa: E731
    mean = stack("mean")
    return CurveSet(mean, stack("lo"), stack("hi"), int(round(mean[0].sum())))


# -- comparison ---------------------------------------------------------------

@dataclass
class CompareReport:
    """``a`` minus ``b``: per-day cumulative infections and final attack rate."""

    cum_a: np.ndarray
    cum_b: np.ndarray
    cum_diff: np.ndarray
    attack_rate_diff: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# final_attack_rate_diff={self.attack_rate_diff:.6f}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["day", "cum_infected_a", "cum_infected_b", "cum_infected_diff"])
        for d, (a, b, diff) in enumerate(zip(self.cum_a, self.cum_b, self.cum_diff)):
            writer.writerow([d, _fmt(a), _fmt(b), _fmt(diff)])
        return buf.getvalue()


def compare_runs(a: CurveSet, b: CurveSet) -> CompareReport:
    if a.days != b.days:
        raise ValueError(f"horizon mismatch: {a.days} vs {b.days} days")
    cum_a, cum_b = a.cum_infected, b.cum_infected
    rate = a.summary().final_attack_rate - b.summary().final_attack_rate
    return CompareReport(cum_a, cum_b, cum_a - cum_b, float(rate))
