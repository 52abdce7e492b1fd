"""Homogeneous-mixing SEIR model: fixed-step RK4 integration and beta grid fit."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SeirParams:
    beta: float
    sigma: float
    gamma: float
    n: float

    def __post_init__(self):
        for name in ("beta", "sigma", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.n <= 0:
            raise ValueError(f"n must be positive, got {self.n}")


@dataclass
class SeirTrajectory:
    """Daily samples; ``values[d] = (S, E, I, R)`` at day ``d``."""

    values: np.ndarray

    @property
    def S(self):
        return self.values[:, 0]

    @property
    def E(self):
        return self.values[:, 1]

    @property
    def I(self):  # noqa: E743
        return self.values[:, 2]

    @property
    def R(self):
        return self.values[:, 3]

    @property
    def days(self) -> int:
        return len(self.values) - 1

    def peak(self) -> tuple[float, int]:
        """(peak infected, day of the peak)."""
        d = int(np.argmax(self.I))
        return float(self.I[d]), d


def _rhs(y: np.ndarray, beta: float, sigma: float, gamma: float, n: float) -> np.ndarray:
    s, e, i, _ = y
    force = beta * s * i / n
    return np.array([-force, force - sigma * e, sigma * e - gamma * i, gamma * i])


def integrate_seir(params: SeirParams, init, days: int, steps_per_day: int = 100) -> SeirTrajectory:
    """Classical RK4 with ``steps_per_day`` equal steps, sampled once per day."""
    y = np.asarray(init, dtype=float)
    if y.shape != (4,):
        raise ValueError("init must be (S, E, I, R)")
    if np.any(y < 0):
        raise ValueError(f"initial compartments must be non-negative, got {tuple(y)}")
    if abs(y.sum() - params.n) > 1e-9 * params.n:
        raise ValueError(f"initial compartments sum to {y.sum()}, expected n={params.n}")
    if days < 1 or steps_per_day < 1:
        raise ValueError("days and steps_per_day must be >= 1")

    args = (params.beta, params.sigma, params.gamma, params.n)
    h = 1.0 / steps_per_day
    out = np.empty((days + 1, 4))
    out[0] = y
    for d in range(1, days + 1):
        for _ in range(steps_per_day):
            k1 = _rhs(y, *args)
            k2 = _rhs(y + 0.5 * h * k1, *args)
            k3 = _rhs(y + 0.5 * h * k2, *args)
            k4 = _rhs(y + h * k3, *args)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[d] = y
    return SeirTrajectory(out)


@dataclass
class CaseSeries:
    """Reported infected counts, one per day starting at ``start``."""

    start: date
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if np.any(self.counts < 0):
            raise ValueError("case counts must be non-negative")

    def __len__(self):
        return len(self.counts)

    def window(self, threshold: float = 100, end: date | None = None) -> CaseSeries:
        """Trim to the first day with ``counts >= threshold`` through ``end``."""
        hits = np.flatnonzero(self.counts >= threshold)
        if hits.size == 0:
            raise ValueError(f"series never reaches {threshold} cases")
        first = int(hits[0])
        last = len(self.counts) if end is None else (end - self.start).days + 1
        if last <= first:
            raise ValueError("fitting window is empty")
        return CaseSeries(date.fromordinal(self.start.toordinal() + first), self.counts[first:last])


def read_case_series(path: str | Path) -> CaseSeries:
    """Read a ``date,infected`` CSV with ISO dates and consecutive days."""
    dates, counts = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"date", "infected"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'date,infected'")
        for row in reader:
            dates.append(date.fromisoformat(row["date"].strip()))
            counts.append(float(row["infected"]))
    if not dates:
        raise ValueError(f"{path}: no rows")
    for a, b in zip(dates, dates[1:]):
        if (b - a).days != 1:
            raise ValueError(f"{path}: dates must be consecutive days ({a} -> {b})")
    return CaseSeries(dates[0], np.array(counts))


def fit_beta(series: CaseSeries, sigma: float, gamma: float, n: float, init,
             grid=(0.5, 1.0, 0.01), cumulative: bool = False,
             steps_per_day: int = 100) -> tuple[float, np.ndarray, np.ndarray]:
    """Grid search for the beta minimizing MSE against ``series``.

    The model's I compartment is compared with the series (or I + R when
    ``cumulative``), day 0 aligned with the first entry. Ties go to the
    smaller beta.

    Returns:
        (best beta, grid of betas, MSE at each grid point)
    """
    if len(series) == 0:
        raise ValueError("empty case series")
    if len(series) < 3:
        raise ValueError(f"case series needs at least 3 days, got {len(series)}")
    lo, hi, step = grid
    if not lo < hi or step <= 0:
        raise ValueError(f"bad grid {grid}")
    betas = np.round(lo + step * np.arange(int(round((hi - lo) / step)) + 1), 10)
    target = series.counts
    days = len(target) - 1
    errors = np.empty(len(betas))
    for j, beta in enumerate(betas):
        traj = integrate_seir(SeirParams(beta, sigma, gamma, n), init, max(days, 1), steps_per_day)
        model = traj.I + traj.R if cumulative else traj.I
        errors[j] = mse(model[: len(target)], target)
    best = int(np.argmin(errors))  # first minimum = smallest beta
    return float(betas[best]), betas, errors


def mse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))
