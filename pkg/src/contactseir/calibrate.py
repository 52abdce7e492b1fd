"""Bridge the ODE model onto contact graphs and tune generator parameters.

The ODE transmission rate relates to the per-contact probability through the
mean degree, ``beta = <k> * phi``. For a k-regular graph that gives
``phi = beta / k``; the k whose simulated infected curve best matches the
ODE curve fixes ``phi*``. Holding ``phi*`` fixed, the BA attachment count
and the ER edge probability are then tuned the same way.

All searches are exhaustive over the supplied grid. Every candidate is
simulated with the same replicate seeds (common random numbers), and ties
in MSE go to the smaller parameter.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from operator import truediv
from typing import Callable, Sequence

import numpy as np

from .engine import DiseaseParams, replicate_seed, run
from .graph import ContactGraph
from .netgen import gen_ba, gen_er, gen_regular
from .ode import SeirTrajectory, mse


@dataclass
class GridFit:
    """Outcome of one exhaustive grid search."""

    param: str
    best: float
    candidates: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def fit_error(self) -> float:
        return self.errors[self.candidates.index(self.best)]

    def as_dict(self) -> dict:
        return {
            "param": self.param,
            "best": self.best,
            "fit_error": self.fit_error,
            "grid": [{"value": c, "mse": e} for c, e in zip(self.candidates, self.errors)],
            "skipped": self.skipped,
        }


@dataclass
class BridgeResult:
    k_star: int
    phi_star: float
    fit_error: float
    fit: GridFit | None = None


def comparison_window(reference, extra_days: int = 14) -> int:
    """Last day compared: the reference's infected peak plus ``extra_days``."""
    curve = _infected(reference)
    return min(int(np.argmax(curve)) + extra_days, len(curve) - 1)


def _infected(reference) -> np.ndarray:
    if isinstance(reference, SeirTrajectory):
        return np.asarray(reference.I, dtype=float)
    return np.asarray(reference, dtype=float)


def _seed_list(seeds, master: int = 0) -> list[int]:
    if isinstance(seeds, int):
        return [replicate_seed(master, i) for i in range(seeds)]
    return [int(s) for s in seeds]


def mean_infected_curve(g: ContactGraph, disease: DiseaseParams, days: int,
                        seeds: Sequence[int], counts=None) -> np.ndarray:
    """Replicate-mean infected curve (days 0..``days``) without interventions."""
    runs = [run(g, disease, days=days, seed=s, counts=counts)[:, 2] for s in seeds]
    return np.mean(runs, axis=0)


def _evaluate(args) -> float:
    build, value, phi, sigma, gamma, days, seeds, counts, target = args
    g = build(value)
    curve = mean_infected_curve(g, DiseaseParams(phi, sigma, gamma), days, seeds, counts)
    return mse(curve, target)


def _grid_search(param: str, candidates: list, build: Callable, phi_of: Callable,
                 sigma: float, gamma: float, reference, seeds, counts,
                 window: int | None, workers: int) -> GridFit:
    target = _infected(reference)
    days = comparison_window(target) if window is None else window
    target = target[: days + 1]
    if len(target) < days + 1:
        raise ValueError(f"reference curve has {len(target)} days, need {days + 1}")
    seeds = list(seeds)
    jobs = [(build, c, phi_of(c), sigma, gamma, days, seeds, counts, target) for c in candidates]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(_evaluate, jobs))
    else:
        errors = [_evaluate(j) for j in jobs]
    # argmin returns the first minimum; candidates are ascending
    best = candidates[int(np.argmin(errors))]
    return GridFit(param, best, list(candidates), [float(e) for e in errors])


def _regular(n, seed, k):
    return gen_regular(n, int(k), seed)


def _ba(n, seed, m):
    return gen_ba(n, int(m), seed)


def _er(n, seed, p):
    return gen_er(n, float(p), seed)


def _const(value, _):
    return value


def bridge_k(beta: float, sigma: float, gamma: float, n: int, init, k_range,
             seeds=10, reference=None, window: int | None = None,
             graph_seed: int = 0, workers: int = 1) -> BridgeResult:
    """Find the regular degree k* whose curve (with phi = beta/k) best fits ``reference``.

    Args:
        k_range: Candidate degrees; infeasible ones (n*k odd, k >= n) are skipped.
        seeds: Replicate count or explicit replicate seeds.
        reference: ODE trajectory or infected curve to match.
        window: Last day compared; defaults to the reference peak day + 14.
    """
    if reference is None:
        raise ValueError("bridge_k needs a reference curve")
    ks = sorted(int(k) for k in k_range)
    if not ks:
        raise ValueError("k_range is empty")
    feasible = [k for k in ks if 0 < k < n and (n * k) % 2 == 0]
    if not feasible:
        raise ValueError(f"no feasible k in {ks} for n={n}")
    fit = _grid_search("k", feasible, partial(_regular, n, graph_seed), partial(truediv, beta), sigma, gamma,
                       reference, _seed_list(seeds), init, window, workers)
    fit.skipped = [k for k in ks if k not in feasible]
    k_star = int(fit.best)
    return BridgeResult(k_star, beta / k_star, fit.fit_error, fit)


def tune_ba(phi_star: float, sigma: float, gamma: float, n: int, init, m_range,
            seeds=10, reference=None, window: int | None = None,
            graph_seed: int = 0, workers: int = 1) -> GridFit:
    """Attachment count m whose BA graph best reproduces ``reference`` at fixed phi."""
    if reference is None:
        raise ValueError("tune_ba needs a reference curve")
    ms = sorted(int(m) for m in m_range)
    if not ms:
        raise ValueError("m_range is empty")
    if ms[0] < 1 or ms[-1] >= n:
        raise ValueError(f"m_range must lie in [1, n), got {ms[0]}..{ms[-1]}")
    return _grid_search("m_ba", ms, partial(_ba, n, graph_seed), partial(_const, phi_star), sigma, gamma,
                        reference, _seed_list(seeds), init, window, workers)


def tune_er(phi_star: float, sigma: float, gamma: float, n: int, init, p_range,
            seeds=10, reference=None, window: int | None = None,
            graph_seed: int = 0, workers: int = 1) -> GridFit:
    """Edge probability whose ER graph best reproduces ``reference`` at fixed phi."""
    if reference is None:
        raise ValueError("tune_er needs a reference curve")
    ps = sorted(float(p) for p in p_range)
    if not ps:
        raise ValueError("p_range is empty")
    if ps[0] < 0 or ps[-1] > 1:
        raise ValueError("p_range must lie in [0, 1]")
    return _grid_search("p_er", ps, partial(_er, n, graph_seed), partial(_const, phi_star), sigma, gamma,
                        reference, _seed_list(seeds), init, window, workers)


def grid(lo: float, hi: float, step: float, decimals: int = 10) -> list[float]:
    """Inclusive arithmetic grid ``lo, lo+step, ..., hi`` without float drift."""
    if step <= 0 or hi < lo:
        raise ValueError(f"bad grid ({lo}, {hi}, {step})")
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, decimals) for i in range(count)]
