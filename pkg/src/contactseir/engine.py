"""Stochastic SEIR dynamics on a contact graph, one day per step.

Each day every infected node contacts each of its active neighbours once;
a susceptible neighbour becomes exposed with probability ``phi`` (scaled by
mask multipliers when masks are in force). Independently, each node that
was exposed at the start of the day becomes infected with probability
``sigma`` and each node that was infected recovers with probability
``gamma``. Transitions only ever go S -> E -> I -> R.

Random numbers are consumed in a fixed order so that a seed pins down the
whole trajectory: optional contact-sampling draws, one uniform per contact
(infected nodes ascending, neighbours ascending), one per exposed node, one
per infected node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import ContactGraph

S, E, I, R = 0, 1, 2, 3
COMPARTMENTS = "SEIR"


@dataclass(frozen=True)
class DiseaseParams:
    phi: float = 0.0371
    sigma: float = 1 / 5
    gamma: float = 1 / 14

    def __post_init__(self):
        for name in ("phi", "sigma", "gamma"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1], got {value}")


@dataclass(frozen=True)
class MaskParams:
    """Transmission multipliers for two, one or zero masked endpoints.

    ``coverage`` is the fraction of compliers who actually wear a mask once
    the mask mandate starts; non-compliers never do.
    """

    m2: float = 0.6
    m1: float = 0.8
    m0: float = 1.0
    coverage: float = 1.0

    def __post_init__(self):
        for name in ("m2", "m1", "m0"):
            if getattr(self, name) < 0:
                raise ValueError(f"mask multiplier {name} must be non-negative")
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage must be in [0, 1], got {self.coverage}")

    @property
    def table(self) -> np.ndarray:
        # indexed by number of masked endpoints
        return np.array([self.m0, self.m1, self.m2])


@dataclass
class EpidemicState:
    comp: np.ndarray
    complier: np.ndarray
    wears_mask: np.ndarray
    quarantined: np.ndarray
    rng: np.random.Generator
    mask_draw: np.ndarray
    day: int = 0
    # intervention bookkeeping, keyed by removal tag
    applied: dict[str, str] = field(default_factory=dict)
    quarantine_policies: dict[str, float] = field(default_factory=dict)
    quarantine_checked: dict[str, np.ndarray] = field(default_factory=dict)
    quarantined_by: dict[int, str] = field(default_factory=dict)
    mask_tag: str | None = None

    @property
    def n(self) -> int:
        return len(self.comp)

    @property
    def mask_active(self) -> bool:
        return self.mask_tag is not None

    def counts(self) -> np.ndarray:
        return np.bincount(self.comp, minlength=4)


@dataclass
class StepDelta:
    new_exposed: np.ndarray
    new_infected: np.ndarray
    new_recovered: np.ndarray

    def is_empty(self) -> bool:
        return not (len(self.new_exposed) or len(self.new_infected) or len(self.new_recovered))


def replicate_seed(master: int, index: int) -> int:
    """Stable 64-bit seed for replicate ``index`` of a run seeded with ``master``.

    Depends only on the pair, so adding replicates never changes earlier ones.
    """
    state = np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)
    return int(state[0])


def replicate_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Main stream and an independent mask-adoption stream for one run."""
    main, masks = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(main)), np.random.Generator(np.random.PCG64(masks))


def init_state(g: ContactGraph, counts, mask: MaskParams | None = None,
               noncompliance: float = 0.26, seed: int = 0) -> EpidemicState:
    """Assign compartments to random nodes and draw fixed compliance flags."""
    counts = [int(c) for c in counts]
    if len(counts) != 4 or min(counts) < 0:
        raise ValueError(f"initial counts must be four non-negative integers, got {counts}")
    if sum(counts) != g.n:
        raise ValueError(f"initial counts sum to {sum(counts)} but the graph has {g.n} nodes")
    if not 0.0 <= noncompliance <= 1.0:
        raise ValueError(f"noncompliance must be in [0, 1], got {noncompliance}")
    mask = mask or MaskParams()
    rng, mask_rng = replicate_streams(seed)

    comp = np.empty(g.n, dtype=np.int8)
    comp[rng.permutation(g.n)] = np.repeat(np.arange(4, dtype=np.int8), counts)
    complier = rng.random(g.n) >= noncompliance
    mask_draw = mask_rng.random(g.n)
    return EpidemicState(
        comp=comp,
        complier=complier,
        wears_mask=np.zeros(g.n, dtype=bool),
        quarantined=np.zeros(g.n, dtype=bool),
        rng=rng,
        mask_draw=mask_draw,
    )


def contact_pairs(state: EpidemicState, g: ContactGraph) -> tuple[np.ndarray, np.ndarray]:
    """(infected source, neighbour) for every active edge of every infected node."""
    infected = np.flatnonzero(state.comp == I)
    if infected.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    nbrs = [g.neighbors(int(i)) for i in infected]
    lengths = np.fromiter((len(a) for a in nbrs), dtype=np.int64, count=len(nbrs))
    targets = np.concatenate(nbrs) if lengths.sum() else np.empty(0, dtype=np.int64)
    return np.repeat(infected, lengths), targets


def step(state: EpidemicState, g: ContactGraph, disease: DiseaseParams,
         mask: MaskParams | None = None, mask_active: bool | None = None) -> StepDelta:
    """Advance ``state`` by one day in place and return the transitions."""
    rng = state.rng
    comp = state.comp
    if mask_active is None:
        mask_active = state.mask_active

    src, dst = contact_pairs(state, g)
    if g.contact_sampling_rate < 1.0 and dst.size:
        kept = rng.random(dst.size) < g.contact_sampling_rate
        src, dst = src[kept], dst[kept]
    draws = rng.random(dst.size)
    if mask_active:
        table = (mask or MaskParams()).table
        masked = state.wears_mask[src].astype(np.int64) + state.wears_mask[dst]
        phi_eff = disease.phi * table[masked]
    else:
        phi_eff = disease.phi
    hit = (comp[dst] == S) & (draws < phi_eff)
    new_exposed = np.unique(dst[hit])

    exposed = np.flatnonzero(comp == E)
    new_infected = exposed[rng.random(exposed.size) < disease.sigma]
    infected = np.flatnonzero(comp == I)
    new_recovered = infected[rng.random(infected.size) < disease.gamma]

    comp[new_exposed] = E
    comp[new_infected] = I
    comp[new_recovered] = R
    state.day += 1
    return StepDelta(new_exposed, new_infected, new_recovered)


def run(g: ContactGraph, disease: DiseaseParams, mask: MaskParams | None = None,
        npis=None, days: int = 200, seed: int = 0, counts=None,
        noncompliance: float = 0.26, state_hook=None) -> np.ndarray:
    """Simulate one replicate and return daily (S, E, I, R) counts.

    ``g`` is copied, never mutated. Interventions due on day ``t`` are
    applied before that day's step; row 0 holds the initial counts and row
    ``t + 1`` the counts after day ``t``.

    Args:
        npis: An ``NpiTimeline`` (or iterable of ``NpiEvent``), or None.
        counts: Initial (S, E, I, R); defaults to 3 exposed, 1 infected.
        state_hook: Optional callable ``(state, graph, delta)`` invoked after
            every step; used by tests to audit invariants.
    """
    from .npi import NpiTimeline, apply_event, sweep_quarantines

    if days < 0:
        raise ValueError(f"days must be non-negative, got {days}")
    mask = mask or MaskParams()
    graph = g.copy()
    if counts is None:
        counts = default_counts(graph.n)
    state = init_state(graph, counts, mask, noncompliance, seed)
    timeline = npis if isinstance(npis, NpiTimeline) else NpiTimeline(list(npis or []))
    due = timeline.by_day()

    out = np.empty((days + 1, 4), dtype=np.int64)
    out[0] = state.counts()
    for t in range(days):
        for event in due.get(t, ()):
            apply_event(state, graph, event, mask)
        sweep_quarantines(state, graph)
        delta = step(state, graph, disease, mask)
        if state_hook is not None:
            state_hook(state, graph, delta)
        out[t + 1] = state.counts()
    return out


def default_counts(n: int) -> tuple[int, int, int, int]:
    """Three exposed and one infected seed, everyone else susceptible."""
    if n < 4:
        raise ValueError(f"default seeding needs at least 4 nodes, got {n}")
    return (n - 4, 3, 1, 0)
