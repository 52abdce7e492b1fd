"""Non-pharmaceutical interventions as reversible graph and state mutations.

Every edge an intervention removes is parked in the graph's ledger under the
event's tag, so a later ``reopen`` of that tag puts back exactly those edges.
Quarantine, distancing and masks only act through compliers; hub closure
ignores compliance and succeeds per hub with probability ``p_success``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import E, I, EpidemicState, MaskParams
from .graph import ContactGraph, GraphError, top_degree_nodes

KINDS = ("quarantine", "distancing", "hubs", "masks", "reopen")


@dataclass
class NpiEvent:
    """One intervention (or lifting of one) scheduled for a simulation day.

    Only the fields relevant to ``kind`` are used: ``q_frac`` (quarantine),
    ``edge_frac`` (distancing), ``r_frac`` and ``p_success`` (hubs),
    ``target`` and ``calibration`` (reopen).
    """

    day: int
    kind: str
    tag: str | None = None
    q_frac: float | None = None
    edge_frac: float | None = None
    r_frac: float | None = None
    p_success: float = 1.0
    target: str | None = None
    calibration: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown NPI kind {self.kind!r}; expected one of {KINDS}")
        if self.day < 0:
            raise ValueError(f"NPI day must be non-negative, got {self.day}")
        required = {"quarantine": "q_frac", "distancing": "edge_frac", "hubs": "r_frac"}
        if self.kind in required and getattr(self, required[self.kind]) is None:
            raise ValueError(f"{self.kind} event needs {required[self.kind]}")
        for name in ("q_frac", "edge_frac", "p_success"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.r_frac is not None and not 0.0 < self.r_frac <= 1.0:
            raise ValueError(f"r_frac must be in (0, 1], got {self.r_frac}")
        if self.kind == "reopen" and not self.target:
            raise ValueError("reopen event needs a target tag")
        if self.calibration is not None:
            if self.kind != "reopen":
                raise ValueError("calibration is only valid on reopen events")
            self.calibration = tuple(int(c) for c in self.calibration)
            if len(self.calibration) != 4 or min(self.calibration) < 0:
                raise ValueError(f"calibration must be four non-negative counts, got {self.calibration}")


@dataclass
class NpiTimeline:
    events: list[NpiEvent] = field(default_factory=list)

    def __post_init__(self):
        # stable: same-day events keep their listed order
        self.events = sorted(self.events, key=lambda ev: ev.day)
        applied: set[str] = set()
        for idx, ev in enumerate(self.events):
            if ev.kind == "reopen":
                if ev.target not in applied:
                    raise ValueError(f"reopen of {ev.target!r} on day {ev.day} precedes its application")
                if ev.tag is None:
                    ev.tag = f"reopen:{ev.target}"
                continue
            if ev.tag is None:
                ev.tag = f"{ev.kind}@{ev.day}#{idx}"
            if ev.tag in applied:
                raise ValueError(f"duplicate NPI tag {ev.tag!r}")
            applied.add(ev.tag)

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def by_day(self) -> dict[int, list[NpiEvent]]:
        out: dict[int, list[NpiEvent]] = {}
        for ev in self.events:
            out.setdefault(ev.day, []).append(ev)
        return out


def _register(state: EpidemicState, tag: str, kind: str) -> None:
    if tag in state.applied:
        raise GraphError(f"NPI tag {tag!r} already applied")
    state.applied[tag] = kind


# -- quarantine -----------------------------------------------------------------

def apply_quarantine(state: EpidemicState, g: ContactGraph, q_frac: float, tag: str) -> list[int]:
    """Start an ongoing quarantine policy and isolate the first batch.

    From now on every complier that is (or becomes) exposed or infected gets
    one draw: with probability ``q_frac`` all its edges are removed under
    ``tag``. Returns the nodes isolated today.
    """
    if not 0.0 <= q_frac <= 1.0:
        raise ValueError(f"q_frac must be in [0, 1], got {q_frac}")
    _register(state, tag, "quarantine")
    state.quarantine_policies[tag] = q_frac
    state.quarantine_checked[tag] = np.zeros(state.n, dtype=bool)
    return _quarantine_sweep(state, g, tag)


def _quarantine_sweep(state: EpidemicState, g: ContactGraph, tag: str) -> list[int]:
    checked = state.quarantine_checked[tag]
    q_frac = state.quarantine_policies[tag]
    sick = (state.comp == E) | (state.comp == I)
    candidates = np.flatnonzero(sick & state.complier & ~state.quarantined & ~checked)
    if candidates.size == 0:
        return []
    checked[candidates] = True
    chosen = candidates[state.rng.random(candidates.size) < q_frac]
    for u in chosen.tolist():
        g.isolate(u, tag)
        state.quarantined_by[u] = tag
    state.quarantined[chosen] = True
    return chosen.tolist()


def sweep_quarantines(state: EpidemicState, g: ContactGraph) -> None:
    """Daily check of newly exposed/infected compliers under every active quarantine."""
    for tag in state.quarantine_policies:
        _quarantine_sweep(state, g, tag)


# -- distancing -----------------------------------------------------------------

def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def apply_social_distancing(g: ContactGraph, edge_frac: float, compliers: np.ndarray,
                            tag: str, rng: np.random.Generator) -> int:
    """Each complier, in ascending id, drops a share of its edges.

    Node ``u`` is owed ``round_half_up(edge_frac * degree(u))`` removals,
    with the degree read when the intervention starts. Edges already
    dropped by a lower-id neighbour count toward ``u``'s quota; the rest are
    chosen uniformly from its still active edges. Returns the number of
    edges removed.
    """
    if not 0.0 <= edge_frac <= 1.0:
        raise ValueError(f"edge_frac must be in [0, 1], got {edge_frac}")
    start_degree = g.degrees()
    lost = np.zeros(g.n, dtype=np.int64)
    removed = 0
    for u in np.flatnonzero(compliers).tolist():
        quota = round_half_up(edge_frac * start_degree[u]) - lost[u]
        if quota <= 0:
            continue
        nbrs = g.neighbors(u)
        drop = np.sort(rng.choice(nbrs, size=min(quota, len(nbrs)), replace=False))
        removed += len(g.remove_edges([(u, int(v)) for v in drop], tag))
        lost[u] += len(drop)
        lost[drop] += 1
    return removed


# -- hubs -----------------------------------------------------------------------

def apply_remove_hubs(g: ContactGraph, r_frac: float, p_success: float, tag: str,
                      rng: np.random.Generator, compliers_ignored: bool = True,
                      compliers: np.ndarray | None = None) -> list[int]:
    """Close the top ``r_frac`` share of nodes by degree.

    Each selected hub independently loses all its edges with probability
    ``p_success``. Returns the hubs actually closed.
    """
    if not 0.0 <= p_success <= 1.0:
        raise ValueError(f"p_success must be in [0, 1], got {p_success}")
    hubs = np.asarray(top_degree_nodes(g, r_frac), dtype=np.int64)
    success = rng.random(hubs.size) < p_success
    if not compliers_ignored:
        if compliers is None:
            raise ValueError("compliers mask required when compliers_ignored is False")
        success &= compliers[hubs]
    closed = hubs[success].tolist()
    for u in closed:
        g.isolate(u, tag)
    return closed


# -- masks ----------------------------------------------------------------------

def apply_masks(state: EpidemicState, mask: MaskParams | None = None, tag: str = "masks") -> None:
    """Compliers put on masks (a ``coverage`` share of them, by a fixed draw)."""
    coverage = (mask or MaskParams()).coverage
    _register(state, tag, "masks")
    state.wears_mask = state.complier & (state.mask_draw < coverage)
    state.mask_tag = tag


# -- reopening ------------------------------------------------------------------

def apply_reopen(state: EpidemicState, g: ContactGraph, tag: str, calibration=None) -> None:
    """Lift the intervention applied under ``tag``.

    Restores exactly the edges removed under ``tag`` and ends any policy
    (ongoing quarantine, masks) it started. With ``calibration`` the
    compartments are re-drawn uniformly at random to hit the given
    (S, E, I, R) counts exactly.
    """
    kind = state.applied.get(tag)
    if kind is None:
        raise GraphError(f"cannot reopen unknown NPI tag {tag!r}")
    if calibration is not None:
        calibration = [int(c) for c in calibration]
        if len(calibration) != 4 or min(calibration) < 0 or sum(calibration) != state.n:
            raise ValueError(f"calibration counts {calibration} must be non-negative and sum to n={state.n}")

    if tag in g.removed_ledger:
        g.restore_edges(tag)
    del state.applied[tag]
    if kind == "quarantine":
        del state.quarantine_policies[tag]
        del state.quarantine_checked[tag]
        released = [u for u, t in state.quarantined_by.items() if t == tag]
        for u in released:
            del state.quarantined_by[u]
        state.quarantined[released] = False
    elif kind == "masks":
        state.mask_tag = None
        state.wears_mask[:] = False
    _reisolate_quarantined(state, g)

    if calibration is not None:
        _calibrate(state, calibration)


def _reisolate_quarantined(state: EpidemicState, g: ContactGraph) -> None:
    # restored edges must not reconnect someone still in quarantine
    for u, qtag in state.quarantined_by.items():
        if g.degree(u):
            g.isolate(u, qtag)


def _calibrate(state: EpidemicState, targets) -> None:
    order = state.rng.permutation(state.n)
    state.comp[order] = np.repeat(np.arange(4, dtype=np.int8), targets)
    sick = (state.comp == E) | (state.comp == I)
    leaving = [u for u in state.quarantined_by if not sick[u]]
    for u in leaving:
        del state.quarantined_by[u]
    state.quarantined[leaving] = False


def apply_event(state: EpidemicState, g: ContactGraph, event: NpiEvent,
                mask: MaskParams | None = None) -> None:
    tag = event.tag
    if event.kind == "quarantine":
        apply_quarantine(state, g, event.q_frac, tag)
    elif event.kind == "distancing":
        _register(state, tag, "distancing")
        apply_social_distancing(g, event.edge_frac, state.complier, tag, state.rng)
    elif event.kind == "hubs":
        _register(state, tag, "hubs")
        apply_remove_hubs(g, event.r_frac, event.p_success, tag, state.rng)
    elif event.kind == "masks":
        apply_masks(state, mask, tag)
    else:
        apply_reopen(state, g, event.target, event.calibration)
