"""Acceptance criteria at desk scale: n = 17,800 nodes, 10 replicates.

Each test prints one ``[PASS]``/``[FAIL]``/``[SKIP]`` line; the lines are
also collected into an "acceptance criteria" section at the end of the
pytest run. Seeds are fixed up front: graph seed 0 and replicate seeds
``replicate_seed(0, i)`` for i < 10.
"""

import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from contactseir.calibrate import bridge_k, mean_infected_curve, tune_ba
from contactseir.engine import E, I, S, DiseaseParams, MaskParams, init_state, replicate_seed, run, step
from contactseir.graph import ContactGraph, average_shortest_path, giant_component, read_edgelist
from contactseir.netgen import gen_ba, gen_er, gen_regular
from contactseir.npi import NpiEvent, apply_event, apply_reopen
from contactseir.ode import SeirParams, integrate_seir

N = 17800
INIT = (17796, 3, 1, 0)
BETA, SIGMA, GAMMA = 0.78, 1 / 5, 1 / 14
DISEASE = DiseaseParams(0.0371, SIGMA, GAMMA)
SEEDS = [replicate_seed(0, i) for i in range(10)]
DAYS = 300
HUBS_DAY, REOPEN_DAY = 4, 121  # 2020-03-23 and 2020-07-18 with day 0 = 2020-03-19
CALIBRATION = (17000, 100, 200, 500)

pytestmark = pytest.mark.slow


def replicate_runs(g, npis=None, days=DAYS):
    return np.array([run(g, DISEASE, npis=npis, days=days, seed=s, counts=INIT) for s in SEEDS])


@pytest.fixture(scope="module")
def er_graph():
    return gen_er(N, 0.0014, seed=0)


@pytest.fixture(scope="module")
def ba_graph():
    return gen_ba(N, 10, seed=0)


def test_1_bridge_identity(verdict):
    phi = BETA / 21
    gap = abs(21 * 0.0371 - BETA)
    ok = round(phi, 4) == 0.0371 and gap < 0.01
    verdict(1, "bridge identity phi = beta/k", ok, f"phi={phi:.6f} -> {round(phi, 4)}, |21*0.0371-0.78|={gap:.4f}")


def test_2_er_matches_ode(verdict, er_graph):
    ode = integrate_seir(SeirParams(BETA, SIGMA, GAMMA, N), INIT, DAYS)
    ode_peak, ode_day = ode.peak()
    mean_i = replicate_runs(er_graph)[:, :, I].mean(axis=0)
    peak, day = float(mean_i.max()), int(mean_i.argmax())
    rel = abs(peak - ode_peak) / ode_peak
    ok = rel <= 0.10 and abs(day - ode_day) <= 3
    verdict(2, "ER epidemic tracks the ODE (peak within 10%, day within 3)", ok,
            f"engine peak {peak:.0f} on day {day}, ODE {ode_peak:.0f} on day {ode_day}, rel diff {rel:.3f}")


def test_3_graph_properties(verdict, er_graph, ba_graph):
    regular_edges = gen_regular(N, 21, seed=0).num_edges()
    pairs = N * (N - 1) / 2
    er_mean, er_sd = pairs * 0.0014, math.sqrt(pairs * 0.0014 * 0.9986)
    er_edges = er_graph.num_edges()
    asp = average_shortest_path(er_graph, samples=64, seed=0)
    ba_edges = ba_graph.num_edges()
    ok = (regular_edges == 186_900 and abs(er_edges - er_mean) <= 3 * er_sd
          and 3.0 <= asp <= 3.8 and ba_edges == 45 + (N - 10) * 10)
    verdict(3, "graph property table", ok,
            f"regular {regular_edges}, ER {er_edges} (expect {er_mean:.0f}+-{3 * er_sd:.0f}), "
            f"ER path {asp:.3f}, BA {ba_edges}")


def attack_rate_drop(g):
    hubs = [NpiEvent(day=HUBS_DAY, kind="hubs", r_frac=0.1, p_success=0.8, tag="closure")]
    base = replicate_runs(g)[:, -1, S].mean()
    closed = replicate_runs(g, hubs)[:, -1, S].mean()
    # attack rate = (n - S_final) / n, so the drop is the gain in final S
    return (closed - base) / N


def test_4_hub_removal_asymmetry(verdict, er_graph, ba_graph):
    ba_drop, er_drop = attack_rate_drop(ba_graph), attack_rate_drop(er_graph)
    gap = 100 * (ba_drop - er_drop)
    verdict(4, "hub removal helps BA at least 10 points more than ER", gap >= 10,
            f"attack-rate drop BA {100 * ba_drop:.1f} pts, ER {100 * er_drop:.1f} pts, gap {gap:.1f} pts")


def test_5_mask_null_case(verdict, er_graph):
    masks = [NpiEvent(day=18, kind="masks", tag="masks")]
    plain = run(er_graph, DISEASE, days=120, seed=SEEDS[0], counts=INIT)
    null = run(er_graph, DISEASE, MaskParams(1.0, 1.0, 1.0), npis=masks, days=120, seed=SEEDS[0], counts=INIT)
    verdict(5, "mask multipliers (1,1,1) give byte-identical curves", plain.tobytes() == null.tobytes())


REOPEN_EVENTS = [
    NpiEvent(day=0, kind="quarantine", q_frac=0.95, tag="x"),
    NpiEvent(day=0, kind="distancing", edge_frac=0.5, tag="x"),
    NpiEvent(day=0, kind="hubs", r_frac=0.1, p_success=0.8, tag="x"),
    NpiEvent(day=0, kind="masks", tag="x"),
]


def test_6_reopen_exact(verdict, er_graph, ba_graph):
    failures = []
    for name, base in (("ER", er_graph), ("BA", ba_graph)):
        for event in REOPEN_EVENTS:
            g = base.copy()
            original = g.edge_set()
            state = init_state(g, (N - 2000, 1000, 1000, 0), seed=1)
            apply_event(state, g, event)
            removed = len(g.ledgered_edges())
            apply_reopen(state, g, "x")
            if g.edge_set() != original or (event.kind != "masks" and removed == 0):
                failures.append(f"{name}/{event.kind}")
    verdict(6, "reopen restores the exact edge set", not failures,
            "all four NPIs on ER and BA" if not failures else f"mismatch: {failures}")


def second_wave(g):
    timeline = [NpiEvent(day=HUBS_DAY, kind="hubs", r_frac=0.1, p_success=0.8, tag="closure"),
                NpiEvent(day=REOPEN_DAY, kind="reopen", target="closure", calibration=CALIBRATION)]
    mean_i = replicate_runs(g, timeline)[:, :, I].mean(axis=0)
    # row t + 1 holds counts after day t, so rows past REOPEN_DAY follow the reopening
    return float(mean_i[: REOPEN_DAY + 1].max()), float(mean_i[REOPEN_DAY + 1:].max())


def test_7_second_wave_direction(verdict, er_graph, ba_graph):
    ba_first, ba_second = second_wave(ba_graph)
    er_first, er_second = second_wave(er_graph)
    verdict(7, "BA post-reopen peak exceeds ER's", ba_second > er_second,
            f"post-reopen peak BA {ba_second:.0f} vs ER {er_second:.0f}; "
            f"second/first BA {ba_second / ba_first:.2f}, ER {er_second / er_first:.2f}")


# -- criterion 8: invariants over random scenarios -------------------------------------

@st.composite
def scenarios(draw):
    n = draw(st.integers(8, 1000))
    family = draw(st.sampled_from(["er", "ba", "regular"]))
    seed = draw(st.integers(0, 2**31))
    if family == "er":
        g = gen_er(n, min(1.0, draw(st.floats(0.5, 12.0)) / n), seed)
    elif family == "ba":
        g = gen_ba(n, draw(st.integers(1, 6)), seed)
    else:
        k = draw(st.integers(1, 6))
        g = gen_regular(n, k if (n * k) % 2 == 0 else k + 1, seed)
    exposed = draw(st.integers(0, 3))
    infected = draw(st.integers(1, 3))
    counts = (n - exposed - infected, exposed, infected, 0)
    events, tags = [], []
    for i in range(draw(st.integers(0, 5))):
        kind = draw(st.sampled_from(["quarantine", "distancing", "hubs", "masks", "reopen"]))
        day = draw(st.integers(0, 40))
        if kind == "reopen":
            if not tags:
                continue
            target = draw(st.sampled_from(tags))
            calibrate = draw(st.booleans())
            cal = None
            if calibrate:
                e, i_ = draw(st.integers(0, n // 4)), draw(st.integers(0, n // 4))
                cal = (n - e - i_, e, i_, 0)
            tags.remove(target)
            events.append(NpiEvent(day=day + 41, kind="reopen", target=target, calibration=cal))
            continue
        tag = f"t{i}"
        fields = {"quarantine": {"q_frac": draw(st.floats(0, 1))},
                  "distancing": {"edge_frac": draw(st.floats(0, 1))},
                  "hubs": {"r_frac": draw(st.floats(0.01, 0.5)), "p_success": draw(st.floats(0, 1))},
                  "masks": {}}[kind]
        if kind == "masks" and any(ev.kind == "masks" for ev in events):
            continue
        events.append(NpiEvent(day=day, kind=kind, tag=tag, **fields))
        tags.append(tag)
    phi = draw(st.floats(0.0, 0.5))
    noncompliance = draw(st.floats(0, 1))
    return g, counts, events, phi, noncompliance, draw(st.integers(0, 2**31))


class InvariantAudit:
    """Per-step checks; a calibrated reopen resets the baseline for monotonicity."""

    def __init__(self, n, events=()):
        self.n = n
        self.prev = None
        self.violations = []
        self.resets = {ev.day: np.asarray(ev.calibration) for ev in events if ev.calibration is not None}

    def __call__(self, state, g, delta):
        comp = state.comp
        counts = np.bincount(comp, minlength=4)
        if counts.sum() != self.n:
            self.violations.append(f"day {state.day}: total {counts.sum()}")
        if state.day - 1 in self.resets:
            self.prev = self.resets[state.day - 1]
        if self.prev is not None:
            if counts[S] > self.prev[S]:
                self.violations.append(f"day {state.day}: S rose")
            if counts[3] < self.prev[3]:
                self.violations.append(f"day {state.day}: R fell")
        self.prev = counts
        # rebuild the start-of-day compartments and check every exposure had a free infector
        before = comp.copy()
        before[delta.new_recovered] = I
        before[delta.new_infected] = E
        before[delta.new_exposed] = S
        for u in np.flatnonzero(state.quarantined):
            if g.degree(int(u)):
                self.violations.append(f"day {state.day}: quarantined node {u} has edges")
        for v in delta.new_exposed.tolist():
            nbrs = g.neighbors(v)
            if not np.any((before[nbrs] == I) & ~state.quarantined[nbrs]):
                self.violations.append(f"day {state.day}: node {v} exposed without an active infected contact")


_AUDIT = {"cases": 0, "violations": []}


@settings(max_examples=1000, deadline=None, suppress_health_check=list(HealthCheck))
@given(scenarios())
def _check_invariants(case):
    g, counts, events, phi, noncompliance, seed = case
    audit = InvariantAudit(g.n, events)
    out = run(g, DiseaseParams(phi, SIGMA, GAMMA), npis=events, days=80, seed=seed, counts=counts,
              noncompliance=noncompliance, state_hook=audit)
    if not np.all(out.sum(axis=1) == g.n):
        audit.violations.append("output rows do not sum to n")
    _AUDIT["cases"] += 1
    _AUDIT["violations"].extend(audit.violations)


def test_8_conservation_and_monotonicity(verdict):
    _AUDIT.update(cases=0, violations=[])
    _check_invariants()
    ok = _AUDIT["cases"] >= 1000 and not _AUDIT["violations"]
    verdict(8, "conservation, monotonicity, no exposures from quarantined nodes", ok,
            f"{_AUDIT['cases']} generated cases, {len(_AUDIT['violations'])} violations"
            + (f"; e.g. {sorted(set(v.split(': ', 1)[1][:40] for v in _AUDIT['violations']))[:3]}"
               if _AUDIT["violations"] else ""))


# -- criterion 9: closed-form exposure probabilities ---------------------------------

def _tiled(block_edges, block_comp, reps):
    size = len(block_comp)
    edges = [(u + b * size, v + b * size) for b in range(reps) for u, v in block_edges]
    g = ContactGraph.from_edges(size * reps, edges)
    state = init_state(g, (g.n, 0, 0, 0), noncompliance=0.0, seed=17)
    state.comp[:] = np.tile(np.asarray(block_comp, dtype=np.int8), reps)
    return g, state


def test_9_small_instance_oracles(verdict):
    reps, phi = 100_000, 0.0371
    disease = DiseaseParams(phi, 0.0, 0.0)
    results = []

    # triangle: two infected neighbours give two independent trials
    g, state = _tiled([(0, 1), (1, 2), (0, 2)], [I, I, S], reps)
    results.append(("triangle", len(step(state, g, disease).new_exposed) / reps, 1 - (1 - phi) ** 2, reps))

    # star with infected centre and three leaves: one trial per leaf
    g, state = _tiled([(0, 1), (0, 2), (0, 3)], [I, S, S, S], reps)
    results.append(("star", len(step(state, g, disease).new_exposed) / (3 * reps), phi, 3 * reps))

    # 4-path, infected in the middle: each neighbour one trial, the far end none
    g, state = _tiled([(0, 1), (1, 2), (2, 3)], [S, I, S, S], reps)
    local = step(state, g, disease).new_exposed % 4
    results.append(("path", np.sum(np.isin(local, [0, 2])) / (2 * reps), phi, 2 * reps))
    far_end = int(np.sum(local == 3))

    # masked pair: both endpoints masked scale phi by m2
    mask = MaskParams()
    g, state = _tiled([(0, 1)], [I, S], reps)
    state.wears_mask[:] = True
    state.mask_tag = "masks"
    results.append(("masked pair", len(step(state, g, disease, mask).new_exposed) / reps, mask.m2 * phi, reps))

    lines, ok = [], far_end == 0
    for name, freq, p, trials in results:
        sd = math.sqrt(p * (1 - p) / trials)
        good = abs(freq - p) <= 3 * sd
        ok &= good
        lines.append(f"{name} {freq:.5f} vs {p:.5f} (3sd {3 * sd:.5f})")
    verdict(9, "exposure frequencies match closed forms within 3 sd", ok, "; ".join(lines))


# -- criterion 10: calibration self-consistency -----------------------------------------

def test_10_calibration_recovers_planted(verdict):
    # reference and search share graph seed 0 and the same 10 replicate seeds
    days = 200
    planted_k, planted_m = 20, 8
    ref_k = mean_infected_curve(gen_regular(N, planted_k, 0), DiseaseParams(BETA / planted_k, SIGMA, GAMMA),
                                days, SEEDS, INIT)
    bridge = bridge_k(BETA, SIGMA, GAMMA, N, INIT, range(18, 24), seeds=SEEDS, reference=ref_k)
    phi = 0.0371
    ref_m = mean_infected_curve(gen_ba(N, planted_m, 0), DiseaseParams(phi, SIGMA, GAMMA), days, SEEDS, INIT)
    ba = tune_ba(phi, SIGMA, GAMMA, N, INIT, range(5, 16), seeds=SEEDS, reference=ref_m)
    ok = bridge.k_star == planted_k and ba.best == planted_m
    verdict(10, "bridge_k and tune_ba recover planted k=20 and m=8", ok,
            f"k*={bridge.k_star}, m*={ba.best}")


# -- criterion 11: data-gated --------------------------------------------------------

GRAPH_ENV = "CONTACTSEIR_CONTACT_GRAPH"


def test_11_real_graph_peak_below_er(verdict):
    path = os.environ.get(GRAPH_ENV)
    if not path:
        verdict(11, "supplied contact graph peaks below matched ER", None,
                f"data-gated: set {GRAPH_ENV} to an edge list (e.g. from `contactseir ingest`)")
    g = giant_component(read_edgelist(path))
    deg = g.degrees()
    asp = average_shortest_path(g, samples=64, seed=0)
    heavy_tail = deg.max() >= 10 * deg.mean()
    if asp < 4 or not heavy_tail:
        verdict(11, "supplied contact graph peaks below matched ER", None,
                f"graph outside the property's scope: path {asp:.2f}, max/mean degree {deg.max() / deg.mean():.1f}")
    counts = (g.n - 4, 3, 1, 0)
    er = gen_er(g.n, 2 * g.num_edges() / (g.n * (g.n - 1)), seed=0)
    peaks = []
    for graph in (g, er):
        runs = [run(graph, DISEASE, days=DAYS, seed=s, counts=counts)[:, I] for s in SEEDS]
        peaks.append(float(np.mean(runs, axis=0).max()))
    verdict(11, "supplied contact graph peaks below matched ER", peaks[0] < peaks[1],
            f"peak supplied {peaks[0]:.0f} vs ER {peaks[1]:.0f} (n={g.n}, edges={g.num_edges()}, path {asp:.2f})")
