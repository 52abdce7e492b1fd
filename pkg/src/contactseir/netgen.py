"""Seeded generators for regular random, Erdos-Renyi and Barabasi-Albert graphs.

All generators are pure functions of their arguments: the same ``seed``
yields the same edge set on any platform (numpy's PCG64 stream).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ContactGraph

FAMILIES = ("regular", "er", "ba")


class InfeasibleGraph(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    k: int | None = None
    p_er: float | None = None
    m_ba: int | None = None
    seed: int = 0

    def __post_init__(self):
        family = self.family.lower()
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if family == "regular":
            if self.k is None:
                raise ValueError("regular family requires k")
            _check_regular(self.n, self.k)
        elif family == "er":
            if self.p_er is None or not 0.0 <= self.p_er <= 1.0:
                raise ValueError(f"er family requires p_er in [0, 1], got {self.p_er}")
        elif self.m_ba is None or not 1 <= self.m_ba < self.n:
            raise ValueError(f"ba family requires 1 <= m_ba < n, got {self.m_ba}")

    def build(self) -> ContactGraph:
        if self.family == "regular":
            return gen_regular(self.n, self.k, self.seed)
        if self.family == "er":
            return gen_er(self.n, self.p_er, self.seed)
        return gen_ba(self.n, self.m_ba, self.seed)


def _check_regular(n: int, k: int) -> None:
    if not 0 <= k < n:
        raise InfeasibleGraph(f"regular graph needs 0 <= k < n, got k={k}, n={n}")
    if (n * k) % 2:
        raise InfeasibleGraph(f"regular graph needs n*k even, got n={n}, k={k}")


def _from_pairs(n: int, us: np.ndarray, vs: np.ndarray) -> ContactGraph:
    g = ContactGraph(n)
    adj = g.adj
    for u, v in zip(us.tolist(), vs.tolist()):
        adj[u].add(v)
        adj[v].add(u)
    return g


def gen_regular(n: int, k: int, seed: int, max_restarts: int = 1000) -> ContactGraph:
    """Random k-regular graph by stub pairing.

    Stubs are shuffled and paired in rounds; pairs that would create a
    self-loop or a multi-edge are returned to the pool and re-shuffled.
    When the pool stops shrinking the whole construction restarts.
    """
    _check_regular(n, k)
    if k == 0:
        return ContactGraph(n)
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        edges = _pair_stubs(n, k, rng)
        if edges is not None:
            return _from_pairs(n, edges[:, 0], edges[:, 1])
    raise InfeasibleGraph(f"no simple {k}-regular graph on {n} nodes after {max_restarts} restarts")


def _pair_stubs(n: int, k: int, rng: np.random.Generator) -> np.ndarray | None:
    stubs = np.repeat(np.arange(n, dtype=np.int64), k)
    accepted: set[tuple[int, int]] = set()
    stalls = 0
    while stubs.size:
        rng.shuffle(stubs)
        a = stubs[0::2]
        b = stubs[1::2]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        leftover = []
        progressed = False
        for u, v in zip(lo.tolist(), hi.tolist()):
            if u == v or (u, v) in accepted:
                leftover.append(u)
                leftover.append(v)
            else:
                accepted.add((u, v))
                progressed = True
        stubs = np.asarray(leftover, dtype=np.int64)
        stalls = 0 if progressed else stalls + 1
        if stalls > 50:
            return None
    return np.array(sorted(accepted), dtype=np.int64).reshape(-1, 2)


def gen_er(n: int, p_er: float, seed: int) -> ContactGraph:
    """G(n, p): every unordered pair is an edge independently with prob. ``p_er``.

    Equivalent in distribution to per-pair coin flips: draw the edge count
    from Binomial(C(n,2), p) and then a uniform subset of that many pairs.
    """
    if not 0.0 <= p_er <= 1.0:
        raise ValueError(f"p_er must be in [0, 1], got {p_er}")
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    m = int(rng.binomial(total, p_er))
    if m == total:
        idx = np.arange(total, dtype=np.int64)
    elif m > total // 2:
        # dense regime: sample the complement instead
        idx = np.setdiff1d(np.arange(total, dtype=np.int64), _sample_distinct(rng, total, total - m))
    else:
        idx = _sample_distinct(rng, total, m)
    us, vs = _unrank_pairs(idx, n)
    return _from_pairs(n, us, vs)


def _sample_distinct(rng: np.random.Generator, total: int, m: int) -> np.ndarray:
    chosen = np.empty(0, dtype=np.int64)
    while chosen.size < m:
        need = m - chosen.size
        draw = rng.integers(0, total, size=need + need // 10 + 16, dtype=np.int64)
        chosen = np.unique(np.concatenate([chosen, draw]))
    if chosen.size > m:
        chosen = np.sort(rng.choice(chosen, size=m, replace=False))
    return chosen


def _unrank_pairs(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the strict upper triangle to ``(u, v)``, ``u < v``.

    The row is estimated in floating point and then corrected in integers.
    """
    idx = np.asarray(idx, dtype=np.int64)
    # row start: s(u) = u*(2n - u - 1)/2
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * idx, 0.0))) / 2).astype(np.int64)
    u = np.clip(u, 0, n - 2)

    def start(r):
        return r * (2 * n - r - 1) // 2

    # fix off-by-one from rounding
    u = np.where(start(u) > idx, u - 1, u)
    u = np.where(start(u + 1) <= idx, u + 1, u)
    v = idx - start(u) + u + 1
    return u, v


def gen_ba(n: int, m_ba: int, seed: int) -> ContactGraph:
    """Preferential attachment grown from a clique on ``m_ba`` nodes.

    Each new node links to ``m_ba`` distinct existing nodes drawn in turn
    with probability proportional to current degree (the first arrival,
    when every degree is zero, picks uniformly). Edge count is
    ``C(m_ba, 2) + (n - m_ba) * m_ba``.
    """
    if not 1 <= m_ba < n:
        raise ValueError(f"need 1 <= m_ba < n, got m_ba={m_ba}, n={n}")
    rng = np.random.default_rng(seed)
    us: list[int] = []
    vs: list[int] = []
    # one entry per edge endpoint: sampling an entry uniformly is degree-proportional
    endpoints: list[int] = []
    for i in range(m_ba):
        for j in range(i + 1, m_ba):
            us.append(i)
            vs.append(j)
            endpoints += (i, j)
    for new in range(m_ba, n):
        if endpoints:
            targets: set[int] = set()
            # degree-weighted draws, rejecting repeats
            while len(targets) < m_ba:
                batch = rng.integers(0, len(endpoints), size=2 * (m_ba - len(targets)))
                for pos in batch.tolist():
                    targets.add(endpoints[pos])
                    if len(targets) == m_ba:
                        break
            chosen = sorted(targets)
        else:
            chosen = list(range(m_ba))
        for t in chosen:
            us.append(t)
            vs.append(new)
            endpoints += (t, new)
    return _from_pairs(n, np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64))
