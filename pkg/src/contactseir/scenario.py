"""JSON scenario files: graph source, disease, interventions, run settings.

Example::

    {
      "graph": {"source": "generator", "family": "er", "n": 17800, "p_er": 0.0014, "seed": 0},
      "disease": {"phi": 0.0371, "sigma": 0.2, "gamma": 0.0714285714},
      "anchor_date": "2020-03-19",
      "timeline": [
        {"date": "2020-03-23", "kind": "hubs", "r_frac": 0.1, "p_success": 0.8, "tag": "closure"},
        {"date": "2020-07-18", "kind": "reopen", "target": "closure"}
      ],
      "days": 200, "replicates": 10, "seed": 0
    }

Graph sources are ``generator`` (family/n/k/p_er/m_ba/seed), ``edgelist``
(path, optional n) and ``colocation`` (path, window_start, window_end,
target_nodes, seed, slack_seconds). Relative paths resolve against the
scenario file. Timeline entries give either ``day`` or a calendar ``date``
resolved against ``anchor_date`` (day 0).
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from . import __version__
from .engine import DiseaseParams, MaskParams, default_counts
from .graph import ContactGraph, giant_component, read_edgelist
from .netgen import GenSpec
from .npi import NpiEvent, NpiTimeline

GRAPH_SOURCES = ("generator", "edgelist", "colocation")
_TOP_LEVEL = {"graph", "contact_sampling_rate", "disease", "mask", "noncompliance",
              "initial", "anchor_date", "timeline", "days", "replicates", "seed", "ci"}
_EVENT_FIELDS = {"day", "date", "kind", "tag", "q_frac", "edge_frac", "r_frac",
                 "p_success", "target", "calibration"}


class ScenarioError(ValueError):
    """Invalid scenario; the message names the offending field."""


@dataclass
class Scenario:
    graph: dict
    disease: DiseaseParams = field(default_factory=DiseaseParams)
    mask: MaskParams = field(default_factory=MaskParams)
    noncompliance: float = 0.26
    initial: tuple[int, int, int, int] | None = None
    timeline: NpiTimeline = field(default_factory=NpiTimeline)
    days: int = 200
    replicates: int = 10
    seed: int = 0
    contact_sampling_rate: float = 1.0
    anchor_date: date | None = None
    ci: str = "normal"
    raw: dict = field(default_factory=dict, repr=False)
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    def build_graph(self) -> ContactGraph:
        src = self.graph
        kind = src["source"]
        if kind == "generator":
            g = GenSpec(family=src["family"], n=int(src["n"]), k=src.get("k"),
                        p_er=src.get("p_er"), m_ba=src.get("m_ba"),
                        seed=int(src.get("seed", 0))).build()
        elif kind == "edgelist":
            g = read_edgelist(self._path(src["path"]), src.get("n"))
            if src.get("giant_component", True):
                g = giant_component(g)
        else:
            from .ingest import IngestSpec, build_contact_graph, parse_log, parse_timestamp
            records, _ = parse_log(self._path(src["path"]))
            spec = IngestSpec(
                window_start=_ts(src["window_start"], parse_timestamp),
                window_end=_ts(src["window_end"], parse_timestamp),
                target_nodes=int(src.get("target_nodes", 17800)),
                seed=int(src.get("seed", 0)),
                slack_seconds=float(src.get("slack_seconds", 0)),
            )
            g = build_contact_graph(records, spec)
        g.contact_sampling_rate = self.contact_sampling_rate
        return g

    def initial_counts(self, n: int) -> tuple[int, int, int, int]:
        counts = self.initial if self.initial is not None else default_counts(n)
        if sum(counts) != n:
            raise ScenarioError(f"initial: counts {tuple(counts)} sum to {sum(counts)}, "
                                f"but the graph has {n} nodes")
        return tuple(counts)

    def digest(self) -> str:
        """SHA-256 over the canonical scenario JSON plus the package version."""
        blob = json.dumps({"scenario": self.raw, "version": __version__},
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def _path(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path


def _ts(value, parse):
    if isinstance(value, (int, float)):
        return float(value)
    return parse(str(value), epoch=str(value).strip().lstrip("-").isdigit())


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_dict(raw, base_dir=path.parent)


def scenario_from_dict(raw: dict, base_dir: Path | None = None) -> Scenario:
    """Validate a scenario mapping; every error names the offending field."""
    raw = copy.deepcopy(raw)
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL
    if unknown:
        raise ScenarioError(f"unknown field(s): {', '.join(sorted(unknown))}")

    graph = raw.get("graph")
    if not isinstance(graph, dict) or graph.get("source") not in GRAPH_SOURCES:
        raise ScenarioError(f"graph.source: must be one of {GRAPH_SOURCES}")
    _check_graph(graph)

    def build(name, factory, value):
        try:
            return factory(**value) if isinstance(value, dict) else factory()
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{name}: {exc}") from exc

    disease = build("disease", DiseaseParams, raw.get("disease", {}))
    mask = build("mask", MaskParams, raw.get("mask", {}))

    noncompliance = float(raw.get("noncompliance", 0.26))
    if not 0.0 <= noncompliance <= 1.0:
        raise ScenarioError(f"noncompliance: must be in [0, 1], got {noncompliance}")
    rate = float(raw.get("contact_sampling_rate", 1.0))
    if not 0.0 < rate <= 1.0:
        raise ScenarioError(f"contact_sampling_rate: must be in (0, 1], got {rate}")

    initial = raw.get("initial")
    if initial is not None:
        if isinstance(initial, dict):
            initial = [initial.get(c, 0) for c in "SEIR"]
        if len(initial) != 4 or any(int(c) < 0 for c in initial):
            raise ScenarioError("initial: expected four non-negative counts (S, E, I, R)")
        initial = tuple(int(c) for c in initial)

    anchor = raw.get("anchor_date")
    if anchor is not None:
        try:
            anchor = date.fromisoformat(anchor)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"anchor_date: {exc}") from exc

    days = _positive_int(raw, "days", 200)
    replicates = _positive_int(raw, "replicates", 10)
    seed = int(raw.get("seed", 0))
    ci = raw.get("ci", "normal")
    if ci not in ("normal", "percentile"):
        raise ScenarioError(f"ci: must be 'normal' or 'percentile', got {ci!r}")

    events = []
    for i, entry in enumerate(raw.get("timeline", [])):
        events.append(_event(entry, anchor, f"timeline[{i}]"))
    try:
        timeline = NpiTimeline(events)
    except ValueError as exc:
        raise ScenarioError(f"timeline: {exc}") from exc

    return Scenario(graph=graph, disease=disease, mask=mask, noncompliance=noncompliance,
                    initial=initial, timeline=timeline, days=days, replicates=replicates,
                    seed=seed, contact_sampling_rate=rate, anchor_date=anchor, ci=ci,
                    raw=raw, base_dir=base_dir or Path.cwd())


def _positive_int(raw, name, default):
    try:
        value = int(raw.get(name, default))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{name}: {exc}") from exc
    if value < 1:
        raise ScenarioError(f"{name}: must be >= 1, got {value}")
    return value


def _check_graph(graph: dict) -> None:
    kind = graph["source"]
    if kind == "generator":
        try:
            GenSpec(family=graph.get("family", ""), n=int(graph.get("n", 0)), k=graph.get("k"),
                    p_er=graph.get("p_er"), m_ba=graph.get("m_ba"), seed=int(graph.get("seed", 0)))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"graph: {exc}") from exc
    elif "path" not in graph:
        raise ScenarioError(f"graph.path: required for source {kind!r}")
    if kind == "colocation":
        for key in ("window_start", "window_end"):
            if key not in graph:
                raise ScenarioError(f"graph.{key}: required for colocation source")


def _event(entry: dict, anchor: date | None, where: str) -> NpiEvent:
    if not isinstance(entry, dict):
        raise ScenarioError(f"{where}: must be an object")
    unknown = set(entry) - _EVENT_FIELDS
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    fields = dict(entry)
    if "date" in fields:
        if anchor is None:
            raise ScenarioError(f"{where}.date: calendar dates need a top-level anchor_date")
        try:
            when = date.fromisoformat(fields.pop("date"))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{where}.date: {exc}") from exc
        if "day" in fields:
            raise ScenarioError(f"{where}: give either day or date, not both")
        fields["day"] = (when - anchor).days
    if "day" not in fields:
        raise ScenarioError(f"{where}.day: missing (or give date)")
    try:
        return NpiEvent(**fields)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
