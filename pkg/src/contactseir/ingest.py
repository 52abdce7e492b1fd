"""Contact graphs from co-location logs (wifi-style hub connection records).

Two users are linked when they were connected to the same hub during
overlapping half-open intervals ``[ts_in, ts_out)``; with a slack of ``s``
seconds the test becomes ``max(ts_in) < min(ts_out) + s``.
"""

from __future__ import annotations

import csv
import heapq
import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import ContactGraph, average_shortest_path, giant_component

log = logging.getLogger(__name__)

HEADER = ("connection_id", "user_id", "hub_id", "ts_in", "ts_out")
MAX_MALFORMED_SHARE = 0.10


@dataclass(frozen=True)
class ColocationRecord:
    connection_id: str
    user_id: str
    hub_id: str
    ts_in: float
    ts_out: float


@dataclass(frozen=True)
class IngestSpec:
    window_start: float
    window_end: float
    target_nodes: int = 17800
    seed: int = 0
    slack_seconds: float = 0.0

    def __post_init__(self):
        if not self.window_start < self.window_end:
            raise ValueError("window_start must precede window_end")
        if self.target_nodes < 1:
            raise ValueError(f"target_nodes must be >= 1, got {self.target_nodes}")
        if self.slack_seconds < 0:
            raise ValueError("slack_seconds must be non-negative")


class MalformedLog(ValueError):
    pass


def parse_timestamp(value: str, epoch: bool) -> float:
    value = value.strip()
    if epoch:
        return float(int(value))
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.timestamp()


def _looks_epoch(value: str) -> bool:
    try:
        int(value.strip())
    except ValueError:
        return False
    return True


def parse_log(path: str | Path) -> tuple[list[ColocationRecord], int]:
    """Parse a co-location CSV.

    The timestamp format (integer epoch seconds or ISO-8601) is detected
    once from the first data row and applied to the whole file.

    Returns:
        (records, number of malformed rows skipped)

    Raises:
        MalformedLog: missing header, no data rows, or more than 10% of
            rows malformed.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedLog(f"{path}: empty file")
        header = [h.strip() for h in header]
        if tuple(header[:5]) != HEADER:
            raise MalformedLog(f"{path}: expected header {','.join(HEADER)}, got {','.join(header)}")
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise MalformedLog(f"{path}: no data rows")

    epoch = len(rows[0]) >= 5 and _looks_epoch(rows[0][3])
    records: list[ColocationRecord] = []
    skipped = 0
    for row in rows:
        try:
            if len(row) != 5:
                raise ValueError("wrong column count")
            ts_in = parse_timestamp(row[3], epoch)
            ts_out = parse_timestamp(row[4], epoch)
            if ts_out < ts_in:
                raise ValueError("ts_out before ts_in")
        except ValueError:
            skipped += 1
            continue
        records.append(ColocationRecord(row[0].strip(), row[1].strip(), row[2].strip(), ts_in, ts_out))
    if skipped:
        log.warning("%s: skipped %d malformed rows of %d", path, skipped, len(rows))
    if skipped > MAX_MALFORMED_SHARE * len(rows):
        raise MalformedLog(f"{path}: {skipped} of {len(rows)} rows malformed; is this the right file?")
    return records, skipped


def overlaps(a_in: float, a_out: float, b_in: float, b_out: float, slack: float = 0.0) -> bool:
    return max(a_in, b_in) < min(a_out, b_out) + slack


def colocation_pairs(sessions: list[tuple[float, float, int]], slack: float = 0.0) -> set[tuple[int, int]]:
    """Node pairs with overlapping sessions at one hub (sweep over start times)."""
    pairs: set[tuple[int, int]] = set()
    active: list[tuple[float, float, int]] = []  # heap keyed on ts_out
    for ts_in, ts_out, node in sorted(sessions):
        # sessions ending before this start cannot meet this or any later one
        while active and active[0][0] + slack <= ts_in:
            heapq.heappop(active)
        for a_out, a_in, other in active:
            if other != node and overlaps(a_in, a_out, ts_in, ts_out, slack):
                pairs.add((other, node) if other < node else (node, other))
        heapq.heappush(active, (ts_out, ts_in, node))
    return pairs


def build_contact_graph(records: Iterable[ColocationRecord], spec: IngestSpec) -> ContactGraph:
    """Co-location graph of users active in the window, reduced to its giant component.

    Users whose sessions start inside ``[window_start, window_end)`` are
    subsampled uniformly (seeded) down to ``target_nodes`` before any edge
    is built. Node ``i`` of the result carries its user id in
    ``original_ids[i]``.
    """
    records = list(records)
    if not records:
        raise ValueError("no co-location records")
    in_window = [r for r in records if spec.window_start <= r.ts_in < spec.window_end]
    users = sorted({r.user_id for r in in_window})
    if not users:
        raise ValueError("no users with sessions inside the ingest window")
    if len(users) > spec.target_nodes:
        rng = np.random.default_rng(spec.seed)
        pick = np.sort(rng.choice(len(users), size=spec.target_nodes, replace=False))
        users = [users[i] for i in pick]
    index = {u: i for i, u in enumerate(users)}

    by_hub: dict[str, list[tuple[float, float, int]]] = defaultdict(list)
    for r in in_window:
        node = index.get(r.user_id)
        if node is not None:
            by_hub[r.hub_id].append((r.ts_in, r.ts_out, node))

    g = ContactGraph(len(users))
    for hub in sorted(by_hub):
        for u, v in colocation_pairs(by_hub[hub], spec.slack_seconds):
            g.add_edge(u, v)
    g.original_ids = list(users)
    return giant_component(g)


def graph_stats(g: ContactGraph, path_samples: int = 64, seed: int = 0) -> dict:
    return {
        "nodes": g.n,
        "edges": g.num_edges(),
        "mean_degree": 2 * g.num_edges() / g.n if g.n else 0.0,
        "avg_shortest_path": round(average_shortest_path(g, path_samples, seed), 4),
        "path_samples": min(path_samples, g.n),
    }


def write_stats(stats: dict, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)
