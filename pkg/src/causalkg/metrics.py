"""Structural statistics for generated graphs and per-model summaries."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .graph import ConceptGraph
from .kernels import count_simple_cycles_csr, to_csr

DEFAULT_CYCLE_CAP = 2_000_000


class CycleCount(NamedTuple):
    count: int
    capped: bool

    def __str__(self) -> str:
        return f">={self.count}" if self.capped else str(self.count)


def _pairs(graph) -> list[tuple[str, str]]:
    if isinstance(graph, ConceptGraph):
        return graph.edge_pairs()
    return list(graph)


def density(graph: ConceptGraph) -> float:
    n = len(graph.nodes)
    if n < 2:
        return 0.0
    return len(graph.edge_pairs()) / (n * (n - 1))


def reciprocity(graph: ConceptGraph | Iterable[tuple[str, str]]) -> float:
    """Fraction of edges whose reverse edge is also present."""
    edges = set(_pairs(graph))
    if not edges:
        return 0.0
    return sum((v, u) in edges for u, v in edges) / len(edges)


def count_simple_cycles(graph: ConceptGraph, cap: int = DEFAULT_CYCLE_CAP) -> CycleCount:
    """Number of distinct simple directed cycles, stopping at ``cap``."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    names = sorted(graph.nodes)
    index = {n: i for i, n in enumerate(names)}
    src = [index[s] for s, _ in graph.edge_pairs()]
    dst = [index[d] for _, d in graph.edge_pairs()]
    indptr, indices = to_csr(len(names), src, dst)
    c, capped = count_simple_cycles_csr(indptr, indices, len(names), cap)
    return CycleCount(c, capped)


@dataclass
class GraphAttributes:
    condition: str
    model: str
    nodes: int
    edges: int
    density: float
    reciprocity: float
    cycles: CycleCount
    precision: float | None = None
    recall: float | None = None

    def row(self) -> dict:
        d = asdict(self)
        d["cycles"] = str(self.cycles)
        return d


def graph_attributes(graph: ConceptGraph, cap: int = DEFAULT_CYCLE_CAP) -> GraphAttributes:
    return GraphAttributes(
        condition=graph.root,
        model=graph.model,
        nodes=len(graph.nodes),
        edges=len(graph.edge_pairs()),
        density=density(graph),
        reciprocity=reciprocity(graph),
        cycles=count_simple_cycles(graph, cap),
    )


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    min: float
    max: float
    sd: float
    n: int


def summarize(values: Sequence[float], ddof: int = 1) -> SummaryStats:
    """Mean, min, max and standard deviation (sample SD by default).

    The sample convention (``ddof=1``) is the one that reproduces the
    published per-model node and edge SDs.
    """
    if len(values) == 0:
        raise ValueError("cannot summarize an empty list")
    a = np.asarray(values, dtype=float)
    sd = float(a.std(ddof=ddof)) if a.size > ddof else 0.0
    return SummaryStats(float(a.mean()), float(a.min()), float(a.max()), sd, int(a.size))


ATTRIBUTE_COLUMNS = ["model", "condition", "precision", "recall", "density", "reciprocity", "nodes", "edges", "cycles"]


def sort_rows(rows: list[GraphAttributes], column: str, descending: bool = True) -> list[GraphAttributes]:
    def key(r: GraphAttributes):
        v = getattr(r, column)
        if isinstance(v, CycleCount):
            v = v.count
        if v is None:
            v = -math.inf
        return v

    if column in ("condition", "model"):
        return sorted(rows, key=lambda r: getattr(r, column), reverse=descending)
    # stable secondary order by condition name
    rows = sorted(rows, key=lambda r: (r.model, r.condition))
    return sorted(rows, key=key, reverse=descending)


def attributes_csv(rows: Iterable[GraphAttributes]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ATTRIBUTE_COLUMNS)
    for r in rows:
        d = r.row()
        w.writerow(["" if d[c] is None else (f"{d[c]:.3f}" if isinstance(d[c], float) else d[c]) for c in ATTRIBUTE_COLUMNS])
    return buf.getvalue()


def attributes_json(rows: Iterable[GraphAttributes]) -> str:
    return json.dumps([r.row() for r in rows], indent=2, sort_keys=True) + "\n"
