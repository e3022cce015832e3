"""Reference-graph comparison: ingestion, node mapping, path-bounded precision/recall."""

from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import prompts
from .embedding import EmbeddingIndex
from .errors import MalformedResponse, ValidationError
from .graph import ConceptGraph
from .kernels import bounded_reachable, to_csr
from .llm import Gateway
from .parsing import parse_match

log = logging.getLogger(__name__)

NONE = "none"
EXCLUDED_RELATIONS = frozenset({"is a", "reverse is a"})

HIT = "hit"
MISS_NO_PATH = "miss:no-path"
MISS_UNMAPPED = "miss:unmapped-endpoint"

_CONCEPT_COLS = {"id": ("id", "cid", "concept_id"), "name": ("name", "preferred_name", "str", "label")}
_EDGE_COLS = {
    "src": ("src", "source", "head", "src_id"),
    "dst": ("dst", "target", "tail", "dst_id"),
    "relation": ("relation", "rel", "label", "relation_label"),
}


def normalize_relation(label: str) -> str:
    return re.sub(r"\s+", " ", label.replace("_", " ")).strip().casefold()


@dataclass(frozen=True)
class EvalParams:
    d: int = 7  # max nodes on a path, endpoints included
    k: int = 5

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def max_hops(self) -> int:
        return self.d - 1


class GroundTruthGraph:
    """Immutable reference graph.

    ``edges`` holds every labelled edge; ``retained`` flags those that take
    part in traversal (everything except subclass/superclass relations).
    Retained edges are traversable in both directions.
    """

    def __init__(self, names: Sequence[str], edges: Iterable[tuple[int, int, str]]):
        self.names = list(names)
        self.index = {n: i for i, n in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise ValidationError("duplicate concept names")
        uniq = sorted(set(edges))
        n = len(self.names)
        self.edge_src = np.array([e[0] for e in uniq], dtype=np.int64)
        self.edge_dst = np.array([e[1] for e in uniq], dtype=np.int64)
        self.edge_label = [e[2] for e in uniq]
        if uniq and (self.edge_src.max() >= n or self.edge_dst.max() >= n):
            raise ValidationError("edge references unknown concept index")
        self.retained = np.array(
            [normalize_relation(lab) not in EXCLUDED_RELATIONS for lab in self.edge_label], dtype=bool
        )
        s, d = self.edge_src[self.retained], self.edge_dst[self.retained]
        keep = s != d
        s, d = s[keep], d[keep]
        und = np.unique(np.stack([np.concatenate([s, d]), np.concatenate([d, s])], axis=1), axis=0) \
            if s.size else np.zeros((0, 2), dtype=np.int64)
        self.indptr, self.indices = to_csr(n, und[:, 0], und[:, 1])

    @property
    def n_concepts(self) -> int:
        return len(self.names)

    @property
    def n_edges(self) -> int:
        return int(self.edge_src.size)

    @property
    def n_retained(self) -> int:
        return int(self.retained.sum())

    def neighbors(self, name: str) -> list[str]:
        i = self.index[name]
        return [self.names[j] for j in self.indices[self.indptr[i] : self.indptr[i + 1]]]

    def within(self, pairs: Sequence[tuple[str, str]], max_hops: int) -> np.ndarray:
        src = [self.index[a] for a, _ in pairs]
        dst = [self.index[b] for _, b in pairs]
        return bounded_reachable(self.indptr, self.indices, src, dst, max_hops)

    def relevant_edge_count(self, names: Iterable[str]) -> int:
        """Retained edges with at least one endpoint in ``names``."""
        idx = np.array(sorted({self.index[n] for n in names}), dtype=np.int64)
        if idx.size == 0 or self.edge_src.size == 0:
            return 0
        mask = self.retained & (np.isin(self.edge_src, idx) | np.isin(self.edge_dst, idx))
        return int(mask.sum())


def _delimiter(path: Path) -> str:
    return "\t" if path.suffix.lower() in (".tsv", ".tab") else ","


def _columns(header: list[str], wanted: dict, path: Path) -> dict[str, int]:
    low = [h.strip().casefold() for h in header]
    cols = {}
    for key, aliases in wanted.items():
        for a in aliases:
            if a in low:
                cols[key] = low.index(a)
                break
        else:
            raise ValidationError(f"{path}: missing column {key!r} (header: {header})")
    return cols


def load_ground_truth(concept_file: str | Path, edge_file: str | Path | None = None) -> GroundTruthGraph:
    """Read concepts (``id,name``) and labelled edges (``src,dst,relation``).

    Files ending in ``.tsv``/``.tab`` are tab-separated, anything else CSV;
    both need a header row. ``edge_file=None`` loads concepts only.
    """
    concept_file = Path(concept_file)
    ids: dict[str, int] = {}
    names: list[str] = []
    seen_names: set[str] = set()
    with open(concept_file, encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh, delimiter=_delimiter(concept_file))
        header = next(rows, None)
        if header is None:
            raise ValidationError(f"{concept_file}: empty file")
        c = _columns(header, _CONCEPT_COLS, concept_file)
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            cid, name = row[c["id"]].strip(), row[c["name"]].strip()
            if cid in ids:
                raise ValidationError(f"{concept_file}:{lineno}: duplicate concept id {cid!r}")
            if name in seen_names:
                raise ValidationError(f"{concept_file}:{lineno}: duplicate concept name {name!r}")
            ids[cid] = len(names)
            names.append(name)
            seen_names.add(name)

    edges = []
    if edge_file is None:
        return GroundTruthGraph(names, edges)
    edge_file = Path(edge_file)
    with open(edge_file, encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh, delimiter=_delimiter(edge_file))
        header = next(rows, None)
        if header is not None:
            c = _columns(header, _EDGE_COLS, edge_file)
            for lineno, row in enumerate(rows, start=2):
                if not row:
                    continue
                s, d, lab = row[c["src"]].strip(), row[c["dst"]].strip(), row[c["relation"]].strip()
                for x in (s, d):
                    if x not in ids:
                        raise ValidationError(f"{edge_file}:{lineno}: unknown concept id {x!r}")
                edges.append((ids[s], ids[d], lab))
    g = GroundTruthGraph(names, edges)
    log.info("reference graph: %d concepts, %d edges (%d traversable)", g.n_concepts, g.n_edges, g.n_retained)
    return g


# -- node mapping ------------------------------------------------------------------

@dataclass
class NodeMapping:
    entries: dict[str, str | None] = field(default_factory=dict)

    def __getitem__(self, name: str) -> str | None:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def mapped_targets(self) -> set[str]:
        return {v for v in self.entries.values() if v is not None}

    def to_json(self) -> str:
        doc = {k: (NONE if v is None else v) for k, v in sorted(self.entries.items())}
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "NodeMapping":
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ValidationError("mapping file must be a JSON object")
        return cls({k: (None if v == NONE else v) for k, v in doc.items()})

    @classmethod
    def load(cls, path: str | Path) -> "NodeMapping":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def validate(self, graph: ConceptGraph, truth: GroundTruthGraph) -> None:
        missing = [n for n in graph.nodes if n not in self.entries]
        if missing:
            raise ValidationError(f"unmapped generated nodes: {missing}")
        bad = sorted(t for t in self.mapped_targets() if t not in truth.index)
        if bad:
            raise ValidationError(f"mapping targets absent from the reference graph: {bad}")


def map_nodes(
    index: EmbeddingIndex,
    gateway: Gateway,
    nodes: Sequence[str],
    params: EvalParams | None = None,
    concurrency: int = 1,
) -> NodeMapping:
    """k-NN retrieval then model adjudication; unmatched nodes map to ``None``.

    The adjudication prompt is sent without a system prompt.
    """
    params = params or EvalParams()
    nodes = list(dict.fromkeys(nodes))
    hits = index.search_many(nodes, params.k)

    def adjudicate(job):
        name, cands = job
        cand_names = [c for c, _ in cands]
        if not cand_names:
            return None
        user = gateway.render(prompts.NN_MATCH, original=name, retrieved=prompts.format_candidates(cand_names))
        try:
            return gateway.ask_validated(None, user, partial(parse_match, candidates=cand_names), template=prompts.NN_MATCH)
        except MalformedResponse:
            log.warning("no usable match answer for %r; mapping to none", name)
            return None

    jobs = list(zip(nodes, hits))
    if concurrency > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            targets = list(pool.map(adjudicate, jobs))
    else:
        targets = [adjudicate(j) for j in jobs]
    return NodeMapping(dict(zip(nodes, targets)))


# -- precision / recall ---------------------------------------------------------------

@dataclass(frozen=True)
class EdgeOutcome:
    src: str
    dst: str
    status: str
    mapped_src: str | None
    mapped_dst: str | None


@dataclass
class EvalReport:
    graph: str
    model: str
    d: int
    n_hit: int
    mappable_edges: int
    generated_edges: int
    relevant_edges: int
    precision: float
    recall: float
    ledger: list[EdgeOutcome]

    def to_dict(self) -> dict:
        return {
            "graph": self.graph,
            "model": self.model,
            "d": self.d,
            "n_hit": self.n_hit,
            "mappable_edges": self.mappable_edges,
            "generated_edges": self.generated_edges,
            "relevant_edges": self.relevant_edges,
            "precision": self.precision,
            "recall": self.recall,
            "edges": [
                {"src": e.src, "dst": e.dst, "status": e.status,
                 "mapped_src": e.mapped_src or NONE, "mapped_dst": e.mapped_dst or NONE}
                for e in self.ledger
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_table(self) -> str:
        head = (
            f"{self.graph} [{self.model}]  precision={self.precision:.3f}  recall={self.recall:.3f}  "
            f"hits={self.n_hit}  |E_g|={self.generated_edges}  |E_gb|={self.mappable_edges}  "
            f"|E_rel|={self.relevant_edges}  d={self.d}"
        )
        w1 = max([len(e.src) for e in self.ledger] + [3])
        w2 = max([len(e.dst) for e in self.ledger] + [3])
        lines = [head, f"{'src':<{w1}}  {'dst':<{w2}}  status"]
        for e in self.ledger:
            lines.append(f"{e.src:<{w1}}  {e.dst:<{w2}}  {e.status}")
        return "\n".join(lines) + "\n"


def evaluate(
    graph: ConceptGraph,
    truth: GroundTruthGraph,
    mapping: NodeMapping | Mapping[str, str | None],
    params: EvalParams | None = None,
) -> EvalReport:
    params = params or EvalParams()
    if not isinstance(mapping, NodeMapping):
        mapping = NodeMapping(dict(mapping))
    mapping.validate(graph, truth)

    edges = sorted(graph.edge_pairs())
    mappable = [(s, d) for s, d in edges if mapping[s] is not None and mapping[d] is not None]
    found = truth.within([(mapping[s], mapping[d]) for s, d in mappable], params.max_hops)
    reach = dict(zip(mappable, found.tolist()))

    ledger = []
    for s, d in edges:
        ms, md = mapping[s], mapping[d]
        if (s, d) not in reach:
            status = MISS_UNMAPPED
        else:
            status = HIT if reach[(s, d)] else MISS_NO_PATH
        ledger.append(EdgeOutcome(s, d, status, ms, md))

    n_hit = sum(e.status == HIT for e in ledger)
    image = {mapping[n] for n in graph.nodes if mapping[n] is not None}
    rel = truth.relevant_edge_count(image)
    return EvalReport(
        graph=graph.root,
        model=graph.model,
        d=params.d,
        n_hit=n_hit,
        mappable_edges=len(mappable),
        generated_edges=len(edges),
        relevant_edges=rel,
        precision=n_hit / len(edges) if edges else 0.0,
        recall=n_hit / rel if rel else 0.0,
        ledger=ledger,
    )
