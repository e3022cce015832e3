"""Concept graph model: nodes, causal edges, canonical JSON."""

from __future__ import annotations

import copy
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import GraphError

log = logging.getLogger(__name__)

EXPANSION = "expansion"
REFINEMENT = "refinement"
PROVENANCES = (EXPANSION, REFINEMENT)

_WS = re.compile(r"\s+")
_DOC_KEYS = {"root", "model", "params", "nodes", "edges"}


def canonical_name(name: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return _WS.sub(" ", name).strip()


def name_key(name: str) -> str:
    """Identity key used for node matching (case-insensitive)."""
    return canonical_name(name).casefold()


@dataclass(frozen=True)
class ConceptNode:
    name: str
    is_root: bool = False


@dataclass(frozen=True)
class CausalEdge:
    src: str
    dst: str
    provenance: str = EXPANSION


@dataclass
class ConceptGraph:
    """Directed causal graph grown from a single root concept.

    Nodes keep the casing they were first seen with; lookups are
    case-insensitive after whitespace normalisation. Edges keep insertion
    order, which is what the prompts show the model.
    """

    root: str
    model: str = ""
    params: dict[str, Any] = field(default_factory=dict)
    _nodes: dict[str, str] = field(default_factory=dict, repr=False)
    _edges: dict[tuple[str, str], str] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        root = canonical_name(self.root)
        _check_name(root)
        self.root = root
        if not self._nodes:
            self._nodes[name_key(root)] = root

    # -- queries ---------------------------------------------------------
    @property
    def nodes(self) -> list[str]:
        """Node names in insertion order."""
        return list(self._nodes.values())

    @property
    def edges(self) -> list[CausalEdge]:
        """Edges in insertion order."""
        return [CausalEdge(s, d, p) for (s, d), p in self._edges.items()]

    def concept_nodes(self) -> list[ConceptNode]:
        return [ConceptNode(n, n == self.root) for n in self._nodes.values()]

    def edge_pairs(self) -> list[tuple[str, str]]:
        return list(self._edges)

    def lookup(self, name: str) -> str | None:
        return self._nodes.get(name_key(name))

    def has_edge(self, src: str, dst: str) -> bool:
        s, d = self.lookup(src), self.lookup(dst)
        return s is not None and d is not None and (s, d) in self._edges

    def __contains__(self, name: str) -> bool:
        return self.lookup(name) is not None

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConceptGraph):
            return NotImplemented
        return (
            self.root == other.root
            and self.model == other.model
            and self.params == other.params
            and set(self._nodes.values()) == set(other._nodes.values())
            and self._edges == other._edges
        )

    # -- mutation ----------------------------------------------------------
    def add_node(self, name: str) -> str:
        """Insert ``name`` unless an equivalent node exists; return the stored name."""
        canon = canonical_name(name)
        _check_name(canon)
        key = canon.casefold()
        existing = self._nodes.get(key)
        if existing is not None:
            return existing
        self._nodes[key] = canon
        return canon

    def add_edge(self, src: str, dst: str, provenance: str = EXPANSION) -> bool:
        """Insert ``src -> dst``; returns whether the edge set changed."""
        if provenance not in PROVENANCES:
            raise GraphError(f"unknown provenance {provenance!r}")
        s, d = self.lookup(src), self.lookup(dst)
        if s is None or d is None:
            missing = src if s is None else dst
            raise GraphError(f"edge endpoint {missing!r} is not a node")
        if s == d:
            log.warning("rejected self-loop on %r", s)
            return False
        if (s, d) in self._edges:
            return False
        self._edges[(s, d)] = provenance
        return True

    def copy(self) -> "ConceptGraph":
        return copy.deepcopy(self)

    # -- (de)serialisation ---------------------------------------------------
    def to_dict(self, ordered: bool = False) -> dict[str, Any]:
        """Schema dict. ``ordered=True`` keeps insertion order (resume files)."""
        nodes = self.nodes
        edges = [[e.src, e.dst, e.provenance] for e in self.edges]
        if not ordered:
            nodes = sorted(nodes)
            edges = sorted(edges)
        return {
            "root": self.root,
            "model": self.model,
            "params": self.params,
            "nodes": nodes,
            "edges": edges,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any], strict: bool = True) -> "ConceptGraph":
        if not isinstance(doc, dict):
            raise GraphError("graph document must be a JSON object")
        if strict:
            unknown = set(doc) - _DOC_KEYS
            if unknown:
                raise GraphError(f"unknown fields: {sorted(unknown)}")
        for key in ("root", "nodes", "edges"):
            if key not in doc:
                raise GraphError(f"missing field {key!r}")
        g = cls(root=doc["root"], model=doc.get("model", ""), params=dict(doc.get("params") or {}))
        names = doc["nodes"]
        if not isinstance(names, list):
            raise GraphError("'nodes' must be a list")
        seen: set[str] = set()
        for n in names:
            if not isinstance(n, str):
                raise GraphError(f"node name must be a string, got {n!r}")
            key = name_key(n)
            if strict and key in seen:
                raise GraphError(f"duplicate node {n!r}")
            seen.add(key)
            g.add_node(n)
        if name_key(g.root) not in seen:
            raise GraphError("root is not among nodes")
        for e in doc["edges"]:
            if not isinstance(e, list) or len(e) not in (2, 3):
                raise GraphError(f"malformed edge entry {e!r}")
            src, dst = e[0], e[1]
            prov = e[2] if len(e) == 3 else EXPANSION
            if g.lookup(src) is None or g.lookup(dst) is None:
                raise GraphError(f"edge {src!r} -> {dst!r} references an absent node")
            if g.lookup(src) == g.lookup(dst):
                raise GraphError(f"self-loop on {src!r}")
            if not g.add_edge(src, dst, prov) and strict:
                raise GraphError(f"duplicate edge {src!r} -> {dst!r}")
        return g


def _check_name(name: str) -> None:
    if not name:
        raise GraphError("empty node name (malformed model output?)")
    if "[" in name or "]" in name:
        raise GraphError(f"node name contains a square bracket: {name!r}")


def serialize(graph: ConceptGraph) -> str:
    """Canonical, byte-stable JSON (sorted nodes and edges, sorted keys)."""
    return json.dumps(graph.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def deserialize(text: str, strict: bool = True) -> ConceptGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed graph document: {exc}") from exc
    return ConceptGraph.from_dict(doc, strict=strict)


def load_graph(path, strict: bool = True) -> ConceptGraph:
    with open(path, encoding="utf-8") as fh:
        return deserialize(fh.read(), strict=strict)


def save_graph(graph: ConceptGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(graph))


def format_edge_list(graph: ConceptGraph | Iterable[tuple[str, str]]) -> str:
    """``['a causes b', 'b causes c']`` in insertion order, as the prompts expect."""
    pairs = graph.edge_pairs() if isinstance(graph, ConceptGraph) else list(graph)
    return "[" + ", ".join(f"'{s} causes {d}'" for s, d in pairs) + "]"
