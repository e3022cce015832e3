"""Graph generation: recursive node expansion followed by pairwise edge refinement.

Expansion is level-synchronous. Every query in a frontier level is rendered
against the same snapshot of the edge list taken at the start of the level,
and answers are applied in frontier order. That keeps the prompt context,
and therefore the output, independent of how many requests run at once.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import prompts
from .errors import GraphError, MalformedResponse
from .graph import EXPANSION, REFINEMENT, ConceptGraph, format_edge_list
from .llm import Gateway
from .parsing import parse_concepts, parse_verdict

log = logging.getLogger(__name__)

CAUSED_BY = "caused_by"  # ask for concepts the node causes; edges node -> child
CAUSING = "causing"  # ask for concepts causing the node; edges child -> node
DIRECTIONS = (CAUSED_BY, CAUSING)

_TEMPLATE_FOR = {CAUSED_BY: prompts.EXPAND_CAUSED_BY, CAUSING: prompts.EXPAND_CAUSING}


@dataclass(frozen=True)
class GenerationParams:
    n_max: int = 3
    depth_max: int = 2
    query_existing_edges: bool = False

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.depth_max < 0:
            raise ValueError("depth_max must be >= 0")


@dataclass(frozen=True)
class FrontierItem:
    node: str
    depth: int
    direction: str


def _ask_concepts(gateway: Gateway, direction: str, concept: str, context: str, n_max: int) -> list[str]:
    template = _TEMPLATE_FOR[direction]
    user = gateway.render(template, edges=context, concept=concept, n_max=n_max)
    try:
        return gateway.ask_validated(
            gateway.system_prompt, user, partial(parse_concepts, limit=n_max), template=template
        )
    except MalformedResponse:
        log.warning("no parsable %s answer for %r; treating as empty", direction, concept)
        return []


def _apply(graph: ConceptGraph, direction: str, concept: str, answers: Iterable[str]) -> list[str]:
    new = []
    for child in answers:
        before = len(graph)
        try:
            stored = graph.add_node(child)
        except GraphError as exc:
            log.warning("skipping answer %r: %s", child, exc)
            continue
        if direction == CAUSED_BY:
            graph.add_edge(concept, stored, EXPANSION)
        else:
            graph.add_edge(stored, concept, EXPANSION)
        if len(graph) > before:
            new.append(stored)
    return new


def expand_out(gateway: Gateway, graph: ConceptGraph, concept: str, params: GenerationParams) -> list[str]:
    """Ask for concepts caused by ``concept`` and attach them; returns new node names."""
    concept = graph.lookup(concept) or concept
    if concept not in graph:
        raise GraphError(f"{concept!r} is not in the graph")
    answers = _ask_concepts(gateway, CAUSED_BY, concept, format_edge_list(graph), params.n_max)
    return _apply(graph, CAUSED_BY, concept, answers)


def expand_in(gateway: Gateway, graph: ConceptGraph, concept: str, params: GenerationParams) -> list[str]:
    """Ask for concepts causing ``concept`` and attach them; returns new node names."""
    concept = graph.lookup(concept) or concept
    if concept not in graph:
        raise GraphError(f"{concept!r} is not in the graph")
    answers = _ask_concepts(gateway, CAUSING, concept, format_edge_list(graph), params.n_max)
    return _apply(graph, CAUSING, concept, answers)


def refinement_pairs(graph: ConceptGraph, query_existing_edges: bool = False) -> list[tuple[str, str]]:
    """Ordered node pairs to check, lexicographic, skipping present edges unless asked."""
    nodes = sorted(graph.nodes)
    return [
        (v, u)
        for v in nodes
        for u in nodes
        if v != u and (query_existing_edges or not graph.has_edge(v, u))
    ]


class GraphBuilder:
    """Runs expansion then refinement for one root concept, with optional resume file."""

    def __init__(
        self,
        gateway: Gateway,
        params: GenerationParams | None = None,
        concurrency: int = 1,
        resume_path: str | Path | None = None,
        checkpoint_every: int = 256,
    ):
        self.gateway = gateway
        self.params = params or GenerationParams()
        self.concurrency = max(1, int(concurrency))
        self.resume_path = Path(resume_path) if resume_path is not None else None
        self.checkpoint_every = checkpoint_every
        self.refine_queries = 0

    # -- helpers -------------------------------------------------------------
    def _map(self, fn: Callable, items: Sequence) -> list:
        if self.concurrency == 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
            return list(pool.map(fn, items))

    def _snapshot(self) -> dict:
        return {**asdict(self.params), **{k: v for k, v in asdict(self.gateway.params).items()}}

    def _save(self, state: dict) -> None:
        if self.resume_path is None:
            return
        tmp = self.resume_path.with_suffix(self.resume_path.suffix + ".tmp")
        tmp.write_text(json.dumps(state, ensure_ascii=False, indent=1), encoding="utf-8")
        os.replace(tmp, self.resume_path)

    def _load(self) -> dict | None:
        if self.resume_path is None or not self.resume_path.exists():
            return None
        return json.loads(self.resume_path.read_text(encoding="utf-8"))

    # -- node expansion ----------------------------------------------------
    def explore(self, root: str, _graph: ConceptGraph | None = None, _frontier=None) -> ConceptGraph:
        if _graph is None:
            graph = ConceptGraph(root=root, model=self.gateway.model_id, params=self._snapshot())
            frontier = [FrontierItem(graph.root, 0, d) for d in DIRECTIONS]
        else:
            graph, frontier = _graph, _frontier
        n_max = self.params.n_max

        while frontier and frontier[0].depth < self.params.depth_max:
            self._save({"phase": "explore", "graph": graph.to_dict(ordered=True),
                        "frontier": [[f.node, f.depth, f.direction] for f in frontier]})
            context = format_edge_list(graph)
            answers = self._map(
                lambda it: _ask_concepts(self.gateway, it.direction, it.node, context, n_max), frontier
            )
            nxt: list[FrontierItem] = []
            for item, ans in zip(frontier, answers):
                for child in _apply(graph, item.direction, item.node, ans):
                    nxt.extend(FrontierItem(child, item.depth + 1, d) for d in DIRECTIONS)
            frontier = nxt
        return graph

    # -- edge refinement ---------------------------------------------------
    def _verdict(self, pair: tuple[str, str]) -> bool:
        user = self.gateway.render(prompts.EDGE_CHECK, node0=pair[0], node1=pair[1])
        try:
            return self.gateway.ask_validated(
                self.gateway.system_prompt, user, parse_verdict, template=prompts.EDGE_CHECK
            )
        except MalformedResponse:
            log.warning("no parsable verdict for %r -> %r; treating as no", *pair)
            return False

    def refine_edges(self, graph: ConceptGraph, _state: dict | None = None) -> ConceptGraph:
        """Check every ordered pair and add affirmed edges; node set is unchanged."""
        if _state is None:
            out = graph.copy()
            pairs = refinement_pairs(out, self.params.query_existing_edges)
            done = [False] * len(pairs)
        else:
            out = graph
            pairs = [tuple(p) for p in _state["pairs"]]
            done = [c == "1" for c in _state["done"]]
        self.refine_queries = 0

        todo = [i for i, d in enumerate(done) if not d]
        step = max(1, self.checkpoint_every)
        for start in range(0, len(todo), step):
            self._save({"phase": "refine", "graph": out.to_dict(ordered=True),
                        "pairs": [list(p) for p in pairs],
                        "done": "".join("1" if d else "0" for d in done)})
            chunk = todo[start:start + step]
            verdicts = self._map(self._verdict, [pairs[i] for i in chunk])
            self.refine_queries += len(chunk)
            for i, yes in zip(chunk, verdicts):
                if yes:
                    out.add_edge(pairs[i][0], pairs[i][1], REFINEMENT)
                done[i] = True
        return out

    # -- whole run ---------------------------------------------------------
    def build(self, root: str) -> ConceptGraph:
        """Expansion then refinement, continuing from the resume file if one exists."""
        state = self._load()
        if state is None:
            graph = self.explore(root)
            graph = self.refine_edges(graph)
        elif state["phase"] == "explore":
            graph = ConceptGraph.from_dict(state["graph"], strict=False)
            frontier = [FrontierItem(n, d, r) for n, d, r in state["frontier"]]
            graph = self.explore(root, graph, frontier)
            graph = self.refine_edges(graph)
        else:
            graph = ConceptGraph.from_dict(state["graph"], strict=False)
            graph = self.refine_edges(graph, state)
        if self.resume_path is not None and self.resume_path.exists():
            self.resume_path.unlink()
        return graph


def explore(gateway: Gateway, root: str, params: GenerationParams | None = None, concurrency: int = 1) -> ConceptGraph:
    return GraphBuilder(gateway, params, concurrency).explore(root)


def refine_edges(gateway: Gateway, graph: ConceptGraph, params: GenerationParams | None = None,
                 concurrency: int = 1) -> ConceptGraph:
    return GraphBuilder(gateway, params, concurrency).refine_edges(graph)
