"""Generate and evaluate causal concept graphs with chat models.

Exit codes: 0 success, 1 validation/config error, 2 backend error,
3 backend error after a partial run was persisted for resume.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__, prompts
from .builder import GraphBuilder
from .config import BackendSettings, RunConfig, make_backend
from .embedding import EmbeddingIndex
from .errors import BackendError, ConfigError, GraphError, CausalKGError, ValidationError
from .export import EXPORTERS
from .graph import load_graph, save_graph
from .groundtruth import NodeMapping, evaluate, load_ground_truth, map_nodes
from .llm import Gateway, ResponseCache
from .metrics import (ATTRIBUTE_COLUMNS, DEFAULT_CYCLE_CAP, attributes_csv, attributes_json,
                      graph_attributes, sort_rows, summarize)
from .reviews import aggregate, load_reviews, published_reviews

log = logging.getLogger("causalkg")

EXIT_OK, EXIT_INVALID, EXIT_BACKEND, EXIT_PARTIAL = 0, 1, 2, 3


class PartialRun(BackendError):
    pass


def slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.casefold()).strip("-") or "x"


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- config assembly ------------------------------------------------------------------

def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.backend:
        cfg.backend.kind = args.backend
    if args.model:
        cfg.backend.model = args.model
    if args.seed_fixtures:
        if args.seed_fixtures == "synthetic":
            cfg.backend.kind = "synthetic"
        else:
            cfg.backend.kind, cfg.backend.script = "scripted", args.seed_fixtures
        if cfg.mapping_backend is not None:
            cfg.mapping_backend = replace(cfg.backend)
    if args.cache_dir:
        cfg.cache_dir = Path(args.cache_dir)
    if getattr(args, "output_dir", None):
        cfg.output_dir = Path(args.output_dir)
    if getattr(args, "concurrency", None):
        cfg.concurrency = args.concurrency
    return cfg


def _gateway(cfg: RunConfig, settings: BackendSettings, cache_dir: Path | None) -> Gateway:
    backend = make_backend(settings)
    cache = ResponseCache(cache_dir)
    return Gateway(backend, cfg.sampling, cache, prompts.load_templates(cfg.prompt_dir))


# -- generate ---------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _config(args)
    if args.concept:
        cfg.concepts = list(args.concept)
    if not cfg.concepts:
        raise ConfigError("no root concepts given (config 'concepts' or --concept)")
    gen = cfg.generation
    if args.query_existing_edges:
        gen = replace(gen, query_existing_edges=True)
    if args.depth_max is not None:
        gen = replace(gen, depth_max=args.depth_max)
    if args.n_max is not None:
        gen = replace(gen, n_max=args.n_max)
    parallel = args.parallel_concepts or cfg.parallel_concepts

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    resume_dir = out / ".resume"
    resume_dir.mkdir(exist_ok=True)
    gateway = _gateway(cfg, cfg.backend, cfg.cache_dir or out / ".cache")
    model = gateway.model_id

    def run(concept: str) -> Path:
        name = f"{slug(model)}__{slug(concept)}.json"
        target = out / name
        builder = GraphBuilder(gateway, gen, cfg.concurrency, resume_dir / f"{name}.resume")
        graph = builder.build(concept)
        save_graph(graph, target)
        log.info("wrote %s (%d nodes, %d edges)", target, len(graph.nodes), len(graph.edges))
        return target

    try:
        if parallel > 1:
            with ThreadPoolExecutor(max_workers=parallel) as pool:
                paths = list(pool.map(run, cfg.concepts))
        else:
            paths = [run(c) for c in cfg.concepts]
    except BackendError as exc:
        if any(resume_dir.iterdir()):
            raise PartialRun(f"{exc}; partial state saved under {resume_dir}") from exc
        raise

    manifest = {
        "model": model,
        "sampling": asdict(cfg.sampling),
        "generation": asdict(gen),
        "templates": {n: t.digest for n, t in sorted(gateway.templates.items())},
        "graphs": {p.name: _sha(p) for p in sorted(paths)},
    }
    (out / ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"generated {len(paths)} graph(s) in {out}")
    return EXIT_OK


# -- map-nodes / evaluate -------------------------------------------------------------

def _load_graphs(paths):
    graphs = []
    for p in paths:
        try:
            graphs.append((Path(p), load_graph(p)))
        except (OSError, GraphError) as exc:
            raise ValidationError(f"{p}: {exc}") from None
    if not graphs:
        raise ValidationError("no graph files given")
    return graphs


def _mapping_gateway(cfg: RunConfig) -> Gateway:
    settings = cfg.mapping_backend or cfg.backend
    return _gateway(cfg, settings, cfg.cache_dir)


def _map(cfg, truth, nodes) -> NodeMapping:
    index = EmbeddingIndex(truth.names, cfg.make_embedder())
    return map_nodes(index, _mapping_gateway(cfg), nodes, cfg.evaluation, cfg.concurrency)


def cmd_map_nodes(args) -> int:
    cfg = _config(args)
    graphs = _load_graphs(args.graphs)
    truth = load_ground_truth(args.concepts, args.edges)
    nodes = sorted({n for _, g in graphs for n in g.nodes})
    mapping = _map(cfg, truth, nodes)
    mapping.save(args.out)
    n_none = sum(v is None for v in mapping.entries.values())
    print(f"mapped {len(nodes) - n_none}/{len(nodes)} nodes -> {args.out}")
    return EXIT_OK


def _summary_table(reports) -> str:
    by_model: dict[str, list] = {}
    for r in reports:
        by_model.setdefault(r.model, []).append(r)
    lines = ["model,stat,precision,recall"]
    for model in sorted(by_model):
        p = summarize([r.precision for r in by_model[model]])
        rc = summarize([r.recall for r in by_model[model]])
        for stat in ("mean", "min", "max", "sd"):
            lines.append(f"{model},{stat},{getattr(p, stat):.3f},{getattr(rc, stat):.3f}")
    return "\n".join(lines) + "\n"


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    if args.d is not None:
        cfg.evaluation = replace(cfg.evaluation, d=args.d)
    graphs = _load_graphs(args.graphs)
    truth = load_ground_truth(args.concepts, args.edges)
    mapping = NodeMapping.load(args.mapping) if args.mapping and Path(args.mapping).exists() else NodeMapping()
    all_nodes = sorted({n for _, g in graphs for n in g.nodes})
    missing = [n for n in all_nodes if n not in mapping]
    if missing:
        if not args.map_first:
            raise ValidationError("unmapped nodes (use --map-first): " + ", ".join(missing))
        mapping.entries.update(_map(cfg, truth, missing).entries)
        if args.mapping:
            mapping.save(args.mapping)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for path, g in graphs:
        rep = evaluate(g, truth, mapping, cfg.evaluation)
        reports.append(rep)
        (out / f"{path.stem}.report.json").write_text(rep.to_json(), encoding="utf-8")
        (out / f"{path.stem}.report.txt").write_text(rep.to_table(), encoding="utf-8")
    summary = _summary_table(reports)
    (out / "summary.csv").write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    return EXIT_OK


# -- metrics -------------------------------------------------------------------------

def cmd_metrics(args) -> int:
    graphs = _load_graphs(args.graphs)
    scores = {}
    if args.reports:
        for p in sorted(Path(args.reports).glob("*.report.json")):
            d = json.loads(p.read_text(encoding="utf-8"))
            scores[(d["model"], d["graph"])] = (d["precision"], d["recall"])
    rows = []
    for _, g in graphs:
        a = graph_attributes(g, args.cycle_cap)
        if (a.model, a.condition) in scores:
            a.precision, a.recall = scores[(a.model, a.condition)]
        rows.append(a)
    sort_by = args.sort_by or ("precision" if scores else "condition")
    if sort_by not in ATTRIBUTE_COLUMNS:
        raise ValidationError(f"cannot sort by {sort_by!r}")
    descending = sort_by not in ("condition", "model") and not args.ascending
    rows = sort_rows(rows, sort_by, descending=descending)
    text = attributes_json(rows) if args.format == "json" else attributes_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


# -- review --------------------------------------------------------------------------

def cmd_review(args) -> int:
    records = load_reviews(args.scores) if args.scores else published_reviews()
    table = aggregate(records)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "review_table.csv").write_text(table.to_csv(), encoding="utf-8")
        (out / "review_sorted.csv").write_text(table.sorted_csv(), encoding="utf-8")
        (out / "review_table.json").write_text(table.to_json(), encoding="utf-8")
    if args.format == "json":
        sys.stdout.write(table.to_json())
    else:
        sys.stdout.write(table.to_csv())
        sys.stdout.write("\n")
        sys.stdout.write(table.sorted_csv())
    return EXIT_OK


# -- export --------------------------------------------------------------------------

def cmd_export(args) -> int:
    (path, graph), = _load_graphs([args.graph])
    text = EXPORTERS[args.format](graph)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="run configuration (YAML/JSON)")
    p.add_argument("--backend", default=d, choices=["openai", "scripted", "synthetic"])
    p.add_argument("--model", default=d, help="model identifier sent to the backend")
    p.add_argument("--cache-dir", default=d)
    p.add_argument("--seed-fixtures", nargs="?", const="synthetic", default=d, metavar="SCRIPT",
                   help="use a scripted backend (file of canned replies) or, without a file, the synthetic one")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalkg", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=__version__)
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="grow one causal graph per root concept")
    _add_globals(p, suppress=True)
    p.add_argument("--concept", action="append", help="root concept (repeatable; overrides config)")
    p.add_argument("--output-dir")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--parallel-concepts", type=int)
    p.add_argument("--depth-max", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--query-existing-edges", action="store_true",
                   help="also ask about node pairs that already have an edge")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("map-nodes", help="map generated node names onto reference concepts")
    _add_globals(p, suppress=True)
    p.add_argument("graphs", nargs="+")
    p.add_argument("--concepts", required=True, help="reference concept file (id,name)")
    p.add_argument("--edges", help="reference edge file (only needed for validation)")
    p.add_argument("--out", required=True, help="mapping JSON to write")
    p.add_argument("--concurrency", type=int)
    p.set_defaults(func=cmd_map_nodes)

    p = sub.add_parser("evaluate", help="precision/recall against a reference graph")
    _add_globals(p, suppress=True)
    p.add_argument("graphs", nargs="+")
    p.add_argument("--concepts", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--mapping", help="mapping JSON (read, and written with --map-first)")
    p.add_argument("--map-first", action="store_true", help="map any unmapped nodes before evaluating")
    p.add_argument("--d", type=int, help="max nodes on a reference path (default 7)")
    p.add_argument("--out", default="reports")
    p.add_argument("--concurrency", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("metrics", help="structural attribute table")
    _add_globals(p, suppress=True)
    p.add_argument("graphs", nargs="*")
    p.add_argument("--reports", help="directory of *.report.json to fill precision/recall")
    p.add_argument("--sort-by", help="column to sort by (descending)")
    p.add_argument("--ascending", action="store_true")
    p.add_argument("--cycle-cap", type=int, default=DEFAULT_CYCLE_CAP)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("review", help="aggregate reviewer scores")
    _add_globals(p, suppress=True)
    p.add_argument("scores", nargs="?", help="CSV: condition,model,reviewer_id,accuracy,comprehensiveness "
                                             "(default: the published scores)")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_review)

    p = sub.add_parser("export", help="export a graph as DOT, GraphML or CSV")
    _add_globals(p, suppress=True)
    p.add_argument("graph")
    p.add_argument("--format", choices=sorted(EXPORTERS), default="dot")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PartialRun as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ValidationError, ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CausalKGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
