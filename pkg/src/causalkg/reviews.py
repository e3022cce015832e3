"""Human reviewer score ingestion and aggregation."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import ValidationError

log = logging.getLogger(__name__)

METRICS = ("accuracy", "comprehensiveness")
EXPECTED_REVIEWERS = 3
COLUMNS = ("condition", "model", "reviewer_id", "accuracy", "comprehensiveness")


@dataclass(frozen=True)
class ReviewRecord:
    condition: str
    model: str
    reviewer: str
    accuracy: float
    comprehensiveness: float


@dataclass(frozen=True)
class AggregateCell:
    mean: float
    variance: float
    n: int


def _score(text: str, what: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"{what} {text!r} is not a number") from None
    if not 1 <= v <= 4 or (v * 2) != int(v * 2):
        raise ValueError(f"{what} {text!r} must be in [1, 4] in steps of 0.5")
    return v


def parse_reviews(
    text: str,
    source: str = "<reviews>",
    models: Iterable[str] | None = None,
    conditions: Iterable[str] | None = None,
) -> list[ReviewRecord]:
    """Validate a reviews CSV. Passing ``models``/``conditions`` enables strict checks."""
    models = set(models) if models is not None else None
    conditions = set(conditions) if conditions is not None else None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != list(COLUMNS):
        raise ValidationError(f"{source}:1: expected header {','.join(COLUMNS)}")
    records, errors = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(COLUMNS):
            errors.append(f"{source}:{lineno}: expected {len(COLUMNS)} fields, got {len(row)}")
            continue
        cond, model, rid = (c.strip() for c in row[:3])
        try:
            if not cond or not model or not rid:
                raise ValueError("empty condition/model/reviewer")
            if models is not None and model not in models:
                raise ValueError(f"unknown model {model!r}")
            if conditions is not None and cond not in conditions:
                raise ValueError(f"unknown condition {cond!r}")
            acc = _score(row[3].strip(), "accuracy")
            comp = _score(row[4].strip(), "comprehensiveness")
        except ValueError as exc:
            errors.append(f"{source}:{lineno}: {exc}")
            continue
        records.append(ReviewRecord(cond, model, rid, acc, comp))
    if errors:
        raise ValidationError("\n".join(errors))

    counts: dict[tuple[str, str], int] = defaultdict(int)
    for r in records:
        counts[(r.condition, r.model)] += 1
    for (cond, model), n in sorted(counts.items()):
        if n != EXPECTED_REVIEWERS:
            log.warning("%s / %s has %d reviewer(s), expected %d", cond, model, n, EXPECTED_REVIEWERS)
    return records


def load_reviews(path: str | Path, **kw) -> list[ReviewRecord]:
    path = Path(path)
    return parse_reviews(path.read_text(encoding="utf-8"), source=str(path), **kw)


def published_reviews() -> list[ReviewRecord]:
    """The published reviewer scores (three reviewers x 20 conditions x 3 models)."""
    text = resources.files("causalkg.data").joinpath("published_reviews.csv").read_text(encoding="utf-8")
    return parse_reviews(text, source="published_reviews.csv")


def _cell(values: list[float]) -> AggregateCell:
    if not values:
        raise ValidationError("empty review cell")
    var = statistics.variance(values) if len(values) > 1 else 0.0
    return AggregateCell(statistics.fmean(values), var, len(values))


@dataclass
class ReviewTable:
    cells: dict[tuple[str, str], dict[str, AggregateCell]]
    models: list[str]
    conditions: list[str]

    def model_average(self, model: str, metric: str) -> float:
        """Mean of per-graph means for one model."""
        return statistics.fmean(self.cells[(c, model)][metric].mean for c in self.conditions if (c, model) in self.cells)

    def model_average_variance(self, model: str, metric: str) -> float:
        return statistics.fmean(self.cells[(c, model)][metric].variance for c in self.conditions if (c, model) in self.cells)

    def condition_average(self, condition: str, metric: str) -> float:
        return statistics.fmean(self.cells[(condition, m)][metric].mean for m in self.models if (condition, m) in self.cells)

    def sorted_conditions(self, metric: str) -> list[tuple[str, float, float]]:
        """(condition, avg accuracy, avg comprehensiveness), descending by ``metric``."""
        rows = [(c, self.condition_average(c, "accuracy"), self.condition_average(c, "comprehensiveness"))
                for c in self.conditions]
        col = 1 if metric == "accuracy" else 2
        return sorted(rows, key=lambda r: (-round(r[col], 9), r[0]))

    # -- output ------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["condition"]
        for m in self.models:
            head += [f"{m} acc", f"{m} acc var", f"{m} comp", f"{m} comp var"]
        w.writerow(head + ["average acc", "average comp"])
        for c in self.conditions:
            row = [c]
            for m in self.models:
                cell = self.cells.get((c, m))
                if cell is None:
                    row += ["", "", "", ""]
                    continue
                a, p = cell["accuracy"], cell["comprehensiveness"]
                row += [f"{a.mean:.2f}", f"{a.variance:.2f}", f"{p.mean:.2f}", f"{p.variance:.2f}"]
            row += [f"{self.condition_average(c, 'accuracy'):.2f}", f"{self.condition_average(c, 'comprehensiveness'):.2f}"]
            w.writerow(row)
        score, var = ["Average Score"], ["Average Variance"]
        for m in self.models:
            score += [f"{self.model_average(m, 'accuracy'):.2f}", "",
                      f"{self.model_average(m, 'comprehensiveness'):.2f}", ""]
            var += [f"{self.model_average_variance(m, 'accuracy'):.2f}", "",
                    f"{self.model_average_variance(m, 'comprehensiveness'):.2f}", ""]
        w.writerow(score + ["", ""])
        w.writerow(var + ["", ""])
        return buf.getvalue()

    def sorted_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["condition (by acc)", "acc", "comp", "condition (by comp)", "acc", "comp"])
        for a, b in zip(self.sorted_conditions("accuracy"), self.sorted_conditions("comprehensiveness")):
            w.writerow([a[0], f"{a[1]:.2f}", f"{a[2]:.2f}", b[0], f"{b[1]:.2f}", f"{b[2]:.2f}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "cells": [
                {"condition": c, "model": m,
                 **{f"{k}_{f}": getattr(v[k], f) for k in METRICS for f in ("mean", "variance", "n")}}
                for (c, m), v in sorted(self.cells.items())
            ],
            "models": {
                m: {k: {"average_score": self.model_average(m, k), "average_variance": self.model_average_variance(m, k)}
                    for k in METRICS}
                for m in self.models
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def aggregate(records: Iterable[ReviewRecord]) -> ReviewTable:
    """Per-(condition, model) mean and sample variance of each score."""
    groups: dict[tuple[str, str], dict[str, list[float]]] = defaultdict(lambda: {k: [] for k in METRICS})
    models: list[str] = []
    conditions: list[str] = []
    for r in records:
        g = groups[(r.condition, r.model)]
        g["accuracy"].append(r.accuracy)
        g["comprehensiveness"].append(r.comprehensiveness)
        if r.model not in models:
            models.append(r.model)
        if r.condition not in conditions:
            conditions.append(r.condition)
    if not groups:
        raise ValidationError("no review records")
    cells = {key: {k: _cell(v[k]) for k in METRICS} for key, v in groups.items()}
    return ReviewTable(cells, models, sorted(conditions))
