"""Prompt templates (plain-text files next to this module) and rendering.

Placeholders look like ``{concept:}`` or ``{original}``. Rendering is a
single regex pass, so substituted values containing braces are left alone.
A directory of replacement ``<name>.txt`` files can be supplied to override
any shipped template without reinstalling.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

SYSTEM = "system"
EXPAND_CAUSED_BY = "expand_caused_by"
EXPAND_CAUSING = "expand_causing"
EDGE_CHECK = "edge_check"
NN_MATCH = "nn_match"
TEMPLATE_NAMES = (SYSTEM, EXPAND_CAUSED_BY, EXPAND_CAUSING, EDGE_CHECK, NN_MATCH)

PLACEHOLDER = re.compile(r"\{(edges|concept|n_max|node0|node1|original|retrieved):?\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    @property
    def placeholders(self) -> list[str]:
        seen: list[str] = []
        for m in PLACEHOLDER.finditer(self.body):
            if m.group(1) not in seen:
                seen.append(m.group(1))
        return seen

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()


def _read(name: str, override_dir: str | Path | None) -> str:
    if override_dir is not None:
        p = Path(override_dir) / f"{name}.txt"
        if p.exists():
            text = p.read_text(encoding="utf-8")
            return text[:-1] if text.endswith("\n") else text
    text = resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def load_templates(override_dir: str | Path | None = None) -> dict[str, PromptTemplate]:
    return {name: PromptTemplate(name, _read(name, override_dir)) for name in TEMPLATE_NAMES}


_DEFAULT: dict[str, PromptTemplate] | None = None


def get_template(name: str) -> PromptTemplate:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_templates()
    return _DEFAULT[name]


def render(template: PromptTemplate | str, bindings: Mapping[str, object] | None = None) -> str:
    """Substitute every placeholder; raise ``KeyError`` naming any missing one."""
    if isinstance(template, str):
        template = get_template(template)
    bindings = dict(bindings or {})
    missing = [p for p in template.placeholders if p not in bindings]
    if missing:
        raise KeyError(f"template {template.name!r} is missing binding(s): {', '.join(missing)}")
    return PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), template.body)


def format_candidates(names) -> str:
    """Candidate list for the nearest-neighbour prompt, e.g. ``['Asthma', 'Cough']``."""
    return "[" + ", ".join(f"'{n}'" for n in names) + "]"


# Inverse recognisers for scripted/synthetic backends that must answer by content.
_RECOGNISERS = {
    EXPAND_CAUSED_BY: re.compile(r"List up to (\d+) medical concepts directly caused by (.+?)\. These factors", re.S),
    EXPAND_CAUSING: re.compile(r"up to (\d+) factors that directly cause (.+?)\. These factors", re.S),
    EDGE_CHECK: re.compile(r"^Does (.+?) directly cause (.+?)\? Your answer must be", re.S),
    NN_MATCH: re.compile(r"^Is the concept \['(.+?)'\] identical in meaning.*?Concepts: (\[.*?\])\n", re.S),
}
_EDGES_BLOCK = re.compile(r"<Begin Knowledge Graph>\n(.*?)\n</End Knowledge Graph>", re.S)


def classify_prompt(user: str) -> tuple[str, dict[str, str]] | None:
    """Recover ``(template name, bindings)`` from a rendered user prompt."""
    for name, rx in _RECOGNISERS.items():
        m = rx.search(user)
        if not m:
            continue
        if name in (EXPAND_CAUSED_BY, EXPAND_CAUSING):
            edges = _EDGES_BLOCK.search(user)
            return name, {"n_max": m.group(1), "concept": m.group(2), "edges": edges.group(1) if edges else ""}
        if name == EDGE_CHECK:
            return name, {"node0": m.group(1), "node1": m.group(2)}
        return name, {"original": m.group(1), "retrieved": m.group(2)}
    return None
