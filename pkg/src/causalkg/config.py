"""Run configuration loaded from a YAML (or JSON) document."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .builder import GenerationParams
from .embedding import HashEmbedder, SentenceTransformerEmbedder
from .errors import ConfigError
from .groundtruth import EvalParams
from .llm import OpenAIChatBackend, SamplingParams, ScriptedBackend, SyntheticBackend


@dataclass
class BackendSettings:
    kind: str = "openai"  # openai | scripted | synthetic
    model: str = "gpt-4"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    script: str | None = None
    seed: str = "0"

    @classmethod
    def from_dict(cls, doc: dict[str, Any], base: "BackendSettings | None" = None) -> "BackendSettings":
        out = BackendSettings(**vars(base)) if base is not None else cls()
        if "backend" in doc:
            out.kind = doc["backend"]
        for key in ("model", "base_url", "api_key_env", "script", "seed"):
            if key in doc:
                setattr(out, key, str(doc[key]) if doc[key] is not None else None)
        return out


def make_backend(s: BackendSettings):
    if s.kind == "openai":
        return OpenAIChatBackend(s.model, base_url=s.base_url, api_key_env=s.api_key_env)
    if s.kind == "scripted":
        if not s.script:
            raise ConfigError("scripted backend needs a 'script' file")
        backend = ScriptedBackend.from_file(s.script)
        return backend
    if s.kind == "synthetic":
        return SyntheticBackend(seed=s.seed, model_id=s.model)
    raise ConfigError(f"unknown backend {s.kind!r}")


@dataclass
class RunConfig:
    concepts: list[str] = field(default_factory=list)
    backend: BackendSettings = field(default_factory=BackendSettings)
    mapping_backend: BackendSettings | None = None
    sampling: SamplingParams = field(default_factory=SamplingParams)
    generation: GenerationParams = field(default_factory=GenerationParams)
    evaluation: EvalParams = field(default_factory=EvalParams)
    embedding: dict[str, Any] = field(default_factory=lambda: {"provider": "hash", "dim": 256})
    concurrency: int = 4
    parallel_concepts: int = 1
    output_dir: Path = Path("runs")
    cache_dir: Path | None = None
    prompt_dir: Path | None = None

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)} | {"model", "base_url", "api_key_env", "script", "seed"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls()
        cfg.concepts = [str(c) for c in doc.get("concepts") or []]
        cfg.backend = BackendSettings.from_dict(doc)
        if doc.get("mapping_backend"):
            cfg.mapping_backend = BackendSettings.from_dict(doc["mapping_backend"], base=cfg.backend)
        try:
            cfg.sampling = SamplingParams(**(doc.get("sampling") or {}))
            cfg.generation = GenerationParams(**(doc.get("generation") or {}))
            cfg.evaluation = EvalParams(**(doc.get("evaluation") or {}))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if "embedding" in doc:
            cfg.embedding = dict(doc["embedding"])
        cfg.concurrency = int(doc.get("concurrency", cfg.concurrency))
        cfg.parallel_concepts = int(doc.get("parallel_concepts", cfg.parallel_concepts))
        if doc.get("output_dir"):
            cfg.output_dir = Path(doc["output_dir"])
        if doc.get("cache_dir"):
            cfg.cache_dir = Path(doc["cache_dir"])
        if doc.get("prompt_dir"):
            cfg.prompt_dir = Path(doc["prompt_dir"])
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(doc)

    def make_embedder(self):
        provider = self.embedding.get("provider", "hash")
        if provider == "hash":
            return HashEmbedder(int(self.embedding.get("dim", 256)))
        if provider == "sentence-transformers":
            return SentenceTransformerEmbedder(self.embedding.get("model", "intfloat/e5-base-v2"))
        raise ConfigError(f"unknown embedding provider {provider!r}")


def sample_config_path() -> Path:
    return Path(str(resources.files("causalkg.data").joinpath("conditions.yaml")))
