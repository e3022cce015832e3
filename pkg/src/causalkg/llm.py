"""Chat backends, response cache and the retrying query gateway."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import tempfile
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence, TypeVar

from . import prompts
from .errors import BackendError, ConfigError, MalformedResponse, TruncatedResponse

log = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.05
    top_p: float = 1.0
    max_retries: int = 3

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ConfigError("top_p must be in (0, 1]")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")


class ChatBackend(Protocol):
    model_id: str

    def complete(self, system: str | None, user: str, params: SamplingParams, attempt: int) -> str: ...


# -- backends ------------------------------------------------------------------

class ScriptedBackend:
    """Canned answers for tests and offline runs.

    Lookup order: exact user prompt in ``responses``, then the first
    ``responses`` key that is a substring of the prompt, then ``rule``, then
    ``default``. A list value is indexed by attempt (last entry repeats), so a
    given (prompt, attempt) always yields the same text.
    """

    def __init__(
        self,
        responses: Mapping[str, str | Sequence[str]] | None = None,
        rule: Callable[[str | None, str, int], str | None] | None = None,
        default: str | None = None,
        model_id: str = "scripted",
    ):
        self.responses = dict(responses or {})
        self.rule = rule
        self.default = default
        self.model_id = model_id
        self.calls = 0
        self.prompts: list[str] = []
        self._lock = threading.Lock()

    @staticmethod
    def _pick(value, attempt: int) -> str:
        if isinstance(value, str):
            return value
        return value[min(attempt, len(value) - 1)]

    def complete(self, system, user, params, attempt):
        with self._lock:
            self.calls += 1
            self.prompts.append(user)
        if user in self.responses:
            return self._pick(self.responses[user], attempt)
        for key, value in self.responses.items():
            if key in user:
                return self._pick(value, attempt)
        if self.rule is not None:
            out = self.rule(system, user, attempt)
            if out is not None:
                return out
        if self.default is not None:
            return self.default
        raise BackendError(f"no scripted response for prompt: {user[:80]!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        """Load ``{"model_id": ..., "default": ..., "responses": {substring: reply}}`` (JSON or YAML)."""
        import yaml

        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        return cls(
            responses=doc.get("responses") or {},
            default=doc.get("default"),
            model_id=doc.get("model_id", "scripted"),
        )


_VOCAB = (
    "Inflammation", "Fibrosis", "Hypoxia", "Oxidative stress", "Endothelial dysfunction",
    "Insulin resistance", "Obesity", "Hypertension", "Atherosclerosis", "Smoking",
    "Viral infection", "Bacterial infection", "Autoimmunity", "Genetic mutation", "Thrombosis",
    "Ischemia", "Necrosis", "Apoptosis", "Edema", "Pain", "Fever", "Fatigue",
    "Neuronal loss", "Protein misfolding", "Chronic kidney disease", "Heart failure",
    "Arrhythmia", "Hyperglycemia", "Dyslipidemia", "Immunosuppression", "Sepsis", "Anemia",
    "Malnutrition", "Hypercalcemia", "Bone resorption", "Airway obstruction",
    "Bronchoconstriction", "Cognitive decline", "Tumor growth", "Metastasis",
)


def _h(*parts: str) -> int:
    return int.from_bytes(hashlib.sha256("\x1f".join(parts).encode()).digest()[:8], "big")


class SyntheticBackend:
    """Deterministic pseudo-model that answers the shipped prompts by content.

    Expansion answers draw from a small fixed vocabulary keyed by a hash of the
    concept, edge checks answer yes with probability ``p_yes``, and
    nearest-neighbour prompts pick an exact (case-insensitive) match if present.
    """

    def __init__(self, seed: str = "0", p_yes: float = 0.08, model_id: str = "synthetic"):
        self.seed = seed
        self.p_yes = p_yes
        self.model_id = model_id
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, system, user, params, attempt):
        with self._lock:
            self.calls += 1
        kind = prompts.classify_prompt(user)
        if kind is None:
            return ""
        name, b = kind
        if name in (prompts.EXPAND_CAUSED_BY, prompts.EXPAND_CAUSING):
            n = 1 + _h(self.seed, name, b["concept"], "n") % max(int(b["n_max"]), 1)
            picks = []
            for i in range(n):
                picks.append(_VOCAB[_h(self.seed, name, b["concept"], str(i)) % len(_VOCAB)])
            return "Reasoning step by step. Final answer: " + " ".join(f"[{p}]" for p in picks)
        if name == prompts.EDGE_CHECK:
            yes = (_h(self.seed, b["node0"], b["node1"]) % 10_000) < self.p_yes * 10_000
            return "[yes]" if yes else "[no]"
        original = b["original"].casefold()
        cands = [c.strip().strip("'") for c in b["retrieved"].strip("[]").split("', '")]
        for c in cands:
            if c.casefold() == original:
                return f"[{c}]"
        return "[]"


class OpenAIChatBackend:
    """OpenAI-style ``/chat/completions`` over HTTPS with bounded backoff."""

    def __init__(
        self,
        model_id: str,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 120.0,
        transport_retries: int = 5,
        backoff: float = 1.0,
        client=None,
    ):
        key = os.environ.get(api_key_env)
        if not key:
            raise ConfigError(f"environment variable {api_key_env} is not set")
        self.model_id = model_id
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.transport_retries = transport_retries
        self.backoff = backoff
        if client is None:
            import httpx

            client = httpx.Client(timeout=timeout, headers={"Authorization": f"Bearer {key}"})
        self._client = client

    def complete(self, system, user, params, attempt):
        messages = []
        if system is not None:
            messages.append({"role": "system", "content": system})
        messages.append({"role": "user", "content": user})
        payload = {
            "model": self.model_id,
            "messages": messages,
            "temperature": params.temperature,
            "top_p": params.top_p,
        }
        delay = self.backoff
        last = None
        for i in range(self.transport_retries + 1):
            try:
                resp = self._client.post(self.url, json=payload)
            except Exception as exc:  # transport-level failure
                last = repr(exc)
            else:
                if resp.status_code == 200:
                    choice = resp.json()["choices"][0]
                    if choice.get("finish_reason") == "length":
                        raise TruncatedResponse("completion truncated by length limit")
                    return choice["message"]["content"] or ""
                if resp.status_code not in (408, 409, 429) and resp.status_code < 500:
                    raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                last = f"HTTP {resp.status_code}"
            if i < self.transport_retries:
                log.warning("chat request failed (%s); retrying in %.1fs", last, delay)
                time.sleep(delay * (1 + 0.1 * random.random()))
                delay *= 2
        raise BackendError(f"chat request failed after {self.transport_retries + 1} tries: {last}")


# -- cache -----------------------------------------------------------------------

class ResponseCache:
    """Append-only response store; one file per key digest when ``directory`` is set."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._mem: dict[str, str] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(model_id: str, template: str, system: str | None, user: str, params: SamplingParams, attempt: int) -> str:
        blob = json.dumps(
            [model_id, template, system, user, params.temperature, params.top_p, attempt],
            ensure_ascii=False,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def get(self, key: str) -> str | None:
        with self._lock:
            if key in self._mem:
                return self._mem[key]
        if self.directory is not None:
            p = self.directory / f"{key}.txt"
            if p.exists():
                text = p.read_text(encoding="utf-8")
                with self._lock:
                    self._mem[key] = text
                return text
        return None

    def put(self, key: str, text: str) -> None:
        with self._lock:
            if key in self._mem:
                return
            self._mem[key] = text
        if self.directory is not None:
            p = self.directory / f"{key}.txt"
            if p.exists():
                return
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, p)

    def __len__(self) -> int:
        return len(self._mem)


# -- gateway ---------------------------------------------------------------------

class Gateway:
    """Cache-first access to one backend with a fixed sampling configuration."""

    def __init__(
        self,
        backend: ChatBackend,
        params: SamplingParams | None = None,
        cache: ResponseCache | None = None,
        templates: Mapping[str, prompts.PromptTemplate] | None = None,
    ):
        self.backend = backend
        self.params = params or SamplingParams()
        self.cache = cache if cache is not None else ResponseCache()
        self.templates = dict(templates) if templates is not None else prompts.load_templates()
        self.backend_calls = 0
        self.cache_hits = 0
        self._lock = threading.Lock()

    @property
    def model_id(self) -> str:
        return self.backend.model_id

    def render(self, name: str, **bindings) -> str:
        return prompts.render(self.templates[name], bindings)

    @property
    def system_prompt(self) -> str:
        return self.templates[prompts.SYSTEM].body

    def ask(self, system: str | None, user: str, template: str = "", attempt: int = 0) -> str:
        key = ResponseCache.key(self.model_id, template, system, user, self.params, attempt)
        hit = self.cache.get(key)
        if hit is not None:
            with self._lock:
                self.cache_hits += 1
            return hit
        with self._lock:
            self.backend_calls += 1
        text = self.backend.complete(system, user, self.params, attempt)
        self.cache.put(key, text)
        return text

    def ask_validated(
        self, system: str | None, user: str, validator: Callable[[str], T], template: str = ""
    ) -> T:
        """Re-ask (with a fresh attempt index) until ``validator`` accepts the text."""
        last = ""
        for attempt in range(self.params.max_retries + 1):
            last = self.ask(system, user, template, attempt)
            try:
                return validator(last)
            except MalformedResponse:
                log.debug("malformed response on attempt %d for %s", attempt, template or "prompt")
        raise MalformedResponse(
            f"no parsable answer after {self.params.max_retries + 1} attempts", last
        )

    def describe(self) -> dict:
        return {"model": self.model_id, **asdict(self.params)}
