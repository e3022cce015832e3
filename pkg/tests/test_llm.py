import threading

import pytest

from causalkg.errors import BackendError, ConfigError, MalformedResponse, TruncatedResponse
from causalkg.llm import (Gateway, OpenAIChatBackend, ResponseCache, SamplingParams, ScriptedBackend,
                         SyntheticBackend)
from causalkg.parsing import parse_verdict


def test_sampling_defaults_and_validation():
    p = SamplingParams()
    assert (p.temperature, p.top_p, p.max_retries) == (0.05, 1.0, 3)
    with pytest.raises(ConfigError):
        SamplingParams(top_p=0)
    with pytest.raises(ConfigError):
        SamplingParams(temperature=-1)


def test_cache_key_depends_on_every_part():
    p = SamplingParams()
    base = ResponseCache.key("m", "t", "s", "u", p, 0)
    assert base == ResponseCache.key("m", "t", "s", "u", p, 0)
    variants = [
        ResponseCache.key("m2", "t", "s", "u", p, 0),
        ResponseCache.key("m", "t2", "s", "u", p, 0),
        ResponseCache.key("m", "t", None, "u", p, 0),
        ResponseCache.key("m", "t", "s", "u2", p, 0),
        ResponseCache.key("m", "t", "s", "u", SamplingParams(temperature=0.5), 0),
        ResponseCache.key("m", "t", "s", "u", p, 1),
    ]
    assert base not in variants and len(set(variants)) == len(variants)


def test_cache_persists_across_instances(tmp_path):
    backend = ScriptedBackend(default="[yes]")
    g = Gateway(backend, cache=ResponseCache(tmp_path))
    assert g.ask("s", "u") == "[yes]"
    assert g.ask("s", "u") == "[yes]"
    assert (backend.calls, g.cache_hits) == (1, 1)
    g2 = Gateway(ScriptedBackend(default="[no]"), cache=ResponseCache(tmp_path))
    g2.backend.model_id = "scripted"
    assert g2.ask("s", "u") == "[yes]"
    assert g2.backend_calls == 0
    assert len(list(tmp_path.glob("*.txt"))) == 1


def test_retry_uses_new_attempt_index():
    backend = ScriptedBackend({"Q": ["garbage", "still garbage", "ok [yes]"]})
    g = Gateway(backend)
    assert g.ask_validated(None, "Q", parse_verdict) is True
    assert backend.calls == 3


def test_retry_budget_exhausted():
    backend = ScriptedBackend(default="garbage")
    g = Gateway(backend, SamplingParams(max_retries=3))
    with pytest.raises(MalformedResponse):
        g.ask_validated(None, "Q", parse_verdict)
    assert backend.calls == 4


def test_scripted_identical_inputs_identical_output():
    b = ScriptedBackend(rule=lambda s, u, a: f"{u}:{a}")
    p = SamplingParams()
    assert b.complete("s", "x", p, 1) == b.complete("s", "x", p, 1) == "x:1"
    with pytest.raises(BackendError):
        ScriptedBackend().complete(None, "x", p, 0)


def test_synthetic_is_deterministic():
    from causalkg import prompts

    user = prompts.render(prompts.get_template(prompts.EXPAND_CAUSED_BY), {"edges": "[]", "concept": "Asthma", "n_max": 3})
    a = SyntheticBackend(seed="1").complete(None, user, SamplingParams(), 0)
    b = SyntheticBackend(seed="1").complete(None, user, SamplingParams(), 0)
    assert a == b and "[" in a


def test_gateway_thread_safety():
    backend = ScriptedBackend(rule=lambda s, u, a: u)
    g = Gateway(backend)
    threads = [threading.Thread(target=lambda i=i: [g.ask(None, f"q{j % 10}") for j in range(50)]) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert g.backend_calls + g.cache_hits == 400
    assert len(g.cache) == 10


def test_missing_credential(monkeypatch):
    monkeypatch.delenv("NO_SUCH_KEY_VAR", raising=False)
    with pytest.raises(ConfigError, match="NO_SUCH_KEY_VAR"):
        OpenAIChatBackend("gpt-4", api_key_env="NO_SUCH_KEY_VAR")


class _Resp:
    def __init__(self, status, body=None):
        self.status_code = status
        self._body = body or {}
        self.text = str(body)

    def json(self):
        return self._body


class _Client:
    def __init__(self, replies):
        self.replies = list(replies)
        self.payloads = []

    def post(self, url, json):
        self.payloads.append(json)
        return self.replies.pop(0)


def _ok(text, finish="stop"):
    return _Resp(200, {"choices": [{"message": {"content": text}, "finish_reason": finish}]})


def test_openai_backend_retries_transient(monkeypatch):
    monkeypatch.setenv("K", "secret")
    client = _Client([_Resp(429), _Resp(503), _ok("[yes]")])
    b = OpenAIChatBackend("gpt-4", api_key_env="K", backoff=0.0, client=client)
    assert b.complete("sys", "user", SamplingParams(), 0) == "[yes]"
    p = client.payloads[0]
    assert p["temperature"] == 0.05 and p["top_p"] == 1.0
    assert [m["role"] for m in p["messages"]] == ["system", "user"]


def test_openai_backend_errors(monkeypatch):
    monkeypatch.setenv("K", "secret")
    b = OpenAIChatBackend("gpt-4", api_key_env="K", backoff=0.0, client=_Client([_Resp(401)]))
    with pytest.raises(BackendError, match="401"):
        b.complete(None, "u", SamplingParams(), 0)
    b = OpenAIChatBackend("gpt-4", api_key_env="K", backoff=0.0, client=_Client([_ok("par", "length")]))
    with pytest.raises(TruncatedResponse):
        b.complete(None, "u", SamplingParams(), 0)
    b = OpenAIChatBackend("gpt-4", api_key_env="K", backoff=0.0, transport_retries=1,
                          client=_Client([_Resp(500), _Resp(500)]))
    with pytest.raises(BackendError, match="after 2 tries"):
        b.complete(None, "u", SamplingParams(), 0)
    b = OpenAIChatBackend("gpt-4", api_key_env="K", client=_Client([_ok("x")]))
    b.complete(None, "u", SamplingParams(), 0)
    assert [m["role"] for m in b._client.payloads[0]["messages"]] == ["user"]
