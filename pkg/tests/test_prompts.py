import json

import pytest

from causalkg import prompts
from oracles import substitute, unwrap_block
from conftest import GOLDEN

FIXTURES = json.loads((GOLDEN / "prompt_fixtures.json").read_text())


@pytest.mark.parametrize("name", prompts.TEMPLATE_NAMES)
def test_render_matches_transcription(name):
    raw = (GOLDEN / "prompts_raw" / f"{name}.txt").read_text()
    expected = substitute(unwrap_block(raw), FIXTURES[name])
    got = prompts.render(prompts.get_template(name), FIXTURES[name])
    assert got == expected
    assert got == (GOLDEN / "prompts_rendered" / f"{name}.txt").read_text()


def test_examples():
    t = prompts.load_templates()
    out = prompts.render(t[prompts.EXPAND_CAUSING], {"concept": "Asthma", "n_max": 3, "edges": "[]"})
    assert "up to 3 factors that directly cause Asthma" in out
    out = prompts.render(t[prompts.EXPAND_CAUSED_BY], {"concept": "Asthma", "n_max": 3, "edges": "[]"})
    assert "List up to 3 medical concepts directly caused by Asthma" in out
    assert prompts.render(t[prompts.EDGE_CHECK], {"node0": "HIV", "node1": "Dementia"}).startswith(
        "Does HIV directly cause Dementia?")
    out = prompts.render(t[prompts.NN_MATCH], {"original": "Asthma", "retrieved": "['a']"})
    assert "identical in meaning to any of the concepts" in out


def test_missing_binding_names_placeholder():
    with pytest.raises(KeyError, match="node1"):
        prompts.render(prompts.get_template(prompts.EDGE_CHECK), {"node0": "HIV"})


def test_placeholders_and_digest():
    t = prompts.get_template(prompts.EXPAND_CAUSED_BY)
    assert sorted(t.placeholders) == ["concept", "edges", "n_max"]
    assert len(t.digest) == 64


def test_override_dir(tmp_path):
    (tmp_path / "edge_check.txt").write_text("Is {node0:} -> {node1:}?\n")
    t = prompts.load_templates(tmp_path)
    assert prompts.render(t[prompts.EDGE_CHECK], {"node0": "a", "node1": "b"}) == "Is a -> b?"
    assert t[prompts.SYSTEM].body == prompts.get_template(prompts.SYSTEM).body


def test_classify_round_trip():
    for name in (prompts.EXPAND_CAUSED_BY, prompts.EXPAND_CAUSING, prompts.EDGE_CHECK, prompts.NN_MATCH):
        user = prompts.render(prompts.get_template(name), FIXTURES[name])
        got_name, bindings = prompts.classify_prompt(user)
        assert got_name == name
        for k, v in bindings.items():
            assert v == FIXTURES[name][k]


def test_format_candidates():
    assert prompts.format_candidates(["a", "b c"]) == "['a', 'b c']"
