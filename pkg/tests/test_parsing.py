import pytest
from hypothesis import given, strategies as st

from causalkg.errors import MalformedResponse
from causalkg.parsing import bracket_spans, parse_concepts, parse_match, parse_verdict


def test_bracket_spans_innermost():
    assert bracket_spans("x [a] y [b c] ]") == ["a", "b c"]
    assert bracket_spans("[a [b] c]") == ["b"]
    assert bracket_spans("[open") == []


def test_concepts_example():
    raw = "Thinking... Final: [Insulin resistance], [insulin  resistance] [Obesity] [] [Hypertension] [Smoking]"
    assert parse_concepts(raw, 3) == ["Insulin resistance", "Obesity", "Hypertension"]


def test_concepts_empty_and_malformed():
    assert parse_concepts("", 3) == []
    assert parse_concepts("None apply. []", 3) == []
    with pytest.raises(MalformedResponse):
        parse_concepts("Obesity and smoking", 3)
    with pytest.raises(ValueError):
        parse_concepts("[a]", 0)


@pytest.mark.parametrize("raw, want", [
    ("[yes]", True),
    ("Could be [no], but on reflection [YES]", True),
    ("Answer: [yes] / [no]. Final: [ no ]", False),
    ("[maybe] [no] [perhaps]", False),
])
def test_verdict(raw, want):
    assert parse_verdict(raw) is want


def test_verdict_malformed():
    with pytest.raises(MalformedResponse):
        parse_verdict("yes, definitely")


def test_match():
    cands = ["Asthma", "Allergic asthma"]
    assert parse_match("[asthma]", cands) == "Asthma"
    assert parse_match("I think ['Allergic asthma']", cands) == "Allergic asthma"
    assert parse_match("none fit: []", cands) is None
    with pytest.raises(MalformedResponse):
        parse_match("[Bronchitis]", cands)
    with pytest.raises(MalformedResponse):
        parse_match("no brackets", cands)


@given(st.lists(st.text(alphabet="abc XY", max_size=5), max_size=12), st.integers(1, 5))
def test_concepts_capped_and_unique(items, limit):
    raw = " noise ".join(f"[{x}]" for x in items) + " tail"
    if not items:
        with pytest.raises(MalformedResponse):
            parse_concepts(raw, limit)
        return
    out = parse_concepts(raw, limit)
    assert len(out) <= limit
    assert len({o.casefold() for o in out}) == len(out)
    assert all(o and o == o.strip() for o in out)
