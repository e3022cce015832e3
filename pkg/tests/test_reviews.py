import pytest

from causalkg.errors import ValidationError
from causalkg.reviews import aggregate, published_reviews, parse_reviews

HEADER = "condition,model,reviewer_id,accuracy,comprehensiveness\n"


def rows(*triples):
    return HEADER + "".join(f"{c},{m},{r},{a},{p}\n" for c, m, r, a, p in triples)


def test_cell_mean_and_sample_variance():
    text = rows(("X", "m", "r1", 4, 2), ("X", "m", "r2", 4, 4), ("X", "m", "r3", 3, 2))
    t = aggregate(parse_reviews(text))
    acc = t.cells[("X", "m")]["accuracy"]
    comp = t.cells[("X", "m")]["comprehensiveness"]
    assert round(acc.mean, 2) == 3.67 and round(acc.variance, 2) == 0.33
    assert round(comp.mean, 2) == 2.67 and round(comp.variance, 2) == 1.33


def test_half_points_accepted_and_out_of_range_rejected():
    parse_reviews(rows(("X", "m", "r1", 3.5, 2), ("X", "m", "r2", 3, 2), ("X", "m", "r3", 3, 2)))
    with pytest.raises(ValidationError, match=r":2: accuracy '5'"):
        parse_reviews(rows(("X", "m", "r1", 5, 2)))
    with pytest.raises(ValidationError, match="steps of 0.5"):
        parse_reviews(rows(("X", "m", "r1", 2.25, 2)))


def test_malformed_rows_report_line_numbers():
    text = HEADER + "X,m,r1,3,3\nX,m,r2,3\nX,m,r3,abc,3\n"
    with pytest.raises(ValidationError) as err:
        parse_reviews(text, source="s.csv")
    assert "s.csv:3: expected 5 fields" in str(err.value)
    assert "s.csv:4: accuracy 'abc' is not a number" in str(err.value)
    with pytest.raises(ValidationError, match="header"):
        parse_reviews("a,b\n")


def test_strict_model_check():
    with pytest.raises(ValidationError, match="unknown model"):
        parse_reviews(rows(("X", "mystery", "r1", 3, 3)), models=["gpt-4"])


def test_single_reviewer_warns(caplog):
    t = aggregate(parse_reviews(rows(("X", "m", "r1", 3, 3))))
    assert "1 reviewer" in caplog.text
    assert t.cells[("X", "m")]["accuracy"].variance == 0.0


def test_published_scores_shape():
    recs = published_reviews()
    assert len(recs) == 180
    t = aggregate(recs)
    assert len(t.conditions) == 20 and sorted(t.models) == ["gpt-4", "llama3-70b", "palmyramed-70b"]
    assert round(t.model_average("gpt-4", "accuracy"), 2) == 3.37
    csv_text = t.to_csv()
    assert csv_text.splitlines()[-2].startswith("Average Score")
    assert t.sorted_conditions("accuracy")[0][1] >= t.sorted_conditions("accuracy")[-1][1]
