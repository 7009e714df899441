import json

import pytest
from hypothesis import given, strategies as st

from ineqcomp.expr import VarId
from ineqcomp.generator import filter_eligible, filter_eligible_records, load_records
from ineqcomp.problem import (ParseError, SchemaError, SemanticError, UnrepresentableRecord, make_problem,
                              parse_problem, problem_to_record, read_corpus, read_metadata,
                              serialize_problem, write_corpus)

from conftest import FIXTURES


def record(**over):
    base = json.loads(serialize_problem(make_problem("t", "x y", "x + y", "2*sqrt(x*y)",
                                                     rhs_positive=True, category="amgm")))
    base.update(over)
    return base


def test_bundled_corpus_shape(seeds):
    assert len(seeds) == 75
    counts = {c: sum(p.category == c for p in seeds) for c in ("amgm", "cauchy", "misc")}
    assert counts == {"amgm": 25, "cauchy": 25, "misc": 25}
    assert len({p.id for p in seeds}) == 75


def test_round_trip_is_byte_stable(seeds):
    for p in seeds:
        text = serialize_problem(p)
        q = parse_problem(text)
        assert q == p and q.proof == p.proof
        assert serialize_problem(q) == text


def test_corpus_file_round_trip(tmp_path, seeds):
    path = tmp_path / "c.jsonl"
    write_corpus(path, seeds[:5], {"seed": 3})
    assert read_metadata(path) == {"seed": 3}
    assert read_corpus(path) == seeds[:5]


def test_schema_errors_name_the_field():
    with pytest.raises(SchemaError) as ei:
        parse_problem(record(rhs_positive="yes"), line=3)
    assert ei.value.field == "rhs_positive" and "line 3" in str(ei.value)
    with pytest.raises(SchemaError):
        parse_problem(record(category="nonsense"))
    with pytest.raises(SchemaError):
        parse_problem(record(id=""))
    with pytest.raises(SchemaError):
        parse_problem("{not json", line=7)


def test_undeclared_and_unused_variables():
    rec = record()
    rec["variables"] = rec["variables"][:1]
    with pytest.raises(SemanticError, match="undeclared"):
        parse_problem(rec)
    rec = record()
    rec["variables"].append({"base": "z", "idx": 0})
    with pytest.raises(SemanticError, match="unused"):
        parse_problem(rec)
    assert parse_problem(rec, strict=False).variables[-1] == VarId("z")


def test_rendered_name_collision_rejected():
    rec = record(lhs={"op": "add", "args": [{"op": "var", "args": ["x_1", 0]}, {"op": "var", "args": ["x", 1]}]},
                 rhs={"op": "const", "args": [0, 1]},
                 variables=[{"base": "x_1", "idx": 0}, {"base": "x", "idx": 1}])
    with pytest.raises(SemanticError, match="collide"):
        parse_problem(rec)


@pytest.mark.parametrize("over,reason", [
    ({"arity": "n"}, "n-variable"),
    ({"variables": [{"base": "x", "idx": 0}, {"base": "y", "idx": 0}, {"base": "n", "idx": 0, "domain": "nat"}]},
     "integer-parameter"),
])
def test_unrepresentable_families(over, reason):
    with pytest.raises(UnrepresentableRecord) as ei:
        parse_problem(record(**over))
    assert ei.value.reason == reason


def test_exclusion_fixture_keeps_65():
    kept, rejected = filter_eligible_records(load_records(FIXTURES / "seed_exclusions.jsonl"))
    assert len(kept) + len(rejected) == 75
    assert len(kept) == 65
    reasons = sorted(r.reason for r in rejected)
    assert reasons.count("integer-parameter") == 5
    assert reasons.count("n-variable") == 2
    assert reasons.count("basic-assumption") == 3


def test_filter_eligible_on_bundled(seeds):
    kept, rejected = filter_eligible(seeds)
    assert all(p.all_positive for p in kept)
    assert {r.id for r in rejected} == {p.id for p in seeds if p.unsigned}
    assert len(kept) == 65


def test_dedup_key_ignores_id_and_provenance(seed_map):
    p = seed_map["amgm_p1"]
    assert p.with_id("other").dedup_key() == p.dedup_key()
    assert p.same_statement(p.with_id("other"))


@given(st.sampled_from(["x + y", "x*y + 1", "sqrt(x) + log(1 + y)"]), st.booleans())
def test_make_problem_round_trip(lhs, tag):
    p = make_problem("h", "x y", lhs, "x*y", rhs_positive=tag, conditions=[("x + y", "eq", "2")])
    assert parse_problem(problem_to_record(p)) == p


def test_parse_error_is_value_error():
    assert issubclass(ParseError, ValueError)
