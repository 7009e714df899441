from collections import Counter

import numpy as np
import pytest

from ineqcomp.generator import (GenConfig, GenerationExhausted, SeedSplit, expand_simp, filter_eligible,
                                generate_mix, make_ft_corpus, provenance_closed)
from ineqcomp.problem import make_problem, serialize_problem
from ineqcomp.prompts import render_prompt
from ineqcomp.scoring import corpus_group


@pytest.fixture(scope="module")
def eligible():
    from ineqcomp.problem import load_bundled_seeds
    return filter_eligible(load_bundled_seeds())[0]


def test_expand_simp_counts(seeds):
    out = expand_simp(seeds, np.random.default_rng(0))
    assert len(out) == 150
    groups = Counter(corpus_group(p) for p in out)
    assert groups == {"Type I": 75, "Type II": 75}
    assert len({p.id for p in out}) == 150


def test_expand_simp_is_deterministic(seeds):
    a = [serialize_problem(p) for p in expand_simp(seeds, np.random.default_rng(5))]
    b = [serialize_problem(p) for p in expand_simp(seeds, np.random.default_rng(5))]
    assert a == b


def test_expand_simp_empty():
    assert expand_simp([], np.random.default_rng(0)) == []


def test_composition_only_preset(eligible):
    cfg = GenConfig.from_preset("composition-only", seed=7, count=100)
    out = generate_mix(eligible, cfg)
    assert len(out) == 100
    assert len({p.dedup_key() for p in out}) == 100
    assert all(len(p.provenance) == 1 and p.provenance[0].family == "composition" for p in out)
    again = generate_mix(eligible, cfg)
    assert [serialize_problem(p) for p in out] == [serialize_problem(p) for p in again]


def test_all_preset_mixes_families(eligible):
    out = generate_mix(eligible, GenConfig.from_preset("all", seed=3, count=200))
    shapes = Counter(tuple(e.family for e in p.provenance) for p in out)
    families = {f for shape in shapes for f in shape}
    assert families == {"composition", "variable-level", "problem-level"}
    assert any(len(s) == 2 for s in shapes)
    assert provenance_closed(out, eligible) == []


def test_generated_problems_never_repeat_seeds(eligible):
    seeds_keys = {p.dedup_key() for p in eligible}
    out = generate_mix(eligible, GenConfig.from_preset("all", seed=11, count=100))
    assert not seeds_keys & {p.dedup_key() for p in out}


def test_exhaustion_is_reported():
    tiny = [make_problem("s1", "x", "x + 1/x", "2", rhs_positive=True, category="amgm")]
    with pytest.raises(GenerationExhausted):
        generate_mix(tiny, GenConfig(seed=0, count=5, families=("composition",)))


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(seed=0, count=0)
    with pytest.raises(ValueError):
        GenConfig(seed=0, weight_range=(3, 2))
    with pytest.raises(ValueError):
        GenConfig(seed=0, families=("magic",))
    with pytest.raises(ValueError):
        GenConfig.from_preset("everything", seed=0)


def test_seed_split_disjoint():
    with pytest.raises(ValueError):
        SeedSplit(("a", "b"), ("b",))


def test_ft_corpus_two_stages(eligible):
    split = SeedSplit.by_category(eligible)
    problems, tasks = make_ft_corpus(eligible, split, GenConfig(seed=1, count=300), per_seed=4)
    stage1 = [p for p in problems if len(p.provenance) == 1 and p.provenance[0].family == "variable-level"]
    assert len(stage1) == 4 * len(split.train) == 100
    assert len(problems) == 100 + 300 and len(tasks) == 300
    heldout = set(split.heldout)
    roots = {e.parents[0] for p in problems for e in p.provenance[:1]}
    assert not roots & heldout
    prompt = render_prompt(tasks[0])
    assert "nlinarith" in prompt and tasks[0].formal_statement in prompt
