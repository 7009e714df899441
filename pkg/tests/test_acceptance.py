"""One test per acceptance criterion; the run summary prints PASS/FAIL per name."""
import itertools
import time
import warnings
from collections import Counter

import numpy as np
import pytest

from ineqcomp.generator import GenConfig, expand_simp, filter_eligible, filter_eligible_records, generate_mix, load_records
from ineqcomp.harness import Attempt, EvalRecord, run_batch, verify
from ineqcomp.lean import LeanArtifact, render_statement
from ineqcomp.problem import problem_to_record
from ineqcomp.oracle import check_corpus
from ineqcomp.scoring import pass_at_k_single
from ineqcomp.transforms import FreshNamer, compose, fresh_copy, lift, rule_by_name, type1_variant

from conftest import FIXTURES, real_toolchain
from goldens import GOLDEN_DIR, golden_problems
from metamorphic import one_step_corpus, rule_universe, rules_exercised


class Timer:
    def __enter__(self):
        self.t = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t


@pytest.mark.acceptance("Corpus counts")
def test_corpus_counts(seeds):
    with Timer() as t:
        out = expand_simp(seeds, np.random.default_rng(0))
        groups = Counter(e.family for p in out for e in p.provenance[-1:])
        kept, rejected = filter_eligible(seeds)
        fx_kept, fx_rejected = filter_eligible_records(load_records(FIXTURES / "seed_exclusions.jsonl"))
    assert len(seeds) == 75
    assert len(out) == 150 and groups == {"typeI": 75, "typeII": 75}
    assert {p.id for p in kept} | {r.id for r in rejected} == {p.id for p in seeds}
    assert all(p.all_positive for p in kept)
    assert len(fx_kept) == 65 and len(fx_rejected) == 10
    assert t.elapsed < 5, t.elapsed


@pytest.mark.acceptance("Ineq-Mix reproduction shape")
def test_mix_shape(seeds):
    eligible, _ = filter_eligible(seeds)
    with Timer() as t:
        a = generate_mix(eligible, GenConfig.from_preset("composition-only", 7, 100))
        b = generate_mix(eligible, GenConfig.from_preset("composition-only", 7, 100))
    assert len(a) == 100
    assert len({p.dedup_key() for p in a}) == 100
    assert all(len(p.provenance) == 1 and p.provenance[0].family == "composition" for p in a)
    assert [problem_to_record(p) for p in a] == [problem_to_record(p) for p in b]
    assert t.elapsed < 10, t.elapsed


@pytest.mark.acceptance("Metamorphic validity suite")
def test_metamorphic_validity(seeds, mutations):
    with Timer() as t:
        corpus = one_step_corpus(seeds)
        reports = check_corpus(seeds + corpus, seed=0, n=1000, tol=1e-9)
        caught = check_corpus(mutations, seed=0, n=1000, tol=1e-9)
    bad = [r.to_record(1) for r in reports if r.n_violations or r.n_tag_violations]
    assert bad == []
    # every rule in the three tables got exercised
    assert rules_exercised(corpus) >= rule_universe()
    assert all(r.accepted > 0 for r in reports)
    assert len(caught) == 5 and all(not r.ok for r in caught)
    assert t.elapsed < 120, t.elapsed


@pytest.mark.acceptance("Golden emission")
def test_golden_emission():
    problems = golden_problems()
    assert sorted(problems) == ["alge_whole_p70", "amgm_p36", "amgm_p47", "cauchy_p1", "cauchy_p26"]
    for name, p in problems.items():
        assert render_statement(p).source.encode("utf-8") == (GOLDEN_DIR / f"{name}.lean").read_bytes(), name


@pytest.mark.acceptance("Type I consistency")
def test_type1_consistency(seeds, seed_map):
    mult = rule_by_name("Multiplication", variant="positive")
    tagged = [s for s in seeds if s.rhs_positive]
    assert tagged
    for s in tagged:
        copy = fresh_copy(s, FreshNamer(s.variables)).with_id(s.id + "_copy")
        ref = compose(*lift(s, copy), mult).problem
        assert type1_variant(s).same_statement(ref), s.id
    goal = render_statement(type1_variant(seed_map["cauchy_p1"])).goal
    assert goal.endswith("≥ 16")


def _enumerate(n, c, k):
    hits = [True] * c + [False] * (n - c)
    subsets = list(itertools.combinations(range(n), k))
    return sum(any(hits[i] for i in s) for s in subsets) / len(subsets)


@pytest.mark.acceptance("pass@k estimator")
def test_pass_at_k_estimator():
    with Timer() as t:
        cases = 0
        for n in range(1, 9):
            for c in range(n + 1):
                row = []
                for k in range(1, n + 1):
                    v = pass_at_k_single(n, c, k)
                    assert v == pytest.approx(_enumerate(n, c, k), abs=1e-12), (n, c, k)
                    row.append(v)
                    cases += 1
                assert all(a <= b + 1e-12 for a, b in zip(row, row[1:]))
                if c < n:
                    assert all(pass_at_k_single(n, c, k) <= pass_at_k_single(n, c + 1, k) + 1e-12
                               for k in range(1, n + 1))
    assert cases == 240
    assert t.elapsed < 1, t.elapsed


@pytest.mark.acceptance("Harness determinism")
def test_harness_determinism(seed_map, fake_toolchain, tmp_path):
    ids = ["amgm_p1", "cauchy_p1", "amgm_p11", "cauchy_p2", "amgm_p6"]
    probs = [seed_map[i] for i in ids]
    bodies = ["nlinarith [sq_nonneg (x - y)]", "sorry", "error_here", "positivity", "(("]
    att = [Attempt(p.id, i, bodies[(j + 2 * i) % 5], "fixture") for j, p in enumerate(probs) for i in range(4)]
    assert len(att) == 20
    one = run_batch(probs, att, toolchain=fake_toolchain, workers=1, timeout=60)
    eight = run_batch(probs, att, toolchain=fake_toolchain, workers=8, timeout=60)
    assert Counter(r.outcome() for r in one) == Counter(r.outcome() for r in eight)

    # kill a run half way, then resume: only the unfinished half is compiled
    journal = tmp_path / "journal.jsonl"
    compiled = []

    def verifier(art, pid, i, model):
        compiled.append((pid, i))
        return verify(art, fake_toolchain, 60, "proof", pid, i, model)

    run_batch(probs, att[:10], journal=journal, verifier=verifier)
    with open(journal, "a", encoding="utf-8") as fh:
        fh.write('{"problem_id": "amgm_p11", "attempt_id": 2, "comp')       # torn write
    before = len(compiled)
    resumed = run_batch(probs, att, journal=journal, verifier=verifier)
    assert sorted(compiled[before:]) == sorted((a.problem_id, a.attempt_id) for a in att[10:])
    assert Counter(r.outcome() for r in resumed) == Counter(r.outcome() for r in one)
    compiled.clear()
    again = run_batch(probs, att, journal=journal, verifier=verifier)
    assert compiled == []
    assert [r.outcome() for r in again] == [r.outcome() for r in resumed]


@pytest.mark.acceptance("Integration")
@pytest.mark.integration
def test_integration(seeds):
    tc = real_toolchain()
    if tc is None:
        msg = "INTEGRATION SKIPPED: set INEQCOMP_LEAN_PROJECT to a Lean 4 + Mathlib project to run it"
        warnings.warn(msg)
        pytest.skip(msg)
    eligible, _ = filter_eligible(seeds)
    fresh = (expand_simp(seeds, np.random.default_rng(0))
             + generate_mix(eligible, GenConfig.from_preset("composition-only", 7, 100)))
    failures = []
    for p in seeds + fresh:
        rec = verify(render_statement(p), tc, mode="statement", problem_id=p.id)
        if not rec.compiled:
            failures.append((p.id, rec.error))
    assert failures == []
    src = (FIXTURES / "cauchy_p26_full.lean").read_text(encoding="utf-8")
    rec = verify(LeanArtifact(name="cauchy_p26", binders="", goal="", verbatim=src), tc, problem_id="cauchy_p26")
    assert rec.compiled, rec.error
