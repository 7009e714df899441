import numpy as np
import pytest

from ineqcomp import kernels
from ineqcomp.expr import eval_expr
from ineqcomp.oracle import COND_TOL, check_corpus, check_problem, sample_feasible
from ineqcomp.problem import make_problem


def test_all_seeds_hold(seeds):
    reports = check_corpus(seeds, seed=0, n=300)
    bad = [r.problem_id for r in reports if not r.ok]
    assert bad == []
    assert all(r.accepted > 0 for r in reports)


def test_mutations_are_caught(mutations):
    reports = check_corpus(mutations, seed=0, n=1000)
    assert len(reports) == 5
    assert all(not r.ok for r in reports), [r.to_record() for r in reports if r.ok]


needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable or disabled")


@pytest.mark.parametrize("backend", [pytest.param("numba", marks=needs_numba), "numpy"])
def test_equality_conditions_are_hit(seed_map, backend, rng):
    p = seed_map["amgm_p11"]
    S = sample_feasible(p, rng, 200, backend)
    assert len(S) == 200
    for env in S.envs()[:50]:
        for c in p.conditions:
            r = eval_expr(c.lhs, env) - eval_expr(c.rhs, env)
            assert abs(r) <= COND_TOL * 10


def test_non_homogeneous_equality_uses_bisection(rng):
    p = make_problem("nh", "x y", "x + y", "2", conditions=[("x + x**2 + y", "eq", "5")])
    S = sample_feasible(p, rng, 100)
    assert len(S) == 100
    X = S.X
    assert np.allclose(X[:, 0] + X[:, 0] ** 2 + X[:, 1], 5.0, rtol=0, atol=1e-10)


def test_strict_condition_rejection(rng):
    p = make_problem("gt", "x y", "x", "y", conditions=[("x", "gt", "y")])
    r = check_problem(p, rng, 500)
    assert r.ok and r.accepted == 500
    assert r.attempted >= 500


def test_infeasible_is_exhausted(rng):
    p = make_problem("inf", "x", "x", "0", conditions=[("0", "gt", "x")])
    r = check_problem(p, rng, 50)
    assert r.exhausted and r.accepted == 0
    assert r.attempted == 500


def test_tag_violation_detected(rng):
    p = make_problem("tag", "x y", "x**2 + y**2", "2*x*y - x*y", rhs_positive=True)
    assert check_problem(p, rng, 200).ok
    q = make_problem("tag2", "x y", "x**2 + y**2 + 10", "x - y", rhs_positive=True)
    r = check_problem(q, rng, 200)
    assert not r.violations and r.tag_violations


def test_domain_faults_counted(rng):
    p = make_problem("log", "x", "x", "log(x)")
    r = check_problem(p, rng, 200)
    assert r.ok and r.domain_faults == 0
    q = make_problem("sq", "x y", "x", "sqrt(y - x) - sqrt(y - x)")
    r = check_problem(q, rng, 400)
    assert r.domain_faults > 0 and r.ok


def test_bad_arguments(seed_map, rng):
    with pytest.raises(ValueError):
        sample_feasible(seed_map["amgm_p1"], rng, 0)
    with pytest.raises(ValueError):
        check_problem(seed_map["amgm_p1"], rng, 10, tol=0)


def test_deterministic(seeds):
    a = [r.to_record() for r in check_corpus(seeds[:10], seed=7, n=100)]
    b = [r.to_record() for r in check_corpus(seeds[:10], seed=7, n=100)]
    assert a == b


@needs_numba
def test_backends_agree(seeds):
    a = [r.to_record() for r in check_corpus(seeds[:15], seed=3, n=100, backend="numba")]
    b = [r.to_record() for r in check_corpus(seeds[:15], seed=3, n=100, backend="numpy")]
    assert [(x["accepted"], x["violations"]) for x in a] == [(x["accepted"], x["violations"]) for x in b]
