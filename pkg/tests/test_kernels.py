import importlib.util
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings

from ineqcomp import kernels
from ineqcomp.expr import VarId, eval_expr, parse_expr

from strategies import VARS, exprs, shallow

VARIDS = tuple(v.args[0] for v in VARS)
X = np.exp(np.random.default_rng(3).uniform(-4, 4, size=(64, len(VARIDS))))
X[::7] *= -1.0          # some negative rows to exercise domain faults

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable or disabled")


def scalar(e):
    return np.array([eval_expr(e, dict(zip(VARIDS, row))) for row in X.tolist()])


def same(a, b):
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0, equal_nan=True)


@settings(max_examples=120, deadline=None)
@given(exprs)
def test_numpy_backend_matches_scalar(e):
    same(kernels.evaluate(e, VARIDS, X, "numpy"), scalar(e))


@needs_numba
@settings(max_examples=120, deadline=None)
@given(exprs)
def test_numba_backend_matches_scalar(e):
    same(kernels.evaluate(e, VARIDS, X, "numba"), scalar(e))


@needs_numba
@settings(max_examples=60, deadline=None)
@given(shallow)
def test_backends_agree_with_exp(e):
    same(kernels.evaluate(e, VARIDS, X, "numba"), kernels.evaluate(e, VARIDS, X, "numpy"))


def test_faults_are_nan_not_exceptions():
    e = parse_expr("log(x) + sqrt(y) + 1/(x - x)")
    out = kernels.evaluate(e, VARIDS, X, "numpy")
    assert np.isnan(out).all()


def test_overflow_is_inf():
    e = parse_expr("exp(x*1000)")
    out = kernels.evaluate(e, VARIDS, np.ones((2, len(VARIDS))), kernels.default_backend())
    assert np.isinf(out).all()


def test_empty_input():
    assert kernels.evaluate(parse_expr("x"), VARIDS, np.empty((0, 4))).shape == (0,)


def test_rejects_bad_shapes_and_backends():
    with pytest.raises(ValueError):
        kernels.evaluate(parse_expr("x"), VARIDS, np.ones(4))
    with pytest.raises(ValueError):
        kernels.evaluate(parse_expr("x"), VARIDS, np.ones((1, 4)), "fortran")


def test_program_is_cached():
    e = parse_expr("x + y")
    assert kernels.compile_expr(e, VARIDS) is kernels.compile_expr(e, VARIDS)


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", None)])
def test_env_flag_selects_fallback(flag, expected):
    env = dict(os.environ, INEQCOMP_NO_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from ineqcomp import kernels; print(kernels.default_backend())"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    if expected:
        assert out == expected
    else:
        assert out == ("numba" if importlib.util.find_spec("numba") else "numpy")


@pytest.mark.parametrize("backend", ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else []))
def test_strict_mode_faults_on_hidden_overflow(backend):
    e = parse_expr("1/exp(x)")
    pts = np.array([[1000.0, 1, 1, 1], [1.0, 1, 1, 1]])
    loose = kernels.evaluate(e, VARIDS, pts, backend)
    strict = kernels.evaluate(e, VARIDS, pts, backend, strict=True)
    assert loose[0] == 0.0 and np.isnan(strict[0])
    assert strict[1] == pytest.approx(np.exp(-1.0))
