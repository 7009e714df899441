import math
import pickle
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from ineqcomp import expr as E
from ineqcomp.expr import VarId, eval_expr, parse_expr, to_infix

from strategies import exprs, points, shallow

x, y, z = E.var("x"), E.var("y"), E.var("z")

_SYMPY_NAMES = {"min": sympy.Min, "max": sympy.Max, "abs": sympy.Abs, "sqrt": sympy.sqrt,
                "exp": sympy.exp, "log": sympy.log}


def sympy_value(e, env):
    """Independent evaluation: reparse the infix text with sympy at 50 digits."""
    syms = {str(v): sympy.Symbol(str(v)) for v in env}
    try:
        tree = sympy.sympify(to_infix(e), locals={**_SYMPY_NAMES, **syms})
        val = sympy.N(tree.subs({syms[str(v)]: sympy.Float(repr(a), 50) for v, a in env.items()}), 50)
    except (TypeError, ValueError):
        return None      # min/max of a complex intermediate
    try:
        return float(val)
    except TypeError:
        return None      # complex or infinite


def test_hash_consing_shares_nodes():
    a = E.add(x, E.mul(2, y))
    b = E.add(E.var("x"), E.mul(E.const(2), E.var("y")))
    assert a is b
    assert hash(a) == hash(b)
    assert E.add(x, y) is not E.add(y, x)


def test_nodes_are_immutable():
    with pytest.raises(AttributeError):
        x.op = "const"


def test_pickle_preserves_identity():
    e = parse_expr("(x + y)*(1/x + 1/y)")
    assert pickle.loads(pickle.dumps(e)) is e


def test_constants_are_exact():
    e = parse_expr("1/3 + 1/6")
    assert [c.value for c in e.args] == [Fraction(1, 3), Fraction(1, 6)]
    assert parse_expr("2/5").value == Fraction(2, 5)


def test_parse_indexed_variables():
    e = parse_expr("x_2 + x_10")
    assert E.free_vars(e) == {VarId("x", 2), VarId("x", 10)}
    assert VarId("x", 2).render() == "x₂"
    assert VarId("x", 2).render(ascii_only=True) == "x_2"


@pytest.mark.parametrize("text", ["x +", "x.y", "f(x)", "x if y else z", "[x]"])
def test_parse_rejects_garbage(text):
    with pytest.raises(E.ExprError):
        parse_expr(text)


@pytest.mark.parametrize("text,env,expected", [
    ("log(x)", {"x": -1.0}, "nan"),
    ("log(x)", {"x": 0.0}, "nan"),
    ("sqrt(x - 2)", {"x": 1.0}, "nan"),
    ("1/(x - 1)", {"x": 1.0}, "nan"),
    ("x**(1/2)", {"x": -4.0}, "nan"),
    ("exp(x)", {"x": 1000.0}, "inf"),
    ("x**3", {"x": -2.0}, -8.0),
    ("min(x, log(x - 5))", {"x": 1.0}, "nan"),
])
def test_domain_faults(text, env, expected):
    val = eval_expr(parse_expr(text), {VarId(k): v for k, v in env.items()})
    if expected == "nan":
        assert E.is_fault(val)
    elif expected == "inf":
        assert val == math.inf
    else:
        assert val == expected


def test_fault_propagates_to_root():
    e = E.add(E.mul(2, E.log(E.sub(x, 3))), y)
    assert E.is_fault(eval_expr(e, {VarId("x"): 1.0, VarId("y"): 2.0}))


@settings(max_examples=150, deadline=None)
@given(exprs, points)
def test_eval_matches_sympy(e, pt):
    env = {v: a for v, a in pt.items() if v in E.free_vars(e)}
    ours = eval_expr(e, env)
    ref = sympy_value(e, env)
    if ref is None or not math.isfinite(ours) or abs(ref) > 1e12:
        return
    assert ours == pytest.approx(ref, rel=1e-9, abs=1e-9)


@given(exprs)
def test_json_round_trip(e):
    assert E.from_json(E.to_json(e)) is e


@given(exprs, points)
def test_infix_round_trip(e, pt):
    # the parser flattens sum/product chains and folds literal quotients,
    # so the text is a normal form rather than an exact copy
    f = parse_expr(to_infix(e))
    assert parse_expr(to_infix(f)) is f
    env = {v: a for v, a in pt.items()}
    u, w = eval_expr(e, env), eval_expr(f, env)
    assert (math.isnan(u) and math.isnan(w)) or u == pytest.approx(w, rel=1e-12, abs=1e-300)


def test_infix_round_trip_exact_for_flat_trees():
    e = parse_expr("(x + y + z)*(1/x + 1/y + 1/z) - 2/3*x**(2/5)")
    assert parse_expr(to_infix(e)) is e


@given(shallow)
def test_canonical_key_injective_on_structure(e):
    f = E.add(e, 1)
    assert (E.canonical_key(e) == E.canonical_key(f)) == (e is f)


@given(exprs, st.floats(0.5, 4.0))
def test_homogeneous_degree_predicts_scaling(e, t):
    d = E.homogeneous_degree(e)
    if d is None:
        return
    env = {v: 1.3 + 0.1 * i for i, v in enumerate(sorted(E.free_vars(e)))}
    base = eval_expr(e, env)
    scaled = eval_expr(e, {v: t * a for v, a in env.items()})
    if not (math.isfinite(base) and math.isfinite(scaled)) or abs(base) > 1e8:
        return
    assert scaled == pytest.approx(base * t ** float(d), rel=1e-7, abs=1e-9)


def test_homogeneous_degree_examples():
    assert E.homogeneous_degree(parse_expr("x*y + z**2")) == 2
    assert E.homogeneous_degree(parse_expr("x + 1")) is None
    assert E.homogeneous_degree(parse_expr("sqrt(x*y)/z")) == 0
    assert E.homogeneous_degree(parse_expr("x*y"), frozenset({VarId("x")})) == 1


def test_substitute_is_simultaneous():
    e = parse_expr("x - y")
    out = E.substitute(e, {VarId("x"): y, VarId("y"): x})
    assert out is parse_expr("y - x")


def test_sum_and_product_flatten():
    assert E.product_of(parse_expr("4"), parse_expr("4")) is E.const(16)
    assert E.sum_of(parse_expr("x + 1"), parse_expr("y + 2")) is parse_expr("x + 1 + y + 2")
    assert E.product_of(parse_expr("2*x"), parse_expr("3*y")) is parse_expr("2*x*3*y")
