"""Immutable, hash-consed expression trees over positive-real variables.

Every node is interned: two structurally equal trees are the same object, so
equality and hashing are O(1) after construction.  Constants are exact
``Fraction`` values; floats only appear when an expression is evaluated.
"""
from __future__ import annotations

import ast
import math
import threading
import weakref
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple, Union

__all__ = [
    "VarId", "Expr", "var", "const", "add", "mul", "sub", "div", "pown", "powr",
    "sqrt", "exp", "log", "minimum", "maximum", "absval", "neg",
    "sum_of", "product_of", "free_vars", "substitute", "eval_expr", "is_fault",
    "homogeneous_degree", "to_json", "from_json", "parse_expr", "canonical_key",
    "to_infix", "walk", "OPS", "ExprError",
]

OPS = ("var", "const", "add", "mul", "sub", "div", "pown", "powr",
       "sqrt", "exp", "log", "min", "max", "abs", "neg")

_UNARY = frozenset({"sqrt", "exp", "log", "abs", "neg"})
_BINARY = frozenset({"sub", "div", "min", "max"})
_NARY = frozenset({"add", "mul"})

_SUBSCRIPTS = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


class ExprError(ValueError):
    pass


class VarId(NamedTuple):
    """A variable: base identifier plus duplication index (0 = original)."""

    base: str
    idx: int = 0

    def render(self, ascii_only: bool = False) -> str:
        if self.idx == 0:
            return self.base
        if ascii_only:
            return f"{self.base}_{self.idx}"
        return self.base + str(self.idx).translate(_SUBSCRIPTS)

    def __str__(self) -> str:
        return self.render()


Number = Union[int, Fraction]


class Expr:
    __slots__ = ("op", "args", "_hash", "__weakref__")

    _table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
    _lock = threading.Lock()

    op: str
    args: tuple

    def __new__(cls, op: str, args: tuple) -> "Expr":
        key = (op, args)
        with cls._lock:
            node = cls._table.get(key)
            if node is None:
                node = object.__new__(cls)
                object.__setattr__(node, "op", op)
                object.__setattr__(node, "args", args)
                object.__setattr__(node, "_hash", hash(key))
                cls._table[key] = node
        return node

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        # interning makes identity equivalent to structural equality
        return self is other

    def __ne__(self, other) -> bool:
        return self is not other

    def __reduce__(self):
        return (Expr, (self.op, self.args))

    @property
    def children(self) -> tuple["Expr", ...]:
        if self.op in ("var", "const"):
            return ()
        if self.op in ("pown", "powr"):
            return (self.args[0],)
        return self.args

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def value(self) -> Fraction:
        if self.op != "const":
            raise ExprError(f"{self.op} node has no constant value")
        return self.args[0]

    def __repr__(self) -> str:
        return f"Expr({to_infix(self)})"


# ---------------------------------------------------------------- constructors

def var(base: str | VarId, idx: int = 0) -> Expr:
    v = base if isinstance(base, VarId) else VarId(base, idx)
    if not v.base.isidentifier() or v.idx < 0:
        raise ExprError(f"bad variable {v!r}")
    return Expr("var", (v,))


def const(value: Number | str, den: int = 1) -> Expr:
    if isinstance(value, float):
        raise ExprError("float constants are not allowed in the symbolic layer")
    return Expr("const", (Fraction(value) / den,))


def _lift(e: Expr | Number) -> Expr:
    if isinstance(e, Expr):
        return e
    return const(e)


def add(*terms: Expr | Number) -> Expr:
    ts = tuple(_lift(t) for t in terms)
    if len(ts) < 2:
        raise ExprError("add needs at least two operands")
    return Expr("add", ts)


def mul(*factors: Expr | Number) -> Expr:
    fs = tuple(_lift(f) for f in factors)
    if len(fs) < 2:
        raise ExprError("mul needs at least two operands")
    return Expr("mul", fs)


def sub(left: Expr | Number, right: Expr | Number) -> Expr:
    return Expr("sub", (_lift(left), _lift(right)))


def div(num: Expr | Number, den: Expr | Number) -> Expr:
    den = _lift(den)
    if den.is_const and den.value == 0:
        raise ExprError("division by the literal zero")
    return Expr("div", (_lift(num), den))


def pown(base: Expr | Number, k: int) -> Expr:
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ExprError(f"natural exponent must be an int >= 1, got {k!r}")
    return Expr("pown", (_lift(base), k))


def powr(base: Expr | Number, exponent: Number | str) -> Expr:
    return Expr("powr", (_lift(base), Fraction(exponent)))


def sqrt(arg: Expr | Number) -> Expr:
    return Expr("sqrt", (_lift(arg),))


def exp(arg: Expr | Number) -> Expr:
    return Expr("exp", (_lift(arg),))


def log(arg: Expr | Number) -> Expr:
    return Expr("log", (_lift(arg),))


def minimum(a: Expr | Number, b: Expr | Number) -> Expr:
    return Expr("min", (_lift(a), _lift(b)))


def maximum(a: Expr | Number, b: Expr | Number) -> Expr:
    return Expr("max", (_lift(a), _lift(b)))


def absval(arg: Expr | Number) -> Expr:
    return Expr("abs", (_lift(arg),))


def neg(arg: Expr | Number) -> Expr:
    arg = _lift(arg)
    if arg.is_const:
        return const(-arg.value)
    return Expr("neg", (arg,))


def sum_of(a: Expr, b: Expr) -> Expr:
    """``a + b`` with nested sums flattened and two constants folded."""
    if a.is_const and b.is_const:
        return const(a.value + b.value)
    terms = (a.args if a.op == "add" else (a,)) + (b.args if b.op == "add" else (b,))
    return Expr("add", terms)


def product_of(a: Expr, b: Expr) -> Expr:
    """``a * b`` with nested products flattened and two constants folded."""
    if a.is_const and b.is_const:
        return const(a.value * b.value)
    factors = (a.args if a.op == "mul" else (a,)) + (b.args if b.op == "mul" else (b,))
    return Expr("mul", factors)


def _rebuild(e: Expr, children: tuple[Expr, ...]) -> Expr:
    if e.op in ("pown", "powr"):
        return Expr(e.op, (children[0], e.args[1]))
    return Expr(e.op, children)


# ------------------------------------------------------------------ traversal

def free_vars(e: Expr) -> frozenset[VarId]:
    return _free_vars(e)


_fv_cache: "weakref.WeakKeyDictionary[Expr, frozenset]" = weakref.WeakKeyDictionary()


def _free_vars(e: Expr) -> frozenset[VarId]:
    hit = _fv_cache.get(e)
    if hit is not None:
        return hit
    if e.op == "var":
        out = frozenset(e.args)
    elif e.op == "const":
        out = frozenset()
    else:
        out = frozenset().union(*(_free_vars(c) for c in e.children))
    _fv_cache[e] = out
    return out


def substitute(e: Expr, mapping: Mapping[VarId, Expr]) -> Expr:
    """Simultaneous substitution; variables missing from ``mapping`` are kept."""
    if not mapping:
        return e
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        out = memo.get(node)
        if out is not None:
            return out
        if node.op == "var":
            out = mapping.get(node.args[0], node)
        elif node.op == "const":
            out = node
        else:
            out = _rebuild(node, tuple(go(c) for c in node.children))
        memo[node] = out
        return out

    return go(e)


def map_vars(e: Expr, fn: Callable[[VarId], VarId]) -> Expr:
    return substitute(e, {v: var(fn(v)) for v in free_vars(e)})


# ----------------------------------------------------------------- evaluation

def is_fault(x: float) -> bool:
    """True for the domain-fault marker (NaN)."""
    return x != x


def eval_expr(e: Expr, env: Mapping[VarId, float | Fraction]) -> float:
    """Evaluate ``e`` in IEEE doubles.

    Out-of-domain operations (log or sqrt of a negative, log(0), division by
    zero, real powers of negative bases) return NaN, which propagates to the
    root as the domain-fault marker.
    """
    op = e.op
    if op == "var":
        return float(env[e.args[0]])
    if op == "const":
        return float(e.args[0])
    if op == "add":
        total = 0.0
        for c in e.args:
            total += eval_expr(c, env)
        return total
    if op == "mul":
        prod = 1.0
        for c in e.args:
            prod *= eval_expr(c, env)
        return prod
    if op == "sub":
        return eval_expr(e.args[0], env) - eval_expr(e.args[1], env)
    if op == "div":
        num = eval_expr(e.args[0], env)
        den = eval_expr(e.args[1], env)
        if den == 0.0:
            return math.nan
        return num / den
    if op == "neg":
        return -eval_expr(e.args[0], env)
    if op == "abs":
        return abs(eval_expr(e.args[0], env))
    if op == "min":
        a, b = eval_expr(e.args[0], env), eval_expr(e.args[1], env)
        return math.nan if (a != a or b != b) else min(a, b)
    if op == "max":
        a, b = eval_expr(e.args[0], env), eval_expr(e.args[1], env)
        return math.nan if (a != a or b != b) else max(a, b)
    if op == "pown":
        b = eval_expr(e.args[0], env)
        try:
            return b ** e.args[1]
        except OverflowError:
            return math.copysign(math.inf, b) if e.args[1] % 2 else math.inf
    if op == "powr":
        b = eval_expr(e.args[0], env)
        p = float(e.args[1])
        if b != b or b < 0.0 or (b == 0.0 and p < 0.0):
            return math.nan
        try:
            return b ** p
        except OverflowError:
            return math.inf
    if op == "sqrt":
        a = eval_expr(e.args[0], env)
        return math.nan if (a != a or a < 0.0) else math.sqrt(a)
    if op == "exp":
        a = eval_expr(e.args[0], env)
        if a != a:
            return a
        try:
            return math.exp(a)
        except OverflowError:
            return math.inf
    if op == "log":
        a = eval_expr(e.args[0], env)
        if a != a or a <= 0.0:
            return math.nan
        return math.log(a)
    raise ExprError(f"unknown op {op}")


def homogeneous_degree(e: Expr, among: frozenset[VarId] | None = None) -> Fraction | None:
    """Degree of homogeneity of ``e`` under ``x -> t*x`` for t > 0, or None.

    Only variables in ``among`` are scaled (all variables when None).  Used by
    the sampler to hit equality constraints by rescaling.
    """
    op = e.op
    if op == "var":
        return Fraction(1) if among is None or e.args[0] in among else Fraction(0)
    if op == "const":
        return Fraction(0)
    if op == "add" or op == "sub" or op in ("min", "max"):
        degs = [homogeneous_degree(c, among) for c in e.children]
        if any(d is None for d in degs):
            return None
        if len(set(degs)) != 1:
            return None
        return degs[0]
    if op == "mul":
        total = Fraction(0)
        for c in e.args:
            d = homogeneous_degree(c, among)
            if d is None:
                return None
            total += d
        return total
    if op == "div":
        a, b = homogeneous_degree(e.args[0], among), homogeneous_degree(e.args[1], among)
        if a is None or b is None:
            return None
        return a - b
    if op == "pown" or op == "powr":
        d = homogeneous_degree(e.args[0], among)
        return None if d is None else d * e.args[1]
    if op == "sqrt":
        d = homogeneous_degree(e.args[0], among)
        return None if d is None else d / 2
    if op in ("neg", "abs"):
        return homogeneous_degree(e.args[0], among)
    d = homogeneous_degree(e.args[0], among)
    # exp/log only stay homogeneous when their argument does not scale
    return Fraction(0) if d == 0 else None


# ----------------------------------------------------------- JSON round trip

def to_json(e: Expr) -> dict:
    op = e.op
    if op == "var":
        v = e.args[0]
        return {"op": "var", "args": [v.base, v.idx]}
    if op == "const":
        q = e.args[0]
        return {"op": "const", "args": [q.numerator, q.denominator]}
    if op == "pown":
        return {"op": "pown", "args": [to_json(e.args[0]), e.args[1]]}
    if op == "powr":
        q = e.args[1]
        return {"op": "powr", "args": [to_json(e.args[0]), q.numerator, q.denominator]}
    return {"op": op, "args": [to_json(c) for c in e.args]}


def from_json(node) -> Expr:
    if not isinstance(node, dict) or "op" not in node or "args" not in node:
        raise ExprError(f"expression node must be an object with op/args: {node!r}")
    op, args = node["op"], node["args"]
    if op not in OPS:
        raise ExprError(f"unknown op {op!r}")
    if not isinstance(args, list):
        raise ExprError(f"args of {op} must be a list")
    try:
        if op == "var":
            base, idx = args
            if not isinstance(base, str) or not isinstance(idx, int):
                raise ExprError(f"bad var args {args!r}")
            return var(base, idx)
        if op == "const":
            num, den = args
            if not isinstance(num, int) or not isinstance(den, int) or den == 0:
                raise ExprError(f"bad const args {args!r}")
            q = Fraction(num, den)
            if (q.numerator, q.denominator) != (num, den):
                raise ExprError(f"constant {num}/{den} is not in lowest terms")
            return const(q)
        if op == "pown":
            base, k = args
            return pown(from_json(base), k)
        if op == "powr":
            base, num, den = args
            q = Fraction(num, den)
            if (q.numerator, q.denominator) != (num, den):
                raise ExprError(f"exponent {num}/{den} is not reduced")
            return powr(from_json(base), q)
        children = [from_json(c) for c in args]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ExprError):
            raise
        raise ExprError(f"malformed {op} node: {exc}") from exc
    if op in _NARY:
        return add(*children) if op == "add" else mul(*children)
    if op in _BINARY and len(children) != 2:
        raise ExprError(f"{op} takes two operands")
    if op in _UNARY and len(children) != 1:
        raise ExprError(f"{op} takes one operand")
    return {"sub": sub, "div": div, "min": minimum, "max": maximum,
            "sqrt": sqrt, "exp": exp, "log": log, "abs": absval, "neg": neg}[op](*children)


def canonical_key(e: Expr) -> str:
    """Order-insensitive encoding: add/mul operands sorted.  For dedup only."""
    op = e.op
    if op == "var":
        v = e.args[0]
        return f"v:{v.base}:{v.idx}"
    if op == "const":
        return f"c:{e.args[0]}"
    if op in ("pown", "powr"):
        return f"{op}({canonical_key(e.args[0])};{e.args[1]})"
    keys = [canonical_key(c) for c in e.args]
    if op in _NARY:
        keys.sort()
    return f"{op}(" + ",".join(keys) + ")"


# ------------------------------------------------------------- infix reading

_FUNCS = {"sqrt": sqrt, "exp": exp, "log": log, "abs": absval,
          "min": minimum, "max": maximum}


def parse_expr(text: str) -> Expr:
    """Read a Python-syntax arithmetic expression, e.g. ``(x+y)*(1/x+1/y)``.

    ``a/b`` with integer literals becomes a rational constant; ``e**k`` with a
    positive integer literal becomes a natural power, any other constant
    exponent a rational power.  Variables ``x_2`` map to ``VarId('x', 2)``.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ExprError(f"cannot parse {text!r}: {exc.msg}") from None
    return _from_ast(tree)


def _const_of(node) -> Fraction | None:
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return Fraction(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        inner = _const_of(node.operand)
        return None if inner is None else -inner
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Div):
        a, b = _const_of(node.left), _const_of(node.right)
        if a is not None and b is not None and b != 0:
            return a / b
    return None


def _flatten(node, op_type) -> list:
    if isinstance(node, ast.BinOp) and isinstance(node.op, op_type) and _const_of(node) is None:
        return _flatten(node.left, op_type) + [node.right]
    return [node]


def _from_ast(node) -> Expr:
    c = _const_of(node)
    if c is not None:
        return const(c)
    if isinstance(node, ast.Name):
        name = node.id
        base, _, idx = name.rpartition("_")
        if base and idx.isdigit():
            return var(base, int(idx))
        return var(name)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return neg(_from_ast(node.operand))
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Add):
            return add(*(_from_ast(n) for n in _flatten(node, ast.Add)))
        if isinstance(node.op, ast.Mult):
            return mul(*(_from_ast(n) for n in _flatten(node, ast.Mult)))
        if isinstance(node.op, ast.Sub):
            return sub(_from_ast(node.left), _from_ast(node.right))
        if isinstance(node.op, ast.Div):
            return div(_from_ast(node.left), _from_ast(node.right))
        if isinstance(node.op, ast.Pow):
            k = _const_of(node.right)
            if k is None:
                raise ExprError("exponents must be constant")
            base = _from_ast(node.left)
            if k.denominator == 1 and k >= 1:
                return pown(base, int(k))
            return powr(base, k)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        return _FUNCS[node.func.id](*(_from_ast(a) for a in node.args))
    raise ExprError(f"unsupported syntax: {ast.dump(node)}")


def to_infix(e: Expr) -> str:
    """Debug rendering in Python syntax.

    ``parse_expr`` reads it back up to flattening of nested sums and products
    and folding of literal quotients."""
    op = e.op
    if op == "var":
        v = e.args[0]
        return v.base if v.idx == 0 else f"{v.base}_{v.idx}"
    if op == "const":
        q = e.args[0]
        s = str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
        return f"({s})" if (q < 0 or q.denominator != 1) else s
    if op in ("add", "mul"):
        sep = " + " if op == "add" else "*"
        return "(" + sep.join(to_infix(c) for c in e.args) + ")"
    if op == "sub":
        return f"({to_infix(e.args[0])} - {to_infix(e.args[1])})"
    if op == "div":
        return f"({to_infix(e.args[0])}/{to_infix(e.args[1])})"
    if op == "pown":
        return f"({to_infix(e.args[0])}**{e.args[1]})"
    if op == "powr":
        q = e.args[1]
        return f"({to_infix(e.args[0])}**({q.numerator}/{q.denominator}))"
    if op == "neg":
        return f"(-{to_infix(e.args[0])})"
    return f"{op}(" + ", ".join(to_infix(c) for c in e.args) + ")"


def walk(e: Expr) -> Iterable[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))
