"""Batched evaluation of expressions over many sample points.

An ``Expr`` is compiled once into a postfix program (three flat arrays) and
run either by a numba-jitted stack machine that works through the samples
in small tiles, or by a numpy fallback that executes the same program
column-wise.  Set
``INEQCOMP_NO_NUMBA=1`` to force the fallback.

Fault semantics match ``expr.eval_expr``: out-of-domain operations give NaN.
"""
from __future__ import annotations

import os
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .expr import Expr, VarId

try:
    if os.environ.get("INEQCOMP_NO_NUMBA", "") not in ("", "0"):
        raise ImportError("numba disabled by INEQCOMP_NO_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

# opcodes
VAR, CONST, ADD, MUL, SUB, DIV, NEG, ABS, MIN, MAX, POWN, POWR, SQRT, EXP, LOG = range(15)

_SIMPLE = {"sub": SUB, "div": DIV, "neg": NEG, "abs": ABS, "min": MIN, "max": MAX,
           "sqrt": SQRT, "exp": EXP, "log": LOG}


class Program(NamedTuple):
    ops: np.ndarray     # int64 opcodes
    iargs: np.ndarray   # int64: variable column / operand count / natural exponent
    fargs: np.ndarray   # float64: constant value / real exponent
    depth: int          # maximum stack height


@lru_cache(maxsize=8192)
def compile_expr(e: Expr, variables: tuple[VarId, ...]) -> Program:
    col = {v: i for i, v in enumerate(variables)}
    ops: list[int] = []
    iargs: list[int] = []
    fargs: list[float] = []
    height = 0
    peak = 0

    def emit(op: int, i: int = 0, f: float = 0.0, pops: int = 0):
        nonlocal height, peak
        ops.append(op)
        iargs.append(i)
        fargs.append(f)
        height += 1 - pops
        peak = max(peak, height)

    def go(node: Expr):
        op = node.op
        if op == "var":
            emit(VAR, i=col[node.args[0]])
        elif op == "const":
            emit(CONST, f=float(node.args[0]))
        elif op in ("add", "mul"):
            for c in node.args:
                go(c)
            n = len(node.args)
            emit(ADD if op == "add" else MUL, i=n, pops=n)
        elif op == "pown":
            go(node.args[0])
            emit(POWN, i=node.args[1], pops=1)
        elif op == "powr":
            go(node.args[0])
            emit(POWR, f=float(node.args[1]), pops=1)
        else:
            for c in node.args:
                go(c)
            emit(_SIMPLE[op], pops=len(node.args))

    go(e)
    return Program(np.asarray(ops, dtype=np.int64), np.asarray(iargs, dtype=np.int64),
                   np.asarray(fargs, dtype=np.float64), peak)


# ------------------------------------------------------------- numpy backend

def run_numpy(prog: Program, X: np.ndarray, strict: bool = False) -> np.ndarray:
    n = X.shape[0]
    stack: list[np.ndarray] = []
    with np.errstate(all="ignore"):
        for op, ia, fa in zip(prog.ops.tolist(), prog.iargs.tolist(), prog.fargs.tolist()):
            if strict and stack:
                top = stack[-1]
                top[~np.isfinite(top)] = np.nan
            if op == VAR:
                stack.append(X[:, ia].astype(np.float64, copy=True))
            elif op == CONST:
                stack.append(np.full(n, fa))
            elif op == ADD or op == MUL:
                operands = stack[-ia:]
                del stack[-ia:]
                acc = np.zeros(n) if op == ADD else np.ones(n)
                for a in operands:
                    acc = acc + a if op == ADD else acc * a
                stack.append(acc)
            elif op in (SUB, DIV, MIN, MAX):
                b = stack.pop()
                a = stack.pop()
                if op == SUB:
                    r = a - b
                elif op == DIV:
                    r = np.where(b == 0.0, np.nan, a / np.where(b == 0.0, 1.0, b))
                elif op == MIN:
                    r = np.minimum(a, b)
                else:
                    r = np.maximum(a, b)
                stack.append(r)
            else:
                a = stack.pop()
                if op == NEG:
                    r = -a
                elif op == ABS:
                    r = np.abs(a)
                elif op == POWN:
                    r = np.power(a, float(ia))
                elif op == POWR:
                    bad = (a < 0.0) | ((a == 0.0) & (fa < 0.0))
                    r = np.where(bad, np.nan, np.power(np.where(bad, 1.0, a), fa))
                elif op == SQRT:
                    r = np.where(a < 0.0, np.nan, np.sqrt(np.abs(a)))
                elif op == EXP:
                    r = np.exp(a)
                else:
                    r = np.where(a <= 0.0, np.nan, np.log(np.where(a <= 0.0, 1.0, a)))
                stack.append(r)
    out = stack[0]
    if strict:
        out = np.where(np.isfinite(out), out, np.nan)
    return out


# ------------------------------------------------------------- numba backend

_TILE = 256     # rows per block; keeps the working stack in cache

if HAVE_NUMBA:
    @njit(cache=True, error_model="numpy")
    def _run_jit(ops, iargs, fargs, depth, X, strict):
        n = X.shape[0]
        out = np.empty(n)
        stack = np.empty((max(depth, 1), _TILE))
        nan = np.nan
        for start in range(0, n, _TILE):
            m = min(_TILE, n - start)
            sp = 0
            # one dispatch per op per tile; the inner row loops vectorise
            for pc in range(ops.shape[0]):
                op = ops[pc]
                if op == VAR:
                    c = iargs[pc]
                    for j in range(m):
                        stack[sp, j] = X[start + j, c]
                    sp += 1
                elif op == CONST:
                    v = fargs[pc]
                    for j in range(m):
                        stack[sp, j] = v
                    sp += 1
                elif op == ADD or op == MUL:
                    k = iargs[pc]
                    lo = sp - k
                    for i in range(lo + 1, sp):
                        if op == ADD:
                            for j in range(m):
                                stack[lo, j] += stack[i, j]
                        else:
                            for j in range(m):
                                stack[lo, j] *= stack[i, j]
                    sp = lo + 1
                elif op == SUB or op == DIV or op == MIN or op == MAX:
                    t = sp - 2
                    if op == SUB:
                        for j in range(m):
                            stack[t, j] = stack[t, j] - stack[t + 1, j]
                    elif op == DIV:
                        for j in range(m):
                            b = stack[t + 1, j]
                            stack[t, j] = nan if b == 0.0 else stack[t, j] / b
                    elif op == MIN:
                        for j in range(m):
                            a = stack[t, j]
                            b = stack[t + 1, j]
                            stack[t, j] = nan if (a != a or b != b) else min(a, b)
                    else:
                        for j in range(m):
                            a = stack[t, j]
                            b = stack[t + 1, j]
                            stack[t, j] = nan if (a != a or b != b) else max(a, b)
                    sp -= 1
                else:
                    t = sp - 1
                    if op == NEG:
                        for j in range(m):
                            stack[t, j] = -stack[t, j]
                    elif op == ABS:
                        for j in range(m):
                            stack[t, j] = abs(stack[t, j])
                    elif op == POWN:
                        k = iargs[pc]
                        if k == 2:
                            for j in range(m):
                                stack[t, j] = stack[t, j] * stack[t, j]
                        else:
                            e = float(k)
                            for j in range(m):
                                stack[t, j] = stack[t, j] ** e
                    elif op == POWR:
                        p = fargs[pc]
                        for j in range(m):
                            a = stack[t, j]
                            if a != a or a < 0.0 or (a == 0.0 and p < 0.0):
                                stack[t, j] = nan
                            else:
                                stack[t, j] = a ** p
                    elif op == SQRT:
                        for j in range(m):
                            a = stack[t, j]
                            stack[t, j] = nan if (a != a or a < 0.0) else np.sqrt(a)
                    elif op == EXP:
                        for j in range(m):
                            stack[t, j] = np.exp(stack[t, j])
                    else:
                        for j in range(m):
                            a = stack[t, j]
                            stack[t, j] = nan if (a != a or a <= 0.0) else np.log(a)
                if strict:
                    t = sp - 1
                    for j in range(m):
                        v = stack[t, j]
                        if not (v - v == 0.0):
                            stack[t, j] = nan
            for j in range(m):
                out[start + j] = stack[0, j]
        return out


def run_numba(prog: Program, X: np.ndarray, strict: bool = False) -> np.ndarray:
    if not HAVE_NUMBA:
        raise RuntimeError("numba backend unavailable")
    return _run_jit(prog.ops, prog.iargs, prog.fargs, prog.depth,
                    np.ascontiguousarray(X, dtype=np.float64), strict)


def default_backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def evaluate(e: Expr, variables: Sequence[VarId], X: np.ndarray, backend: str | None = None,
             strict: bool = False) -> np.ndarray:
    """Evaluate ``e`` on each row of ``X`` (columns ordered as ``variables``).

    With ``strict`` an overflow anywhere in the tree is a fault too, so a
    finite result never hides an infinite intermediate (e.g. 1/exp(1000)).
    """
    prog = compile_expr(e, tuple(variables))
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d array of samples")
    if X.shape[0] == 0:
        return np.empty(0)
    backend = backend or default_backend()
    if backend == "numba":
        return run_numba(prog, X, strict)
    if backend == "numpy":
        return run_numpy(prog, X, strict)
    raise ValueError(f"unknown backend {backend!r}")
