"""Numeric sanity checking of problems by sampling their feasible region.

Base points are log-uniform on [1e-3, 1e3].  Equality conditions are hit
exactly (up to rounding) by moving each point along a ray: homogeneous
residuals are solved in closed form by rescaling, anything else by bisection
in log-space.  Strict and non-strict inequality conditions are handled by
rejection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import VarId, homogeneous_degree
from .kernels import evaluate
from .problem import Condition, Problem

LOW, HIGH = 1e-3, 1e3
COND_TOL = 1e-12
_BISECT_SPAN = 40.0     # search t in [e^-40, e^40]
_BISECT_STEPS = 200


@dataclass
class SampleSet:
    variables: tuple[VarId, ...]
    X: np.ndarray                 # accepted points, one row each
    attempted: int
    exhausted: bool = False

    def envs(self) -> list[dict[VarId, float]]:
        return [dict(zip(self.variables, row.tolist())) for row in self.X]

    def __len__(self) -> int:
        return self.X.shape[0]


@dataclass
class Violation:
    env: dict
    lhs: float
    rhs: float
    gap: float

    def to_record(self) -> dict:
        return {"env": {str(k): v for k, v in self.env.items()}, "lhs": self.lhs,
                "rhs": self.rhs, "gap": self.gap}


@dataclass
class SampleReport:
    problem_id: str
    attempted: int
    accepted: int
    violations: list[Violation] = field(default_factory=list)
    tag_violations: list[Violation] = field(default_factory=list)
    domain_faults: int = 0
    exhausted: bool = False
    n_violations: int = 0          # totals; the lists above keep only examples
    n_tag_violations: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations and not self.tag_violations

    def to_record(self, limit: int = 5) -> dict:
        return {"id": self.problem_id, "attempted": self.attempted, "accepted": self.accepted,
                "violations": self.n_violations, "tag_violations": self.n_tag_violations,
                "domain_faults": self.domain_faults, "exhausted": self.exhausted,
                "examples": [v.to_record() for v in (self.violations + self.tag_violations)[:limit]]}


def _cond_tol(c: Condition) -> float:
    if c.rhs.is_const:
        return COND_TOL * max(1.0, abs(float(c.rhs.value)))
    return COND_TOL


def _residual(c: Condition, variables, X, backend, strict: bool = True) -> np.ndarray:
    return (evaluate(c.lhs, variables, X, backend, strict=strict)
            - evaluate(c.rhs, variables, X, backend, strict=strict))


def _scale_rows(X: np.ndarray, cols: list[int], t: np.ndarray) -> np.ndarray:
    Y = X.copy()
    Y[:, cols] *= t[:, None]
    return Y


def _solve_on(c: Condition, variables, X, cols: list[int], backend) -> tuple[np.ndarray, np.ndarray]:
    """Move rows of X along x_S -> t*x_S so that ``c`` holds; returns (X', ok mask)."""
    moving = frozenset(variables[i] for i in cols)
    dl = homogeneous_degree(c.lhs, moving)
    dr = homogeneous_degree(c.rhs, moving)
    n = X.shape[0]
    with np.errstate(all="ignore"):
        if dl is not None and dr is not None and dl != dr:
            L = evaluate(c.lhs, variables, X, backend, strict=True)
            R = evaluate(c.rhs, variables, X, backend, strict=True)
            ratio = R / L
            ok = np.isfinite(ratio) & (ratio > 0)
            t = np.where(ok, np.abs(ratio), 1.0) ** (1.0 / float(dl - dr))
            ok &= np.isfinite(t) & (t > 0)
            return _scale_rows(X, cols, np.where(ok, t, 1.0)), ok
        if dl is not None and dl == dr:
            # scaling leaves the residual's zero set unchanged
            return X, np.zeros(n, dtype=bool)
        # bisection on s = log t
        lo = np.full(n, -_BISECT_SPAN)
        hi = np.full(n, _BISECT_SPAN)
        f_lo = _residual(c, variables, _scale_rows(X, cols, np.exp(lo)), backend, strict=False)
        f_hi = _residual(c, variables, _scale_rows(X, cols, np.exp(hi)), backend, strict=False)
        # infinities still carry a usable sign
        ok = ~np.isnan(f_lo) & ~np.isnan(f_hi) & (np.sign(f_lo) != np.sign(f_hi))
        neg_lo = f_lo < 0
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            f_mid = _residual(c, variables, _scale_rows(X, cols, np.exp(mid)), backend, strict=False)
            go_right = (f_mid < 0) == neg_lo
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        s = 0.5 * (lo + hi)
        return _scale_rows(X, cols, np.exp(np.where(ok, s, 0.0))), ok


def _solve_equality(c: Condition, variables, X, cols: list[int], backend) -> tuple[np.ndarray, np.ndarray]:
    """Try rescaling all of ``cols`` together, then each column alone, keeping
    the first move that satisfies ``c`` for each row."""
    candidates = [cols] + ([[i] for i in cols] if len(cols) > 1 else [])
    out = X.copy()
    done = np.zeros(X.shape[0], dtype=bool)
    for cand in candidates:
        todo = ~done
        if not todo.any():
            break
        Y, ok = _solve_on(c, variables, X[todo], cand, backend)
        with np.errstate(all="ignore"):
            r = _residual(c, variables, Y, backend)
        ok &= np.abs(r) <= _cond_tol(c)
        rows = np.flatnonzero(todo)[ok]
        out[rows] = Y[ok]
        done[rows] = True
    return out, done


def _draw(rng: np.random.Generator, n: int, m: int, signed_cols: Sequence[int]) -> np.ndarray:
    X = np.exp(rng.uniform(math.log(LOW), math.log(HIGH), size=(n, m)))
    if signed_cols:
        signs = rng.choice(np.array([-1.0, 1.0]), size=(n, len(signed_cols)))
        X[:, list(signed_cols)] *= signs
    return X


def _feasible_batch(p: Problem, rng, n: int, backend) -> np.ndarray:
    variables = p.variables
    col = {v: i for i, v in enumerate(variables)}
    signed = [col[v] for v in variables if v in p.unsigned]
    X = _draw(rng, n, len(variables), signed)
    keep = np.ones(n, dtype=bool)
    fixed: set[VarId] = set()
    for c in p.conditions:
        if c.kind != "eq":
            continue
        free = [col[v] for v in variables if v in c.free_vars() and v not in fixed]
        if not free:
            continue
        X, ok = _solve_equality(c, variables, X, free, backend)
        keep &= ok
        fixed.update(variables[i] for i in free)
    with np.errstate(all="ignore"):
        for c in p.conditions:
            r = _residual(c, variables, X, backend)
            if c.kind == "eq":
                keep &= np.abs(r) <= _cond_tol(c)
            elif c.kind == "gt":
                keep &= r > 0
            else:
                keep &= r >= 0
        pos = [col[v] for v in variables if v not in p.unsigned]
        if pos:
            keep &= np.all(X[:, pos] > 0, axis=1) & np.all(np.isfinite(X), axis=1)
    return X[keep]


def sample_feasible(p: Problem, rng: np.random.Generator, n: int, backend: str | None = None) -> SampleSet:
    """Up to ``n`` feasible points, spending at most ``10 * n`` raw draws."""
    if n < 1:
        raise ValueError("sample count must be at least 1")
    budget = 10 * n
    attempted = 0
    chunks = []
    have = 0
    batch = n
    while have < n and attempted < budget:
        size = min(batch, budget - attempted)
        got = _feasible_batch(p, rng, size, backend)
        attempted += size
        chunks.append(got)
        have += got.shape[0]
        # grow the batch when acceptance is poor
        rate = max(have / attempted, 0.05)
        batch = int(math.ceil((n - have) / rate))
    X = np.concatenate(chunks)[:n] if chunks else np.empty((0, len(p.variables)))
    return SampleSet(p.variables, X, attempted, exhausted=X.shape[0] == 0)


def check_problem(p: Problem, rng: np.random.Generator, n: int = 1000, tol: float = 1e-9,
                  backend: str | None = None, keep: int = 20) -> SampleReport:
    """Evaluate both sides on feasible samples and report violations.

    A point violates the statement when lhs < rhs - tol*|rhs| - 1e-12.
    Points where either side faults or overflows, even in an intermediate,
    are counted as domain faults and excluded.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    S = sample_feasible(p, rng, n, backend)
    report = SampleReport(p.id, S.attempted, len(S), exhausted=S.exhausted)
    if not len(S):
        return report
    with np.errstate(all="ignore"):
        L = evaluate(p.lhs, p.variables, S.X, backend, strict=True)
        R = evaluate(p.rhs, p.variables, S.X, backend, strict=True)
        finite = np.isfinite(L) & np.isfinite(R)
        report.domain_faults = int((~finite).sum())
        bad = finite & (L < R - tol * np.abs(R) - 1e-12)
        tag_bad = finite & (R <= 0) if p.rhs_positive else np.zeros_like(finite)
    for idx in np.flatnonzero(bad)[:keep]:
        report.violations.append(Violation(dict(zip(p.variables, S.X[idx].tolist())),
                                           float(L[idx]), float(R[idx]), float(L[idx] - R[idx])))
    for idx in np.flatnonzero(tag_bad)[:keep]:
        report.tag_violations.append(Violation(dict(zip(p.variables, S.X[idx].tolist())),
                                               float(L[idx]), float(R[idx]), float(R[idx])))
    report.n_violations = int(bad.sum())
    report.n_tag_violations = int(tag_bad.sum())
    return report


def check_corpus(problems: Sequence[Problem], seed: int, n: int = 1000, tol: float = 1e-9,
                 backend: str | None = None) -> list[SampleReport]:
    """Each problem gets its own stream derived from ``seed`` and its position."""
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(problems))
    return [check_problem(p, np.random.default_rng(ss), n, tol, backend)
            for p, ss in zip(problems, children)]

