"""pass@k aggregation, resampling dispersion and report tables."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .harness import EvalRecord
from .problem import Problem

ESTIMATOR = "unbiased combinatorial: 1 - C(n-c, k) / C(n, k) per problem, mean over problems"
DISPERSION = "subset bootstrap: k of n attempts per problem without replacement, std (ddof=0) of corpus means"
GROUPS = ("Seed", "Type I", "Type II", "Mix")

_SUB = str.maketrans("0123456789.-", "₀₁₂₃₄₅₆₇₈₉.₋")


def pass_at_k_single(n: int, c: int, k: int) -> float:
    if not 0 <= c <= n:
        raise ValueError(f"successes {c} outside 0..{n}")
    if k < 1 or k > n:
        raise ValueError(f"budget {k} outside 1..{n}")
    if n - c < k:
        return 1.0
    return 1.0 - math.comb(n - c, k) / math.comb(n, k)


def tally(records: Iterable[EvalRecord]) -> dict[str, tuple[int, int]]:
    """problem id -> (attempts, successes); duplicate attempt keys count once."""
    seen: dict[tuple[str, int], bool] = {}
    for r in records:
        seen[r.key] = seen.get(r.key, False) or r.compiled
    out: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for (pid, _), ok in seen.items():
        out[pid][0] += 1
        out[pid][1] += int(ok)
    return {pid: (n, c) for pid, (n, c) in sorted(out.items())}


@dataclass
class PassAtN:
    k: int
    estimates: dict[str, float]
    n: dict[str, int]
    c: dict[str, int]
    std: float | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.estimates.values()))) if self.estimates else 0.0

    def to_record(self) -> dict:
        return {"k": self.k, "mean": self.mean, "std": self.std, "problems": len(self.estimates),
                "per_problem": {p: {"n": self.n[p], "c": self.c[p], "estimate": e}
                                for p, e in self.estimates.items()}}


def _check_budget(counts: Mapping[str, tuple[int, int]], k: int) -> None:
    for pid, (n, _) in counts.items():
        if n < k:
            raise ValueError(f"problem {pid} has {n} attempt(s), fewer than k={k}")


def pass_at_k(records: Iterable[EvalRecord], k: int) -> PassAtN:
    counts = tally(records)
    _check_budget(counts, k)
    return PassAtN(k, {p: pass_at_k_single(n, c, k) for p, (n, c) in counts.items()},
                   {p: n for p, (n, _) in counts.items()}, {p: c for p, (_, c) in counts.items()})


def dispersion(records: Iterable[EvalRecord], k: int, resamples: int = 100, seed: int = 0) -> float:
    """Std of the corpus solve rate when each problem keeps k random attempts."""
    if resamples < 2:
        raise ValueError("need at least 2 resamples")
    counts = tally(records)
    if not counts:
        return 0.0
    _check_budget(counts, k)
    n = np.array([v[0] for v in counts.values()])
    c = np.array([v[1] for v in counts.values()])
    rng = np.random.default_rng(seed)
    # successes among k draws without replacement is hypergeometric
    hits = rng.hypergeometric(c, n - c, k, size=(resamples, len(n)))
    means = (hits > 0).mean(axis=1)
    return float(means.std(ddof=0))


def score(records: Iterable[EvalRecord], k: int, resamples: int = 100, seed: int = 0) -> PassAtN:
    records = list(records)
    res = pass_at_k(records, k)
    res.std = dispersion(records, k, resamples, seed) if res.estimates else 0.0
    return res


# ------------------------------------------------------------------ tables

def corpus_group(p: Problem) -> str:
    if not p.provenance:
        return "Seed"
    families = {e.family for e in p.provenance}
    if families == {"typeI"}:
        return "Type I"
    if families == {"typeII"}:
        return "Type II"
    return "Mix"


@dataclass
class Cell:
    corpus: str
    k: int
    value: float       # percent
    std: float         # percent
    problems: int

    def to_record(self) -> dict:
        return {"corpus": self.corpus, "k": self.k, "value": round(self.value, 6),
                "std": round(self.std, 6), "problems": self.problems}


def format_cell(value: float, std: float) -> str:
    return f"{value:.1f}" + f"{std:.1f}".translate(_SUB)


def score_table(by_corpus: Mapping[str, Sequence[EvalRecord]], budgets: Sequence[int],
                resamples: int = 100, seed: int = 0) -> list[Cell]:
    """Row-major cells: corpora in the given order, budgets ascending."""
    cells = []
    for name, recs in by_corpus.items():
        for k in sorted(set(budgets)):
            res = score(recs, k, resamples, seed)
            cells.append(Cell(name, k, 100.0 * res.mean, 100.0 * (res.std or 0.0), len(res.estimates)))
    return cells


def render_table(cells: Sequence[Cell]) -> str:
    if not cells:
        return ""
    rows = list(dict.fromkeys(c.corpus for c in cells))
    cols = sorted({c.k for c in cells})
    lookup = {(c.corpus, c.k): format_cell(c.value, c.std) for c in cells}
    header = ["corpus"] + [f"pass@{k}" for k in cols]
    body = [[r] + [lookup.get((r, k), "-") for k in cols] for r in rows]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]

    def fmt(line):
        return "  ".join(s.ljust(w) if i == 0 else s.rjust(w)
                         for i, (s, w) in enumerate(zip(line, widths))).rstrip()
    return "\n".join([fmt(header)] + [fmt(line) for line in body]) + "\n"


def report(cells: Sequence[Cell], meta: Mapping | None = None, resamples: int = 100, seed: int = 0) -> dict:
    out = {"estimator": ESTIMATOR, "dispersion": DISPERSION, "resamples": resamples, "rng_seed": seed,
           "cells": [c.to_record() for c in cells]}
    if meta:
        out.update(meta)
    return out
