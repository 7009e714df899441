"""Seeded corpus construction from a seed set.

Everything here is a pure function of its inputs and the integer seed: the
same call twice gives identical corpora.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .problem import Problem, ProvenanceEntry, UnrepresentableRecord, iter_records, parse_problem
from .prompts import PromptTask
from .transforms import (VAR_RULES_ANY, FreshNamer, RuleInapplicable, TransformRule, applicable_rules,
                         apply_rule, lift, rule_by_name, type1_variant, type2_variant)
from .lean import render_statement

PRESETS = {
    "composition-only": {"families": ("composition",), "depth": 1},
    "all": {"families": ("composition", "variable-level", "problem-level"), "depth": 2},
}


class GenerationExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    seed: int
    count: int = 100
    families: tuple[str, ...] = ("composition",)
    depth: int = 1
    weight_range: tuple[int, int] = (1, 5)
    dedup: bool = True
    preset: str | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        lo, hi = self.weight_range
        if not 1 <= lo <= hi:
            raise ValueError("weight range must satisfy 1 <= lo <= hi")
        unknown = set(self.families) - {"composition", "variable-level", "problem-level"}
        if unknown or not self.families:
            raise ValueError(f"bad rule families {sorted(unknown) or '(none)'}")

    @classmethod
    def from_preset(cls, name: str, seed: int, count: int = 100, **overrides) -> "GenConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        kw = dict(PRESETS[name])
        kw.update(overrides)
        kw["families"] = tuple(kw["families"])
        return cls(seed=seed, count=count, preset=name, **kw)

    def metadata(self) -> dict:
        return {"seed": self.seed, "families": list(self.families), "count": self.count,
                "depth": self.depth, "weights": list(self.weight_range), "dedup": self.dedup,
                "preset": self.preset, "sampling": "uniform", "version": __version__}


@dataclass(frozen=True)
class SeedSplit:
    train: tuple[str, ...]
    heldout: tuple[str, ...]

    def __post_init__(self):
        overlap = set(self.train) & set(self.heldout)
        if overlap:
            raise ValueError(f"train and held-out overlap: {sorted(overlap)}")

    @classmethod
    def by_category(cls, seeds: Sequence[Problem], train_category: str = "amgm") -> "SeedSplit":
        return cls(tuple(p.id for p in seeds if p.category == train_category),
                   tuple(p.id for p in seeds if p.category != train_category))


@dataclass
class Rejection:
    id: str
    reason: str
    detail: str = ""


# ------------------------------------------------------------- eligibility

def filter_eligible(seeds: Iterable[Problem]) -> tuple[list[Problem], list[Rejection]]:
    """Keep seeds whose variables all carry the positivity assumption."""
    kept, rejected = [], []
    for p in seeds:
        if p.all_positive:
            kept.append(p)
        else:
            names = ", ".join(sorted(str(v) for v in p.unsigned))
            rejected.append(Rejection(p.id, "basic-assumption", f"no positivity for {names}"))
    return kept, rejected


def filter_eligible_records(records: Iterable[dict]) -> tuple[list[Problem], list[Rejection]]:
    """Like ``filter_eligible`` but starting from raw records, so that
    integer-parameter and n-variable families are reported instead of raised."""
    problems, rejected = [], []
    for rec in records:
        try:
            problems.append(parse_problem(rec))
        except UnrepresentableRecord as exc:
            rejected.append(Rejection(exc.record_id or "?", exc.reason, str(exc)))
    kept, more = filter_eligible(problems)
    return kept, rejected + more


def load_records(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [rec for _, rec in iter_records(fh)]


# ------------------------------------------------------------- ids

def _slug(name: str) -> str:
    return name.lower().replace(" ", "_")


def generated_id(root: str, slug: str, k: int, category: str = "generated") -> str:
    prefix = "" if root.startswith(category + "_") else category + "_"
    return f"{prefix}{root}_{slug}_{k}"


def _relabel(p: Problem, mapping: dict[str, str]) -> Problem:
    def fix(e: ProvenanceEntry) -> ProvenanceEntry:
        return replace(e, parents=tuple(mapping.get(x, x) for x in e.parents),
                       child=mapping.get(e.child, e.child))
    return replace(p, id=mapping.get(p.id, p.id), provenance=tuple(fix(e) for e in p.provenance))


# ------------------------------------------------------------- Type I / II

def type2_pool(p: Problem) -> list[TransformRule]:
    if p.all_positive:
        return list(VAR_RULES_ANY)
    return [rule_by_name("shift"), rule_by_name("rep")]


def expand_simp(seeds: Sequence[Problem], rng: np.random.Generator) -> list[Problem]:
    """One Type I and one Type II variant per seed, in seed order."""
    out = []
    for seed in seeds:
        t1 = type1_variant(seed, FreshNamer(seed.variables),
                           new_id=generated_id(seed.id, "type_i", 1, seed.category))
        pool = type2_pool(seed)
        rule = pool[int(rng.integers(len(pool)))]
        t2 = type2_variant(seed, rule.name, rng,
                           new_id=generated_id(seed.id, "type_ii_" + rule.slug, 1, seed.category))
        out += [t1, t2]
    return out


# ------------------------------------------------------------- Ineq-Mix

def _unique_by_name(rules: Sequence[TransformRule]) -> list[TransformRule]:
    seen, out = set(), []
    for r in rules:
        if r.name not in seen:
            seen.add(r.name)
            out.append(r)
    return out


def _step_options(current: Problem, partner: Problem | None, families) -> list[tuple]:
    opts: list[tuple] = []
    if current is not None and ("variable-level" in families or "problem-level" in families):
        for r in applicable_rules(current):
            if r.family in families:
                opts.append((r, (current,)))
    if partner is not None and "composition" in families:
        l1, l2 = lift(current, partner, FreshNamer())
        # the two rows sharing a name build the same statement; count it once
        for r in _unique_by_name(applicable_rules(l1, l2)):
            opts.append((r, (l1, l2)))
    return opts


def _build_one(seeds: Sequence[Problem], cfg: GenConfig, rng: np.random.Generator) -> Problem | None:
    depth = int(rng.integers(1, cfg.depth + 1))
    current = seeds[int(rng.integers(len(seeds)))]
    for step in range(depth):
        partner = None
        if "composition" in cfg.families:
            others = [s for s in seeds if s.id != current.id]
            if others:
                partner = others[int(rng.integers(len(others)))]
        opts = _step_options(current, partner, cfg.families)
        if not opts:
            return None
        rule, parents = opts[int(rng.integers(len(opts)))]
        tid = f"__step{step}"
        try:
            current = apply_rule(rule, parents, rng, new_id=tid, weight_range=cfg.weight_range).problem
        except RuleInapplicable:
            return None
    return current


def generate_mix(seeds: Sequence[Problem], cfg: GenConfig) -> list[Problem]:
    """``cfg.count`` distinct problems built by random rule application."""
    if not seeds:
        raise GenerationExhausted("no eligible seeds")
    rng = np.random.default_rng(cfg.seed)
    seeds = list(seeds)
    seen = {p.dedup_key() for p in seeds} if cfg.dedup else set()
    out: list[Problem] = []
    budget = 10 * cfg.count
    attempts = 0
    while len(out) < cfg.count:
        if attempts >= budget:
            raise GenerationExhausted(
                f"built {len(out)} of {cfg.count} problems within {budget} attempts")
        attempts += 1
        p = _build_one(seeds, cfg, rng)
        if p is None:
            continue
        if cfg.dedup:
            key = p.dedup_key()
            if key in seen:
                continue
            seen.add(key)
        k = len(out) + 1
        root = p.provenance[0].parents[0]
        final = generated_id(root, _slug(p.provenance[-1].rule), k)
        steps = [e.child for e in p.provenance if e.child.startswith("__step")]
        mapping = {s: (final if s == p.id else f"{final}_s{i}") for i, s in enumerate(steps)}
        out.append(_relabel(p, mapping))
    return out


def provenance_closed(corpus: Sequence[Problem], seeds: Sequence[Problem]) -> list[str]:
    """Parent ids that resolve nowhere: not a seed, not in the corpus, and not
    an intermediate produced earlier in the same trace."""
    known = {p.id for p in seeds} | {p.id for p in corpus}
    missing = []
    for p in corpus:
        local = set()
        for e in p.provenance:
            for parent in e.parents:
                if parent not in known and parent not in local:
                    missing.append(f"{p.id}: {parent}")
            local.add(e.child)
    return missing


# ------------------------------------------------------------- fine-tuning data

_STAGE1_RULES = tuple(r for r in VAR_RULES_ANY if r.name not in ("shift", "rep"))


def _root_of(p: Problem) -> str:
    return p.provenance[0].parents[0] if p.provenance else p.id


def make_ft_corpus(seeds: Sequence[Problem], split: SeedSplit, cfg: GenConfig,
                   per_seed: int = 4) -> tuple[list[Problem], list[PromptTask]]:
    """Two-stage pipeline: substitution variants of the training seeds, then
    random pairwise compositions of those variants.

    Each composed problem gets an in-context generation prompt carrying the
    proofs of the two seeds it descends from.
    """
    by_id = {p.id: p for p in seeds}
    train = [by_id[i] for i in split.train if i in by_id]
    if not train:
        raise ValueError("training split is empty")
    if per_seed > len(_STAGE1_RULES):
        raise ValueError(f"at most {len(_STAGE1_RULES)} distinct variants per seed")
    rng = np.random.default_rng(cfg.seed)
    stage1: list[Problem] = []
    seen = set()
    for s in train:
        picks = rng.choice(len(_STAGE1_RULES), size=per_seed, replace=False)
        for j, idx in enumerate(sorted(int(i) for i in picks), 1):
            rule = _STAGE1_RULES[idx]
            out = apply_rule(rule, (s,), rng, new_id=generated_id(s.id, rule.slug, j, s.category)).problem
            stage1.append(out)
            seen.add(out.dedup_key())

    stage2: list[Problem] = []
    tasks: list[PromptTask] = []
    budget = 10 * cfg.count
    attempts = 0
    while len(stage2) < cfg.count:
        if attempts >= budget:
            raise GenerationExhausted(f"composed {len(stage2)} of {cfg.count} within {budget} attempts")
        attempts += 1
        i, j = (int(v) for v in rng.choice(len(stage1), size=2, replace=False))
        l1, l2 = lift(stage1[i], stage1[j], FreshNamer())
        rules = _unique_by_name(applicable_rules(l1, l2))
        if not rules:
            continue
        rule = rules[int(rng.integers(len(rules)))]
        k = len(stage2) + 1
        pid = generated_id(stage1[i].id, rule.slug, k)
        p = apply_rule(rule, (l1, l2), rng, new_id=pid, weight_range=cfg.weight_range).problem
        if cfg.dedup:
            key = p.dedup_key()
            if key in seen:
                continue
            seen.add(key)
        stage2.append(p)
        proofs = tuple(by_id[_root_of(q)].proof or "" for q in (stage1[i], stage1[j]))
        tasks.append(PromptTask("icl-gen", render_statement(p).formal_statement,
                                icl_proofs=proofs, problem_id=p.id))
    return stage1 + stage2, tasks


def corpus_metadata(cfg: GenConfig, **extra) -> dict:
    meta = cfg.metadata()
    meta.update(extra)
    return json.loads(json.dumps(meta))
