"""Rule calculus: duplication variants, compositions, substitutions and
monotone wrappers, each guarded so that a valid input yields a valid output.

All rules are pure.  Randomness (weights, the variable picked by ``*_random``)
comes from an explicit ``numpy.random.Generator`` and is recorded in the
provenance entry so an output can be rebuilt from its trace.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .expr import (Expr, VarId, add, div, exp, free_vars, log, maximum, minimum, mul, pown,
                   product_of, sqrt, sub, substitute, sum_of, var)
from .problem import Condition, Problem, ProvenanceEntry

FAMILIES = ("composition", "variable-level", "problem-level", "typeI", "typeII")


class RuleInapplicable(ValueError):
    """A guard rejected the input; ``guard`` names which one."""

    def __init__(self, rule: str, guard: str, detail: str = ""):
        self.rule = rule
        self.guard = guard
        msg = f"{rule}: {guard} guard failed"
        super().__init__(f"{msg} ({detail})" if detail else msg)


@dataclass(frozen=True)
class TransformRule:
    name: str
    family: str
    arity: int
    requires_positive_rhs: bool = False
    requires_basic_only: bool = False
    variant: str | None = None
    params: tuple[tuple[str, object], ...] = ()

    @property
    def slug(self) -> str:
        return self.name.lower().replace(" ", "_")

    def with_params(self, **params) -> "TransformRule":
        return replace(self, params=tuple(sorted(params.items())))

    def param(self, key: str, default=None):
        return dict(self.params).get(key, default)


@dataclass(frozen=True)
class RuleOutcome:
    problem: Problem
    trace: ProvenanceEntry


# ------------------------------------------------------------- rule tables

_COMPOSE_NAMES = ("Direct Addition", "Weighted Sum", "Maxima", "Minima")
COMPOSITION_RULES: tuple[TransformRule, ...] = (
    tuple(TransformRule(n, "composition", 2) for n in _COMPOSE_NAMES)
    + tuple(TransformRule(n, "composition", 2, requires_positive_rhs=True, variant="positive")
            for n in _COMPOSE_NAMES + ("Multiplication", "Division", "Reciprocal"))
)

_SUBST_KINDS = ("sqrt", "sq", "cube", "reciprocal", "exp", "log")
VAR_RULES_ANY: tuple[TransformRule, ...] = (
    TransformRule("shift", "variable-level", 1),
    TransformRule("rep", "variable-level", 1),
) + tuple(TransformRule(f"{k}_{mode}", "variable-level", 1)
          for k in _SUBST_KINDS for mode in ("all", "random"))
VAR_RULES_BASIC: tuple[TransformRule, ...] = tuple(
    TransformRule(n, "variable-level", 1, requires_basic_only=True)
    for n in ("cyc_add", "cyc_mul", "cyc_div", "cyc_div_add"))
VAR_RULES = VAR_RULES_ANY + VAR_RULES_BASIC

STMT_RULES: tuple[TransformRule, ...] = (
    TransformRule("exp", "problem-level", 1),
    TransformRule("cube", "problem-level", 1),
    TransformRule("sqrt", "problem-level", 1, requires_positive_rhs=True),
    TransformRule("sq", "problem-level", 1, requires_positive_rhs=True),
    TransformRule("log", "problem-level", 1, requires_positive_rhs=True),
)

ALL_RULES = COMPOSITION_RULES + VAR_RULES + STMT_RULES


def rule_by_name(name: str, variant: str | None = None, family: str | None = None) -> TransformRule:
    """Look a rule up by its table name.

    Four composition names exist twice; without ``variant`` the unrestricted
    row is returned.
    """
    for r in ALL_RULES:
        if r.name == name and (family is None or r.family == family) \
                and (variant is None or r.variant == variant):
            return r
    raise KeyError(f"unknown rule {name!r}" + (f" (variant {variant})" if variant else ""))


# ------------------------------------------------------------- fresh names

_ROTATION = {"x": "a", "a": "u", "y": "b", "b": "v", "z": "c", "c": "w"}


class FreshNamer:
    """Hands out variables that collide with nothing seen so far.

    Bases follow the rotation x -> a -> u, y -> b -> v, z -> c -> w; once a
    rotation is exhausted, indexed copies (base₁, base₂, ...) are used.
    """

    def __init__(self, taken: Iterable[VarId] = ()):
        self._vars: set[VarId] = set()
        self._names: set[str] = set()
        for v in taken:
            self.reserve(v)

    def reserve(self, v: VarId) -> None:
        self._vars.add(v)
        self._names.add(v.render())
        self._names.add(v.render(ascii_only=True))

    def is_free(self, v: VarId) -> bool:
        return (v not in self._vars and v.render() not in self._names
                and v.render(ascii_only=True) not in self._names)

    def fresh(self, like: VarId) -> VarId:
        base = like.base
        seen = {base}
        while base in _ROTATION and _ROTATION[base] not in seen:
            base = _ROTATION[base]
            seen.add(base)
            cand = VarId(base, 0)
            if self.is_free(cand):
                self.reserve(cand)
                return cand
        k = max(like.idx, 0) + 1
        while True:
            cand = VarId(like.base, k)
            if self.is_free(cand):
                self.reserve(cand)
                return cand
            k += 1


def _rename_problem(p: Problem, mapping: dict[VarId, VarId]) -> Problem:
    if not mapping:
        return p
    sub_map = {old: var(new) for old, new in mapping.items()}
    go = lambda e: substitute(e, sub_map)  # noqa: E731
    return replace(
        p,
        variables=tuple(mapping.get(v, v) for v in p.variables),
        conditions=tuple(c.map(go) for c in p.conditions),
        lhs=go(p.lhs), rhs=go(p.rhs),
        unsigned=frozenset(mapping.get(v, v) for v in p.unsigned),
    )


def fresh_copy(p: Problem, namer: FreshNamer | None = None) -> Problem:
    """``p`` with every variable replaced by a fresh one."""
    namer = namer or FreshNamer()
    for v in p.variables:
        namer.reserve(v)
    return _rename_problem(p, {v: namer.fresh(v) for v in p.variables})


def rename(p: Problem, mapping: dict[str, str]) -> Problem:
    """Rename variables by base name, e.g. ``{'x': 'a'}``."""
    m = {v: VarId(mapping[v.base], v.idx) for v in p.variables if v.base in mapping}
    return _rename_problem(p, m)


# ------------------------------------------------------------- helpers

def _merge_provenance(parents: Sequence[Problem], entry: ProvenanceEntry) -> tuple[ProvenanceEntry, ...]:
    out: list[ProvenanceEntry] = []
    seen = set()
    for p in parents:
        for e in p.provenance:
            if e not in seen:
                seen.add(e)
                out.append(e)
    out.append(entry)
    return tuple(out)


def _used_in_order(variables: Iterable[VarId], lhs: Expr, rhs: Expr,
                   conditions: Sequence[Condition]) -> tuple[VarId, ...]:
    used = free_vars(lhs) | free_vars(rhs)
    for c in conditions:
        used |= c.free_vars()
    out, seen = [], set()
    for v in variables:
        if v in used and v not in seen:
            seen.add(v)
            out.append(v)
    return tuple(out)


def _finish(parents: Sequence[Problem], rule: TransformRule, *, variables, conditions, lhs, rhs,
            rhs_positive: bool, unsigned: frozenset, new_id: str | None,
            params: dict | None = None, family: str | None = None, name: str | None = None,
            variant: str | None = None) -> RuleOutcome:
    name = name or rule.name
    family = family or rule.family
    if new_id is None:
        slug = name.lower().replace(" ", "_")
        new_id = "_".join(p.id for p in parents) + "_" + slug
    variables = _used_in_order(variables, lhs, rhs, conditions)
    entry = ProvenanceEntry(rule=name, family=family, parents=tuple(p.id for p in parents),
                            child=new_id, variant=variant if variant is not None else rule.variant,
                            params=tuple(sorted((params or {}).items())))
    child = Problem(id=new_id, variables=variables, lhs=lhs, rhs=rhs, conditions=tuple(conditions),
                    rhs_positive=rhs_positive, provenance=_merge_provenance(parents, entry),
                    category="generated", unsigned=frozenset(unsigned) & frozenset(variables))
    return RuleOutcome(child, entry)


def feasible_pair(p1: Problem, p2: Problem) -> bool:
    """Composition guard: one side unconditioned, or variables disjoint."""
    if not p1.conditions or not p2.conditions:
        return True
    return not (p1.used_vars() & p2.used_vars())


# ------------------------------------------------------------- lifting

def lift(p1: Problem, p2: Problem, namer: FreshNamer | None = None) -> tuple[Problem, Problem]:
    """Put both problems on one variable list.

    When both carry conditions over shared variables, the shared variables of
    ``p2`` are renamed fresh so the two feasible regions stay independent.
    """
    q2 = p2
    if p1.conditions and p2.conditions:
        clash = [v for v in p2.variables if v in set(p1.variables)]
        if clash:
            namer = namer or FreshNamer()
            for v in p1.variables + p2.variables:
                namer.reserve(v)
            q2 = _rename_problem(p2, {v: namer.fresh(v) for v in clash})
    union = list(p1.variables) + [v for v in q2.variables if v not in set(p1.variables)]
    shared = set(p1.variables) & set(q2.variables)
    unsigned = frozenset(
        v for v in union
        if (v in p1.unsigned and v in q2.unsigned)
        or (v not in shared and (v in p1.unsigned or v in q2.unsigned)))
    return (replace(p1, variables=tuple(union), unsigned=unsigned),
            replace(q2, variables=tuple(union), unsigned=unsigned))


# ------------------------------------------------------------- composition

def _combine(p1: Problem, p2: Problem, rule: TransformRule, params: dict) -> tuple[Expr, Expr]:
    f1, g1, f2, g2 = p1.lhs, p1.rhs, p2.lhs, p2.rhs
    name = rule.name
    if name == "Direct Addition":
        return sum_of(f1, f2), sum_of(g1, g2)
    if name == "Weighted Sum":
        mu, lam = params["mu"], params["lam"]
        return add(mul(mu, f1), mul(lam, f2)), add(mul(mu, g1), mul(lam, g2))
    if name == "Maxima":
        return maximum(f1, f2), maximum(g1, g2)
    if name == "Minima":
        return minimum(f1, f2), minimum(g1, g2)
    if name == "Multiplication":
        return product_of(f1, f2), product_of(g1, g2)
    if name == "Division":
        return div(f1, g2), div(g1, f2)
    if name == "Reciprocal":
        return add(div(1, g1), div(1, g2)), add(div(1, f1), div(1, f2))
    raise KeyError(name)


def _weights(rule: TransformRule, rng, weight_range: tuple[int, int]) -> dict:
    if rule.name != "Weighted Sum":
        return {}
    mu, lam = rule.param("mu"), rule.param("lam")
    if mu is None or lam is None:
        if rng is None:
            raise ValueError("Weighted Sum needs an rng or explicit mu/lam")
        lo, hi = weight_range
        mu, lam = (int(w) for w in rng.integers(lo, hi + 1, size=2))
    if mu <= 0 or lam <= 0:
        raise ValueError("Weighted Sum weights must be positive")
    return {"mu": mu, "lam": lam}


def compose(p1: Problem, p2: Problem, rule: TransformRule, rng=None, *, new_id: str | None = None,
            weight_range: tuple[int, int] = (1, 5)) -> RuleOutcome:
    """Apply a two-problem rule.  Inputs are expected to be lifted already."""
    if rule.family != "composition":
        raise ValueError(f"{rule.name} is not a composition rule")
    if p1.id == p2.id:
        raise RuleInapplicable(rule.name, "distinct-inputs", "self-composition needs a fresh copy")
    if not feasible_pair(p1, p2):
        raise RuleInapplicable(rule.name, "feasibility",
                               "both inputs carry conditions over shared variables")
    both = p1.rhs_positive and p2.rhs_positive
    if rule.requires_positive_rhs and not both:
        raise RuleInapplicable(rule.name, "positivity", "needs both right-hand sides tagged positive")
    if both and not rule.requires_positive_rhs:
        rule = rule_by_name(rule.name, variant="positive").with_params(**dict(rule.params))
    return _compose_unchecked(p1, p2, rule, rng, new_id=new_id, weight_range=weight_range)


def _compose_unchecked(p1, p2, rule, rng, *, new_id, weight_range=(1, 5), name=None, family=None,
                       variant=None) -> RuleOutcome:
    params = _weights(rule, rng, weight_range)
    lhs, rhs = _combine(p1, p2, rule, params)
    variables = list(p1.variables) + [v for v in p2.variables if v not in set(p1.variables)]
    shared = set(p1.variables) & set(p2.variables)
    unsigned = frozenset(v for v in variables
                         if (v in p1.unsigned and v in p2.unsigned)
                         or (v not in shared and (v in p1.unsigned or v in p2.unsigned)))
    return _finish((p1, p2), rule, variables=variables, conditions=p1.conditions + p2.conditions,
                   lhs=lhs, rhs=rhs, rhs_positive=p1.rhs_positive and p2.rhs_positive,
                   unsigned=unsigned, new_id=new_id, params=params, name=name, family=family,
                   variant=variant)


# ------------------------------------------------------------- variable-level

_SUBST: dict[str, Callable[[Expr], Expr]] = {
    "sqrt": sqrt,
    "sq": lambda x: pown(x, 2),
    "cube": lambda x: pown(x, 3),
    "reciprocal": lambda x: div(1, x),
    "exp": lambda x: sub(exp(x), 1),
    "log": lambda x: log(add(1, x)),
}

_CYCLIC: dict[str, Callable[[Expr, Expr], Expr]] = {
    "cyc_add": lambda a, b: add(a, b),
    "cyc_mul": lambda a, b: mul(a, b),
    "cyc_div": lambda a, b: div(a, b),
    "cyc_div_add": lambda a, b: div(a, add(a, b)),
}


def var_rule_guard(p: Problem, rule: TransformRule) -> str | None:
    """Name of the first failing guard, or None when the rule applies."""
    if rule.requires_basic_only and p.conditions:
        return "basic-only"
    if rule.name not in ("shift", "rep") and not p.all_positive:
        return "positive-variables"
    if rule.name in _CYCLIC and len(p.variables) < 2:
        return "arity"
    return None


def _next_index(v: VarId, step: int, namer: FreshNamer) -> VarId:
    if v.idx > 0:
        cand = VarId(v.base, v.idx + step)
        if namer.is_free(cand):
            namer.reserve(cand)
            return cand
    return namer.fresh(v)


def apply_var_rule(p: Problem, rule: TransformRule, rng=None, *, new_id: str | None = None,
                   family: str | None = None) -> RuleOutcome:
    if rule.family != "variable-level":
        raise ValueError(f"{rule.name} is not a variable-level rule")
    failed = var_rule_guard(p, rule)
    if failed is not None:
        raise RuleInapplicable(rule.name, failed)
    xs = p.variables
    m = len(xs)
    params: dict = {}
    variables = xs
    if rule.name in ("shift", "rep"):
        namer = FreshNamer(xs)
        if rule.name == "shift":
            targets = list(xs[1:]) + [_next_index(xs[-1], 1, namer)]
        else:
            targets = [_next_index(v, m, namer) for v in xs]
        mapping = {v: var(t) for v, t in zip(xs, targets)}
        variables = tuple(targets)
    elif rule.name in _CYCLIC:
        f = _CYCLIC[rule.name]
        mapping = {xs[i]: f(var(xs[i]), var(xs[(i + 1) % m])) for i in range(m)}
    else:
        kind, mode = rule.name.rsplit("_", 1)
        f = _SUBST[kind]
        if mode == "all":
            mapping = {v: f(var(v)) for v in xs}
        else:
            i = rule.param("index")
            if i is None:
                if rng is None:
                    raise ValueError(f"{rule.name} needs an rng or an explicit index")
                i = int(rng.integers(m)) + 1
            if not 1 <= i <= m:
                raise ValueError(f"index {i} out of range for {m} variables")
            params["index"] = i
            mapping = {xs[i - 1]: f(var(xs[i - 1]))}
    go = lambda e: substitute(e, mapping)  # noqa: E731
    unsigned = p.unsigned
    if rule.name in ("shift", "rep"):
        unsigned = frozenset(mapping[v].args[0] for v in p.unsigned)
    return _finish((p,), rule, variables=variables, conditions=[c.map(go) for c in p.conditions],
                   lhs=go(p.lhs), rhs=go(p.rhs), rhs_positive=p.rhs_positive, unsigned=unsigned,
                   new_id=new_id, params=params, family=family)


# ------------------------------------------------------------- problem-level

_WRAP: dict[str, Callable[[Expr], Expr]] = {
    "exp": exp,
    "cube": lambda e: pown(e, 3),
    "sqrt": sqrt,
    "sq": lambda e: pown(e, 2),
    "log": log,
}


def apply_stmt_rule(p: Problem, rule: TransformRule, *, new_id: str | None = None) -> RuleOutcome:
    if rule.family != "problem-level":
        raise ValueError(f"{rule.name} is not a problem-level rule")
    if rule.requires_positive_rhs and not p.rhs_positive:
        raise RuleInapplicable(rule.name, "positivity", "right-hand side is not tagged positive")
    h = _WRAP[rule.name]
    tag = {"exp": True, "sqrt": True, "sq": True, "cube": p.rhs_positive, "log": False}[rule.name]
    return _finish((p,), rule, variables=p.variables, conditions=p.conditions, lhs=h(p.lhs),
                   rhs=h(p.rhs), rhs_positive=tag, unsigned=p.unsigned, new_id=new_id)


# ------------------------------------------------------------- variants

def type1_variant(seed: Problem, namer: FreshNamer | None = None, *, new_id: str | None = None) -> Problem:
    """Duplicate ``seed`` on fresh variables and combine the two copies.

    A positive right-hand side allows multiplying the copies; otherwise they
    are added.
    """
    namer = namer or FreshNamer(seed.variables)
    copy = fresh_copy(seed, namer)
    copy = replace(copy, id=seed.id + "'", provenance=())
    if seed.rhs_positive:
        rule, variant = rule_by_name("Multiplication", variant="positive"), "multiply"
    else:
        rule, variant = rule_by_name("Direct Addition"), "add"
    out = _compose_unchecked(seed, copy, rule, None, new_id=new_id or f"{seed.id}_type_i",
                             name="Type I", family="typeI", variant=variant)
    # the copy is not a corpus member; record the seed as the only parent
    entry = replace(out.trace, parents=(seed.id,))
    return replace(out.problem, provenance=seed.provenance + (entry,))


def type2_variant(seed: Problem, subst_kind: str, rng=None, *, new_id: str | None = None) -> Problem:
    rule = rule_by_name(subst_kind, family="variable-level")
    return apply_var_rule(seed, rule, rng, new_id=new_id, family="typeII").problem


# ------------------------------------------------------------- enumeration

def applicable_rules(p1: Problem, p2: Problem | None = None) -> list[TransformRule]:
    """Rules whose guards pass, in table order."""
    if p2 is not None:
        if p1.id == p2.id or not feasible_pair(p1, p2):
            return []
        both = p1.rhs_positive and p2.rhs_positive
        return [r for r in COMPOSITION_RULES if both or not r.requires_positive_rhs]
    out = [r for r in VAR_RULES if var_rule_guard(p1, r) is None]
    out += [r for r in STMT_RULES if p1.rhs_positive or not r.requires_positive_rhs]
    return out


def apply_rule(rule: TransformRule, parents: Sequence[Problem], rng=None, *, new_id: str | None = None,
               weight_range: tuple[int, int] = (1, 5)) -> RuleOutcome:
    """Dispatch on the rule family."""
    if rule.family == "composition":
        p1, p2 = parents
        return compose(p1, p2, rule, rng, new_id=new_id, weight_range=weight_range)
    (p,) = parents
    if rule.family == "variable-level":
        return apply_var_rule(p, rule, rng, new_id=new_id)
    if rule.family == "problem-level":
        return apply_stmt_rule(p, rule, new_id=new_id)
    raise ValueError(f"cannot dispatch family {rule.family}")


def default_rng(seed: int | None = None) -> np.random.Generator:
    return np.random.default_rng(seed)
