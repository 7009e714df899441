"""Inequality problems and the corpus JSONL format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Iterator

from .expr import Expr, ExprError, VarId, canonical_key, free_vars, from_json, parse_expr, to_json

CATEGORIES = ("amgm", "cauchy", "misc", "real", "generated")
CONDITION_KINDS = {"eq": "=", "gt": ">", "ge": "≥"}
META_KEY = "__meta__"


class ParseError(ValueError):
    """A corpus record could not be turned into a Problem."""

    def __init__(self, message: str, *, record_id: str | None = None, field: str | None = None,
                 line: int | None = None):
        self.record_id = record_id
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if record_id is not None:
            where.append(f"record {record_id!r}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class SchemaError(ParseError):
    pass


class SemanticError(ParseError):
    pass


class UnrepresentableRecord(ParseError):
    """Record describes an integer-parameterised or n-variable family."""

    def __init__(self, reason: str, message: str, **kw):
        self.reason = reason
        super().__init__(message, **kw)


@dataclass(frozen=True)
class Condition:
    kind: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise ValueError(f"unknown condition kind {self.kind!r}")

    def free_vars(self) -> frozenset[VarId]:
        return free_vars(self.lhs) | free_vars(self.rhs)

    def map(self, fn) -> "Condition":
        return Condition(self.kind, fn(self.lhs), fn(self.rhs))


@dataclass(frozen=True)
class ProvenanceEntry:
    """One rule application: the rule, its parameters, inputs and output id."""

    rule: str
    family: str
    parents: tuple[str, ...]
    child: str
    variant: str | None = None
    params: tuple[tuple[str, object], ...] = ()

    def to_record(self) -> dict:
        rec = {"rule": self.rule, "family": self.family, "parents": list(self.parents),
               "child": self.child, "params": dict(self.params)}
        if self.variant is not None:
            rec["variant"] = self.variant
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "ProvenanceEntry":
        params = rec.get("params", {}) or {}
        return cls(rule=rec["rule"], family=rec["family"], parents=tuple(rec.get("parents", ())),
                   child=rec.get("child", ""), variant=rec.get("variant"),
                   params=tuple(sorted(params.items())))


@dataclass(frozen=True)
class Problem:
    """Fixed-arity inequality ``lhs >= rhs`` over positive reals.

    Every variable carries the basic assumption ``x > 0`` unless it is listed
    in ``unsigned``; records that need real (unsigned) variables are
    representable but not eligible for composition.
    """

    id: str
    variables: tuple[VarId, ...]
    lhs: Expr
    rhs: Expr
    conditions: tuple[Condition, ...] = ()
    rhs_positive: bool = False
    provenance: tuple[ProvenanceEntry, ...] = ()
    category: str = "generated"
    unsigned: frozenset[VarId] = frozenset()
    proof: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"{self.id}: duplicate variable declaration")
        for ascii_only in (False, True):
            names = [v.render(ascii_only=ascii_only) for v in self.variables]
            if len(set(names)) != len(names):
                raise ValueError(f"{self.id}: rendered variable names collide: {names}")
        declared = set(self.variables)
        missing = self.used_vars() - declared
        if missing:
            raise ValueError(f"{self.id}: undeclared variables {sorted(map(str, missing))}")
        if not self.unsigned <= declared:
            raise ValueError(f"{self.id}: unsigned set mentions undeclared variables")

    def used_vars(self) -> frozenset[VarId]:
        out = free_vars(self.lhs) | free_vars(self.rhs)
        for c in self.conditions:
            out |= c.free_vars()
        return out

    @property
    def all_positive(self) -> bool:
        return not self.unsigned

    @property
    def positive_vars(self) -> tuple[VarId, ...]:
        return tuple(v for v in self.variables if v not in self.unsigned)

    def statement_key(self) -> tuple:
        """Structural identity of the mathematical content (ignores id/provenance)."""
        return (self.variables, self.conditions, self.lhs, self.rhs, self.unsigned)

    def dedup_key(self) -> tuple:
        conds = tuple(sorted((c.kind, canonical_key(c.lhs), canonical_key(c.rhs)) for c in self.conditions))
        return (tuple(sorted(self.variables)), conds, canonical_key(self.lhs),
                canonical_key(self.rhs), tuple(sorted(self.unsigned)))

    def same_statement(self, other: "Problem") -> bool:
        return self.statement_key() == other.statement_key()

    def with_id(self, new_id: str) -> "Problem":
        if self.provenance:
            last = replace(self.provenance[-1], child=new_id)
            return replace(self, id=new_id, provenance=self.provenance[:-1] + (last,))
        return replace(self, id=new_id)


# ------------------------------------------------------------- serialization

def _var_record(p: Problem, v: VarId) -> dict:
    rec = {"base": v.base, "idx": v.idx}
    if v in p.unsigned:
        rec["positive"] = False
    return rec


def problem_to_record(p: Problem) -> dict:
    rec = {
        "id": p.id,
        "category": p.category,
        "variables": [_var_record(p, v) for v in p.variables],
        "conditions": [{"kind": c.kind, "lhs": to_json(c.lhs), "rhs": to_json(c.rhs)}
                       for c in p.conditions],
        "lhs": to_json(p.lhs),
        "rhs": to_json(p.rhs),
        "rhs_positive": p.rhs_positive,
        "provenance": [e.to_record() for e in p.provenance],
    }
    if p.proof is not None:
        rec["proof"] = p.proof
    return rec


def serialize_problem(p: Problem) -> str:
    return json.dumps(problem_to_record(p), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _expr_field(rec: dict, key: str, rid, line) -> Expr:
    if key not in rec:
        raise SchemaError("missing expression", record_id=rid, field=key, line=line)
    try:
        return from_json(rec[key])
    except ExprError as exc:
        raise SchemaError(str(exc), record_id=rid, field=key, line=line) from None


def parse_problem(record: dict | str, *, line: int | None = None, strict: bool = True) -> Problem:
    """Build a Problem from a corpus record (dict or JSON text).

    With ``strict`` every declared variable must be used somewhere.
    """
    if isinstance(record, str):
        try:
            record = json.loads(record)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line=line) from None
    if not isinstance(record, dict):
        raise SchemaError("record must be a JSON object", line=line)
    rid = record.get("id")
    if not isinstance(rid, str) or not rid:
        raise SchemaError("missing or empty id", field="id", line=line)

    if record.get("arity", "fixed") != "fixed":
        raise UnrepresentableRecord("n-variable", "variable count is not a fixed constant",
                                    record_id=rid, field="arity", line=line)
    category = record.get("category")
    if category not in CATEGORIES:
        raise SchemaError(f"category must be one of {CATEGORIES}", record_id=rid, field="category", line=line)

    raw_vars = record.get("variables")
    if not isinstance(raw_vars, list):
        raise SchemaError("must be a list", record_id=rid, field="variables", line=line)
    variables, unsigned = [], set()
    for i, rv in enumerate(raw_vars):
        if not isinstance(rv, dict) or not isinstance(rv.get("base"), str) \
                or not isinstance(rv.get("idx", 0), int):
            raise SchemaError(f"bad entry #{i}", record_id=rid, field="variables", line=line)
        if rv.get("domain", "real") != "real":
            raise UnrepresentableRecord("integer-parameter",
                                        f"variable {rv['base']} ranges over {rv['domain']}",
                                        record_id=rid, field="variables", line=line)
        v = VarId(rv["base"], rv.get("idx", 0))
        if not v.base.isidentifier():
            raise SchemaError(f"bad identifier {v.base!r}", record_id=rid, field="variables", line=line)
        variables.append(v)
        if rv.get("positive", True) is False:
            unsigned.add(v)

    raw_conds = record.get("conditions", [])
    if not isinstance(raw_conds, list):
        raise SchemaError("must be a list", record_id=rid, field="conditions", line=line)
    conditions = []
    for i, rc in enumerate(raw_conds):
        if not isinstance(rc, dict) or rc.get("kind") not in CONDITION_KINDS:
            raise SchemaError(f"bad condition #{i}", record_id=rid, field="conditions", line=line)
        conditions.append(Condition(rc["kind"], _expr_field(rc, "lhs", rid, line),
                                    _expr_field(rc, "rhs", rid, line)))

    lhs = _expr_field(record, "lhs", rid, line)
    rhs = _expr_field(record, "rhs", rid, line)
    tag = record.get("rhs_positive", False)
    if not isinstance(tag, bool):
        raise SchemaError("must be a boolean", record_id=rid, field="rhs_positive", line=line)
    try:
        provenance = tuple(ProvenanceEntry.from_record(e) for e in record.get("provenance", []))
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError(f"bad provenance entry: {exc}", record_id=rid, field="provenance", line=line) from None
    proof = record.get("proof")
    if proof is not None and not isinstance(proof, str):
        raise SchemaError("must be a string", record_id=rid, field="proof", line=line)

    used = free_vars(lhs) | free_vars(rhs)
    for c in conditions:
        used |= c.free_vars()
    undeclared = used - set(variables)
    if undeclared:
        names = ", ".join(sorted(str(v) for v in undeclared))
        raise SemanticError(f"undeclared variable(s): {names}", record_id=rid, field="variables", line=line)
    if strict:
        unused = [str(v) for v in variables if v not in used]
        if unused:
            raise SemanticError(f"declared but unused: {', '.join(unused)}", record_id=rid,
                                field="variables", line=line)
    try:
        return Problem(id=rid, variables=tuple(variables), lhs=lhs, rhs=rhs,
                       conditions=tuple(conditions), rhs_positive=tag, provenance=provenance,
                       category=category, unsigned=frozenset(unsigned), proof=proof)
    except ValueError as exc:
        raise SemanticError(str(exc), record_id=rid, line=line) from None


def make_problem(pid: str, variables: str | Iterable[str], lhs: str, rhs: str, *,
                 conditions: Iterable[tuple[str, str, str]] = (), rhs_positive: bool = False,
                 category: str = "generated", unsigned: Iterable[str] = (), proof: str | None = None) -> Problem:
    """Convenience builder from infix strings: ``make_problem('p', 'x y', 'x+y', '2*sqrt(x*y)')``."""
    names = variables.split() if isinstance(variables, str) else list(variables)
    vs = tuple(parse_expr(n).args[0] for n in names)
    conds = tuple(Condition(kind, parse_expr(a), parse_expr(b)) for a, kind, b in conditions)
    uns = frozenset(parse_expr(n).args[0] for n in unsigned)
    return Problem(id=pid, variables=vs, lhs=parse_expr(lhs), rhs=parse_expr(rhs), conditions=conds,
                   rhs_positive=rhs_positive, category=category, unsigned=uns, proof=proof)


# --------------------------------------------------------------------- files

def iter_records(stream: IO[str]) -> Iterator[tuple[int, dict]]:
    """Yield (line number, record) pairs, skipping blank lines and the metadata header."""
    for lineno, text in enumerate(stream, start=1):
        if not text.strip():
            continue
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if isinstance(rec, dict) and META_KEY in rec:
            continue
        yield lineno, rec


def read_corpus(path: str | Path) -> list[Problem]:
    with open(path, encoding="utf-8") as fh:
        return [parse_problem(rec, line=n) for n, rec in iter_records(fh)]


def read_metadata(path: str | Path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if not first.strip():
        return None
    rec = json.loads(first)
    return rec.get(META_KEY) if isinstance(rec, dict) else None


def write_corpus(path: str | Path, problems: Iterable[Problem], meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({META_KEY: meta}, sort_keys=True, ensure_ascii=False,
                                separators=(",", ":")) + "\n")
        for p in problems:
            fh.write(serialize_problem(p) + "\n")


def bundled_seeds_path() -> Path:
    return Path(__file__).with_name("data") / "seeds.jsonl"


def load_bundled_seeds() -> list[Problem]:
    return read_corpus(bundled_seeds_path())
