"""Lean 4 rendering of problems and assembly of candidate proof files."""
from __future__ import annotations

import json
import re
import textwrap
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .expr import Expr, free_vars
from .problem import Condition, Problem

PREAMBLE = ("import Mathlib\nimport Aesop\n\nset_option maxHeartbeats 0\n\n"
            "open BigOperators Real Nat Topology Rat")
PLACEHOLDER = "sorry"

_SUB_DIGITS = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")

# Lean binding powers
_ADD, _MUL, _POW, _NEG, _ATOM = 65, 70, 75, 64, 1000


class RenderError(RuntimeError):
    pass


class ExtractionError(ValueError):
    """Model output did not contain a usable lean code block."""


@dataclass(frozen=True)
class RenderStyle:
    ascii_only: bool = False
    conjunction_hyps: bool = False   # one ``x > 0 ∧ y > 0`` hypothesis instead of one per variable


DEFAULT_STYLE = RenderStyle()


@dataclass(frozen=True)
class LeanArtifact:
    name: str
    binders: str
    goal: str
    proof: str = PLACEHOLDER
    preamble: str = PREAMBLE
    verbatim: str | None = None      # a complete file supplied by the caller

    @property
    def header(self) -> str:
        sep = " " if self.binders else ""
        return f"theorem {self.name}{sep}{self.binders} : {self.goal}"

    @property
    def formal_statement(self) -> str:
        """Theorem header ready for a prover to continue after ``by``."""
        return f"{self.header} := by\n"

    @property
    def source(self) -> str:
        if self.verbatim is not None:
            return self.verbatim if self.verbatim.endswith("\n") else self.verbatim + "\n"
        body = "\n".join("  " + ln if ln.strip() else "" for ln in self.proof.strip("\n").splitlines())
        return f"{self.preamble}\n\n{self.formal_statement}{body}\n"

    @property
    def is_placeholder(self) -> bool:
        return self.verbatim is None and self.proof.strip() == PLACEHOLDER

    def with_proof(self, proof: str) -> "LeanArtifact":
        return replace(self, proof=proof, verbatim=None)


# ------------------------------------------------------------------ names

def theorem_name(pid: str) -> str:
    name = re.sub(r"[^0-9A-Za-z_]", "_", pid)
    if not name or not (name[0].isalpha() or name[0] == "_"):
        name = "p_" + name
    return name


def _var(v, style: RenderStyle) -> str:
    return v.render(ascii_only=style.ascii_only)


def _hyp_index(i: int, style: RenderStyle) -> str:
    return f"h{i}" if style.ascii_only else "h" + str(i).translate(_SUB_DIGITS)


# ------------------------------------------------------------------ expressions

def _rat(q: Fraction, style: RenderStyle) -> str:
    real = "Real" if style.ascii_only else "ℝ"
    return f"({q.numerator}:{real})/{q.denominator}"


def _const(q: Fraction, style: RenderStyle) -> tuple[str, int]:
    if q.denominator != 1:
        return _rat(q, style), _MUL
    if q < 0:
        return str(q.numerator), _NEG
    return str(q.numerator), _ATOM


def _paren(text: str) -> str:
    return f"({text})"


def _app_arg(e: Expr, style: RenderStyle) -> str:
    text, prec = render_expr(e, style)
    simple = e.op == "var" or (e.op == "const" and prec == _ATOM)
    return text if simple else _paren(text)


def render_expr(e: Expr, style: RenderStyle = DEFAULT_STYLE) -> tuple[str, int]:
    """Lean text for ``e`` plus the binding power of its outermost operator."""
    op = e.op
    if op == "var":
        return _var(e.args[0], style), _ATOM
    if op == "const":
        return _const(e.args[0], style)
    if op == "add":
        parts = []
        for i, c in enumerate(e.args):
            t, p = render_expr(c, style)
            keep = p > _ADD or (i == 0 and c.op == "add")
            parts.append(t if keep else _paren(t))
        return " + ".join(parts), _ADD
    if op == "sub":
        (lt, lp), (rt, rp) = render_expr(e.args[0], style), render_expr(e.args[1], style)
        if not (lp > _ADD or e.args[0].op == "sub"):
            lt = _paren(lt)
        if rp <= _ADD:
            rt = _paren(rt)
        return f"{lt} - {rt}", _ADD
    if op == "mul":
        parts = []
        for i, c in enumerate(e.args):
            if c.op == "const":
                q = c.args[0]
                if i == 0:
                    parts.append(_rat(q, style) if q.denominator != 1
                                 else f"({q.numerator}:{'Real' if style.ascii_only else 'ℝ'})")
                else:
                    t, _ = _const(q, style)
                    parts.append(_paren(t))
                continue
            t, p = render_expr(c, style)
            keep = p > _MUL or (i == 0 and c.op == "mul")
            parts.append(t if keep else _paren(t))
        return " * ".join(parts), _MUL
    if op == "div":
        (lt, lp), (rt, rp) = render_expr(e.args[0], style), render_expr(e.args[1], style)
        if lp <= _MUL and not e.args[0].op == "div":
            lt = _paren(lt)
        if rp <= _MUL:
            rt = _paren(rt)
        return f"{lt} / {rt}", _MUL
    if op == "pown":
        base = e.args[0]
        t, _ = render_expr(base, style)
        if base.op != "var":
            t = _paren(t)
        return f"{t}^{e.args[1]}", _POW
    if op == "powr":
        base, q = e.args
        t, _ = render_expr(base, style)
        if base.op != "var":
            t = _paren(t)
        real = "Real" if style.ascii_only else "ℝ"
        ex = f"(({q.numerator}:{real})/{q.denominator})" if q.denominator != 1 else f"({q.numerator}:{real})"
        return f"{t} ^ {ex}", _POW
    if op in ("sqrt", "exp", "log"):
        return f"Real.{op} {_app_arg(e.args[0], style)}", _ATOM
    if op in ("min", "max"):
        return f"{op} {_app_arg(e.args[0], style)} {_app_arg(e.args[1], style)}", _ATOM
    if op == "abs":
        return f"|{render_expr(e.args[0], style)[0]}|", _ATOM
    if op == "neg":
        t, p = render_expr(e.args[0], style)
        return f"-{t if p >= _ATOM else _paren(t)}", _NEG
    raise RenderError(f"cannot render node {op}")


def render_goal(lhs: Expr, rhs: Expr, rel: str = "≥", style: RenderStyle = DEFAULT_STYLE) -> str:
    lt, _ = render_expr(lhs, style)
    rt, _ = render_expr(rhs, style)
    if not (free_vars(lhs) | free_vars(rhs)):
        # nothing else would force the real type
        lt = f"({lt} : {'Real' if style.ascii_only else 'ℝ'})"
    if style.ascii_only:
        rel = {"≥": ">=", "≤": "<=", "≠": "!="}.get(rel, rel)
    return f"{lt} {rel} {rt}"


_REL = {"eq": "=", "gt": ">", "ge": "≥"}


def _condition(c: Condition, style: RenderStyle) -> str:
    return render_goal(c.lhs, c.rhs, _REL[c.kind], style)


def render_statement(p: Problem, style: RenderStyle = DEFAULT_STYLE, proof: str = PLACEHOLDER) -> LeanArtifact:
    real = "Real" if style.ascii_only else "ℝ"
    parts = []
    if p.variables:
        parts.append(f"({' '.join(_var(v, style) for v in p.variables)} : {real})")
    pos = [v for v in p.variables if v not in p.unsigned]
    if pos:
        if style.conjunction_hyps:
            conj = " /\\ " if style.ascii_only else " ∧ "
            parts.append(f"(hpos : {conj.join(f'{_var(v, style)} > 0' for v in pos)})")
        else:
            parts.extend(f"(h{v.render(ascii_only=True)} : {_var(v, style)} > 0)" for v in pos)
    for i, c in enumerate(p.conditions):
        parts.append(f"({_hyp_index(i, style)} : {_condition(c, style)})")
    return LeanArtifact(name=theorem_name(p.id), binders=" ".join(parts),
                        goal=render_goal(p.lhs, p.rhs, "≥", style), proof=proof)


# ------------------------------------------------------------------ candidates

_FENCE = re.compile(r"```[ \t]*(?:lean4|lean)?[ \t]*\n(.*?)```", re.DOTALL)


def extract_code_block(text: str) -> str | None:
    m = _FENCE.search(text)
    return m.group(1) if m else None


def assemble_candidate(p: Problem, proof_body: str, *, require_fence: bool = False,
                       style: RenderStyle = DEFAULT_STYLE) -> LeanArtifact:
    """Full compilable file for ``p`` with ``proof_body`` in place of the placeholder.

    Model output is reduced to its first fenced code block.  A block holding
    a whole file (imports) is used verbatim; one holding its own theorem gets
    the preamble; anything else is treated as the tactic proof.
    """
    if not proof_body or not proof_body.strip():
        raise ExtractionError("empty proof body")
    block = extract_code_block(proof_body)
    if block is None:
        if require_fence or "```" in proof_body:
            raise ExtractionError("no lean code block in output")
        block = proof_body
    art = render_statement(p, style)
    if re.search(r"^\s*import\s", block, re.MULTILINE):
        return replace(art, verbatim=block)
    if re.search(r"^\s*(theorem|lemma)\s", block, re.MULTILINE):
        return replace(art, verbatim=f"{PREAMBLE}\n\n{block.strip()}\n")
    body = block.strip("\n")
    if body.lstrip().startswith("by"):
        body = body.lstrip()[2:].lstrip("\n")
    if not body.strip():
        raise ExtractionError("code block is empty")
    return art.with_proof(textwrap.dedent(body))


# ------------------------------------------------------------------ files

def emit_corpus(problems: Iterable[Problem], outdir: str | Path, style: RenderStyle = DEFAULT_STYLE,
                manifest_name: str = "manifest.jsonl") -> Path:
    """Write one .lean file per problem plus a manifest; returns the manifest path."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / manifest_name
    with open(manifest, "w", encoding="utf-8") as mf:
        for p in problems:
            art = render_statement(p, style)
            path = out / f"{art.name}.lean"
            path.write_text(art.source, encoding="utf-8")
            mf.write(json.dumps({"id": p.id, "path": path.name, "theorem": art.name},
                                ensure_ascii=False, sort_keys=True) + "\n")
    return manifest
