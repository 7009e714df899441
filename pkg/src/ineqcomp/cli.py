"""Command line entry point: ``ineqcomp <subcommand> ...``.

Exit status: 0 success, 1 domain failure (violations, exhaustion, bad
records), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .generator import (GenConfig, GenerationExhausted, PRESETS, SeedSplit, corpus_metadata, expand_simp,
                        filter_eligible, generate_mix, make_ft_corpus)
from .harness import (CommandAdapter, ConfigError, HttpAdapter, Toolchain, read_attempts, read_records,
                      run_batch, DEFAULT_TIMEOUT)
from .lean import RenderStyle, emit_corpus, render_statement
from .oracle import check_corpus
from .problem import ParseError, bundled_seeds_path, read_corpus, write_corpus
from .prompts import TEMPLATES, PromptTask, TemplateError, prompt_metadata, render_prompt
from .scoring import GROUPS, corpus_group, render_table, report, score_table
from .transforms import default_rng

log = logging.getLogger("ineqcomp")

OK, FAILURE, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ helpers

def _seeds(path) -> list:
    return read_corpus(path or bundled_seeds_path())


def _manifest(problems, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in problems:
            fh.write(json.dumps({"id": p.id, "group": corpus_group(p),
                                 "rules": [e.rule for e in p.provenance],
                                 "parents": sorted({x for e in p.provenance for x in e.parents})},
                                ensure_ascii=False, sort_keys=True) + "\n")


def _write_outputs(args, problems, meta) -> None:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(out, problems, meta)
    _manifest(problems, Path(args.manifest) if args.manifest else out.with_suffix(".manifest.jsonl"))
    print(f"wrote {len(problems)} problems to {out}")


def _style(args) -> RenderStyle:
    return RenderStyle(ascii_only=args.ascii, conjunction_hyps=args.conjunction)


def _int_pair(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


# ------------------------------------------------------------------ commands

def cmd_expand_simp(args) -> int:
    seeds = _seeds(args.seeds)
    out = expand_simp(seeds, default_rng(args.seed))
    _write_outputs(args, out, {"command": "expand-simp", "seed": args.seed, "seeds": len(seeds),
                               "version": __version__})
    return OK


def cmd_generate_mix(args) -> int:
    seeds, rejected = filter_eligible(_seeds(args.seeds))
    for r in rejected:
        log.info("skipping seed %s: %s", r.id, r.detail)
    over = {}
    if args.families:
        fams = args.families
        over["families"] = PRESETS["all"]["families"] if fams == ["all"] else tuple(fams)
    if args.depth is not None:
        over["depth"] = args.depth
    if args.weights:
        over["weight_range"] = args.weights
    if args.no_dedup:
        over["dedup"] = False
    try:
        cfg = GenConfig.from_preset(args.preset, args.seed, args.count, **over)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = generate_mix(seeds, cfg)
    _write_outputs(args, out, corpus_metadata(cfg, command="generate-mix"))
    return OK


def cmd_make_ft_corpus(args) -> int:
    seeds, _ = filter_eligible(_seeds(args.seeds))
    split = SeedSplit.by_category(seeds, args.train_category)
    cfg = GenConfig(seed=args.seed, count=args.count)
    problems, tasks = make_ft_corpus(seeds, split, cfg, per_seed=args.per_seed)
    outdir = Path(args.out_dir)
    (outdir / "prompts").mkdir(parents=True, exist_ok=True)
    write_corpus(outdir / "corpus.jsonl", problems,
                 corpus_metadata(cfg, command="make-ft-corpus", per_seed=args.per_seed,
                                 train=list(split.train), heldout=list(split.heldout)))
    with open(outdir / "prompts.jsonl", "w", encoding="utf-8") as fh:
        for t in tasks:
            rec = prompt_metadata(t)
            rec["prompt"] = render_prompt(t)
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(problems)} problems and {len(tasks)} prompts to {outdir}")
    return OK


def cmd_emit(args) -> int:
    if args.template and args.template not in TEMPLATES:
        raise UsageError(f"unknown template {args.template!r}; choose from {', '.join(sorted(TEMPLATES))}")
    problems = read_corpus(args.corpus)
    outdir = Path(args.out_dir)
    if not problems:
        print("empty corpus, nothing written")
        return OK
    style = _style(args)
    emit_corpus(problems, outdir, style)
    if args.template:
        pdir = outdir / "prompts"
        pdir.mkdir(exist_ok=True)
        for p in problems:
            art = render_statement(p, style)
            proofs = (p.proof or "",) * 2 if args.template in ("icl", "icl-gen") else ()
            task = PromptTask(args.template, art.formal_statement, icl_proofs=proofs, problem_id=p.id)
            (pdir / f"{art.name}.txt").write_text(render_prompt(task), encoding="utf-8")
            (pdir / f"{art.name}.json").write_text(
                json.dumps(prompt_metadata(task), sort_keys=True) + "\n", encoding="utf-8")
    print(f"rendered {len(problems)} statements into {outdir}")
    return OK


def cmd_check(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.tol <= 0:
        raise UsageError("--tol must be positive")
    problems = read_corpus(args.corpus)
    reports = check_corpus(problems, args.seed, args.n, args.tol, args.backend)
    bad = [r for r in reports if not r.ok]
    sink = open(args.report, "w", encoding="utf-8") if args.report else None
    try:
        for r in reports:
            if sink:
                sink.write(json.dumps(r.to_record(), sort_keys=True) + "\n")
            if not r.ok:
                print(f"VIOLATION {r.problem_id}: {r.n_violations} point(s), "
                      f"{r.n_tag_violations} tag violation(s)")
            elif r.accepted == 0:
                print(f"warning: {r.problem_id}: no feasible samples found")
    finally:
        if sink:
            sink.close()
    print(f"checked {len(reports)} problems, {len(bad)} with violations")
    return FAILURE if bad else OK


def _corpora(specs: list[str]) -> dict[str, list]:
    out: dict[str, list] = {}
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep:
            name, path = "", spec
        out[name] = read_corpus(path)
    return out


def _adapter(args):
    if args.prover_command:
        return CommandAdapter(template=args.template, attempts=args.attempts_n, model=args.model or "",
                              command=args.prover_command)
    if args.endpoint:
        return HttpAdapter(template=args.template, attempts=args.attempts_n, model=args.model or "",
                           endpoint=args.endpoint, temperature=args.temperature, max_tokens=args.max_tokens)
    return None


def cmd_eval(args) -> int:
    corpora = _corpora(args.corpus)
    problems = {p.id: p for ps in corpora.values() for p in ps}
    adapter = _adapter(args)
    attempts = read_attempts(args.attempts) if args.attempts else []
    if adapter is None and not args.attempts:
        raise UsageError("give --attempts, --prover-command or --endpoint")
    try:
        toolchain = Toolchain.resolve(args.toolchain, args.lean_command)
    except ConfigError:
        if args.records_only:
            toolchain = None
        else:
            raise
    if args.records_only:
        records = read_records(args.journal)
    else:
        records = run_batch(problems, attempts, adapter=adapter, toolchain=toolchain, workers=args.workers,
                            journal=args.journal, resume=not args.no_resume, timeout=args.timeout,
                            mode=args.mode)
    # named corpora keep their name; an unnamed one is split by construction
    by_corpus: dict[str, list] = {}
    group_of = {}
    for name, ps in corpora.items():
        for p in ps:
            group_of[p.id] = name or corpus_group(p)
    order = [n for n in corpora if n] + [g for g in GROUPS if g in set(group_of.values())]
    for g in dict.fromkeys(order):
        by_corpus[g] = []
    for r in records:
        if r.problem_id in group_of:
            by_corpus[group_of[r.problem_id]].append(r)
    by_corpus = {k: v for k, v in by_corpus.items() if v}
    cells = score_table(by_corpus, args.budgets, args.resamples, args.seed)
    pin = toolchain.pin() if toolchain else {"lean": None, "mathlib": None}
    if args.mathlib_pin:
        pin["mathlib"] = args.mathlib_pin
    rep = report(cells, {"toolchain": pin, "mode": args.mode, "records": len(records)},
                 args.resamples, args.seed)
    if args.out:
        Path(args.out).write_text(json.dumps(rep, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                                  encoding="utf-8")
    sys.stdout.write(render_table(cells))
    return OK


def cmd_stats(args) -> int:
    problems = read_corpus(args.corpus)
    groups = Counter(corpus_group(p) for p in problems)
    rules = Counter(e.rule for p in problems for e in p.provenance)
    families = Counter(e.family for p in problems for e in p.provenance)
    depth = Counter(len(p.provenance) for p in problems)
    nvars = Counter(len(p.variables) for p in problems)
    data = {"problems": len(problems), "groups": dict(groups), "families": dict(families),
            "rules": dict(sorted(rules.items())), "depth": dict(sorted(depth.items())),
            "variables": dict(sorted(nvars.items())),
            "with_conditions": sum(bool(p.conditions) for p in problems),
            "rhs_positive": sum(p.rhs_positive for p in problems)}
    if args.json:
        print(json.dumps(data, sort_keys=True))
    else:
        for key, val in data.items():
            print(f"{key}: {val}")
    return OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ineqcomp", description="Inequality problem generation and evaluation.")
    ap.add_argument("--config", help="INI file; [defaults] and per-subcommand sections fill unset flags")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def gen_out(p):
        p.add_argument("--seeds", help="seed corpus (default: bundled seeds)")
        p.add_argument("--out", required=True)
        p.add_argument("--manifest", help="manifest path (default: OUT with .manifest.jsonl)")
        p.add_argument("--seed", type=int, required=True, help="rng seed")

    p = sub.add_parser("expand-simp", help="one Type I and one Type II variant per seed")
    gen_out(p)
    p.set_defaults(func=cmd_expand_simp)

    p = sub.add_parser("generate-mix", help="random rule compositions")
    gen_out(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default="composition-only")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--families", type=lambda s: s.split(","),
                   help="comma list of composition,variable-level,problem-level, or all")
    p.add_argument("--depth", type=int)
    p.add_argument("--weights", type=_int_pair, help="weighted-sum coefficient range LO,HI")
    p.add_argument("--no-dedup", action="store_true")
    p.set_defaults(func=cmd_generate_mix)

    p = sub.add_parser("make-ft-corpus", help="substitution variants, compositions and ICL prompts")
    p.add_argument("--seeds")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=5000)
    p.add_argument("--per-seed", type=int, default=4)
    p.add_argument("--train-category", default="amgm")
    p.set_defaults(func=cmd_make_ft_corpus)

    p = sub.add_parser("emit", help="render .lean files and optional prompts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--template", help=f"also write prompts ({', '.join(sorted(TEMPLATES))})")
    p.add_argument("--ascii", action="store_true", help="ascii names and operators")
    p.add_argument("--conjunction", action="store_true", help="single conjunctive positivity hypothesis")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("check", help="numeric oracle over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--n", type=int, default=1000, help="feasible samples per problem")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["numba", "numpy"])
    p.add_argument("--report", help="per-problem JSONL report")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="verify attempts and tabulate pass@k")
    p.add_argument("--corpus", action="append", required=True, metavar="[NAME=]PATH")
    p.add_argument("--attempts", help="attempts JSONL")
    p.add_argument("--prover-command", help="command adapter: prompt on stdin, proof on stdout")
    p.add_argument("--endpoint", help="completions endpoint for the http adapter")
    p.add_argument("--model")
    p.add_argument("--template", default="chat-thinking", choices=sorted(TEMPLATES))
    p.add_argument("--attempts-per-problem", dest="attempts_n", type=int, default=1)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--max-tokens", type=int, default=16000)
    p.add_argument("--toolchain", help="Lean project directory (or INEQCOMP_LEAN_PROJECT)")
    p.add_argument("--lean-command", help="compile command with a {file} placeholder")
    p.add_argument("--mathlib-pin", help="Mathlib revision to record when the project has no manifest")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--journal", help="JSONL journal for resuming")
    p.add_argument("--no-resume", action="store_true")
    p.add_argument("--records-only", action="store_true", help="score an existing journal without compiling")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.add_argument("--mode", choices=["proof", "statement"], default="proof")
    p.add_argument("--budgets", type=_int_list, default=[1])
    p.add_argument("--resamples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="summary counts for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> None:
    """Config values become subparser defaults, so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    cp = configparser.ConfigParser()
    if not cp.read(known.config, encoding="utf-8"):
        raise UsageError(f"cannot read config file {known.config}")
    command = next((a for a in rest if not a.startswith("-")), None)
    subs = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    if command not in subs.choices:
        return
    sp = subs.choices[command]
    actions = {a.dest: a for a in sp._actions}
    values = {}
    for section in ("defaults", command):
        if cp.has_section(section):
            values.update(cp.items(section))
    for key, raw in values.items():
        dest = key.replace("-", "_")
        act = actions.get(dest)
        if act is None:
            if cp.has_section(command) and cp.has_option(command, key):
                raise UsageError(f"config: unknown option {key!r} for {command}")
            continue
        if isinstance(act, argparse._StoreTrueAction):
            val = raw.strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(act, argparse._AppendAction):
            val = [s.strip() for s in raw.split("\n") if s.strip()]
        else:
            val = act.type(raw) if act.type else raw
        act.required = False
        sp.set_defaults(**{dest: val})


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        _apply_config(ap, argv)
    except (UsageError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"ineqcomp: error: {exc}", file=sys.stderr)
        return USAGE
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, TemplateError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"ineqcomp: error: {exc}", file=sys.stderr)
        return USAGE
    except (ParseError, GenerationExhausted, ValueError, KeyError) as exc:
        print(f"ineqcomp: {exc}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    sys.exit(main())
