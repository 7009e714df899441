"""Regenerate the bundled seed corpus and the test fixtures derived from it.

    python3 scripts/build_seed_corpus.py

Writes src/ineqcomp/data/seeds.jsonl, tests/fixtures/seed_exclusions.jsonl
and tests/fixtures/mutations.jsonl.  The AM-GM proofs are nlinarith hint
lists in the usual style; they are in-context examples and have not been
checked by Lean here.
"""
import itertools
import json
from pathlib import Path

from ineqcomp.expr import parse_expr, to_json
from ineqcomp.problem import make_problem, problem_to_record, write_corpus

ROOT = Path(__file__).resolve().parents[1]

# (id, variables, lhs, rhs, rhs_positive, conditions, unsigned)
AMGM = [
    ("p1", "x y", "x + y", "2*sqrt(x*y)", True, (), False),
    ("p2", "x y", "x**2 + y**2", "2*x*y", True, (), False),
    ("p3", "x y z", "x + y + z", "3*(x*y*z)**(1/3)", True, (), False),
    ("p4", "x y", "x/y + y/x", "2", True, (), False),
    ("p5", "x y z", "x**3 + y**3 + z**3", "3*x*y*z", True, (), False),
    ("p6", "x y z", "2/5*x + 2/5*y + 1/5*z", "x**(2/5)*y**(2/5)*z**(1/5)", True, (), False),
    ("p7", "x y", "(x + y)/2", "2*x*y/(x + y)", True, (), False),
    ("p8", "x", "x + 1/x", "2", True, (), False),
    ("p9", "x y", "x + y", "2", True, (("x*y", "eq", "1"),), False),
    ("p10", "x y", "1", "x*y", True, (("x + y", "eq", "2"),), False),
    ("p11", "x y z", "1", "x*y*z", True, (("x + y + z", "eq", "3"),), False),
    ("p12", "x y z", "x**2 + y**2 + z**2", "x*y + y*z + z*x", True, (), False),
    ("p13", "x y z", "x + y + z", "3", True, (("x*y*z", "eq", "1"),), False),
    ("p14", "x y", "2/3*x**6 + 1/3*y**6", "x**4*y**2", True, (), False),
    ("p15", "x y z", "x**4 + y**4 + z**4", "x*y*z*(x + y + z)", True, (), False),
    ("p16", "x y z", "(x + y)*(y + z)*(z + x)", "8*x*y*z", True, (), False),
    ("p17", "x y z", "x/y + y/z + z/x", "3", True, (), False),
    ("p18", "x y", "1/x + 1/y", "4", True, (("x + y", "eq", "1"),), False),
    ("p19", "x y z", "(1 + x)*(1 + y)*(1 + z)", "8*sqrt(x*y*z)", True, (), False),
    ("p20", "x y z", "x**2/y + y**2/z + z**2/x", "x + y + z", True, (), False),
    ("p21", "a b", "1", "a*b**2", True, (("a + 2*b", "eq", "3"),), False),
    ("p22", "x y z", "4/7*x**3*y + 1/7*y**3*z + 2/7*z**3*x", "x", True, (("x*y*z", "eq", "1"),), False),
    ("p23", "x y", "x**5 + y**5", "x**3*y**2 + x**2*y**3", True, (), False),
    ("p24", "a b c", "a**3 + b**3 + c**3", "a**2*b + b**2*c + c**2*a", True, (), False),
    ("p25", "x y z", "1", "x*y*z", True, (("x*y + y*z + z*x", "eq", "3"),), False),
]

CAUCHY = [
    ("p1", "x y", "(x + y)*(1/x + 1/y)", "4", True, (), False),
    ("p2", "x y z", "(x + y + z)*(1/x + 1/y + 1/z)", "9", True, (), False),
    ("p3", "x y a b", "(x**2 + y**2)*(a**2 + b**2)", "(x*a + y*b)**2", True, (), False),
    ("p4", "x y", "2*(x**2 + y**2)", "(x + y)**2", True, (), False),
    ("p5", "x y z", "3*(x**2 + y**2 + z**2)", "(x + y + z)**2", True, (), False),
    ("p6", "x y z", "x/(y + z) + y/(z + x) + z/(x + y)", "3/2", True, (), False),
    ("p7", "x y a b", "x**2/a + y**2/b", "(x + y)**2/(a + b)", True, (), False),
    ("p8", "x y z a b c", "x**2/a + y**2/b + z**2/c", "(x + y + z)**2/(a + b + c)", True, (), False),
    ("p9", "x y z", "x**2 + y**2 + z**2", "1/3", True, (("x + y + z", "eq", "1"),), False),
    ("p10", "x y", "sqrt(2)", "x + y", True, (("x**2 + y**2", "eq", "1"),), False),
    ("p11", "x y z", "3", "sqrt(x) + sqrt(y) + sqrt(z)", True, (("x + y + z", "eq", "3"),), False),
    ("p12", "x y z", "(x + y + z)*(x**3 + y**3 + z**3)", "(x**2 + y**2 + z**2)**2", True, (), False),
    ("p13", "a b", "(a + b)*(a**3 + b**3)", "(a**2 + b**2)**2", True, (), False),
    ("p14", "x y z", "x/y + y/z + z/x", "(x + y + z)**2/(x*y + y*z + z*x)", True, (), False),
    ("p15", "x y z", "x**2 + y**2 + z**2", "18/7", True, (("x + 2*y + 3*z", "eq", "6"),), False),
    ("p16", "x y z", "(x + y)*(x + z)", "(x + sqrt(y*z))**2", True, (), False),
    ("p17", "x y", "(x**2 + 1)*(y**2 + 1)", "(x*y + 1)**2", True, (), False),
    ("p18", "x y z", "1/x + 4/y + 9/z", "36", True, (("x + y + z", "eq", "1"),), False),
    ("p19", "a b c x y z", "(a**2 + b**2 + c**2)*(x**2 + y**2 + z**2)", "(a*x + b*y + c*z)**2", True, (), False),
    ("p20", "x y z", "x**2/(y + z) + y**2/(z + x) + z**2/(x + y)", "(x + y + z)/2", True, (), False),
    ("p21", "x y", "sqrt(2)", "sqrt(x) + sqrt(y)", True, (("x + y", "eq", "1"),), False),
    ("p22", "x y", "(x + y)*(1/x + 4/y)", "9", True, (), False),
    ("p23", "x y z", "(x + y + z)*(1/(x + y) + 1/(y + z) + 1/(z + x))", "9/2", True, (), False),
    ("p24", "x y a b", "(x**2 + y**2)*(a**2 + b**2)", "(x*b - y*a)**2", False, (), True),
    ("p25", "x y a b", "sqrt(x**2 + y**2)*sqrt(a**2 + b**2)", "abs(x*a + y*b)", False, (), True),
]

MISC = [
    # convexity
    ("p1", "x y", "2*sqrt((x + y)/2)", "sqrt(x) + sqrt(y)", True, (), False),
    ("p2", "x y", "(x**3 + y**3)/2", "((x + y)/2)**3", True, (), False),
    ("p3", "x y", "log((x + y)/2)", "(log(x) + log(y))/2", False, (), False),
    ("p4", "x y", "(exp(x) + exp(y))/2", "exp((x + y)/2)", True, (), False),
    ("p5", "x y z", "(x**2 + y**2 + z**2)/3", "((x + y + z)/3)**2", True, (), False),
    ("p6", "x y", "1/x + 1/y", "4/(x + y)", True, (), False),
    ("p7", "x y", "x*log(x) + y*log(y)", "(x + y)*log((x + y)/2)", False, (), False),
    ("p8", "x y", "sqrt((x**2 + y**2)/2)", "(x + y)/2", True, (), False),
    ("p9", "x y z", "(x + y + z)/3", "3/(1/x + 1/y + 1/z)", True, (), False),
    ("p10", "x y", "((x**4 + y**4)/2)**(1/4)", "(x + y)/2", True, (), False),
    # Schur
    ("p11", "x y z", "x**3 + y**3 + z**3 + 3*x*y*z", "x*y*(x + y) + y*z*(y + z) + z*x*(z + x)", True, (), False),
    ("p12", "x y z", "x**2*(x - y)*(x - z) + y**2*(y - x)*(y - z) + z**2*(z - x)*(z - y)", "0", False, (), False),
    ("p13", "x y z", "7/27", "x*y + y*z + z*x - 2*x*y*z", True, (("x + y + z", "eq", "1"),), False),
    ("p14", "x y z", "x**2 + y**2 + z**2 + 2*x*y*z + 1", "2*(x*y + y*z + z*x)", True, (), False),
    ("p15", "x y z", "(x + y + z)**3 + 9*x*y*z", "4*(x + y + z)*(x*y + y*z + z*x)", True, (), False),
    # sums of squares
    ("p16", "x y", "x**2 + y**2 + 1", "x*y + x + y", True, (), False),
    ("p17", "x y", "x**4 + y**4", "x**3*y + x*y**3", True, (), False),
    ("p18", "x y z", "x**2 + y**2 + z**2 + 3", "2*(x + y + z)", False, (), True),
    ("p19", "x y z", "x**2 + y**2 + z**2", "x*y + y*z + z*x", False, (), True),
    ("p20", "x y z", "x**4 + y**4 + z**4", "x**2*y**2 + y**2*z**2 + z**2*x**2", False, (), True),
    # fixed-exponent instances of induction-style inequalities over all reals
    ("p21", "x", "(1 + x)**5", "1 + 5*x", False, (("x", "gt", "-1"),), True),
    ("p22", "x", "(1 + x)**10", "1 + 10*x", False, (("x", "gt", "-1"),), True),
    ("p23", "x y z", "3*(x**2 + y**2 + z**2)", "(x + y + z)**2", False, (), True),
    ("p24", "x y", "x**6 + y**6", "x**5*y + x*y**5", False, (), True),
    ("p25", "x", "(1 + x**2)**3", "1 + 3*x**2", False, (), True),
]


def _hint_proof(names: list[str]) -> str:
    hints = [f"sq_nonneg ({a} - {b})" for a, b in itertools.combinations(names, 2)]
    hints += [f"mul_pos h{a} h{b}" for a, b in itertools.combinations(names, 2)]
    if len(names) == 1:
        hints = [f"sq_nonneg ({names[0]} - 1)", f"h{names[0]}"]
    return "nlinarith [" + ", ".join(hints) + "]"


def build(table, category):
    out = []
    for pid, names, lhs, rhs, tag, conds, unsigned in table:
        vs = names.split()
        proof = _hint_proof(vs) if category == "amgm" else None
        out.append(make_problem(f"{category}_{pid}", vs, lhs, rhs, conditions=conds, rhs_positive=tag,
                                category=category, unsigned=vs if unsigned else (), proof=proof))
    return out


def seeds():
    return build(AMGM, "amgm") + build(CAUCHY, "cauchy") + build(MISC, "misc")


def _expr(text):
    return to_json(parse_expr(text))


def exclusion_records(eligible):
    """Eligible seeds plus records the schema cannot or will not accept."""
    recs = [problem_to_record(p) for p in eligible]
    x = {"base": "x", "idx": 0}
    for i, (lhs, rhs) in enumerate([("(1 + x)*(1 + x)", "1 + 2*x"), ("x + 1/x", "2"),
                                    ("(1 + x)**3", "1 + 3*x"), ("x**2 + 1", "2*x"), ("x + 1", "x")], 1):
        recs.append({"id": f"excl_int_{i}", "category": "misc",
                     "variables": [x, {"base": "n", "idx": 0, "domain": "nat"}],
                     "conditions": [], "lhs": _expr(lhs), "rhs": _expr(rhs), "rhs_positive": False,
                     "provenance": []})
    for i in range(1, 3):
        recs.append({"id": f"excl_nvar_{i}", "category": "misc", "arity": "n", "variables": [x],
                     "conditions": [], "lhs": _expr("x + 1/x"), "rhs": _expr("2"), "rhs_positive": True,
                     "provenance": []})
    for i, (names, lhs, rhs) in enumerate([("x y", "x**2 + y**2", "2*x*y"),
                                           ("x", "x**2 + 1", "2*x"),
                                           ("x y", "(x + y)**2", "4*x*y")], 1):
        vs = [{"base": n, "idx": 0, "positive": False} for n in names.split()]
        recs.append({"id": f"excl_unsigned_{i}", "category": "misc", "variables": vs, "conditions": [],
                     "lhs": _expr(lhs), "rhs": _expr(rhs), "rhs_positive": False, "provenance": []})
    return recs


# statements flipped or tightened past their true bound
MUTATIONS = [
    ("mut_cauchy_p1", "x y", "4", "(x + y)*(1/x + 1/y)", True, ()),
    ("mut_amgm_p1", "x y", "x + y", "3*sqrt(x*y)", True, ()),
    ("mut_amgm_p11", "x y z", "x*y*z", "1", True, (("x + y + z", "eq", "3"),)),
    ("mut_amgm_p13", "x y z", "3", "x + y + z", True, (("x*y*z", "eq", "1"),)),
    ("mut_cauchy_p6", "x y z", "3/2", "x/(y + z) + y/(z + x) + z/(x + y)", True, ()),
]


def mutations():
    return [make_problem(pid, v, lhs, rhs, conditions=c, rhs_positive=t, category="misc")
            for pid, v, lhs, rhs, t, c in MUTATIONS]


def main():
    corpus = seeds()
    write_corpus(ROOT / "src/ineqcomp/data/seeds.jsonl", corpus)
    eligible = [p for p in corpus if p.all_positive]
    with open(ROOT / "tests/fixtures/seed_exclusions.jsonl", "w", encoding="utf-8") as fh:
        for rec in exclusion_records(eligible):
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n")
    write_corpus(ROOT / "tests/fixtures/mutations.jsonl", mutations())
    print(f"{len(corpus)} seeds, {len(eligible)} eligible")


if __name__ == "__main__":
    main()
