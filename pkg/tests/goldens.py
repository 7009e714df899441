"""Fixed example problems built from the seeds, shared by the golden test
and the script that regenerates the stored files."""
from pathlib import Path

from ineqcomp.problem import load_bundled_seeds
from ineqcomp.transforms import apply_stmt_rule, compose, lift, rename, rule_by_name, type1_variant

GOLDEN_DIR = Path(__file__).with_name("golden")


def golden_problems():
    s = {p.id: p for p in load_bundled_seeds()}
    cup = type1_variant(s["cauchy_p1"])
    mixed = lift(s["amgm_p21"], rename(s["cauchy_p2"], {"x": "a", "y": "b", "z": "c"}))
    weighted = compose(*mixed, rule_by_name("Weighted Sum").with_params(mu=3, lam=2)).problem
    return {
        "cauchy_p1": cup.with_id("cauchy_p1"),
        "cauchy_p26": cup.with_id("cauchy_p26"),
        "amgm_p36": type1_variant(s["amgm_p11"]).with_id("amgm_p36"),
        "amgm_p47": type1_variant(s["amgm_p22"]).with_id("amgm_p47"),
        "alge_whole_p70": apply_stmt_rule(weighted, rule_by_name("cube")).problem.with_id("alge_whole_p70"),
    }
