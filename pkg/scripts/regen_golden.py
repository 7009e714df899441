"""Rewrite tests/golden/*.lean from the current renderer.  Review the diff."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from goldens import GOLDEN_DIR, golden_problems  # noqa: E402
from ineqcomp.lean import render_statement  # noqa: E402

GOLDEN_DIR.mkdir(exist_ok=True)
for name, p in golden_problems().items():
    (GOLDEN_DIR / f"{name}.lean").write_text(render_statement(p).source, encoding="utf-8")
    print(name)
