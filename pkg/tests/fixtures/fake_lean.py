"""Stand-in for `lake env lean FILE` that mimics the diagnostics the harness reads.

Markers in the source steer it: a `fake_sleep` line makes it hang, a
`fake_crash` line makes it die.  Unbalanced brackets or an `error_here`
token produce an error; a `sorry` tactic outside comments produces the
usual warning with a zero exit status, like the real compiler.
"""
import re
import sys
import time


def strip_comments(src):
    src = re.sub(r"/-.*?-/", "", src, flags=re.DOTALL)
    return re.sub(r"--[^\n]*", "", src)


def balanced(src):
    pairs = {")": "(", "]": "[", "}": "{"}
    stack = []
    for ch in src:
        if ch in "([{":
            stack.append(ch)
        elif ch in pairs:
            if not stack or stack.pop() != pairs[ch]:
                return False
    return not stack


def main(path):
    src = open(path, encoding="utf-8").read()
    code = strip_comments(src)
    if "fake_sleep" in code:
        time.sleep(60)
    if "fake_crash" in code:
        sys.exit(137)
    if "import Mathlib" not in code or not re.search(r"^theorem \w+", code, re.MULTILINE):
        print(f"{path}:1:0: error: unknown declaration")
        sys.exit(1)
    if not balanced(code) or "error_here" in code:
        print(f"{path}:9:2: error: unexpected token; expected term")
        sys.exit(1)
    if re.search(r"\bsorry\b", code):
        print(f"{path}:9:8: warning: declaration uses 'sorry'")
    sys.exit(0)


if __name__ == "__main__":
    main(sys.argv[1])
