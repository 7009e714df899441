import pytest

from ineqcomp.lean import PREAMBLE, render_statement
from ineqcomp.prompts import (CHAT_TEMPLATE, TEMPLATES, PromptTask, TemplateError, prompt_metadata,
                              render_prompt, template_slots)


@pytest.fixture
def statement(seed_map):
    return render_statement(seed_map["amgm_p1"]).header + " := by\n"


@pytest.mark.parametrize("tid", sorted(TEMPLATES))
def test_every_template_renders(tid, statement):
    proofs = ("theorem a : True := by trivial", "theorem b : True := by trivial")
    text = render_prompt(PromptTask(tid, statement, icl_proofs=proofs))
    assert statement in text
    assert PREAMBLE in text
    assert "{" not in text.replace("{x", "")  # no unfilled slots


def test_slots():
    assert template_slots("plain") == {"informal_prefix", "formal_statement"}
    assert template_slots("icl") == {"informal_prefix", "formal_statement", "icl_code"}
    assert template_slots("icl-gen") == {"informal_prefix", "formal_statement", "icl_code1", "icl_code2"}


def test_braces_in_lean_code_survive(statement):
    proof = "theorem t : ({1} : Set ℕ) = {1} := rfl"
    text = render_prompt(PromptTask("icl", statement, icl_proofs=(proof,)))
    assert proof in text


def test_icl_gen_order(statement):
    text = render_prompt(PromptTask("icl-gen", statement, icl_proofs=("FIRST", "SECOND")))
    assert text.index("FIRST") < text.index("SECOND")


@pytest.mark.parametrize("tid,n", [("icl", 0), ("icl-gen", 1)])
def test_missing_proofs(tid, n, statement):
    with pytest.raises(TemplateError, match="needs"):
        PromptTask(tid, statement, icl_proofs=("p",) * n)


def test_unknown_template(statement):
    with pytest.raises(TemplateError, match="unknown template"):
        PromptTask("nope", statement)


def test_chat_flags(statement):
    assert not CHAT_TEMPLATE["plain"]
    meta = prompt_metadata(PromptTask("chat-thinking", statement, problem_id="amgm_p1"))
    assert meta == {"problem_id": "amgm_p1", "template": "chat-thinking",
                    "apply_chat_template": True, "add_generation_prompt": True}


def test_plain_is_a_completion_prefix(statement):
    text = render_prompt(PromptTask("plain", statement))
    assert text.endswith(statement)
