"""Prompt templates that wrap a formal statement for a prover model."""
from __future__ import annotations

import string
from dataclasses import dataclass, field

from .lean import PREAMBLE

_WRAP_HINT = "You should wrap your answer in the lean code block"
_ANSWER = "```lean4\n<You answer>\n```"
_HEAD = ("Give a proof for the following problem written in lean 4:\n\n"
         f"```lean4\n{PREAMBLE}\n\n" "{informal_prefix}{formal_statement}```.\n\n")
_ICL_INTRO = ("Following is the solution for a related problem written in Lean 4. "
              "You can fully trust the provided code and it has already passed the Lean 4 compilation.\n")
_ICL_TAIL = ("\n\nPlease follow the provided code such that you don't make more mistakes. "
             "Your code should be self-contained, i.e., you should first prove the provided example "
             "inside your whole proof (not as a separate theorem outside the proof of the problem) "
             f"if you want to use the result. {_WRAP_HINT}\n\n{_ANSWER}")

TEMPLATES: dict[str, str] = {
    "plain": ("Complete the following Lean 4 code with explanatory comments preceding each line of code:"
              f"\n\n```lean4\n{PREAMBLE}\n\n" "{informal_prefix}{formal_statement}"),
    "chat-thinking": _HEAD + f"{_WRAP_HINT} \n\n{_ANSWER}",
    "kimina-style": ("Think about and solve the following problem step by step in Lean 4.\n"
                     "# Informal statement:\n{informal_prefix}\n# Formal statement:\n"
                     f"```lean4\n{PREAMBLE}\n\n" "{formal_statement}```\n"),
    "icl": _HEAD + _ICL_INTRO + "{icl_code}" + _ICL_TAIL,
    "icl-gen": _HEAD + _ICL_INTRO + "{icl_code1}\n\n{icl_code2}" + _ICL_TAIL,
}

# whether the serving side should apply its chat template with a generation prompt
CHAT_TEMPLATE = {"plain": False, "chat-thinking": True, "kimina-style": True, "icl": True, "icl-gen": True}

_REQUIRED_PROOFS = {"plain": 0, "chat-thinking": 0, "kimina-style": 0, "icl": 1, "icl-gen": 2}


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTask:
    template: str
    formal_statement: str
    informal_prefix: str = ""
    icl_proofs: tuple[str, ...] = field(default=())
    problem_id: str = ""

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise TemplateError(f"unknown template {self.template!r}; choose from {sorted(TEMPLATES)}")
        need = _REQUIRED_PROOFS[self.template]
        if len(self.icl_proofs) < need:
            raise TemplateError(f"template {self.template} needs {need} proof(s), got {len(self.icl_proofs)}")

    @property
    def chat_template(self) -> bool:
        return CHAT_TEMPLATE[self.template]


def template_slots(template_id: str) -> set[str]:
    return {f for _, f, _, _ in string.Formatter().parse(TEMPLATES[template_id]) if f}


def render_prompt(task: PromptTask) -> str:
    slots = {"informal_prefix": task.informal_prefix, "formal_statement": task.formal_statement}
    proofs = task.icl_proofs
    if task.template == "icl":
        slots["icl_code"] = proofs[0]
    elif task.template == "icl-gen":
        slots["icl_code1"], slots["icl_code2"] = proofs[0], proofs[1]
    missing = template_slots(task.template) - slots.keys()
    if missing:
        raise TemplateError(f"missing slot(s): {', '.join(sorted(missing))}")
    # str.format would choke on braces inside Lean code, so substitute by hand
    out = []
    for literal, name, _, _ in string.Formatter().parse(TEMPLATES[task.template]):
        out.append(literal)
        if name:
            out.append(slots[name])
    return "".join(out)


def prompt_metadata(task: PromptTask) -> dict:
    return {"problem_id": task.problem_id, "template": task.template,
            "apply_chat_template": task.chat_template, "add_generation_prompt": task.chat_template}
