"""Compile-based verification of candidate proofs and batch orchestration."""
from __future__ import annotations

import json
import os
import shlex
import shutil
import signal
import subprocess
import tempfile
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .lean import ExtractionError, LeanArtifact, assemble_candidate, render_statement
from .problem import Problem
from .prompts import PromptTask, render_prompt

ENV_PROJECT = "INEQCOMP_LEAN_PROJECT"
ENV_COMMAND = "INEQCOMP_LEAN_COMMAND"
DEFAULT_COMMAND = ("lake", "env", "lean", "{file}")
DEFAULT_TIMEOUT = 300.0
SORRY_WARNING = "declaration uses 'sorry'"
EXCERPT_LINES = 20


class ConfigError(RuntimeError):
    """The Lean toolchain (or an adapter) is not usable as configured."""


class AdapterError(RuntimeError):
    pass


# ------------------------------------------------------------------ toolchain

@dataclass(frozen=True)
class Toolchain:
    project: Path
    command: tuple[str, ...] = DEFAULT_COMMAND

    @classmethod
    def resolve(cls, project: str | os.PathLike | None = None, command: str | Sequence[str] | None = None) -> "Toolchain":
        """Explicit arguments first, then the environment."""
        project = project or os.environ.get(ENV_PROJECT)
        if not project:
            raise ConfigError(f"no Lean project configured; pass --toolchain or set {ENV_PROJECT}")
        root = Path(project).expanduser()
        if not root.is_dir():
            raise ConfigError(f"Lean project directory {root} does not exist")
        command = command or os.environ.get(ENV_COMMAND) or DEFAULT_COMMAND
        if isinstance(command, str):
            command = shlex.split(command)
        command = tuple(command)
        if "{file}" not in command:
            raise ConfigError("toolchain command must contain a {file} placeholder")
        if shutil.which(command[0]) is None and not (root / command[0]).exists():
            raise ConfigError(f"toolchain executable {command[0]!r} not found")
        return cls(root, command)

    def pin(self) -> dict:
        """Lean and Mathlib versions as recorded in the project, if present."""
        out = {"lean": None, "mathlib": None}
        tc = self.project / "lean-toolchain"
        if tc.is_file():
            out["lean"] = tc.read_text(encoding="utf-8").strip()
        manifest = self.project / "lake-manifest.json"
        if manifest.is_file():
            try:
                data = json.loads(manifest.read_text(encoding="utf-8"))
                for pkg in data.get("packages", []):
                    if pkg.get("name", "").lower() == "mathlib":
                        out["mathlib"] = pkg.get("rev")
            except (json.JSONDecodeError, AttributeError):
                pass
        return out


# ------------------------------------------------------------------ records

@dataclass(frozen=True)
class EvalRecord:
    problem_id: str
    attempt: int
    compiled: bool
    wall_time: float = 0.0
    error: str = ""
    timeout: bool = False
    model: str = ""

    def __post_init__(self):
        if self.compiled and (self.timeout or self.error):
            raise ValueError("a compiled record carries neither a timeout nor an error")

    @property
    def key(self) -> tuple[str, int]:
        return (self.problem_id, self.attempt)

    def outcome(self) -> tuple:
        """Everything except timing, for comparing runs."""
        return (self.problem_id, self.attempt, self.compiled, self.error, self.timeout, self.model)

    def to_record(self) -> dict:
        return asdict(self)

    @classmethod
    def from_record(cls, rec: dict) -> "EvalRecord":
        return cls(str(rec["problem_id"]), int(rec["attempt"]), bool(rec["compiled"]),
                   float(rec.get("wall_time", 0.0)), rec.get("error", "") or "",
                   bool(rec.get("timeout", False)), rec.get("model", "") or "")


@dataclass(frozen=True)
class Attempt:
    problem_id: str
    attempt_id: int
    proof_text: str | None
    model: str = ""
    failure: str = ""          # why no text was produced

    def to_record(self) -> dict:
        rec = {"problem_id": self.problem_id, "attempt_id": self.attempt_id,
               "model": self.model, "proof_text": self.proof_text}
        if self.failure:
            rec["failure"] = self.failure
        return rec


def read_attempts(path) -> list[Attempt]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(Attempt(str(rec["problem_id"]), int(rec["attempt_id"]),
                                   rec.get("proof_text"), rec.get("model", "") or "",
                                   rec.get("failure", "") or ""))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {i}: bad attempt record ({exc})") from None
    return out


def write_attempts(path, attempts: Iterable[Attempt]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in attempts:
            fh.write(json.dumps(a.to_record(), ensure_ascii=False, sort_keys=True) + "\n")


def _excerpt(text: str, n: int = EXCERPT_LINES) -> str:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    return "\n".join(lines[:n])


# ------------------------------------------------------------------ verify

def _run(cmd: list[str], cwd: Path, timeout: float) -> tuple[int | None, str]:
    # own process group, so a timeout also takes down lean under lake
    proc = subprocess.Popen(cmd, cwd=cwd, stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
                            start_new_session=True)
    try:
        out, _ = proc.communicate(timeout=timeout)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, _ = proc.communicate()
        return None, out.decode("utf-8", "replace")
    return proc.returncode, out.decode("utf-8", "replace")


def verify(artifact: LeanArtifact, toolchain: Toolchain, timeout: float = DEFAULT_TIMEOUT,
           mode: str = "proof", problem_id: str = "", attempt: int = 0, model: str = "") -> EvalRecord:
    """Compile ``artifact`` in a scratch directory.

    In ``proof`` mode a placeholder warning counts as failure; ``statement``
    mode only asks that the file elaborate.
    """
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    if mode not in ("proof", "statement"):
        raise ValueError(f"unknown verification mode {mode!r}")
    if toolchain is None:
        raise ConfigError("no Lean toolchain configured")
    pid = problem_id or artifact.name
    with tempfile.TemporaryDirectory(prefix="ineqcomp-") as tmp:
        path = Path(tmp) / f"{artifact.name}.lean"
        path.write_text(artifact.source, encoding="utf-8")
        cmd = [part.replace("{file}", str(path)) for part in toolchain.command]
        start = time.monotonic()
        try:
            code, output = _run(cmd, toolchain.project, timeout)
        except OSError as exc:
            raise ConfigError(f"cannot start toolchain: {exc}") from None
        elapsed = time.monotonic() - start
        # scratch paths differ per run; keep diagnostics comparable
        output = output.replace(str(path), path.name).replace(tmp, ".")
    if code is None:
        return EvalRecord(pid, attempt, False, elapsed, f"timed out after {timeout:g}s", True, model)
    if code != 0:
        return EvalRecord(pid, attempt, False, elapsed, _excerpt(output) or f"exit status {code}", False, model)
    if mode == "proof" and SORRY_WARNING in output:
        return EvalRecord(pid, attempt, False, elapsed, _excerpt(output), False, model)
    return EvalRecord(pid, attempt, True, elapsed, "", False, model)


Verifier = Callable[[LeanArtifact, str, int, str], EvalRecord]


# ------------------------------------------------------------------ adapters

@dataclass
class ProverAdapter:
    template: str = "chat-thinking"
    attempts: int = 1
    temperature: float = 1.0
    max_tokens: int = 16000
    model: str = ""

    kind = "abstract"

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be at least 1")

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


@dataclass
class CommandAdapter(ProverAdapter):
    """Prompt on stdin, one completion on stdout."""
    command: Sequence[str] = ()
    timeout: float = 600.0

    kind = "command"

    def complete(self, prompt: str) -> str:
        cmd = shlex.split(self.command) if isinstance(self.command, str) else list(self.command)
        if not cmd:
            raise ConfigError("command adapter has no command")
        try:
            res = subprocess.run(cmd, input=prompt.encode("utf-8"), capture_output=True, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            raise AdapterError(f"prover command timed out after {self.timeout:g}s") from None
        except OSError as exc:
            raise AdapterError(f"cannot run prover command: {exc}") from None
        if res.returncode != 0:
            raise AdapterError(f"prover command exited {res.returncode}: "
                               f"{_excerpt(res.stderr.decode('utf-8', 'replace'), 3)}")
        return res.stdout.decode("utf-8", "replace")


@dataclass
class HttpAdapter(ProverAdapter):
    """OpenAI-compatible completions endpoint."""
    endpoint: str = ""
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 600.0

    kind = "http-completions"

    def complete(self, prompt: str) -> str:
        if not self.endpoint:
            raise ConfigError("http adapter has no endpoint")
        body = {"model": self.model, "prompt": prompt, "temperature": self.temperature,
                "max_tokens": self.max_tokens, "n": 1}
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        req = urllib.request.Request(self.endpoint, data=json.dumps(body).encode("utf-8"), headers=headers)
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                data = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise AdapterError(f"completion request failed: {exc}") from None
        try:
            choice = data["choices"][0]
            return choice.get("text") if "text" in choice else choice["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise AdapterError("unexpected completion response shape") from None


def collect_attempts(problems: Sequence[Problem], adapter: ProverAdapter, workers: int = 1) -> list[Attempt]:
    """Query ``adapter`` ``adapter.attempts`` times per problem.  Failures become
    attempts without text rather than aborting the batch."""
    jobs = [(p, i) for p in problems for i in range(adapter.attempts)]

    def one(job):
        p, i = job
        prompt = render_prompt(PromptTask(adapter.template, render_statement(p).formal_statement, problem_id=p.id))
        try:
            return Attempt(p.id, i, adapter.complete(prompt), adapter.model)
        except AdapterError as exc:
            return Attempt(p.id, i, None, adapter.model, failure=str(exc))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(one, jobs))


# ------------------------------------------------------------------ batches

class Journal:
    """Append-only JSONL of finished records, shared by worker threads."""

    def __init__(self, path: str | os.PathLike | None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def load(self) -> dict[tuple[str, int], EvalRecord]:
        done: dict[tuple[str, int], EvalRecord] = {}
        if self.path is None or not self.path.exists():
            return done
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    rec = EvalRecord.from_record(json.loads(line))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    continue          # torn write from an interrupted run
                done[rec.key] = rec
        return done

    def append(self, rec: EvalRecord) -> None:
        if self.path is None:
            return
        line = json.dumps(rec.to_record(), ensure_ascii=False, sort_keys=True) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                # a torn line from a killed run would swallow this record
                if fh.tell() > 0:
                    with open(self.path, "rb") as rf:
                        rf.seek(-1, os.SEEK_END)
                        if rf.read(1) != b"\n":
                            fh.write("\n")
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())


def _default_verifier(toolchain: Toolchain, timeout: float, mode: str) -> Verifier:
    def run(artifact, problem_id, attempt, model):
        return verify(artifact, toolchain, timeout, mode, problem_id, attempt, model)
    return run


def run_batch(problems: Mapping[str, Problem] | Sequence[Problem], attempts: Sequence[Attempt] | None = None, *,
              adapter: ProverAdapter | None = None, toolchain: Toolchain | None = None, workers: int = 1,
              journal: str | os.PathLike | None = None, resume: bool = True, timeout: float = DEFAULT_TIMEOUT,
              mode: str = "proof", verifier: Verifier | None = None) -> list[EvalRecord]:
    """Verify every attempt, at most ``workers`` at a time.

    Pairs already in the journal are returned from it without recompiling
    when ``resume`` is set.  Records come back sorted by (problem, attempt).
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if not isinstance(problems, Mapping):
        problems = {p.id: p for p in problems}
    if adapter is not None:
        attempts = list(attempts or []) + collect_attempts(list(problems.values()), adapter, workers)
    attempts = list(attempts or [])
    unknown = sorted({a.problem_id for a in attempts} - problems.keys())
    if unknown:
        raise KeyError(f"attempts reference unknown problem(s): {', '.join(unknown[:5])}")
    if verifier is None:
        if toolchain is None:
            toolchain = Toolchain.resolve()
        verifier = _default_verifier(toolchain, timeout, mode)

    log = Journal(journal)
    if journal is not None and not resume and log.path.exists():
        log.path.unlink()
    done = log.load() if resume else {}

    def one(a: Attempt) -> EvalRecord:
        if a.proof_text is None:
            rec = EvalRecord(a.problem_id, a.attempt_id, False, 0.0, a.failure or "no completion", False, a.model)
        else:
            try:
                art = assemble_candidate(problems[a.problem_id], a.proof_text)
            except ExtractionError as exc:
                rec = EvalRecord(a.problem_id, a.attempt_id, False, 0.0, f"extraction: {exc}", False, a.model)
            else:
                rec = verifier(art, a.problem_id, a.attempt_id, a.model)
        log.append(rec)
        return rec

    results = [done[(a.problem_id, a.attempt_id)] for a in attempts if (a.problem_id, a.attempt_id) in done]
    todo = [a for a in attempts if (a.problem_id, a.attempt_id) not in done]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results += list(pool.map(one, todo))
    return sorted(results, key=lambda r: r.key)


def read_records(path) -> list[EvalRecord]:
    return sorted(Journal(path).load().values(), key=lambda r: r.key)
