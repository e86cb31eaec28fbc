"""Iterative regex generation with staged validation.

A pluggable backend proposes candidate patterns; each candidate runs through
three gates in order: a match debug check against the source indicator, an
audit that every keep component appears literally while no discard component
does, and an over-generalization probe with ten seeded random strings.  A
failing debug or audit feeds a diagnostic back to the backend for up to ten
attempts per stage; an over-general pattern (or an exhausted stage) restarts
the whole workflow, up to a configurable number of passes.
"""

from __future__ import annotations

import json
import os
import random
import re
import string
from dataclasses import dataclass, field
from pathlib import Path

from . import dialect
from .capture import GroupAnnotation
from .normalize import IocKind

STAGE_DEBUG = "debug"
STAGE_NONCAPTURE = "noncapture"
STAGE_OVERGEN = "overgen"

RANDOM_PROBE_COUNT = 10
_PROBE_ALPHABET = "".join(c for c in string.printable if not c.isspace())


class BackendError(RuntimeError):
    """Transport or protocol failure while asking a backend for a candidate."""


# -- validation checks ---------------------------------------------------


@dataclass
class DebugResult:
    ok: bool
    syntax_error: str = ""
    matched_prefix: str = ""
    failing_token: str = ""
    target_offset: int = 0

    def describe(self) -> str:
        if self.ok:
            return "match ok"
        if self.syntax_error:
            return self.syntax_error
        return (
            "pattern does not match the indicator; "
            f"longest matching pattern prefix: {self.matched_prefix!r} "
            f"(reaches target offset {self.target_offset}); "
            f"first failing pattern token: {self.failing_token!r}"
        )


def _probe_tokens(tokens: list[dialect.Token]) -> list[dialect.Token]:
    """Per-character granularity for literal tokens, so the failing point
    inside a literal run can be named."""
    out: list[dialect.Token] = []
    for tok in tokens:
        if tok.kind == dialect.LITERAL and len(tok.text) > 1:
            out.extend(
                dialect.Token(dialect.LITERAL, c, tok.pos + j)
                for j, c in enumerate(tok.text)
            )
        else:
            out.append(tok)
    return out


def debug_check(pattern: str, target: str) -> DebugResult:
    """Does the pattern match the indicator?  On failure, report the longest
    compilable token-prefix that still matches and the first failing token."""
    try:
        rx = dialect.compile_pattern(pattern)
    except dialect.DialectError as exc:
        return DebugResult(ok=False, syntax_error=str(exc))
    if rx.search(target) is not None:
        return DebugResult(ok=True)

    tokens = _probe_tokens(dialect.tokenize(pattern))
    matched_prefix = ""
    target_offset = 0
    failing = tokens[0].text if tokens else ""
    depth = 0
    for k, tok in enumerate(tokens):
        if tok.kind == dialect.GROUP_OPEN:
            depth += 1
        elif tok.kind == dialect.GROUP_CLOSE:
            depth -= 1
        if depth != 0:
            continue
        prefix = pattern[: tok.end]
        try:
            rx_prefix = re.compile(prefix)
        except re.error:
            continue
        m = rx_prefix.search(target)
        if m is not None:
            matched_prefix = prefix
            target_offset = m.end()
            failing = tokens[k + 1].text if k + 1 < len(tokens) else ""
        else:
            failing = tok.text
            break
    return DebugResult(
        ok=False,
        matched_prefix=matched_prefix,
        failing_token=failing,
        target_offset=target_offset,
    )


@dataclass
class NoncaptureResult:
    ok: bool
    missing_keep: list[str] = field(default_factory=list)
    present_discard: list[str] = field(default_factory=list)

    def describe(self) -> str:
        if self.ok:
            return "group audit ok"
        parts = []
        if self.missing_keep:
            parts.append(
                "capture components missing from the pattern: "
                + ", ".join(repr(c) for c in self.missing_keep)
            )
        if self.present_discard:
            parts.append(
                "mutable components still present literally: "
                + ", ".join(repr(c) for c in self.present_discard)
            )
        return "; ".join(parts)


def noncapture_check(pattern: str, annotation: GroupAnnotation) -> NoncaptureResult:
    """Every keep component must appear as a literal (escaping-normalized,
    case-insensitive) substring; no discard component may."""
    keeps = annotation.keep_components
    if not keeps:
        raise ValueError("noncapture_check requires an annotation with keep components")
    runs = [r.text.casefold() for r in dialect.literal_runs(dialect.tokenize(pattern))]

    missing = [
        comp for comp in keeps if not any(comp.casefold() in run for run in runs)
    ]
    present = [
        comp
        for comp in annotation.discard_components
        if any(comp.casefold() in run for run in runs)
    ]
    return NoncaptureResult(ok=not missing and not present, missing_keep=missing,
                            present_discard=present)


@dataclass
class OvergenResult:
    ok: bool
    probes: list[str] = field(default_factory=list)
    matched: list[str] = field(default_factory=list)

    def describe(self) -> str:
        if self.ok:
            return f"over-generalization probe ok ({len(self.matched)}/{len(self.probes)} random strings matched)"
        return (
            "pattern is overly generic: it matches all "
            f"{len(self.probes)} random probe strings"
        )


def random_probe_strings(
    rng_seed: int, keep_components: list[str] | tuple[str, ...] = ()
) -> list[str]:
    """Ten seeded random strings (8-64 printable non-whitespace chars) that
    contain no keep component, by rejection sampling."""
    rng = random.Random(rng_seed)
    folded = [c.casefold() for c in keep_components if c]
    probes: list[str] = []
    while len(probes) < RANDOM_PROBE_COUNT:
        length = rng.randint(8, 64)
        candidate = "".join(rng.choice(_PROBE_ALPHABET) for _ in range(length))
        if any(comp in candidate.casefold() for comp in folded):
            continue
        probes.append(candidate)
    return probes


def overgen_check(
    pattern: str,
    rng_seed: int,
    keep_components: list[str] | tuple[str, ...] = (),
) -> OvergenResult:
    """Fail only when the pattern matches every one of the ten random strings."""
    rx = dialect.compile_pattern(pattern)
    probes = random_probe_strings(rng_seed, keep_components)
    matched = [s for s in probes if rx.search(s) is not None]
    return OvergenResult(ok=len(matched) < len(probes), probes=probes, matched=matched)


# -- prompt construction -------------------------------------------------


def build_prompt(
    annotation: GroupAnnotation,
    previous_pattern: str = "",
    diagnostic: str = "",
    prior_failures: int = 0,
) -> str:
    """Deterministic prompt text for a backend; byte-stable for golden tests."""
    rec = annotation.record
    lines = [
        "Generate one regular expression for the following indicator string.",
        "",
        "Indicator (the regex must match it):",
        f"  {rec.normalized}",
        "",
        "Invariant components (each must appear literally in the regex):",
    ]
    lines += [f"  - {comp}" for comp in annotation.keep_components]
    lines += ["", "Mutable components (none of these may appear literally):"]
    discards = annotation.discard_components
    lines += [f"  - {comp}" for comp in discards] if discards else ["  (none)"]
    lines += ["", "Allowed regex syntax:"]
    lines += [f"  {rule}" for rule in dialect.DIALECT_RULES]
    if prior_failures:
        lines += [
            "",
            f"Note: {prior_failures} earlier attempt(s) were discarded by validation; start fresh.",
        ]
    if diagnostic:
        lines += [
            "",
            "Feedback on the previous attempt:",
            f"  pattern: {previous_pattern}",
            f"  problem: {diagnostic}",
        ]
    lines += ["", "Respond with the regular expression only."]
    return "\n".join(lines)


# -- backends -------------------------------------------------------------


class GeneratorBackend:
    """One candidate pattern per call, from (annotation, prompt)."""

    kind = "abstract"

    def propose(self, annotation: GroupAnnotation, prompt: str) -> str:
        raise NotImplementedError


def render_template(annotation: GroupAnnotation) -> str:
    """Deterministic fallback pattern built from the capture sequences.

    Path/registry sequences join with an escaped backslash (plus a trailing
    one when the run is followed by further components); command sequences
    join with ``.*`` since argument values may sit between parameters.
    """
    rec = annotation.record
    if rec.kind is IocKind.COMMAND_LINE:
        bodies = [
            ".*".join(re.escape(comp) for comp in seq)
            for seq in annotation.capture_sequences
        ]
        return "(?i).*" + ".*".join(bodies) + ".*"

    seq = annotation.capture_sequences[0]
    body = "\\\\".join(re.escape(comp) for comp in seq)
    last_keep = max(
        (i for i, label in enumerate(annotation.labels) if label == "keep"),
        default=-1,
    )
    if last_keep != -1 and last_keep < len(rec.components) - 1:
        body += "\\\\"
    return "(?i).*" + body + ".*"


class TemplateBackend(GeneratorBackend):
    """Offline deterministic backend emitting the template pattern."""

    kind = "template_fallback"

    def propose(self, annotation: GroupAnnotation, prompt: str) -> str:
        return render_template(annotation)


class ScriptedBackend(GeneratorBackend):
    """Replays a fixed list of emissions; for tests and offline dry-runs.

    With ``per_record`` the script restarts for every distinct record (keyed
    by its source_id).  When the script is exhausted, delegates to ``fallback``
    if given, otherwise repeats the last emission.
    """

    kind = "scripted_mock"

    def __init__(
        self,
        emissions: list[str],
        per_record: bool = False,
        fallback: GeneratorBackend | None = None,
    ):
        if not emissions and fallback is None:
            raise ValueError("scripted backend needs at least one emission")
        self.emissions = list(emissions)
        self.per_record = per_record
        self.fallback = fallback
        self._cursor = 0
        self._cursors: dict[str, int] = {}
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, list):
            return cls(data)
        fallback = TemplateBackend() if data.get("fallback") == "template" else None
        return cls(
            data["emissions"],
            per_record=bool(data.get("per_record", False)),
            fallback=fallback,
        )

    def propose(self, annotation: GroupAnnotation, prompt: str) -> str:
        self.calls += 1
        if self.per_record:
            key = annotation.record.source_id or annotation.record.raw
            index = self._cursors.get(key, 0)
            self._cursors[key] = index + 1
        else:
            index = self._cursor
            self._cursor += 1
        if index < len(self.emissions):
            return self.emissions[index]
        if self.fallback is not None:
            return self.fallback.propose(annotation, prompt)
        return self.emissions[-1]


class RemoteBackend(GeneratorBackend):
    """HTTP backend: POSTs the prompt, expects ``{"pattern": "..."}`` back.

    The credential is read from the environment, never from config files.
    """

    kind = "remote_llm"

    def __init__(
        self,
        endpoint: str,
        model: str = "",
        temperature: float = 0.2,
        api_key_env: str = "IOC2REGEX_API_KEY",
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.api_key_env = api_key_env
        self.timeout = timeout

    def propose(self, annotation: GroupAnnotation, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.model,
            "prompt": prompt,
            "temperature": self.temperature,
        }
        try:
            resp = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
            resp.raise_for_status()
            data = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise BackendError(f"remote backend failure: {exc}") from exc
        pattern = data.get("pattern")
        if not isinstance(pattern, str) or not pattern:
            raise BackendError("remote backend returned no pattern")
        return pattern.strip()


# -- workflow --------------------------------------------------------------


@dataclass
class Attempt:
    restart: int
    stage: str
    pattern: str
    verdict: str  # "pass" | "fail" | "error"
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "restart": self.restart,
            "stage": self.stage,
            "pattern": self.pattern,
            "verdict": self.verdict,
            "diagnostic": self.diagnostic,
        }


@dataclass
class WorkflowTrace:
    attempts: list[Attempt] = field(default_factory=list)
    restarts: int = 0
    final: str | None = None

    def stage_counts(self, restart: int) -> dict[str, int]:
        counts: dict[str, int] = {}
        for att in self.attempts:
            if att.restart == restart:
                counts[att.stage] = counts.get(att.stage, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "attempts": [a.to_dict() for a in self.attempts],
            "restarts": self.restarts,
            "final": self.final,
        }


def generate(
    annotation: GroupAnnotation,
    backend: GeneratorBackend,
    rng_seed: int = 0,
    max_iterations: int = 10,
    restart_cap: int = 5,
    validate_groups: bool = True,
) -> tuple[str | None, WorkflowTrace]:
    """Run the staged workflow; returns the first pattern passing all gates.

    Per workflow pass, each of the debug and group-audit stages checks at most
    ``max_iterations`` candidates before forcing a restart; the whole workflow
    runs at most ``restart_cap`` passes.
    """
    if not annotation.has_capture_groups:
        raise ValueError("generate() requires an annotation with capture groups")
    target = annotation.record.normalized
    keeps = annotation.keep_components
    trace = WorkflowTrace()

    for restart in range(restart_cap):
        trace.restarts = restart
        prompt = build_prompt(annotation, prior_failures=restart)
        try:
            pattern = backend.propose(annotation, prompt)
        except BackendError as exc:
            trace.attempts.append(
                Attempt(restart, STAGE_DEBUG, "", "error", f"backend error: {exc}")
            )
            continue

        def run_stage(stage: str, checker) -> bool:
            """True when the stage passed; False forces a restart."""
            nonlocal pattern
            for attempt_no in range(max_iterations):
                result = checker(pattern)
                trace.attempts.append(
                    Attempt(
                        restart,
                        stage,
                        pattern,
                        "pass" if result.ok else "fail",
                        result.describe(),
                    )
                )
                if result.ok:
                    return True
                if attempt_no == max_iterations - 1:
                    return False
                feedback = build_prompt(
                    annotation,
                    previous_pattern=pattern,
                    diagnostic=result.describe(),
                    prior_failures=restart,
                )
                try:
                    pattern = backend.propose(annotation, feedback)
                except BackendError as exc:
                    trace.attempts.append(
                        Attempt(
                            restart, stage, pattern, "error", f"backend error: {exc}"
                        )
                    )
                    return False
            return False

        if not run_stage(STAGE_DEBUG, lambda p: debug_check(p, target)):
            continue

        if validate_groups:

            def audit(p: str):
                regression = debug_check(p, target)
                if not regression.ok:
                    return regression
                return noncapture_check(p, annotation)

            if not run_stage(STAGE_NONCAPTURE, audit):
                continue

        overgen = overgen_check(pattern, rng_seed, keeps)
        trace.attempts.append(
            Attempt(
                restart,
                STAGE_OVERGEN,
                pattern,
                "pass" if overgen.ok else "fail",
                overgen.describe(),
            )
        )
        if overgen.ok:
            trace.final = pattern
            return pattern, trace

    return None, trace


def single_shot(
    annotation: GroupAnnotation, backend: GeneratorBackend
) -> tuple[str | None, WorkflowTrace]:
    """Ablation variant: one backend call, no validation loops.

    A non-compiling emission yields no pattern since there is no debug loop
    to repair it.
    """
    trace = WorkflowTrace()
    prompt = build_prompt(annotation)
    try:
        pattern = backend.propose(annotation, prompt)
    except BackendError as exc:
        trace.attempts.append(
            Attempt(0, STAGE_DEBUG, "", "error", f"backend error: {exc}")
        )
        return None, trace
    try:
        dialect.compile_pattern(pattern)
    except dialect.DialectError as exc:
        trace.attempts.append(Attempt(0, STAGE_DEBUG, pattern, "fail", str(exc)))
        return None, trace
    trace.attempts.append(Attempt(0, STAGE_DEBUG, pattern, "pass", "single shot"))
    trace.final = pattern
    return pattern, trace
