import re
from pathlib import Path

import pytest

from ioc2regex.capture import GroupAnnotation
from ioc2regex.generation import (
    BackendError,
    RemoteBackend,
    ScriptedBackend,
    TemplateBackend,
    build_prompt,
    debug_check,
    generate,
    noncapture_check,
    overgen_check,
    random_probe_strings,
    render_template,
    single_shot,
)
from ioc2regex.normalize import IocKind, IocRecord

GOLDEN = Path(__file__).parent / "data" / "golden_prompt.txt"

GOOD_PATH_PATTERN = r"(?i).*Users\\Public\\.*"


class TestDebugCheck:
    def test_direct_match(self, path_record):
        assert debug_check(r"(?i).*Users\\Public.*", path_record.normalized).ok

    def test_failing_token_and_prefix(self, path_record):
        res = debug_check("Users/Public", path_record.normalized)
        assert not res.ok
        assert res.matched_prefix == "Users"
        assert res.failing_token == "/"
        assert res.target_offset == len(r"C:\Users")

    def test_syntax_diagnostic(self):
        res = debug_check("(unclosed", "anything")
        assert not res.ok
        assert "syntax error at offset" in res.describe()

    def test_agrees_with_engine(self, path_record, schtasks_record):
        patterns = [
            r"(?i).*Users\\Public\\.*",
            r"(?i).*schtasks.*",
            r"NoSuchLiteral",
            r"(?i)11\.bat$",
            r"[a-z]+\\",
        ]
        for target in (path_record.normalized, schtasks_record.normalized):
            for pattern in patterns:
                assert debug_check(pattern, target).ok == bool(
                    re.search(pattern, target)
                )


class TestNoncaptureCheck:
    def test_pass_on_clean_pattern(self, path_annotation):
        assert noncapture_check(GOOD_PATH_PATTERN, path_annotation).ok

    def test_discard_literal_flagged(self, path_annotation):
        res = noncapture_check(r"(?i).*Users\\Public\\11\.bat", path_annotation)
        assert not res.ok
        assert res.present_discard == ["11.bat"]

    def test_missing_keep_flagged(self, path_annotation):
        res = noncapture_check(r"(?i).*Public.*", path_annotation)
        assert not res.ok
        assert res.missing_keep == ["Users"]

    def test_empty_keep_set_rejected(self):
        rec = IocRecord(raw="x", kind=IocKind.FILE_PATH, normalized="x", components=["x"])
        ann = GroupAnnotation(record=rec, labels=["discard"], capture_sequences=[])
        with pytest.raises(ValueError):
            noncapture_check(".*", ann)


class TestOvergenCheck:
    def test_universal_pattern_fails(self):
        res = overgen_check(".*", 0)
        assert not res.ok
        assert len(res.matched) == 10

    def test_specific_pattern_passes(self):
        res = overgen_check(r"(?i).*Users\\Public.*", 0, ["Users", "Public"])
        assert res.ok
        assert res.matched == []

    def test_nine_of_ten_passes(self):
        probes = random_probe_strings(0)
        pattern = "|".join(re.escape(s) for s in probes[:9])
        res = overgen_check(pattern, 0)
        assert len(res.matched) == 9
        assert res.ok

    def test_probes_avoid_keep_components(self):
        probes = random_probe_strings(3, ["abc", "Q"])
        assert len(probes) == 10
        for probe in probes:
            assert 8 <= len(probe) <= 64
            assert "abc" not in probe.casefold()
            assert "q" not in probe.casefold()

    def test_deterministic(self):
        assert random_probe_strings(5) == random_probe_strings(5)
        assert random_probe_strings(5) != random_probe_strings(6)


class TestBuildPrompt:
    def test_first_attempt_has_no_feedback(self, path_annotation):
        prompt = build_prompt(path_annotation)
        assert "C:\\Users\\Public\\11.bat" in prompt
        assert "- Users" in prompt and "- Public" in prompt
        assert "- 11.bat" in prompt
        assert "Feedback" not in prompt

    def test_debug_diagnostic_included_verbatim(self, path_annotation, path_record):
        diag = debug_check("Users/Public", path_record.normalized).describe()
        prompt = build_prompt(
            path_annotation, previous_pattern="Users/Public", diagnostic=diag
        )
        assert diag in prompt

    def test_noncapture_violations_listed(self, path_annotation):
        diag = noncapture_check(
            r"(?i).*Users\\Public\\11\.bat", path_annotation
        ).describe()
        prompt = build_prompt(path_annotation, diagnostic=diag)
        assert "'11.bat'" in prompt

    def test_golden_bytes(self, path_annotation):
        assert build_prompt(path_annotation) == GOLDEN.read_text(encoding="utf-8")


class TestTemplateBackend:
    def test_path_template(self, path_annotation):
        assert render_template(path_annotation) == GOOD_PATH_PATTERN

    def test_template_passes_all_stages(self, path_annotation):
        pattern, trace = generate(path_annotation, TemplateBackend(), rng_seed=0)
        assert pattern == GOOD_PATH_PATTERN
        assert [a.stage for a in trace.attempts] == ["debug", "noncapture", "overgen"]
        assert trace.restarts == 0

    def test_trailing_delimiter_only_when_run_is_interior(self, store):
        from ioc2regex import annotate, make_record

        rec = make_record(
            r"ProgramData\Microsoft\Windows\StartMenu\Programs\StartUp", store
        )
        ann = annotate(rec, store)
        pattern = render_template(ann)
        assert pattern.endswith("StartUp.*")
        assert debug_check(pattern, rec.normalized).ok

    def test_command_template(self, schtasks_annotation, schtasks_record):
        pattern = render_template(schtasks_annotation)
        assert pattern.startswith("(?i).*schtasks.*")
        assert debug_check(pattern, schtasks_record.normalized).ok
        assert noncapture_check(pattern, schtasks_annotation).ok


class TestWorkflow:
    def test_broken_then_fixed(self, path_annotation):
        backend = ScriptedBackend(["Users/Public", GOOD_PATH_PATTERN])
        pattern, trace = generate(path_annotation, backend, rng_seed=0)
        assert pattern == GOOD_PATH_PATTERN
        debug_attempts = [a for a in trace.attempts if a.stage == "debug"]
        assert [a.verdict for a in debug_attempts] == ["fail", "pass"]
        assert trace.restarts == 0

    def test_universal_forever_never_finalizes(self, path_annotation):
        backend = ScriptedBackend([".*"])
        pattern, trace = generate(
            path_annotation, backend, rng_seed=0, restart_cap=5
        )
        assert pattern is None
        assert trace.final is None
        assert trace.restarts == 4  # five passes, four returns to the start
        # ".*" matches the indicator, so it dies in the group audit: it carries
        # no keep literal; it never reaches the overgen stage
        audits = [a for a in trace.attempts if a.stage == "noncapture"]
        assert audits and all(a.verdict == "fail" for a in audits)
        assert not any(a.stage == "overgen" for a in trace.attempts)

    def test_universal_forever_without_group_audit_fails_overgen(self, path_annotation):
        # with the audit stage disabled (the '-CR' ablation), the same backend
        # is caught by the ten-random-string probe instead
        backend = ScriptedBackend([".*"])
        pattern, trace = generate(
            path_annotation, backend, rng_seed=0, restart_cap=3, validate_groups=False
        )
        assert pattern is None
        overgens = [a for a in trace.attempts if a.stage == "overgen"]
        assert len(overgens) == 3 and all(a.verdict == "fail" for a in overgens)

    def test_eventually_correct_at_tenth_attempt(self, path_annotation):
        backend = ScriptedBackend(["(bad"] * 9 + [GOOD_PATH_PATTERN])
        pattern, trace = generate(
            path_annotation, backend, rng_seed=0, max_iterations=10
        )
        assert pattern == GOOD_PATH_PATTERN
        assert trace.restarts == 0
        assert trace.stage_counts(0)["debug"] == 10

    def test_correct_after_restart(self, path_annotation):
        backend = ScriptedBackend(["(bad"] * 10 + [GOOD_PATH_PATTERN])
        pattern, trace = generate(path_annotation, backend, rng_seed=0)
        assert pattern == GOOD_PATH_PATTERN
        assert trace.restarts == 1
        assert trace.stage_counts(0) == {"debug": 10}

    def test_backend_error_recorded_and_restarts(self, path_annotation):
        class Flaky(ScriptedBackend):
            def __init__(self):
                super().__init__([GOOD_PATH_PATTERN])
                self.first = True

            def propose(self, annotation, prompt):
                if self.first:
                    self.first = False
                    raise BackendError("boom")
                return super().propose(annotation, prompt)

        pattern, trace = generate(path_annotation, Flaky(), rng_seed=0)
        assert pattern == GOOD_PATH_PATTERN
        assert trace.attempts[0].verdict == "error"
        assert "boom" in trace.attempts[0].diagnostic
        assert trace.restarts == 1

    def test_loop_and_call_bounds(self, path_annotation):
        cap, iters = 4, 7
        backend = ScriptedBackend(["(never"])
        pattern, trace = generate(
            path_annotation, backend, rng_seed=0, max_iterations=iters, restart_cap=cap
        )
        assert pattern is None
        for restart in range(cap):
            for stage, count in trace.stage_counts(restart).items():
                assert count <= iters, (restart, stage)
        assert trace.restarts <= cap
        assert backend.calls <= cap * (1 + iters + iters) + cap

    def test_deterministic_for_fixed_seed(self, path_annotation):
        runs = [
            generate(path_annotation, TemplateBackend(), rng_seed=42) for _ in range(2)
        ]
        assert runs[0][0] == runs[1][0]
        assert runs[0][1].to_dict() == runs[1][1].to_dict()

    def test_final_pattern_invariants(self, path_annotation, schtasks_annotation):
        for ann in (path_annotation, schtasks_annotation):
            pattern, _ = generate(ann, TemplateBackend(), rng_seed=1)
            assert pattern is not None
            assert debug_check(pattern, ann.record.normalized).ok
            assert noncapture_check(pattern, ann).ok
            assert overgen_check(pattern, 1, ann.keep_components).ok

    def test_requires_capture_groups(self):
        rec = IocRecord(raw="x", kind=IocKind.FILE_PATH, normalized="x", components=["x"])
        ann = GroupAnnotation(record=rec, labels=["discard"], capture_sequences=[])
        with pytest.raises(ValueError):
            generate(ann, TemplateBackend())


class TestSingleShot:
    def test_non_compiling_yields_nothing(self, path_annotation):
        pattern, trace = single_shot(path_annotation, ScriptedBackend(["(broken"]))
        assert pattern is None
        assert trace.final is None

    def test_compiling_emission_accepted_unvalidated(self, path_annotation):
        # single shot skips the debug/audit/overgen loops entirely
        pattern, _ = single_shot(path_annotation, ScriptedBackend([".*"]))
        assert pattern == ".*"


class TestScriptedBackend:
    def test_repeat_last_when_exhausted(self, path_annotation):
        backend = ScriptedBackend(["a", "b"])
        out = [backend.propose(path_annotation, "") for _ in range(4)]
        assert out == ["a", "b", "b", "b"]

    def test_per_record_cursor(self, path_annotation, schtasks_annotation):
        backend = ScriptedBackend(["one", "two"], per_record=True)
        assert backend.propose(path_annotation, "") == "one"
        assert backend.propose(schtasks_annotation, "") == "one"
        assert backend.propose(path_annotation, "") == "two"

    def test_fallback_delegation(self, path_annotation):
        backend = ScriptedBackend(["(bad"], per_record=True, fallback=TemplateBackend())
        assert backend.propose(path_annotation, "") == "(bad"
        assert backend.propose(path_annotation, "") == GOOD_PATH_PATTERN

    def test_from_file(self, tmp_path, path_annotation):
        replay = tmp_path / "replay.json"
        replay.write_text('{"emissions": ["x", "y"], "per_record": true}')
        backend = ScriptedBackend.from_file(replay)
        assert backend.per_record
        assert backend.propose(path_annotation, "") == "x"


class TestRemoteBackend:
    def test_transport_failure_is_backend_error(self, path_annotation):
        backend = RemoteBackend(endpoint="http://127.0.0.1:9/none", timeout=0.2)
        with pytest.raises(BackendError):
            backend.propose(path_annotation, "prompt")
