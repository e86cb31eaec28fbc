import random
import re
import string

import pytest

from ioc2regex.capture import GroupAnnotation
from ioc2regex.generation import ScriptedBackend, TemplateBackend
from ioc2regex.grading import GradingError, grade, select_best
from ioc2regex.normalize import IocKind, IocRecord

from oracles import recount_score

STARTUP_EXEMPLAR = (
    r"(?i).*ProgramData\\Microsoft\\Windows\\StartMenu\\Programs\\StartUp.*"
)


def annotation_for(components, keep_mask, kind=IocKind.FILE_PATH):
    joiner = " " if kind is IocKind.COMMAND_LINE else "\\"
    rec = IocRecord(
        raw=joiner.join(components),
        kind=kind,
        normalized=joiner.join(components),
        components=list(components),
    )
    labels = ["keep" if m else "discard" for m in keep_mask]
    seq = [c for c, m in zip(components, keep_mask) if m]
    return GroupAnnotation(
        record=rec, labels=labels, capture_sequences=[seq] if seq else []
    )


class TestGrade:
    def test_startup_exemplar_scores_six(self, store):
        from ioc2regex import annotate, make_record

        rec = make_record(
            r"ProgramData\Microsoft\Windows\StartMenu\Programs\StartUp", store
        )
        ann = annotate(rec, store)
        assert len(ann.keep_components) == 6
        cand = grade(STARTUP_EXEMPLAR, ann)
        assert (cand.n_cg, cand.n_wc, cand.score) == (6, 0, 6)

    def test_optional_group_occurrence_not_counted(self):
        ann = annotation_for(["Users", "Public"], [True, True])
        cand = grade(r"(?:Users)?\\Public", ann)
        assert cand.n_cg == 1

    def test_interior_wildcard_penalty(self):
        ann = annotation_for(["Keep1"], [True])
        cand = grade(r"(?i).*xy.*ab.*", ann)
        assert (cand.n_cg, cand.n_wc, cand.score) == (0, 1, -1)

    def test_foreign_literal_run_penalty(self):
        ann = annotation_for(["Users"], [True])
        cand = grade(r"(?i).*Users\\evilpayload.*", ann)
        assert cand.n_cg == 1
        assert cand.n_wc == 1  # "evilpayload" is a foreign literal run
        assert cand.score == 0

    def test_short_glue_not_penalized(self):
        ann = annotation_for(["Users", "Public"], [True, True])
        cand = grade(r"(?i).*Users\\Public\\.*", ann)
        assert (cand.n_cg, cand.n_wc, cand.score) == (2, 0, 2)

    def test_non_compiling_pattern_rejected(self):
        ann = annotation_for(["Users"], [True])
        with pytest.raises(GradingError):
            grade("(open", ann)

    def test_adding_keep_literal_raises_score_by_one(self):
        ann = annotation_for(["Users", "Public"], [True, True])
        without = grade(r"(?i).*Users\\.*", ann)
        with_both = grade(r"(?i).*Users\\Public.*", ann)
        assert with_both.score == without.score + 1

    def test_wrapping_keep_in_optional_drops_ncg_by_one(self):
        ann = annotation_for(["Users", "Public"], [True, True])
        plain = grade(r"Users\\Public", ann)
        wrapped = grade(r"(?:Users)?\\Public", ann)
        assert wrapped.n_cg == plain.n_cg - 1

    def test_ncg_bounded_by_keep_count(self):
        ann = annotation_for(["Users"], [True])
        cand = grade(r"Users.*Users.*Users", ann)
        assert cand.n_cg == 1


def random_annotation_and_pattern(rng):
    words = ["Users", "Public", "Windows", "System32", "Temp", "Run"]
    keeps = rng.sample(words, rng.randint(1, 4))
    discards = ["".join(rng.choices(string.ascii_lowercase, k=5)) for _ in range(2)]
    components = keeps + discards
    rng.shuffle(components)
    mask = [c in keeps for c in components]
    ann = annotation_for(components, mask)

    parts = ["(?i)"] if rng.random() < 0.7 else []
    if rng.random() < 0.8:
        parts.append(".*")
    for comp in rng.sample(keeps, rng.randint(0, len(keeps))):
        body = re.escape(comp)
        roll = rng.random()
        if roll < 0.2:
            parts.append(f"(?:{body})?")
        elif roll < 0.3:
            parts.append(f"({body})")
        else:
            parts.append(body)
        parts.append(rng.choice([r"\\", ".*", r"\w+", "", r"[a-z]+", r"\d{1,3}"]))
    if rng.random() < 0.3:
        parts.append("".join(rng.choices(string.ascii_lowercase, k=rng.randint(2, 6))))
    if rng.random() < 0.8:
        parts.append(".*")
    return ann, "".join(parts)


def test_score_matches_independent_recount():
    rng = random.Random(1234)
    checked = 0
    for _ in range(200):
        ann, pattern = random_annotation_and_pattern(rng)
        try:
            cand = grade(pattern, ann)
        except GradingError:
            continue
        n_cg, n_wc = recount_score(pattern, ann.keep_components)
        assert (cand.n_cg, cand.n_wc) == (n_cg, n_wc), pattern
        assert cand.score == n_cg - n_wc
        checked += 1
    assert checked >= 150


class TestSelectBest:
    def test_highest_score_wins(self, path_annotation):
        # scores: the discard literal pattern scores lower than the clean one
        backend = ScriptedBackend(
            [
                r"(?i).*Users\\.*",            # n_cg 1
                r"(?i).*Users\\Public\\.*",    # n_cg 2  <- winner
                r"(?i).*Public.*",             # missing Users, dies in audit
                r"(?i).*Users\\Public.*",      # n_cg 2, longer? same len comparison
                r"(?i).*Users\\Public\\.*",
            ]
        )
        best, candidates = select_best(
            path_annotation, backend, k=5, rng_seed=0, restart_cap=1
        )
        assert best is not None
        assert best.score == max(c.score for c in candidates)

    def test_tie_breaks_shorter_then_lexicographic(self, path_annotation):
        backend = ScriptedBackend(
            [
                r"(?i).*Users\\Public\\.*",
                r"(?i).*Public\\.*Users\\.*",  # same n_cg, extra wildcard
            ]
        )
        best, candidates = select_best(
            path_annotation, backend, k=2, rng_seed=0, restart_cap=1
        )
        top = max(c.score for c in candidates)
        tied = [c for c in candidates if c.score == top]
        assert best.pattern == sorted(tied, key=lambda c: (len(c.pattern), c.pattern))[0].pattern

    def test_all_failures_give_none(self, path_annotation):
        best, candidates = select_best(
            path_annotation,
            ScriptedBackend(["(bad"]),
            k=3,
            rng_seed=0,
            max_iterations=2,
            restart_cap=1,
        )
        assert best is None
        assert candidates == []

    def test_deterministic_backend_collapses(self, path_annotation):
        best, candidates = select_best(
            path_annotation, TemplateBackend(), k=5, rng_seed=3
        )
        assert len({c.pattern for c in candidates}) == 1
        assert best.pattern == candidates[0].pattern
        assert len(candidates) == 5

    def test_best_score_at_least_every_candidate(self, path_annotation):
        backend = ScriptedBackend(
            [r"(?i).*Users\\Public\\.*", r"(?i).*Users\\.*"]
        )
        best, candidates = select_best(
            path_annotation, backend, k=2, rng_seed=0, restart_cap=1
        )
        assert all(best.score >= c.score for c in candidates)
