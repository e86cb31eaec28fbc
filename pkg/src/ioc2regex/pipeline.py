"""Batch orchestration: raw indicator lists in, graded regex products out.

Stages per indicator: classify/preprocess/segment, capture-group finding,
false-positive filtering, k-candidate generation with grading, then optional
evaluation against ground-truth files.  Ablation modes disable the
capture-finding step ("-CR"), the reasoning workflow ("C-R"), or both
("-C-R").  All file artifacts are JSON with sorted keys so identical
config + seed + deterministic backend reproduce byte-identical outputs.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import evaluation
from .capture import GroupAnnotation, annotate, KEEP
from .generation import (
    GeneratorBackend,
    RemoteBackend,
    ScriptedBackend,
    TemplateBackend,
)
from .grading import select_best
from .knowledge import KnowledgeStore, default_store
from .normalize import (
    ClassificationError,
    IocKind,
    IocRecord,
    TokenizationError,
    load_expansions,
    load_registry_roots,
    make_record,
)

logger = logging.getLogger(__name__)

ABLATION_MODES = ("-CR", "C-R", "-C-R")

# deterministic gap between per-indicator base seeds
_SEED_STRIDE = 1009


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    input_path: str = ""
    output_path: str = ""
    kb_paths: list[str] = field(default_factory=list)
    expansions_path: str = ""
    registry_roots_path: str = ""
    backend: str = "template"
    replay_path: str = ""
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.2
    api_key_env: str = "IOC2REGEX_API_KEY"
    candidates: int = 5
    max_iterations: int = 10
    restart_cap: int = 5
    seed: int = 0
    workers: int = 1
    ablation: str = ""
    annotations_path: str = ""

    def validate(self) -> None:
        if not self.input_path or not self.output_path:
            raise ConfigError("input and output paths are required")
        if self.candidates < 1:
            raise ConfigError("candidate count must be >= 1")
        if self.max_iterations < 1 or self.restart_cap < 1:
            raise ConfigError("iteration and restart caps must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.ablation and self.ablation not in ABLATION_MODES:
            raise ConfigError(f"unknown ablation mode {self.ablation!r}")
        for p in [self.input_path, self.replay_path, self.expansions_path,
                  self.registry_roots_path, *self.kb_paths]:
            if p and not Path(p).exists():
                raise ConfigError(f"file not found: {p}")
        if self.backend not in ("template", "scripted", "remote"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "scripted" and not self.replay_path:
            raise ConfigError("scripted backend needs --replay")
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("remote backend needs --endpoint")


def make_backend(config: PipelineConfig) -> GeneratorBackend:
    if config.backend == "template":
        return TemplateBackend()
    if config.backend == "scripted":
        return ScriptedBackend.from_file(config.replay_path)
    return RemoteBackend(
        endpoint=config.endpoint,
        model=config.model,
        temperature=config.temperature,
        api_key_env=config.api_key_env,
    )


def load_store(config: PipelineConfig) -> KnowledgeStore:
    if config.kb_paths:
        return KnowledgeStore.ingest(list(config.kb_paths))
    return default_store()


def load_tables(config: PipelineConfig) -> tuple[dict | None, dict | None]:
    expansions = (
        load_expansions(config.expansions_path) if config.expansions_path else None
    )
    roots = (
        load_registry_roots(config.registry_roots_path)
        if config.registry_roots_path
        else None
    )
    return expansions, roots


def load_iocs(path: str | Path) -> list[tuple[str, str]]:
    """Input list: JSON array of strings or ``{"text", "source_id"}`` objects."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ConfigError(f"{path}: expected a JSON list")
    out: list[tuple[str, str]] = []
    for i, entry in enumerate(data):
        if isinstance(entry, str):
            out.append((f"ioc-{i:04d}", entry))
        elif isinstance(entry, dict) and isinstance(entry.get("text"), str):
            out.append((str(entry.get("source_id") or f"ioc-{i:04d}"), entry["text"]))
        else:
            raise ConfigError(f"{path}[{i}]: expected a string or an object with 'text'")
    return out


def unfiltered_annotation(record: IocRecord) -> GroupAnnotation:
    """Ablation '-CR': skip capture finding, treat every component as keep."""
    sequences = [list(record.components)] if record.components else []
    return GroupAnnotation(
        record=record,
        labels=[KEEP] * len(record.components),
        capture_sequences=sequences,
    )


def _process_one(
    index: int,
    source_id: str,
    raw: str,
    store: KnowledgeStore,
    config: PipelineConfig,
    backend: GeneratorBackend,
    expansions: dict | None,
    registry_roots: dict | None,
) -> dict:
    bypass_capture = config.ablation in ("-CR", "-C-R")
    single_shot = config.ablation in ("C-R", "-C-R")
    try:
        record = make_record(
            raw,
            store,
            source_id=source_id,
            expansions=expansions,
            registry_roots=registry_roots,
        )
    except (ClassificationError, TokenizationError) as exc:
        return {"status": "failed", "ioc_id": source_id, "raw": raw,
                "reason": f"normalization error: {exc}"}

    if record.kind is IocKind.OTHER:
        return {
            "status": "other",
            "ioc_id": source_id,
            "raw": raw,
            "reason": "classified other",
            "annotation": {
                "raw": raw,
                "kind": record.kind.value,
                "normalized": record.normalized,
                "source_id": source_id,
                "components": [],
                "labels": [],
                "capture_sequences": [],
                "rejection_reason": "classified other",
            },
        }

    annotation = (
        unfiltered_annotation(record) if bypass_capture else annotate(record, store)
    )
    if not annotation.has_capture_groups:
        return {
            "status": "rejected",
            "ioc_id": source_id,
            "raw": raw,
            "kind": record.kind.value,
            "reason": "no capture group",
            "annotation": {**annotation.to_dict(), "rejection_reason": "no capture group"},
        }

    best, candidates = select_best(
        annotation,
        backend,
        k=config.candidates,
        rng_seed=config.seed + index * _SEED_STRIDE,
        max_iterations=config.max_iterations,
        restart_cap=config.restart_cap,
        validate_groups=not bypass_capture,
        workflow="single_shot" if single_shot else "full",
    )
    annotation_dump = {**annotation.to_dict(), "rejection_reason": None}
    if best is None:
        return {
            "status": "failed",
            "ioc_id": source_id,
            "raw": raw,
            "kind": record.kind.value,
            "reason": "generation failed",
            "annotation": annotation_dump,
        }
    return {
        "status": "generated",
        "annotation": annotation_dump,
        "record": {
            "ioc_id": source_id,
            "raw": record.raw,
            "kind": record.kind.value,
            "normalized": record.normalized,
            "capture_groups": sorted(c.casefold() for c in annotation.keep_components),
            "capture_sequences": [list(s) for s in annotation.capture_sequences],
            "pattern": best.pattern,
            "score": best.score,
            "n_cg": best.n_cg,
            "n_wc": best.n_wc,
            "candidates_considered": len(candidates),
        },
    }


def run_generate(config: PipelineConfig) -> dict:
    """Process every input indicator; write the product file; return the summary."""
    config.validate()
    store = load_store(config)
    expansions, registry_roots = load_tables(config)
    backend = make_backend(config)
    iocs = load_iocs(config.input_path)

    workers = config.workers
    if isinstance(backend, ScriptedBackend) and workers != 1:
        logger.warning("scripted backend is stateful; forcing workers=1")
        workers = 1

    def work(item: tuple[int, tuple[str, str]]) -> dict:
        index, (source_id, raw) = item
        return _process_one(
            index, source_id, raw, store, config, backend, expansions, registry_roots
        )

    if workers == 1:
        outcomes = [work(item) for item in enumerate(iocs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, enumerate(iocs)))

    records = [o["record"] for o in outcomes if o["status"] == "generated"]
    rejections = [
        {k: v for k, v in o.items() if k not in ("status", "annotation")}
        for o in outcomes
        if o["status"] in ("rejected", "other", "failed")
    ]
    if config.annotations_path:
        _write_json(
            config.annotations_path,
            [o["annotation"] for o in outcomes if "annotation" in o],
        )
    summary = {
        "inputs": len(iocs),
        "generated": len(records),
        "rejected_no_capture": sum(1 for o in outcomes if o["status"] == "rejected"),
        "classified_other": sum(1 for o in outcomes if o["status"] == "other"),
        "failed": sum(1 for o in outcomes if o["status"] == "failed"),
        "backend": backend.kind,
        "seed": config.seed,
        "candidates": config.candidates,
        "ablation": config.ablation or "full",
    }
    product = {"records": records, "rejections": rejections, "summary": summary}
    _write_json(config.output_path, product)
    logger.info(
        "generate: %d inputs -> %d records, %d rejected, %d other, %d failed",
        summary["inputs"], summary["generated"], summary["rejected_no_capture"],
        summary["classified_other"], summary["failed"],
    )
    return summary


def run_evaluate(
    products_path: str | Path,
    truths_path: str | Path,
    output_path: str | Path,
    kb_paths: list[str] | None = None,
    dump_matches: str | Path = "",
) -> dict:
    """Score a product file against a ground-truth file; write the report."""
    store = KnowledgeStore.ingest(list(kb_paths)) if kb_paths else default_store()
    product = json.loads(Path(products_path).read_text(encoding="utf-8"))
    if "records" not in product:
        raise ConfigError(f"{products_path}: not a product file (missing 'records')")
    truths = evaluation.load_truths(truths_path, store)

    match_log: list | None = [] if dump_matches else None
    reports = evaluation.evaluate_by_dataset(product["records"], truths, match_log)
    payload = {"reports": [r.to_dict() for r in reports]}
    _write_json(output_path, payload)
    if dump_matches:
        _write_json(dump_matches, match_log)
    return payload


def run_ablation(config: PipelineConfig, mode: str, truths_path: str | Path,
                 report_path: str | Path) -> dict:
    """Generate under an ablation mode, then evaluate the products normally."""
    if mode not in ABLATION_MODES:
        raise ConfigError(f"unknown ablation mode {mode!r}")
    config.ablation = mode
    run_generate(config)
    return run_evaluate(
        config.output_path, truths_path, report_path, kb_paths=config.kb_paths
    )


def _write_json(path: str | Path, payload) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
