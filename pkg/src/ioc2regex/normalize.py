"""Classify raw indicator strings and normalize them into component lists.

Pipeline order per indicator: classify -> preprocess -> segment.  Preprocessing
covers the four standardization cases seen in real threat-report strings:
environment-variable expansion, username unification, registry-root
abbreviation, and executable-extension stripping on known commands.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path

from .knowledge import (
    COMMAND_FOREST,
    KnowledgeStore,
    strip_executable_extension,
)

logger = logging.getLogger(__name__)

_DATA_DIR = Path(__file__).parent / "data"

# Fallback for components allowed to follow "Users" unchanged when no store
# is available to enumerate the native ones.
_BUILTIN_USERS_CHILDREN = frozenset(
    {"public", "default", "user", "all users", "default user"}
)

_ENV_VAR_RE = re.compile(r"%[A-Za-z_][A-Za-z0-9_()]*%")
_DRIVE_PREFIX_RE = re.compile(r"^[A-Za-z]:[\\/]")
_DELIMS_RE = re.compile(r"[\\/]+")


class IocKind(str, Enum):
    FILE_PATH = "file_path"
    REGISTRY_KEY = "registry_key"
    COMMAND_LINE = "command_line"
    OTHER = "other"


class ClassificationError(ValueError):
    pass


class TokenizationError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


@dataclass
class IocRecord:
    """One indicator string with its detected kind and component breakdown."""

    raw: str
    kind: IocKind
    normalized: str
    components: list[str] = field(default_factory=list)
    source_id: str = ""

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "kind": self.kind.value,
            "normalized": self.normalized,
            "components": list(self.components),
            "source_id": self.source_id,
        }


# -- data tables -------------------------------------------------------


@lru_cache(maxsize=None)
def _default_expansions() -> dict:
    return load_expansions(_DATA_DIR / "env_expansions.json")


@lru_cache(maxsize=None)
def _default_registry_roots() -> dict:
    return load_registry_roots(_DATA_DIR / "registry_roots.json")


def load_expansions(path: str | Path) -> dict:
    """Environment-variable table: ``{"%VAR%": "expansion"}``, keys uppercased."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {k.upper(): v for k, v in data.items()}


def load_registry_roots(path: str | Path) -> dict:
    """Root abbreviation map: ``{"HKEY_CURRENT_USER": "HKCU"}``, keys case-folded."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {k.casefold(): v for k, v in data.items()}


def _registry_markers(registry_roots: dict) -> frozenset[str]:
    names = set(registry_roots)
    names.update(v.casefold() for v in registry_roots.values())
    names.add("registry")
    return frozenset(names)


# -- classification ----------------------------------------------------


def classify(
    raw: str,
    store: KnowledgeStore | None = None,
    registry_roots: dict | None = None,
) -> IocKind:
    """Decide whether a string is a file path, registry key, or command line.

    Rule order: registry first (syntactically most distinctive), then command
    detection (store-known first token or option-style tokens), then path
    shape; anything else is ``other``.
    """
    s = raw.strip()
    if not s:
        raise ClassificationError("cannot classify empty or whitespace-only string")

    roots = registry_roots if registry_roots is not None else _default_registry_roots()
    first_component = _DELIMS_RE.split(s.lstrip("\\/"), maxsplit=1)[0].strip()
    if first_component.casefold() in _registry_markers(roots):
        return IocKind.REGISTRY_KEY

    tokens = s.split()
    first_token = strip_executable_extension(tokens[0])
    if store is not None and store.contains(COMMAND_FOREST, first_token):
        return IocKind.COMMAND_LINE
    if len(tokens) > 1 and any(t.startswith(("/", "-")) for t in tokens):
        return IocKind.COMMAND_LINE

    if _DELIMS_RE.search(s):
        if _DRIVE_PREFIX_RE.match(s) or _ENV_VAR_RE.search(s):
            return IocKind.FILE_PATH
        if len([c for c in _DELIMS_RE.split(s) if c]) >= 2:
            return IocKind.FILE_PATH

    return IocKind.OTHER


# -- preprocessing -----------------------------------------------------


def _expand_env_vars(s: str, expansions: dict) -> str:
    def repl(m: re.Match) -> str:
        var = m.group(0)
        target = expansions.get(var.upper())
        if target is None:
            logger.warning("unknown environment variable %r left verbatim", var)
            return var
        return target

    return _ENV_VAR_RE.sub(repl, s)


def _rewrite_registry_root(s: str, registry_roots: dict) -> str:
    m = re.match(r"^([\\/]*)([^\\/]+)([\\/]?)", s)
    if not m:
        return s
    lead, first, _delim = m.group(1), m.group(2), m.group(3)
    folded = first.strip().casefold()
    if folded == "registry":
        rest = s[m.end(2) :].lstrip("\\/")
        return rest
    abbrev = registry_roots.get(folded)
    if abbrev is not None:
        return abbrev + s[m.end(2) :]
    if lead:
        # registry keys never start with a delimiter once standardized
        return s[len(lead) :]
    return s


def _normalize_usernames(s: str, kind: IocKind, store: KnowledgeStore | None) -> str:
    """Rewrite the component following ``Users`` to the uniform ``user`` token."""
    native = set(_BUILTIN_USERS_CHILDREN)
    if store is not None:
        native |= store.path_children("users")

    if kind is IocKind.COMMAND_LINE:
        comp_chars = r"[^\\/\s;\"]+"
    else:
        comp_chars = r"[^\\/]+"
    pattern = re.compile(
        r"(?i)(?P<prefix>(?:^|[\\/\s\";])users[\\/])(?P<comp>" + comp_chars + ")"
    )

    def repl(m: re.Match) -> str:
        comp = m.group("comp")
        if comp.strip().casefold() in native:
            return m.group(0)
        return m.group("prefix") + "user"

    return pattern.sub(repl, s)


def _strip_command_extensions(s: str, store: KnowledgeStore | None) -> str:
    if store is None:
        return s

    def repl(m: re.Match) -> str:
        token = m.group(0)
        stripped = strip_executable_extension(token)
        if stripped != token and store.contains(COMMAND_FOREST, stripped):
            return stripped
        return token

    return re.sub(r"[^\s;]+", repl, s)


def preprocess(
    raw: str,
    kind: IocKind,
    store: KnowledgeStore | None = None,
    expansions: dict | None = None,
    registry_roots: dict | None = None,
) -> str:
    """Apply the four normalization cases; idempotent for a fixed table set."""
    if kind is IocKind.OTHER:
        raise ValueError("preprocess requires a classified kind (not 'other')")
    expansions = expansions if expansions is not None else _default_expansions()
    registry_roots = (
        registry_roots if registry_roots is not None else _default_registry_roots()
    )

    s = raw.strip()
    s = _expand_env_vars(s, expansions)
    if kind is IocKind.REGISTRY_KEY:
        s = _rewrite_registry_root(s, registry_roots)
    s = _normalize_usernames(s, kind, store)
    if kind is IocKind.COMMAND_LINE:
        s = _strip_command_extensions(s, store)
    return s


# -- segmentation ------------------------------------------------------


def _tokenize_command_line(s: str) -> list[str]:
    tokens: list[str] = []
    current: list[str] = []
    quote_start = -1
    in_quote = False
    for i, ch in enumerate(s):
        if ch == '"':
            if in_quote:
                in_quote = False
            else:
                in_quote = True
                quote_start = i
        elif in_quote:
            current.append(ch)
        elif ch.isspace() or ch == ";":
            if current:
                tokens.append("".join(current))
                current = []
        else:
            current.append(ch)
    if in_quote:
        raise TokenizationError("unterminated double quote", quote_start)
    if current:
        tokens.append("".join(current))
    return tokens


def segment(normalized: str, kind: IocKind) -> list[str]:
    """Split a normalized string into its ordered components."""
    if kind is IocKind.OTHER:
        return []
    if kind is IocKind.COMMAND_LINE:
        return _tokenize_command_line(normalized)
    return [c for c in _DELIMS_RE.split(normalized) if c]


def make_record(
    raw: str,
    store: KnowledgeStore | None = None,
    source_id: str = "",
    expansions: dict | None = None,
    registry_roots: dict | None = None,
) -> IocRecord:
    """Classify, preprocess and segment one raw indicator string."""
    kind = classify(raw, store, registry_roots=registry_roots)
    if kind is IocKind.OTHER:
        return IocRecord(raw=raw, kind=kind, normalized=raw.strip(), source_id=source_id)
    normalized = preprocess(
        raw, kind, store=store, expansions=expansions, registry_roots=registry_roots
    )
    components = segment(normalized, kind)
    return IocRecord(
        raw=raw,
        kind=kind,
        normalized=normalized,
        components=components,
        source_id=source_id,
    )
