"""Tokenizer and validator for the regex dialect accepted as final output.

The dialect is a portable subset of common regex engines: a leading inline
case-insensitivity flag, escaped literals, character classes, the wildcard
dot, quantifiers (``*`` ``+`` ``?`` ``{m,n}``, optionally lazy), alternation,
plain and non-capturing groups, and the ``^``/``$`` anchors.  Everything a
pattern is allowed to contain is produced here as a typed token stream; the
other modules build their analyses (literal runs, optional-group spans,
wildcard units, structural feature vectors) on top of that stream instead of
re-parsing pattern text ad hoc.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

FLAGS = "flags"
GROUP_OPEN = "group_open"
GROUP_CLOSE = "group_close"
CLASS = "class"
CLASS_ESCAPE = "class_escape"
ESCAPE = "escape"
DOT = "dot"
ANCHOR = "anchor"
ALT = "alt"
QUANT = "quant"
LITERAL = "literal"

_CLASS_ESCAPE_CHARS = "wWsSdD"
_FLAGS_RE = re.compile(r"\(\?[imsx]+\)")
_BRACE_QUANT_RE = re.compile(r"\{\d+(,\d*)?\}")

# Tokens a quantifier may follow.
_QUANTIFIABLE = frozenset({LITERAL, ESCAPE, CLASS_ESCAPE, CLASS, DOT, GROUP_CLOSE})

DIALECT_RULES = (
    "- optional leading (?i) for case-insensitive matching",
    "- literal characters; escape regex metacharacters with a backslash"
    " (\\\\ for a backslash, \\. for a dot)",
    "- character classes like [a-z0-9]",
    "- quantifiers * + ? {m,n} (a trailing ? makes them lazy)",
    "- alternation with |, grouping with (...) or (?:...), optional groups (...)?",
    "- the wildcard . and the anchors ^ $",
    "- class shorthands \\w \\W \\s \\S \\d \\D",
)


class DialectError(ValueError):
    """Pattern outside the accepted dialect; ``offset`` points at the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"syntax error at offset {offset}: {message}")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int

    @property
    def end(self) -> int:
        return self.pos + len(self.text)


def _parse_class(pattern: str, start: int) -> int:
    """Return the index one past the closing ``]`` of a class opened at start."""
    i = start + 1
    n = len(pattern)
    if i < n and pattern[i] == "^":
        i += 1
    if i < n and pattern[i] == "]":
        i += 1
    while i < n and pattern[i] != "]":
        i += 2 if pattern[i] == "\\" else 1
    if i >= n:
        raise DialectError("unterminated character class", start)
    return i + 1


def tokenize(pattern: str) -> list[Token]:
    """Split a pattern into dialect tokens; raises DialectError outside it."""
    tokens: list[Token] = []
    literal_buf: list[str] = []
    literal_pos = 0

    def flush() -> None:
        nonlocal literal_buf
        if literal_buf:
            tokens.append(Token(LITERAL, "".join(literal_buf), literal_pos))
            literal_buf = []

    def push_quant(text: str, pos: int) -> None:
        # a quantifier binds to the last character of a literal run only
        if tokens and tokens[-1].kind == LITERAL and len(tokens[-1].text) > 1:
            prev = tokens.pop()
            tokens.append(Token(LITERAL, prev.text[:-1], prev.pos))
            tokens.append(Token(LITERAL, prev.text[-1], prev.pos + len(prev.text) - 1))
        tokens.append(Token(QUANT, text, pos))

    i = 0
    n = len(pattern)
    m = _FLAGS_RE.match(pattern)
    if m:
        tokens.append(Token(FLAGS, m.group(0), 0))
        i = m.end()

    while i < n:
        ch = pattern[i]
        if ch == "\\":
            if i + 1 >= n:
                raise DialectError("dangling backslash", i)
            nxt = pattern[i + 1]
            flush()
            if nxt in _CLASS_ESCAPE_CHARS:
                tokens.append(Token(CLASS_ESCAPE, pattern[i : i + 2], i))
            elif not nxt.isalnum():
                tokens.append(Token(ESCAPE, pattern[i : i + 2], i))
            else:
                raise DialectError(f"unsupported escape \\{nxt}", i)
            i += 2
        elif ch == "[":
            flush()
            end = _parse_class(pattern, i)
            tokens.append(Token(CLASS, pattern[i:end], i))
            i = end
        elif ch == "(":
            flush()
            if pattern.startswith("(?:", i):
                tokens.append(Token(GROUP_OPEN, "(?:", i))
                i += 3
            elif pattern.startswith("(?", i):
                raise DialectError("group extension not in dialect", i)
            else:
                tokens.append(Token(GROUP_OPEN, "(", i))
                i += 1
        elif ch == ")":
            flush()
            tokens.append(Token(GROUP_CLOSE, ")", i))
            i += 1
        elif ch == ".":
            flush()
            tokens.append(Token(DOT, ".", i))
            i += 1
        elif ch in "^$":
            flush()
            tokens.append(Token(ANCHOR, ch, i))
            i += 1
        elif ch == "|":
            flush()
            tokens.append(Token(ALT, "|", i))
            i += 1
        elif ch in "*+?":
            flush()
            text = ch
            if ch != "?" and i + 1 < n and pattern[i + 1] == "?":
                text = pattern[i : i + 2]
            elif ch == "?" and i + 1 < n and pattern[i + 1] == "?":
                text = "??"
            push_quant(text, i)
            i += len(text)
        elif ch == "{":
            qm = _BRACE_QUANT_RE.match(pattern, i)
            if qm:
                flush()
                text = qm.group(0)
                if qm.end() < n and pattern[qm.end()] == "?":
                    text += "?"
                push_quant(text, i)
                i += len(text)
            else:
                if not literal_buf:
                    literal_pos = i
                literal_buf.append(ch)
                i += 1
        else:
            if not literal_buf:
                literal_pos = i
            literal_buf.append(ch)
            i += 1
    flush()
    return tokens


def validate(tokens: list[Token]) -> None:
    """Structural checks: quantifier placement and balanced groups."""
    depth = 0
    prev: Token | None = None
    for tok in tokens:
        if tok.kind == QUANT:
            if prev is None or prev.kind not in _QUANTIFIABLE:
                raise DialectError("quantifier has nothing to repeat", tok.pos)
        elif tok.kind == GROUP_OPEN:
            depth += 1
        elif tok.kind == GROUP_CLOSE:
            depth -= 1
            if depth < 0:
                raise DialectError("unbalanced ')'", tok.pos)
        prev = tok
    if depth > 0:
        last_open = max(t.pos for t in tokens if t.kind == GROUP_OPEN)
        raise DialectError("unbalanced '('", last_open)


def compile_pattern(pattern: str) -> re.Pattern:
    """Validate a pattern against the dialect, then compile it."""
    tokens = tokenize(pattern)
    validate(tokens)
    try:
        return re.compile(pattern)
    except re.error as exc:  # pragma: no cover - dialect validation is stricter
        raise DialectError(exc.msg, exc.pos or 0) from exc


# -- analyses over the token stream -------------------------------------


@dataclass
class LiteralRun:
    """A maximal stretch of guaranteed-literal characters in a pattern."""

    chars: list[tuple[str, int, int]]  # (character, pattern pos, width)

    @property
    def text(self) -> str:
        return "".join(c for c, _p, _w in self.chars)

    def span_of(self, start: int, length: int) -> tuple[int, int]:
        """Pattern-offset span covering chars [start, start+length)."""
        first = self.chars[start]
        last = self.chars[start + length - 1]
        return first[1], last[1] + last[2]


def literal_runs(tokens: list[Token]) -> list[LiteralRun]:
    """Maximal literal character runs, with unescaped text.

    A quantified atom is excluded (it is not guaranteed to occur verbatim),
    and any non-literal token breaks the run.
    """
    runs: list[LiteralRun] = []
    current: list[tuple[str, int, int]] = []

    def flush() -> None:
        nonlocal current
        if current:
            runs.append(LiteralRun(current))
            current = []

    for k, tok in enumerate(tokens):
        quantified = k + 1 < len(tokens) and tokens[k + 1].kind == QUANT
        if tok.kind == LITERAL and not quantified:
            current.extend((c, tok.pos + j, 1) for j, c in enumerate(tok.text))
        elif tok.kind == ESCAPE and not quantified:
            current.append((tok.text[1], tok.pos, 2))
        else:
            flush()
    flush()
    return runs


def optional_group_spans(tokens: list[Token]) -> list[tuple[int, int]]:
    """Pattern-offset spans of groups made optional by a trailing ``?``."""
    spans: list[tuple[int, int]] = []
    stack: list[int] = []
    for k, tok in enumerate(tokens):
        if tok.kind == GROUP_OPEN:
            stack.append(tok.pos)
        elif tok.kind == GROUP_CLOSE and stack:
            open_pos = stack.pop()
            nxt = tokens[k + 1] if k + 1 < len(tokens) else None
            if nxt is not None and nxt.kind == QUANT and nxt.text in ("?", "??"):
                spans.append((open_pos, nxt.end))
    return spans


def wildcard_units(tokens: list[Token]) -> list[tuple[int, int, str]]:
    """Wildcard constructs as (start, end, text) spans.

    One unit per dot or class shorthand (merged with a following quantifier)
    and per quantified character class; an unquantified class is a constrained
    single-character match and is not counted.
    """
    units: list[tuple[int, int, str]] = []
    k = 0
    while k < len(tokens):
        tok = tokens[k]
        nxt = tokens[k + 1] if k + 1 < len(tokens) else None
        has_quant = nxt is not None and nxt.kind == QUANT
        if tok.kind in (DOT, CLASS_ESCAPE):
            end = nxt.end if has_quant else tok.end
            units.append((tok.pos, end, tok.text + (nxt.text if has_quant else "")))
            k += 2 if has_quant else 1
        elif tok.kind == CLASS and has_quant:
            units.append((tok.pos, nxt.end, tok.text + nxt.text))
            k += 2
        else:
            k += 1
    return units


FEATURE_NAMES = (
    "groups",
    "classes",
    "wildcards",
    "anchors",
    "quantifiers",
    "alternations",
    "escapes",
)


def feature_vector(pattern: str) -> tuple[int, ...]:
    """Structural feature counts in FEATURE_NAMES order."""
    tokens = tokenize(pattern)
    counts = {name: 0 for name in FEATURE_NAMES}
    for tok in tokens:
        if tok.kind == GROUP_OPEN:
            counts["groups"] += 1
        elif tok.kind == CLASS:
            counts["classes"] += 1
        elif tok.kind in (DOT, CLASS_ESCAPE):
            counts["wildcards"] += 1
        elif tok.kind == ANCHOR:
            counts["anchors"] += 1
        elif tok.kind == QUANT:
            counts["quantifiers"] += 1
        elif tok.kind == ALT:
            counts["alternations"] += 1
        if tok.kind == ESCAPE:
            counts["escapes"] += 1
    return tuple(counts[name] for name in FEATURE_NAMES)
