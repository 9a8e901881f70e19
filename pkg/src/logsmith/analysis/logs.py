"""Logging-statement model and parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum


class LogLevel(IntEnum):
    """Five-level verbosity scale; index gaps are the ordinal distance."""

    TRACE = 0
    DEBUG = 1
    INFO = 2
    WARN = 3
    ERROR = 4

    @classmethod
    def from_name(cls, name: str) -> "LogLevel":
        lowered = name.strip().lower()
        if lowered == "fatal":  # subject loggers fold FATAL into ERROR
            return cls.ERROR
        return cls[lowered.upper()]

    @classmethod
    def max_distance(cls, level: "LogLevel") -> int:
        return max(int(level), 4 - int(level))


_LEVEL_NAMES = "trace|debug|info|warn|error|fatal"

_LOG_CALL_RE = re.compile(
    r"^\s*([A-Za-z_$][\w$]*(?:\s*\.\s*[A-Za-z_$][\w$]*)*)"
    r"\s*\.\s*(" + _LEVEL_NAMES + r")\s*\((.*)\)\s*;?\s*$",
    re.IGNORECASE | re.DOTALL,
)


@dataclass
class LoggingStatement:
    level: LogLevel
    template: str  # static text of the first string-literal argument, '{}' kept
    variables: list[str]  # remaining argument expressions, whitespace-normalized
    line: int  # 1-based within the method source
    raw: str  # original call text

    def to_dict(self) -> dict:
        return {
            "level": self.level.name,
            "template": self.template,
            "variables": list(self.variables),
            "line": self.line,
            "raw": self.raw,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LoggingStatement":
        return cls(
            level=LogLevel[data["level"]],
            template=data["template"],
            variables=list(data["variables"]),
            line=int(data["line"]),
            raw=data["raw"],
        )


def parse_log_statement(text: str, line: int = 1) -> LoggingStatement | None:
    """Parse `receiver.level(args...)` statements; None for anything else.

    The first argument that is exactly a string literal becomes the template;
    every other argument is a variable expression. Commas inside generics are
    not protected, so generic constructor calls in arguments may split.
    """
    match = _LOG_CALL_RE.match(text)
    if match is None:
        return None
    level = LogLevel.from_name(match.group(2))
    args = _split_args(match.group(3))
    template = ""
    variables: list[str] = []
    template_found = False
    for arg in args:
        stripped = arg.strip()
        if not stripped:
            continue
        if not template_found and _is_string_literal(stripped):
            template = stripped[1:-1]
            template_found = True
        else:
            variables.append(re.sub(r"\s+", " ", stripped))
    return LoggingStatement(level=level, template=template, variables=variables,
                            line=line, raw=text.strip())


def _split_args(text: str) -> list[str]:
    """Split on top-level commas, honoring strings, chars, and bracket nesting."""
    if not text.strip():
        return []
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in "\"'":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == ch:
                    break
                j += 1
            current.append(text[i : j + 1])
            i = j + 1
            continue
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
            i += 1
            continue
        current.append(ch)
        i += 1
    parts.append("".join(current))
    return parts


def _is_string_literal(text: str) -> bool:
    if len(text) < 2 or not text.startswith('"') or not text.endswith('"'):
        return False
    i = 1
    while i < len(text) - 1:
        if text[i] == "\\":
            i += 2
            continue
        if text[i] == '"':
            return False  # literal ends early: this is a concatenation
        i += 1
    return True
