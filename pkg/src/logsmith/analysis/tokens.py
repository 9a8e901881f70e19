"""Lexer for the Java subset understood by the analysis tools."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseFailure

KEYWORDS = {
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char",
    "class", "const", "continue", "default", "do", "double", "else", "enum",
    "extends", "final", "finally", "float", "for", "goto", "if", "implements",
    "import", "instanceof", "int", "interface", "long", "native", "new",
    "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
    "transient", "try", "void", "volatile", "while", "var", "record", "yield",
}

PRIMITIVES = {"boolean", "byte", "char", "short", "int", "long", "float", "double", "void", "var"}

MODIFIERS = {
    "public", "private", "protected", "static", "final", "abstract",
    "synchronized", "native", "transient", "volatile", "strictfp", "default",
}

# Longest first so the scanner is greedy.
OPERATORS = [
    ">>>=", ">>>", ">>=", "<<=", "->", "::", "++", "--", "&&", "||",
    "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "<<", ">>", "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|",
    "^", "?", ":", ".", ",", ";", "(", ")", "{", "}", "[", "]", "@",
]

ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="}


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'keyword' | 'string' | 'char' | 'number' | 'op'
    text: str
    line: int  # 1-based
    spaced: bool  # whitespace (or a comment/newline) preceded this token


def tokenize(source: str) -> list[Token]:
    """Scan Java source into tokens, discarding comments.

    Raises ParseFailure on characters the subset grammar has no use for.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    n = len(source)
    spaced = False
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            i += 1
            spaced = True
            continue
        if ch in " \t\r\f":
            i += 1
            spaced = True
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            spaced = True
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise ParseFailure(f"unterminated block comment at line {line}")
            line += source.count("\n", i, j)
            i = j + 2
            spaced = True
            continue
        if ch == '"':
            if source.startswith('"""', i):  # text block
                j = source.find('"""', i + 3)
                if j < 0:
                    raise ParseFailure(f"unterminated text block at line {line}")
                text = source[i : j + 3]
                tokens.append(Token("string", text, line, spaced))
                line += text.count("\n")
                i = j + 3
            else:
                j = _scan_quoted(source, i, line)
                tokens.append(Token("string", source[i:j], line, spaced))
                i = j
            spaced = False
            continue
        if ch == "'":
            j = _scan_quoted(source, i, line)
            tokens.append(Token("char", source[i:j], line, spaced))
            i = j
            spaced = False
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] in "._"):
                # '1.toString()' does not exist in Java; dot always continues a literal
                # unless followed by a non-digit non-'f/d/e' start such as another dot.
                if source[j] == "." and (j + 1 >= n or not (source[j + 1].isdigit() or source[j + 1] in "fFdDeE")):
                    break
                j += 1
            tokens.append(Token("number", source[i:j], line, spaced))
            i = j
            spaced = False
            continue
        if ch.isalpha() or ch in "_$":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] in "_$"):
                j += 1
            text = source[i:j]
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, spaced))
            i = j
            spaced = False
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                tokens.append(Token("op", op, line, spaced))
                i += len(op)
                spaced = False
                break
        else:
            raise ParseFailure(f"unexpected character {ch!r} at line {line}")
    return tokens


def _scan_quoted(source: str, start: int, line: int) -> int:
    quote = source[start]
    i = start + 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\\":
            i += 2
            continue
        if c == "\n":
            raise ParseFailure(f"unterminated literal at line {line}")
        if c == quote:
            return i + 1
        i += 1
    raise ParseFailure(f"unterminated literal at line {line}")


def join_tokens(tokens: list[Token]) -> str:
    """Re-render a token run, keeping a single space wherever the source had any.

    The first token never gets a leading space, so joins are stable under
    repeated tokenize/join round trips.
    """
    parts: list[str] = []
    for idx, tok in enumerate(tokens):
        if idx > 0 and tok.spaced:
            parts.append(" ")
        parts.append(tok.text)
    return "".join(parts)
