"""Static scope analysis: which names are visible at a line."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import LineOutOfRange
from .parser import (
    Block,
    DoWhileStmt,
    ForStmt,
    IfStmt,
    LocalDecl,
    MethodTree,
    SimpleStmt,
    SwitchStmt,
    SyncStmt,
    TryStmt,
    WhileStmt,
    parse_method,
)
from .tokens import join_tokens


@dataclass
class ScopeReport:
    fields: list[tuple[str, str]] = field(default_factory=list)  # (name, declared type)
    params: list[tuple[str, str]] = field(default_factory=list)
    locals: list[tuple[str, str, int]] = field(default_factory=list)  # (+ declaration line)

    def names(self) -> set[str]:
        return ({n for n, _ in self.fields}
                | {n for n, _ in self.params}
                | {n for n, _, _ in self.locals})

    def to_dict(self) -> dict:
        return {
            "fields": [{"name": n, "type": t} for n, t in self.fields],
            "params": [{"name": n, "type": t} for n, t in self.params],
            "locals": [{"name": n, "type": t, "line": l} for n, t, l in self.locals],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def extract_variables(source: str, line: int) -> ScopeReport:
    """Fields, parameters, and the locals declared before `line` whose scope
    contains it."""
    tree = parse_method(source)
    return scope_at(tree, line)


def scope_at(tree: MethodTree, line: int) -> ScopeReport:
    method = tree.method
    if not (method.start_line <= line <= method.end_line):
        raise LineOutOfRange(
            f"line {line} outside method span {method.start_line}..{method.end_line}")
    report = ScopeReport()
    if tree.wrapper is not None:
        for fld in tree.wrapper.fields:
            for decl in fld.declarators:
                report.fields.append((decl.name, fld.type_text + "[]" * decl.dims))
    for param in method.params:
        report.params.append((param.name, param.type_text))
    entries: list[tuple[int, str, str]] = []
    if method.body is not None:
        _collect_locals(method.body, (method.body.open_line, method.body.close_line),
                        line, entries)
    for decl_line, name, type_text in sorted(entries):
        report.locals.append((name, type_text, decl_line))
    return report


def _collect_locals(node, scope_span: tuple[int, int], line: int,
                    out: list[tuple[int, str, str]]) -> None:
    """Walk statements, recording declarations visible at `line`.

    scope_span is the line span of the innermost enclosing scope of the
    declarations directly inside `node`.
    """
    in_scope = scope_span[0] <= line <= scope_span[1]

    def add_decl(decl: LocalDecl, decl_line_override: int | None = None):
        if not in_scope:
            return
        for d in decl.declarators:
            decl_line = decl_line_override if decl_line_override is not None else d.line
            if decl_line < line:
                out.append((decl_line, d.name, join_tokens(decl.type_tokens) + "[]" * d.dims))

    if isinstance(node, Block):
        for stmt in node.statements:
            _collect_stmt(stmt, (node.open_line, node.close_line), line, out, add_decl)
    else:
        _collect_stmt(node, scope_span, line, out, add_decl)


def _collect_stmt(stmt, scope_span, line, out, add_decl) -> None:
    in_parent_scope = scope_span[0] <= line <= scope_span[1]
    if isinstance(stmt, LocalDecl):
        if in_parent_scope:
            for d in stmt.declarators:
                if d.line < line:
                    out.append((d.line, d.name,
                                join_tokens(stmt.type_tokens) + "[]" * d.dims))
        return
    if isinstance(stmt, SimpleStmt):
        return
    if isinstance(stmt, Block):
        _collect_locals(stmt, (stmt.open_line, stmt.close_line), line, out)
        return
    if isinstance(stmt, IfStmt):
        _collect_body(stmt.then_body, line, out)
        if stmt.else_body is not None:
            _collect_body(stmt.else_body, line, out)
        return
    if isinstance(stmt, (WhileStmt, DoWhileStmt)):
        _collect_body(stmt.body, line, out)
        return
    if isinstance(stmt, ForStmt):
        span = (stmt.start_line, stmt.end_line)
        if span[0] <= line <= span[1]:
            if stmt.enhanced and stmt.var_name is not None and stmt.start_line < line:
                out.append((stmt.start_line, stmt.var_name,
                            join_tokens(stmt.var_type_tokens)))
            if isinstance(stmt.init, LocalDecl):
                for d in stmt.init.declarators:
                    if d.line < line:
                        out.append((d.line, d.name,
                                    join_tokens(stmt.init.type_tokens) + "[]" * d.dims))
        _collect_body(stmt.body, line, out)
        return
    if isinstance(stmt, TryStmt):
        body_span = (stmt.start_line, stmt.body.close_line)
        if body_span[0] <= line <= body_span[1]:
            for res in stmt.resources:
                for d in res.declarators:
                    if d.line < line:
                        out.append((d.line, d.name, join_tokens(res.type_tokens)))
        _collect_locals(stmt.body, (stmt.body.open_line, stmt.body.close_line), line, out)
        for catch in stmt.catches:
            cspan = (catch.header_line, catch.block.close_line)
            if cspan[0] <= line <= cspan[1] and catch.header_line < line and catch.param_name:
                out.append((catch.header_line, catch.param_name, catch.param_type))
            _collect_locals(catch.block,
                            (catch.block.open_line, catch.block.close_line), line, out)
        if stmt.finally_block is not None:
            _collect_locals(stmt.finally_block,
                            (stmt.finally_block.open_line, stmt.finally_block.close_line),
                            line, out)
        return
    if isinstance(stmt, (SwitchStmt, SyncStmt)):
        _collect_locals(stmt.body, (stmt.body.open_line, stmt.body.close_line), line, out)
        return


def _collect_body(body, line, out) -> None:
    if isinstance(body, Block):
        _collect_locals(body, (body.open_line, body.close_line), line, out)
    else:
        # single-statement body: declarations are not legal here in Java,
        # but nested constructs still need the walk
        _collect_locals(body, _span(body), line, out)


def _span(node) -> tuple[int, int]:
    if isinstance(node, Block):
        return node.open_line, node.close_line
    return getattr(node, "start_line", 0), getattr(node, "end_line", 0)
