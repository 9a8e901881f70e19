"""Canonical re-indenter for parsed methods.

Deterministic house style: two-space indent, one statement per line, braces
at the end of header lines, `} else {` / `} catch (...) {` joins, and braces
added to single-statement bodies. Comments are discarded by the lexer and do
not survive normalization.
"""

from __future__ import annotations

from .parser import (
    Block,
    ClassDecl,
    DoWhileStmt,
    FieldDecl,
    ForStmt,
    IfStmt,
    LocalDecl,
    MethodDecl,
    MethodTree,
    SimpleStmt,
    SwitchStmt,
    SyncStmt,
    TryStmt,
    WhileStmt,
)
from .tokens import join_tokens

INDENT = "  "
WRAPPER_NAME = "A"


def print_wrapped(tree: MethodTree) -> str:
    """Render the method as the sole method of `class A { ... }`.

    Fields of an existing wrapper class are kept (the method may rely on
    them); the wrapper is always renamed to the canonical name.
    """
    lines: list[str] = [f"class {WRAPPER_NAME} {{"]
    fields = tree.wrapper.fields if tree.wrapper is not None else []
    for fld in fields:
        lines.extend(_field_lines(fld, 1))
    if fields:
        lines.append("")
    lines.extend(_method_lines(tree.method, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _field_lines(fld: FieldDecl, depth: int) -> list[str]:
    pad = INDENT * depth
    out = [pad + a for a in fld.annotations]
    pieces = []
    if fld.modifiers:
        pieces.append(" ".join(fld.modifiers))
    pieces.append(fld.type_text)
    decls = []
    for d in fld.declarators:
        text = d.name + "[]" * d.dims
        if d.init_tokens:
            text += " = " + join_tokens(d.init_tokens)
        decls.append(text)
    out.append(pad + " ".join(pieces) + " " + ", ".join(decls) + ";")
    return out


def _method_lines(method: MethodDecl, depth: int) -> list[str]:
    pad = INDENT * depth
    out = [pad + a for a in method.annotations]
    sig = []
    if method.modifiers:
        sig.append(" ".join(method.modifiers))
    if method.type_params:
        sig.append(method.type_params)
    if method.return_type:
        sig.append(method.return_type)
    params = ", ".join(f"{p.type_text} {p.name}".strip() for p in method.params)
    head = " ".join(sig)
    head = (head + " " if head else "") + f"{method.name}({params})"
    if method.throws:
        head += " throws " + ", ".join(method.throws)
    if method.body is None:
        out.append(pad + head + ";")
        return out
    out.append(pad + head + " {")
    for stmt in method.body.statements:
        out.extend(_stmt_lines(stmt, depth + 1))
    out.append(pad + "}")
    return out


def _stmt_lines(stmt, depth: int) -> list[str]:
    lines = _stmt_lines_inner(stmt, depth)
    label = getattr(stmt, "label", None)
    if label and lines:
        pad = INDENT * depth
        lines[0] = pad + f"{label}: " + lines[0].lstrip()
    return lines


def _stmt_lines_inner(stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(stmt, Block):
        return [pad + "{"] + _body_lines(stmt, depth) + [pad + "}"]
    if isinstance(stmt, LocalDecl):
        return [pad + join_tokens(stmt.tokens)]
    if isinstance(stmt, SimpleStmt):
        # empty statements and token-free opaques (skipped constructs) would
        # print as bare whitespace and vanish on reparse
        if stmt.kind == "empty" or not stmt.tokens:
            return []
        return [pad + join_tokens(stmt.tokens)]
    if isinstance(stmt, IfStmt):
        return _if_lines(stmt, depth)
    if isinstance(stmt, WhileStmt):
        head = pad + f"while ({join_tokens(stmt.cond_tokens)}) {{"
        return [head] + _body_lines(stmt.body, depth) + [pad + "}"]
    if isinstance(stmt, DoWhileStmt):
        out = [pad + "do {"]
        out.extend(_body_lines(stmt.body, depth))
        out.append(pad + f"}} while ({join_tokens(stmt.cond_tokens)});")
        return out
    if isinstance(stmt, ForStmt):
        return _for_lines(stmt, depth)
    if isinstance(stmt, TryStmt):
        return _try_lines(stmt, depth)
    if isinstance(stmt, SwitchStmt):
        out = [pad + f"switch ({join_tokens(stmt.selector_tokens)}) {{"]
        for inner in stmt.body.statements:
            if isinstance(inner, SimpleStmt) and inner.kind == "case_label":
                out.extend(_stmt_lines(inner, depth + 1))
            else:
                out.extend(_stmt_lines(inner, depth + 2))
        out.append(pad + "}")
        return out
    if isinstance(stmt, SyncStmt):
        head = pad + f"synchronized ({join_tokens(stmt.expr_tokens)}) {{"
        return [head] + _body_lines(stmt.body, depth) + [pad + "}"]
    return [pad + "/* unsupported */"]


def _if_lines(stmt: IfStmt, depth: int) -> list[str]:
    pad = INDENT * depth
    out = [pad + f"if ({join_tokens(stmt.cond_tokens)}) {{"]
    out.extend(_body_lines(stmt.then_body, depth))
    node = stmt
    while node.else_body is not None:
        if isinstance(node.else_body, IfStmt):
            nxt = node.else_body
            out.append(pad + f"}} else if ({join_tokens(nxt.cond_tokens)}) {{")
            out.extend(_body_lines(nxt.then_body, depth))
            node = nxt
        else:
            out.append(pad + "} else {")
            out.extend(_body_lines(node.else_body, depth))
            break
    out.append(pad + "}")
    return out


def _for_lines(stmt: ForStmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if stmt.enhanced:
        var_type = join_tokens(stmt.var_type_tokens)
        head = f"for ({var_type} {stmt.var_name} : {join_tokens(stmt.iter_tokens)})"
    else:
        init = ""
        if isinstance(stmt.init, LocalDecl):
            init = join_tokens(stmt.init.tokens)
        elif isinstance(stmt.init, SimpleStmt):
            init = join_tokens(stmt.init.tokens)
        init = init.rstrip(";")
        cond = join_tokens(stmt.cond_tokens)
        update = join_tokens(stmt.update_tokens)
        head = f"for ({init}; {cond}; {update})"
    return [pad + head + " {"] + _body_lines(stmt.body, depth) + [pad + "}"]


def _try_lines(stmt: TryStmt, depth: int) -> list[str]:
    pad = INDENT * depth
    head = "try"
    if stmt.resources:
        head += " (" + "; ".join(join_tokens(r.tokens).rstrip(";") for r in stmt.resources) + ")"
    out = [pad + head + " {"]
    out.extend(_body_lines(stmt.body, depth))
    for catch in stmt.catches:
        out.append(pad + f"}} catch ({catch.param_type} {catch.param_name}) {{")
        out.extend(_body_lines(catch.block, depth))
    if stmt.finally_block is not None:
        out.append(pad + "} finally {")
        out.extend(_body_lines(stmt.finally_block, depth))
    out.append(pad + "}")
    return out


def _body_lines(body, depth: int) -> list[str]:
    if isinstance(body, Block):
        out: list[str] = []
        for inner in body.statements:
            out.extend(_stmt_lines(inner, depth + 1))
        return out
    return _stmt_lines(body, depth + 1)
