"""Placement classification and intraprocedural backward slicing.

The slicer works on a statement-level control-flow approximation: reaching
definitions are computed by fixpoint over a per-statement graph, callees are
opaque, aliasing is ignored, and field writes count as definitions of the
field name.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

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
from .tokens import ASSIGN_OPS, KEYWORDS, Token, join_tokens


class PlacementType(str, Enum):
    METHOD_ENTRY = "METHOD_ENTRY"
    METHOD_EXIT = "METHOD_EXIT"
    CATCH_BLOCK_ENTRY = "CATCH_BLOCK_ENTRY"
    LOOP_BODY = "LOOP_BODY"
    BRANCH_BODY = "BRANCH_BODY"
    GENERAL = "GENERAL"


@dataclass
class MethodFacts:
    return_type: str
    modifiers: list[str]
    thrown_exceptions: list[str]

    def to_dict(self) -> dict:
        return {
            "return_type": self.return_type,
            "modifiers": list(self.modifiers),
            "thrown_exceptions": list(self.thrown_exceptions),
        }


@dataclass
class SliceReport:
    placement: PlacementType
    method_facts: MethodFacts
    data_deps: list[tuple[int, str]]  # (line, statement text), line < query line
    control_context: list[str]  # enclosing conditions, innermost last

    def to_dict(self) -> dict:
        return {
            "placement": self.placement.value,
            "method_facts": self.method_facts.to_dict(),
            "data_deps": [{"line": l, "text": t} for l, t in self.data_deps],
            "control_context": list(self.control_context),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# def/use extraction from token runs


def scan_defs_uses(tokens: list[Token]) -> tuple[set[str], set[str]]:
    """Assigned names and referenced names in a token run.

    Field writes define the field name; non-this receivers count as uses of
    the receiver variable; method names are never uses.
    """
    defs: set[str] = set()
    uses: set[str] = set()
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok.kind == "keyword" and tok.text != "this":
            i += 1
            continue
        if tok.kind not in ("ident", "keyword"):
            i += 1
            continue
        chain = [tok.text]
        j = i + 1
        while j + 1 < n and tokens[j].text == "." and tokens[j + 1].kind == "ident":
            chain.append(tokens[j + 1].text)
            j += 2
        nxt = tokens[j].text if j < n else None
        prev = tokens[i - 1].text if i > 0 else None
        is_this = chain[0] == "this"
        segments = chain[1:] if is_this else chain

        if nxt == "(":
            # method call: drop the method name, keep the receiver variable
            receiver = segments[:-1]
            if receiver:
                uses.add(receiver[0])
            i = j + 1
            continue
        if not segments:  # bare `this`
            i = j
            continue
        target = segments[-1]
        head = segments[0]
        if nxt == "[":
            k = _skip_bracket_groups(tokens, j)
            after = tokens[k].text if k < n else None
            if after in ASSIGN_OPS or after in ("++", "--"):
                defs.add(target)
            uses.add(head)
            i = j + 1  # continue inside the brackets for index uses
            continue
        if nxt in ASSIGN_OPS:
            defs.add(target)
            if len(segments) > 1:
                uses.add(head)
            if nxt != "=":
                uses.add(target)
            i = j + 1
            continue
        if nxt in ("++", "--") or prev in ("++", "--"):
            defs.add(target)
            uses.add(target)
            if len(segments) > 1:
                uses.add(head)
            i = j + 1 if nxt in ("++", "--") else j
            continue
        uses.add(target if is_this else head)
        i = j
    return defs, uses


def _skip_bracket_groups(tokens: list[Token], pos: int) -> int:
    i = pos
    n = len(tokens)
    while i < n and tokens[i].text == "[":
        depth = 0
        while i < n:
            if tokens[i].text == "[":
                depth += 1
            elif tokens[i].text == "]":
                depth -= 1
                if depth == 0:
                    i += 1
                    break
            i += 1
    return i


# ---------------------------------------------------------------------------
# CFG and reaching definitions


@dataclass
class _CfgNode:
    id: int
    kind: str  # entry | field | stmt | cond | update | iter | catch_param | query
    start_line: int
    end_line: int
    defs: set[str] = field(default_factory=set)
    uses: set[str] = field(default_factory=set)
    preds: set[int] = field(default_factory=set)


class _CfgBuilder:
    def __init__(self) -> None:
        self.nodes: list[_CfgNode] = []
        self.loop_stack: list[dict] = []
        self.query_id: int | None = None

    def node(self, kind, start, end, defs=(), uses=()) -> int:
        nid = len(self.nodes)
        self.nodes.append(_CfgNode(nid, kind, start, end, set(defs), set(uses)))
        return nid

    def edge(self, preds: list[int], to: int) -> None:
        self.nodes[to].preds.update(preds)

    # statement walkers ------------------------------------------------------

    def seq_block(self, block: Block, preds: list[int], query_stmt) -> list[int]:
        cur = preds
        for stmt in block.statements:
            cur = self.seq_stmt(stmt, cur, query_stmt)
        return cur

    def seq_body(self, body, preds: list[int], query_stmt) -> list[int]:
        if isinstance(body, Block):
            return self.seq_block(body, preds, query_stmt)
        return self.seq_stmt(body, preds, query_stmt)

    def seq_stmt(self, stmt, preds: list[int], query_stmt) -> list[int]:
        if isinstance(stmt, SimpleStmt):
            return self._simple(stmt, preds, query_stmt)
        if isinstance(stmt, LocalDecl):
            defs = {d.name for d in stmt.declarators}
            uses: set[str] = set()
            for d in stmt.declarators:
                uses |= scan_defs_uses(d.init_tokens)[1]
            nid = self.node("stmt", stmt.start_line, stmt.end_line, defs, uses)
            self.edge(preds, nid)
            if stmt is query_stmt:
                self.query_id = nid
            return [nid]
        if isinstance(stmt, Block):
            return self.seq_block(stmt, preds, query_stmt)
        if isinstance(stmt, IfStmt):
            cond = self._cond_node(stmt.cond_tokens, stmt.start_line)
            self.edge(preds, cond)
            then_exits = self.seq_body(stmt.then_body, [cond], query_stmt)
            if stmt.else_body is not None:
                else_exits = self.seq_body(stmt.else_body, [cond], query_stmt)
            else:
                else_exits = [cond]
            return then_exits + else_exits
        if isinstance(stmt, WhileStmt):
            cond = self._cond_node(stmt.cond_tokens, stmt.start_line)
            self.edge(preds, cond)
            frame = {"breaks": [], "continue_target": cond}
            self.loop_stack.append(frame)
            body_exits = self.seq_body(stmt.body, [cond], query_stmt)
            self.loop_stack.pop()
            self.edge(body_exits, cond)
            return [cond] + frame["breaks"]
        if isinstance(stmt, DoWhileStmt):
            cond = self._cond_node(stmt.cond_tokens, stmt.end_line)
            frame = {"breaks": [], "continue_target": cond}
            self.loop_stack.append(frame)
            body_exits = self.seq_body(stmt.body, preds + [cond], query_stmt)
            self.loop_stack.pop()
            self.edge(body_exits, cond)
            return [cond] + frame["breaks"]
        if isinstance(stmt, ForStmt):
            return self._for(stmt, preds, query_stmt)
        if isinstance(stmt, TryStmt):
            return self._try(stmt, preds, query_stmt)
        if isinstance(stmt, SwitchStmt):
            return self._switch(stmt, preds, query_stmt)
        if isinstance(stmt, SyncStmt):
            cond = self._cond_node(stmt.expr_tokens, stmt.start_line)
            self.edge(preds, cond)
            return self.seq_block(stmt.body, [cond], query_stmt)
        return preds

    def _simple(self, stmt: SimpleStmt, preds: list[int], query_stmt) -> list[int]:
        if stmt.kind == "case_label":
            return preds  # dispatch edges handled by the switch walker
        if stmt.kind == "empty":
            return preds
        defs, uses = scan_defs_uses(stmt.tokens)
        kind = "query" if stmt.kind == "query" else "stmt"
        nid = self.node(kind, stmt.start_line, stmt.end_line, defs, uses)
        self.edge(preds, nid)
        if stmt is query_stmt:
            self.query_id = nid
        if stmt.kind in ("return", "throw"):
            return []
        if stmt.kind == "break":
            if self.loop_stack:
                self.loop_stack[-1]["breaks"].append(nid)
            return []
        if stmt.kind == "continue":
            target = None
            for frame in reversed(self.loop_stack):
                if frame["continue_target"] is not None:
                    target = frame["continue_target"]
                    break
            if target is not None:
                self.edge([nid], target)
            return []
        return [nid]

    def _cond_node(self, tokens: list[Token], line: int) -> int:
        defs, uses = scan_defs_uses(tokens)
        end = tokens[-1].line if tokens else line
        return self.node("cond", line, end, defs, uses)

    def _for(self, stmt: ForStmt, preds: list[int], query_stmt) -> list[int]:
        if stmt.enhanced:
            uses = scan_defs_uses(stmt.iter_tokens)[1]
            iter_node = self.node("iter", stmt.start_line, stmt.start_line,
                                  {stmt.var_name} if stmt.var_name else set(), uses)
            self.edge(preds, iter_node)
            frame = {"breaks": [], "continue_target": iter_node}
            self.loop_stack.append(frame)
            body_exits = self.seq_body(stmt.body, [iter_node], query_stmt)
            self.loop_stack.pop()
            self.edge(body_exits, iter_node)
            return [iter_node] + frame["breaks"]
        cur = preds
        if stmt.init is not None:
            cur = self.seq_stmt(stmt.init, cur, query_stmt)
        cond = self._cond_node(stmt.cond_tokens, stmt.start_line)
        self.edge(cur, cond)
        update = None
        if stmt.update_tokens:
            defs, uses = scan_defs_uses(stmt.update_tokens)
            update = self.node("update", stmt.start_line, stmt.start_line, defs, uses)
            self.edge([update], cond)
        continue_target = update if update is not None else cond
        frame = {"breaks": [], "continue_target": continue_target}
        self.loop_stack.append(frame)
        body_exits = self.seq_body(stmt.body, [cond], query_stmt)
        self.loop_stack.pop()
        self.edge(body_exits, continue_target)
        return [cond] + frame["breaks"]

    def _try(self, stmt: TryStmt, preds: list[int], query_stmt) -> list[int]:
        cur = preds
        for res in stmt.resources:
            defs = {d.name for d in res.declarators}
            uses: set[str] = set()
            for d in res.declarators:
                uses |= scan_defs_uses(d.init_tokens)[1]
            nid = self.node("stmt", stmt.start_line, stmt.start_line, defs, uses)
            self.edge(cur, nid)
            cur = [nid]
        entry_preds = list(cur)
        before = len(self.nodes)
        body_exits = self.seq_block(stmt.body, cur, query_stmt)
        body_ids = list(range(before, len(self.nodes)))
        all_catch_exits: list[int] = []
        for catch in stmt.catches:
            param = self.node("catch_param", catch.header_line, catch.header_line,
                              {catch.param_name} if catch.param_name else set(), set())
            self.edge(entry_preds + body_ids, param)
            all_catch_exits.extend(self.seq_block(catch.block, [param], query_stmt))
        exits = body_exits + all_catch_exits
        if stmt.finally_block is not None:
            exits = self.seq_block(stmt.finally_block, exits, query_stmt)
        return exits

    def _switch(self, stmt: SwitchStmt, preds: list[int], query_stmt) -> list[int]:
        sel = self._cond_node(stmt.selector_tokens, stmt.start_line)
        self.edge(preds, sel)
        frame = {"breaks": [], "continue_target": None}
        self.loop_stack.append(frame)
        cur: list[int] = []
        for inner in stmt.body.statements:
            if isinstance(inner, SimpleStmt) and inner.kind == "case_label":
                cur = cur + [sel]
            else:
                cur = self.seq_stmt(inner, cur, query_stmt)
        self.loop_stack.pop()
        return cur + frame["breaks"] + [sel]


def _build_cfg(tree: MethodTree, query_stmt) -> tuple[list[_CfgNode], int]:
    builder = _CfgBuilder()
    cur: list[int] = []
    if tree.wrapper is not None:
        for fld in tree.wrapper.fields:
            defs = {d.name for d in fld.declarators}
            uses: set[str] = set()
            for d in fld.declarators:
                uses |= scan_defs_uses(d.init_tokens)[1]
            nid = builder.node("field", fld.start_line, fld.end_line, defs, uses)
            builder.edge(cur, nid)
            cur = [nid]
    method = tree.method
    entry = builder.node("entry", method.start_line, method.start_line,
                         {p.name for p in method.params}, set())
    builder.edge(cur, entry)
    builder.seq_block(method.body, [entry], query_stmt)
    if builder.query_id is None:
        raise LineOutOfRange("query statement did not materialize in the flow graph")
    return builder.nodes, builder.query_id


def _reaching_definitions(nodes: list[_CfgNode]) -> list[set[tuple[int, str]]]:
    gen = [{(n.id, v) for v in n.defs} for n in nodes]
    ins: list[set[tuple[int, str]]] = [set() for _ in nodes]
    outs: list[set[tuple[int, str]]] = [set(g) for g in gen]
    changed = True
    while changed:
        changed = False
        for n in nodes:
            new_in: set[tuple[int, str]] = set()
            for p in n.preds:
                new_in |= outs[p]
            new_out = gen[n.id] | {(d, v) for d, v in new_in if v not in n.defs}
            if new_in != ins[n.id] or new_out != outs[n.id]:
                ins[n.id] = new_in
                outs[n.id] = new_out
                changed = True
    return ins


# ---------------------------------------------------------------------------
# public operations


def classify_placement(source: str, line: int) -> PlacementType:
    """Syntactic category of a line as a logging insertion point."""
    tree = parse_method(source)
    return placement_at(tree, line)


def placement_at(tree: MethodTree, line: int) -> PlacementType:
    method = tree.method
    if not (method.start_line <= line <= method.end_line):
        raise LineOutOfRange(
            f"line {line} outside method span {method.start_line}..{method.end_line}")
    body = method.body
    if line <= body.open_line:
        return PlacementType.METHOD_ENTRY
    regions = tree.block_regions(include_class=False)
    inner = None
    for region in regions:
        if region.open_line <= line <= region.close_line:
            if inner is None or (region.open_line, region.id) >= (inner.open_line, inner.id):
                inner = region
    if inner is None:
        return PlacementType.METHOD_ENTRY
    if inner.kind == "catch" and line <= _first_stmt_line(inner.block):
        return PlacementType.CATCH_BLOCK_ENTRY
    if inner.kind == "method" and line <= _first_stmt_line(inner.block):
        return PlacementType.METHOD_ENTRY
    nxt = None
    for stmt in inner.block.statements:
        span = _stmt_span(stmt)
        if span[0] >= line:
            nxt = stmt
            break
    if isinstance(nxt, SimpleStmt) and nxt.kind == "return":
        return PlacementType.METHOD_EXIT
    if inner.kind == "method":
        stmts = inner.block.statements
        if not stmts or line > _stmt_span(stmts[-1])[1]:
            return PlacementType.METHOD_EXIT
    for node in reversed(tree.construct_chain(line)):
        if isinstance(node, (ForStmt, WhileStmt, DoWhileStmt)):
            return PlacementType.LOOP_BODY
        if isinstance(node, (IfStmt, SwitchStmt)):
            return PlacementType.BRANCH_BODY
    return PlacementType.GENERAL


def _first_stmt_line(block: Block) -> int:
    for stmt in block.statements:
        return _stmt_span(stmt)[0]
    return block.close_line


def _stmt_span(stmt) -> tuple[int, int]:
    if isinstance(stmt, Block):
        return stmt.open_line, stmt.close_line
    return stmt.start_line, stmt.end_line


_IDENT_RE = re.compile(r"[A-Za-z_$][\w$]*")


def backward_slice(source: str, line: int) -> SliceReport:
    """Data and control dependencies of a line (or insertion point)."""
    tree = parse_method(source)
    method = tree.method
    if not (method.start_line <= line <= method.end_line):
        raise LineOutOfRange(
            f"line {line} outside method span {method.start_line}..{method.end_line}")
    placement = placement_at(tree, line)
    facts = MethodFacts(return_type=method.return_type or "",
                        modifiers=list(method.modifiers),
                        thrown_exceptions=list(method.throws))
    context = _control_context(tree, line)
    known = _all_declared_names(tree)

    query_stmt, is_insertion = _locate_query_stmt(tree, line)
    nodes, query_id = _build_cfg(tree, query_stmt)
    ins = _reaching_definitions(nodes)

    seeds = _seed_variables(tree, line, known, is_insertion)
    result: set[int] = set()
    visited: set[int] = set()
    frontier: list[tuple[int, set[str]]] = [(query_id, seeds)]
    while frontier:
        node_id, wanted = frontier.pop()
        for def_id, var in ins[node_id]:
            if var not in wanted or def_id in visited:
                continue
            visited.add(def_id)
            def_node = nodes[def_id]
            if def_node.start_line >= line:
                continue
            if def_node.kind != "entry":
                result.add(def_id)
            frontier.append((def_id, def_node.uses & known))

    deps: list[tuple[int, str]] = []
    for def_id in sorted(result, key=lambda d: (nodes[d].start_line, d)):
        node = nodes[def_id]
        text = " ".join(
            tree.lines[i].strip()
            for i in range(node.start_line - 1, min(node.end_line, len(tree.lines)))
        ).strip()
        entry = (node.start_line, text)
        if entry not in deps:
            deps.append(entry)
    return SliceReport(placement=placement, method_facts=facts,
                       data_deps=deps, control_context=context)


def _locate_query_stmt(tree: MethodTree, line: int):
    """Statement covering the line, else a no-op inserted at the insertion point.

    Labels and empty statements never become flow nodes, so they cannot serve
    as the query; those lines fall through to insertion handling.
    """
    for stmt in tree.simple_statements():
        if isinstance(stmt, SimpleStmt) and stmt.kind in ("case_label", "empty"):
            continue
        if stmt.start_line <= line <= stmt.end_line:
            return stmt, False
    region = None
    for candidate in tree.block_regions(include_class=False):
        if candidate.open_line <= line <= candidate.close_line:
            if region is None or (candidate.open_line, candidate.id) >= (region.open_line, region.id):
                region = candidate
    block = region.block if region is not None else tree.method.body
    query = SimpleStmt("query", [], line, line)
    index = len(block.statements)
    for i, stmt in enumerate(block.statements):
        if _stmt_span(stmt)[0] >= line:
            index = i
            break
    block.statements.insert(index, query)
    return query, True


def _seed_variables(tree: MethodTree, line: int, known: set[str],
                    is_insertion: bool) -> set[str]:
    text = tree.lines[line - 1] if line - 1 < len(tree.lines) else ""
    seeds = {m.group(0) for m in _IDENT_RE.finditer(text)} - KEYWORDS
    seeds &= known
    if seeds or not is_insertion:
        return seeds
    # insertion point: fall back to names used earlier in the innermost block
    region = None
    for candidate in tree.block_regions(include_class=False):
        if candidate.open_line <= line <= candidate.close_line:
            if region is None or (candidate.open_line, candidate.id) >= (region.open_line, region.id):
                region = candidate
    if region is None:
        return set()
    used: set[str] = set()
    for i in range(region.open_line, min(line - 1, len(tree.lines))):
        used |= {m.group(0) for m in _IDENT_RE.finditer(tree.lines[i])}
    return (used - KEYWORDS) & known


def _all_declared_names(tree: MethodTree) -> set[str]:
    names: set[str] = set()
    if tree.wrapper is not None:
        for fld in tree.wrapper.fields:
            names |= {d.name for d in fld.declarators}
    names |= {p.name for p in tree.method.params}

    def walk(node):
        if isinstance(node, LocalDecl):
            names.update(d.name for d in node.declarators)
            return
        if isinstance(node, Block):
            for s in node.statements:
                walk(s)
            return
        if isinstance(node, IfStmt):
            walk(node.then_body)
            if node.else_body is not None:
                walk(node.else_body)
            return
        if isinstance(node, (WhileStmt, DoWhileStmt)):
            walk(node.body)
            return
        if isinstance(node, ForStmt):
            if node.var_name:
                names.add(node.var_name)
            if node.init is not None:
                walk(node.init)
            walk(node.body)
            return
        if isinstance(node, TryStmt):
            for res in node.resources:
                names.update(d.name for d in res.declarators)
            walk(node.body)
            for catch in node.catches:
                if catch.param_name:
                    names.add(catch.param_name)
                walk(catch.block)
            if node.finally_block is not None:
                walk(node.finally_block)
            return
        if isinstance(node, (SwitchStmt, SyncStmt)):
            walk(node.body)
            return

    if tree.method.body is not None:
        walk(tree.method.body)
    return names


def _control_context(tree: MethodTree, line: int) -> list[str]:
    """Conditions of enclosing branch/loop constructs, innermost last."""
    context: list[str] = []

    def descend(children) -> None:
        for stmt in children:
            span = _stmt_span(stmt)
            if not (span[0] <= line <= span[1]):
                continue
            is_construct = isinstance(
                stmt, (IfStmt, WhileStmt, DoWhileStmt, ForStmt, SwitchStmt, TryStmt, SyncStmt))
            if is_construct and line == span[0]:
                return  # an insertion on the header line precedes the construct
            if isinstance(stmt, IfStmt):
                then_span = _stmt_span(stmt.then_body)
                if then_span[0] <= line <= then_span[1]:
                    context.append(join_tokens(stmt.cond_tokens))
                    descend(_body_children(stmt.then_body))
                elif stmt.else_body is not None:
                    else_span = _stmt_span(stmt.else_body)
                    if else_span[0] <= line <= else_span[1]:
                        if isinstance(stmt.else_body, IfStmt):
                            descend([stmt.else_body])
                        else:
                            context.append(f"!({join_tokens(stmt.cond_tokens)})")
                            descend(_body_children(stmt.else_body))
                return
            if isinstance(stmt, (WhileStmt, DoWhileStmt)):
                context.append(join_tokens(stmt.cond_tokens))
                descend(_body_children(stmt.body))
                return
            if isinstance(stmt, ForStmt):
                if stmt.enhanced:
                    context.append(f"{stmt.var_name} : {join_tokens(stmt.iter_tokens)}")
                elif stmt.cond_tokens:
                    context.append(join_tokens(stmt.cond_tokens))
                descend(_body_children(stmt.body))
                return
            if isinstance(stmt, SwitchStmt):
                context.append(join_tokens(stmt.selector_tokens))
                descend(stmt.body.statements)
                return
            if isinstance(stmt, TryStmt):
                for child in [stmt.body] + [c.block for c in stmt.catches] + (
                        [stmt.finally_block] if stmt.finally_block is not None else []):
                    cspan = _stmt_span(child)
                    if cspan[0] <= line <= cspan[1]:
                        descend(child.statements)
                        return
                return
            if isinstance(stmt, (SyncStmt,)):
                descend(stmt.body.statements)
                return
            if isinstance(stmt, Block):
                descend(stmt.statements)
                return

    if tree.method.body is not None:
        descend(tree.method.body.statements)
    return context


def _body_children(body) -> list:
    if isinstance(body, Block):
        return body.statements
    return [body]
