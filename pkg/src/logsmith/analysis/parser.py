"""Recursive-descent parser for a Java subset.

Produces a statement-level tree with 1-based line positions. Constructs the
grammar does not model become opaque statements instead of failures; only
irrecoverable syntax (unbalanced braces, non-program input) raises
ParseFailure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..errors import ParseFailure
from .tokens import ASSIGN_OPS, MODIFIERS, PRIMITIVES, Token, join_tokens, tokenize

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Node model


@dataclass
class SimpleStmt:
    kind: str  # expr | return | throw | break | continue | empty | opaque | case_label | query
    tokens: list[Token]
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class Declarator:
    name: str
    line: int
    init_tokens: list[Token]
    dims: int = 0


@dataclass
class LocalDecl:
    type_tokens: list[Token]
    declarators: list[Declarator]
    tokens: list[Token]
    start_line: int
    end_line: int


@dataclass
class Block:
    statements: list
    open_line: int
    close_line: int
    owner: str = "bare"
    label: str | None = None


@dataclass
class IfStmt:
    cond_tokens: list[Token]
    then_body: object
    else_body: object | None
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class WhileStmt:
    cond_tokens: list[Token]
    body: object
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class DoWhileStmt:
    body: object
    cond_tokens: list[Token]
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class ForStmt:
    enhanced: bool
    init: object | None  # LocalDecl or SimpleStmt
    cond_tokens: list[Token]
    update_tokens: list[Token]
    var_type_tokens: list[Token]
    var_name: str | None
    iter_tokens: list[Token]
    body: object
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class CatchClause:
    param_type: str
    param_name: str
    header_line: int
    block: Block


@dataclass
class TryStmt:
    resources: list[LocalDecl]
    body: Block
    catches: list[CatchClause]
    finally_block: Block | None
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class SwitchStmt:
    selector_tokens: list[Token]
    body: Block
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class SyncStmt:
    expr_tokens: list[Token]
    body: Block
    start_line: int
    end_line: int
    label: str | None = None


@dataclass
class Param:
    type_text: str
    name: str


@dataclass
class MethodDecl:
    name: str
    modifiers: list[str]
    annotations: list[str]
    type_params: str
    return_type: str  # "" for constructors
    params: list[Param]
    throws: list[str]
    body: Block | None
    start_line: int
    end_line: int


@dataclass
class FieldDecl:
    modifiers: list[str]
    annotations: list[str]
    type_text: str
    declarators: list[Declarator]
    start_line: int
    end_line: int


@dataclass
class ClassDecl:
    name: str
    kind: str  # class | interface | record
    modifiers: list[str]
    annotations: list[str]
    fields: list[FieldDecl] = field(default_factory=list)
    methods: list[MethodDecl] = field(default_factory=list)
    classes: list["ClassDecl"] = field(default_factory=list)
    open_line: int = 0
    close_line: int = 0
    start_line: int = 0
    end_line: int = 0


@dataclass
class BlockRegion:
    id: int
    open_line: int
    close_line: int
    kind: str  # class | method | if | else | for | while | do | try | catch | finally | switch | sync | bare
    block: Block | None
    node: object | None = None


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.warnings: list[str] = []

    # token helpers ---------------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.text == text

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseFailure("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok is None or tok.text != text:
            got = tok.text if tok else "<eof>"
            line = tok.line if tok else "?"
            raise ParseFailure(f"expected {text!r} but found {got!r} at line {line}")
        return self.next()

    def line(self) -> int:
        tok = self.peek()
        return tok.line if tok else (self.toks[-1].line if self.toks else 1)

    # entry points ----------------------------------------------------------

    def parse_compilation_unit(self) -> tuple[list[ClassDecl], list[MethodDecl]]:
        classes: list[ClassDecl] = []
        bare_methods: list[MethodDecl] = []
        while self.peek() is not None:
            if self.at("package") or self.at("import"):
                self.skip_to_semicolon()
                continue
            if self.at(";"):
                self.next()
                continue
            start = self.line()
            annotations = self.parse_annotations()
            modifiers = self.parse_modifiers(annotations)
            tok = self.peek()
            if tok is None:
                break
            if tok.text in ("class", "interface", "record"):
                classes.append(self.parse_class(annotations, modifiers, start))
            elif tok.text == "enum":
                self.skip_enum()
            else:
                member = self.parse_callable_or_field(annotations, modifiers, start)
                if isinstance(member, MethodDecl):
                    bare_methods.append(member)
                else:
                    raise ParseFailure(
                        f"expected a type or method declaration at line {start}"
                    )
        return classes, bare_methods

    # declarations ----------------------------------------------------------

    def parse_annotations(self) -> list[str]:
        out = []
        while self.at("@"):
            start = self.pos
            self.next()
            tok = self.peek()
            if tok is None or tok.kind not in ("ident", "keyword"):
                raise ParseFailure(f"malformed annotation at line {self.line()}")
            if tok.text == "interface":  # annotation type declaration, not a use
                self.pos = start
                break
            self.next()
            while self.at(".") and self.peek(1) is not None and self.peek(1).kind == "ident":
                self.next()
                self.next()
            if self.at("("):
                self.skip_balanced("(", ")")
            out.append(join_tokens(self.toks[start : self.pos]))
        return out

    def parse_modifiers(self, annotations: list[str]) -> list[str]:
        mods = []
        while True:
            tok = self.peek()
            if tok is not None and tok.text in MODIFIERS:
                # 'default' starts a switch label, never a modifier, inside bodies
                mods.append(self.next().text)
            elif tok is not None and tok.text == "@":
                annotations.extend(self.parse_annotations())
            else:
                return mods

    def parse_class(self, annotations: list[str], modifiers: list[str], start: int) -> ClassDecl:
        kind = self.next().text
        name_tok = self.peek()
        if name_tok is None or name_tok.kind != "ident":
            raise ParseFailure(f"expected a name after '{kind}' at line {self.line()}")
        name = self.next().text
        while self.peek() is not None and not self.at("{"):
            self.next()  # type params, extends, implements, record components
        open_tok = self.expect("{")
        cls = ClassDecl(name=name, kind=kind, modifiers=modifiers, annotations=annotations,
                        open_line=open_tok.line, start_line=start)
        while not self.at("}"):
            if self.peek() is None:
                raise ParseFailure(f"unterminated {kind} body starting at line {open_tok.line}")
            self.parse_member(cls)
        close = self.next()
        cls.close_line = close.line
        cls.end_line = close.line
        return cls

    def skip_enum(self) -> None:
        line = self.line()
        self.next()
        while self.peek() is not None and not self.at("{"):
            self.next()
        if self.at("{"):
            self.skip_balanced("{", "}")
        self.warnings.append(f"skipped enum declaration at line {line}")

    def parse_member(self, cls: ClassDecl) -> None:
        if self.at(";"):
            self.next()
            return
        start = self.line()
        annotations = self.parse_annotations()
        modifiers = self.parse_modifiers(annotations)
        tok = self.peek()
        if tok is None:
            raise ParseFailure("unexpected end of class body")
        if tok.text == "{":  # instance/static initializer
            self.skip_balanced("{", "}")
            self.warnings.append(f"skipped initializer block at line {start}")
            return
        if tok.text in ("class", "interface", "record"):
            cls.classes.append(self.parse_class(annotations, modifiers, start))
            return
        if tok.text == "enum":
            self.skip_enum()
            return
        member = self.parse_callable_or_field(annotations, modifiers, start)
        if isinstance(member, MethodDecl):
            cls.methods.append(member)
        elif isinstance(member, FieldDecl):
            cls.fields.append(member)
        else:
            self.warnings.append(f"skipped unsupported member at line {start}")

    def parse_callable_or_field(self, annotations, modifiers, start):
        type_params = ""
        if self.at("<"):
            tp_start = self.pos
            self.skip_generics()
            type_params = join_tokens(self.toks[tp_start : self.pos])
        type_end = self.try_parse_type(self.pos)
        if type_end is None:
            self.recover_member()
            return None
        type_tokens = self.toks[self.pos : type_end]
        after = self.toks[type_end] if type_end < len(self.toks) else None
        if after is not None and after.text == "(":
            # constructor: the "type" was the name
            self.pos = type_end
            return self.parse_method_tail(annotations, modifiers, type_params, "",
                                          join_tokens(type_tokens), start)
        if after is not None and after.kind == "ident":
            name = after.text
            nxt = self.toks[type_end + 1] if type_end + 1 < len(self.toks) else None
            if nxt is not None and nxt.text == "(":
                self.pos = type_end + 1
                return self.parse_method_tail(annotations, modifiers, type_params,
                                              join_tokens(type_tokens), name, start)
            if nxt is not None and nxt.text in ("=", ",", ";", "["):
                self.pos = type_end
                return self.parse_field_tail(annotations, modifiers, type_tokens, start)
        self.recover_member()
        return None

    def recover_member(self) -> None:
        """Skip an unsupported member: consume to ';' at depth 0 or a balanced body."""
        depth = 0
        while self.peek() is not None:
            tok = self.next()
            if tok.text in ("(", "["):
                depth += 1
            elif tok.text in (")", "]"):
                depth -= 1
            elif tok.text == "{":
                self.pos -= 1
                self.skip_balanced("{", "}")
                return
            elif tok.text == ";" and depth <= 0:
                return
            elif tok.text == "}" and depth <= 0:
                self.pos -= 1
                return

    def parse_method_tail(self, annotations, modifiers, type_params, return_type, name, start):
        self.expect("(")
        params = self.parse_params()
        throws: list[str] = []
        if self.at("throws"):
            self.next()
            seg_start = self.pos
            while self.peek() is not None and not self.at("{") and not self.at(";"):
                if self.at(","):
                    throws.append(join_tokens(self.toks[seg_start : self.pos]))
                    self.next()
                    seg_start = self.pos
                else:
                    self.next()
            if self.pos > seg_start:
                throws.append(join_tokens(self.toks[seg_start : self.pos]))
        body = None
        if self.at("{"):
            body = self.parse_block("method")
            end = body.close_line
        elif self.at(";"):
            end = self.next().line
        else:
            raise ParseFailure(f"expected method body or ';' at line {self.line()}")
        return MethodDecl(name=name, modifiers=modifiers, annotations=annotations,
                          type_params=type_params, return_type=return_type, params=params,
                          throws=throws, body=body, start_line=start, end_line=end)

    def parse_params(self) -> list[Param]:
        params: list[Param] = []
        depth = 1
        seg: list[Token] = []
        while self.peek() is not None:
            tok = self.next()
            if tok.text in ("(", "["):
                depth += 1
            elif tok.text in (")", "]"):
                depth -= 1
                if depth == 0:
                    break
            if tok.text == "," and depth == 1:
                params.append(self._param_from_tokens(seg))
                seg = []
            else:
                seg.append(tok)
        if seg:
            params.append(self._param_from_tokens(seg))
        return [p for p in params if p is not None]

    @staticmethod
    def _param_from_tokens(seg: list[Token]) -> Param | None:
        idents = [i for i, t in enumerate(seg) if t.kind == "ident"]
        if not idents:
            return None
        name_idx = idents[-1]
        name = seg[name_idx].text
        type_text = join_tokens(seg[:name_idx]).strip()
        return Param(type_text=type_text, name=name)

    def parse_field_tail(self, annotations, modifiers, type_tokens, start) -> FieldDecl:
        declarators = self.parse_declarators()
        end_tok = self.peek()
        end = end_tok.line if end_tok is not None else self.toks[-1].line
        if self.at(";"):
            self.next()
        return FieldDecl(modifiers=modifiers, annotations=annotations,
                         type_text=join_tokens(type_tokens), declarators=declarators,
                         start_line=start, end_line=end)

    def parse_declarators(self) -> list[Declarator]:
        """Parse `name [dims] [= init] (, ...)*` up to (not including) ';'."""
        out: list[Declarator] = []
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "ident":
                break
            name = self.next()
            dims = 0
            while self.at("[") and self.at("]", 1):
                self.next()
                self.next()
                dims += 1
            init: list[Token] = []
            if self.at("="):
                self.next()
                depth = 0
                while self.peek() is not None:
                    t = self.peek()
                    if t.text in ("(", "[", "{"):
                        depth += 1
                    elif t.text in (")", "]", "}"):
                        if depth == 0:
                            break
                        depth -= 1
                    elif depth == 0 and t.text in (",", ";"):
                        break
                    init.append(self.next())
            out.append(Declarator(name=name.text, line=name.line, init_tokens=init, dims=dims))
            if self.at(","):
                self.next()
                continue
            break
        return out

    # statements ------------------------------------------------------------

    def parse_block(self, owner: str) -> Block:
        open_tok = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise ParseFailure(f"unterminated block starting at line {open_tok.line}")
            stmt = self.parse_statement()
            if stmt is not None:
                stmts.append(stmt)
        close = self.next()
        return Block(statements=stmts, open_line=open_tok.line, close_line=close.line, owner=owner)

    def parse_statement(self):
        tok = self.peek()
        if tok is None:
            raise ParseFailure("unexpected end of input in statement position")
        start = tok.line

        # labeled statement: ident ':' <statement>
        if (tok.kind == "ident" and self.at(":", 1)
                and not (self.peek(2) is not None and self.peek(2).text == ":")):
            label = self.next().text
            self.next()
            inner = self.parse_statement()
            if hasattr(inner, "label"):
                inner.label = label
            return inner

        text = tok.text
        if text == "{":
            return self.parse_block("bare")
        if text == ";":
            t = self.next()
            return SimpleStmt("empty", [t], t.line, t.line)
        if text == "if":
            return self.parse_if()
        if text == "while":
            self.next()
            cond = self.parse_parens()
            body = self.parse_body("while")
            return WhileStmt(cond, body, start, _end_of(body))
        if text == "do":
            self.next()
            body = self.parse_body("do")
            self.expect("while")
            cond = self.parse_parens()
            end = self.line()
            if self.at(";"):
                end = self.next().line
            return DoWhileStmt(body, cond, start, end)
        if text == "for":
            return self.parse_for()
        if text == "try":
            return self.parse_try()
        if text == "switch":
            self.next()
            selector = self.parse_parens()
            body = self.parse_block("switch")
            return SwitchStmt(selector, body, start, body.close_line)
        if text == "synchronized" and self.at("(", 1):
            self.next()
            expr = self.parse_parens()
            body = self.parse_block("sync")
            return SyncStmt(expr, body, start, body.close_line)
        if text in ("return", "throw", "break", "continue"):
            kind = text
            toks = self.consume_simple()
            return SimpleStmt(kind, toks, start, toks[-1].line if toks else start)
        if text in ("case", "default"):
            return self.parse_case_label()
        if text in ("class", "interface", "enum", "record"):
            # local type declaration: keep it opaque
            line = self.line()
            while self.peek() is not None and not self.at("{"):
                self.next()
            if self.at("{"):
                self.skip_balanced("{", "}")
            if self.at(";"):
                self.next()
            self.warnings.append(f"skipped local type declaration at line {line}")
            return SimpleStmt("opaque", [], start, self.line())
        return self.parse_simple_statement()

    def parse_body(self, owner: str):
        if self.at("{"):
            return self.parse_block(owner)
        return self.parse_statement()

    def parse_if(self) -> IfStmt:
        start = self.line()
        self.expect("if")
        cond = self.parse_parens()
        then_body = self.parse_body("if")
        else_body = None
        if self.at("else"):
            self.next()
            if self.at("if"):
                else_body = self.parse_if()
            else:
                else_body = self.parse_body("else")
        end = _end_of(else_body) if else_body is not None else _end_of(then_body)
        return IfStmt(cond, then_body, else_body, start, end)

    def parse_for(self) -> ForStmt:
        start = self.line()
        self.expect("for")
        header = self.parse_parens()
        body = self.parse_body("for")
        end = _end_of(body)
        semis = _split_top_level(header, ";")
        if len(semis) == 3:
            init_toks, cond, update = semis
            init = self._classify_header_init(init_toks)
            return ForStmt(False, init, cond, update, [], None, [], body, start, end)
        colon = _split_top_level(header, ":")
        if len(colon) == 2:
            left, iter_tokens = colon
            var_name = left[-1].text if left and left[-1].kind == "ident" else None
            var_type = left[:-1] if left else []
            return ForStmt(True, None, [], [], var_type, var_name, iter_tokens, body, start, end)
        # malformed header: keep everything as a condition
        return ForStmt(False, None, header, [], [], None, [], body, start, end)

    def _classify_header_init(self, toks: list[Token]):
        if not toks:
            return None
        sub = _Parser(toks)
        try:
            stmt = sub.parse_simple_statement(require_semicolon=False)
        except ParseFailure:
            return SimpleStmt("expr", toks, toks[0].line, toks[-1].line)
        return stmt

    def parse_try(self) -> TryStmt:
        start = self.line()
        self.expect("try")
        resources: list[LocalDecl] = []
        if self.at("("):
            header = self.parse_parens()
            for part in _split_top_level(header, ";"):
                if not part:
                    continue
                sub = _Parser(part)
                try:
                    stmt = sub.parse_simple_statement(require_semicolon=False)
                except ParseFailure:
                    stmt = None
                if isinstance(stmt, LocalDecl):
                    resources.append(stmt)
        body = self.parse_block("try")
        catches: list[CatchClause] = []
        finally_block = None
        end = body.close_line
        while self.at("catch"):
            header_line = self.line()
            self.next()
            header = self.parse_parens()
            param_name = header[-1].text if header and header[-1].kind == "ident" else ""
            param_type = join_tokens(header[:-1]) if header else ""
            cblock = self.parse_block("catch")
            catches.append(CatchClause(param_type, param_name, header_line, cblock))
            end = cblock.close_line
        if self.at("finally"):
            self.next()
            finally_block = self.parse_block("finally")
            end = finally_block.close_line
        return TryStmt(resources, body, catches, finally_block, start, end)

    def parse_case_label(self) -> SimpleStmt:
        start = self.line()
        toks = [self.next()]
        depth = 0
        while self.peek() is not None:
            t = self.peek()
            if t.text in ("(", "["):
                depth += 1
            elif t.text in (")", "]"):
                depth -= 1
            elif depth == 0 and t.text in (":", "->"):
                toks.append(self.next())
                break
            elif depth == 0 and t.text in ("{", "}"):
                break
            toks.append(self.next())
        return SimpleStmt("case_label", toks, start, toks[-1].line)

    def parse_simple_statement(self, require_semicolon: bool = True):
        start = self.line()
        anno_tokens: list[Token] = []
        if self.at("@"):
            a_start = self.pos
            try:
                self.parse_annotations()
                anno_tokens = self.toks[a_start : self.pos]
            except ParseFailure:
                self.pos = a_start
        toks = self.consume_simple()
        all_toks = anno_tokens + toks
        if not all_toks:
            # nothing consumable here: swallow one token as opaque to guarantee progress
            t = self.next()
            return SimpleStmt("opaque", [t], t.line, t.line)
        end = all_toks[-1].line
        terminated = toks and toks[-1].text == ";"
        decl = self._try_local_decl(toks, anno_tokens)
        if decl is not None:
            return decl
        if require_semicolon and not terminated:
            return SimpleStmt("opaque", all_toks, start, end)
        return SimpleStmt("expr", all_toks, start, end)

    def _try_local_decl(self, toks: list[Token], anno_tokens: list[Token]) -> LocalDecl | None:
        body = list(toks)
        i = 0
        while i < len(body) and body[i].text == "final":
            i += 1
        type_end = try_parse_type_tokens(body, i)
        if type_end is None or type_end >= len(body):
            return None
        if body[type_end].kind != "ident":
            return None
        nxt = body[type_end + 1].text if type_end + 1 < len(body) else ";"
        if nxt not in ("=", ",", ";", "["):
            return None
        sub = _Parser(body[type_end:])
        declarators = sub.parse_declarators()
        if not declarators:
            return None
        all_toks = anno_tokens + toks
        return LocalDecl(type_tokens=body[i:type_end], declarators=declarators,
                         tokens=all_toks, start_line=all_toks[0].line, end_line=all_toks[-1].line)

    def consume_simple(self) -> list[Token]:
        """Consume tokens through the terminating top-level ';' (kept in the list)."""
        toks: list[Token] = []
        depth = 0
        while self.peek() is not None:
            t = self.peek()
            if t.text in ("(", "[", "{"):
                depth += 1
            elif t.text in (")", "]"):
                if depth == 0:
                    break
                depth -= 1
            elif t.text == "}":
                if depth == 0:
                    break
                depth -= 1
            elif t.text == ";" and depth == 0:
                toks.append(self.next())
                break
            toks.append(self.next())
        return toks

    # low-level scanning ----------------------------------------------------

    def parse_parens(self) -> list[Token]:
        self.expect("(")
        depth = 1
        toks: list[Token] = []
        while self.peek() is not None:
            t = self.next()
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    return toks
            toks.append(t)
        raise ParseFailure("unterminated parenthesis")

    def skip_balanced(self, open_text: str, close_text: str) -> None:
        self.expect(open_text)
        depth = 1
        while self.peek() is not None:
            t = self.next()
            if t.text == open_text:
                depth += 1
            elif t.text == close_text:
                depth -= 1
                if depth == 0:
                    return
        raise ParseFailure(f"unterminated {open_text}...{close_text}")

    def skip_generics(self) -> None:
        depth = 0
        while self.peek() is not None:
            t = self.next()
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth -= 1
            elif t.text == ">>":
                depth -= 2
            elif t.text == ">>>":
                depth -= 3
            if depth <= 0:
                return
        raise ParseFailure("unterminated type arguments")

    def skip_to_semicolon(self) -> None:
        while self.peek() is not None:
            if self.next().text == ";":
                return

    def try_parse_type(self, pos: int) -> int | None:
        return try_parse_type_tokens(self.toks, pos)


def try_parse_type_tokens(toks: list[Token], pos: int) -> int | None:
    """Return the index one past a type reference starting at pos, else None."""
    i = pos
    n = len(toks)
    if i >= n:
        return None
    t = toks[i]
    if t.kind == "keyword" and t.text in PRIMITIVES:
        i += 1
    elif t.kind == "ident":
        i += 1
        while i + 1 < n and toks[i].text == "." and toks[i + 1].kind == "ident":
            i += 2
    else:
        return None
    if i < n and toks[i].text == "<":
        depth = 0
        while i < n:
            text = toks[i].text
            if text == "<":
                depth += 1
            elif text == ">":
                depth -= 1
            elif text == ">>":
                depth -= 2
            elif text == ">>>":
                depth -= 3
            elif text in (";", "{", "}") or (depth == 0):
                return None
            i += 1
            if depth <= 0:
                break
        if depth > 0:
            return None
    while i + 1 < n and toks[i].text == "[" and toks[i + 1].text == "]":
        i += 2
    return i


def _split_top_level(toks: list[Token], sep: str) -> list[list[Token]]:
    parts: list[list[Token]] = [[]]
    depth = 0
    ternary = 0
    for t in toks:
        if t.text in ("(", "[", "{"):
            depth += 1
        elif t.text in (")", "]", "}"):
            depth -= 1
        elif t.text == "?" and depth == 0:
            ternary += 1
        if t.text == sep and depth == 0 and not (sep == ":" and ternary > 0):
            parts.append([])
            continue
        if t.text == ":" and ternary > 0 and depth == 0:
            ternary -= 1
        parts[-1].append(t)
    return parts


def _end_of(node) -> int:
    if isinstance(node, Block):
        return node.close_line
    return node.end_line


# ---------------------------------------------------------------------------
# Public API


@dataclass
class MethodTree:
    source: str
    lines: list[str]
    wrapper: ClassDecl | None
    method: MethodDecl
    warnings: list[str]

    @property
    def line_count(self) -> int:
        return len(self.lines)

    def block_regions(self, include_class: bool = True) -> list[BlockRegion]:
        regions: list[BlockRegion] = []
        next_id = [1]

        def add(open_line, close_line, kind, block, node=None):
            regions.append(BlockRegion(next_id[0], open_line, close_line, kind, block, node))
            next_id[0] += 1

        if include_class and self.wrapper is not None:
            add(self.wrapper.open_line, self.wrapper.close_line, "class", None, self.wrapper)
        if self.method.body is not None:
            _collect_regions(self.method.body, "method", add)
        return regions

    def innermost_region(self, line: int, include_class: bool = False) -> BlockRegion | None:
        best = None
        for region in self.block_regions(include_class=include_class):
            if region.open_line <= line <= region.close_line:
                if best is None or (region.open_line, region.id) >= (best.open_line, best.id):
                    best = region
        return best

    def construct_chain(self, line: int) -> list:
        """Constructs enclosing a line, outermost first."""
        chain: list = []
        if self.method.body is None:
            return chain
        _chain_into(self.method.body, line, chain)
        return chain

    def simple_statements(self):
        """All SimpleStmt/LocalDecl nodes in the method body, in source order."""
        out: list = []
        if self.method.body is not None:
            _walk_simple(self.method.body, out)
        return out


def _collect_regions(block: Block, kind: str, add) -> None:
    add(block.open_line, block.close_line, kind, block)
    for stmt in block.statements:
        _collect_regions_stmt(stmt, add)


def _collect_regions_stmt(stmt, add) -> None:
    if isinstance(stmt, Block):
        _collect_regions(stmt, "bare", add)
    elif isinstance(stmt, IfStmt):
        _collect_body(stmt.then_body, "if", add)
        if isinstance(stmt.else_body, IfStmt):
            _collect_regions_stmt(stmt.else_body, add)
        elif stmt.else_body is not None:
            _collect_body(stmt.else_body, "else", add)
    elif isinstance(stmt, (WhileStmt, DoWhileStmt)):
        _collect_body(stmt.body, "while" if isinstance(stmt, WhileStmt) else "do", add)
    elif isinstance(stmt, ForStmt):
        _collect_body(stmt.body, "for", add)
    elif isinstance(stmt, TryStmt):
        _collect_regions(stmt.body, "try", add)
        for catch in stmt.catches:
            add(catch.block.open_line, catch.block.close_line, "catch", catch.block, catch)
            for inner in catch.block.statements:
                _collect_regions_stmt(inner, add)
        if stmt.finally_block is not None:
            _collect_regions(stmt.finally_block, "finally", add)
    elif isinstance(stmt, SwitchStmt):
        _collect_regions(stmt.body, "switch", add)
    elif isinstance(stmt, SyncStmt):
        _collect_regions(stmt.body, "sync", add)


def _collect_body(body, kind: str, add) -> None:
    if isinstance(body, Block):
        _collect_regions(body, kind, add)
    else:
        _collect_regions_stmt(body, add)


def _chain_into(node, line: int, chain: list) -> None:
    for stmt in _children_of(node):
        span = _span_of(stmt)
        if span is None or not (span[0] <= line <= span[1]):
            continue
        if isinstance(stmt, (IfStmt, WhileStmt, DoWhileStmt, ForStmt, TryStmt,
                             SwitchStmt, SyncStmt, Block)):
            chain.append(stmt)
        _chain_into(stmt, line, chain)


def _children_of(node):
    if isinstance(node, Block):
        return node.statements
    if isinstance(node, IfStmt):
        out = [node.then_body]
        if node.else_body is not None:
            out.append(node.else_body)
        return out
    if isinstance(node, (WhileStmt, DoWhileStmt, ForStmt)):
        return [node.body]
    if isinstance(node, TryStmt):
        out = [node.body] + [c.block for c in node.catches]
        if node.finally_block is not None:
            out.append(node.finally_block)
        return out
    if isinstance(node, (SwitchStmt, SyncStmt)):
        return [node.body]
    return []


def _span_of(node) -> tuple[int, int] | None:
    if isinstance(node, Block):
        return node.open_line, node.close_line
    if hasattr(node, "start_line"):
        return node.start_line, node.end_line
    return None


def _walk_simple(node, out: list) -> None:
    if isinstance(node, (SimpleStmt, LocalDecl)):
        out.append(node)
        return
    for child in _children_of(node):
        _walk_simple(child, out)


def simple_statements_of(method: MethodDecl) -> list:
    """All SimpleStmt/LocalDecl nodes in a method body, in source order."""
    out: list = []
    if method.body is not None:
        _walk_simple(method.body, out)
    return out


def parse_file(source: str) -> tuple[list[ClassDecl], list[MethodDecl], list[str]]:
    """Parse a compilation unit (class files or bare methods)."""
    toks = tokenize(source)
    parser = _Parser(toks)
    classes, bare = parser.parse_compilation_unit()
    return classes, bare, parser.warnings


def parse_method(source: str) -> MethodTree:
    """Parse a single method, optionally wrapped in a class."""
    toks = tokenize(source)
    if not toks:
        raise ParseFailure("empty input")
    parser = _Parser(toks)
    classes, bare = parser.parse_compilation_unit()
    lines = source.splitlines()
    if classes:
        wrapper = classes[0]
        candidates = [m for m in _all_methods(wrapper) if m.body is not None]
        if not candidates:
            raise ParseFailure("wrapper class contains no method with a body")
        return MethodTree(source, lines, wrapper, candidates[0], parser.warnings)
    if bare:
        method = bare[0]
        if method.body is None:
            raise ParseFailure("method has no body")
        return MethodTree(source, lines, None, method, parser.warnings)
    raise ParseFailure("no method declaration found")


def _all_methods(cls: ClassDecl):
    yield from cls.methods
    for inner in cls.classes:
        yield from _all_methods(inner)


def block_map(source: str) -> dict[int, int]:
    """Map every line of a method source to its innermost brace-delimited block id.

    A block's opening line belongs to the enclosing block (an insertion there
    lands before the construct); its closing line belongs to the block itself.
    Lines outside any block map to 0.
    """
    tree = parse_method(source)
    regions = tree.block_regions(include_class=True)
    mapping: dict[int, int] = {}
    for line in range(1, tree.line_count + 1):
        best = None
        for region in regions:
            if region.open_line < line <= region.close_line:
                if best is None or (region.open_line, region.id) >= (best.open_line, best.id):
                    best = region
        mapping[line] = best.id if best is not None else 0
    return mapping
