"""Frontend for the C-like mini language.

Programs are procedures over integers, booleans, and stack arrays whose
size is a linear expression in scope (``int a[N];``).  Specification
statements ``assume(...)`` / ``assert(...)`` take either a plain boolean
expression, a quantified form ``forall k1 k2. GUARD ==> BODY`` whose
index variables are matched to the arrays they read, or the canonical
s-expression property syntax ``(qprop ((a k1 k2)) MATRIX)``.

Parsing yields a plain syntax tree; the type checker resolves scopes
(shadowing allowed, innermost wins), rewrites expressions into sorted
terms, and computes which array parameters each procedure may write
(directly or through calls).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .terms import (
    ARRAY_BOOL, ARRAY_INT, BOOL, Block, BoolConst, Forall, INT, IntConst,
    Len, NotLinear, QuantifiedProperty, Read, Sort, SortError, Term,
    TermParseError, TRUE, Var, add, and_, check_property_reads, eq,
    free_vars, geq, gt, implies, intc, leq, linear_form, lt, mul, neq, not_,
    or_, sub, term_from_sexpr, contains_write,
)


class MiniLangError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        if line:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


class ParseError(MiniLangError):
    pass


class UnsupportedFeatureError(MiniLangError):
    pass


class TypeError_(MiniLangError):
    """Sort or scoping error (named to avoid the builtin)."""


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

KEYWORDS = {"void", "int", "bool", "unsigned", "if", "else", "while",
            "return", "assume", "assert", "forall", "true", "false", "len"}

_PUNCT = ["==>", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
          "(", ")", "[", "]", "{", "}", ";", ",", ".", "+", "-", "*",
          "/", "%", "<", ">", "=", "!"]


@dataclass(frozen=True)
class Token:
    kind: str   # "num" | "id" | "kw" | "punct" | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list:
    tokens = []
    line, col, i = 1, 1, 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end < 0:
                raise ParseError("unterminated comment", line, col)
            for ch in source[i:end + 2]:
                if ch == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            i = end + 2
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("num", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            tokens.append(Token("kw" if text in KEYWORDS else "id", text, line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Syntax tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EInt:
    value: int


@dataclass(frozen=True)
class EBool:
    value: bool


@dataclass(frozen=True)
class EVar:
    name: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class EUnary:
    op: str
    arg: object


@dataclass(frozen=True)
class EBin:
    op: str
    left: object
    right: object
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class EIndex:
    array: object
    index: object
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class ECall:
    name: str
    args: tuple
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class ELen:
    array: object


@dataclass(frozen=True)
class PropertyAst:
    qvars: tuple          # quantified index variables, in order
    body: object          # expression, or None when raw is set
    raw: object = None    # token s-expression for the embedded syntax
    line: int = 0
    col: int = 0


@dataclass
class Stmt:
    line: int = 0
    col: int = 0


@dataclass
class SDecl(Stmt):
    sort: str = "int"     # "int" | "bool"
    name: str = ""
    size: object = None   # array size expression, None for scalars
    init: object = None


@dataclass
class SAssign(Stmt):
    name: str = ""
    expr: object = None


@dataclass
class SStore(Stmt):
    name: str = ""
    index: object = None
    value: object = None


@dataclass
class SIf(Stmt):
    cond: object = None
    then_body: list = field(default_factory=list)
    else_body: list = field(default_factory=list)


@dataclass
class SWhile(Stmt):
    cond: object = None
    body: list = field(default_factory=list)


@dataclass
class SAssume(Stmt):
    prop: object = None


@dataclass
class SAssert(Stmt):
    prop: object = None


@dataclass
class SReturn(Stmt):
    expr: object = None


@dataclass
class SCall(Stmt):
    target: object = None  # assigned variable name, or None
    callee: str = ""
    args: tuple = ()


@dataclass
class Procedure:
    name: str
    ret: str               # "void" | "int" | "bool"
    params: tuple          # tuple[(sort-name, param-name, is_array)]
    body: list
    line: int = 0
    col: int = 0


@dataclass
class Program:
    procedures: list

    def procedure(self, name: str) -> Procedure:
        for p in self.procedures:
            if p.name == name:
                return p
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def parse(source: str) -> Program:
    return _Parser(tokenize(source)).program()


class _Parser:
    def __init__(self, tokens: list) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            self.error(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    def at(self, text: str, ahead: int = 0) -> bool:
        return self.peek(ahead).text == text

    # --- program structure ---

    def program(self) -> Program:
        procs = []
        while self.peek().kind != "eof":
            procs.append(self.procedure())
        if sum(1 for p in procs if p.name == "main") != 1:
            raise ParseError("program must define exactly one procedure named main")
        return Program(procs)

    def type_name(self) -> str:
        tok = self.next()
        if tok.text == "unsigned":
            if self.at("int"):
                self.next()
            return "int"
        if tok.text in ("int", "bool", "void"):
            return tok.text
        self.error(f"expected a type, found {tok.text!r}", tok)

    def procedure(self) -> Procedure:
        start = self.peek()
        ret = self.type_name()
        name = self.next()
        if name.kind != "id":
            self.error("expected procedure name", name)
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                psort = self.type_name()
                if psort == "void":
                    self.error("void parameter")
                pname = self.next()
                if pname.kind != "id":
                    self.error("expected parameter name", pname)
                is_array = False
                if self.at("["):
                    self.next()
                    self.expect("]")
                    is_array = True
                params.append((psort, pname.text, is_array))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        body = self.block()
        return Procedure(name.text, ret, tuple(params), body, start.line, start.col)

    def block(self) -> list:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self.error("unclosed block")
            out.extend(self.statement())
        self.expect("}")
        return out

    # --- statements (may expand to several, e.g. decl-with-call) ---

    def statement(self) -> list:
        tok = self.peek()
        if tok.text == "{":
            # a bare block keeps its own scope
            inner = self.block()
            s = SIf(tok.line, tok.col, EBool(True), inner, [])
            return [s]
        if tok.text in ("int", "bool", "unsigned"):
            return self.declaration()
        if tok.text == "if":
            return [self.if_stmt()]
        if tok.text == "while":
            return [self.while_stmt()]
        if tok.text in ("assume", "assert"):
            return [self.spec_stmt()]
        if tok.text == "return":
            self.next()
            expr = None if self.at(";") else self.expr()
            self.expect(";")
            return [SReturn(tok.line, tok.col, expr)]
        if tok.kind == "id":
            return self.simple_stmt()
        if tok.text in ("/", "%"):
            raise UnsupportedFeatureError(
                f"operator {tok.text!r} is not supported", tok.line, tok.col)
        self.error(f"unexpected token {tok.text!r}", tok)

    def declaration(self) -> list:
        tok = self.peek()
        sort = self.type_name()
        if sort == "void":
            self.error("cannot declare a void variable", tok)
        name = self.next()
        if name.kind != "id":
            self.error("expected variable name", name)
        decl = SDecl(tok.line, tok.col, sort, name.text)
        out: list = [decl]
        if self.at("["):
            self.next()
            decl.size = self.expr()
            self.expect("]")
        elif self.at("="):
            self.next()
            init = self.expr()
            if isinstance(init, ECall):
                out.append(SCall(tok.line, tok.col, name.text, init.name, init.args))
            else:
                decl.init = init
        self.expect(";")
        return out

    def simple_stmt(self) -> list:
        tok = self.next()
        name = tok.text
        if self.at("++") or self.at("--"):
            op = self.next().text
            self.expect(";")
            delta = EInt(1) if op == "++" else EInt(-1)
            return [SAssign(tok.line, tok.col, name, EBin("+", EVar(name), delta))]
        if self.at("("):
            args = self.call_args()
            self.expect(";")
            return [SCall(tok.line, tok.col, None, name, args)]
        if self.at("["):
            self.next()
            index = self.expr()
            self.expect("]")
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return [SStore(tok.line, tok.col, name, index, value)]
        self.expect("=")
        expr = self.expr()
        self.expect(";")
        if isinstance(expr, ECall):
            return [SCall(tok.line, tok.col, name, expr.name, expr.args)]
        return [SAssign(tok.line, tok.col, name, expr)]

    def call_args(self) -> tuple:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.expr())
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        return tuple(args)

    def if_stmt(self) -> SIf:
        tok = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then_body = self.branch_body()
        else_body = []
        if self.at("else"):
            self.next()
            else_body = self.branch_body()
        return SIf(tok.line, tok.col, cond, then_body, else_body)

    def branch_body(self) -> list:
        if self.at("{"):
            return self.block()
        return self.statement()

    def while_stmt(self) -> SWhile:
        tok = self.expect("while")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        return SWhile(tok.line, tok.col, cond, self.branch_body())

    def spec_stmt(self) -> Stmt:
        tok = self.next()
        self.expect("(")
        prop = self.property_()
        self.expect(")")
        self.expect(";")
        cls = SAssume if tok.text == "assume" else SAssert
        return cls(tok.line, tok.col, prop)

    def property_(self) -> PropertyAst:
        tok = self.peek()
        if tok.text == "forall":
            self.next()
            qvars = []
            while self.peek().kind == "id":
                qvars.append(self.next().text)
            if not qvars:
                self.error("forall needs at least one variable")
            self.expect(".")
            body = self.expr()
            return PropertyAst(tuple(qvars), body, None, tok.line, tok.col)
        if tok.text == "(" and self.peek(1).text in ("qprop", "qprop-ord"):
            return PropertyAst((), None, self.token_sexpr(), tok.line, tok.col)
        return PropertyAst((), self.expr(), None, tok.line, tok.col)

    def token_sexpr(self):
        tok = self.next()
        if tok.text == "(":
            items = []
            while not self.at(")"):
                if self.peek().kind == "eof":
                    self.error("unclosed s-expression")
                items.append(self.token_sexpr())
            self.next()
            return items
        if tok.kind in ("num", "id", "kw") or tok.text == "-":
            return tok.text
        self.error(f"unexpected token {tok.text!r} in s-expression", tok)

    # --- expressions ---

    def expr(self):
        left = self.or_expr()
        if self.at("==>"):
            tok = self.next()
            right = self.expr()
            return EBin("==>", left, right, tok.line, tok.col)
        return left

    def or_expr(self):
        left = self.and_expr()
        while self.at("||"):
            tok = self.next()
            left = EBin("||", left, self.and_expr(), tok.line, tok.col)
        return left

    def and_expr(self):
        left = self.rel_expr()
        while self.at("&&"):
            tok = self.next()
            left = EBin("&&", left, self.rel_expr(), tok.line, tok.col)
        return left

    def rel_expr(self):
        ops = ("<=", "<", ">=", ">", "==", "!=")
        operands = [self.add_expr()]
        rels = []
        while self.peek().text in ops:
            tok = self.next()
            rels.append(tok)
            operands.append(self.add_expr())
        if not rels:
            return operands[0]
        atoms = [EBin(t.text, a, b, t.line, t.col)
                 for t, a, b in zip(rels, operands, operands[1:])]
        out = atoms[0]
        for a in atoms[1:]:
            out = EBin("&&", out, a)
        return out

    def add_expr(self):
        left = self.mul_expr()
        while self.at("+") or self.at("-"):
            tok = self.next()
            left = EBin(tok.text, left, self.mul_expr(), tok.line, tok.col)
        return left

    def mul_expr(self):
        left = self.unary_expr()
        while self.peek().text in ("*", "/", "%"):
            tok = self.next()
            if tok.text in ("/", "%"):
                raise UnsupportedFeatureError(
                    f"operator {tok.text!r} is not supported", tok.line, tok.col)
            left = EBin("*", left, self.unary_expr(), tok.line, tok.col)
        return left

    def unary_expr(self):
        if self.at("-"):
            tok = self.next()
            return EUnary("-", self.unary_expr())
        if self.at("!"):
            tok = self.next()
            return EUnary("!", self.unary_expr())
        return self.postfix_expr()

    def postfix_expr(self):
        out = self.primary()
        while self.at("["):
            tok = self.next()
            index = self.expr()
            self.expect("]")
            out = EIndex(out, index, tok.line, tok.col)
        return out

    def primary(self):
        tok = self.next()
        if tok.kind == "num":
            return EInt(int(tok.text))
        if tok.text == "true":
            return EBool(True)
        if tok.text == "false":
            return EBool(False)
        if tok.text == "len":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return ELen(inner)
        if tok.kind == "id":
            if self.at("("):
                args = self.call_args()
                return ECall(tok.text, args, tok.line, tok.col)
            return EVar(tok.text, tok.line, tok.col)
        if tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        self.error(f"unexpected token {tok.text!r} in expression", tok)


# ---------------------------------------------------------------------------
# Typed program
# ---------------------------------------------------------------------------

@dataclass
class TDecl:
    name: str
    sort: Sort
    size: Optional[Term]
    init: Optional[Term]


@dataclass
class TAssign:
    name: str
    term: Term


@dataclass
class TStore:
    name: str
    index: Term
    value: Term


@dataclass
class TIf:
    cond: Term
    then_body: list
    else_body: list


@dataclass
class TWhile:
    cond: Term
    body: list
    loop_id: int


@dataclass
class TAssume:
    prop: QuantifiedProperty


@dataclass
class TAssert:
    prop: QuantifiedProperty


@dataclass
class TReturn:
    term: Optional[Term]


@dataclass
class TCall:
    target: Optional[str]
    callee: str
    args: tuple  # tuple[Term]


@dataclass
class TypedProcedure:
    name: str
    ret: Optional[Sort]
    params: tuple            # tuple[(name, Sort)]
    body: list
    written_params: frozenset  # array parameter names the body may write
    has_loop: bool


@dataclass
class TypedProgram:
    procedures: dict  # name -> TypedProcedure

    @property
    def main(self) -> TypedProcedure:
        return self.procedures["main"]


_SORTS = {"int": INT, "bool": BOOL}


class _Scope:
    """Lexical scopes with shadowing; every binder gets a unique name."""

    def __init__(self) -> None:
        self.stack: list = [{}]
        self.used: set = set()

    def push(self) -> None:
        self.stack.append({})

    def pop(self) -> None:
        self.stack.pop()

    def declare(self, name: str, sort: Sort) -> str:
        unique = name
        counter = 2
        while unique in self.used:
            unique = f"{name}_{counter}"
            counter += 1
        self.used.add(unique)
        self.stack[-1][name] = (unique, sort)
        return unique

    def lookup(self, name: str):
        for frame in reversed(self.stack):
            if name in frame:
                return frame[name]
        return None


def typecheck(program: Program) -> TypedProgram:
    """Resolve scopes, sort every expression, and reject unsupported
    constructs (nested calls, nonlinear arithmetic, nonlinear array sizes)."""
    sigs = {}
    for proc in program.procedures:
        if proc.name in sigs:
            raise TypeError_(f"procedure {proc.name} defined twice", proc.line, proc.col)
        if proc.name == "main" and proc.params:
            raise TypeError_("main takes no parameters", proc.line, proc.col)
        params = []
        for psort, pname, is_array in proc.params:
            base = _SORTS[psort]
            params.append((pname, Sort("array", base) if is_array else base))
        if len({n for n, _ in params}) != len(params):
            raise TypeError_(f"duplicate parameter in {proc.name}", proc.line, proc.col)
        ret = None if proc.ret == "void" else _SORTS[proc.ret]
        sigs[proc.name] = (tuple(params), ret)

    checker = _Checker(sigs)
    typed = {}
    for proc in program.procedures:
        typed[proc.name] = checker.check_procedure(proc)
    _propagate_writes(typed)
    return TypedProgram(typed)


def _propagate_writes(procs: dict) -> None:
    """Close the written-parameter sets under calls (handles recursion)."""
    changed = True
    while changed:
        changed = False
        for proc in procs.values():
            extra = _call_writes(proc.body, proc, procs)
            if extra - proc.written_params:
                proc.written_params = proc.written_params | extra
                changed = True


def _call_writes(body: list, proc: TypedProcedure, procs: dict) -> frozenset:
    out = set()
    for stmt in body:
        if isinstance(stmt, TCall):
            callee = procs[stmt.callee]
            for arg, (pname, psort) in zip(stmt.args, callee.params):
                if psort.is_array and pname in callee.written_params \
                        and isinstance(arg, Var):
                    if any(arg.name == n and s.is_array for n, s in proc.params):
                        out.add(arg.name)
        elif isinstance(stmt, TIf):
            out |= _call_writes(stmt.then_body, proc, procs)
            out |= _call_writes(stmt.else_body, proc, procs)
        elif isinstance(stmt, TWhile):
            out |= _call_writes(stmt.body, proc, procs)
    return frozenset(out)


class _Checker:
    def __init__(self, sigs: dict) -> None:
        self.sigs = sigs
        self.loop_counter = 0

    def check_procedure(self, proc: Procedure) -> TypedProcedure:
        scope = _Scope()
        params = []
        for psort, pname, is_array in proc.params:
            base = _SORTS[psort]
            sort = Sort("array", base) if is_array else base
            scope.declare(pname, sort)
            params.append((pname, sort))
        ret = None if proc.ret == "void" else _SORTS[proc.ret]
        self.ret = ret
        self.proc_name = proc.name
        self.has_loop = False
        self.written: set = set()
        self.param_names = {n for n, _ in params}
        body = self.check_body(proc.body, scope)
        written = frozenset(n for n in self.written
                            if any(n == p and s.is_array for p, s in params))
        return TypedProcedure(proc.name, ret, tuple(params), body, written, self.has_loop)

    def check_body(self, stmts: list, scope: _Scope) -> list:
        scope.push()
        out = [self.check_stmt(s, scope) for s in stmts]
        scope.pop()
        return out

    def check_stmt(self, stmt, scope: _Scope):
        if isinstance(stmt, SDecl):
            return self.check_decl(stmt, scope)
        if isinstance(stmt, SAssign):
            entry = scope.lookup(stmt.name)
            if entry is None:
                raise TypeError_(f"undeclared variable {stmt.name}", stmt.line, stmt.col)
            unique, sort = entry
            if sort.is_array:
                raise TypeError_(f"array {stmt.name} used as a scalar", stmt.line, stmt.col)
            term = self.check_expr(stmt.expr, scope, sort, stmt)
            return TAssign(unique, term)
        if isinstance(stmt, SStore):
            entry = scope.lookup(stmt.name)
            if entry is None:
                raise TypeError_(f"undeclared variable {stmt.name}", stmt.line, stmt.col)
            unique, sort = entry
            if not sort.is_array:
                raise TypeError_(f"{stmt.name} is not an array", stmt.line, stmt.col)
            index = self.check_expr(stmt.index, scope, INT, stmt)
            value = self.check_expr(stmt.value, scope, sort.elem, stmt)
            self.written.add(unique)
            return TStore(unique, index, value)
        if isinstance(stmt, SIf):
            cond = self.check_expr(stmt.cond, scope, BOOL, stmt)
            return TIf(cond, self.check_body(stmt.then_body, scope),
                       self.check_body(stmt.else_body, scope))
        if isinstance(stmt, SWhile):
            self.has_loop = True
            cond = self.check_expr(stmt.cond, scope, BOOL, stmt)
            self.loop_counter += 1
            loop_id = self.loop_counter
            return TWhile(cond, self.check_body(stmt.body, scope), loop_id)
        if isinstance(stmt, (SAssume, SAssert)):
            prop = self.check_property(stmt.prop, scope)
            return (TAssume if isinstance(stmt, SAssume) else TAssert)(prop)
        if isinstance(stmt, SReturn):
            if self.ret is None:
                if stmt.expr is not None:
                    raise TypeError_("void procedure returns a value", stmt.line, stmt.col)
                return TReturn(None)
            if stmt.expr is None:
                raise TypeError_("missing return value", stmt.line, stmt.col)
            return TReturn(self.check_expr(stmt.expr, scope, self.ret, stmt))
        if isinstance(stmt, SCall):
            return self.check_call(stmt, scope)
        raise TypeError_(f"unknown statement {stmt!r}")

    def check_decl(self, stmt: SDecl, scope: _Scope):
        base = _SORTS[stmt.sort]
        if stmt.size is not None:
            size = self.check_expr(stmt.size, scope, INT, stmt)
            try:
                linear_form(size)
            except NotLinear:
                raise UnsupportedFeatureError(
                    f"array size must be a linear expression, got {size}",
                    stmt.line, stmt.col)
            unique = scope.declare(stmt.name, Sort("array", base))
            return TDecl(unique, Sort("array", base), size, None)
        init = None
        if stmt.init is not None:
            init = self.check_expr(stmt.init, scope, base, stmt)
        unique = scope.declare(stmt.name, base)
        return TDecl(unique, base, None, init)

    def check_call(self, stmt: SCall, scope: _Scope):
        if stmt.callee not in self.sigs:
            raise TypeError_(f"unknown procedure {stmt.callee}", stmt.line, stmt.col)
        params, ret = self.sigs[stmt.callee]
        if len(stmt.args) != len(params):
            raise TypeError_(
                f"{stmt.callee} takes {len(params)} arguments, got {len(stmt.args)}",
                stmt.line, stmt.col)
        args = tuple(self.check_expr(a, scope, s, stmt) for a, (_, s) in zip(stmt.args, params))
        for arg, (pname, psort) in zip(args, params):
            if psort.is_array and not isinstance(arg, Var):
                raise TypeError_(f"array argument for {pname} must be a variable",
                                 stmt.line, stmt.col)
        target = None
        if stmt.target is not None:
            if ret is None:
                raise TypeError_(f"{stmt.callee} returns no value", stmt.line, stmt.col)
            entry = scope.lookup(stmt.target)
            if entry is None:
                raise TypeError_(f"undeclared variable {stmt.target}", stmt.line, stmt.col)
            unique, sort = entry
            if sort != ret:
                raise TypeError_(
                    f"{stmt.callee} returns {ret}, assigned to {sort} variable",
                    stmt.line, stmt.col)
            target = unique
        return TCall(target, stmt.callee, args)

    # --- expressions to terms ---

    def check_expr(self, expr, scope: _Scope, want: Optional[Sort], at) -> Term:
        term = self.expr_term(expr, scope, at)
        if want is not None:
            got = _term_sort(term, at)
            if got != want:
                raise TypeError_(f"expected {want}, got {got} in {term}", at.line, at.col)
        return term

    def expr_term(self, expr, scope: _Scope, at) -> Term:
        if isinstance(expr, EInt):
            return IntConst(expr.value)
        if isinstance(expr, EBool):
            return BoolConst(expr.value)
        if isinstance(expr, EVar):
            entry = scope.lookup(expr.name)
            if entry is None:
                raise TypeError_(f"undeclared variable {expr.name}",
                                 expr.line or at.line, expr.col or at.col)
            unique, sort = entry
            return Var(unique, sort)
        if isinstance(expr, ECall):
            raise UnsupportedFeatureError(
                "calls may only appear as a whole statement right-hand side",
                expr.line or at.line, expr.col or at.col)
        if isinstance(expr, ELen):
            arr = self.expr_term(expr.array, scope, at)
            if not _term_sort(arr, at).is_array:
                raise TypeError_(f"len() of non-array {arr}", at.line, at.col)
            return Len(arr)
        if isinstance(expr, EIndex):
            arr = self.expr_term(expr.array, scope, at)
            if not _term_sort(arr, at).is_array:
                raise TypeError_(f"indexing non-array {arr}", expr.line, expr.col)
            return Read(arr, self.expr_term(expr.index, scope, at))
        if isinstance(expr, EUnary):
            arg = self.expr_term(expr.arg, scope, at)
            if expr.op == "-":
                _require(arg, INT, at)
                return mul(-1, arg)
            _require(arg, BOOL, at)
            return not_(arg)
        if isinstance(expr, EBin):
            return self.binop_term(expr, scope, at)
        raise TypeError_(f"unknown expression {expr!r}", at.line, at.col)

    def binop_term(self, expr: EBin, scope: _Scope, at) -> Term:
        left = self.expr_term(expr.left, scope, at)
        right = self.expr_term(expr.right, scope, at)
        op = expr.op
        line, col = expr.line or at.line, expr.col or at.col
        if op in ("+", "-", "*"):
            _require(left, INT, at, line, col)
            _require(right, INT, at, line, col)
            if op == "+":
                return add(left, right)
            if op == "-":
                return sub(left, right)
            if isinstance(left, IntConst):
                return mul(left.value, right)
            if isinstance(right, IntConst):
                return mul(right.value, left)
            raise UnsupportedFeatureError(
                "nonlinear arithmetic: one factor must be a constant", line, col)
        if op in ("&&", "||", "==>"):
            _require(left, BOOL, at, line, col)
            _require(right, BOOL, at, line, col)
            return {"&&": and_, "||": or_, "==>": implies}[op](left, right)
        if op in ("<=", "<", ">=", ">"):
            _require(left, INT, at, line, col)
            _require(right, INT, at, line, col)
            return {"<=": leq, "<": lt, ">=": geq, ">": gt}[op](left, right)
        if op in ("==", "!="):
            ls, rs = _term_sort(left, at), _term_sort(right, at)
            if ls != rs:
                raise TypeError_(f"comparing {ls} with {rs}", line, col)
            return eq(left, right) if op == "==" else neq(left, right)
        raise TypeError_(f"unknown operator {op}", line, col)

    # --- properties ---

    def check_property(self, prop: PropertyAst, scope: _Scope) -> QuantifiedProperty:
        if prop.raw is not None:
            return self.sexpr_property(prop, scope)
        if not prop.qvars:
            psi = self.check_expr(prop.body, scope, BOOL, prop)
            if contains_write(psi):
                raise TypeError_("property contains an array write", prop.line, prop.col)
            return QuantifiedProperty(psi, (), TRUE)
        scope.push()
        try:
            quniques = []
            for k in prop.qvars:
                if scope.lookup(k) is not None:
                    raise TypeError_(
                        f"quantifier variable {k} shadows a program variable",
                        prop.line, prop.col)
                quniques.append(scope.declare(k, INT))
            matrix = self.check_expr(prop.body, scope, BOOL, prop)
        finally:
            scope.pop()
        blocks = self.infer_blocks(prop, tuple(quniques), matrix)
        try:
            check_property_reads(matrix, blocks)
        except SortError as e:
            raise TypeError_(str(e), prop.line, prop.col)
        if contains_write(matrix):
            raise TypeError_("property contains an array write", prop.line, prop.col)
        return QuantifiedProperty(TRUE, blocks, matrix)

    def infer_blocks(self, prop: PropertyAst, qvars: tuple, matrix: Term) -> tuple:
        """Assign each quantifier variable to the unique array it reads."""
        from .terms import children
        owner: dict = {}

        def walk(t: Term) -> None:
            if isinstance(t, Read) and isinstance(t.index, Var) \
                    and t.index.name in qvars and isinstance(t.array, Var):
                prev = owner.get(t.index.name)
                if prev is not None and prev != t.array:
                    raise TypeError_(
                        f"quantifier variable {t.index.name} reads two arrays "
                        f"({prev.name} and {t.array.name})", prop.line, prop.col)
                owner[t.index.name] = t.array
            for c in children(t):
                walk(c)

        walk(matrix)
        blocks: dict = {}
        for k in qvars:
            if k not in owner:
                raise TypeError_(
                    f"quantifier variable {k} never reads an array", prop.line, prop.col)
            blocks.setdefault(owner[k], []).append(k)
        return tuple(Block(arr, tuple(ks)) for arr, ks in blocks.items())

    def sexpr_property(self, prop: PropertyAst, scope: _Scope) -> QuantifiedProperty:
        names = {}
        for frame in scope.stack:
            for name, (unique, sort) in frame.items():
                names[name] = sort  # surface names; uniquification is invisible here
        try:
            term = term_from_sexpr(prop.raw, names)
        except TermParseError as e:
            raise TypeError_(f"bad property s-expression: {e}", prop.line, prop.col)
        # rename surface names to unique names
        mapping = {}
        for frame in scope.stack:
            for name, (unique, sort) in frame.items():
                mapping[name] = Var(unique, sort)
        from .terms import substitute
        term = substitute(term, mapping)
        if isinstance(term, Forall):
            return QuantifiedProperty(TRUE, term.blocks, term.matrix, term.ordered)
        if _term_sort(term, prop) != BOOL:
            raise TypeError_("property must be boolean", prop.line, prop.col)
        return QuantifiedProperty(term, (), TRUE)


def _term_sort(term: Term, at) -> Sort:
    from .terms import sort_of
    try:
        return sort_of(term)
    except SortError as e:
        raise TypeError_(str(e), getattr(at, "line", 0), getattr(at, "col", 0))


def _require(term: Term, sort: Sort, at, line: int = 0, col: int = 0) -> None:
    got = _term_sort(term, at)
    if got != sort:
        raise TypeError_(f"expected {sort}, got {got} in {term}",
                         line or getattr(at, "line", 0), col or getattr(at, "col", 0))
