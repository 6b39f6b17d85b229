"""Verification-condition generation: typed programs to Horn clause systems.

Each loop head gets one uninterpreted predicate over the variables in
scope there; each non-main procedure gets a precondition predicate over
its parameters and a postcondition predicate relating parameters, final
states of written array parameters, and the return value.  Straight-line
segments between cut points are compiled per path: scalars evaluate
symbolically and array updates accumulate as functional writes, so a
segment contributes a single constraint.  ``assume`` strengthens the
current constraint, ``assert`` emits a query clause, and calls emit a
precondition-establishment clause and continue under the callee's
postcondition (recursion simply makes the clause set nonlinear).

The safety of the program is equivalent to the satisfiability of the
generated system.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .chc import ChcSystem, Clause, PredApp, PredicateSig
from .learner import LinPattern
from .minilang import (
    TAssert, TAssign, TAssume, TCall, TDecl, TIf, TReturn, TStore, TWhile,
    TypedProcedure, TypedProgram,
)
from .terms import (
    And, BoolConst, Eq, Forall, IntConst, Leq, Len, Not, NotLinear, Or,
    QuantifiedProperty, Read, Sort, Term, TRUE, Var, and_, children, eq,
    free_vars, linear_form, not_, substitute,
)


@dataclass
class LocationMap:
    """Which predicate speaks for which program location."""

    loops: dict = field(default_factory=dict)        # loop_id -> predicate name
    loop_procs: dict = field(default_factory=dict)   # loop_id -> procedure name
    pre: dict = field(default_factory=dict)          # procedure -> predicate name
    post: dict = field(default_factory=dict)         # procedure -> predicate name


@dataclass(frozen=True)
class _Ctx:
    """One path through a straight-line segment."""

    apps: tuple         # source predicate applications
    constraints: tuple  # accumulated constraint terms
    state: tuple        # tuple[(name, Term)]: current value of every variable
    scope: tuple        # tuple[(name, Sort)]: visible variables, in order

    def env(self) -> dict:
        return dict(self.state)

    def with_state(self, name: str, term: Term) -> "_Ctx":
        env = self.env()
        env[name] = term
        return replace(self, state=tuple(env.items()))

    def add_constraint(self, *terms: Term) -> "_Ctx":
        return replace(self, constraints=self.constraints + tuple(terms))

    def add_scope(self, name: str, sort: Sort) -> "_Ctx":
        return replace(self, scope=self.scope + ((name, sort),))


def gen_chc(program: TypedProgram) -> tuple:
    """Build the clause system; returns ``(system, location_map)``."""
    gen = _Generator(program)
    gen.run()
    return gen.system, gen.locations


class _Generator:
    def __init__(self, program: TypedProgram) -> None:
        self.program = program
        self.system = ChcSystem()
        self.locations = LocationMap()
        self.loop_preds: dict = {}
        self.fresh_counter = 0
        self.loop_index = 0
        self._declare_summaries()

    # --- predicates ---

    def _declare_summaries(self) -> None:
        for proc in self.program.procedures.values():
            if proc.name == "main":
                continue
            pre_name = f"P_{proc.name}"
            self.system.add_predicate(PredicateSig(pre_name, tuple(proc.params)))
            self.locations.pre[proc.name] = pre_name
            post_params = list(proc.params)
            for pname, psort in proc.params:
                if pname in proc.written_params:
                    post_params.append((f"{pname}_out", psort))
            if proc.ret is not None:
                post_params.append(self._fresh_param_name("res", post_params, proc.ret))
            post_name = f"Q_{proc.name}"
            self.system.add_predicate(PredicateSig(post_name, tuple(post_params)))
            self.locations.post[proc.name] = post_name

    @staticmethod
    def _fresh_param_name(base: str, taken: list, sort: Sort) -> tuple:
        names = {n for n, _ in taken}
        name = base
        while name in names:
            name += "_"
        return (name, sort)

    def loop_pred(self, loop_id: int, proc: str, scope: tuple) -> PredicateSig:
        if loop_id not in self.loop_preds:
            name = f"I{self.loop_index}"
            self.loop_index += 1
            sig = PredicateSig(name, tuple(scope))
            self.system.add_predicate(sig)
            self.loop_preds[loop_id] = sig
            self.locations.loops[loop_id] = name
            self.locations.loop_procs[loop_id] = proc
        sig = self.loop_preds[loop_id]
        if sig.params != tuple(scope):
            raise AssertionError(f"scope mismatch at loop {loop_id}")
        return sig

    # --- helpers ---

    def fresh(self, base: str) -> str:
        self.fresh_counter += 1
        return f"{base}!{self.fresh_counter}"

    def instantiate(self, term: Term, ctx: _Ctx) -> Term:
        return substitute(term, ctx.env())

    def freshen(self, term: Term, base: str, sort: Sort, constraints: list) -> Var:
        """Head and body application arguments must be variables."""
        if isinstance(term, Var):
            return term
        v = Var(self.fresh(base), sort)
        constraints.append(Eq(v, term))
        return v

    def emit(self, ctx: _Ctx, head_sig: Optional[PredicateSig]) -> None:
        extra: list = []
        head = None
        if head_sig is not None:
            env = ctx.env()
            args = tuple(self.freshen(env[name], name, sort, extra)
                         for name, sort in head_sig.params)
            head = PredApp(head_sig.name, args)
        constraint = and_(*(ctx.constraints + tuple(extra)))
        self.system.add_clause(Clause(ctx.apps, constraint, head))

    def emit_query(self, ctx: _Ctx, negated: Term) -> None:
        constraint = and_(*(ctx.constraints + (negated,)))
        self.system.add_clause(Clause(ctx.apps, constraint, None))

    # --- procedure walks ---

    def run(self) -> None:
        for proc in self.program.procedures.values():
            self.walk_procedure(proc)

    def walk_procedure(self, proc: TypedProcedure) -> None:
        self.current = proc
        scope = list(proc.params)
        state = {name: Var(name, sort) for name, sort in proc.params}
        apps: tuple = ()
        if proc.name != "main":
            pre = self.system.predicates[self.locations.pre[proc.name]]
            apps = (PredApp(pre.name, pre.vars()),)
        self.shadows = {}
        if proc.name != "main" and proc.has_loop:
            reassigned = _reassigned_params(proc)
            for pname, psort in proc.params:
                if pname in reassigned or pname in proc.written_params:
                    shadow = f"{pname}__in"
                    self.shadows[pname] = shadow
                    scope.append((shadow, psort))
                    state[shadow] = Var(pname, psort)
        ctx = _Ctx(apps, (), tuple(state.items()), tuple(scope))
        self.walk_list(proc.body, ctx, self.end_of_procedure)

    def end_of_procedure(self, ctx: _Ctx) -> None:
        proc = self.current
        if proc.name == "main":
            return
        if proc.ret is None:
            self.emit_post(ctx, None)
        # a non-void path falling off the end never returns: no clause

    def emit_post(self, ctx: _Ctx, ret_term: Optional[Term]) -> None:
        proc = self.current
        post = self.system.predicates[self.locations.post[proc.name]]
        env = ctx.env()
        extra: list = []
        args = []
        for pname, psort in proc.params:
            entry = env[self.shadows[pname]] if pname in self.shadows else Var(pname, psort)
            args.append(self.freshen(entry, pname, psort, extra))
        for pname, psort in proc.params:
            if pname in proc.written_params:
                args.append(self.freshen(env[pname], f"{pname}_out", psort, extra))
        if proc.ret is not None:
            name, sort = post.params[-1]
            args.append(self.freshen(ret_term, name, sort, extra))
        head = PredApp(post.name, tuple(args))
        constraint = and_(*(ctx.constraints + tuple(extra)))
        self.system.add_clause(Clause(ctx.apps, constraint, head))

    def walk_list(self, stmts: list, ctx: _Ctx, cont) -> None:
        if not stmts:
            cont(ctx)
            return
        stmt, rest = stmts[0], stmts[1:]
        tail = lambda c: self.walk_list(rest, c, cont)
        outer_scope = ctx.scope

        if isinstance(stmt, TDecl):
            ctx = ctx.add_scope(stmt.name, stmt.sort)
            if stmt.size is not None:
                arr = Var(stmt.name, stmt.sort)
                size = self.instantiate(stmt.size, ctx)
                ctx = ctx.with_state(stmt.name, arr).add_constraint(Eq(Len(arr), size))
            elif stmt.init is not None:
                ctx = ctx.with_state(stmt.name, self.instantiate(stmt.init, ctx))
            else:
                ctx = ctx.with_state(stmt.name, Var(stmt.name, stmt.sort))
            tail(ctx)
        elif isinstance(stmt, TAssign):
            tail(ctx.with_state(stmt.name, self.instantiate(stmt.term, ctx)))
        elif isinstance(stmt, TStore):
            arr = ctx.env()[stmt.name]
            from .terms import Write
            updated = Write(arr, self.instantiate(stmt.index, ctx),
                            self.instantiate(stmt.value, ctx))
            tail(ctx.with_state(stmt.name, updated))
        elif isinstance(stmt, TAssume):
            tail(ctx.add_constraint(self.instantiate(stmt.prop.to_term(), ctx)))
        elif isinstance(stmt, TAssert):
            prop = self.instantiate(stmt.prop.to_term(), ctx)
            self.emit_query(ctx, not_(prop))
            tail(ctx.add_constraint(prop))
        elif isinstance(stmt, TIf):
            cond = self.instantiate(stmt.cond, ctx)
            restore = lambda c: tail(replace(c, scope=outer_scope))
            self.walk_list(stmt.then_body, ctx.add_constraint(cond), restore)
            self.walk_list(stmt.else_body, ctx.add_constraint(not_(cond)), restore)
        elif isinstance(stmt, TWhile):
            self.walk_while(stmt, ctx, tail)
        elif isinstance(stmt, TReturn):
            ret = self.instantiate(stmt.term, ctx) if stmt.term is not None else None
            self.emit_post(ctx, ret)
        elif isinstance(stmt, TCall):
            self.walk_call(stmt, ctx, tail)
        else:
            raise AssertionError(f"unknown statement {stmt!r}")

    def walk_while(self, stmt: TWhile, ctx: _Ctx, cont) -> None:
        sig = self.loop_pred(stmt.loop_id, self.current.name, ctx.scope)
        self.emit(ctx, sig)
        params = sig.vars()
        base = _Ctx((PredApp(sig.name, params),), (),
                    tuple((v.name, v) for v in params), ctx.scope)
        cond = self.instantiate(stmt.cond, base)
        body_ctx = base.add_constraint(cond)
        self.walk_list(stmt.body, body_ctx,
                       lambda c: self.emit(replace(c, scope=ctx.scope), sig))
        cont(base.add_constraint(not_(cond)))

    def walk_call(self, stmt: TCall, ctx: _Ctx, cont) -> None:
        callee = self.program.procedures[stmt.callee]
        pre = self.system.predicates[self.locations.pre[stmt.callee]]
        post = self.system.predicates[self.locations.post[stmt.callee]]
        extra: list = []
        arg_vars = []
        for arg, (pname, psort) in zip(stmt.args, callee.params):
            term = self.instantiate(arg, ctx)
            arg_vars.append(self.freshen(term, pname, psort, extra))
        ctx = ctx.add_constraint(*extra)
        self.system.add_clause(Clause(
            ctx.apps, and_(*ctx.constraints), PredApp(pre.name, tuple(arg_vars))))
        post_args = list(arg_vars)
        for arg, (pname, psort) in zip(stmt.args, callee.params):
            if pname in callee.written_params:
                out = Var(self.fresh(f"{arg.name if isinstance(arg, Var) else pname}_out"), psort)
                post_args.append(out)
                ctx = ctx.with_state(arg.name, out)
        if callee.ret is not None:
            ret = Var(self.fresh(stmt.target or "ret"), callee.ret)
            post_args.append(ret)
            if stmt.target is not None:
                ctx = ctx.with_state(stmt.target, ret)
        ctx = replace(ctx, apps=ctx.apps + (PredApp(post.name, tuple(post_args)),))
        cont(ctx)


def _reassigned_params(proc: TypedProcedure) -> frozenset:
    names = {n for n, _ in proc.params}
    out: set = set()

    def walk(stmts: list) -> None:
        for s in stmts:
            if isinstance(s, TAssign) and s.name in names:
                out.add(s.name)
            elif isinstance(s, TCall) and s.target in names:
                out.add(s.target)
            elif isinstance(s, TIf):
                walk(s.then_body)
                walk(s.else_body)
            elif isinstance(s, TWhile):
                walk(s.body)

    walk(proc.body)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Attribute patterns from program text
# ---------------------------------------------------------------------------

def extract_patterns(program: TypedProgram) -> set:
    """Atom shapes from conditionals, assignments, and specifications,
    with variables and array reads abstracted to holes and constants kept."""
    out: set = set()

    def harvest_atom(t: Term) -> None:
        if isinstance(t, (Leq, Eq)):
            try:
                coeffs, const = linear_form(sub_sides(t))
            except NotLinear:
                return
            if not coeffs:
                return
            _add_shape(coeffs.values(), isinstance(t, Eq), -const)

    def _add_shape(coeffs, is_eq: bool, bound: int) -> None:
        # equality shapes enter as their two inequality halves: each half
        # is a weaker split, and the conjunction stays expressible
        try:
            if is_eq:
                out.add(LinPattern.canonical(list(coeffs), "<=", bound))
                out.add(LinPattern.canonical([-c for c in coeffs], "<=", -bound))
            else:
                out.add(LinPattern.canonical(list(coeffs), "<=", bound))
        except ValueError:
            pass

    def sub_sides(t: Term) -> Term:
        from .terms import sub as minus
        return minus(t.left, t.right)

    def harvest_formula(t: Term) -> None:
        if isinstance(t, (Leq, Eq)):
            from .terms import sort_of
            if sort_of(t.left).kind == "int":
                harvest_atom(t)
            return
        for c in children(t):
            harvest_formula(c)

    def harvest_assignment(rhs: Term) -> None:
        # lhs = rhs with one extra hole for the assigned variable:
        # -lhs + sum(coeffs) = -const
        try:
            coeffs, const = linear_form(rhs)
        except NotLinear:
            return
        if not coeffs:
            return
        _add_shape([-1] + list(coeffs.values()), True, -const)

    def walk(stmts: list) -> None:
        for s in stmts:
            if isinstance(s, TIf):
                harvest_formula(s.cond)
                walk(s.then_body)
                walk(s.else_body)
            elif isinstance(s, TWhile):
                harvest_formula(s.cond)
                walk(s.body)
            elif isinstance(s, TAssign):
                harvest_assignment(s.term)
            elif isinstance(s, TDecl) and s.init is not None and s.sort.kind == "int":
                harvest_assignment(s.init)
            elif isinstance(s, TStore):
                harvest_assignment(s.value)
            elif isinstance(s, (TAssume, TAssert)):
                harvest_formula(s.prop.psi)
                harvest_formula(s.prop.matrix)

    for proc in program.procedures.values():
        walk(proc.body)
    return out
