"""End-to-end orchestration of the teacher/learner loop.

Starting from an empty evidence sample, the learner proposes a candidate
solution, the teacher searches the clauses for a counterexample, and the
counterexample (a data point with a Horn implication) extends the
sample.  A contradictory sample proves the system unsatisfiable (the
program is unsafe); a candidate with no counterexample is a solution
(the program is safe).  Budgets and timeouts end the run with an
inconclusive verdict.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .chc import ChcSystem, load_chc, save_chc
from .fragment import check_fragment
from .learner import AttributePool, BudgetError, LearnerState, learn
from .minilang import MiniLangError, parse, typecheck
from .sample import Sample, solution_satisfies
from .smtproc import SolverConfig, SolverTransportError
from .teacher import Teacher, export_smtlib
from .vcgen import extract_patterns, gen_chc
from . import sexpr
from .terms import term_to_sexpr


@dataclass
class RunConfig:
    input_path: str
    input_kind: str = "mini"               # "mini" | "chc"
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial_quantifiers: int = 1
    max_quantifiers: int = 4
    max_constant: int = 32
    max_iterations: int = 200
    global_timeout: float = 600.0          # seconds
    report_path: Optional[str] = None
    trace_path: Optional[str] = None
    export_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.input_kind not in ("mini", "chc"):
            raise ValueError("input kind must be 'mini' or 'chc'")
        if min(self.initial_quantifiers, self.max_quantifiers,
               self.max_constant, self.max_iterations) < 1:
            raise ValueError("budgets must be positive")


@dataclass
class IterationRecord:
    index: int
    candidate: dict                 # predicate -> rendered property
    counterexample: Optional[str]
    clause_index: Optional[int]
    seconds: float


@dataclass
class RunReport:
    verdict: str                    # "safe" | "unsat" | "unknown"
    reason: str = ""
    iterations: int = 0
    records: list = field(default_factory=list)
    solution: Optional[dict] = None          # predicate -> rendered property
    fragment_results: dict = field(default_factory=dict)
    overlap: list = field(default_factory=list)
    quantifiers: int = 0
    constant_bound: int = 0
    seconds: float = 0.0

    def exit_code(self) -> int:
        return {"safe": 0, "unsat": 1}.get(self.verdict, 2)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "iterations": self.iterations,
            "solution": self.solution,
            "fragment": self.fragment_results,
            "contradiction_overlap": self.overlap,
            "quantifiers": self.quantifiers,
            "constant_bound": self.constant_bound,
            "seconds": round(self.seconds, 3),
            "records": [
                {"iteration": r.index, "candidate": r.candidate,
                 "counterexample": r.counterexample, "clause": r.clause_index,
                 "seconds": round(r.seconds, 3)}
                for r in self.records
            ],
        }

    def render_text(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        if self.reason:
            lines.append(f"reason: {self.reason}")
        lines.append(f"iterations: {self.iterations}")
        lines.append(f"quantifiers per array: {self.quantifiers}")
        if self.solution:
            lines.append("solution:")
            for pred, text in self.solution.items():
                lines.append(f"  {pred}: {text}")
            lines.append("fragment check:")
            for pred, (ok, diag) in self.fragment_results.items():
                lines.append(f"  {pred}: {'ok' if ok else 'VIOLATION: ' + diag}")
        if self.overlap:
            lines.append("forced both positive and negative:")
            for p in self.overlap:
                lines.append(f"  {p}")
        lines.append(f"time: {self.seconds:.2f}s")
        return "\n".join(lines) + "\n"


class GlobalTimeout(Exception):
    pass


def load_input(config: RunConfig) -> tuple:
    """Returns ``(system, patterns, typed_program_or_None)``."""
    with open(config.input_path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if config.input_kind == "chc":
        return load_chc(text), set(), None
    program = typecheck(parse(text))
    system, _locations = gen_chc(program)
    return system, extract_patterns(program), program


def run(config: RunConfig, trace: Optional[Callable] = None) -> RunReport:
    started = time.monotonic()
    trace_lines: list = []

    def emit(line: str) -> None:
        trace_lines.append(line)
        if trace is not None:
            trace(line)

    def deadline_check() -> None:
        if time.monotonic() - started > config.global_timeout:
            raise GlobalTimeout()

    report = RunReport(verdict="unknown")
    try:
        system, patterns, _program = load_input(config)
        report = _solve(system, patterns, config, emit, deadline_check)
    except GlobalTimeout:
        report = RunReport(verdict="unknown", reason="global timeout exceeded")
    except BudgetError as e:
        report = RunReport(verdict="unknown", reason=f"budget exceeded: {e}")
    finally:
        report.seconds = time.monotonic() - started
        if config.trace_path:
            with open(config.trace_path, "w", encoding="utf-8") as handle:
                handle.write("\n".join(trace_lines) + "\n")
        if config.report_path:
            with open(config.report_path, "w", encoding="utf-8") as handle:
                json.dump(report.to_json(), handle, indent=2)
                handle.write("\n")
    return report


def _render_solution(solution: dict) -> dict:
    return {pred: str(prop) for pred, prop in solution.items()}


def _solve(system: ChcSystem, patterns: set, config: RunConfig,
           emit: Callable, deadline_check: Callable) -> RunReport:
    if config.export_path:
        with open(config.export_path, "w", encoding="utf-8") as handle:
            handle.write(export_smtlib(system))
        emit(f"export path={config.export_path}")

    state = LearnerState(
        sigs=dict(system.predicates),
        n=config.initial_quantifiers,
        pool=AttributePool(patterns=sorted(patterns, key=str)),
        max_n=config.max_quantifiers,
        max_k=config.max_constant,
        trace=emit)
    sample = Sample()
    report = RunReport(verdict="unknown")

    with Teacher(system, config.solver) as teacher:
        for iteration in range(1, config.max_iterations + 1):
            deadline_check()
            t0 = time.monotonic()
            solution = learn(sample, state)
            emit(f"candidate iter={iteration} " + " ".join(
                f"{p}={prop}" for p, prop in solution.items()))
            deadline_check()
            result = teacher.find_counterexample(solution)
            took = time.monotonic() - t0
            if result.is_valid:
                emit(f"teacher iter={iteration} result=valid")
                report.verdict = "safe"
                report.iterations = iteration
                report.solution = _render_solution(solution)
                report.records.append(IterationRecord(
                    iteration, _render_solution(solution), None, None, took))
                report.fragment_results = {
                    pred: (bool(rep), rep.diagnostic)
                    for pred, rep in ((p, check_fragment(prop))
                                      for p, prop in solution.items())}
                break
            if result.status == "unknown":
                emit(f"teacher iter={iteration} result=unknown clause={result.clause_index}")
                report.verdict = "unknown"
                report.reason = (f"teacher could not decide clause "
                                 f"{result.clause_index}: {result.reason}")
                report.iterations = iteration
                break
            emit(f"teacher iter={iteration} result=counterexample "
                 f"clause={result.clause_index} bound={result.bound} "
                 f"implication={result.implication}")
            report.records.append(IterationRecord(
                iteration, _render_solution(solution), str(result.implication),
                result.clause_index, took))
            sample.add_counterexample(result.implication)
            if not sample.is_consistent():
                closure = sample.closure()
                report.verdict = "unsat"
                report.iterations = iteration
                report.overlap = sorted(str(p) for p in closure.overlap)
                report.reason = "contradictory sample"
                emit(f"unsat iter={iteration} overlap={len(report.overlap)}")
                break
        else:
            report.verdict = "unknown"
            report.reason = f"no verdict within {config.max_iterations} iterations"
            report.iterations = config.max_iterations

    report.quantifiers = state.n
    report.constant_bound = state.pool.k
    return report
