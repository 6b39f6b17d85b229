"""Synchronous SMT-LIB v2 client over a solver subprocess.

Commands are written to the solver's standard input as single-line
batches; responses are read back with a wall-clock deadline.  Works with
any SMT-LIB-compliant solver reading from stdin (``z3 -in -smt2``,
``cvc5 --incremental``, ...).  The bundled default is a node shim around
the z3-solver WASM package, which marks the end of each response with a
ready line; for plain solvers the client falls back to counting complete
s-expressions.
"""

from __future__ import annotations

import os
import selectors
import subprocess
import time
from dataclasses import dataclass, field
from typing import Optional

from . import sexpr


class SolverTransportError(Exception):
    """The solver process died, wrote garbage, or timed out fatally."""


class SolverTimeout(SolverTransportError):
    pass


READY_MARKER = "<<<smt-ready>>>"


def default_solver_command() -> list:
    """The bundled node + z3-wasm shim."""
    shim = os.path.join(os.path.dirname(__file__), "solver", "z3repl.js")
    return ["node", shim]


@dataclass
class SolverConfig:
    command: list = field(default_factory=default_solver_command)
    timeout: float = 60.0          # seconds per query
    max_size_bound: int = 4        # largest bounded array length to try
    min_array_len: int = 1         # lower bound asserted on every array length
    produce_models: bool = True
    uses_ready_marker: Optional[bool] = None  # None: infer from the command

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")
        if self.min_array_len not in (0, 1):
            raise ValueError("min_array_len must be 0 or 1")
        if self.uses_ready_marker is None:
            self.uses_ready_marker = any("z3repl" in part for part in self.command)


class SolverProcess:
    """One interactive solver subprocess."""

    def __init__(self, config: Optional[SolverConfig] = None) -> None:
        self.config = config or SolverConfig()
        try:
            self.proc = subprocess.Popen(
                self.config.command, stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True)
        except OSError as e:
            raise SolverTransportError(
                f"cannot start solver {self.config.command}: {e}") from e
        self.selector = selectors.DefaultSelector()
        self.selector.register(self.proc.stdout, selectors.EVENT_READ)
        self._buffer = ""
        self._uses_marker = bool(self.config.uses_ready_marker)
        if self._uses_marker:
            self._await_startup()

    def _await_startup(self) -> None:
        """The bundled shim prints a ready line once the engine is loaded."""
        deadline = time.monotonic() + max(self.config.timeout, 60.0)
        while True:
            line = self._read_line(deadline)
            if line.strip() == READY_MARKER:
                return

    # --- low-level I/O ---

    def _read_line(self, deadline: float) -> str:
        while "\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise SolverTimeout("solver response timed out")
            if self.proc.poll() is not None:
                raise SolverTransportError("solver process exited")
            events = self.selector.select(timeout=min(remaining, 0.25))
            if not events:
                continue
            chunk = os.read(self.proc.stdout.fileno(), 65536).decode()
            if not chunk:
                raise SolverTransportError("solver closed its output")
            self._buffer += chunk
        line, self._buffer = self._buffer.split("\n", 1)
        return line

    def send(self, commands: str, expect_responses: int = 0) -> str:
        """Write one batch and collect its output.

        With the shim, reads until the ready marker; otherwise reads
        *expect_responses* complete s-expressions / atoms.
        """
        if self.proc.poll() is not None:
            raise SolverTransportError("solver process exited")
        batch = " ".join(commands.split("\n"))
        if batch.count("(") != batch.count(")"):
            raise SolverTransportError(f"unbalanced batch: {batch[:200]}...")
        try:
            self.proc.stdin.write(batch + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise SolverTransportError(f"cannot write to solver: {e}") from e
        deadline = time.monotonic() + self.config.timeout
        if self._uses_marker:
            lines = []
            while True:
                line = self._read_line(deadline)
                if line.strip() == READY_MARKER:
                    return "\n".join(lines)
                lines.append(line)
        out = []
        while len(out) < expect_responses:
            out.append(self._read_balanced(deadline))
        return "\n".join(out)

    def _read_balanced(self, deadline: float) -> str:
        text = ""
        depth = 0
        while True:
            line = self._read_line(deadline)
            if not line.strip() and not text:
                continue
            text += line + "\n"
            depth += line.count("(") - line.count(")")
            if depth <= 0 and text.strip():
                return text.strip()

    def reset(self) -> None:
        self.send("(reset)")

    def close(self) -> None:
        try:
            if self.proc.poll() is None:
                try:
                    self.proc.stdin.write("(exit)\n")
                    self.proc.stdin.flush()
                except OSError:
                    pass
                try:
                    self.proc.wait(timeout=2)
                except subprocess.TimeoutExpired:
                    self.proc.kill()
        finally:
            self.selector.close()

    def __enter__(self) -> "SolverProcess":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- SMT-level helpers ---

    def check_sat(self, script: str) -> str:
        """Send declarations + assertions + (check-sat); returns the verdict."""
        out = self.send(script + " (check-sat)", expect_responses=1)
        for line in reversed(out.strip().splitlines()):
            word = line.strip()
            if word in ("sat", "unsat", "unknown"):
                return word
            if word.startswith("(error"):
                raise SolverTransportError(f"solver error: {word}")
        raise SolverTransportError(f"unrecognized solver output: {out!r}")

    def get_values(self, exprs: list) -> list:
        """``(get-value ...)`` for the given rendered expressions; returns
        the value s-expressions in order."""
        if not exprs:
            return []
        query = "(get-value (" + " ".join(exprs) + "))"
        out = self.send(query, expect_responses=1)
        parsed = sexpr.parse_all(out)
        if not parsed or not isinstance(parsed[0], list):
            raise SolverTransportError(f"bad get-value response: {out!r}")
        return [entry[1] for entry in parsed[0]]


def parse_value(se):
    """Decode a model value s-expression into int or bool."""
    if se == "true":
        return True
    if se == "false":
        return False
    if isinstance(se, str) and se.lstrip("-").isdigit():
        return int(se)
    if isinstance(se, list) and len(se) == 2 and se[0] == "-":
        return -parse_value(se[1])
    raise SolverTransportError(f"cannot decode model value {sexpr.render(se)}")
