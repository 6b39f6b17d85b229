#!/usr/bin/env node
// SMT-LIB v2 read-eval-print shim over the z3-solver npm package (WASM build).
//
// Protocol: each input line is a batch of SMT-LIB commands (no embedded
// newlines).  The batch is evaluated in one persistent solver context and
// the solver output is written back, terminated by a line containing only
// the ready marker.  State persists across batches; use (reset) to clear.
//
// Usage: node z3repl.js   (requires `npm install z3-solver` in scope)

"use strict";

const readline = require("readline");

const READY = "<<<smt-ready>>>";

function resolveZ3() {
  try {
    return require("z3-solver");
  } catch (err) {
    const extra = process.env.Z3_SOLVER_DIR;
    if (extra) {
      return require(require("path").join(extra, "node_modules", "z3-solver"));
    }
    throw err;
  }
}

(async () => {
  const { init } = resolveZ3();
  const { Z3 } = await init();
  let ctx = Z3.mk_context(Z3.mk_config());

  // Exercise the engine with one oversized no-op so the WASM heap grows
  // before real queries; late growth has been seen to corrupt in-flight
  // input strings.
  try {
    await Z3.eval_smtlib2_string(ctx, "(set-info :status unknown)" + " ".repeat(6 << 20));
  } catch (err) {
    /* ignore */
  }

  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  const queue = [];
  let working = false;

  async function pump() {
    if (working) return;
    working = true;
    while (queue.length > 0) {
      const line = queue.shift();
      const trimmed = line.trim();
      if (trimmed === "(exit)") {
        process.stdout.write("\n" + READY + "\n");
        process.exit(0);
      }
      let out = "";
      if (trimmed === "(reset)") {
        // a fresh context per query keeps the smtlib parser state clean
        try {
          Z3.del_context(ctx);
        } catch (err) {
          /* ignore */
        }
        ctx = Z3.mk_context(Z3.mk_config());
      } else {
        try {
          out = await Z3.eval_smtlib2_string(ctx, line);
        } catch (err) {
          out = '(error "' + String(err).replace(/"/g, "'") + '")\n';
        }
      }
      process.stdout.write(out + "\n" + READY + "\n");
    }
    working = false;
  }

  rl.on("line", (line) => {
    queue.push(line);
    pump();
  });
  rl.on("close", () => process.exit(0));

  // announce readiness once the WASM engine is loaded
  process.stdout.write(READY + "\n");
})().catch((err) => {
  process.stderr.write("z3repl startup failure: " + String(err) + "\n");
  process.exit(2);
});
