"""``qcpu`` command line: assemble, disassemble, run, compile, check, bound.

Exit codes: 0 success, 2 user error (bad input or arguments), 3 the
simulation would exceed the qubit budget (``QCPU_MAX_QUBITS``, default 24).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, compiler, isa, vm
from .errors import AsmSyntaxError, MemoryGuardError, QcpuError
from .gate_array import QcpuConfig
from .sim import Statevector

EXIT_OK, EXIT_USER, EXIT_GUARD = 0, 2, 3


class UserError(Exception):
    pass


def _read(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UserError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _config(args, required: bool = False) -> QcpuConfig | None:
    if args.n is None and args.m is None:
        if required:
            raise UserError("--n and --m are required")
        return None
    if args.n is None or args.m is None:
        raise UserError("give both --n and --m")
    try:
        return QcpuConfig(args.n, args.m)
    except ValueError as exc:
        raise UserError(str(exc)) from None


def _parse_program(text: str, where: str, config: QcpuConfig | None) -> isa.Program:
    try:
        return isa.parse_asm(text, config)
    except AsmSyntaxError as exc:
        raise UserError(f"{where}:{exc.lineno}: {exc.message}") from None


def cmd_asm(args) -> int:
    program = _parse_program(_read(args.input), args.input or "<stdin>", _config(args))
    _write(args.out, "".join(w + "\n" for w in program.words()))
    return EXIT_OK


def cmd_disasm(args) -> int:
    config = _config(args, required=True)
    where = args.input or "<stdin>"
    instructions = []
    for lineno, raw in enumerate(_read(args.input).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            instructions.append(isa.decode(line, config))
        except ValueError as exc:
            raise UserError(f"{where}:{lineno}: {exc}") from None
    _write(args.out, isa.emit_asm(isa.Program(config, tuple(instructions))))
    return EXIT_OK


def cmd_run(args) -> int:
    program = _parse_program(_read(args.input), args.input or "<stdin>", _config(args))
    config = program.config
    if args.zero == (args.state is not None):
        raise UserError("give exactly one of --zero or --state FILE")
    if args.zero:
        data = Statevector.zero(config.n)
    else:
        try:
            data = Statevector.from_text(_read(args.state))
        except ValueError as exc:
            raise UserError(f"{args.state}: {exc}") from None
    if data.num_qubits != config.n:
        raise UserError(f"initial state has {data.num_qubits} qubits, program needs n={config.n}")

    trace = vm.RunTrace()
    if args.mode == "one":
        final, trace = vm.run_mode_one(config, program, data)
    elif args.mode == "hybrid":
        final = vm.run_hybrid(config, program, data, trace)
    elif len(program) == 0:
        final = data
    else:
        joint = vm.run_mode_two(config, list(program), data, trace=trace)
        final = joint.data_state()

    if args.measure:
        indices = _index_list(args.measure)
        outcome, final = vm.measure_after(config, final, indices, args.seed)
        print(f"outcome={outcome}", file=sys.stderr)
    _write(args.out, final.to_text())
    if args.trace:
        _write(args.trace, trace.to_text())
    return EXIT_OK


def _index_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UserError(f"bad qubit list {text!r}") from None


def cmd_compile(args) -> int:
    where = args.input or "<stdin>"
    try:
        gates = compiler.parse_circuit(_read(args.input))
    except ValueError as exc:
        raise UserError(f"{where}: {exc}") from None
    if args.n is None:
        raise UserError("--n is required")
    if (args.m is None) == (args.epsilon is None):
        raise UserError("give exactly one of --m or --epsilon")
    m = args.m
    if args.epsilon is not None:
        count = compiler.angle_count(gates)
        m = compiler.m_required(max(count, 1), args.epsilon)
    try:
        config = QcpuConfig(args.n, m)
        compiled = compiler.compile_circuit(gates, config)
    except ValueError as exc:
        raise UserError(str(exc)) from None
    _write(args.out, isa.emit_asm(compiled.program))
    report = compiler.format_report(compiled)
    if args.report:
        _write(args.report, report)
    elif args.out and args.out != "-":
        _write(args.out + ".report", report)
    else:
        sys.stderr.write(report)
    return EXIT_OK


def parse_matrix(text: str) -> np.ndarray:
    """Square complex matrix, one row per line as ``re im`` pairs."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals = [float(t) for t in line.split()]
        except ValueError:
            raise ValueError(f"line {lineno}: malformed number") from None
        if len(vals) % 2:
            raise ValueError(f"line {lineno}: odd number of reals")
        rows.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError("matrix must be square")
    return np.array(rows)


def cmd_check(args) -> int:
    program = _parse_program(_read(args.input), args.input or "<stdin>", _config(args))
    try:
        ref = parse_matrix(_read(args.ref))
    except ValueError as exc:
        raise UserError(f"{args.ref}: {exc}") from None
    deltas = compiler.parse_report_deltas(_read(args.report)) if args.report else []
    if args.trials < 1:
        raise UserError("--trials must be >= 1")
    try:
        report = analysis.empirical_deviation(
            ref, program, program.config, args.trials, args.seed, strict=False, deltas=deltas
        )
    except ValueError as exc:
        raise UserError(str(exc)) from None
    _write(args.out, report.to_text())
    return EXIT_OK


def cmd_bound(args) -> int:
    if (args.count is None) == (args.n is None):
        raise UserError("give exactly one of --N or --n")
    if args.epsilon is None:
        raise UserError("--epsilon is required")
    try:
        m = compiler.m_required(args.count, args.epsilon, n=args.n)
    except ValueError as exc:
        raise UserError(str(exc)) from None
    count = args.count if args.count is not None else compiler.instruction_estimate(args.n)
    lines = [f"m={m}", f"N={count}", f"epsilon={args.epsilon:.12g}",
             f"bound={2 * count * math.pi / 2.0 ** m:.12g}"]
    if args.n is not None:
        lines.append(f"program_width={1 + m + 2 * (args.n - 1)}")
        lines.append(f"asymptotic_m={compiler.asymptotic_m(args.n, args.epsilon):.12g}")
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcpu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--in", dest="input", metavar="FILE", help="input file (default stdin)")
        p.add_argument("--out", metavar="FILE", help="output file (default stdout)")
        if config:
            p.add_argument("--n", type=int, help="data qubits")
            p.add_argument("--m", type=int, help="angle-code bits")

    p = sub.add_parser("asm", help="assembly to instruction words")
    common(p)
    p.set_defaults(func=cmd_asm)

    p = sub.add_parser("disasm", help="instruction words to assembly")
    common(p)
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("run", help="execute a program")
    common(p)
    p.add_argument("--state", metavar="FILE", help="initial data state file")
    p.add_argument("--zero", action="store_true", help="start from |0...0>")
    p.add_argument("--mode", choices=["one", "two", "hybrid"], default="one")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", metavar="FILE", help="write the step trace here")
    p.add_argument("--measure", metavar="J,K", help="measure these data qubits after the run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compile", help="compile a circuit")
    common(p)
    p.add_argument("--epsilon", type=float, help="target accuracy; picks m")
    p.add_argument("--report", metavar="FILE", help="error report (default <out>.report)")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("check", help="measure a program's deviation from a unitary")
    common(p)
    p.add_argument("--ref", required=True, metavar="FILE", help="reference unitary")
    p.add_argument("--report", metavar="FILE", help="compile report with angle errors")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bound", help="angle bits needed for a target accuracy")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--N", dest="count", type=int, help="instruction count")
    p.add_argument("--n", type=int, help="data qubits (uses the n^4 4^n estimate)")
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UserError as exc:
        print(f"qcpu: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except MemoryGuardError as exc:
        print(f"qcpu: resource limit: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (QcpuError, ValueError) as exc:
        print(f"qcpu: error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
