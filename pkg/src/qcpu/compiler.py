"""Lowering of abstract circuits to instruction sequences.

Single-qubit unitaries are split as ``e^{i phase} Rz(beta) Rx(gamma) Rz(delta)``
with ``R_a(t) = exp(i t sigma_a)``, each angle is rounded to the nearest
multiple of ``xi = 2*pi / 2**m``, and the gate array's fixed rotation
target ``d_1`` is reached through chains of SWAPs built from three CNOTs.
Qubits are swapped back after every gate so compiled gates compose freely.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .gate_array import QcpuConfig
from .isa import Instruction, Program

# Quantization errors below this are treated as exact grid hits; they come
# from the ~1e-16 noise in recovering angles from matrix entries.
GRID_SNAP = 1e-12
UNITARY_TOL = 1e-10
_TINY = 1e-12


@dataclass(frozen=True, eq=False)
class Unitary1Q:
    matrix: np.ndarray
    target: int

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (2, 2):
            raise ValueError(f"single-qubit gate needs a 2x2 matrix, got {mat.shape}")
        if np.max(np.abs(mat @ mat.conj().T - np.eye(2))) > UNITARY_TOL:
            raise ValueError("single-qubit gate matrix is not unitary")
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("CNOT control and target must differ")


AbstractGate = Union[Unitary1Q, Cnot]


@dataclass(frozen=True)
class CompiledProgram:
    """Program plus the quantization error of every Euler angle it rounded.

    ``angle_errors`` holds one entry per quantized angle, including angles
    whose rotation was dropped because they rounded to code 0.
    """

    program: Program
    angle_errors: tuple[float, ...] = ()
    gate_counts: tuple[int, ...] = field(default=())

    @property
    def deviation_bound(self) -> float:
        return 2.0 * sum(abs(d) for d in self.angle_errors)

    @property
    def config(self) -> QcpuConfig:
        return self.program.config

    def __add__(self, other: CompiledProgram) -> CompiledProgram:
        return CompiledProgram(
            self.program + other.program,
            self.angle_errors + other.angle_errors,
            self.gate_counts + other.gate_counts,
        )


def _wrap(x: float) -> float:
    """Map an angle to (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


def quantize_angle(theta: float, m: int) -> tuple[int, float]:
    """Nearest grid code ``alpha`` and error ``alpha*xi - theta`` wrapped to (-pi, pi].

    Ties go to the smaller code. ``|error| <= pi / 2**m``.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    size = 1 << m
    xi = 2 * math.pi / size
    pos = (theta % (2 * math.pi)) / xi
    lo = math.floor(pos)
    frac = pos - lo
    if frac < 0.5:
        alpha = lo % size
    elif frac > 0.5:
        alpha = (lo + 1) % size
    else:
        alpha = min(lo % size, (lo + 1) % size)
    delta = _wrap(alpha * xi - theta)
    if abs(delta) < GRID_SNAP:
        delta = 0.0
    return alpha, delta


def decompose_su2(u) -> tuple[float, float, float, float]:
    """Angles ``(beta, gamma, delta, phase)`` with
    ``u = e^{i phase} exp(i beta Z) exp(i gamma X) exp(i delta Z)``.

    ``beta`` and ``delta`` lie in (-pi/2, pi/2] and ``gamma`` in (-pi, pi], so
    a pure x-rotation keeps its angle in ``gamma``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u @ u.conj().T - np.eye(2))) > UNITARY_TOL:
        raise ValueError("decompose_su2 needs a 2x2 unitary")
    phase = float(np.angle(np.linalg.det(u))) / 2
    v = u * np.exp(-1j * phase)
    # v00 = cos(g) e^{i(b+d)},  v01 = i sin(g) e^{i(b-d)}
    c_mag, s_mag = abs(v[0, 0]), abs(v[0, 1])
    # When gamma sits at 0 or +-pi/2 only one combination of beta and delta
    # is defined. Putting all of it in beta keeps grid angles on the grid.
    if s_mag < _TINY:
        beta, sign = _half_angle(v[0, 0], c_mag)
        return beta, (0.0 if sign > 0 else math.pi), 0.0, phase
    if c_mag < _TINY:
        beta, sign = _half_angle(-1j * v[0, 1], s_mag)
        return beta, sign * math.pi / 2, 0.0, phase
    s_sum, c_sign = _half_angle(v[0, 0], c_mag)
    s_diff, s_sign = _half_angle(-1j * v[0, 1], s_mag)
    gamma = math.atan2(s_sign * s_mag, c_sign * c_mag)
    beta = (s_sum + s_diff) / 2
    delta = (s_sum - s_diff) / 2
    return beta, gamma, delta, phase


def _half_angle(z: complex, mag: float) -> tuple[float, int]:
    """Phase of ``z`` folded into (-pi/2, pi/2], and the sign that folding flips."""
    if mag < _TINY:
        return 0.0, 1
    a = math.atan2(z.imag, z.real)
    if a > math.pi / 2:
        return a - math.pi, -1
    if a <= -math.pi / 2:
        return a + math.pi, -1
    return a, 1


def _check_index(config: QcpuConfig, j: int) -> None:
    if not 1 <= j <= config.n:
        raise ValueError(f"data index {j} out of range 1..{config.n}")


def swap_instructions(config: QcpuConfig, i: int) -> list[Instruction]:
    fwd = Instruction.cnot(config, i, i + 1)
    back = Instruction.cnot(config, i + 1, i)
    return [fwd, back, fwd]


def compile_swap(pair: int | tuple[int, int], config: QcpuConfig) -> Program:
    """SWAP of ``d_i`` and ``d_{i+1}`` as three CNOTs."""
    i, j = (pair, pair + 1) if isinstance(pair, int) else pair
    if j != i + 1:
        raise ValueError(f"swap pair {(i, j)} is not (i, i+1)")
    _check_index(config, i)
    _check_index(config, j)
    return Program(config, tuple(swap_instructions(config, i)))


def _chain(config: QcpuConfig, pairs: Sequence[int]) -> list[Instruction]:
    out = []
    for i in pairs:
        out.extend(swap_instructions(config, i))
    return out


def compile_gate(gate: AbstractGate, config: QcpuConfig) -> CompiledProgram:
    if isinstance(gate, Cnot):
        c, t = gate.control, gate.target
        _check_index(config, c)
        _check_index(config, t)
        if c < t:
            moves = list(range(c, t - 1))          # carry control up to t-1
            core = Instruction.cnot(config, t - 1, t)
        else:
            moves = list(range(c - 1, t, -1))      # carry control down to t+1
            core = Instruction.cnot(config, t + 1, t)
        instrs = _chain(config, moves) + [core] + _chain(config, moves[::-1])
        return CompiledProgram(Program(config, tuple(instrs)), (), (len(instrs),))

    if isinstance(gate, Unitary1Q):
        j = gate.target
        _check_index(config, j)
        moves = list(range(j - 1, 0, -1))          # bring d_j to d_1
        beta, gamma, delta, _ = decompose_su2(gate.matrix)
        rotations, errors = [], []
        # execution order is the reverse of the matrix product
        for make, theta in ((Instruction.rz, delta), (Instruction.rx, gamma), (Instruction.rz, beta)):
            alpha, err = quantize_angle(theta, config.m)
            errors.append(err)
            if alpha:
                rotations.append(make(config, alpha))
        if not rotations:
            moves = []
        instrs = _chain(config, moves) + rotations + _chain(config, moves[::-1])
        return CompiledProgram(Program(config, tuple(instrs)), tuple(errors), (len(instrs),))

    raise TypeError(f"not an abstract gate: {gate!r}")


def compile_circuit(gates: Sequence[AbstractGate], config: QcpuConfig) -> CompiledProgram:
    out = CompiledProgram(Program(config))
    for g in gates:
        out = out + compile_gate(g, config)
    return out


def angle_count(gates: Sequence[AbstractGate]) -> int:
    """Number of angles a circuit quantizes (three per single-qubit gate)."""
    return 3 * sum(isinstance(g, Unitary1Q) for g in gates)


def instruction_estimate(n: int) -> int:
    """Gate-count shape ``n^4 * 4^n`` for an arbitrary n-qubit unitary (constant 1)."""
    return n ** 4 * 4 ** n


def m_required(N: int | None = None, epsilon: float = 0.0, *, n: int | None = None) -> int:
    """Smallest ``m >= 1`` with ``2 * N * pi / 2**m <= epsilon``.

    Give ``n`` instead of ``N`` to use ``instruction_estimate(n)``.
    """
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon!r}")
    if (N is None) == (n is None):
        raise ValueError("give exactly one of N or n")
    if N is None:
        N = instruction_estimate(n)
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")

    def ok(m: int) -> bool:
        return 2 * N * math.pi / 2.0 ** m <= epsilon

    m = max(1, math.ceil(math.log2(2 * math.pi * N / epsilon)))
    while not ok(m):
        m += 1
    while m > 1 and ok(m - 1):
        m -= 1
    return m


def asymptotic_m(n: int, epsilon: float) -> float:
    """Leading-order shape ``4 log2 n + 2n - ln(epsilon)`` of the required m."""
    return 4 * math.log2(n) + 2 * n - math.log(epsilon)


# Circuit text format.

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_circuit(text: str) -> list[AbstractGate]:
    """``U1Q <target> <8 reals>`` or ``CNOT <control> <target>`` per line."""
    gates: list[AbstractGate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        op = tokens[0].upper()
        try:
            if op == "CNOT" and len(tokens) == 3:
                gates.append(Cnot(_pos_int(tokens[1]), _pos_int(tokens[2])))
            elif op == "U1Q" and len(tokens) == 10:
                if not all(re.fullmatch(_NUM, t) for t in tokens[2:]):
                    raise ValueError("matrix entries must be real numbers")
                vals = [float(t) for t in tokens[2:]]
                mat = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
                gates.append(Unitary1Q(mat.reshape(2, 2), _pos_int(tokens[1])))
            else:
                raise ValueError("expected 'U1Q <t> <8 reals>' or 'CNOT <c> <t>'")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return gates


def _pos_int(token: str) -> int:
    if not token.isdigit() or int(token) < 1:
        raise ValueError(f"expected a positive qubit index, got {token!r}")
    return int(token)


def format_report(compiled: CompiledProgram) -> str:
    """Sidecar report: key=value lines, machine readable."""
    cfg = compiled.config
    xi = cfg.xi
    k = len(compiled.angle_errors)
    claim = 3 * cfg.n
    over = sum(c > claim for c in compiled.gate_counts)
    lines = [
        f"n={cfg.n}",
        f"m={cfg.m}",
        f"instructions={len(compiled.program)}",
        f"angles={k}",
    ]
    lines += [f"delta.{i}={d:.17g}" for i, d in enumerate(compiled.angle_errors)]
    lines += [
        f"bound={compiled.deviation_bound:.17g}",
        f"bound_grid={2 * k * xi / 2:.17g}",
        f"bound_loose={2 * k * xi:.17g}",
        f"max_instructions_per_gate={max(compiled.gate_counts, default=0)}",
        f"claimed_instructions_per_gate={claim}",
        f"gates_over_claim={over}",
    ]
    return "\n".join(lines) + "\n"


def parse_report_deltas(text: str) -> list[float]:
    deltas = {}
    for line in text.splitlines():
        key, _, value = line.strip().partition("=")
        if key.startswith("delta."):
            deltas[int(key[6:])] = float(value)
    return [deltas[i] for i in sorted(deltas)]


__all__ = [
    "AbstractGate", "Cnot", "CompiledProgram", "Unitary1Q", "angle_count",
    "asymptotic_m", "compile_circuit", "compile_gate", "compile_swap",
    "decompose_su2", "format_report", "instruction_estimate", "m_required",
    "parse_circuit", "parse_report_deltas", "quantize_angle",
]
