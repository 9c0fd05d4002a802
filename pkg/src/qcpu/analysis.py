"""Error budgeting for compiled programs.

A rotation off by ``d`` radians moves any projection probability
``|<phi|U|psi>|^2`` by at most ``2|d|``, and the errors of a sequence add,
so ``2 * sum |d_i|`` bounds the deviation of a whole compiled circuit.
This module computes that bound and measures how close compiled programs
come to it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BoundViolationError, WidthError
from .gate_array import QcpuConfig

# Slack for floating-point noise when comparing a measured deviation to a bound.
FLOAT_SLACK = 1e-12


def deviation_bound(deltas: Iterable[float]) -> float:
    return 2.0 * sum(abs(d) for d in deltas)


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state: normalized complex Gaussian vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR factorization of a complex Gaussian matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def operator_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min over phi of max_ij |a_ij - e^{i phi} b_ij|``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise WidthError(f"shape mismatch: {a.shape} vs {b.shape}")

    def f(phi: float) -> float:
        return float(np.max(np.abs(a - np.exp(1j * phi) * b)))

    # the objective is piecewise smooth in phi: coarse scan, then refine
    grid = np.linspace(-math.pi, math.pi, 129)[:-1]
    start = float(np.angle(np.vdot(b, a)))
    candidates = list(grid) + [start]
    best = min(candidates, key=f)
    step = 2 * math.pi / 128
    res = minimize_scalar(f, bounds=(best - step, best + step), method="bounded",
                          options={"xatol": 1e-13})
    return min(f(best), float(res.fun))


@dataclass(frozen=True)
class ErrorReport:
    per_instruction_delta: tuple[float, ...]
    bound: float
    empirical_max_deviation: float
    operator_distance: float
    samples: int

    @property
    def ok(self) -> bool:
        return self.empirical_max_deviation <= self.bound + FLOAT_SLACK

    def to_text(self) -> str:
        return (
            f"samples={self.samples}\n"
            f"bound={self.bound:.12g}\n"
            f"empirical={self.empirical_max_deviation:.12g}\n"
            f"opdist={self.operator_distance:.12g}\n"
            f"ok={'true' if self.ok else 'false'}\n"
        )


def max_probability_deviation(
    ideal: np.ndarray, actual: np.ndarray, trials: int, rng: np.random.Generator
) -> float:
    """Largest ``| |<phi|A|psi>|^2 - |<phi|B|psi>|^2 |`` over random state pairs."""
    dim = ideal.shape[0]
    worst = 0.0
    for _ in range(trials):
        psi = random_state(dim, rng)
        phi = random_state(dim, rng)
        p_ideal = abs(np.vdot(phi, ideal @ psi)) ** 2
        p_actual = abs(np.vdot(phi, actual @ psi)) ** 2
        worst = max(worst, abs(p_ideal - p_actual))
    return worst


def empirical_deviation(
    ideal: np.ndarray,
    compiled,
    config: QcpuConfig | None = None,
    trials: int = 100,
    seed=None,
    strict: bool = True,
    deltas: Sequence[float] | None = None,
) -> ErrorReport:
    """Compare a compiled program with the unitary it approximates.

    ``compiled`` is a ``CompiledProgram`` or a bare ``Program``; for a bare
    program pass the quantization errors in ``deltas`` (default: none, so
    the program is claimed to be exact). With ``strict`` a measured
    deviation above the bound raises ``BoundViolationError``.
    """
    from .vm import program_unitary

    program = getattr(compiled, "program", compiled)
    config = config or program.config
    if deltas is None:
        deltas = getattr(compiled, "angle_errors", ())
    ideal = np.asarray(ideal, dtype=complex)
    dim = 1 << config.n
    if ideal.shape != (dim, dim):
        raise WidthError(f"ideal operator has shape {ideal.shape}, expected {(dim, dim)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    actual = program_unitary(config, program)
    rng = np.random.default_rng(seed)
    worst = max_probability_deviation(ideal, actual, trials, rng)
    report = ErrorReport(
        per_instruction_delta=tuple(deltas),
        bound=deviation_bound(deltas),
        empirical_max_deviation=worst,
        operator_distance=operator_distance(ideal, actual),
        samples=trials,
    )
    if strict and not report.ok:
        raise BoundViolationError(
            f"measured deviation {worst!r} exceeds bound {report.bound!r}"
        )
    return report


@dataclass(frozen=True)
class ScalingRow:
    m: int
    bound: float
    empirical: float
    opdist: float


def scaling_study(
    target: np.ndarray,
    m_range: Iterable[int],
    config: QcpuConfig | int = 1,
    trials: int = 100,
    seed=None,
    qubit: int = 1,
) -> list[ScalingRow]:
    """Compile ``target`` on data qubit ``qubit`` for each m and measure the error.

    ``bound`` is the worst case over the grid, ``2 * K * pi / 2**m`` with K
    the number of Euler angles that do not land on the grid; it halves
    exactly from one m to the next. ``config`` supplies ``n`` (its ``m`` is
    ignored); an integer is taken as ``n``.
    """
    from .compiler import Unitary1Q, compile_gate

    n = config if isinstance(config, int) else config.n
    ms = list(m_range)
    if not ms:
        raise ValueError("m_range is empty")
    target = np.asarray(target, dtype=complex)
    ideal = embed_1q(target, qubit, n)
    rng = np.random.default_rng(seed)
    rows = []
    for m in ms:
        cfg = QcpuConfig(n, m)
        compiled = compile_gate(Unitary1Q(target, qubit), cfg)
        report = empirical_deviation(ideal, compiled, cfg, trials, rng)
        off_grid = sum(d != 0.0 for d in compiled.angle_errors)
        rows.append(ScalingRow(m, 2 * off_grid * math.pi / 2.0 ** m,
                               report.empirical_max_deviation, report.operator_distance))
    return rows


def embed_1q(u: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """``u`` acting on data qubit ``qubit`` (1-based, d_1 most significant) of n."""
    if not 1 <= qubit <= n:
        raise ValueError(f"data index {qubit} out of range 1..{n}")
    left = np.eye(1 << (qubit - 1))
    right = np.eye(1 << (n - qubit))
    return np.kron(np.kron(left, u), right)


def rows_to_csv(rows: Sequence[ScalingRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "bound", "empirical", "opdist"])
    for r in rows:
        writer.writerow([r.m, f"{r.bound:.12g}", f"{r.empirical:.12g}", f"{r.opdist:.12g}"])
    return buf.getvalue()


def log_ratio_slope(rows_by_target: Sequence[Sequence[ScalingRow]]) -> float:
    """Least-squares slope of ``ln(opdist * 2^m)`` against m, pooled over targets."""
    xs, ys = [], []
    for rows in rows_by_target:
        for r in rows:
            if r.opdist > 0:
                xs.append(r.m)
                ys.append(math.log(r.opdist * 2.0 ** r.m))
    if len(set(xs)) < 2:
        raise ValueError("need at least two distinct m values with nonzero distance")
    slope, _ = np.polyfit(np.array(xs, float), np.array(ys), 1)
    return float(slope)
