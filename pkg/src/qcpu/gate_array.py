"""The fixed programmable gate array G.

G acts on a program register followed by an ``n``-qubit data register.
The program register is laid out exactly like an instruction bitstring,

    b_n p_n ... b_2 p_2 a_m ... a_1 r

with ``b_n`` as the most significant (lowest-numbered) qubit. Data qubits
``d_1 .. d_n`` follow in order.

G is a product of element gates, applied in this fixed order:

1. for k = 1..m, a three-qubit gate on ``(r, a_k, d_1)`` that rotates
   ``d_1`` by ``exp(i 2^(k-1) xi sigma_x)`` when ``r=0, a_k=1`` and by
   ``exp(i 2^(k-1) xi sigma_z)`` when ``r=1, a_k=1``;
2. for k = 2..n, a four-qubit gate on ``(b_k, p_k, d_{k-1}, d_k)`` that
   applies a CNOT when ``b_k=1``, controlled by ``d_{k-1}`` if ``p_k=0``
   and by ``d_k`` if ``p_k=1``.

Program qubits only ever act as controls, so G is block diagonal in the
program basis: ``G = sum_p |p><p| (x) U_p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import MemoryGuardError, WidthError
from .sim import (
    C1,
    C2,
    GateMatrix,
    Statevector,
    apply_1q_inplace,
    apply_x_inplace,
    rot_x,
    rot_z,
)

DENSE_G_MAX_QUBITS = 14


@dataclass(frozen=True)
class QcpuConfig:
    """Register sizes: ``n`` data qubits and ``m`` angle-code bits."""

    n: int
    m: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be an integer >= 1, got {self.m!r}")

    @property
    def xi(self) -> float:
        """Angle quantum ``2*pi / 2**m``."""
        return 2 * math.pi / (1 << self.m)

    @property
    def program_width(self) -> int:
        return 1 + self.m + 2 * (self.n - 1)

    @property
    def total_width(self) -> int:
        return self.program_width + self.n

    # Bit positions inside the program register (0 = leftmost).
    def b_pos(self, k: int) -> int:
        self._check_pair(k)
        return 2 * (self.n - k)

    def p_pos(self, k: int) -> int:
        self._check_pair(k)
        return 2 * (self.n - k) + 1

    def a_pos(self, k: int) -> int:
        if not 1 <= k <= self.m:
            raise IndexError(f"angle bit a_{k} out of range 1..{self.m}")
        return 2 * (self.n - 1) + (self.m - k)

    @property
    def r_pos(self) -> int:
        return self.program_width - 1

    def _check_pair(self, k: int) -> None:
        if not 2 <= k <= self.n:
            raise IndexError(f"pair index k={k} out of range 2..{self.n}")


@lru_cache(maxsize=None)
def _rotation(m: int, k: int, axis: str) -> np.ndarray:
    theta = (1 << (k - 1)) * (2 * math.pi / (1 << m))
    mat = rot_x(theta) if axis == "x" else rot_z(theta)
    mat.flags.writeable = False
    return mat


def rotation_unit(config: QcpuConfig, k: int, axis: str) -> np.ndarray:
    """``exp(i 2^(k-1) xi sigma_axis)`` for axis ``"x"`` or ``"z"``."""
    if axis not in ("x", "z"):
        raise ValueError(f"axis must be 'x' or 'z', got {axis!r}")
    config.a_pos(k)
    return _rotation(config.m, k, axis)


def rotation_element(config: QcpuConfig, k: int) -> GateMatrix:
    """8x8 element gate on ``(r, a_k, d_1)``."""
    mat = np.zeros((8, 8), dtype=complex)
    mat[0:2, 0:2] = np.eye(2)
    mat[2:4, 2:4] = rotation_unit(config, k, "x")
    mat[4:6, 4:6] = np.eye(2)
    mat[6:8, 6:8] = rotation_unit(config, k, "z")
    return GateMatrix(mat)


def cnot_element() -> GateMatrix:
    """16x16 element gate on ``(b_k, p_k, d_{k-1}, d_k)``."""
    mat = np.zeros((16, 16), dtype=complex)
    mat[0:8, 0:8] = np.eye(8)
    mat[8:12, 8:12] = C1.matrix
    mat[12:16, 12:16] = C2.matrix
    return GateMatrix(mat)


def default_layout(config: QcpuConfig) -> tuple[list[int], list[int]]:
    """Qubit indices of the program and data registers in a joint state."""
    pw = config.program_width
    return list(range(pw)), list(range(pw, pw + config.n))


def _layout(config, num_qubits, program_qubits, data_qubits):
    if program_qubits is None and data_qubits is None:
        if num_qubits != config.total_width:
            raise WidthError(
                f"joint state has {num_qubits} qubits, expected {config.total_width}"
            )
        return default_layout(config)
    if program_qubits is None or data_qubits is None:
        raise ValueError("give both program_qubits and data_qubits, or neither")
    program_qubits, data_qubits = list(program_qubits), list(data_qubits)
    if len(program_qubits) != config.program_width or len(data_qubits) != config.n:
        raise WidthError("register layout does not match the configuration")
    every = program_qubits + data_qubits
    if len(set(every)) != len(every) or not all(0 <= q < num_qubits for q in every):
        raise WidthError("register layout has repeated or out-of-range qubits")
    return program_qubits, data_qubits


# Tensor-level stages. ``psi`` is a [2]*q tensor, optionally with trailing
# batch axes; it is modified in place.

def _rotation_stage(config, psi, prog, data):
    r, d1 = prog[config.r_pos], data[0]
    for k in range(1, config.m + 1):
        a = prog[config.a_pos(k)]
        apply_1q_inplace(psi, _rotation(config.m, k, "x"), d1, {r: 0, a: 1})
        apply_1q_inplace(psi, _rotation(config.m, k, "z"), d1, {r: 1, a: 1})


def _cnot_stage(config, k, psi, prog, data):
    b, p = prog[config.b_pos(k)], prog[config.p_pos(k)]
    lo, hi = data[k - 2], data[k - 1]
    apply_x_inplace(psi, hi, {b: 1, p: 0, lo: 1})
    apply_x_inplace(psi, lo, {b: 1, p: 1, hi: 1})


def _g_stages(config, psi, prog, data):
    _rotation_stage(config, psi, prog, data)
    for k in range(2, config.n + 1):
        _cnot_stage(config, k, psi, prog, data)


def _as_tensor(joint: Statevector) -> np.ndarray:
    return joint.amplitudes.reshape([2] * joint.num_qubits).copy()


def apply_rotation_stage(
    config: QcpuConfig,
    joint: Statevector,
    program_qubits: Sequence[int] | None = None,
    data_qubits: Sequence[int] | None = None,
) -> Statevector:
    prog, data = _layout(config, joint.num_qubits, program_qubits, data_qubits)
    psi = _as_tensor(joint)
    _rotation_stage(config, psi, prog, data)
    return Statevector(joint.num_qubits, psi.reshape(-1))


def apply_cnot_stage(
    config: QcpuConfig,
    k: int,
    joint: Statevector,
    program_qubits: Sequence[int] | None = None,
    data_qubits: Sequence[int] | None = None,
) -> Statevector:
    """Element gate on ``(b_k, p_k, d_{k-1}, d_k)`` for ``2 <= k <= n``."""
    if config.n < 2:
        raise ValueError("CNOT stages need n >= 2")
    config._check_pair(k)
    prog, data = _layout(config, joint.num_qubits, program_qubits, data_qubits)
    psi = _as_tensor(joint)
    _cnot_stage(config, k, psi, prog, data)
    return Statevector(joint.num_qubits, psi.reshape(-1))


def apply_G(
    config: QcpuConfig,
    joint: Statevector,
    program_qubits: Sequence[int] | None = None,
    data_qubits: Sequence[int] | None = None,
) -> Statevector:
    """Apply the gate array to a joint program/data state.

    By default ``joint`` must hold exactly ``total_width`` qubits in the
    standard layout. Passing explicit ``program_qubits`` and ``data_qubits``
    applies G to those qubits of a larger state.
    """
    prog, data = _layout(config, joint.num_qubits, program_qubits, data_qubits)
    psi = _as_tensor(joint)
    _g_stages(config, psi, prog, data)
    return Statevector(joint.num_qubits, psi.reshape(-1))


def build_G_dense(config: QcpuConfig) -> np.ndarray:
    """Dense matrix of G, column j being ``apply_G`` of basis state j."""
    q = config.total_width
    if q > DENSE_G_MAX_QUBITS:
        raise MemoryGuardError(
            f"dense G needs {q} qubits, limit is {DENSE_G_MAX_QUBITS}"
        )
    dim = 1 << q
    # all basis columns at once, carried on a trailing batch axis
    psi = np.eye(dim, dtype=complex).reshape([2] * q + [dim])
    prog, data = default_layout(config)
    _g_stages(config, psi, prog, data)
    return psi.reshape(dim, dim)


def apply_branch(config: QcpuConfig, program_bits: str, data: Statevector) -> Statevector:
    """``U_p |data>`` for a classical program word ``p``.

    This is G with every program qubit replaced by a classical bit: each
    element gate either fires or not. Only the ``n`` data qubits are
    simulated, and the arithmetic on the data amplitudes is identical to
    what ``apply_G`` performs on the matching program block.
    """
    if data.num_qubits != config.n:
        raise WidthError(f"data has {data.num_qubits} qubits, expected {config.n}")
    psi = data.amplitudes.reshape([2] * config.n).copy()
    apply_branch_inplace(config, program_bits, psi)
    return Statevector(config.n, psi.reshape(-1))


def apply_branch_inplace(config: QcpuConfig, program_bits: str, psi: np.ndarray) -> None:
    if len(program_bits) != config.program_width:
        raise WidthError(
            f"program word has {len(program_bits)} bits, expected {config.program_width}"
        )
    axis = "z" if program_bits[config.r_pos] == "1" else "x"
    for k in range(1, config.m + 1):
        if program_bits[config.a_pos(k)] == "1":
            apply_1q_inplace(psi, _rotation(config.m, k, axis), 0)
    for k in range(2, config.n + 1):
        if program_bits[config.b_pos(k)] == "1":
            if program_bits[config.p_pos(k)] == "0":
                apply_x_inplace(psi, k - 1, {k - 2: 1})
            else:
                apply_x_inplace(psi, k - 2, {k - 1: 1})
