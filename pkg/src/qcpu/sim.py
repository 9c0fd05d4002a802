"""Dense statevector engine.

Qubit 0 is the most significant bit of a basis index, so the basis state
``|q0 q1 ... q_{k-1}>`` has index ``int("q0q1...", 2)``. Every module in the
package uses this convention; it matches writing registers left to right.

Gates are applied on a ``[2] * n`` tensor view of the amplitudes. The
controlled kernels at the bottom of this module operate in place on such
tensors and are shared by the gate-array and VM code so that equal inputs
produce bit-identical outputs regardless of which path computed them.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import WidthError

NORM_ATOL = 1e-10
UNITARY_ATOL = 1e-12
# Branches below this probability cannot be selected by a measurement.
MIN_BRANCH_PROB = 1e-15


@dataclass(frozen=True, eq=False)
class Statevector:
    """Pure state of ``num_qubits`` qubits. Treat as immutable."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise WidthError(f"num_qubits must be >= 1, got {self.num_qubits}")
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 1 << self.num_qubits:
            raise WidthError(
                f"expected {1 << self.num_qubits} amplitudes, got {amps.shape[0]}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def __eq__(self, other):
        """Exact amplitude equality; use a tolerance for computed states."""
        if not isinstance(other, Statevector):
            return NotImplemented
        return self.num_qubits == other.num_qubits and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    __hash__ = None

    @classmethod
    def zero(cls, num_qubits: int) -> Statevector:
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits: int, index: int | str) -> Statevector:
        """Computational basis state, from an integer index or a bitstring."""
        if isinstance(index, str):
            if len(index) != num_qubits or set(index) - {"0", "1"}:
                raise WidthError(f"bad basis label {index!r} for {num_qubits} qubits")
            index = int(index, 2) if index else 0
        if not 0 <= index < (1 << num_qubits):
            raise WidthError(f"basis index {index} out of range")
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> Statevector:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        dim = amps.shape[0]
        q = dim.bit_length() - 1
        if dim < 2 or (1 << q) != dim:
            raise WidthError(f"amplitude count {dim} is not a power of two >= 2")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        return cls(q, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self, other: Statevector) -> Statevector:
        """``self ⊗ other``; ``self`` occupies the leading qubits."""
        return Statevector(
            self.num_qubits + other.num_qubits,
            np.kron(self.amplitudes, other.amplitudes),
        )

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_text(self) -> str:
        lines = [f"qubits={self.num_qubits}"]
        # +0.0 folds negative zeros so equal states serialize identically
        re = self.amplitudes.real + 0.0
        im = self.amplitudes.imag + 0.0
        for i in range(self.amplitudes.shape[0]):
            lines.append(f"{i} {re[i]:.17g} {im[i]:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Statevector:
        rows = [ln.strip() for ln in text.splitlines()]
        rows = [ln for ln in rows if ln and not ln.startswith("#")]
        if not rows or not rows[0].startswith("qubits="):
            raise ValueError("state file must start with 'qubits=<q>'")
        try:
            q = int(rows[0].split("=", 1)[1])
        except ValueError:
            raise ValueError(f"bad header {rows[0]!r}") from None
        if q < 1:
            raise ValueError(f"bad qubit count {q}")
        amps = np.zeros(1 << q, dtype=complex)
        seen = set()
        for lineno, row in enumerate(rows[1:], start=2):
            parts = row.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'index real imag'")
            try:
                idx, re, im = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError:
                raise ValueError(f"line {lineno}: malformed number") from None
            if not 0 <= idx < amps.shape[0] or idx in seen:
                raise ValueError(f"line {lineno}: bad or repeated index {idx}")
            seen.add(idx)
            amps[idx] = complex(re, im)
        return cls.from_amplitudes(amps)

    def checksum(self) -> str:
        """Short hex digest of the exact amplitude bits."""
        data = np.ascontiguousarray(self.amplitudes + 0.0, dtype="<c16").tobytes()
        return hashlib.sha256(data).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class GateMatrix:
    """Unitary acting on ``arity`` qubits (1 to 4)."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise WidthError(f"gate matrix must be square, got shape {mat.shape}")
        arity = mat.shape[0].bit_length() - 1
        if (1 << arity) != mat.shape[0] or not 1 <= arity <= 4:
            raise WidthError(f"gate dimension {mat.shape[0]} is not 2^k, k in 1..4")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def arity(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    def is_unitary(self, atol: float = UNITARY_ATOL) -> bool:
        eye = np.eye(self.matrix.shape[0])
        return bool(np.max(np.abs(self.matrix @ self.matrix.conj().T - eye)) <= atol)

    @classmethod
    def checked(cls, matrix) -> GateMatrix:
        gate = cls(matrix)
        if not gate.is_unitary():
            raise ValueError("matrix is not unitary")
        return gate


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def rot_x(theta: float) -> np.ndarray:
    """``exp(i*theta*sigma_x)``; note the angle is not halved."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)


def rot_z(theta: float) -> np.ndarray:
    """``exp(i*theta*sigma_z)``."""
    return np.array(
        [[complex(math.cos(theta), math.sin(theta)), 0],
         [0, complex(math.cos(theta), -math.sin(theta))]],
        dtype=complex,
    )


IDENTITY_1 = GateMatrix.checked(np.eye(2))
X = GateMatrix.checked(PAULI_X)
Z = GateMatrix.checked(PAULI_Z)
H = GateMatrix.checked(np.array([[1, 1], [1, -1]]) / math.sqrt(2))
# CNOT on an ordered pair: C1 has the first qubit as control, C2 the second.
C1 = GateMatrix.checked(np.eye(4)[[0, 1, 3, 2]])
C2 = GateMatrix.checked(np.eye(4)[[0, 3, 2, 1]])
SWAP = GateMatrix.checked(np.eye(4)[[0, 2, 1, 3]])


def _check_targets(num_qubits: int, targets: Sequence[int]) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate qubit indices in {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise IndexError(f"qubit {t} out of range for {num_qubits} qubits")
    return targets


def apply_gate(state: Statevector, gate: GateMatrix | np.ndarray, targets: Sequence[int]) -> Statevector:
    """Apply ``gate`` to ``targets``; ``targets[0]`` is the gate's most significant qubit."""
    mat = gate.matrix if isinstance(gate, GateMatrix) else np.asarray(gate, dtype=complex)
    targets = _check_targets(state.num_qubits, targets)
    k = len(targets)
    if mat.shape != (1 << k, 1 << k):
        raise WidthError(f"gate of shape {mat.shape} does not act on {k} qubits")
    n = state.num_qubits
    psi = state.amplitudes.reshape([2] * n)
    out = np.tensordot(mat.reshape([2] * (2 * k)), psi, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return Statevector(n, out.reshape(-1))


def measure(state: Statevector, qubits: Sequence[int], rng=None) -> tuple[str, Statevector]:
    """Projective Z-basis measurement of ``qubits``.

    ``rng`` is a seed or a ``numpy.random.Generator``. Returns the outcome as
    a bitstring (one character per listed qubit, in listed order) and the
    renormalized post-measurement state.
    """
    qubits = _check_targets(state.num_qubits, qubits)
    if not qubits:
        return "", state
    rng = np.random.default_rng(rng)
    n = state.num_qubits
    rest = [i for i in range(n) if i not in qubits]
    psi = state.amplitudes.reshape([2] * n)
    probs = np.sum(np.abs(psi) ** 2, axis=tuple(rest)) if rest else np.abs(psi) ** 2
    # axes of the marginal come out in ascending qubit order
    order = sorted(qubits)
    probs = np.transpose(probs, [order.index(q) for q in qubits]).reshape(-1)
    probs = np.where(probs < MIN_BRANCH_PROB, 0.0, probs)
    total = probs.sum()
    if total <= 0:
        raise ValueError("state has no selectable measurement branch")
    outcome = int(rng.choice(probs.shape[0], p=probs / total))
    bits = format(outcome, f"0{len(qubits)}b")
    idx = [slice(None)] * n
    for q, b in zip(qubits, bits):
        idx[q] = int(b)
    collapsed = np.zeros_like(psi)
    collapsed[tuple(idx)] = psi[tuple(idx)]
    collapsed /= math.sqrt(probs[outcome])
    return bits, Statevector(n, collapsed.reshape(-1))


def projection_probability(state: Statevector, reference: Statevector) -> float:
    """``|<reference|state>|^2``."""
    if state.num_qubits != reference.num_qubits:
        raise WidthError(
            f"dimension mismatch: {state.num_qubits} vs {reference.num_qubits} qubits"
        )
    return float(abs(np.vdot(reference.amplitudes, state.amplitudes)) ** 2)


# In-place kernels on [2]*n tensors (optionally with trailing batch axes).

def _index(ndim: int, fixed: Mapping[int, int]) -> tuple:
    idx = [slice(None)] * ndim
    for axis, value in fixed.items():
        idx[axis] = value
    return tuple(idx)


def apply_1q_inplace(psi: np.ndarray, mat: np.ndarray, target: int, controls: Mapping[int, int] | None = None) -> None:
    """Apply the 2x2 ``mat`` on axis ``target`` where every control axis holds its value."""
    controls = controls or {}
    i0 = _index(psi.ndim, {**controls, target: 0})
    i1 = _index(psi.ndim, {**controls, target: 1})
    x0 = psi[i0].copy()
    x1 = psi[i1].copy()
    psi[i0] = mat[0, 0] * x0 + mat[0, 1] * x1
    psi[i1] = mat[1, 0] * x0 + mat[1, 1] * x1


def apply_x_inplace(psi: np.ndarray, target: int, controls: Mapping[int, int] | None = None) -> None:
    """Controlled bit flip; exact (a permutation of amplitudes)."""
    controls = controls or {}
    i0 = _index(psi.ndim, {**controls, target: 0})
    i1 = _index(psi.ndim, {**controls, target: 1})
    tmp = psi[i0].copy()
    psi[i0] = psi[i1]
    psi[i1] = tmp
