"""Program execution in the three working modes.

* Mode one runs one gate array over time. Before each step a decoder puts
  the program register into the next instruction word; we model the
  decoder as a classical reset of that register because its contents are
  known at every step.
* Mode two runs one gate array per instruction, each with its own fresh
  program register. Registers may hold superpositions of words and are
  never reset, so they end up entangled with the data.
* Hybrid mode keeps the program word in classical bits and simulates only
  the ``n`` data qubits.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import MemoryGuardError, WidthError
from .gate_array import QcpuConfig, apply_G, apply_branch_inplace
from .isa import Instruction, Program, encode
from .sim import NORM_ATOL, Statevector, measure

DEFAULT_MAX_QUBITS = 24


def max_qubits() -> int:
    """Dense-simulation budget; ``QCPU_MAX_QUBITS`` overrides the default of 24."""
    raw = os.environ.get("QCPU_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"QCPU_MAX_QUBITS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("QCPU_MAX_QUBITS must be positive")
    return value


@dataclass(frozen=True)
class TraceStep:
    index: int
    mode: str
    program: str
    checksum: str

    def to_line(self) -> str:
        return f"step={self.index} program={self.program} checksum={self.checksum}"


@dataclass
class RunTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def record(self, mode: str, program: str, data: Statevector) -> None:
        self.steps.append(TraceStep(len(self.steps), mode, program, data.checksum()))

    def to_text(self) -> str:
        return "".join(step.to_line() + "\n" for step in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


def _words(config: QcpuConfig, program: Program | Sequence[Instruction]) -> list[str]:
    if isinstance(program, Program):
        if program.config != config:
            raise WidthError("program was built for a different configuration")
        return program.words()
    return [encode(i, config) for i in program]


def _check_data(config: QcpuConfig, data: Statevector) -> None:
    if data.num_qubits != config.n:
        raise WidthError(f"data register has {data.num_qubits} qubits, expected {config.n}")


def run_mode_one(
    config: QcpuConfig,
    program: Program | Sequence[Instruction],
    data: Statevector,
    limit: int | None = None,
) -> tuple[Statevector, RunTrace]:
    """Time-sequenced execution on the full joint program/data state."""
    _check_data(config, data)
    limit = max_qubits() if limit is None else limit
    if config.total_width > limit:
        raise MemoryGuardError(
            f"mode one needs {config.total_width} qubits, limit is {limit}"
        )
    trace = RunTrace()
    pw = config.program_width
    for word in _words(config, program):
        # decoder: reset the program register to the known word
        joint = Statevector.basis(pw, word).tensor(data)
        joint = apply_G(config, joint)
        block = joint.amplitudes.reshape(1 << pw, 1 << config.n)
        data = Statevector(config.n, block[int(word, 2)])
        trace.record("one", word, data)
    return data, trace


def run_hybrid(
    config: QcpuConfig,
    program: Program | Sequence[Instruction],
    data: Statevector,
    trace: RunTrace | None = None,
) -> Statevector:
    """Classical program bits driving an ``n``-qubit data register.

    Steps are appended to ``trace`` when one is given.
    """
    _check_data(config, data)
    psi = data.amplitudes.reshape([2] * config.n).copy()
    for word in _words(config, program):
        apply_branch_inplace(config, word, psi)
        if trace is not None:
            trace.record("hybrid", word, Statevector(config.n, psi.reshape(-1)))
    return Statevector(config.n, psi.reshape(-1))


def program_unitary(config: QcpuConfig, program: Program | Sequence[Instruction]) -> np.ndarray:
    """Dense ``2^n x 2^n`` operator a program applies to the data register."""
    dim = 1 << config.n
    psi = np.eye(dim, dtype=complex).reshape([2] * config.n + [dim])
    for word in _words(config, program):
        apply_branch_inplace(config, word, psi)
    return psi.reshape(dim, dim)


@dataclass(frozen=True, eq=False)
class ProgramState:
    """Superposition ``sum_j w_j |word_j>`` of program words."""

    terms: tuple[tuple[complex, str], ...]

    def __post_init__(self):
        terms = tuple((complex(w), str(bits)) for w, bits in self.terms)
        if not terms:
            raise ValueError("program state needs at least one term")
        width = len(terms[0][1])
        seen = set()
        for _, bits in terms:
            if len(bits) != width or set(bits) - {"0", "1"}:
                raise WidthError(f"bad program word {bits!r}")
            if bits in seen:
                raise ValueError(f"duplicate program word {bits!r}")
            seen.add(bits)
        norm2 = sum(abs(w) ** 2 for w, _ in terms)
        if abs(norm2 - 1.0) > NORM_ATOL:
            raise ValueError(f"program state is not normalized (sum |w|^2 = {norm2!r})")
        object.__setattr__(self, "terms", terms)

    @property
    def width(self) -> int:
        return len(self.terms[0][1])

    @classmethod
    def basis(cls, word: str | Instruction, config: QcpuConfig | None = None) -> ProgramState:
        if isinstance(word, Instruction):
            if config is None:
                raise ValueError("config is required to encode an Instruction")
            word = encode(word, config)
        return cls(((1.0, word),))

    @classmethod
    def superpose(cls, terms: Iterable[tuple[complex, str]], normalize: bool = False) -> ProgramState:
        terms = [(complex(w), b) for w, b in terms]
        if normalize:
            norm = math.sqrt(sum(abs(w) ** 2 for w, _ in terms))
            terms = [(w / norm, b) for w, b in terms]
        return cls(tuple(terms))

    def to_statevector(self) -> Statevector:
        amps = np.zeros(1 << self.width, dtype=complex)
        for w, bits in self.terms:
            amps[int(bits, 2)] = w
        return Statevector(self.width, amps)


@dataclass(eq=False)
class JointState:
    """Result of a mode-two run.

    Every gate array is block diagonal in its program register, so the
    joint state is ``sum_key |key_1 ... key_L> (x) |d_key>``, where ``key``
    runs over combinations of program words. Only those blocks are stored,
    keyed by the tuple of words; ``d_key`` already carries the weights.
    """

    config: QcpuConfig
    num_registers: int
    branches: dict[tuple[str, ...], np.ndarray]

    @property
    def num_qubits(self) -> int:
        return self.num_registers * self.config.program_width + self.config.n

    def to_statevector(self, limit: int | None = None) -> Statevector:
        """Dense joint state: registers 1..L (in order) then the data register."""
        limit = max_qubits() if limit is None else limit
        if self.num_qubits > limit:
            raise MemoryGuardError(
                f"dense joint state needs {self.num_qubits} qubits, limit is {limit}"
            )
        dim_data = 1 << self.config.n
        amps = np.zeros(1 << self.num_qubits, dtype=complex)
        for key, vec in self.branches.items():
            start = int("".join(key), 2) * dim_data if key else 0
            amps[start:start + dim_data] += vec
        return Statevector(self.num_qubits, amps)

    def branch_probabilities(self) -> dict[tuple[str, ...], float]:
        return {k: float(np.vdot(v, v).real) for k, v in self.branches.items()}

    def data_density_matrix(self) -> np.ndarray:
        """Reduced state of the data register (program registers traced out)."""
        dim = 1 << self.config.n
        rho = np.zeros((dim, dim), dtype=complex)
        for vec in self.branches.values():
            rho += np.outer(vec, vec.conj())
        return rho

    def checksum(self) -> str:
        """Digest of the stored blocks; equals the data checksum for one branch."""
        if len(self.branches) == 1:
            vec = next(iter(self.branches.values()))
            return Statevector(self.config.n, vec).checksum()
        h = hashlib.sha256()
        for key in sorted(self.branches):
            h.update("".join(key).encode())
            h.update(np.ascontiguousarray(self.branches[key] + 0.0, dtype="<c16").tobytes())
        return h.hexdigest()[:16]

    def data_state(self) -> Statevector:
        """Data register state when the program registers hold a single word each."""
        live = [(k, v) for k, v in self.branches.items() if np.vdot(v, v).real > 0]
        if len(live) != 1:
            raise ValueError(
                "data register is entangled with the program registers; "
                "use data_density_matrix()"
            )
        return Statevector.from_amplitudes(live[0][1])


def run_mode_two(
    config: QcpuConfig,
    program_states: Sequence[ProgramState | str | Instruction],
    data: Statevector,
    limit: int | None = None,
    trace: RunTrace | None = None,
) -> JointState:
    """Space-sequenced execution, one fresh program register per step.

    The qubit budget applies to the amplitudes actually stored: the number
    of program-word branches times ``2^n`` must fit in ``2^limit``. Use
    ``JointState.to_statevector`` for the dense joint vector.
    """
    _check_data(config, data)
    if not program_states:
        raise ValueError("mode two needs at least one program state")
    limit = max_qubits() if limit is None else limit
    states = []
    for ps in program_states:
        if not isinstance(ps, ProgramState):
            ps = ProgramState.basis(ps, config)
        if ps.width != config.program_width:
            raise WidthError(
                f"program register has {ps.width} qubits, expected {config.program_width}"
            )
        states.append(ps)
    count = math.prod(len(ps.terms) for ps in states)
    if count * (1 << config.n) > (1 << limit):
        raise MemoryGuardError(
            f"mode two would store {count} branches of 2^{config.n} amplitudes, "
            f"limit is 2^{limit}"
        )
    branches = {(): data.amplitudes.reshape([2] * config.n).copy()}
    for step, ps in enumerate(states, start=1):
        nxt = {}
        for key, psi in branches.items():
            for weight, word in ps.terms:
                out = psi.copy()
                apply_branch_inplace(config, word, out)
                nxt[key + (word,)] = weight * out
        branches = nxt
        if trace is not None:
            snap = JointState(config, step, {k: v.reshape(-1) for k, v in branches.items()})
            label = "+".join(word for _, word in ps.terms)
            trace.steps.append(TraceStep(len(trace.steps), "two", label, snap.checksum()))
    flat = {k: v.reshape(-1) for k, v in branches.items()}
    return JointState(config, len(states), flat)


def run_mode_two_dense(
    config: QcpuConfig,
    program_states: Sequence[ProgramState],
    data: Statevector,
    limit: int | None = None,
) -> Statevector:
    """Mode two on the full dense joint vector, applying G register by register.

    Exponential in the number of steps; kept as a cross-check for
    ``run_mode_two`` on small cases.
    """
    _check_data(config, data)
    limit = max_qubits() if limit is None else limit
    pw = config.program_width
    total = len(program_states) * pw + config.n
    if total > limit:
        raise MemoryGuardError(f"dense mode two needs {total} qubits, limit is {limit}")
    joint = None
    for ps in program_states:
        reg = ps.to_statevector()
        joint = reg if joint is None else joint.tensor(reg)
    joint = joint.tensor(data)
    data_qubits = list(range(total - config.n, total))
    for j in range(len(program_states)):
        joint = apply_G(config, joint, list(range(j * pw, (j + 1) * pw)), data_qubits)
    return joint


def measure_after(
    config: QcpuConfig,
    state: Statevector,
    data_indices: Sequence[int],
    seed=None,
) -> tuple[str, Statevector]:
    """Measure data qubits ``d_j`` (1-based) of a data or joint state."""
    if state.num_qubits == config.n:
        offset = 0
    elif state.num_qubits == config.total_width:
        offset = config.program_width
    else:
        raise WidthError(
            f"state has {state.num_qubits} qubits; expected {config.n} or {config.total_width}"
        )
    qubits = []
    for j in data_indices:
        if not 1 <= j <= config.n:
            raise IndexError(f"data qubit d_{j} out of range 1..{config.n}")
        qubits.append(offset + j - 1)
    return measure(state, qubits, seed)

