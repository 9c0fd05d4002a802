"""Instruction words, their bit layout, and the assembly text format.

An instruction word is written most significant bit first as

    b_n p_n ... b_2 p_2 a_m ... a_2 a_1 r

``alpha`` packs ``a_m..a_1`` with ``a_1`` as the least significant bit, and
the rotation angle is ``alpha * 2*pi / 2**m``.

Assembly grammar (one instruction per line, ``#`` starts a comment)::

    qcpu n=<n> m=<m>        mandatory header
    NOP
    RX <alpha>
    RZ <alpha>
    CNOT <control> <target> data indices 1..n, must be adjacent
    010011                  raw word of exactly program_width bits
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable

from .errors import AsmSyntaxError, WidthError
from .gate_array import QcpuConfig


@dataclass(frozen=True)
class Instruction:
    """One program word.

    ``pairs[i]`` holds ``(b_k, p_k)`` for ``k = i + 2``; it is empty when n=1.
    """

    r: int = 0
    alpha: int = 0
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(b), int(p)) for b, p in self.pairs))
        if self.r not in (0, 1):
            raise ValueError(f"r must be 0 or 1, got {self.r!r}")
        if int(self.alpha) != self.alpha or self.alpha < 0:
            raise ValueError(f"alpha must be a non-negative integer, got {self.alpha!r}")
        for b, p in self.pairs:
            if b not in (0, 1) or p not in (0, 1):
                raise ValueError(f"pair bits must be 0 or 1, got {(b, p)}")

    @property
    def n(self) -> int:
        return len(self.pairs) + 1

    def is_nop(self) -> bool:
        return self.r == 0 and self.alpha == 0 and all(pair == (0, 0) for pair in self.pairs)

    @classmethod
    def nop(cls, config: QcpuConfig) -> Instruction:
        return cls(0, 0, ((0, 0),) * (config.n - 1))

    @classmethod
    def rx(cls, config: QcpuConfig, alpha: int) -> Instruction:
        return _checked(cls(0, alpha, ((0, 0),) * (config.n - 1)), config)

    @classmethod
    def rz(cls, config: QcpuConfig, alpha: int) -> Instruction:
        return _checked(cls(1, alpha, ((0, 0),) * (config.n - 1)), config)

    @classmethod
    def cnot(cls, config: QcpuConfig, control: int, target: int) -> Instruction:
        """CNOT between adjacent data qubits (1-based indices)."""
        if abs(control - target) != 1:
            raise ValueError(f"CNOT {control} {target}: qubits are not adjacent")
        k = max(control, target)
        if not 1 <= min(control, target) or k > config.n:
            raise ValueError(f"CNOT {control} {target}: index out of range 1..{config.n}")
        pairs = [(0, 0)] * (config.n - 1)
        pairs[k - 2] = (1, 0 if control == k - 1 else 1)
        return cls(0, 0, tuple(pairs))


def _checked(instr: Instruction, config: QcpuConfig) -> Instruction:
    if instr.alpha >= (1 << config.m):
        raise ValueError(f"angle code {instr.alpha} out of range 0..{(1 << config.m) - 1}")
    if len(instr.pairs) != config.n - 1:
        raise WidthError(
            f"instruction has {len(instr.pairs)} CNOT pairs, config needs {config.n - 1}"
        )
    return instr


@dataclass(frozen=True)
class Program:
    """A straight-line instruction sequence for one configuration."""

    config: QcpuConfig
    instructions: tuple[Instruction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        for instr in self.instructions:
            _checked(instr, self.config)

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def __add__(self, other: Program) -> Program:
        if other.config != self.config:
            raise WidthError("cannot concatenate programs for different configurations")
        return Program(self.config, self.instructions + other.instructions)

    def words(self) -> list[str]:
        return [encode(i, self.config) for i in self.instructions]

    @classmethod
    def from_words(cls, words: Iterable[str], config: QcpuConfig) -> Program:
        return cls(config, tuple(decode(w, config) for w in words))


def encode(instr: Instruction, config: QcpuConfig) -> str:
    _checked(instr, config)
    out = []
    for b, p in reversed(instr.pairs):
        out.append(f"{b}{p}")
    out.append(format(instr.alpha, f"0{config.m}b"))
    out.append(str(instr.r))
    return "".join(out)


def decode(bits: str, config: QcpuConfig) -> Instruction:
    if len(bits) != config.program_width:
        raise WidthError(f"word {bits!r} has {len(bits)} bits, expected {config.program_width}")
    if set(bits) - {"0", "1"}:
        raise ValueError(f"word {bits!r} contains non-binary characters")
    npair = 2 * (config.n - 1)
    pairs = tuple(
        (int(bits[i]), int(bits[i + 1])) for i in range(npair - 2, -1, -2)
    )
    alpha = int(bits[npair:npair + config.m], 2)
    return Instruction(int(bits[-1]), alpha, pairs)


def angle_of(instr: Instruction, config: QcpuConfig) -> float:
    """Rotation angle in radians, in ``[0, 2*pi)``."""
    return instr.alpha * (2 * math.pi / (1 << config.m))


_HEADER = re.compile(r"^qcpu\s+n=(\d+)\s+m=(\d+)$")


def _int(token: str, lineno: int) -> int:
    if not re.fullmatch(r"\d+", token):
        raise AsmSyntaxError(lineno, f"expected a non-negative integer, got {token!r}")
    return int(token)


def parse_asm(text: str, config: QcpuConfig | None = None) -> Program:
    """Parse assembly into a Program.

    The header line fixes the configuration. When ``config`` is supplied
    the header may be omitted, but if present it must agree.
    """
    header_cfg = None
    instructions = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header_cfg is None and not instructions:
            m = _HEADER.match(line)
            if m:
                try:
                    header_cfg = QcpuConfig(int(m.group(1)), int(m.group(2)))
                except ValueError as exc:
                    raise AsmSyntaxError(lineno, str(exc)) from None
                if config is not None and header_cfg != config:
                    raise AsmSyntaxError(
                        lineno, f"header n={header_cfg.n} m={header_cfg.m} conflicts with "
                        f"n={config.n} m={config.m}"
                    )
                continue
            if config is None:
                raise AsmSyntaxError(lineno, "missing 'qcpu n=<n> m=<m>' header")
        elif line.startswith("qcpu"):
            raise AsmSyntaxError(lineno, "header must come before any instruction")
        cfg = header_cfg or config
        instructions.append(_parse_line(line, lineno, cfg))
    cfg = header_cfg or config
    if cfg is None:
        raise AsmSyntaxError(1, "missing 'qcpu n=<n> m=<m>' header")
    return Program(cfg, tuple(instructions))


def _parse_line(line: str, lineno: int, config: QcpuConfig) -> Instruction:
    tokens = line.split()
    op = tokens[0].upper()
    args = tokens[1:]
    if set(line) <= {"0", "1"}:
        try:
            return decode(line, config)
        except ValueError as exc:
            raise AsmSyntaxError(lineno, str(exc)) from None
    try:
        if op == "NOP":
            if args:
                raise AsmSyntaxError(lineno, "NOP takes no operands")
            return Instruction.nop(config)
        if op in ("RX", "RZ"):
            if len(args) != 1:
                raise AsmSyntaxError(lineno, f"{op} takes one angle code")
            alpha = _int(args[0], lineno)
            return Instruction.rx(config, alpha) if op == "RX" else Instruction.rz(config, alpha)
        if op == "CNOT":
            if len(args) != 2:
                raise AsmSyntaxError(lineno, "CNOT takes <control> <target>")
            return Instruction.cnot(config, _int(args[0], lineno), _int(args[1], lineno))
    except AsmSyntaxError:
        raise
    except ValueError as exc:
        raise AsmSyntaxError(lineno, str(exc)) from None
    raise AsmSyntaxError(lineno, f"unknown mnemonic {tokens[0]!r}")


def mnemonic(instr: Instruction, config: QcpuConfig) -> str:
    """Assembly for one instruction; words that mix actions stay raw."""
    _checked(instr, config)
    active = [k for k, (b, _) in enumerate(instr.pairs, start=2) if b == 1]
    idle_pairs = all(pair == (0, 0) for pair in instr.pairs)
    if idle_pairs:
        if instr.r == 0 and instr.alpha == 0:
            return "NOP"
        return f"{'RZ' if instr.r else 'RX'} {instr.alpha}"
    if instr.r == 0 and instr.alpha == 0 and len(active) == 1:
        k = active[0]
        if all(pair == (0, 0) for j, pair in enumerate(instr.pairs, start=2) if j != k):
            p = instr.pairs[k - 2][1]
            return f"CNOT {k - 1} {k}" if p == 0 else f"CNOT {k} {k - 1}"
    return encode(instr, config)


def emit_asm(program: Program) -> str:
    cfg = program.config
    lines = [f"qcpu n={cfg.n} m={cfg.m}"]
    lines.extend(mnemonic(i, cfg) for i in program.instructions)
    return "\n".join(lines) + "\n"
