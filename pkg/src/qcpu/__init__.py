"""Toolchain for a deterministic programmable quantum gate array.

The gate array applies a fixed unitary G to a program register and an
n-qubit data register; the program word selects which operation G performs
on the data. This package simulates G, encodes and decodes its instruction
words, compiles circuits to instruction sequences, and bounds the error
introduced by rounding rotation angles to the array's discrete grid.
"""

from .errors import AsmSyntaxError, BoundViolationError, MemoryGuardError, QcpuError, WidthError
from .gate_array import QcpuConfig, apply_G, build_G_dense
from .isa import Instruction, Program, angle_of, decode, emit_asm, encode, parse_asm
from .sim import GateMatrix, Statevector, apply_gate, measure, projection_probability

__version__ = "0.1.0"

__all__ = [
    "AsmSyntaxError", "BoundViolationError", "GateMatrix", "Instruction",
    "MemoryGuardError", "Program", "QcpuConfig", "QcpuError", "Statevector",
    "WidthError", "angle_of", "apply_G", "apply_gate", "build_G_dense", "decode",
    "emit_asm", "encode", "measure", "parse_asm", "projection_probability",
]
