"""End-to-end acceptance checks.

Each test prints exactly one ``ACCEPTANCE <k> PASS|FAIL`` line (with output
capture disabled so it reaches the terminal), then asserts.
"""

import math
import time

import numpy as np
import pytest

from qcpu import vm
from qcpu.analysis import log_ratio_slope, random_state, random_unitary, scaling_study
from qcpu.compiler import compile_circuit, compile_swap, m_required
from qcpu.gate_array import QcpuConfig, build_G_dense
from qcpu.isa import Instruction, Program, angle_of, encode
from qcpu.sim import Statevector
from qcpu.vm import ProgramState, run_hybrid, run_mode_one, run_mode_two

import oracles


@pytest.fixture
def verdict(capsys):
    def emit(k, title, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {k} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
        assert ok, f"acceptance {k} failed: {detail}"
    return emit


def test_1_instruction_encoding(verdict):
    cfg = QcpuConfig(2, 3)
    rx, rz = Instruction.rx(cfg, 6), Instruction.rz(cfg, 5)
    checks = [
        encode(rx, cfg) == "001100",
        encode(rz, cfg) == "001011",
        compile_swap((1, 2), cfg).words() == ["100000", "110000", "100000"],
        angle_of(rx, cfg) == 3 * math.pi / 2,
        angle_of(rz, cfg) == 5 * math.pi / 4,
    ]
    verdict(1, "instruction encoding is bit-exact", all(checks), f"checks={checks}")


def test_2_swap_correctness(verdict):
    cfg = QcpuConfig(2, 3)
    prog = compile_swap((1, 2), cfg)
    cols = [run_mode_one(cfg, prog, Statevector.basis(2, i))[0].amplitudes for i in range(4)]
    err = float(np.max(np.abs(np.column_stack(cols) - oracles.SWAP)))
    verdict(2, "swap program induces SWAP", err <= 1e-12, f"max_err={err:.3g} tol=1e-12")


def test_3_oracle_equivalence(verdict):
    cfg = QcpuConfig(2, 3)
    start = time.perf_counter()
    g = build_G_dense(cfg)
    elapsed = time.perf_counter() - start
    err = float(np.max(np.abs(g - oracles.dense_G(2, 3))))
    unit = float(np.max(np.abs(g @ g.conj().T - np.eye(256))))
    ok = err <= 1e-11 and unit <= 1e-11 and elapsed < 1.0
    verdict(3, "dense G equals element-gate product",
            ok, f"oracle_err={err:.3g} unitarity_err={unit:.3g} tol=1e-11 time={elapsed:.3f}s")


def test_4_superposed_programs(verdict):
    cfg = QcpuConfig(2, 3)
    nop, cnot = "000000", "100000"
    start = time.perf_counter()
    d = Statevector.basis(2, "10")
    ps = ProgramState.superpose([(1, nop), (1, cnot)], normalize=True)
    got = run_mode_two(cfg, [ps], d).to_statevector().amplitudes
    expected = (np.kron(Statevector.basis(6, nop).amplitudes, d.amplitudes)
                + np.kron(Statevector.basis(6, cnot).amplitudes,
                          Statevector.basis(2, "11").amplitudes)) / math.sqrt(2)
    example_err = float(np.max(np.abs(got - expected)))

    rng = np.random.default_rng(404)
    g = oracles.dense_G(2, 3)
    linear_err = 0.0
    for _ in range(100):
        w0, w1 = random_state(2, rng)
        b0, b1 = (format(int(x), "06b") for x in rng.choice(64, size=2, replace=False))
        data = Statevector.from_amplitudes(random_state(4, rng))
        out = run_mode_two(cfg, [ProgramState.superpose([(w0, b0), (w1, b1)])], data)
        ref = sum(w * (g @ np.kron(Statevector.basis(6, b).amplitudes, data.amplitudes))
                  for w, b in ((w0, b0), (w1, b1)))
        linear_err = max(linear_err, float(np.max(np.abs(out.to_statevector().amplitudes - ref))))
    elapsed = time.perf_counter() - start
    ok = example_err <= 1e-10 and linear_err <= 1e-10
    verdict(4, "superposed program entangles as a linear combination", ok,
            f"example_err={example_err:.3g} linearity_err={linear_err:.3g} tol=1e-10 "
            f"time={elapsed:.2f}s")


def test_5_error_bound_soundness(verdict):
    cfg = QcpuConfig(2, 6)
    rng = np.random.default_rng(505)
    start = time.perf_counter()
    violations = loose_violations = 0
    worst_ratio = 0.0
    for _ in range(100):
        gates = oracles.random_circuit(2, 10, rng)
        compiled = compile_circuit(gates, cfg)
        ideal = oracles.ideal_unitary(gates, 2)
        actual = vm.program_unitary(cfg, compiled.program)
        bound = compiled.deviation_bound
        loose = 2 * len(compiled.angle_errors) * (2 * math.pi / 2 ** cfg.m)
        for _ in range(100):
            psi, phi = random_state(4, rng), random_state(4, rng)
            dp = abs(abs(np.vdot(phi, ideal @ psi)) ** 2 - abs(np.vdot(phi, actual @ psi)) ** 2)
            violations += dp > bound + 1e-12
            loose_violations += dp > loose + 1e-12
            if bound > 0:
                worst_ratio = max(worst_ratio, dp / bound)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and loose_violations == 0 and elapsed < 30
    verdict(5, "measured deviation never exceeds the quantization bound", ok,
            f"violations={violations} loose_violations={loose_violations} "
            f"max_dP/bound={worst_ratio:.3f} trials=10000 time={elapsed:.1f}s")


def test_6_convergence_scaling(verdict):
    rng = np.random.default_rng(606)
    start = time.perf_counter()
    studies = [scaling_study(random_unitary(2, rng), range(4, 13), config=1, trials=20, seed=i)
               for i in range(10)]
    halving = all(b.bound == a.bound / 2 for rows in studies for a, b in zip(rows, rows[1:]))
    max_ratio = max(r.opdist * 2 ** r.m for rows in studies for r in rows)
    slope = log_ratio_slope(studies)

    m_ok = True
    for _ in range(1000):
        n_count = int(rng.integers(1, 10 ** 6))
        eps = float(10 ** rng.uniform(-6, 0))
        m = m_required(n_count, eps)
        holds = 2 * n_count * math.pi / 2 ** m <= eps
        minimal = m == 1 or 2 * n_count * math.pi / 2 ** (m - 1) > eps
        m_ok &= holds and minimal
    elapsed = time.perf_counter() - start
    ok = halving and slope <= 0.05 and max_ratio <= 3 * math.pi and m_ok and elapsed < 30
    verdict(6, "bound halves per bit and distance tracks 2^-m", ok,
            f"halving={halving} slope={slope:.4f} (<=0.05) max_dist*2^m={max_ratio:.3f} "
            f"m_required_exact={m_ok} time={elapsed:.1f}s")


def test_7_mode_equivalence(verdict):
    rng = np.random.default_rng(707)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        cfg = QcpuConfig(int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        words = ["".join(rng.choice(["0", "1"], size=cfg.program_width))
                 for _ in range(int(rng.integers(1, 21)))]
        prog = Program.from_words(words, cfg)
        data = Statevector.from_amplitudes(random_state(1 << cfg.n, rng))
        one, _ = run_mode_one(cfg, prog, data)
        hyb = run_hybrid(cfg, prog, data)
        two = run_mode_two(cfg, words, data).data_state()
        worst = max(worst, float(np.max(np.abs(one.amplitudes - hyb.amplitudes))),
                    float(np.max(np.abs(one.amplitudes - two.amplitudes))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30
    verdict(7, "mode one, hybrid and mode two agree", ok,
            f"max_err={worst:.3g} tol=1e-10 time={elapsed:.1f}s")


def test_8_hybrid_performance(verdict, monkeypatch):
    def no_joint_state(*args, **kwargs):
        raise AssertionError("hybrid mode touched the joint program/data state")

    monkeypatch.setattr(vm, "apply_G", no_joint_state)
    cfg = QcpuConfig(10, 4)
    rng = np.random.default_rng(808)
    words = ["".join(row) for row in rng.choice(["0", "1"], size=(10_000, cfg.program_width))]
    prog = Program.from_words(words, cfg)
    data = Statevector.from_amplitudes(random_state(1 << 10, rng))
    start = time.perf_counter()
    out = run_hybrid(cfg, prog, data)
    elapsed = time.perf_counter() - start
    ok = elapsed < 5 and out.amplitudes.size == 1 << 10 and abs(out.norm() - 1) < 1e-9
    verdict(8, "hybrid run of 10^4 instructions on 10 qubits", ok,
            f"time={elapsed:.2f}s (<5s) amplitudes={out.amplitudes.size}")
