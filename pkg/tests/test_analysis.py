import math

import numpy as np
import pytest

from qcpu.analysis import (
    ErrorReport,
    deviation_bound,
    embed_1q,
    empirical_deviation,
    log_ratio_slope,
    operator_distance,
    random_state,
    random_unitary,
    rows_to_csv,
    scaling_study,
)
from qcpu.compiler import Unitary1Q, compile_circuit, compile_gate, quantize_angle
from qcpu.errors import BoundViolationError, WidthError
from qcpu.gate_array import QcpuConfig
from qcpu.isa import Instruction, Program

import oracles


def test_deviation_bound_examples():
    assert deviation_bound([]) == 0
    assert deviation_bound([0.1]) == pytest.approx(0.2, abs=1e-15)
    assert deviation_bound([0.1, -0.05, 0.05]) == pytest.approx(0.4, abs=1e-15)


def test_deviation_bound_is_additive():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=5), rng.normal(size=7)
    assert deviation_bound(list(a) + list(b)) == pytest.approx(deviation_bound(a) + deviation_bound(b))


def test_random_helpers_are_normalized_and_unitary():
    rng = np.random.default_rng(1)
    assert abs(np.linalg.norm(random_state(16, rng)) - 1) < 1e-12
    u = random_unitary(4, rng)
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-12


def test_operator_distance_ignores_global_phase():
    rng = np.random.default_rng(2)
    u = random_unitary(2, rng)
    assert operator_distance(u, np.exp(0.7j) * u) < 1e-12
    # best phase is +-pi/2, leaving both diagonal entries sqrt(2) apart
    assert operator_distance(np.eye(2), np.diag([1, -1])) == pytest.approx(math.sqrt(2), abs=1e-9)
    with pytest.raises(WidthError):
        operator_distance(np.eye(2), np.eye(4))


def test_embed_1q_matches_oracle():
    rng = np.random.default_rng(3)
    u = random_unitary(2, rng)
    for q in (1, 2, 3):
        np.testing.assert_allclose(embed_1q(u, q, 3), oracles.embed(u, [q - 1], 3), atol=1e-15)


def test_exact_compilation_has_zero_deviation(cfg23):
    u = oracles.exp_pauli(3 * math.pi / 2, oracles.SX)
    compiled = compile_gate(Unitary1Q(u, 1), cfg23)
    report = empirical_deviation(embed_1q(u, 1, 2), compiled, trials=200, seed=0)
    assert report.bound == 0
    assert report.empirical_max_deviation <= 1e-12
    assert report.operator_distance <= 1e-12
    assert report.ok


def test_single_rotation_within_twice_its_error():
    cfg = QcpuConfig(1, 3)
    theta = 1.0
    alpha, delta = quantize_angle(theta, 3)
    ideal = oracles.exp_pauli(theta, oracles.SX)
    prog = Program(cfg, (Instruction.rx(cfg, alpha),))
    report = empirical_deviation(ideal, prog, trials=1000, seed=4, deltas=[delta])
    assert report.bound == pytest.approx(2 * abs(delta))
    assert 0 < report.empirical_max_deviation <= 2 * abs(delta)


def test_next_m_halves_the_worst_case_bound():
    rng = np.random.default_rng(5)
    u = random_unitary(2, rng)
    rows = scaling_study(u, [6, 7], config=1, trials=200, seed=6)
    assert rows[1].bound == rows[0].bound / 2
    for r in rows:
        assert r.empirical <= r.bound


def test_bound_violation_is_raised():
    cfg = QcpuConfig(1, 3)
    prog = Program(cfg, (Instruction.rx(cfg, 1),))
    with pytest.raises(BoundViolationError):
        empirical_deviation(np.eye(2), prog, trials=50, seed=0)
    report = empirical_deviation(np.eye(2), prog, trials=50, seed=0, strict=False)
    assert not report.ok
    assert "ok=false" in report.to_text()


def test_empirical_deviation_validation(cfg23):
    compiled = compile_circuit([], cfg23)
    with pytest.raises(WidthError):
        empirical_deviation(np.eye(2), compiled)
    with pytest.raises(ValueError):
        empirical_deviation(np.eye(4), compiled, trials=0)


def test_scaling_identity_target():
    rows = scaling_study(np.eye(2), range(4, 9), config=1, trials=20, seed=0)
    assert [r.m for r in rows] == [4, 5, 6, 7, 8]
    assert all(r.bound == 0 and r.empirical <= 1e-12 and r.opdist <= 1e-12 for r in rows)


def test_scaling_random_target_bound_halves_and_csv():
    rng = np.random.default_rng(7)
    u = random_unitary(2, rng)
    rows = scaling_study(u, range(4, 13), config=1, trials=50, seed=8)
    for a, b in zip(rows, rows[1:]):
        assert b.bound == a.bound / 2
        assert b.bound <= a.bound
    lines = rows_to_csv(rows).splitlines()
    assert lines[0] == "m,bound,empirical,opdist"
    assert len(lines) == 10 and lines[1].startswith("4,")
    assert max(r.opdist * 2 ** r.m for r in rows) <= 3 * math.pi


def test_scaling_on_other_qubit():
    rng = np.random.default_rng(9)
    u = random_unitary(2, rng)
    rows = scaling_study(u, [5], config=3, qubit=3, trials=20, seed=1)
    assert rows[0].empirical <= rows[0].bound


def test_scaling_rejects_empty_range():
    with pytest.raises(ValueError):
        scaling_study(np.eye(2), [])


def test_log_ratio_slope_is_flat_for_first_order_error():
    rng = np.random.default_rng(10)
    studies = [scaling_study(random_unitary(2, rng), range(4, 13), config=1, trials=5, seed=i)
               for i in range(5)]
    assert abs(log_ratio_slope(studies)) < 0.2


def test_error_report_text():
    r = ErrorReport((0.1,), 0.2, 0.05, 0.01, 10)
    assert r.to_text().splitlines() == [
        "samples=10", "bound=0.2", "empirical=0.05", "opdist=0.01", "ok=true",
    ]


def test_determinism():
    u = random_unitary(2, np.random.default_rng(11))
    a = rows_to_csv(scaling_study(u, range(4, 8), config=2, trials=30, seed=3))
    b = rows_to_csv(scaling_study(u, range(4, 8), config=2, trials=30, seed=3))
    assert a == b
