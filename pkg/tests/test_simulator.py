import math

import numpy as np
import pytest

from authqc import simulator as sim
from authqc.circuit import CNOT, GPHASE, RZ, GateSequence, H, adjoint
from authqc.errors import WidthError
from authqc.keying import sample_random_sequence

from conftest import haar_state, oracle_matrix


def test_hadamard_on_zero():
    out = sim.apply(GateSequence((H(0),), 1), sim.basis_state(0, 1))
    assert np.allclose(out, [1 / math.sqrt(2)] * 2)


def test_cnot_truth_table():
    seq = GateSequence((CNOT(0, 1),), 2)
    # |10> -> |11>; qubit 0 is the most significant bit
    assert np.allclose(sim.apply(seq, sim.basis_state(0b10, 2)), sim.basis_state(0b11, 2))
    assert np.allclose(sim.apply(seq, sim.basis_state(0b01, 2)), sim.basis_state(0b01, 2))


def test_apply_then_adjoint_recovers_state(rng):
    for _ in range(20):
        n = int(rng.integers(1, 6))
        s = sample_random_sequence(range(n), 25, rng)
        psi = haar_state(n, rng)
        back = sim.apply(s, sim.apply(adjoint(s), psi))
        assert np.allclose(back, psi, atol=1e-9)
        assert abs(np.linalg.norm(sim.apply(s, psi)) - 1) < 1e-10


def test_apply_width_errors():
    with pytest.raises(WidthError):
        sim.apply(GateSequence.empty(2), sim.basis_state(0, 1))
    with pytest.raises(WidthError):
        sim.apply(GateSequence.empty(17), np.zeros(2**17))


def test_apply_handles_twelve_qubits(rng):
    s = sample_random_sequence(range(12), 40, rng)
    out = sim.apply(s, haar_state(12, rng))
    assert abs(np.linalg.norm(out) - 1) < 1e-10


def test_to_matrix_empty_is_identity():
    assert np.allclose(sim.to_matrix(GateSequence.empty(1)), np.eye(2))


def test_to_matrix_s_gate():
    u = sim.to_matrix(GateSequence((RZ(math.pi / 2, 0), GPHASE(math.pi / 4)), 1))
    assert np.allclose(u, np.diag([1, 1j]), atol=1e-12)


def test_to_matrix_matches_kronecker_oracle(rng):
    for _ in range(25):
        n = int(rng.integers(1, 5))
        s = sample_random_sequence(range(n), 20, rng)
        u = sim.to_matrix(s)
        assert np.allclose(u, oracle_matrix(s), atol=1e-10)
        assert np.allclose(u.conj().T @ u, np.eye(2**n), atol=1e-9)


def test_apply_agrees_with_matrix(rng):
    for n in range(1, 9):
        s = sample_random_sequence(range(n), 30, rng)
        psi = haar_state(n, rng)
        assert np.allclose(sim.apply(s, psi), sim.to_matrix(s) @ psi, atol=1e-9)


def test_to_matrix_cap():
    with pytest.raises(WidthError):
        sim.to_matrix(GateSequence.empty(11))


def test_equal_up_to_phase_examples():
    h = sim.to_matrix(GateSequence((H(0),), 1))
    ok, theta = sim.equal_up_to_phase(h, h)
    assert ok and abs(theta) < 1e-12
    ok, theta = sim.equal_up_to_phase(np.eye(2), sim.to_matrix(GateSequence((GPHASE(math.pi / 3),), 1)))
    assert ok and theta == pytest.approx(math.pi / 3)
    # |tr(H)| = 0, far below 1 - tol
    assert sim.equal_up_to_phase(h, np.eye(2)) == (False, None)


def test_equal_up_to_phase_properties(rng):
    for _ in range(10):
        a = sim.to_matrix(sample_random_sequence(range(3), 15, rng))
        b = sim.to_matrix(sample_random_sequence(range(3), 15, rng))
        alpha = rng.uniform(-math.pi, math.pi)
        assert sim.equal_up_to_phase(a, a)[0]
        ok, theta = sim.equal_up_to_phase(a, np.exp(1j * alpha) * a)
        assert ok and math.isclose(math.remainder(theta - alpha, 2 * math.pi), 0, abs_tol=1e-9)
        assert sim.equal_up_to_phase(a, b)[0] == sim.equal_up_to_phase(b, a)[0]
    with pytest.raises(WidthError):
        sim.equal_up_to_phase(np.eye(2), np.eye(4))


def test_partial_trace_product_state():
    rho = sim.density(sim.basis_state(0, 2))
    assert np.allclose(sim.partial_trace(rho, [0]), np.diag([1, 0]))


def test_partial_trace_bell_state():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(sim.partial_trace(sim.density(bell), [1]), np.eye(2) / 2)


def test_partial_trace_matches_explicit_sum(rng):
    # keep qubits {0, 2} of 3: explicit index sum as an oracle
    psi = haar_state(3, rng)
    rho = sim.density(psi)
    t = rho.reshape([2] * 6)
    expected = np.einsum("abcdbf->acdf", t).reshape(4, 4)
    assert np.allclose(sim.partial_trace(rho, [0, 2]), expected)
    assert np.allclose(sim.reduced_from_pure(psi, [0, 2], 3), expected)


def test_partial_trace_properties(rng):
    psi = haar_state(4, rng)
    rho = sim.density(psi)
    assert np.allclose(sim.partial_trace(rho, range(4)), rho)
    for keep in ([0], [1, 3], [0, 1, 2]):
        red = sim.partial_trace(rho, keep)
        assert abs(np.trace(red) - 1) < 1e-10
        sim.check_density(red)
    with pytest.raises(WidthError):
        sim.partial_trace(rho, [4])


def test_check_density_rejects_bad_matrices():
    with pytest.raises(ValueError):
        sim.check_density(np.array([[1, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValueError):
        sim.check_density(np.diag([1.5, -0.5]).astype(complex))
