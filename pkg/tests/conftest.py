import math

import numpy as np
import pytest

from authqc.circuit import GateSequence
from authqc.keying import KeySecrets, sample_random_sequence
from authqc.pga import ProgramSpec


# Independent oracle: dense matrices from explicit Kronecker products, with its
# own gate definitions (shares nothing with authqc.simulator).
_I2 = np.eye(2, dtype=complex)
_P0 = np.diag([1, 0]).astype(complex)
_P1 = np.diag([0, 1]).astype(complex)


def _oracle_1q(kind, theta):
    if kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if kind == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind == "RZ":
        return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])
    if kind == "RY":
        return np.array([[math.cos(theta / 2), -math.sin(theta / 2)],
                         [math.sin(theta / 2), math.cos(theta / 2)]], dtype=complex)
    raise ValueError(kind)


def _kron_all(factors):
    out = np.eye(1, dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def oracle_gate(gate, n):
    if gate.kind == "GPHASE":
        return np.exp(1j * gate.theta) * np.eye(2**n)
    if gate.kind == "CNOT":
        c, t = gate.targets
        off = [_P0 if q == c else _I2 for q in range(n)]
        on = [_P1 if q == c else (_oracle_1q("X", None) if q == t else _I2) for q in range(n)]
        return _kron_all(off) + _kron_all(on)
    (q,) = gate.targets
    return _kron_all([_oracle_1q(gate.kind, gate.theta) if j == q else _I2 for j in range(n)])


def oracle_matrix(seq: GateSequence) -> np.ndarray:
    u = np.eye(2**seq.num_qubits, dtype=complex)
    for g in seq.gates:
        u = oracle_gate(g, seq.num_qubits) @ u
    return u


def oracle_state(seq, psi):
    return oracle_matrix(seq) @ psi


def haar_state(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def instance_k1_m3_n2():
    """k=1, m=3, n=2 instance: random U0, U1, dummy scramblers, key secrets."""
    r = np.random.default_rng(2024)
    programs = [sample_random_sequence(range(2), 10, r) for _ in range(2)]
    spec = ProgramSpec.with_random_dummies(programs, k=1, m=3, rng_seed=77)
    secrets = KeySecrets.random(3, rng_seed=99)
    return spec, secrets
