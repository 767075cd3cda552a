import math

import numpy as np
import pytest

from authqc import simulator as sim
from authqc.circuit import CNOT, GateSequence, H, X, adjoint
from authqc.errors import WidthError
from authqc.keying import (KeySecrets, KeyState, encode, issue_key, key_basis_index, mixed_key_output, read_amplitudes,
                           recycle, run, sample_random_sequence, state_to_text)
from authqc.pga import ProgramSpec, build_pga

from conftest import haar_state, oracle_matrix


@pytest.fixture(scope="module")
def keyed(instance_k1_m3_n2):
    spec, secrets = instance_k1_m3_n2
    return spec, secrets, encode(build_pga(spec), secrets)


def test_sample_random_sequence_is_seeded_and_bounded():
    a = sample_random_sequence(range(1, 3), 30, np.random.default_rng(5), num_qubits=4)
    b = sample_random_sequence(range(1, 3), 30, np.random.default_rng(5), num_qubits=4)
    assert a == b and len(a) == 30 and a.num_qubits == 4
    assert a.support() <= {1, 2}


def test_secrets_text_round_trip():
    s = KeySecrets.random(3, rng_seed=11)
    text = s.to_text()
    assert text.startswith("# SECRET")
    assert KeySecrets.from_text(text) == s


def test_encode_with_empty_secrets_is_identity_map():
    xg = GateSequence((H(0), CNOT(0, 1)), 2)
    s = KeySecrets(GateSequence.empty(1), GateSequence.empty(1))
    assert encode(xg, s) == xg


def test_encode_conjugation_example():
    # L = R = H on the key qubit, G = CNOT: G' = (H x I) CNOT (H x I)
    xg = GateSequence((CNOT(0, 1),), 2)
    h = GateSequence((H(0),), 1)
    got = sim.to_matrix(encode(xg, KeySecrets(L=h, R=h)))
    hi = np.kron(oracle_matrix(h), np.eye(2))
    assert np.allclose(got, hi @ oracle_matrix(xg) @ hi)


def test_encode_matrix_identity(keyed):
    spec, secrets, xgp = keyed
    m_extra = spec.width - spec.m
    ell = np.kron(oracle_matrix(secrets.L), np.eye(2**m_extra))
    r = np.kron(oracle_matrix(secrets.R), np.eye(2**m_extra))
    assert np.allclose(oracle_matrix(xgp), ell @ oracle_matrix(build_pga(spec)) @ r, atol=1e-9)


def test_encode_width_error():
    with pytest.raises(WidthError):
        encode(GateSequence.empty(1), KeySecrets.random(2, rng_seed=0))


def test_key_basis_index():
    assert key_basis_index(1, 3, 1) == 0b100
    assert key_basis_index(2, 3, 2) == 0b100
    with pytest.raises(ValueError):
        key_basis_index(2, 3, 1)


def test_issue_key_with_empty_r_is_basis_state():
    s = KeySecrets(GateSequence.empty(2), GateSequence.empty(2))
    key = issue_key(1, s, m=2, k=1)
    assert np.allclose(key.state, sim.basis_state(0b10, 2))


def test_issue_key_with_r_equal_h():
    s = KeySecrets(GateSequence.empty(1), GateSequence((H(0),), 1))
    assert np.allclose(issue_key(0, s, m=1, k=1).state, [1 / math.sqrt(2)] * 2)
    assert np.allclose(issue_key(1, s, m=1, k=1).state, [1 / math.sqrt(2), -1 / math.sqrt(2)])


def test_issued_keys_orthonormal():
    s = KeySecrets.random(3, rng_seed=4)
    keys = np.array([issue_key(i, s, m=3, k=2).state for i in range(4)])
    assert np.allclose(keys.conj() @ keys.T, np.eye(4), atol=1e-10)


def test_run_honest_key_gives_program_output(keyed, rng):
    spec, secrets, xgp = keyed
    for i in range(2):
        for _ in range(5):
            phi = haar_state(2, rng)
            res = run(xgp, issue_key(i, secrets, 3, 1), phi)
            assert not res.entangled
            assert sim.fidelity(res.output, oracle_matrix(spec.programs[i]) @ phi) >= 1 - 1e-9


def test_run_then_recycle_restores_key_and_input(keyed, rng):
    spec, secrets, xgp = keyed
    phi = haar_state(2, rng)
    key = issue_key(1, secrets, 3, 1)
    first = run(xgp, key, phi)
    back = recycle(xgp, first.key, first.output)
    assert not back.entangled
    assert sim.fidelity(back.key, key.state) >= 1 - 1e-9
    assert sim.fidelity(back.output, phi) >= 1 - 1e-9


def test_wrong_key_entangles(keyed, rng):
    _, _, xgp = keyed
    res = run(xgp, haar_state(3, rng), haar_state(2, rng))
    assert res.entangled and res.key is None and res.input_purity < 1 - 1e-6


def test_run_width_mismatch(keyed):
    _, _, xgp = keyed
    with pytest.raises(WidthError):
        run(xgp, sim.basis_state(0, 2), sim.basis_state(0, 2))


def test_mixed_key_output_is_density(keyed, rng):
    _, _, xgp = keyed
    rho = mixed_key_output(xgp, 3, haar_state(2, rng))
    sim.check_density(rho)


def test_key_file_round_trip(keyed):
    _, secrets, _ = keyed
    key = issue_key(1, secrets, 3, 1, program_id="demo")
    text = key.to_text()
    assert text.startswith("# SECRET")
    back = KeyState.from_text(text)
    # the file is the user's copy: the issued index never leaves the programmer
    assert back.issued_index is None and back.program_id == "demo"
    assert np.allclose(back.state, key.state, atol=1e-15)
    assert key.user_copy().issued_index is None


def test_state_text_round_trip(rng):
    psi = haar_state(3, rng)
    assert np.allclose(read_amplitudes(state_to_text(psi)), psi, atol=1e-15)


def test_state_text_rejects_unnormalised():
    with pytest.raises(ValueError):
        read_amplitudes("qubits 1\namp 1 0\namp 1 0\n")


def test_k_equal_m_family():
    progs = [GateSequence.empty(1), GateSequence((X(0),), 1)]
    spec = ProgramSpec(progs, k=1, m=1, n=1)
    s = KeySecrets.random(1, rng_seed=2)
    xgp = encode(build_pga(spec), s)
    res = run(xgp, issue_key(1, s, 1, 1), sim.basis_state(0, 1))
    assert np.allclose(abs(res.output), [0, 1], atol=1e-9)
    assert adjoint(adjoint(xgp)) == xgp
