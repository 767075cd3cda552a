import numpy as np
import pytest

from authqc import simulator as sim
from authqc.circuit import CNOT, GPHASE, RY, RZ, GateSequence, H, X
from authqc.controlled import controlled_gate, toffoli
from authqc.errors import BudgetError, ParseError, WidthError
from authqc.keying import sample_random_sequence
from authqc.pga import ProgramSpec, build_pga, controlled_on_value, load_manifest, save_manifest

from conftest import haar_state, oracle_matrix

CNOT_4x4 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def controlled_oracle(base: np.ndarray, n_ctrl: int, value: int) -> np.ndarray:
    """Block-diagonal: ``base`` on the control block ``value``, identity elsewhere."""
    d = base.shape[0]
    blocks = [base if c == value else np.eye(d) for c in range(2**n_ctrl)]
    out = np.zeros((d * 2**n_ctrl,) * 2, dtype=complex)
    for c, b in enumerate(blocks):
        out[c * d:(c + 1) * d, c * d:(c + 1) * d] = b
    return out


def test_toffoli_network_exact():
    u = sim.to_matrix(GateSequence(tuple(toffoli(0, 1, 2)), 3))
    expected = np.eye(8, dtype=complex)
    expected[6:, 6:] = [[0, 1], [1, 0]]
    assert np.allclose(u, expected, atol=1e-12)


@pytest.mark.parametrize("gate", [H(3), X(3), RZ(0.71, 3), RY(-2.2, 3), GPHASE(0.9), CNOT(3, 2)])
@pytest.mark.parametrize("controls", [[0], [0, 1], [4, 0, 1]])
def test_controlled_gate_exact(gate, controls):
    n = 5
    u = sim.to_matrix(GateSequence(tuple(controlled_gate(gate, controls)), n))
    base = oracle_matrix(GateSequence((gate,), n))
    expected = np.eye(2**n, dtype=complex)
    for b in range(2**n):
        if all((b >> (n - 1 - c)) & 1 for c in controls):
            expected[:, b] = base[:, b]
    assert np.allclose(u, expected, atol=1e-10)


def test_controlled_on_value_is_cnot():
    u = sim.to_matrix(controlled_on_value(GateSequence((X(0),), 1), 1, 1))
    assert np.allclose(u, CNOT_4x4)


def test_controlled_on_value_zero_control():
    u = sim.to_matrix(controlled_on_value(GateSequence((X(0),), 1), 2, 0))
    expected = np.eye(8, dtype=complex)
    expected[0:2, 0:2] = [[0, 1], [1, 0]]  # fires only on control |00>
    assert np.allclose(u, expected, atol=1e-10)


def test_controlled_on_value_empty_is_identity():
    u = sim.to_matrix(controlled_on_value(GateSequence.empty(2), 2, 3))
    assert np.allclose(u, np.eye(16))


def test_controlled_on_value_random(rng):
    for k in (1, 2, 3):
        seq = sample_random_sequence(range(2), 8, rng)
        value = int(rng.integers(2**k))
        u = sim.to_matrix(controlled_on_value(seq, k, value))
        assert np.allclose(u, controlled_oracle(oracle_matrix(seq), k, value), atol=1e-9)


def test_controlled_on_value_range():
    with pytest.raises(ValueError):
        controlled_on_value(GateSequence.empty(1), 2, 4)


def test_pga_k1_m1_n1_is_cnot():
    spec = ProgramSpec((GateSequence.empty(1), GateSequence((X(0),), 1)), k=1, m=1, n=1)
    ok, _ = sim.equal_up_to_phase(CNOT_4x4, sim.to_matrix(build_pga(spec)))
    assert ok


def test_pga_identity_family():
    spec = ProgramSpec(tuple(GateSequence.empty(2) for _ in range(4)), k=2, m=2, n=2)
    ok, _ = sim.equal_up_to_phase(np.eye(16), sim.to_matrix(build_pga(spec)))
    assert ok


def test_pga_contract_random_instance(instance_k1_m3_n2, rng):
    spec, _ = instance_k1_m3_n2
    g = oracle_matrix(build_pga(spec))
    mm = oracle_matrix(spec.m2) @ oracle_matrix(spec.m1)
    for _ in range(50):
        i = int(rng.integers(2))
        d = haar_state(2, rng)
        phi = haar_state(2, rng)
        out = g @ np.kron(np.kron(sim.basis_state(i, 1), d), phi)
        want = np.kron(np.kron(sim.basis_state(i, 1), mm @ d), oracle_matrix(spec.programs[i]) @ phi)
        assert sim.fidelity(out, want) >= 1 - 1e-9


def test_pga_index_preserved_and_dummy_index_independent(rng):
    progs = [sample_random_sequence(range(1), 6, rng) for _ in range(4)]
    spec = ProgramSpec.with_random_dummies(progs, k=2, m=3, rng_seed=3)
    g = sim.to_matrix(build_pga(spec))
    d = haar_state(1, rng)
    phi = haar_state(1, rng)
    dummy_outs = []
    for i in range(4):
        out = g @ np.kron(np.kron(sim.basis_state(i, 2), d), phi)
        # index register measures i with probability 1
        p_index = sim.partial_trace(sim.density(out), [0, 1])[i, i].real
        assert p_index == pytest.approx(1, abs=1e-9)
        dummy_outs.append(sim.partial_trace(sim.density(out), [2]))
        # input register holds U_i phi
        rho_in = sim.partial_trace(sim.density(out), [3])
        assert sim.state_fidelity(rho_in, sim.apply(progs[i], phi)) >= 1 - 1e-9
    for rho in dummy_outs[1:]:
        assert np.allclose(rho, dummy_outs[0], atol=1e-9)


def test_pga_dummy_trace_leaves_pure_index(instance_k1_m3_n2, rng):
    spec, _ = instance_k1_m3_n2
    g = sim.to_matrix(build_pga(spec))
    out = g @ np.kron(sim.basis_state(1 << 2, 3), haar_state(2, rng))
    rho_idx = sim.partial_trace(sim.density(out), [0])
    assert sim.state_fidelity(rho_idx, sim.basis_state(1, 1)) == pytest.approx(1, abs=1e-9)


def test_program_spec_validation():
    one = GateSequence.empty(1)
    with pytest.raises(WidthError):
        ProgramSpec((one,), k=1, m=1, n=1)
    with pytest.raises(WidthError):
        ProgramSpec((one, one), k=1, m=0, n=1)
    with pytest.raises(WidthError):
        ProgramSpec((one, GateSequence.empty(2)), k=1, m=1, n=1)
    with pytest.raises(WidthError):
        ProgramSpec((one, one), k=1, m=1, n=1, m1=GateSequence((H(0),), 1))


def test_gate_budget_enforced():
    progs = [GateSequence((CNOT(0, 1),) * 5, 2) for _ in range(2)]
    with pytest.raises(BudgetError):
        build_pga(ProgramSpec(progs, k=1, m=1, n=2, gate_budget=20))


def test_manifest_round_trip(tmp_path, instance_k1_m3_n2):
    spec, _ = instance_k1_m3_n2
    path = tmp_path / "family.json"
    save_manifest(spec, path)
    loaded = load_manifest(path)
    assert loaded == spec
    assert build_pga(loaded) == build_pga(spec)


def test_manifest_samples_missing_dummies(tmp_path):
    (tmp_path / "u0.seq").write_text("qubits 1\n")
    (tmp_path / "u1.seq").write_text("qubits 1\nX 0\n")
    (tmp_path / "m.json").write_text('{"k": 1, "m": 2, "rng_seed": 5, "programs": ["u0.seq", "u1.seq"]}')
    a = load_manifest(tmp_path / "m.json")
    b = load_manifest(tmp_path / "m.json")
    assert a.m1 is not None and a.m1.num_qubits == 1 and a == b


@pytest.mark.parametrize("body", ['{"k": 1, "programs": []}', "{not json", '{"k": "x", "m": 1, "programs": []}'])
def test_manifest_errors_are_parse_errors(tmp_path, body):
    (tmp_path / "m.json").write_text(body)
    with pytest.raises(ParseError):
        load_manifest(tmp_path / "m.json")
