"""Security-reduction machinery, exercised at desk scale.

* :func:`controlize` turns ``x(U)`` into ``z(C_U)`` with a new control qubit 0.
* :func:`build_modified_instance` wraps ``C_U`` between single-qubit ``V_R``
  (first) and ``V_L`` (last) and shuffles the result.
* :func:`exact_nonidentity_check` is the brute-force dense oracle.
* :func:`validate_forged_key` checks a candidate (program, keys) forgery.
* :func:`plant_whitebox_attacker` and :func:`distinguish` realise the
  attacker channel and the two key-fidelity statistics whose pattern
  separates ``G0' = V_L V_R (x) I`` from ``G1' = (V_L (x) I) C_U (V_R (x) I)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import simulator as sim
from .circuit import CNOT, Gate, GateSequence, adjoint, embed, parse, serialize
from .controlled import controlled_gate
from .errors import ParseError, WidthError
from .keying import SECRET_MARKER
from .shuffler import ShuffleConfig, shuffle

PATTERN_SLACK = 0.1
DEFAULT_ANCILLAS = 3


def controlize(x: GateSequence) -> GateSequence:
    """``|0><0| (x) I + |1><1| (x) U`` on ``n + 1`` qubits, control on qubit 0.

    Each gate expands by a bounded factor; global phases become phase gates
    on the control.
    """
    width = x.num_qubits + 1
    gates: list[Gate] = []
    for g in embed(x, 1, width).gates:
        gates.extend(controlled_gate(g, [0]))
    return GateSequence(tuple(gates), width)


@dataclass(frozen=True, eq=False)
class ModifiedInstance:
    base: GateSequence
    v_left: GateSequence
    v_right: GateSequence
    built: GateSequence
    shuffled: GateSequence
    shuffle_seed: int = 0

    @property
    def num_qubits(self) -> int:
        return self.built.num_qubits

    def key(self, i: int) -> np.ndarray:
        """Single-qubit key ``V_R^dag |i>``."""
        if i not in (0, 1):
            raise ValueError("instance keys are indexed by 0 or 1")
        return sim.apply(adjoint(self.v_right), sim.basis_state(i, 1))

    def plus_key(self) -> np.ndarray:
        return sim.apply(adjoint(self.v_right), np.array([1, 1], dtype=complex) / math.sqrt(2))

    def programs(self) -> list[GateSequence]:
        """What key ``i`` makes the instance perform: ``U^0`` and ``U^1``."""
        return [GateSequence.empty(self.base.num_qubits), self.base]

    def to_text(self) -> str:
        return (f"{SECRET_MARKER} authqc reduction-instance v1\n"
                f"shuffle_seed {self.shuffle_seed}\n"
                f"[base]\n{serialize(self.base)}"
                f"[v_left]\n{serialize(self.v_left)}"
                f"[v_right]\n{serialize(self.v_right)}"
                f"[built]\n{serialize(self.built)}"
                f"[public]\n{serialize(self.shuffled)}")

    @classmethod
    def from_text(cls, text: str) -> ModifiedInstance:
        sections: dict[str, list[str]] = {}
        current = None
        seed = 0
        for line in text.splitlines():
            s = line.strip()
            if s.startswith("[") and s.endswith("]"):
                current = s[1:-1]
                sections[current] = []
            elif current is not None:
                sections[current].append(line)
            elif s.startswith("shuffle_seed"):
                seed = int(s.split()[1])
        missing = {"base", "v_left", "v_right", "built", "public"} - sections.keys()
        if missing:
            raise ParseError(f"instance bundle lacks sections {sorted(missing)}")
        get = lambda name: parse("\n".join(sections[name]))  # noqa: E731
        return cls(get("base"), get("v_left"), get("v_right"), get("built"), get("public"), seed)


def _single_qubit(seq: GateSequence, name: str) -> None:
    if seq.num_qubits != 1:
        raise WidthError(f"{name} must be a single-qubit sequence")


def build_modified_instance(x: GateSequence, v_left: GateSequence, v_right: GateSequence,
                            shuffle_cfg: ShuffleConfig | None = None) -> ModifiedInstance:
    _single_qubit(v_left, "V_L")
    _single_qubit(v_right, "V_R")
    cu = controlize(x)
    width = cu.num_qubits
    built = embed(v_right, 0, width) + cu + embed(v_left, 0, width)
    cfg = shuffle_cfg or ShuffleConfig(steps=0)
    return ModifiedInstance(x, v_left, v_right, built, shuffle(built, cfg), cfg.seed)


@dataclass(frozen=True)
class IdentityVerdict:
    is_identity_up_to_phase: bool
    theta: float | None
    residual: float  # 1 - |tr U| / 2^n

    def __str__(self) -> str:
        if self.is_identity_up_to_phase:
            return f"identity theta={self.theta!r}"
        return f"non-identity residual={self.residual:.6g}"


def exact_nonidentity_check(x: GateSequence, tol: float = sim.DEFAULT_TOL) -> IdentityVerdict:
    """Dense brute force; only feasible for small widths (<= 10 qubits)."""
    u = sim.to_matrix(x)
    ok, theta = sim.equal_up_to_phase(np.eye(u.shape[0]), u, tol)
    residual = 1 - sim.trace_overlap(np.eye(u.shape[0]), u)
    if ok:
        theta = math.remainder(theta, 2 * math.pi)
        if abs(theta) < tol:
            theta = 0.0
        elif theta < 0:
            theta += 2 * math.pi
    return IdentityVerdict(ok, theta, max(residual, 0.0))


def _input_battery(n: int, seed: int = 0, extra: int = 4) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    states = [sim.basis_state(b, n) for b in range(2**n)]
    states.append(np.full(2**n, 2 ** (-n / 2), dtype=complex))
    states.extend(sim.random_state(n, rng) for _ in range(extra))
    return states


def validate_forged_key(F: GateSequence, forged_keys: Sequence[np.ndarray], programs: Sequence[GateSequence],
                        tol: float = sim.DEFAULT_TOL) -> bool:
    """Does ``F`` with ``forged_keys[i]`` act as ``programs[i]`` on the input?

    Requires orthonormal keys and, for every key, that ``F(psi_i (x) phi)``
    factors as ``psi_i' (x) U_i phi`` for a basis-spanning input battery.
    """
    if len(forged_keys) != len(programs):
        raise WidthError("one forged key per program is required")
    if not programs:
        return True
    n = programs[0].num_qubits
    keys = [np.asarray(k, dtype=complex) for k in forged_keys]
    dim = keys[0].shape[0]
    l = int(round(math.log2(dim)))
    if any(k.shape != (dim,) for k in keys) or 2**l != dim:
        raise WidthError("forged keys must share one power-of-two dimension")
    if any(p.num_qubits != n for p in programs) or F.num_qubits != l + n:
        raise WidthError(f"F acts on {F.num_qubits} qubits, expected {l}+{n}")
    gram = np.array([[np.vdot(a, b) for b in keys] for a in keys])
    if np.abs(gram - np.eye(len(keys))).max() > tol:
        return False
    for key, prog in zip(keys, programs):
        for phi in _input_battery(n):
            out = sim.apply(F, np.kron(key, phi)).reshape(dim, 2**n)
            target = sim.apply(prog, phi)
            # weight of the output on (anything) (x) U_i phi
            if np.linalg.norm(out @ target.conj()) ** 2 < 1 - tol:
                return False
    return True


@dataclass(frozen=True, eq=False)
class AttackerChannel:
    """Unitary ``W`` on ``key (x) stolen keys (x) ancillas``; ancillas start in |0..0>.

    Ancilla layout: ``[label y, forged key, record]``.
    """

    unitary: GateSequence
    key_qubits: int = 1
    stolen_qubits: int = 0
    ancilla_qubits: int = DEFAULT_ANCILLAS

    @property
    def width(self) -> int:
        return self.key_qubits + self.stolen_qubits + self.ancilla_qubits

    def forged_key_qubit(self) -> int:
        return self.key_qubits + self.stolen_qubits + 1

    def apply(self, key_state: np.ndarray, stolen: np.ndarray | None = None) -> np.ndarray:
        """Pure post-attack joint state for a pure key (and optional stolen-key state)."""
        parts = [key_state]
        if self.stolen_qubits:
            parts.append(stolen if stolen is not None else sim.basis_state(0, self.stolen_qubits))
        parts.append(sim.basis_state(0, self.ancilla_qubits))
        return sim.apply(self.unitary, sim.kron(*parts))

    def gamma(self, rho_key: np.ndarray, rho_stolen: np.ndarray | None = None) -> np.ndarray:
        """Key-register channel: attack, then trace out stolen keys and ancillas."""
        rho = rho_key
        if self.stolen_qubits:
            if rho_stolen is None:
                rho_stolen = sim.density(sim.basis_state(0, self.stolen_qubits))
            rho = np.kron(rho, rho_stolen)
        rho = np.kron(rho, sim.density(sim.basis_state(0, self.ancilla_qubits)))
        w = sim.to_matrix(self.unitary)
        return sim.partial_trace(w @ rho @ w.conj().T, range(self.key_qubits), self.width)


def plant_whitebox_attacker(inst: ModifiedInstance, v_right: GateSequence | None = None,
                            stolen_qubits: int = 0) -> AttackerChannel:
    """An attacker that knows ``V_R`` (or is handed another one to key on).

    It rotates the key into the computational basis, copies the index bit into
    the record ancilla and into the forged-key ancilla, restores both to the
    ``V_R^dag`` basis, and rotates any stolen keys into the computational basis.
    The forged key is therefore the honest key, valid for the built program.
    """
    vr = inst.v_right if v_right is None else v_right
    _single_qubit(vr, "V_R")
    key, label, forged, record = 0, stolen_qubits + 1, stolen_qubits + 2, stolen_qubits + 3
    width = stolen_qubits + 1 + DEFAULT_ANCILLAS
    vr_dag = adjoint(vr)
    parts = [embed(vr, key, width)]
    parts += [embed(vr, 1 + s, width) for s in range(stolen_qubits)]
    parts.append(GateSequence((CNOT(key, forged), CNOT(key, record)), width))
    parts += [embed(vr_dag, key, width), embed(vr_dag, forged, width)]
    del label  # the label register y stays |0>: the attack outputs a single program y
    w = parts[0]
    for p in parts[1:]:
        w = w + p
    return AttackerChannel(w, 1, stolen_qubits, DEFAULT_ANCILLAS)


def forged_keys(attacker: AttackerChannel, inst: ModifiedInstance) -> list[np.ndarray]:
    """Forged-key ancilla state produced for each honest key ``|phi_0>, |phi_1>``."""
    out = []
    q = attacker.forged_key_qubit()
    for i in (0, 1):
        joint = attacker.apply(inst.key(i))
        rho = sim.reduced_from_pure(joint, [q], attacker.width)
        vals, vecs = np.linalg.eigh(rho)
        out.append(vecs[:, -1] * np.exp(-1j * np.angle(np.vdot(inst.key(i), vecs[:, -1]))))
    return out


def ancilla_overlap(attacker: AttackerChannel, inst: ModifiedInstance) -> complex:
    """``<A_0|A_1>`` for the ancilla parts of ``W(|phi_i> (x) |0..0>)``.

    This is the cross term that must vanish for ``U != I``.
    """
    parts = []
    for i in (0, 1):
        joint = attacker.apply(inst.key(i)).reshape(2, -1)
        # Strip the (unchanged) key factor: project on <phi_i|.
        parts.append(inst.key(i).conj() @ joint)
    return complex(np.vdot(parts[0], parts[1]))


@dataclass(frozen=True)
class Distinction:
    verdict: str  # "G1" when the (1, 1/2) pattern is seen, else "G0"
    p_basis: float
    p_plus: float


def distinguish(inst: ModifiedInstance, attacker: AttackerChannel,
                stolen: np.ndarray | None = None) -> Distinction:
    """Exact key-return probabilities ``<phi_0|Gamma(phi_0)|phi_0>`` and ``<phi_+|Gamma(phi_+)|phi_+>``.

    ``stolen`` is an optional density matrix for the attacker's stolen-key register.
    """
    if attacker.key_qubits != 1:
        raise WidthError("instance keys are single-qubit")
    if stolen is not None and stolen.shape != (2**attacker.stolen_qubits,) * 2:
        raise WidthError("stolen-key state does not match the attacker's register")
    phi0, phip = inst.key(0), inst.plus_key()
    p_basis = sim.state_fidelity(attacker.gamma(sim.density(phi0), stolen), phi0)
    p_plus = sim.state_fidelity(attacker.gamma(sim.density(phip), stolen), phip)
    g1 = abs(p_basis - 1) < PATTERN_SLACK and abs(p_plus - 0.5) < PATTERN_SLACK
    return Distinction("G1" if g1 else "G0", p_basis, p_plus)


def stolen_key_mixture(inst: ModifiedInstance, indices: Sequence[int], weights: Sequence[float] | None = None) -> np.ndarray:
    """Density matrix of stolen product keys ``V_R^dag|j_1> (x) ...`` mixed over index strings."""
    n = len(indices[0])
    weights = np.full(len(indices), 1 / len(indices)) if weights is None else np.asarray(weights)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for w, idx in zip(weights, indices):
        rho += w * sim.density(sim.kron(*(inst.key(j) for j in idx)))
    return rho


def save_instance(inst: ModifiedInstance, path: str | Path) -> None:
    Path(path).write_text(inst.to_text())
