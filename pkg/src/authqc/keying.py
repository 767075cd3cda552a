"""Key-register encryption, authorization keys, and key recycling.

``encode`` wraps the array as ``x(R) x(G) x(L)`` so that
``G' = (L (x) I) G (R (x) I)``; a key ``R^dag |i, 0..0>`` then makes ``G'``
act as ``U_i`` on the input and leaves ``L |phi_i>`` behind.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from . import simulator as sim
from .circuit import CNOT, GPHASE, RY, RZ, Gate, GateSequence, H, adjoint, concat, embed, parse, serialize
from .errors import ParseError, WidthError

PRODUCT_PURITY_TOL = 1e-9
SECRET_MARKER = "# SECRET"

_KINDS = ("H", "RZ", "RY", "CNOT", "GPHASE")


def sample_random_sequence(qubits: Iterable[int], length: int, rng: np.random.Generator,
                           num_qubits: int | None = None) -> GateSequence:
    """Uniformly random elementary gates on ``qubits``; angles uniform in [0, 2pi)."""
    qubits = sorted(set(qubits))
    if length < 0:
        raise ValueError("length must be non-negative")
    if not qubits:
        if length:
            raise ValueError("cannot place gates on an empty qubit set")
        return GateSequence.empty(num_qubits or 1)
    width = num_qubits if num_qubits is not None else qubits[-1] + 1
    kinds = [k for k in _KINDS if k != "CNOT" or len(qubits) > 1]
    gates: list[Gate] = []
    for _ in range(length):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "CNOT":
            c, t = rng.choice(qubits, size=2, replace=False)
            gates.append(CNOT(int(c), int(t)))
        elif kind == "GPHASE":
            gates.append(GPHASE(rng.uniform(0, 2 * math.pi)))
        else:
            q = int(qubits[rng.integers(len(qubits))])
            if kind == "H":
                gates.append(H(q))
            else:
                gates.append((RZ if kind == "RZ" else RY)(rng.uniform(0, 2 * math.pi), q))
    return GateSequence(tuple(gates), width)


@dataclass(frozen=True)
class KeySecrets:
    """Programmer-only sequences L and R on the m key qubits."""

    L: GateSequence
    R: GateSequence
    rng_seed: int | None = None

    def __post_init__(self):
        if self.L.num_qubits != self.R.num_qubits:
            raise WidthError("L and R must act on the same key register")

    @property
    def m(self) -> int:
        return self.L.num_qubits

    @classmethod
    def random(cls, m: int, rng_seed: int, length: int | None = None) -> KeySecrets:
        from .seeds import derive_rng

        length = 8 * m if length is None else length
        L = sample_random_sequence(range(m), length, derive_rng(rng_seed, "L"), num_qubits=m)
        R = sample_random_sequence(range(m), length, derive_rng(rng_seed, "R"), num_qubits=m)
        return cls(L, R, rng_seed)

    def to_text(self) -> str:
        return (f"{SECRET_MARKER} authqc key-secrets v1\n"
                f"seed {self.rng_seed if self.rng_seed is not None else '-'}\n"
                f"[L]\n{serialize(self.L)}[R]\n{serialize(self.R)}")

    @classmethod
    def from_text(cls, text: str) -> KeySecrets:
        if not text.startswith(SECRET_MARKER):
            raise ParseError("key-secrets file lacks the SECRET header", 1)
        try:
            head, rest = text.split("[L]\n", 1)
            l_text, r_text = rest.split("[R]\n", 1)
        except ValueError:
            raise ParseError("key-secrets file needs [L] and [R] sections") from None
        seed = None
        for line in head.splitlines():
            if line.startswith("seed ") and line.split()[1] != "-":
                seed = int(line.split()[1])
        return cls(parse(l_text), parse(r_text), seed)


@dataclass(frozen=True, eq=False)
class KeyState:
    """An authorization key ``R^dag |i, 0..0>``.

    ``issued_index`` is the programmer's record; :meth:`user_copy` drops it.
    """

    state: np.ndarray
    issued_index: int | None = None
    program_id: str | None = None

    @property
    def num_qubits(self) -> int:
        return int(round(math.log2(self.state.shape[0])))

    def user_copy(self) -> KeyState:
        return replace(self, issued_index=None)

    def to_text(self) -> str:
        lines = [f"{SECRET_MARKER} authqc key v1", f"program {self.program_id or '-'}", f"qubits {self.num_qubits}"]
        lines += [f"amp {format(a.real, '.17g')} {format(a.imag, '.17g')}" for a in self.state]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> KeyState:
        if not text.startswith(SECRET_MARKER):
            raise ParseError("key file lacks the SECRET header", 1)
        program_id, state = None, read_amplitudes(text)
        for line in text.splitlines():
            if line.startswith("program "):
                value = line.split(maxsplit=1)[1].strip()
                program_id = None if value == "-" else value
        return cls(state, None, program_id)


def read_amplitudes(text: str) -> np.ndarray:
    """Parse ``qubits n`` plus ``amp re im`` lines (the key and state file body)."""
    num_qubits, amps = None, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == "qubits":
                num_qubits = int(fields[1])
            elif fields[0] == "amp":
                amps.append(complex(float(fields[1]), float(fields[2])))
        except (IndexError, ValueError):
            raise ParseError(f"bad line {line!r}", lineno) from None
    if num_qubits is None:
        raise ParseError("missing 'qubits <n>' line")
    if len(amps) != 2**num_qubits:
        raise ParseError(f"expected {2**num_qubits} amplitudes, found {len(amps)}")
    state = np.array(amps, dtype=complex)
    if abs(np.linalg.norm(state) - 1) > 1e-8:
        raise ParseError("state is not normalised")
    return state


def state_to_text(state: np.ndarray) -> str:
    n = int(round(math.log2(len(state))))
    lines = ["# authqc state v1", f"qubits {n}"]
    lines += [f"amp {format(a.real, '.17g')} {format(a.imag, '.17g')}" for a in state]
    return "\n".join(lines) + "\n"


def load_state(path: str | Path) -> np.ndarray:
    return read_amplitudes(Path(path).read_text())


def encode(xG: GateSequence, secrets: KeySecrets) -> GateSequence:
    """``x(R) x(G) x(L)`` with L and R on the leading m qubits."""
    if secrets.m > xG.num_qubits:
        raise WidthError(f"key register of {secrets.m} qubits does not fit a {xG.num_qubits}-qubit array")
    width = xG.num_qubits
    return concat(concat(embed(secrets.R, 0, width), xG), embed(secrets.L, 0, width))


def key_basis_index(i: int, m: int, k: int) -> int:
    """Basis index of ``|i, 0..0>`` in the m-qubit key register."""
    if not 0 <= i < 2**k:
        raise ValueError(f"key index {i} out of range for k={k}")
    if k > m:
        raise WidthError("k exceeds m")
    return i << (m - k)


def issue_key(i: int, secrets: KeySecrets, m: int, k: int, program_id: str | None = None) -> KeyState:
    if secrets.m != m:
        raise WidthError(f"secrets act on {secrets.m} qubits, expected m={m}")
    state = sim.apply(adjoint(secrets.R), sim.basis_state(key_basis_index(i, m, k), m))
    return KeyState(state, i, program_id)


@dataclass(frozen=True, eq=False)
class RunResult:
    """Outcome of running a keyed program.

    With ``entangled`` False the joint output factorises and ``key`` and
    ``output`` hold the factors; otherwise only ``joint`` is meaningful.
    """

    joint: np.ndarray
    input_purity: float
    entangled: bool
    key: np.ndarray | None = None
    output: np.ndarray | None = None


def split_product(joint: np.ndarray, m: int, n: int, tol: float = PRODUCT_PURITY_TOL) -> RunResult:
    """Factor a (m+n)-qubit pure state across the key/input cut when it is a product."""
    mat = joint.reshape(2**m, 2**n)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    purity = float(np.sum(s**4))
    if purity < 1 - tol:
        return RunResult(joint, purity, True)
    key = u[:, 0]
    output = s[0] * vh[0]
    return RunResult(joint, purity, False, key, output / np.linalg.norm(output))


def _run(xGp: GateSequence, key: np.ndarray, psi: np.ndarray, tol: float) -> RunResult:
    key = np.asarray(key, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    m = int(round(math.log2(key.shape[0])))
    n = int(round(math.log2(psi.shape[0])))
    if 2**m != key.shape[0] or 2**n != psi.shape[0] or m + n != xGp.num_qubits:
        raise WidthError(f"key ({key.shape[0]}) and input ({psi.shape[0]}) do not fill a "
                         f"{xGp.num_qubits}-qubit program")
    return split_product(sim.apply(xGp, np.kron(key, psi)), m, n, tol)


def run(xGp: GateSequence, key: KeyState | np.ndarray, psi: np.ndarray, tol: float = PRODUCT_PURITY_TOL) -> RunResult:
    """Apply ``G'`` to ``key (x) psi``; wrong keys show up as ``entangled``."""
    state = key.state if isinstance(key, KeyState) else key
    return _run(xGp, state, psi, tol)


def recycle(xGp: GateSequence, used_key: np.ndarray, psi: np.ndarray, tol: float = PRODUCT_PURITY_TOL) -> RunResult:
    """Run the reversed program: regains ``|phi_i>`` and applies ``U_i^dag``."""
    return _run(adjoint(xGp), used_key, psi, tol)


def mixed_key_output(xGp: GateSequence, m: int, psi: np.ndarray) -> np.ndarray:
    """Input-register state when the key is maximally mixed (average of basis keys)."""
    n = xGp.num_qubits - m
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for b in range(2**m):
        out = sim.apply(xGp, np.kron(sim.basis_state(b, m), psi))
        rho += sim.reduced_from_pure(out, range(m, m + n), m + n)
    return rho / 2**m
