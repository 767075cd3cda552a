"""Exact dense simulation of gate sequences.

States are plain complex numpy arrays: a statevector has shape ``(2**n,)``,
a density matrix ``(2**n, 2**n)``.  Qubit 0 is the most significant bit.
"""
from __future__ import annotations

import cmath
import math
from typing import Iterable

import numpy as np

from .circuit import Gate, GateSequence
from .errors import WidthError

MAX_STATE_QUBITS = 16
MAX_MATRIX_QUBITS = 10
DEFAULT_TOL = 1e-9

_SQ2 = 1 / math.sqrt(2)
_H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def gate_matrix(gate: Gate) -> np.ndarray:
    """2x2 matrix for single-qubit kinds, 4x4 for CNOT, 1x1 for GPHASE."""
    k, t = gate.kind, gate.theta
    if k == "H":
        return _H
    if k == "X":
        return _X
    if k == "RZ":
        return np.array([[cmath.exp(-0.5j * t), 0], [0, cmath.exp(0.5j * t)]], dtype=complex)
    if k == "RY":
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if k == "CNOT":
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    if k == "GPHASE":
        return np.array([[cmath.exp(1j * t)]])
    raise ValueError(k)


def _apply_gate(psi: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply one gate to ``psi`` of shape (2**n, batch); returns a new array."""
    batch = psi.shape[1]
    if gate.kind == "GPHASE":
        return psi * cmath.exp(1j * gate.theta)
    if gate.kind == "CNOT":
        c, t = gate.targets
        out = psi.reshape((2,) * n + (batch,)).copy()
        idx1 = [slice(None)] * n
        idx0 = [slice(None)] * n
        idx1[c] = idx0[c] = 1
        idx1[t], idx0[t] = 1, 0
        out[tuple(idx0)], out[tuple(idx1)] = out[tuple(idx1)].copy(), out[tuple(idx0)].copy()
        return out.reshape(2**n, batch)
    (q,) = gate.targets
    view = psi.reshape(2**q, 2, 2 ** (n - q - 1) * batch)
    return np.einsum("ab,ibj->iaj", gate_matrix(gate), view).reshape(2**n, batch)


def _evolve(seq: GateSequence, block: np.ndarray) -> np.ndarray:
    n = seq.num_qubits
    for gate in seq.gates:
        block = _apply_gate(block, gate, n)
    return block


def apply(seq: GateSequence, psi: np.ndarray) -> np.ndarray:
    """Return ``U|psi>`` gate by gate, never forming the full matrix."""
    psi = np.asarray(psi, dtype=complex)
    n = seq.num_qubits
    if n > MAX_STATE_QUBITS:
        raise WidthError(f"{n} qubits exceeds the statevector cap of {MAX_STATE_QUBITS}")
    if psi.shape != (2**n,):
        raise WidthError(f"state of length {psi.shape[0]} does not match {n} qubit(s)")
    return _evolve(seq, psi.reshape(-1, 1)).reshape(-1)


def to_matrix(seq: GateSequence) -> np.ndarray:
    n = seq.num_qubits
    if n > MAX_MATRIX_QUBITS:
        raise WidthError(f"{n} qubits exceeds the dense-matrix cap of {MAX_MATRIX_QUBITS}")
    return _evolve(seq, np.eye(2**n, dtype=complex))


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[bool, float | None]:
    """Test ``b ~ exp(i theta) a`` via the normalised trace overlap.

    Returns ``(True, theta)`` when ``|tr(a^dag b)| / d >= 1 - tol``, else
    ``(False, None)``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise WidthError(f"dimension mismatch {a.shape} vs {b.shape}")
    tr = np.vdot(a, b)  # sum conj(a_ij) b_ij == tr(a^dag b)
    if abs(tr) / a.shape[0] >= 1 - tol:
        return True, cmath.phase(tr)
    return False, None


def trace_overlap(a: np.ndarray, b: np.ndarray) -> float:
    return abs(np.vdot(a, b)) / np.asarray(a).shape[0]


def basis_state(index: int, num_qubits: int) -> np.ndarray:
    psi = np.zeros(2**num_qubits, dtype=complex)
    psi[index] = 1
    return psi


def random_state(num_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state."""
    psi = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return psi / np.linalg.norm(psi)


def kron(*states: np.ndarray) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for s in states:
        out = np.kron(out, s)
    return out


def density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` for pure states."""
    return float(abs(np.vdot(a, b)) ** 2)


def state_fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """``<psi|rho|psi>``."""
    return float(np.real(np.vdot(psi, rho @ psi)))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(rho - sigma)).sum())


def partial_trace(rho: np.ndarray, keep: Iterable[int], num_qubits: int | None = None) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep`` (kept in index order)."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    n = num_qubits if num_qubits is not None else int(round(math.log2(dim)))
    if rho.shape != (2**n, 2**n):
        raise WidthError(f"density matrix shape {rho.shape} does not match {n} qubit(s)")
    keep = sorted(set(keep))
    if any(not 0 <= q < n for q in keep):
        raise WidthError(f"keep set {keep} invalid for {n} qubit(s)")
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    # Contract each dropped qubit's row and column axes, highest first so indices stay valid.
    current = n
    for q in sorted(drop, reverse=True):
        t = np.trace(t, axis1=q, axis2=q + current)
        current -= 1
    d = 2 ** len(keep)
    return t.reshape(d, d)


def reduced_from_pure(psi: np.ndarray, keep: Iterable[int], num_qubits: int) -> np.ndarray:
    """Partial trace of ``|psi><psi|`` without forming the full density matrix."""
    keep = sorted(set(keep))
    drop = [q for q in range(num_qubits) if q not in keep]
    t = np.asarray(psi, dtype=complex).reshape((2,) * num_qubits)
    m = np.transpose(t, keep + drop).reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def check_density(rho: np.ndarray, tol: float = 1e-10) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-8:
        raise ValueError("density matrix is not positive semidefinite")
