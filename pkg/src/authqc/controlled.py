"""Exact multi-controlled versions of the elementary gates.

Everything decomposes back into {H, X, RZ, RY, CNOT, GPHASE} without
ancillas and without approximation:

* controlled rotations use the two-CNOT ABC form, and with more controls the
  square-root recursion ``C^k R(t) = C R(t/2) . C^{k-1}X . C R(-t/2) . C^{k-1}X . C^{k-1} R(t/2)``;
* controlled global phases become phase gates on the controls;
* ``H = RY(pi/4) Z RY(-pi/4)``, so a controlled H is a controlled Z between
  two uncontrolled rotations;
* the doubly-controlled X is the standard 6-CNOT network with RZ(+-pi/4),
  corrected by GPHASE(pi/8).
"""
from __future__ import annotations

import math
from typing import Sequence

from .circuit import CNOT, GPHASE, RY, RZ, Gate, H, X

QUARTER = math.pi / 4


def controlled_gate(gate: Gate, controls: Sequence[int]) -> list[Gate]:
    """Gates realising ``gate`` conditioned on every qubit in ``controls`` being 1."""
    controls = list(controls)
    if not controls:
        return [gate]
    if set(controls) & set(gate.targets) or len(set(controls)) != len(controls):
        raise ValueError("controls must be distinct and disjoint from the gate's targets")
    kind = gate.kind
    if kind == "GPHASE":
        return controlled_phase(gate.theta, controls)
    if kind == "X":
        return multi_x(controls, gate.targets[0])
    if kind == "CNOT":
        c, t = gate.targets
        return multi_x(controls + [c], t)
    if kind in ("RZ", "RY"):
        return controlled_rotation(kind, gate.theta, controls, gate.targets[0])
    if kind == "H":
        (t,) = gate.targets
        return [RY(-QUARTER, t), *multi_z(controls, t), RY(QUARTER, t)]
    raise ValueError(kind)


def controlled_phase(theta: float, controls: Sequence[int]) -> list[Gate]:
    """Multiply the all-ones control subspace by ``exp(i theta)``."""
    *rest, last = controls
    if not rest:
        return [RZ(theta, last), GPHASE(theta / 2)]
    return controlled_rotation("RZ", theta, rest, last) + controlled_phase(theta / 2, rest)


def multi_z(controls: Sequence[int], target: int) -> list[Gate]:
    if len(controls) == 1:
        # H.CNOT.H keeps a controlled-H self-cancelling under local rewrites.
        return [H(target), CNOT(controls[0], target), H(target)]
    return controlled_phase(math.pi, [*controls, target])


def multi_x(controls: Sequence[int], target: int) -> list[Gate]:
    if len(controls) == 1:
        return [CNOT(controls[0], target)]
    if len(controls) == 2:
        return toffoli(controls[0], controls[1], target)
    return [H(target), *multi_z(controls, target), H(target)]


def toffoli(a: int, b: int, t: int) -> list[Gate]:
    T, Tdg = QUARTER, -QUARTER
    return [
        H(t), CNOT(b, t), RZ(Tdg, t), CNOT(a, t), RZ(T, t), CNOT(b, t), RZ(Tdg, t), CNOT(a, t),
        RZ(T, b), RZ(T, t), H(t), CNOT(a, b), RZ(T, a), RZ(Tdg, b), CNOT(a, b),
        GPHASE(math.pi / 8),
    ]


def controlled_rotation(kind: str, theta: float, controls: Sequence[int], target: int) -> list[Gate]:
    rot = RZ if kind == "RZ" else RY
    *rest, last = controls
    if not rest:
        return [rot(theta / 2, target), CNOT(last, target), rot(-theta / 2, target), CNOT(last, target)]
    return [
        *controlled_rotation(kind, theta / 2, [last], target),
        *multi_x(rest, last),
        *controlled_rotation(kind, -theta / 2, [last], target),
        *multi_x(rest, last),
        *controlled_rotation(kind, theta / 2, rest, target),
    ]


def zero_controls(controls: Sequence[int], value: int) -> list[Gate]:
    """X gates flipping the controls whose bit of ``value`` is 0 (first control = MSB)."""
    k = len(controls)
    return [X(q) for j, q in enumerate(controls) if not (value >> (k - 1 - j)) & 1]
