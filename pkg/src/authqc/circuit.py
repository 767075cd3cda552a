"""Elementary gates, gate sequences and their text format.

A :class:`GateSequence` is the classical description of a unitary: an ordered
tuple of gates, executed first-to-last, on ``num_qubits`` indexed qubits.
Qubit 0 is the most significant bit of a basis-state index.

Text format (UTF-8, ``#`` starts a comment)::

    qubits 2
    H 0
    CNOT 0 1
    RZ 0.78539816339744828 1
    GPHASE 1.234
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ParseError, WidthError

FOUR_PI = 4 * math.pi
ANGLE_FOLD = 1e-10

# kind -> (number of targets, takes an angle)
GATE_ARITY: dict[str, tuple[int, bool]] = {
    "H": (1, False),
    "X": (1, False),
    "RZ": (1, True),
    "RY": (1, True),
    "CNOT": (2, False),
    "GPHASE": (0, True),
}
ROTATIONS = frozenset({"RZ", "RY", "GPHASE"})
SELF_INVERSE = frozenset({"H", "X", "CNOT"})


def canonical_angle(theta: float) -> float:
    """Reduce ``theta`` into [0, 4pi), folding float noise near 0 and 4pi, rounded to 1e-12."""
    t = math.fmod(theta, FOUR_PI)
    if t < 0:
        t += FOUR_PI
    if t < ANGLE_FOLD or t > FOUR_PI - ANGLE_FOLD:
        return 0.0
    return round(t, 12)


@dataclass(frozen=True, slots=True)
class Gate:
    kind: str
    targets: tuple[int, ...] = ()
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity, has_angle = GATE_ARITY[self.kind]
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} target(s), got {len(self.targets)}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError("CNOT control and target must differ")
        if any(t < 0 for t in self.targets):
            raise ValueError("negative qubit index")
        if has_angle and self.theta is None:
            raise ValueError(f"{self.kind} requires an angle")
        if not has_angle and self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def inverse(self) -> Gate:
        if self.kind in SELF_INVERSE:
            return self
        return Gate(self.kind, self.targets, -self.theta)

    def remap(self, mapping: Mapping[int, int] | Sequence[int]) -> Gate:
        return Gate(self.kind, tuple(mapping[t] for t in self.targets), self.theta)

    def to_text(self, canonical: bool = False) -> str:
        parts = [self.kind]
        if self.theta is not None:
            theta = canonical_angle(self.theta) if canonical else self.theta
            parts.append(format(theta, ".17g"))
        parts.extend(str(t) for t in self.targets)
        return " ".join(parts)


# Short constructors; they keep builders readable.
def H(q: int) -> Gate:
    return Gate("H", (q,))


def X(q: int) -> Gate:
    return Gate("X", (q,))


def RZ(theta: float, q: int) -> Gate:
    return Gate("RZ", (q,), float(theta))


def RY(theta: float, q: int) -> Gate:
    return Gate("RY", (q,), float(theta))


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def GPHASE(theta: float) -> Gate:
    return Gate("GPHASE", (), float(theta))


@dataclass(frozen=True)
class GateSequence:
    gates: tuple[Gate, ...]
    num_qubits: int

    def __post_init__(self):
        if not isinstance(self.gates, tuple):
            object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise WidthError("num_qubits must be positive")
        for g in self.gates:
            for t in g.targets:
                if t >= self.num_qubits:
                    raise WidthError(f"{g.to_text()}: target {t} out of range for {self.num_qubits} qubit(s)")

    @classmethod
    def empty(cls, num_qubits: int) -> GateSequence:
        return cls((), num_qubits)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __add__(self, other: GateSequence) -> GateSequence:
        return concat(self, other)

    def support(self) -> set[int]:
        return {t for g in self.gates for t in g.targets}

    def to_text(self, canonical: bool = False) -> str:
        return serialize(self, canonical=canonical)


def serialize(seq: GateSequence, canonical: bool = False) -> str:
    lines = [f"qubits {seq.num_qubits}"]
    lines.extend(g.to_text(canonical) for g in seq.gates)
    return "\n".join(lines) + "\n"


def digest(seq: GateSequence) -> str:
    """Hex digest of the canonical text; equal for equal gate lists."""
    return hashlib.sha256(serialize(seq, canonical=True).encode()).hexdigest()[:32]


def parse(text: str) -> GateSequence:
    num_qubits = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if num_qubits is None:
            if fields[0].lower() != "qubits" or len(fields) != 2:
                raise ParseError("expected header 'qubits <n>'", lineno)
            try:
                num_qubits = int(fields[1])
            except ValueError:
                raise ParseError(f"bad qubit count {fields[1]!r}", lineno) from None
            if num_qubits < 1:
                raise ParseError("qubit count must be positive", lineno)
            continue
        kind = fields[0].upper()
        if kind not in GATE_ARITY:
            raise ParseError(f"unknown gate {fields[0]!r}", lineno)
        arity, has_angle = GATE_ARITY[kind]
        args = fields[1:]
        theta = None
        if has_angle:
            if len(args) != arity + 1:
                raise ParseError(f"{kind} expects an angle and {arity} target(s)", lineno)
            try:
                theta = float(args[0])
            except ValueError:
                raise ParseError(f"missing or bad angle {args[0]!r}", lineno) from None
            args = args[1:]
        elif len(args) != arity:
            raise ParseError(f"{kind} expects {arity} target(s)", lineno)
        try:
            targets = tuple(int(a) for a in args)
        except ValueError:
            raise ParseError(f"bad qubit index in {line!r}", lineno) from None
        for t in targets:
            if not 0 <= t < num_qubits:
                raise ParseError(f"target {t} out of range for {num_qubits} qubit(s)", lineno)
        try:
            gates.append(Gate(kind, targets, theta))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if num_qubits is None:
        raise ParseError("missing 'qubits <n>' header")
    return GateSequence(tuple(gates), num_qubits)


def adjoint(seq: GateSequence) -> GateSequence:
    return GateSequence(tuple(g.inverse() for g in reversed(seq.gates)), seq.num_qubits)


def concat(a: GateSequence, b: GateSequence) -> GateSequence:
    """``a`` runs first; the matrix is ``matrix(b) @ matrix(a)``."""
    if a.num_qubits != b.num_qubits:
        raise WidthError(f"cannot concatenate {a.num_qubits}- and {b.num_qubits}-qubit sequences")
    return GateSequence(a.gates + b.gates, a.num_qubits)


def remap(seq: GateSequence, mapping: Mapping[int, int] | Sequence[int], num_qubits: int) -> GateSequence:
    """Relabel qubit ``q`` as ``mapping[q]`` inside a ``num_qubits`` register."""
    return GateSequence(tuple(g.remap(mapping) for g in seq.gates), num_qubits)


def embed(seq: GateSequence, offset: int, num_qubits: int) -> GateSequence:
    """Place ``seq`` on qubits ``offset .. offset+seq.num_qubits-1``."""
    if offset < 0 or offset + seq.num_qubits > num_qubits:
        raise WidthError(f"{seq.num_qubits}-qubit sequence does not fit at offset {offset} of {num_qubits}")
    return remap(seq, range(offset, offset + seq.num_qubits), num_qubits)


def sequence(gates: Iterable[Gate], num_qubits: int) -> GateSequence:
    return GateSequence(tuple(gates), num_qubits)
