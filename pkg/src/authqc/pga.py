"""Programmable gate array: one unitary dispatching a family of programs.

Register layout of the built sequence on ``m + n`` qubits::

    [0, k)      index register  |i>
    [k, m)      dummy register  (scrambled by M1 then M2)
    [m, m + n)  input register  (receives U_i)
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit import GateSequence, embed, parse, remap, serialize
from .simulator import apply
from .controlled import controlled_gate, zero_controls
from .errors import BudgetError, ParseError, WidthError
from .keying import sample_random_sequence
from .seeds import derive_rng

log = logging.getLogger(__name__)

DEFAULT_GATE_BUDGET = 100_000


def controlled_on_value(seq: GateSequence, k: int, value: int) -> GateSequence:
    """Run ``seq`` only when a fresh k-qubit control register holds ``|value>``.

    The result acts on ``k + seq.num_qubits`` qubits; the controls are qubits
    ``0..k-1`` (qubit 0 is the most significant bit of ``value``) and ``seq``
    is shifted up by ``k``.
    """
    if k < 1:
        raise WidthError("control register needs at least one qubit")
    if not 0 <= value < 2**k:
        raise ValueError(f"value {value} out of range for a {k}-qubit register")
    width = k + seq.num_qubits
    controls = list(range(k))
    flips = zero_controls(controls, value)
    body = []
    for gate in embed(seq, k, width).gates:
        body.extend(controlled_gate(gate, controls))
    return GateSequence(tuple(flips + body + flips), width)


@dataclass(frozen=True)
class ProgramSpec:
    """The programmer's secret bundle for one program family."""

    programs: tuple[GateSequence, ...]
    k: int
    m: int
    n: int
    m1: GateSequence | None = None
    m2: GateSequence | None = None
    rng_seed: int = 0
    gate_budget: int = DEFAULT_GATE_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "programs", tuple(self.programs))
        if self.k < 1:
            raise WidthError("k must be at least 1")
        if self.m < self.k:
            raise WidthError(f"key register m={self.m} narrower than index register k={self.k}")
        if len(self.programs) != 2**self.k:
            raise WidthError(f"expected {2**self.k} programs for k={self.k}, got {len(self.programs)}")
        for i, prog in enumerate(self.programs):
            if prog.num_qubits != self.n:
                raise WidthError(f"program {i} acts on {prog.num_qubits} qubits, expected n={self.n}")
        dummies = self.m - self.k
        for name in ("m1", "m2"):
            seq = getattr(self, name)
            if dummies == 0 and seq is not None and len(seq):
                raise WidthError(f"{name} must be empty when m == k")
            if dummies and seq is not None and seq.num_qubits != dummies:
                raise WidthError(f"{name} acts on {seq.num_qubits} qubits, dummy register has {dummies}")
        if self.k > max(1, math.ceil(math.log2(self.n + 1))) + 1:
            log.warning("k=%d is large relative to log2(n) for n=%d; gate count grows as 2^k", self.k, self.n)

    @property
    def width(self) -> int:
        return self.m + self.n

    @classmethod
    def with_random_dummies(cls, programs, k: int, m: int, rng_seed: int = 0, dummy_length: int | None = None,
                            **kwargs) -> ProgramSpec:
        """Build a spec whose M1, M2 are random sequences derived from ``rng_seed``."""
        programs = tuple(programs)
        n = programs[0].num_qubits
        dummies = m - k
        m1 = m2 = None
        if dummies:
            length = 8 * dummies if dummy_length is None else dummy_length
            m1 = sample_random_sequence(range(dummies), length, derive_rng(rng_seed, "M1"))
            m2 = sample_random_sequence(range(dummies), length, derive_rng(rng_seed, "M2"))
        return cls(programs, k, m, n, m1, m2, rng_seed, **kwargs)


def build_pga(spec: ProgramSpec) -> GateSequence:
    """``M1`` on the dummies, every value-controlled ``U_i``, then ``M2``."""
    width = spec.width
    gates = []
    if spec.m1 is not None:
        gates.extend(embed(spec.m1, spec.k, width).gates)
    # controlled_on_value puts controls at 0..k-1 and the program at k..k+n-1.
    placement = list(range(spec.k)) + list(range(spec.m, width))
    for i, prog in enumerate(spec.programs):
        block = controlled_on_value(prog, spec.k, i)
        gates.extend(remap(block, placement, width).gates)
        if len(gates) > spec.gate_budget:
            raise BudgetError(f"programmable array exceeds the gate budget of {spec.gate_budget}")
    if spec.m2 is not None:
        gates.extend(embed(spec.m2, spec.k, width).gates)
    if len(gates) > spec.gate_budget:
        raise BudgetError(f"programmable array exceeds the gate budget of {spec.gate_budget}")
    return GateSequence(tuple(gates), width)


def dummy_unitary_state(spec: ProgramSpec, dummy: np.ndarray) -> np.ndarray:
    """``M2 M1 |d>`` on the dummy register."""
    for seq in (spec.m1, spec.m2):
        if seq is not None:
            dummy = apply(seq, dummy)
    return dummy


# -- manifest files -------------------------------------------------------

def save_manifest(spec: ProgramSpec, path: str | Path) -> None:
    """Write a JSON manifest plus one ``.seq`` file per program next to it."""
    path = Path(path)
    stem = path.with_suffix("")
    entry = {"k": spec.k, "m": spec.m, "n": spec.n, "rng_seed": spec.rng_seed,
             "gate_budget": spec.gate_budget, "programs": []}
    for i, prog in enumerate(spec.programs):
        p = Path(f"{stem}.u{i}.seq")
        p.write_text(serialize(prog))
        entry["programs"].append(p.name)
    for name in ("m1", "m2"):
        seq = getattr(spec, name)
        if seq is not None:
            p = Path(f"{stem}.{name}.seq")
            p.write_text(serialize(seq))
            entry[name] = p.name
    path.write_text(json.dumps(entry, indent=2) + "\n")


def load_manifest(path: str | Path) -> ProgramSpec:
    """Read a manifest; M1/M2 missing while m > k are sampled from the seed."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        names = list(data["programs"])
        k, m = int(data["k"]), int(data["m"])
        seed = int(data.get("rng_seed", 0))
        extra = {"gate_budget": int(data.get("gate_budget", DEFAULT_GATE_BUDGET))}
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", exc.lineno) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad or missing manifest field {exc}") from None
    base = path.parent
    programs = [parse((base / p).read_text()) for p in names]
    if m > k and not ("m1" in data and "m2" in data):
        return ProgramSpec.with_random_dummies(programs, k, m, seed, dummy_length=data.get("dummy_length"), **extra)
    m1 = parse((base / data["m1"]).read_text()) if "m1" in data else None
    m2 = parse((base / data["m2"]).read_text()) if "m2" in data else None
    return ProgramSpec(tuple(programs), k, m, programs[0].num_qubits, m1, m2, seed, **extra)
