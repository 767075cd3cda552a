"""Randomised, semantics-preserving gate-sequence rewriting.

``shuffle`` performs a seeded random walk over local rewrites.  Every rule
replaces a window of adjacent gates by a window with the same matrix up to
global phase, so the output always implements the input unitary.

``estimate_overlap`` measures the Jaccard ratio between the observed supports
of two shuffle distributions, which is how the sufficient-randomness
condition is checked empirically.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .circuit import CNOT, FOUR_PI, GPHASE, RY, RZ, Gate, GateSequence, H, X, canonical_angle, digest
from .errors import ShuffleError, WidthError
from .seeds import derive_rng

TWO_PI = 2 * math.pi
ANGLE_EPS = 1e-10

# Shrinking rules carry most of the weight and the idle option damps growth;
# otherwise the walk drifts to the length cap and two shuffle distributions
# essentially never meet.
DEFAULT_WEIGHTS: dict[str, float] = {
    "delete-inverse-pair": 8.0,
    "drop-trivial": 8.0,
    "merge-rotation": 4.0,
    "split-rotation": 0.1,
    "swap-disjoint": 1.0,
    "move-gphase": 1.0,
    "commute-rz-cnot-control": 1.0,
    "commute-x-cnot-target": 1.0,
    "commute-cnot-pair": 1.0,
    "insert-inverse-pair": 0.1,
    "insert-hh": 0.1,
    "insert-cnot-pair": 0.1,
}


@dataclass(frozen=True)
class ShuffleConfig:
    steps: int = 200
    q: int | None = None  # length cap; None means max(2 * len(seq), len(seq) + 16)
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    seed: int = 0
    angle_grid: float = math.pi / 4
    idle_weight: float = 4.0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        unknown = set(self.weights) - set(RULES)
        if unknown:
            raise ValueError(f"unknown rewrite rules: {sorted(unknown)}")

    def cap(self, length: int) -> int:
        return self.q if self.q is not None else max(2 * length, length + 16)


# -- gate predicates --------------------------------------------------------

def _period(kind: str) -> float:
    return TWO_PI if kind == "GPHASE" else FOUR_PI


def is_trivial(g: Gate) -> bool:
    """Rotation by a multiple of its matrix period (identity, phase included)."""
    if g.theta is None:
        return False
    r = math.fmod(g.theta, _period(g.kind))
    return abs(r) < ANGLE_EPS or abs(abs(r) - _period(g.kind)) < ANGLE_EPS


def is_inverse_pair(a: Gate, b: Gate) -> bool:
    if a.kind != b.kind or a.targets != b.targets:
        return False
    if a.theta is None:
        return True
    return is_trivial(Gate(a.kind, a.targets, a.theta + b.theta))


def _grid_angle(rng: np.random.Generator | None, cfg: ShuffleConfig) -> float:
    steps = max(1, int(round(FOUR_PI / cfg.angle_grid)))
    j = 1 if rng is None else int(rng.integers(1, steps))
    return canonical_angle(j * cfg.angle_grid)


# -- rules ------------------------------------------------------------------
# matcher(a, b, n) -> bool, where a = gates[pos] and b = gates[pos + 1] (None past the end)
# replacer(gates, pos, n, rng, cfg) -> (stop, replacement) meaning gates[pos:stop] -> replacement

@dataclass(frozen=True)
class RewriteRule:
    name: str
    matcher: Callable[[Gate | None, Gate | None, int], bool]
    replacer: Callable
    growth: int = 0  # net length change
    inserts: bool = False  # may fire at the end of the sequence


def _m_delete(a, b, n):
    return b is not None and is_inverse_pair(a, b)


def _r_delete(gates, pos, n, rng, cfg):
    return pos + 2, []


def _m_trivial(a, b, n):
    return a is not None and is_trivial(a)


def _r_trivial(gates, pos, n, rng, cfg):
    return pos + 1, []


def _m_merge(a, b, n):
    return b is not None and a.theta is not None and a.kind == b.kind and a.targets == b.targets


def _r_merge(gates, pos, n, rng, cfg):
    a, b = gates[pos], gates[pos + 1]
    return pos + 2, [Gate(a.kind, a.targets, canonical_angle(a.theta + b.theta))]


def _m_split(a, b, n):
    return a is not None and a.theta is not None


def _r_split(gates, pos, n, rng, cfg):
    g = gates[pos]
    part = _grid_angle(rng, cfg)
    return pos + 1, [Gate(g.kind, g.targets, part), Gate(g.kind, g.targets, canonical_angle(g.theta - part))]


def _swap(gates, pos, n, rng, cfg):
    return pos + 2, [gates[pos + 1], gates[pos]]


def _m_swap_disjoint(a, b, n):
    return (b is not None and a.kind != "GPHASE" and b.kind != "GPHASE"
            and not set(a.targets).intersection(b.targets))


def _m_gphase(a, b, n):
    return b is not None and (a.kind == "GPHASE") != (b.kind == "GPHASE")


def _m_rz_cnot(a, b, n):
    if b is None:
        return False
    if a.kind == "RZ" and b.kind == "CNOT":
        return a.targets[0] == b.targets[0]
    if b.kind == "RZ" and a.kind == "CNOT":
        return b.targets[0] == a.targets[0]
    return False


def _m_x_cnot(a, b, n):
    if b is None:
        return False
    if a.kind == "X" and b.kind == "CNOT":
        return a.targets[0] == b.targets[1]
    if b.kind == "X" and a.kind == "CNOT":
        return b.targets[0] == a.targets[1]
    return False


def _m_cnot_pair(a, b, n):
    # CNOTs commute when they share only a control or only a target.
    if b is None or a.kind != "CNOT" or b.kind != "CNOT" or a.targets == b.targets:
        return False
    (ca, ta), (cb, tb) = a.targets, b.targets
    return ca != tb and cb != ta and (ca == cb or ta == tb)


def _always(a, b, n):
    return True


def _two_qubits(a, b, n):
    return n >= 2


def _qubit(gates, pos, n, rng):
    if rng is not None:
        return int(rng.integers(n))
    if pos < len(gates) and gates[pos].targets:
        return gates[pos].targets[0]
    return 0


def _random_gate(gates, pos, n, rng, cfg) -> Gate:
    kinds = ["H", "X", "RZ", "RY", "GPHASE"] + (["CNOT"] if n >= 2 else [])
    kind = kinds[int(rng.integers(len(kinds)))] if rng is not None else "H"
    if kind == "CNOT":
        c, t = (int(x) for x in rng.choice(n, size=2, replace=False))
        return CNOT(c, t)
    if kind == "GPHASE":
        return GPHASE(_grid_angle(rng, cfg))
    q = _qubit(gates, pos, n, rng)
    if kind in ("RZ", "RY"):
        return (RZ if kind == "RZ" else RY)(_grid_angle(rng, cfg), q)
    return H(q) if kind == "H" else X(q)


def _r_insert_pair(gates, pos, n, rng, cfg):
    g = _random_gate(gates, pos, n, rng, cfg)
    inv = g.inverse()
    if inv.theta is not None:
        inv = Gate(inv.kind, inv.targets, canonical_angle(inv.theta))
    return pos, [g, inv]


def _r_insert_hh(gates, pos, n, rng, cfg):
    q = _qubit(gates, pos, n, rng)
    return pos, [H(q), H(q)]


def _r_insert_cnot(gates, pos, n, rng, cfg):
    if rng is None:
        c, t = 0, 1
    else:
        c, t = (int(x) for x in rng.choice(n, size=2, replace=False))
    return pos, [CNOT(c, t), CNOT(c, t)]


RULES: dict[str, RewriteRule] = {r.name: r for r in [
    RewriteRule("delete-inverse-pair", _m_delete, _r_delete, -2),
    RewriteRule("drop-trivial", _m_trivial, _r_trivial, -1),
    RewriteRule("merge-rotation", _m_merge, _r_merge, -1),
    RewriteRule("split-rotation", _m_split, _r_split, +1),
    RewriteRule("swap-disjoint", _m_swap_disjoint, _swap),
    RewriteRule("move-gphase", _m_gphase, _swap),
    RewriteRule("commute-rz-cnot-control", _m_rz_cnot, _swap),
    RewriteRule("commute-x-cnot-target", _m_x_cnot, _swap),
    RewriteRule("commute-cnot-pair", _m_cnot_pair, _swap),
    RewriteRule("insert-inverse-pair", _always, _r_insert_pair, +2, True),
    RewriteRule("insert-hh", _always, _r_insert_hh, +2, True),
    RewriteRule("insert-cnot-pair", _two_qubits, _r_insert_cnot, +2, True),
]}


def _rule_table(weights: Mapping[str, float]) -> list[tuple[RewriteRule, float]]:
    return [(RULES[name], w) for name, w in weights.items() if w > 0]


def _applicable(gates: list, pos: int, n: int, cap: int, table) -> list[tuple[RewriteRule, float]]:
    size = len(gates)
    if pos >= size:
        return [(r, w) for r, w in table if r.inserts and size + r.growth <= cap and r.matcher(None, None, n)]
    a = gates[pos]
    b = gates[pos + 1] if pos + 1 < size else None
    return [(r, w) for r, w in table if size + r.growth <= cap and r.matcher(a, b, n)]


def applicable_rewrites(seq: GateSequence, position: int, cfg: ShuffleConfig | None = None,
                        rng: np.random.Generator | None = None) -> list[tuple[RewriteRule, GateSequence]]:
    """Every rule firing at ``position`` with the sequence it would produce.

    Insertion and split choices are random when ``rng`` is given and
    otherwise fixed (an H pair on the gate's first qubit, split by one grid step).
    """
    cfg = cfg or ShuffleConfig()
    if not 0 <= position < len(seq):
        raise IndexError(f"position {position} outside a sequence of length {len(seq)}")
    gates = list(seq.gates)
    out = []
    for rule, _ in _applicable(gates, position, seq.num_qubits, cfg.cap(len(seq)), _rule_table(cfg.weights)):
        stop, repl = rule.replacer(gates, position, seq.num_qubits, rng, cfg)
        out.append((rule, GateSequence(tuple(gates[:position] + repl + gates[stop:]), seq.num_qubits)))
    return out


def shuffle(seq: GateSequence, cfg: ShuffleConfig) -> GateSequence:
    """Apply ``cfg.steps`` random local rewrites, deterministic in ``cfg.seed``."""
    cap = cfg.cap(len(seq))
    if len(seq) > cap:
        raise ShuffleError(f"input length {len(seq)} already exceeds the cap q={cap}")
    rng = np.random.default_rng(cfg.seed)
    return _walk(seq, cfg, rng, cap)


def _walk(seq: GateSequence, cfg: ShuffleConfig, rng: np.random.Generator, cap: int) -> GateSequence:
    gates = list(seq.gates)
    n = seq.num_qubits
    table = _rule_table(cfg.weights)
    idle = cfg.idle_weight
    positions = rng.random(cfg.steps)
    picks = rng.random(cfg.steps)
    for step in range(cfg.steps):
        pos = int(positions[step] * (len(gates) + 1))
        options = _applicable(gates, pos, n, cap, table)
        if not options:
            continue
        total = idle
        for _, w in options:
            total += w
        pick = picks[step] * total
        for rule, w in options:
            pick -= w
            if pick < 0:
                stop, repl = rule.replacer(gates, pos, n, rng, cfg)
                gates[pos:stop] = repl
                break
    return GateSequence(tuple(gates), n)


# -- overlap estimation -----------------------------------------------------

@dataclass
class OverlapReport:
    ratio: float
    support_a: Counter
    support_b: Counter
    samples: int
    seed: int
    q: int | None
    steps: int

    @property
    def intersection(self) -> int:
        return len(self.support_a.keys() & self.support_b.keys())

    @property
    def union(self) -> int:
        return len(self.support_a.keys() | self.support_b.keys())

    def merge(self, other: OverlapReport) -> OverlapReport:
        a = self.support_a + other.support_a
        b = self.support_b + other.support_b
        return replace(self, support_a=a, support_b=b, samples=self.samples + other.samples,
                       ratio=_jaccard(a, b))

    def to_text(self) -> str:
        return "\n".join([
            f"ratio {self.ratio:.6f}",
            f"support_a {len(self.support_a)}",
            f"support_b {len(self.support_b)}",
            f"intersection {self.intersection}",
            f"union {self.union}",
            f"samples {self.samples}",
            f"seed {self.seed}",
            f"q {self.q if self.q is not None else 'auto'}",
            f"steps {self.steps}",
        ]) + "\n"


def _jaccard(a: Counter, b: Counter) -> float:
    union = len(a.keys() | b.keys())
    return len(a.keys() & b.keys()) / union if union else 1.0


def shuffle_distribution(seq: GateSequence, samples: int, cfg: ShuffleConfig, start: int = 0) -> Counter:
    """Digest counts of ``samples`` shuffles, sample ``s`` seeded by (cfg.seed, s)."""
    cap = cfg.cap(len(seq))
    if len(seq) > cap:
        raise ShuffleError(f"input length {len(seq)} already exceeds the cap q={cap}")
    counts: Counter = Counter()
    for s in range(start, start + samples):
        counts[digest(_walk(seq, cfg, derive_rng(cfg.seed, "sample", s), cap))] += 1
    return counts


def estimate_overlap(a: GateSequence, b: GateSequence, samples: int, cfg: ShuffleConfig) -> OverlapReport:
    """Jaccard ratio of the observed shuffle supports of ``a`` and ``b``.

    Sample ``s`` of each side uses the same derived seed, so ``a == b``
    yields exactly 1.0.
    """
    if a.num_qubits != b.num_qubits:
        raise WidthError("sequences must act on the same number of qubits")
    if samples < 1:
        raise ValueError("samples must be positive")
    da = shuffle_distribution(a, samples, cfg)
    db = shuffle_distribution(b, samples, cfg)
    return OverlapReport(_jaccard(da, db), da, db, samples, cfg.seed, cfg.q, cfg.steps)
