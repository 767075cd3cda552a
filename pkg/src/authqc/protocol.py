"""Party roles: programmer, authenticator, user and eavesdropper.

The authenticator is a keyed-hash (HMAC-SHA256) stand-in for a classical
signature scheme; key delivery is an in-memory or file hand-off.
"""
from __future__ import annotations

import hashlib
import hmac
import logging
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import simulator as sim
from .circuit import GateSequence, parse, serialize
from .errors import AuthenticityError, BudgetError, ParseError, WidthError
from .keying import KeySecrets, KeyState, RunResult, encode, issue_key, run
from .pga import ProgramSpec, build_pga
from .shuffler import ShuffleConfig, shuffle

log = logging.getLogger(__name__)

PUBLIC_HEADER = "# authqc public-program v1"
_BODY_MARK = "[sequence]"


class Authenticator:
    """Trusted third party holding the signing key."""

    def __init__(self, key: bytes | str | None):
        if not key:
            raise AuthenticityError("no authenticator key configured")
        self._key = key.encode() if isinstance(key, str) else bytes(key)

    def sign(self, data: bytes) -> str:
        return hmac.new(self._key, data, hashlib.sha256).hexdigest()

    def verify(self, data: bytes, signature: str) -> bool:
        return hmac.compare_digest(self.sign(data), signature)


@dataclass(frozen=True)
class PublicProgram:
    program_id: str
    sequence: GateSequence
    m: int
    n: int
    k: int
    signature: str = ""
    metadata: dict = field(default_factory=dict)

    def signed_bytes(self) -> bytes:
        head = [f"program_id {self.program_id}", f"widths {self.m} {self.n} {self.k}"]
        head += [f"meta {k} {v}" for k, v in sorted(self.metadata.items())]
        return ("\n".join(head) + "\n" + serialize(self.sequence)).encode()

    def to_text(self) -> str:
        lines = [PUBLIC_HEADER, f"program_id {self.program_id}", f"widths {self.m} {self.n} {self.k}"]
        lines += [f"meta {k} {v}" for k, v in sorted(self.metadata.items())]
        lines += [f"signature {self.signature}", _BODY_MARK]
        return "\n".join(lines) + "\n" + serialize(self.sequence)

    @classmethod
    def from_text(cls, text: str) -> PublicProgram:
        if not text.startswith(PUBLIC_HEADER):
            raise ParseError("not a public-program file", 1)
        try:
            head, body = text.split(_BODY_MARK + "\n", 1)
        except ValueError:
            raise ParseError(f"missing {_BODY_MARK} section") from None
        fields: dict = {"metadata": {}}
        for lineno, line in enumerate(head.splitlines(), start=1):
            parts = line.split()
            if not parts or line.startswith("#"):
                continue
            try:
                if parts[0] == "program_id":
                    fields["program_id"] = parts[1]
                elif parts[0] == "widths":
                    fields["m"], fields["n"], fields["k"] = (int(p) for p in parts[1:4])
                elif parts[0] == "meta":
                    fields["metadata"][parts[1]] = " ".join(parts[2:])
                elif parts[0] == "signature":
                    fields["signature"] = parts[1] if len(parts) > 1 else ""
                else:
                    raise ParseError(f"unknown header field {parts[0]!r}", lineno)
            except (IndexError, ValueError):
                raise ParseError(f"bad header line {line!r}", lineno) from None
        missing = {"program_id", "m", "signature"} - fields.keys()
        if missing:
            raise ParseError(f"public program lacks {sorted(missing)}")
        return cls(sequence=parse(body), **fields)


class KeyLedger:
    """Records which users hold a key for which program: one key per user.

    Mutations take a lock, so concurrent issuers are serialised.
    """

    def __init__(self):
        self._issued: dict[str, dict[str, int]] = {}
        self._lock = threading.Lock()

    def record(self, program_id: str, user_id: str, index: int) -> None:
        with self._lock:
            users = self._issued.setdefault(program_id, {})
            if user_id in users:
                raise ValueError(f"user {user_id!r} already holds a key for {program_id!r}")
            users[user_id] = index

    def holders(self, program_id: str) -> list[str]:
        return list(self._issued.get(program_id, {}))

    def issued(self, program_id: str, user_id: str) -> bool:
        return user_id in self._issued.get(program_id, {})


def _seed_digest(seed: int) -> str:
    return hashlib.sha256(f"seed:{seed}".encode()).hexdigest()[:16]


def programmer_publish(spec: ProgramSpec, shuffle_cfg: ShuffleConfig, authenticator: Authenticator,
                       program_id: str = "prog", secrets: KeySecrets | None = None,
                       ) -> tuple[PublicProgram, KeySecrets]:
    """Build, encode, shuffle and have the authenticator sign a program family."""
    xG = build_pga(spec)
    if secrets is None:
        secrets = KeySecrets.random(spec.m, spec.rng_seed)
    shuffled = shuffle(encode(xG, secrets), shuffle_cfg)
    meta = {"seed_digest": _seed_digest(spec.rng_seed), "shuffle_seed_digest": _seed_digest(shuffle_cfg.seed),
            "steps": str(shuffle_cfg.steps)}
    unsigned = PublicProgram(program_id, shuffled, spec.m, spec.n, spec.k, "", meta)
    signature = authenticator.sign(unsigned.signed_bytes())
    return PublicProgram(program_id, shuffled, spec.m, spec.n, spec.k, signature, meta), secrets


def issue_to_user(ledger: KeyLedger, pub: PublicProgram, secrets: KeySecrets, user_id: str, index: int) -> KeyState:
    """Programmer side: record the issuance, then hand over the user's copy."""
    ledger.record(pub.program_id, user_id, index)
    return issue_key(index, secrets, pub.m, pub.k, pub.program_id).user_copy()


def verify_public(pub: PublicProgram, authenticator: Authenticator) -> None:
    if not authenticator.verify(pub.signed_bytes(), pub.signature):
        raise AuthenticityError(f"signature check failed for program {pub.program_id!r}")


def user_execute(pub: PublicProgram, key: KeyState, psi: np.ndarray, authenticator: Authenticator) -> RunResult:
    """Refuse unauthenticated programs, then run the public sequence on ``key (x) psi``."""
    verify_public(pub, authenticator)
    if key.num_qubits != pub.m:
        raise WidthError(f"key has {key.num_qubits} qubits, program expects m={pub.m}")
    return run(pub.sequence, key, psi)


# -- eavesdropper baselines -------------------------------------------------

@dataclass
class AttackReport:
    m: int
    target_index: int
    guess_trials: int = 0
    guess_successes: int = 0
    guess_mean_probability: float = 0.0
    candidates_tested: int = 0
    candidates_working: list = field(default_factory=list)  # (basis index, program index)
    search_seconds: float = 0.0
    replay: list = field(default_factory=list)  # (stolen index, fidelity, oracle fidelity)
    partial: bool = False
    probe: np.ndarray | None = None  # the input state used for replay and guessing

    @property
    def guess_rate(self) -> float:
        return self.guess_successes / self.guess_trials if self.guess_trials else 0.0

    def to_text(self) -> str:
        lines = [
            f"m {self.m}",
            f"target_index {self.target_index}",
            f"guess_trials {self.guess_trials}",
            f"guess_successes {self.guess_successes}",
            f"guess_rate {self.guess_rate:.6g}",
            f"guess_mean_probability {self.guess_mean_probability:.6g}",
            f"guess_expected {2.0 ** -self.m:.6g}",
            f"candidates_tested {self.candidates_tested}",
            f"candidates_working {len(self.candidates_working)}",
            f"search_seconds {self.search_seconds:.6f}",
        ]
        for b, i in self.candidates_working:
            lines.append(f"working_key basis={b} index={i}")
        for j, f, o in self.replay:
            lines.append(f"replay stolen_index={j} fidelity={f:.12f} oracle={o:.12f}")
        lines.append(f"partial {str(self.partial).lower()}")
        return "\n".join(lines) + "\n"


def _key_works(F: GateSequence, key: np.ndarray, program: GateSequence, tol: float) -> bool:
    from .reduction import validate_forged_key

    return validate_forged_key(F, [key], [program], tol)


def eavesdropper_report(pub: PublicProgram, stolen: Sequence[KeyState], budget: int, *,
                        programs: Sequence[GateSequence], target_index: int,
                        victim_key: KeyState | None = None, guess_trials: int = 0,
                        exhaustive: bool = True, rng: np.random.Generator | None = None,
                        tol: float = 1e-9) -> AttackReport:
    """Run the black-box baselines against ``pub`` and judge them with reference programs.

    ``programs`` and ``victim_key`` are judge-side knowledge used only to score
    attacks.  ``budget`` caps the number of simulated program runs; running out
    stops early and flags the report as partial.
    """
    rng = rng or np.random.default_rng(0)
    m, n = pub.m, pub.n
    report = AttackReport(m, target_index)
    spent = 0

    def spend(cost: int) -> bool:
        nonlocal spent
        if spent + cost > budget:
            report.partial = True
            return False
        spent += cost
        return True

    # (c) replay stolen keys: the key performs U_j, not U_target.
    phi = sim.random_state(n, rng)
    report.probe = phi
    target = sim.apply(programs[target_index], phi)
    for key in stolen:
        if key.num_qubits != m or (key.program_id is not None and key.program_id != pub.program_id):
            raise WidthError("stolen key does not belong to this program")
        if not spend(1):
            break
        res = run(pub.sequence, key, phi)
        out = res.output if not res.entangled else None
        fid = sim.fidelity(out, target) if out is not None else float("nan")
        oracle = float("nan")
        if key.issued_index is not None:
            oracle = sim.fidelity(sim.apply(programs[key.issued_index], phi), target)
        report.replay.append((key.issued_index, fid, oracle))

    # (a) random computational-basis guesses, scored by the projection onto the honest output.
    if guess_trials and victim_key is not None and not report.partial:
        honest = sim.apply(pub.sequence, np.kron(victim_key.state, phi))
        # <honest|G'(b (x) phi)> = <phi_i|b>: one simulation per basis key is enough.
        probs = np.empty(2**m)
        if spend(2**m):
            for b in range(2**m):
                out = sim.apply(pub.sequence, np.kron(sim.basis_state(b, m), phi))
                probs[b] = abs(np.vdot(honest, out)) ** 2
            guesses = rng.integers(2**m, size=guess_trials)
            p = probs[guesses]
            report.guess_trials = guess_trials
            report.guess_successes = int((rng.random(guess_trials) < p).sum())
            report.guess_mean_probability = float(p.mean())

    # (b) exhaustive search over computational-basis keys.
    if exhaustive and not report.partial:
        if m > 4:
            log.warning("exhaustive basis search at m=%d is outside the desk-scale range", m)
        start = time.perf_counter()
        for b in range(2**m):
            if not spend(len(programs)):
                break
            report.candidates_tested += 1
            key = sim.basis_state(b, m)
            for i, prog in enumerate(programs):
                if _key_works(pub.sequence, key, prog, tol):
                    report.candidates_working.append((b, i))
        report.search_seconds = time.perf_counter() - start
    return report


def require_budget(report: AttackReport) -> AttackReport:
    if report.partial:
        raise BudgetError("attack budget exhausted before all baselines finished")
    return report


def save_public(pub: PublicProgram, path: str | Path) -> None:
    Path(path).write_text(pub.to_text())


def load_public(path: str | Path) -> PublicProgram:
    return PublicProgram.from_text(Path(path).read_text())


def expected_guess_sigma(m: int, trials: int) -> float:
    p = 2.0**-m
    return math.sqrt(p * (1 - p) / trials)
