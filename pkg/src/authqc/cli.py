"""Command-line front end: one subcommand per pipeline stage.

Results go to stdout as ``key value`` lines; errors go to stderr with exit
codes 2 (parse), 3 (width), 4 (authenticity), 5 (budget), 64 (usage).

Randomness: every subcommand draws from ``--seed`` through
:func:`authqc.seeds.derive_rng`, using the labels documented next to each use.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import simulator as sim
from .circuit import GateSequence, H, parse, serialize
from .errors import AqcError
from .keying import (SECRET_MARKER, KeySecrets, KeyState, encode, issue_key, load_state, recycle, run,
                     sample_random_sequence, state_to_text)
from .pga import ProgramSpec, build_pga, load_manifest
from .protocol import (Authenticator, eavesdropper_report, load_public, programmer_publish,
                       verify_public)
from .reduction import (build_modified_instance, controlize, distinguish, exact_nonidentity_check,
                        plant_whitebox_attacker)
from .seeds import derive_int, derive_rng
from .shuffler import ShuffleConfig, estimate_overlap, shuffle

EX_USAGE = 64
AUTH_ENV = "AUTHQC_AUTH_KEY"

SUBCOMMANDS = ("build-pga", "encode", "issue-key", "shuffle", "publish", "run", "recycle",
               "check-identity", "controlize", "overlap", "reduction-demo", "attack-demo")


class UsageError(AqcError):
    exit_code = EX_USAGE


# -- file helpers -----------------------------------------------------------

def _read_seq(path: str) -> GateSequence:
    return parse(Path(path).read_text())


def _is_secret_file(path: Path) -> bool:
    try:
        with path.open() as fh:
            return fh.readline().startswith(SECRET_MARKER)
    except (OSError, UnicodeDecodeError):
        return False


def _emit(args, text: str, out: str | None, secret: bool = False) -> None:
    """Write ``text`` to ``out`` (or stdout), enforcing the secret-file rules."""
    if out is None:
        if secret and not args.allow_secret:
            raise UsageError("refusing to print secret material to stdout without --allow-secret")
        sys.stdout.write(text)
        return
    path = Path(out)
    if secret and path.suffix != ".secret" and not args.allow_secret:
        raise UsageError(f"secret output {out} must end in .secret (or pass --allow-secret)")
    if not secret and path.exists() and _is_secret_file(path) and not args.allow_secret:
        raise UsageError(f"refusing to overwrite secret file {out} with public data")
    path.write_text(text)


def _state_arg(spec: str, num_qubits: int) -> np.ndarray:
    """A state file, ``zero``, or ``basis:<index>``."""
    if spec == "zero":
        return sim.basis_state(0, num_qubits)
    if spec.startswith("basis:"):
        return sim.basis_state(int(spec.split(":", 1)[1]), num_qubits)
    return load_state(spec)


def _authenticator(args) -> Authenticator:
    return Authenticator(args.auth_key or os.environ.get(AUTH_ENV))


def _shuffle_cfg(args, seed: int) -> ShuffleConfig:
    return ShuffleConfig(steps=args.steps, q=args.q, seed=seed)


def _fmt(x: float) -> str:
    return repr(float(x))


# -- subcommands ------------------------------------------------------------

def cmd_build_pga(args) -> int:
    spec = load_manifest(args.manifest)
    _emit(args, serialize(build_pga(spec)), args.output)
    return 0


def cmd_encode(args) -> int:
    xG = _read_seq(args.sequence)
    if args.secrets_in:
        secrets = KeySecrets.from_text(Path(args.secrets_in).read_text())
    else:
        if args.m is None:
            raise UsageError("--m is required unless --secrets-in is given")
        secrets = KeySecrets.random(args.m, derive_int(args.seed, "secrets"))  # label "secrets"
        if args.secrets_out is None:
            raise UsageError("--secrets-out is required when secrets are generated")
        _emit(args, secrets.to_text(), args.secrets_out, secret=True)
    _emit(args, serialize(encode(xG, secrets)), args.output)
    return 0


def cmd_issue_key(args) -> int:
    secrets = KeySecrets.from_text(Path(args.secrets).read_text())
    key = issue_key(args.index, secrets, secrets.m, args.k, args.program_id).user_copy()
    _emit(args, key.to_text(), args.output, secret=True)
    return 0


def cmd_shuffle(args) -> int:
    seq = _read_seq(args.sequence)
    _emit(args, serialize(shuffle(seq, _shuffle_cfg(args, derive_int(args.seed, "shuffle")))), args.output)
    return 0


def cmd_publish(args) -> int:
    spec = load_manifest(args.manifest)
    pub, secrets = programmer_publish(spec, _shuffle_cfg(args, derive_int(args.seed, "shuffle")),
                                      _authenticator(args), args.program_id)
    _emit(args, secrets.to_text(), args.secrets_out, secret=True)
    _emit(args, pub.to_text(), args.output)
    print(f"program_id {pub.program_id}\ngates {len(pub.sequence)}\nsignature {pub.signature}")
    return 0


def _report_run(args, res) -> int:
    if res.entangled:
        print(f"status entangled-output\ninput_purity {_fmt(res.input_purity)}")
        return 0
    if args.output:
        _emit(args, state_to_text(res.output), args.output)
    if args.key_out:
        key = KeyState(res.key, None, args.program_id_hint)
        _emit(args, key.to_text(), args.key_out, secret=True)
    print(f"status product\ninput_purity {_fmt(res.input_purity)}")
    if not args.output:
        for a in res.output:
            print(f"amp {_fmt(a.real)} {_fmt(a.imag)}")
    return 0


def _run_common(args, reverse: bool) -> int:
    pub = load_public(args.program)
    verify_public(pub, _authenticator(args))
    key = KeyState.from_text(Path(args.key).read_text())
    psi = _state_arg(args.state, pub.n)
    args.program_id_hint = pub.program_id
    res = (recycle if reverse else run)(pub.sequence, key.state, psi)
    return _report_run(args, res)


def cmd_run(args) -> int:
    return _run_common(args, reverse=False)


def cmd_recycle(args) -> int:
    return _run_common(args, reverse=True)


def cmd_check_identity(args) -> int:
    print(exact_nonidentity_check(_read_seq(args.sequence), args.tol))
    return 0


def cmd_controlize(args) -> int:
    _emit(args, serialize(controlize(_read_seq(args.sequence))), args.output)
    return 0


def cmd_overlap(args) -> int:
    a, b = _read_seq(args.a), _read_seq(args.b)
    report = estimate_overlap(a, b, args.samples, _shuffle_cfg(args, derive_int(args.seed, "overlap")))
    if args.output:
        _emit(args, report.to_text(), args.output)
    sys.stdout.write(report.to_text())
    return 0


def _one_qubit(gates) -> GateSequence:
    return GateSequence(tuple(gates), 1)


def cmd_reduction_demo(args) -> int:
    base = _read_seq(args.base) if args.base else GateSequence((H(0),), 1)
    rng = derive_rng(args.seed, "reduction")  # label "reduction"
    cfg = _shuffle_cfg(args, derive_int(args.seed, "shuffle"))
    ident = exact_nonidentity_check(base)
    print(f"base {'identity' if ident.is_identity_up_to_phase else 'non-identity'}")
    worst_basis = worst_plus = 0.0
    for t in range(args.trials):
        vl = sample_random_sequence([0], 6, rng)
        vr = sample_random_sequence([0], 6, rng)
        inst = build_modified_instance(base, vl, vr, cfg)
        d = distinguish(inst, plant_whitebox_attacker(inst))
        worst_basis = max(worst_basis, abs(d.p_basis - 1))
        worst_plus = max(worst_plus, abs(d.p_plus - 0.5))
        print(f"trial {t} verdict {d.verdict} p_basis {_fmt(d.p_basis)} p_plus {_fmt(d.p_plus)}")
    print(f"max_dev_p_basis {_fmt(worst_basis)}\nmax_dev_p_plus {_fmt(worst_plus)}")
    # The identity-instance contradiction: same public sequence, attacker keyed to H or to I.
    h = _one_qubit([H(0)])
    inst = build_modified_instance(GateSequence.empty(base.num_qubits), h, h, cfg)
    for name, vr in (("H", h), ("I", _one_qubit([]))):
        d = distinguish(inst, plant_whitebox_attacker(inst, v_right=vr))
        print(f"identity_instance attacker_keyed_to {name} p_basis {_fmt(d.p_basis)} p_plus {_fmt(d.p_plus)}")
    return 0


def cmd_attack_demo(args) -> int:
    m, k, n = args.m, args.k, args.n
    seed = args.seed
    programs = [sample_random_sequence(range(n), 4 * n, derive_rng(seed, "program", i)) for i in range(2**k)]
    spec = ProgramSpec.with_random_dummies(programs, k, m, derive_int(seed, "spec"))
    auth = Authenticator(args.auth_key or os.environ.get(AUTH_ENV) or "attack-demo")
    pub, secrets = programmer_publish(spec, _shuffle_cfg(args, derive_int(seed, "shuffle")), auth, "attack-demo")
    victim = issue_key(0, secrets, m, k, pub.program_id)
    stolen = [issue_key(j, secrets, m, k, pub.program_id) for j in range(1, min(2**k, 1 + args.stolen))]
    report = eavesdropper_report(pub, stolen, args.budget, programs=programs, target_index=0, victim_key=victim,
                                 guess_trials=args.trials, rng=derive_rng(seed, "attack"))
    sys.stdout.write(report.to_text())
    return 5 if report.partial else 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=sim.DEFAULT_TOL)
    common.add_argument("--allow-secret", action="store_true")
    common.add_argument("-o", "--output")
    shuf = argparse.ArgumentParser(add_help=False)
    shuf.add_argument("--steps", type=int, default=200)
    shuf.add_argument("--q", type=int, default=None)
    auth = argparse.ArgumentParser(add_help=False)
    auth.add_argument("--auth-key", default=None, help=f"authenticator key (default: ${AUTH_ENV})")

    p = argparse.ArgumentParser(prog="authqc", description="Authorized quantum computation laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build-pga", parents=[common], help="build x(G) from a program manifest")
    s.add_argument("manifest")
    s.set_defaults(func=cmd_build_pga)

    s = sub.add_parser("encode", parents=[common], help="wrap x(G) with key-register secrets L, R")
    s.add_argument("sequence")
    s.add_argument("--m", type=int)
    s.add_argument("--secrets-in")
    s.add_argument("--secrets-out")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("issue-key", parents=[common], help="issue the authorization key for an index")
    s.add_argument("secrets")
    s.add_argument("--index", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--program-id")
    s.set_defaults(func=cmd_issue_key)

    s = sub.add_parser("shuffle", parents=[common, shuf], help="randomised equivalent rewrite")
    s.add_argument("sequence")
    s.set_defaults(func=cmd_shuffle)

    s = sub.add_parser("publish", parents=[common, shuf, auth], help="build, encode, shuffle and sign")
    s.add_argument("manifest")
    s.add_argument("--secrets-out", required=True)
    s.add_argument("--program-id", default="prog")
    s.set_defaults(func=cmd_publish)

    for name, func in (("run", cmd_run), ("recycle", cmd_recycle)):
        s = sub.add_parser(name, parents=[common, auth], help=f"{name} a public program with a key")
        s.add_argument("program")
        s.add_argument("key")
        s.add_argument("state", help="state file, 'zero' or 'basis:<i>'")
        s.add_argument("--key-out", help="where to write the key left behind (.secret)")
        s.set_defaults(func=func)

    s = sub.add_parser("check-identity", parents=[common], help="exact non-identity check (dense)")
    s.add_argument("sequence")
    s.set_defaults(func=cmd_check_identity)

    s = sub.add_parser("controlize", parents=[common], help="controlled version on n+1 qubits")
    s.add_argument("sequence")
    s.set_defaults(func=cmd_controlize)

    s = sub.add_parser("overlap", parents=[common, shuf], help="shuffle-support overlap ratio")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--samples", type=int, default=1000)
    s.set_defaults(func=cmd_overlap)

    s = sub.add_parser("reduction-demo", parents=[common, shuf], help="distinguisher with a planted attacker")
    s.add_argument("--base", help="x(U) sequence file (default: single H)")
    s.add_argument("--trials", type=int, default=20)
    s.set_defaults(func=cmd_reduction_demo)

    s = sub.add_parser("attack-demo", parents=[common, shuf, auth], help="baseline black-box attacks")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--stolen", type=int, default=1)
    s.add_argument("--trials", "--samples", dest="trials", type=int, default=10_000)
    s.add_argument("--budget", type=int, default=100_000)
    s.set_defaults(func=cmd_attack_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv or (argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help")):
        parser.print_usage(sys.stderr)
        print(f"authqc: unknown subcommand {argv[0]!r}" if argv else "authqc: missing subcommand", file=sys.stderr)
        return EX_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EX_USAGE if exc.code else 0
    try:
        return args.func(args)
    except AqcError as exc:
        print(f"authqc: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"authqc: {exc}", file=sys.stderr)
        return EX_USAGE
    except ValueError as exc:
        print(f"authqc: {exc}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
