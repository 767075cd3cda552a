"""Desk-scale laboratory for authorized quantum computation.

Unitary programs are dispatched by a programmable gate array, locked behind
simulated quantum authorization keys, obfuscated by randomised gate
shuffling, and published with a mock authenticator signature.
"""
from .circuit import CNOT, GPHASE, RY, RZ, Gate, GateSequence, H, X, adjoint, concat, digest, parse, serialize
from .errors import AqcError, AuthenticityError, BudgetError, ParseError, ShuffleError, WidthError
from .keying import KeySecrets, KeyState, encode, issue_key, recycle, run
from .pga import ProgramSpec, build_pga, controlled_on_value
from .shuffler import ShuffleConfig, estimate_overlap, shuffle

__version__ = "0.1.0"

__all__ = [
    "CNOT", "GPHASE", "RY", "RZ", "Gate", "GateSequence", "H", "X", "adjoint", "concat", "digest", "parse",
    "serialize", "AqcError", "AuthenticityError", "BudgetError", "ParseError", "ShuffleError", "WidthError",
    "KeySecrets", "KeyState", "encode", "issue_key", "recycle", "run", "ProgramSpec", "build_pga",
    "controlled_on_value", "ShuffleConfig", "estimate_overlap", "shuffle",
]
