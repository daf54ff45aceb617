"""Budget caps with environment-variable overrides.

Every cap can be overridden by an environment variable named
SIGMANOV_<NAME>; values are parsed as integers.  The caps guard against
runaway enumeration and elimination, not correctness: results computed
within budget are exact.
"""

import os

_DEFAULTS = {
    "SUPPORT_CAP": 5_000_000,       # max elements enumerated per support call
    "MAX_WORD_LENGTH": 8,           # default cap on enumerate_support L
    "TERM_CAP": 5_000_000,          # max stored terms in one truncation
    "ELIM_ROW_CAP": 20_000_000,     # max coefficient updates in one elimination
    "RETRY_CAP": 10,                # radius-doubling retries (2^10 scale factor)
    "AUT_INVERSE_LENGTH": 10,       # search bound for fiber automorphism inverses
}


def cap(name: str) -> int:
    env = os.environ.get("SIGMANOV_" + name)
    if env is not None:
        return int(env)
    return _DEFAULTS[name]
