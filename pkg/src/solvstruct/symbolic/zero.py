"""Best-effort zero testing.

Two tiers.  The symbolic tier reduces the expression to rational normal form
and checks for the empty polynomial.  The numeric tier samples every free
symbol independently from [0.5, 2.0] and accepts when |value| stays below
1e-10 at 20 points; draws that hit a singularity are redrawn, and more than
50 consecutive singular draws make the test inconclusive.  Results carry
which tier fired so reports can distinguish "symbolically zero" from
"numerically zero".
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .expr import Expr
from .numeric import DomainError, eval_numeric
from .printer import to_str
from .ratnorm import is_zero_poly


@dataclass(frozen=True)
class ZeroPolicy:
    seed: int = 0
    tol: float = 1e-10
    samples: int = 20
    lo: float = 0.5
    hi: float = 2.0
    max_singular: int = 50


DEFAULT_POLICY = ZeroPolicy()


class InconclusiveZeroTest(ArithmeticError):
    pass


@dataclass(frozen=True)
class ZeroResult:
    is_zero: bool
    tier: str  # "symbolic" | "numeric" | "nonzero" | "inconclusive"
    witness: dict | None = None
    witness_value: float | None = None

    def __bool__(self):
        return self.is_zero


def zero_check(e: Expr, policy: ZeroPolicy = DEFAULT_POLICY) -> ZeroResult:
    """Decide whether e is (almost certainly) identically zero."""
    if is_zero_poly(e):
        return ZeroResult(True, "symbolic")
    names = sorted(e.free_symbols)
    # deterministic per-expression stream, independent of call order
    rng = random.Random("%d|%s" % (policy.seed, to_str(e)))
    accepted = 0
    consecutive_bad = 0
    while accepted < policy.samples:
        point = {n: rng.uniform(policy.lo, policy.hi) for n in names}
        try:
            v = eval_numeric(e, point)
        except (DomainError, OverflowError, ZeroDivisionError):
            consecutive_bad += 1
            if consecutive_bad > policy.max_singular:
                return ZeroResult(False, "inconclusive")
            continue
        consecutive_bad = 0
        if abs(v) > policy.tol:
            return ZeroResult(False, "nonzero", point, v)
        accepted += 1
    return ZeroResult(True, "numeric")


def is_zero(e: Expr, policy: ZeroPolicy = DEFAULT_POLICY) -> bool:
    """Boolean form of zero_check; raises on an inconclusive sample run."""
    r = zero_check(e, policy)
    if not r.is_zero and r.tier == "inconclusive":
        raise InconclusiveZeroTest(
            "zero test inconclusive for %s (too many singular samples)" % to_str(e)
        )
    return r.is_zero
