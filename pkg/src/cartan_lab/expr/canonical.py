"""canonicalize / is_zero on top of the rational-function normal form."""
from __future__ import annotations

import random

from . import nodes as N
from .numeric import NumericDomainError, eval_numeric, random_oracles
from .rational import EXP_ARG, LN_ARG, from_rf, to_rf


class InconsistencyError(RuntimeError):
    """Symbolic and numeric zero tests disagree."""


NUMERIC_POINTS = 32
NUMERIC_ZERO = 1e-12


def canonicalize(e) -> N.Expr:
    return from_rf(to_rf(N.as_expr(e)))


def _transcendental(r) -> bool:
    return any(a in EXP_ARG or a in LN_ARG for a in r.atoms())


def is_zero(e, numeric_check=True) -> bool:
    """Exact zero test; a numeric probe guards expressions with exp/ln atoms."""
    e = N.as_expr(e)
    r = to_rf(e)
    if not r.num:
        return True
    if numeric_check and _transcendental(r):
        _numeric_probe(from_rf(r))
    return False


def _numeric_probe(c):
    rng = random.Random(0x5EED)
    variables = sorted(N.free_vars(c), key=lambda v: v.name)
    oracles = random_oracles(sorted(N.free_functions(c), key=lambda s: s.name), rng)
    seen = 0
    for _ in range(4 * NUMERIC_POINTS):
        point = {v: rng.uniform(0.5, 2.0) for v in variables}
        try:
            val = eval_numeric(c, point, oracles)
        except (ZeroDivisionError, NumericDomainError, OverflowError):
            continue
        if abs(val) > NUMERIC_ZERO:
            return
        seen += 1
        if seen >= NUMERIC_POINTS:
            raise InconsistencyError(
                "expression is symbolically nonzero but vanished at %d random points: %s"
                % (seen, c))
