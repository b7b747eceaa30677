"""Sampled local-equivalence test for linear hyperbolic equations.

For classes C2-C5 two equations are compared through their classifying maps:
the basic invariants plus their invariant derivatives up to second order,
viewed as functions of (t, x).  Points of A are matched to points of B by
root-finding on a set of coordinate invariants, and the remaining invariants
are compared at the matched points.  C1 and C6 are decided exactly.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .expr import nodes as N
from .expr.calculus import diff
from .expr.numeric import ExpSumOracle, lambdify
from .expr.parser import render
from .laplace import DEFAULT_DOMAIN, FrameError, classify, invariant_frame

t, x = N.var("t"), N.var("x")
_NUMERIC_ERRORS = (ZeroDivisionError, ValueError, OverflowError, FloatingPointError)


class EquivalenceError(ValueError):
    pass


@dataclass
class Config:
    tol: float = 1e-6
    samples: int = 40
    multistart: int = 5
    seed: int = 0
    domain_a: tuple = DEFAULT_DOMAIN
    domain_b: tuple = DEFAULT_DOMAIN
    order: int = 2

    def __post_init__(self):
        if not self.tol > 0:
            raise EquivalenceError("tol must be positive")
        if self.samples < 1 or self.multistart < 1:
            raise EquivalenceError("samples and multistart must be positive")
        for d in (self.domain_a, self.domain_b):
            if len(d) != 4 or not (d[0] < d[1] and d[2] < d[3]):
                raise EquivalenceError("domain must be (t0, t1, x0, x1) with t0 < t1 and x0 < x1")


def shared_oracles(exprs, seed=0):
    """Generic stand-ins for undetermined functions, keyed by symbol name.

    Two equations mentioning the same p(t) must see the same p, so the
    oracle depends only on the seed and the symbol's name and arity.
    """
    syms = set()
    for e in exprs:
        syms |= N.free_functions(e)
    return {s: ExpSumOracle(len(s.args), random.Random("%d:%s:%d" % (seed, s.name, len(s.args))))
            for s in syms}


@dataclass
class ClassifyingMap:
    subclass: str
    names: list
    functions: list
    gradients: list
    singular: list  # operator coefficients that must not vanish
    oracles: dict = field(repr=False, default=None)
    rank: int = 0
    samples: list = field(default_factory=list)

    def compile(self):
        if getattr(self, "_f", None) is None:
            self._f = lambdify(self.functions + self.singular, [t, x], self.oracles)
            self._g = lambdify(self.gradients, [t, x], self.oracles)
        return self._f, self._g

    def values(self, pt):
        """Invariant values at pt, or None at singular or non-finite points."""
        f, _ = self.compile()
        try:
            v = f(*pt)
        except _NUMERIC_ERRORS:
            return None
        vals, sing = v[:len(self.functions)], v[len(self.functions):]
        if any(abs(c) <= 1e-8 for c in sing) or not all(np.isfinite(vals)):
            return None
        return np.array(vals)

    def jacobian(self, pt):
        _, g = self.compile()
        try:
            return np.array(g(*pt), dtype=float).reshape(len(self.functions), 2)
        except _NUMERIC_ERRORS:
            return None

    def to_json(self):
        return {"subclass": self.subclass, "invariants": self.names, "rank": self.rank,
                "functions": [render(f) for f in self.functions],
                "samples": [[round(a, 12) for a in p] for p in self.samples]}


def classifying_map(eq, frame=None, order=2, samples=10, seed=0, domain=DEFAULT_DOMAIN,
                    oracle_seed=0) -> ClassifyingMap:
    if order > 2 or order < 0:
        raise EquivalenceError("order must be 0, 1 or 2")
    if frame is None:
        frame = invariant_frame(eq)
    funcs = frame.derivatives(order)
    names = list(funcs)
    exprs = [funcs[n] for n in names]
    grads = []
    for e in exprs:
        grads += [diff(e, t), diff(e, x)]
    sing = [c for c, _ in frame.operators]
    cmap = ClassifyingMap(frame.subclass, names, exprs, grads, sing,
                          shared_oracles(exprs + grads + sing, oracle_seed))
    rng = random.Random(seed)
    ranks = []
    for _ in range(50 * samples):
        if len(ranks) >= samples:
            break
        pt = (rng.uniform(domain[0], domain[1]), rng.uniform(domain[2], domain[3]))
        if cmap.values(pt) is None:
            continue
        jac = cmap.jacobian(pt)
        if jac is None or not np.all(np.isfinite(jac)):
            continue
        ranks.append(_rank(jac))
        cmap.samples.append(pt)
    if not ranks:
        raise EquivalenceError("no generic point found")
    cmap.rank = max(ranks)
    return cmap


def _rank(jac, rtol=1e-8):
    sv = np.linalg.svd(jac, compute_uv=False)
    if not sv.size or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def _coordinates(cmap, pt, r):
    """Greedy choice of r invariants whose gradients are independent at pt."""
    jac = cmap.jacobian(pt)
    chosen = []
    for i in range(len(cmap.functions)):
        trial = chosen + [i]
        if _rank(jac[trial]) == len(trial):
            chosen = trial
            if len(chosen) == r:
                break
    return chosen


def _close(a, b, tol):
    return abs(a - b) <= tol * (1 + max(abs(a), abs(b)))


@dataclass
class Verdict:
    verdict: str
    reason: str
    evidence: dict = field(default_factory=dict)

    def to_json(self):
        return {"verdict": self.verdict, "reason": self.reason, "evidence": self.evidence}


def equivalent(eq_a, eq_b, config=None) -> Verdict:
    cfg = config or Config()
    sa, sb = classify(eq_a), classify(eq_b)
    ev = {"subclass_a": sa.tag, "subclass_b": sb.tag}
    if sa.tag != sb.tag:
        return Verdict("Inequivalent", "different subclasses", ev)
    if sa.tag == "C1":
        return Verdict("Equivalent", "both equivalent to the wave equation", ev)
    if sa.tag == "C6":
        ev.update(P_a=render(sa.P), Q_a=render(sa.Q), P_b=render(sb.P), Q_b=render(sb.Q))
        same = sa.P == sb.P and sa.Q == sb.Q
        return Verdict("Equivalent" if same else "Inequivalent",
                       "C6 is decided by the constants P and Q", ev)
    try:
        ma = classifying_map(eq_a, order=cfg.order, samples=cfg.samples, seed=cfg.seed,
                             domain=cfg.domain_a)
        mb = classifying_map(eq_b, order=cfg.order, samples=cfg.samples, seed=cfg.seed + 1,
                             domain=cfg.domain_b)
    except (EquivalenceError, FrameError) as exc:
        return Verdict("Inconclusive", str(exc), ev)
    ev.update(rank_a=ma.rank, rank_b=mb.rank, invariants=ma.names,
              domain_a=list(cfg.domain_a), domain_b=list(cfg.domain_b))
    if ma.rank != mb.rank:
        return Verdict("Inequivalent", "classifying maps have different ranks", ev)
    return _match_samples(ma, mb, cfg, ev)


def _match_samples(ma, mb, cfg, ev):
    r = ma.rank
    d = cfg.domain_b
    grid = [(d[0] + (d[1] - d[0]) * (i + 0.5) / cfg.multistart,
             d[2] + (d[3] - d[2]) * (j + 0.5) / cfg.multistart)
            for i in range(cfg.multistart) for j in range(cfg.multistart)]
    matched, failures = [], []
    coords = _coordinates(ma, ma.samples[0], r) if r else []
    ev["coordinates"] = [ma.names[i] for i in coords]
    for pa in ma.samples:
        va = ma.values(pa)
        roots = _roots(mb, coords, va, grid, d, cfg.tol) if r else _roots_const(mb, grid)
        if not roots:
            failures.append(list(pa))
            continue
        best = None
        for pb, vb in roots:
            worst = max(abs(a - b) / (1 + max(abs(a), abs(b))) for a, b in zip(va, vb))
            if best is None or worst < best[0]:
                best = (worst, pb, vb)
        worst, pb, vb = best
        if worst <= 10 * cfg.tol:
            matched.append([list(pa), list(pb)])
            continue
        # a mismatch only counts once the witness survives a refined solve
        if _confirm_mismatch(ma, mb, coords, pa, pb, cfg):
            i = int(np.argmax([abs(a - b) / (1 + max(abs(a), abs(b))) for a, b in zip(va, vb)]))
            ev.update(witness_a=list(pa), witness_b=list(pb), invariant=ma.names[i],
                      value_a=float(va[i]), value_b=float(vb[i]), matched=len(matched))
            return Verdict("Inequivalent", "coordinate invariants match but %s differs"
                           % ma.names[i], ev)
        failures.append(list(pa))
    ev.update(matched=len(matched), unmatched=len(failures))
    if failures:
        ev["unmatched_points"] = failures[:5]
        return Verdict("Inconclusive", "no matching point found for %d of %d samples"
                       % (len(failures), len(ma.samples)), ev)
    return Verdict("Equivalent", "all %d samples matched" % len(matched), ev)


def _roots(mb, coords, va, grid, d, tol):
    target = va[coords]
    scale = 1 + np.abs(target)
    lo, hi = [d[0], d[2]], [d[1], d[3]]

    def resid(p):
        v = mb.values(tuple(p))
        if v is None:
            return np.full(len(coords), 1e6)
        return (v[coords] - target) / scale

    def jac(p):
        j = mb.jacobian(tuple(p))
        if j is None or not np.all(np.isfinite(j)):
            return np.zeros((len(coords), 2))
        return j[coords] / scale[:, None]

    out = []
    for p0 in grid:
        try:
            sol = least_squares(resid, p0, jac=jac, bounds=(lo, hi), xtol=1e-15, ftol=1e-15,
                                gtol=1e-15, max_nfev=200)
        except _NUMERIC_ERRORS:
            continue
        if np.max(np.abs(sol.fun)) > tol:
            continue
        pb = tuple(float(c) for c in sol.x)
        vb = mb.values(pb)
        if vb is None:
            continue
        if all(max(abs(a - b) for a, b in zip(pb, q)) > 1e-6 for q, _ in out):
            out.append((pb, vb))
    return out


def _roots_const(mb, grid):
    out = []
    for p in grid:
        v = mb.values(p)
        if v is not None:
            out.append((p, v))
            break
    return out


def _confirm_mismatch(ma, mb, coords, pa, pb, cfg):
    """Re-solve from pb with a tighter tolerance and re-compare."""
    va = ma.values(pa)
    if not coords:
        vb = mb.values(pb)
    else:
        roots = _roots(mb, coords, va, [pb], cfg.domain_b, cfg.tol * 1e-3)
        if not roots:
            return False
        vb = roots[0][1]
    return any(abs(a - b) > 10 * cfg.tol * (1 + max(abs(a), abs(b))) for a, b in zip(va, vb))


def shift_t(eq, c):
    """Rewrite the equation under the point change t -> t + c."""
    c = N.as_expr(c)
    return eq.substitute({t: t + c})
