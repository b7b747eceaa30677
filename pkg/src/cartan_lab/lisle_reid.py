"""Structure equations of a transitive pseudo-group from its first-order
involutive defining system, read off at a base point.

For a system in solved form

    d xi^i / d x^j = sum_rho A^i_{j rho}(x) phi^rho + sum_k b^i_{jk}(x) xi^k

the structure equations are ``d w^i = a^i_{j rho} pi^rho ^ w^j + c^i_{jk}
w^j ^ w^k`` with ``a = A(x0)`` and ``c^i_{jk} = b^i_{kj}(x0) - b^i_{jk}(x0)``.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from .exterior import AbstractStructure, jacobi_check
from .expr import nodes as N
from .expr.calculus import Rules, SubstitutionRule, substitute, total_diff
from .expr.canonical import canonicalize, is_zero
from .expr.parser import parse, render
from .expr.rational import to_rf


class DefiningSystemError(ValueError):
    pass


class SingularPointError(ValueError):
    pass


class HigherOrderError(DefiningSystemError):
    pass


class DefiningSystem:
    """First-order defining system in parametric/principal normal form.

    ``principal[(i, j)] = (A, b)`` with ``A`` a list over the parametric
    derivatives and ``b`` a list over the unknowns; ``parametric`` is the
    ordered list of (i, j) slots named phi^1, phi^2, ...  Indices are 0-based.
    """

    def __init__(self, variables, unknowns, parametric, principal):
        self.variables = [N.var(v) if isinstance(v, str) else v for v in variables]
        self.unknowns = list(unknowns)
        self.parametric = [tuple(p) for p in parametric]
        self.principal = {tuple(k): (list(a), list(b)) for k, (a, b) in principal.items()}

    @property
    def n(self):
        return len(self.variables)

    @classmethod
    def from_json(cls, obj):
        if obj.get("order", 1) != 1:
            raise HigherOrderError(
                "only first-order defining systems are supported; higher-order systems need "
                "a prolongation step that is out of scope here")
        variables = obj["vars"]
        unknowns = obj.get("unknowns") or ["xi%d" % (i + 1) for i in range(len(variables))]
        n = int(obj.get("n", len(variables)))
        if n != len(variables) or n != len(unknowns):
            raise DefiningSystemError("n, vars and unknowns disagree in length")
        uidx = {u: i for i, u in enumerate(unknowns)}
        vidx = {v: j for j, v in enumerate(variables)}

        def slot(u, v):
            if len(v) != 1 and v not in vidx:
                raise HigherOrderError(
                    "derivative %s_%s is not first order; higher-order systems are out of scope" % (u, v))
            if u not in uidx or v not in vidx:
                raise DefiningSystemError("unknown slot %s_%s" % (u, v))
            return uidx[u], vidx[v]

        parametric = [slot(u, v) for u, v in obj.get("parametric", [])]
        principal = {}
        for key, entry in obj.get("principal", {}).items():
            u, _, v = key.partition(",")
            ij = slot(u.strip(), v.strip())
            if ij in principal:
                raise DefiningSystemError("duplicate principal equation for %s" % key)
            a = [parse(str(t)) for t in entry.get("A", ["0"] * len(parametric))]
            b = [parse(str(t)) for t in entry.get("b", ["0"] * n)]
            principal[ij] = (a, b)
        return cls(variables, unknowns, parametric, principal)

    def to_json(self):
        names = [v.name for v in self.variables]
        return {
            "n": self.n,
            "vars": names,
            "unknowns": list(self.unknowns),
            "parametric": [[self.unknowns[i], names[j]] for i, j in self.parametric],
            "principal": {
                "%s,%s" % (self.unknowns[i], names[j]): {"A": [render(x) for x in a], "b": [render(x) for x in b]}
                for (i, j), (a, b) in sorted(self.principal.items())
            },
        }


def validate(sys: DefiningSystem, compatibility=True):
    """Partition and well-formedness checks plus first-order compatibility.

    Raises DefiningSystemError for a broken partition or malformed
    coefficients; compatibility findings are returned as warnings.
    """
    n, p = sys.n, len(sys.parametric)
    slots = set(itertools.product(range(n), range(n)))
    par = set(sys.parametric)
    if len(par) != len(sys.parametric):
        raise DefiningSystemError("a parametric derivative is listed twice")
    overlap = par & set(sys.principal)
    if overlap:
        raise DefiningSystemError("slots both parametric and principal: %s" % _slot_names(sys, overlap))
    missing = slots - par - set(sys.principal)
    if missing:
        raise DefiningSystemError("no equation and not parametric: %s" % _slot_names(sys, missing))
    allowed = set(sys.variables)
    for (i, j), (a, b) in sys.principal.items():
        if len(a) != p or len(b) != n:
            raise DefiningSystemError("equation %s: expected %d A-coefficients and %d b-coefficients"
                                      % (_slot_names(sys, [(i, j)]), p, n))
        for e in a + b:
            extra = N.free_vars(e) - allowed
            if extra or N.free_functions(e):
                raise DefiningSystemError("coefficients may only depend on %s"
                                          % ", ".join(v.name for v in sys.variables))
    report = {"valid": True, "parametric": len(sys.parametric), "warnings": []}
    if compatibility:
        report["warnings"] = _compatibility(sys)
    return report


def _slot_names(sys, slots):
    return ", ".join(sorted("%s_%s" % (sys.unknowns[i], sys.variables[j].name) for i, j in slots))


def _compatibility(sys):
    """Cross-derivative conditions between pairs of principal equations."""
    args = tuple(v.name for v in sys.variables)
    xi = [N.function(u, args) for u in sys.unknowns]
    phi = [N.function("phi%d" % (r + 1), args) for r in range(len(sys.parametric))]
    rules = []
    for i in range(sys.n):
        for j in range(sys.n):
            idx = tuple(int(k == j) for k in range(sys.n))
            target = N.funcapp(xi[i], idx)
            rules.append(SubstitutionRule(target, _rhs(sys, i, j, xi, phi)))
    rules = Rules(rules)
    warnings = []
    for (i, j), (i2, k) in itertools.combinations(sorted(sys.principal), 2):
        if i != i2:
            continue
        dj = total_diff(_rhs(sys, i, j, xi, phi), sys.variables[k], rules)
        dk = total_diff(_rhs(sys, i, k, xi, phi), sys.variables[j], rules)
        diff = N.add(dj, N.neg(dk))
        if is_zero(diff):
            continue
        if any(a.symbol in phi and any(a.index) for a in N.func_apps(diff)):
            warnings.append("%s: cross-derivative condition involves second derivatives of "
                            "parametric data; not decidable at first order"
                            % _slot_names(sys, [(i, j), (i, k)]))
        else:
            warnings.append("%s: cross-derivatives disagree (%s); the system does not look involutive"
                            % (_slot_names(sys, [(i, j), (i, k)]), render(canonicalize(diff))))
    return warnings


def _rhs(sys, i, j, xi, phi):
    if (i, j) in sys.parametric:
        return phi[sys.parametric.index((i, j))]()
    a, b = sys.principal[(i, j)]
    terms = [N.mul(c, phi[r]()) for r, c in enumerate(a)]
    terms += [N.mul(c, xi[k]()) for k, c in enumerate(b)]
    return N.add(*terms) if terms else N.ZERO


def _value(e, point):
    try:
        r = to_rf(substitute(e, point))
    except ZeroDivisionError:
        raise SingularPointError("coefficient %s is singular at the base point" % render(e))
    if not r.is_const():
        raise SingularPointError("coefficient %s does not evaluate to a rational number" % render(e))
    return r.const_value()


def is_nonsingular(sys, x0):
    point = {v: N.const(c) for v, c in zip(sys.variables, x0)}
    try:
        for a, b in sys.principal.values():
            for e in a + b:
                _value(e, point)
    except SingularPointError:
        return False
    return True


def find_base_point(sys, radius=4):
    """First non-singular integer point, searching outward from the origin."""
    n = sys.n
    for r in range(radius + 1):
        ring = [p for p in itertools.product(range(-r, r + 1), repeat=n) if max(map(abs, p), default=0) == r]
        ring.sort(key=lambda p: (sum(1 for c in p if c), sum(1 for c in p if c < 0), [-c for c in p]))
        for p in ring:
            x0 = tuple(Fraction(c) for c in p)
            if is_nonsingular(sys, x0):
                return x0
    raise SingularPointError("no non-singular lattice point within radius %d" % radius)


def structure_equations(sys: DefiningSystem, x0=None, check=True) -> AbstractStructure:
    validate(sys, compatibility=False)
    if x0 is None:
        x0 = find_base_point(sys)
    x0 = tuple(Fraction(c) for c in x0)
    if len(x0) != sys.n:
        raise ValueError("base point has the wrong dimension")
    point = {v: N.const(c) for v, c in zip(sys.variables, x0)}
    n, p = sys.n, len(sys.parametric)
    forms = ["w%d" % (i + 1) for i in range(n)]
    pis = ["pi%d" % (r + 1) for r in range(p)]
    a = {}
    bvals = {}
    for (i, j), (acoef, bcoef) in sys.principal.items():
        for r, e in enumerate(acoef):
            v = _value(e, point)
            if v:
                a[(i, j, r)] = v
        for k, e in enumerate(bcoef):
            v = _value(e, point)
            if v:
                bvals[(i, j, k)] = v
    for r, (i, j) in enumerate(sys.parametric):
        a[(i, j, r)] = Fraction(1)
    s = AbstractStructure(forms, pis)
    for i in range(n):
        terms = []
        for (ii, j, r), v in a.items():
            if ii == i:
                terms.append(((pis[r], forms[j]), v))
        for j in range(n):
            for k in range(j + 1, n):
                c = bvals.get((i, k, j), 0) - bvals.get((i, j, k), 0)
                if c:
                    terms.append(((forms[j], forms[k]), c))
        s.set_equation(forms[i], terms)
    s.base_point = x0
    if check:
        rep = jacobi_check(s)
        if not rep["passed"]:
            raise DefiningSystemError("system not involutive at x0 = %s: %s"
                                      % (tuple(str(c) for c in x0), rep["obstructions"]))
    return s


def find_diagonal_scaling(s1: AbstractStructure, s2: AbstractStructure, candidates=None):
    """Diagonal rescaling of forms and pis taking s1 to s2, if one exists.

    Substituting w^i = l_i w'^i and pi^r = m_r pi'^r into s1 must give s2.
    Returns {name: factor} or None.
    """
    if s1.forms != s2.forms or s1.pis != s2.pis:
        return None
    if candidates is None:
        base = [Fraction(1), Fraction(2), Fraction(1, 2), Fraction(3), Fraction(1, 3)]
        candidates = base + [-c for c in base]
    names = s1.basis
    for combo in itertools.product(candidates, repeat=len(names)):
        lam = dict(zip(names, combo))
        if all(_scaled(s1, lhs, lam) == s2.equation(lhs) for lhs in s1.forms):
            return lam
    return None


def _scaled(s, lhs, lam):
    out = {}
    for (a, b), c in s.equation(lhs).items():
        v = c * lam[a] * lam[b] / lam[lhs]
        if v:
            out[(a, b)] = v
    return out


def example_system():
    """The two-dimensional example with xi_x = eta/y, xi_y = 0, eta_y = eta/y."""
    return DefiningSystem.from_json({
        "n": 2, "vars": ["x", "y"], "unknowns": ["xi", "eta"],
        "parametric": [["eta", "x"]],
        "principal": {
            "xi,x": {"A": ["0"], "b": ["0", "1/y"]},
            "xi,y": {"A": ["0"], "b": ["0", "0"]},
            "eta,y": {"A": ["0"], "b": ["0", "1/y"]},
        },
    })


def translation_system(n=2):
    names = ["x", "y", "z", "w"][:n]
    unknowns = ["xi%d" % (i + 1) for i in range(n)]
    return DefiningSystem.from_json({
        "n": n, "vars": names, "unknowns": unknowns, "parametric": [],
        "principal": {"%s,%s" % (u, v): {"A": [], "b": ["0"] * n} for u in unknowns for v in names},
    })


def diffeo_line_system():
    """Diff(R) at first order: the single derivative xi_x is parametric."""
    return DefiningSystem.from_json({"n": 1, "vars": ["x"], "unknowns": ["xi"],
                                     "parametric": [["xi", "x"]], "principal": {}})
