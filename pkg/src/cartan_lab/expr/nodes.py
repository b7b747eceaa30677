"""Hash-consed expression nodes and the light-weight smart constructors.

Every node is interned: two structurally equal trees are the same Python
object, so ``==`` is identity and hashing is O(1).  The smart constructors
only flatten, fold numeric constants and drop neutral elements; collecting
like terms and expanding products is the job of ``canonicalize``.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from numbers import Rational

_lock = threading.RLock()
_table: dict = {}
_counter = [0]


class Expr:
    __slots__ = ("id", "_rf", "_skey", "__weakref__")
    kind = ""

    def __hash__(self):
        return self.id

    def __eq__(self, other):
        return self is other

    def __ne__(self, other):
        return self is not other

    def __lt__(self, other):
        return self.id < other.id

    # arithmetic builds raw trees; see canonicalize for normal forms
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1))

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if isinstance(k, Expr):
            if isinstance(k, Const):
                return power(self, k.value)
            return general_power(self, k)
        return power(self, Fraction(k))

    def __repr__(self):
        from .parser import render
        return "Expr(%s)" % render(self)

    def __str__(self):
        from .parser import render
        return render(self)

    @property
    def children(self):
        return ()


def _intern(cls, key, init):
    with _lock:
        node = _table.get(key)
        if node is None:
            node = object.__new__(cls)
            node.id = _counter[0]
            _counter[0] += 1
            node._rf = None
            node._skey = None
            init(node)
            _table[key] = node
        return node


class Const(Expr):
    __slots__ = ("value",)
    kind = "const"


class Var(Expr):
    __slots__ = ("name",)
    kind = "var"


class FuncSymbol:
    """An undetermined function symbol with a fixed argument list."""
    __slots__ = ("name", "args", "id")

    def __repr__(self):
        return "FuncSymbol(%s(%s))" % (self.name, ", ".join(a.name for a in self.args))

    def __hash__(self):
        return self.id

    def __eq__(self, other):
        return self is other

    def __call__(self, *index):
        return funcapp(self, index or (0,) * len(self.args))

    def d(self, *names):
        """Derivative node, e.g. ``u.d('t', 'x')``."""
        idx = [0] * len(self.args)
        for n in names:
            n = n.name if isinstance(n, Var) else n
            idx[[a.name for a in self.args].index(n)] += 1
        return funcapp(self, tuple(idx))


class FuncApp(Expr):
    __slots__ = ("symbol", "index")
    kind = "func"

    @property
    def order(self):
        return sum(self.index)


class Sum(Expr):
    __slots__ = ("terms",)
    kind = "sum"

    @property
    def children(self):
        return self.terms


class Product(Expr):
    __slots__ = ("factors",)
    kind = "product"

    @property
    def children(self):
        return self.factors


class Power(Expr):
    __slots__ = ("base", "exponent")
    kind = "power"

    @property
    def children(self):
        return (self.base,)


class Exp(Expr):
    __slots__ = ("arg",)
    kind = "exp"

    @property
    def children(self):
        return (self.arg,)


class Ln(Expr):
    __slots__ = ("arg",)
    kind = "ln"

    @property
    def children(self):
        return (self.arg,)


# -- raw constructors -------------------------------------------------------

def const(value) -> Const:
    value = Fraction(value)

    def init(n):
        n.value = value
    return _intern(Const, ("c", value.numerator, value.denominator), init)


def var(name: str) -> Var:
    def init(n):
        n.name = name
    return _intern(Var, ("v", name), init)


def symbols(names: str):
    return tuple(var(n) for n in names.replace(",", " ").split())


_symtab: dict = {}


def function(name: str, args) -> FuncSymbol:
    """Intern a function symbol; identity is the pair (name, args)."""
    args = tuple(var(a) if isinstance(a, str) else a for a in args)
    key = (name, tuple(a.name for a in args))
    with _lock:
        sym = _symtab.get(key)
        if sym is None:
            sym = object.__new__(FuncSymbol)
            sym.name = name
            sym.args = args
            _counter[0] += 1
            sym.id = _counter[0]
            _symtab[key] = sym
        return sym


def funcapp(symbol: FuncSymbol, index=None) -> FuncApp:
    index = tuple(int(i) for i in (index if index is not None else (0,) * len(symbol.args)))
    if len(index) != len(symbol.args) or min(index, default=0) < 0:
        raise ValueError("bad derivative index %r for %s" % (index, symbol.name))

    def init(n):
        n.symbol = symbol
        n.index = index
    return _intern(FuncApp, ("f", symbol.id, index), init)


def _raw_sum(terms):
    terms = tuple(terms)

    def init(n):
        n.terms = terms
    return _intern(Sum, ("+",) + tuple(t.id for t in terms), init)


def _raw_product(factors):
    factors = tuple(factors)

    def init(n):
        n.factors = factors
    return _intern(Product, ("*",) + tuple(f.id for f in factors), init)


def _raw_power(base, exponent):
    exponent = Fraction(exponent)

    def init(n):
        n.base = base
        n.exponent = exponent
    return _intern(Power, ("^", base.id, exponent.numerator, exponent.denominator), init)


def _raw_exp(arg):
    def init(n):
        n.arg = arg
    return _intern(Exp, ("exp", arg.id), init)


def _raw_ln(arg):
    def init(n):
        n.arg = arg
    return _intern(Ln, ("ln", arg.id), init)


ZERO = const(0)
ONE = const(1)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Rational)):
        return const(x)
    if isinstance(x, str):
        from .parser import parse
        return parse(x)
    raise TypeError("cannot convert %r to Expr" % (x,))


# -- smart constructors -----------------------------------------------------

def add(*xs) -> Expr:
    terms = []
    c = Fraction(0)
    for x in xs:
        x = as_expr(x)
        parts = x.terms if isinstance(x, Sum) else (x,)
        for p in parts:
            if isinstance(p, Const):
                c += p.value
            else:
                terms.append(p)
    if c:
        terms.append(const(c))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return _raw_sum(terms)


def mul(*xs) -> Expr:
    factors = []
    c = Fraction(1)
    for x in xs:
        x = as_expr(x)
        parts = x.factors if isinstance(x, Product) else (x,)
        for p in parts:
            if isinstance(p, Const):
                c *= p.value
            else:
                factors.append(p)
    if c == 0:
        return ZERO
    if not factors:
        return const(c)
    if c != 1:
        factors.insert(0, const(c))
    if len(factors) == 1:
        return factors[0]
    return _raw_product(factors)


def neg(x) -> Expr:
    return mul(-1, x)


def power(base, exponent) -> Expr:
    base = as_expr(base)
    r = Fraction(exponent)
    if r == 0:
        return ONE
    if r == 1:
        return base
    integral = r.denominator == 1
    if isinstance(base, Const):
        if integral:
            if base.value == 0 and r < 0:
                raise ZeroDivisionError("0 raised to a negative power")
            return const(base.value ** int(r))
        if base.value in (0, 1):
            return base
    if integral:
        if isinstance(base, Power):
            return power(base.base, base.exponent * r)
        if isinstance(base, Product):
            return mul(*[power(f, r) for f in base.factors])
    return _raw_power(base, r)


def exp(arg) -> Expr:
    arg = as_expr(arg)
    if arg is ZERO:
        return ONE
    return _raw_exp(arg)


def ln(arg) -> Expr:
    arg = as_expr(arg)
    if arg is ONE:
        return ZERO
    if isinstance(arg, Exp):
        return arg.arg
    return _raw_ln(arg)


def general_power(base, exponent) -> Expr:
    """base^exponent for a non-numeric exponent, as exp(exponent*ln(base))."""
    exponent = as_expr(exponent)
    if isinstance(exponent, Const):
        return power(base, exponent.value)
    return exp(mul(exponent, ln(base)))


def sqrt(x) -> Expr:
    return power(x, Fraction(1, 2))


def walk(e: Expr):
    """Yield every distinct node of the DAG once (post-order)."""
    seen = set()
    stack = [(e, False)]
    while stack:
        node, done = stack.pop()
        if done:
            yield node
            continue
        if node.id in seen:
            continue
        seen.add(node.id)
        stack.append((node, True))
        for ch in node.children:
            if ch.id not in seen:
                stack.append((ch, False))


def free_vars(e: Expr) -> set:
    out = set()
    for n in walk(e):
        if isinstance(n, Var):
            out.add(n)
        elif isinstance(n, FuncApp):
            out.update(n.symbol.args)
    return out


def free_functions(e: Expr) -> set:
    return {n.symbol for n in walk(e) if isinstance(n, FuncApp)}


def func_apps(e: Expr) -> set:
    return {n for n in walk(e) if isinstance(n, FuncApp)}


def has_transcendental(e: Expr) -> bool:
    for n in walk(e):
        if isinstance(n, (Exp, Ln)):
            return True
        if isinstance(n, Power) and n.exponent.denominator != 1:
            return True
    return False


def intern_table_size() -> int:
    return len(_table)
