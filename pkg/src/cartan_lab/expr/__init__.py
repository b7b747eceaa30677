"""Exact symbolic expressions: parsing, calculus and a decidable normal form."""
from .nodes import (
    Expr, Const, Var, FuncSymbol, FuncApp, Sum, Product, Power, Exp, Ln,
    const, var, symbols, function, funcapp, add, mul, neg, power, exp, ln,
    general_power, sqrt, as_expr, free_vars, free_functions, func_apps, walk, ZERO, ONE,
)
from .parser import parse, render, ParseError
from .rational import RF, to_rf, from_rf, rf_const
from .calculus import (
    SubstitutionRule, Rules, MissingRuleError, diff, total_diff, substitute,
    reduce_mod, rf_diff, rf_total_diff, as_rules,
)
from .canonical import canonicalize, is_zero, InconsistencyError
from .numeric import (
    eval_numeric, lambdify, ExpSumOracle, random_oracles, UnboundSymbolError, NumericDomainError,
)

__all__ = [n for n in dir() if not n.startswith("_")]
