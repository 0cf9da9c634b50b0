"""A small arithmetic grammar for scenario files.

Expressions use ``+ - * / ^`` (``**`` also accepted), numbers, parentheses,
the vectors ``q`` and ``p`` with component access ``q[i]``, vector literals
``[a, b]``, the scalar ``t``, the constants ``pi`` and ``e``, and the
functions sin, cos, tan, exp, log, sqrt, abs, dot(u, v) and norm(v). Earlier
named definitions may be referenced by later expressions.

Parsing walks a whitelisted Python AST and builds sympy objects, so
derivatives are exact and evaluation goes through ``sympy.lambdify``.
"""

from __future__ import annotations

import ast
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from ..errors import ConfigurationError

_SCALAR_FUNCS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
}
_CONSTANTS = {"pi": sp.pi, "e": sp.E}


class Vector(tuple):
    """Tuple of sympy scalars supporting elementwise arithmetic."""

    def _zip(self, other, op):
        if isinstance(other, Vector):
            if len(other) != len(self):
                raise ConfigurationError("vector length mismatch")
            return Vector(op(a, b) for a, b in zip(self, other))
        return Vector(op(a, other) for a in self)


def _binop(op, a, b):
    if isinstance(a, Vector):
        return a._zip(b, op)
    if isinstance(b, Vector):
        return b._zip(a, lambda x, y: op(y, x))
    return op(a, b)


_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


class _Builder:
    def __init__(self, env: Mapping[str, object]):
        self.env = env

    def build(self, node):
        method = getattr(self, "_" + type(node).__name__, None)
        if method is None:
            raise ConfigurationError(f"unsupported syntax: {type(node).__name__}")
        return method(node)

    def _Expression(self, node):
        return self.build(node.body)

    def _Constant(self, node):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ConfigurationError(f"unsupported literal {node.value!r}")
        return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)

    def _Name(self, node):
        if node.id in self.env:
            return self.env[node.id]
        if node.id in _CONSTANTS:
            return _CONSTANTS[node.id]
        raise ConfigurationError(f"unknown name {node.id!r}")

    def _BinOp(self, node):
        op = _BINOPS.get(type(node.op))
        if op is None:
            raise ConfigurationError(f"unsupported operator {type(node.op).__name__}")
        a, b = self.build(node.left), self.build(node.right)
        if isinstance(node.op, ast.Pow) and (isinstance(a, Vector) or isinstance(b, Vector)):
            raise ConfigurationError("powers of vectors are not defined")
        if isinstance(node.op, ast.Div) and isinstance(b, Vector):
            raise ConfigurationError("division by a vector is not defined")
        if isinstance(node.op, ast.Mult) and isinstance(a, Vector) and isinstance(b, Vector):
            raise ConfigurationError("use dot(u, v) for the product of two vectors")
        return _binop(op, a, b)

    def _UnaryOp(self, node):
        v = self.build(node.operand)
        if isinstance(node.op, ast.USub):
            return _binop(lambda a, b: a * b, v, -1)
        if isinstance(node.op, ast.UAdd):
            return v
        raise ConfigurationError("unsupported unary operator")

    def _List(self, node):
        items = [self.build(e) for e in node.elts]
        if any(isinstance(i, Vector) for i in items):
            raise ConfigurationError("nested vectors are not supported")
        return Vector(items)

    _Tuple = _List

    def _Subscript(self, node):
        base = self.build(node.value)
        if not isinstance(base, Vector):
            raise ConfigurationError("only vectors can be indexed")
        idx = node.slice
        if not (isinstance(idx, ast.Constant) and isinstance(idx.value, int) and not isinstance(idx.value, bool)):
            raise ConfigurationError("vector indices must be integer literals")
        if not 0 <= idx.value < len(base):
            raise ConfigurationError(f"index {idx.value} out of range for a vector of length {len(base)}")
        return base[idx.value]

    def _Call(self, node):
        if not isinstance(node.func, ast.Name) or node.keywords:
            raise ConfigurationError("only plain calls of built-in functions are allowed")
        name = node.func.id
        args = [self.build(a) for a in node.args]
        if name in _SCALAR_FUNCS:
            if len(args) != 1:
                raise ConfigurationError(f"{name} takes one argument")
            if isinstance(args[0], Vector):
                return Vector(_SCALAR_FUNCS[name](a) for a in args[0])
            return _SCALAR_FUNCS[name](args[0])
        if name == "dot":
            if len(args) != 2 or not all(isinstance(a, Vector) for a in args) or len(args[0]) != len(args[1]):
                raise ConfigurationError("dot takes two vectors of equal length")
            return sum((a * b for a, b in zip(*args)), sp.Integer(0))
        if name == "norm":
            if len(args) != 1 or not isinstance(args[0], Vector):
                raise ConfigurationError("norm takes one vector")
            return sp.sqrt(sum((a**2 for a in args[0]), sp.Integer(0)))
        raise ConfigurationError(f"unknown function {name!r}")


def symbols(d: int):
    q = Vector(sp.symbols(f"q0:{d}", real=True))
    p = Vector(sp.symbols(f"p0:{d}", real=True))
    t = sp.Symbol("t", real=True)
    return q, p, t


def parse(text: str, d: int, definitions: Sequence[Mapping[str, str]] = ()):
    """Parse ``text`` into a sympy scalar or a :class:`Vector`."""
    q, p, t = symbols(d)
    env: dict = {"q": q, "p": p, "t": t}
    for item in definitions:
        for name, expr in item.items():
            if name in env or name in _CONSTANTS or name in _SCALAR_FUNCS or name in ("dot", "norm"):
                raise ConfigurationError(f"definition {name!r} shadows a reserved name")
            env[name] = _parse_in(expr, env)
    return _parse_in(text, env)


def _parse_in(text: str, env):
    if not isinstance(text, str):
        raise ConfigurationError(f"expression must be a string, got {type(text).__name__}")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse {text!r}: {exc.msg}") from None
    return _Builder(env).build(tree)


def _scalar(expr, what: str):
    if isinstance(expr, Vector):
        raise ConfigurationError(f"{what} must be scalar")
    return expr


def compile_scalar(expr, d: int):
    """Numpy function f(q, p, t) of batched arrays for a scalar sympy expression."""
    q, p, t = symbols(d)
    fn = sp.lambdify([*q, *p, t], expr, modules="numpy")

    def f(Q, P=None, T=0.0):
        Q = np.asarray(Q, dtype=float)
        P = np.zeros_like(Q) if P is None else np.asarray(P, dtype=float)
        Q, P = np.broadcast_arrays(Q, P)
        out = fn(*np.moveaxis(Q, -1, 0), *np.moveaxis(P, -1, 0), T)
        return np.broadcast_to(np.asarray(out, dtype=float), Q.shape[:-1]).copy()

    return f


def compile_gradient(expr, wrt, d: int):
    """Batched gradient of a scalar expression with respect to the symbols ``wrt``."""
    parts = [compile_scalar(sp.diff(expr, s), d) for s in wrt]

    def g(Q, P=None, T=0.0):
        return np.stack([f(Q, P, T) for f in parts], axis=-1)

    return g


def free_symbols_ok(expr, allowed: set, what: str):
    items = expr if isinstance(expr, Vector) else (expr,)
    names = {s.name for e in items for s in sp.sympify(e).free_symbols}
    bad = names - allowed
    if bad:
        raise ConfigurationError(f"{what} may not depend on {sorted(bad)}")
