"""Pairwise three-period costs and a tiny arithmetic expression language.

Expressions support ``+ - * / ^``, unary minus, parentheses, numbers, the
variables ``x``, ``y``, ``z`` and the functions ``abs``, ``min``, ``max``.
They compile to numpy-vectorized callables; nothing is passed to ``eval``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .couplings import evaluate


@dataclass(frozen=True)
class CostSpec:
    """``c(x, y, z) = c1(x, y) + c2(y, z) + epsilon * c3(x, z)``."""

    c1: Callable
    c2: Callable
    c3: Callable
    epsilon: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    def with_epsilon(self, eps: float) -> "CostSpec":
        return replace(self, epsilon=float(eps))

    def total(self, x, y, z):
        return (evaluate(self.c1, x, y) + evaluate(self.c2, y, z)
                + self.epsilon * evaluate(self.c3, x, z))

    def tensor(self, xs, ys, zs) -> np.ndarray:
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        return self.total(X, Y, Z)


def third_moment_cross(epsilon: float = 0.0) -> CostSpec:
    """Cross terms of ``(x + y + z)**3`` left after removing marginal-determined moments."""
    return CostSpec(lambda x, y: 9 * x * y**2,
                    lambda y, z: 3 * y * z**2,
                    lambda x, z: 3 * x * z**2,
                    epsilon, "third_moment_cross")


def straddle_basket(epsilon: float = 0.0) -> CostSpec:
    return CostSpec(lambda x, y: np.abs(y - x),
                    lambda y, z: np.abs(z - y),
                    lambda x, z: np.abs(z - x),
                    epsilon, "straddle_basket")


def deviation(p: float) -> Callable:
    """``|b - a|**p`` as a two-argument cost."""
    return lambda a, b: np.abs(b - a) ** p


BUILTINS = {"third_moment_cross": third_moment_cross, "straddle_basket": straddle_basket}


# --- expression language -------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")
_FUNCS = {"abs": (1, np.abs), "min": (2, np.minimum), "max": (2, np.maximum)}


class ExpressionError(ValueError):
    pass


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionError(f"cannot tokenize at position {pos}")
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("num", float(num)))
        elif name is not None:
            tokens.append(("name", name))
        elif op.strip():
            if op not in "+-*/^(),":
                raise ExpressionError(f"unexpected character {op!r}")
            tokens.append(("op", op))
        pos = m.end()
    tokens.append(("end", None))
    return tokens


class _Parser:
    # expr := term (('+'|'-') term)*
    # term := unary (('*'|'/') unary)*
    # unary := '-' unary | power
    # power := atom ('^' unary)?
    # atom := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'

    def __init__(self, text, variables):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.pos]
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            raise ExpressionError(f"expected {value or kind}, got {tok[1]!r}")
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        self.take("end")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            node = (np.add if op == "+" else np.subtract, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            node = (np.multiply if op == "*" else np.divide, node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return (np.negative, self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            node = (np.power, node, self.unary())
        return node

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return ("const", val)
        if kind == "name":
            self.take()
            if val in _FUNCS:
                arity, fn = _FUNCS[val]
                self.take("op", "(")
                args = [self.expr()]
                while self.peek() == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.take("op", ")")
                if len(args) != arity:
                    raise ExpressionError(f"{val} takes {arity} argument(s), got {len(args)}")
                return (fn, *args)
            if val not in self.variables:
                raise ExpressionError(
                    f"unknown name {val!r}; allowed variables: {', '.join(self.variables)}")
            return ("var", val)
        if (kind, val) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        raise ExpressionError(f"unexpected token {val!r}")


def _eval(node, env):
    head = node[0]
    if head == "const":
        return node[1]
    if head == "var":
        return env[node[1]]
    return head(*(_eval(arg, env) for arg in node[1:]))


def compile_expression(text: str, variables=("x", "y")) -> Callable:
    """Compile ``text`` into a function of ``variables`` (positional, in that order)."""
    tree = _Parser(text, tuple(variables)).parse()

    def fn(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} arguments")
        env = {name: np.asarray(a, dtype=float) for name, a in zip(variables, args)}
        with np.errstate(all="ignore"):
            return _eval(tree, env) * np.ones(np.broadcast_shapes(*(e.shape for e in env.values())))

    fn.expression = text
    return fn


def cost_from_expressions(c1: str, c2: str, c3: str, epsilon: float = 0.0) -> CostSpec:
    return CostSpec(compile_expression(c1, ("x", "y")),
                    compile_expression(c2, ("y", "z")),
                    compile_expression(c3, ("x", "z")),
                    epsilon, "expression")
