"""Closed expression grammar for config-supplied data functions.

Variables x, y, r (= sqrt(x^2 + y^2)) and the constant pi; operators
+ - * / ^ with usual precedence (^ binds tightest, right-associative);
functions sin, cos, exp, abs; numeric literals; parentheses.  No names
outside this list evaluate, so configs stay reproducible and inert.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ConfigurationError

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|([A-Za-z_]\w*)|(\*\*|[-+*/^()]))")

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}
_CONSTS = {"pi": math.pi}
_VARS = ("x", "y", "r")


def _tokenize(text: str):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ConfigurationError(
                f"bad character in expression at position {pos}: {text[pos:]!r}")
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif name is not None:
            out.append(("name", name))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        k, v = self.toks[self.i]
        if (kind is not None and k != kind) or (value is not None and v != value):
            raise ConfigurationError(
                f"unexpected token {v!r} in expression {self.text!r}")
        self.i += 1
        return v

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise ConfigurationError(
                f"trailing input in expression {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take("op")
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take("op")
            node = (op, node, self.factor())
        return node

    def factor(self):
        node = self.unary()
        if self.peek() == ("op", "^"):
            self.take("op")
            node = ("^", node, self.factor())      # right-associative
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take("op")
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.take("op")
            return self.unary()
        return self.atom()

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return ("num", val)
        if kind == "name":
            self.take()
            if val in _FUNCS:
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                return ("call", val, arg)
            if val in _CONSTS:
                return ("num", _CONSTS[val])
            if val in _VARS:
                return ("var", val)
            raise ConfigurationError(f"unknown name {val!r} in expression")
        if (kind, val) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        raise ConfigurationError(f"unexpected token {val!r} in expression")


def _eval(node, env):
    op = node[0]
    if op == "num":
        return node[1]
    if op == "var":
        return env[node[1]]
    if op == "neg":
        return -_eval(node[1], env)
    if op == "call":
        return _FUNCS[node[1]](_eval(node[2], env))
    a = _eval(node[1], env)
    b = _eval(node[2], env)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return np.power(a, b)


def compile_expression(text: str):
    """Compile to ``fn(x, y)`` operating on scalars or arrays."""
    ast = _Parser(text).parse()

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = _eval(ast, {"x": x, "y": y, "r": np.hypot(x, y)})
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy() \
            if np.ndim(out) == 0 else out

    return fn


def compile_radial(text: str):
    """Compile to ``fn(r)``: the expression evaluated along the positive x-axis."""
    fn = compile_expression(text)
    return lambda r: fn(np.asarray(r, dtype=float), np.zeros_like(np.asarray(r, dtype=float)))
