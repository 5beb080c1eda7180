"""A small arithmetic-expression grammar for user-defined scalar functions.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' factor)?   # '^' right-associative
    base   := number | 't' | '(' expr ')' | func '(' expr ')'
    func   := 'exp' | 'log' | 'abs' | 'sqrt'

Unary minus binds looser than '^' (so ``-t^2`` means ``-(t^2)`` and
``exp(-t^2)`` is a decaying bump, the conventional reading).

The single variable is always named ``t``.  Evaluation is plain double
arithmetic through numpy ufuncs, so parsed functions accept scalars and
arrays alike.
"""

from __future__ import annotations

import re

import numpy as np

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCS = {"exp": np.exp, "log": np.log, "abs": np.abs, "sqrt": np.sqrt}


class ParseError(ValueError):
    """Syntax error with the byte offset and the expected tokens."""

    def __init__(self, message: str, position: int, expected: str = ""):
        self.position = position
        self.expected = expected
        detail = f"{message} at offset {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class _Tokens:
    def __init__(self, src: str):
        self.src = src
        self.items = []
        pos = 0
        src = src.rstrip()
        while pos < len(src):
            m = _TOKEN_RE.match(src, pos)
            if m is None or m.end() == pos:
                stripped = src[pos:].lstrip()
                at = len(src) - len(stripped)
                raise ParseError(f"unrecognized input {stripped[:8]!r}", at)
            if m.lastgroup is not None:
                self.items.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
            pos = m.end()
        self.i = 0

    def peek(self):
        if self.i < len(self.items):
            return self.items[self.i]
        return ("eof", "", len(self.src))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok


def _parse_expr(tk: _Tokens):
    node = _parse_term(tk)
    while True:
        kind, text, _ = tk.peek()
        if kind == "op" and text in "+-":
            tk.next()
            rhs = _parse_term(tk)
            node = (np.add, node, rhs) if text == "+" else (np.subtract, node, rhs)
        else:
            return node


def _parse_term(tk: _Tokens):
    node = _parse_factor(tk)
    while True:
        kind, text, _ = tk.peek()
        if kind == "op" and text in "*/":
            tk.next()
            rhs = _parse_factor(tk)
            node = (np.multiply, node, rhs) if text == "*" else (np.divide, node, rhs)
        else:
            return node


def _parse_factor(tk: _Tokens):
    kind, text, _ = tk.peek()
    if kind == "op" and text == "-":
        tk.next()
        return (np.negative, _parse_factor(tk))
    node = _parse_base(tk)
    kind, text, _ = tk.peek()
    if kind == "op" and text == "^":
        tk.next()
        exponent = _parse_factor(tk)  # right-associative
        node = (np.power, node, exponent)
    return node


def _parse_base(tk: _Tokens):
    kind, text, pos = tk.next()
    if kind == "num":
        return float(text)
    if kind == "name":
        if text == "t":
            return "t"
        if text in _FUNCS:
            k2, t2, p2 = tk.peek()
            if not (k2 == "op" and t2 == "("):
                raise ParseError(f"function {text!r} takes one parenthesized argument", p2, "'('")
            tk.next()
            arg = _parse_expr(tk)
            k3, t3, p3 = tk.next()
            if not (k3 == "op" and t3 == ")"):
                raise ParseError("unbalanced function call", p3, "')'")
            return (_FUNCS[text], arg)
        raise ParseError(f"unknown identifier {text!r}", pos, "'t' or exp/log/abs/sqrt")
    if kind == "op" and text == "(":
        node = _parse_expr(tk)
        k2, t2, p2 = tk.next()
        if not (k2 == "op" and t2 == ")"):
            raise ParseError("unbalanced parenthesis", p2, "')'")
        return node
    raise ParseError(f"unexpected token {text!r}" if text else "unexpected end of input",
                     pos, "number, 't', '(' or function")


def _evaluate(node, t):
    if isinstance(node, float):
        return node
    if node == "t":
        return t
    fn = node[0]
    args = [_evaluate(a, t) for a in node[1:]]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return fn(*args)


def parse_expression(src: str):
    """Parse ``src`` and return a callable f(t) (scalar or ndarray in, same out).

    Raises ParseError with a byte offset on malformed input.
    """
    if not src or not src.strip():
        raise ParseError("empty expression", 0)
    tk = _Tokens(src)
    tree = _parse_expr(tk)
    kind, text, pos = tk.peek()
    if kind != "eof":
        raise ParseError(f"trailing input {text!r}", pos, "end of expression")

    def fn(t):
        return _evaluate(tree, np.asarray(t, dtype=float) if np.ndim(t) else float(t))

    fn.source = src
    return fn
