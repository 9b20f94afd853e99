"""Recursive-descent parser for the expression grammar.

Grammar (whitespace insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary (("^" | "**") unary)?
    primary := NUMBER | call | IDENT | "(" expr ")"
    call    := IDENT "'"* "(" expr ("," expr)* ")"

Identifiers matching ``z``, ``z_x``, ``z_xt``, ... are jet coordinates (the
letters after the underscore are counted, so ``z_tx`` is ``z_xt``).  Names
of abstract functions may be written with or without an argument and carry
their derivative order as trailing primes: ``rho``, ``rho'``, ``rho''(z)``.
Numbers are exact: ``0.5`` parses to ``1/2``.
"""

from __future__ import annotations

import re
from typing import Iterable

import sympy as sp

from .errors import ParseError, UnknownFunction
from .expr import ABSTRACT_FUNCTIONS, Z, abstract, jet, parse_jet_name, symbol

BUILTINS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "exp": sp.exp,
    "ln": sp.log,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
    "atan": sp.atan,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
    "sech": sp.sech,
}

CONSTANTS = {"pi": sp.pi}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^(),'])
    """,
    re.VERBOSE,
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos, src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, functions: frozenset[str]):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.functions = functions

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, tok[2], self.src)

    def accept(self, *values):
        kind, text, _ = self.tok
        if kind == "op" and text in values:
            self.i += 1
            return text
        return None

    def expect(self, value):
        if self.accept(value) is None:
            found = self.tok[1] or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}")

    def parse(self):
        if self.tok[0] == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.tok[0] != "end":
            raise self.error(f"unexpected token {self.tok[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while True:
            op = self.accept("+", "-")
            if op is None:
                return e
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs

    def term(self):
        e = self.unary()
        while True:
            op = self.accept("*", "/")
            if op is None:
                return e
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs

    def unary(self):
        op = self.accept("-", "+")
        if op == "-":
            return -self.unary()
        if op == "+":
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.accept("^", "**"):
            return base ** self.unary()
        return base

    def primary(self):
        kind, text, _ = tok = self.tok
        if kind == "number":
            self.i += 1
            return sp.Rational(text)
        if kind == "ident":
            self.i += 1
            return self.identifier(text, tok)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        found = text or "end of input"
        raise self.error(f"unexpected token {found!r}")

    def call_args(self):
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        return args

    def identifier(self, name, tok):
        primes = 0
        while self.accept("'"):
            primes += 1
        has_call = self.accept("(") is not None
        if name in self.functions:
            arg = Z
            if has_call:
                args = self.call_args()
                if len(args) != 1:
                    raise self.error(f"{name} takes one argument", tok)
                arg = args[0]
            return abstract(name, primes, arg)
        if primes:
            raise self.error(f"unknown function {name!r}", tok, UnknownFunction)
        if has_call:
            if name not in BUILTINS:
                raise self.error(f"unknown function {name!r}", tok, UnknownFunction)
            args = self.call_args()
            if len(args) != 1:
                raise self.error(f"{name} takes one argument", tok)
            return BUILTINS[name](args[0])
        if name in BUILTINS:
            raise self.error(f"function {name!r} needs an argument", tok)
        if name in CONSTANTS:
            return CONSTANTS[name]
        order = parse_jet_name(name)
        if order is not None:
            return jet(*order)
        return symbol(name)


def parse_expr(src: str, functions: Iterable[str] = ()) -> sp.Expr:
    """Parse ``src`` into a sympy expression.

    ``functions`` declares abstract function names in addition to
    :data:`pseudosurf.expr.ABSTRACT_FUNCTIONS`.
    """
    if not isinstance(src, str):
        return sp.sympify(src)
    names = ABSTRACT_FUNCTIONS | frozenset(functions)
    return _Parser(src, names).parse()
