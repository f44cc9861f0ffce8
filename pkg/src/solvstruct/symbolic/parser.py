"""Recursive-descent parser for the expression grammar.

Grammar:
    expr     := term (('+'|'-') term)*
    term     := factor (('*'|'/') factor)*
    factor   := base ('^' factor)?
    base     := NUMBER | SYMBOL | FUNC '(' expr ')' | 'intg' '(' expr ',' SYMBOL ')'
              | '(' expr ')' | '-' factor
    NUMBER   := integer or decimal
    SYMBOL   := [a-zA-Z][a-zA-Z0-9_]*

Rational literals like 3/4 come out of constant folding of the division.
`intg(f, x)` denotes an unevaluated integral of f in x.
"""
from __future__ import annotations

from fractions import Fraction

from .expr import FUNCTIONS, Expr, add, call, const, div, integral, mul, neg, power, sym


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__("%s (at position %d)" % (message, pos))
        self.pos = pos


_OPS = set("+-*/^(),")


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ParseError("unexpected character %r" % ch, i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise ParseError("expected %r, found %r" % (kind, tok[1] or "end of input"), tok[2])
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError("unexpected trailing input %r" % tok[1], tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, neg(rhs))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self) -> Expr:
        b = self.base()
        if self.peek()[0] == "^":
            self.advance()
            e = self.factor()
            return power(b, e)
        return b

    def base(self) -> Expr:
        tok = self.advance()
        kind, val, at = tok
        if kind == "-":
            return neg(self.factor())
        if kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "num":
            if "." in val:
                return const(Fraction(val))
            return const(int(val))
        if kind == "name":
            if self.peek()[0] == "(":
                if val == "intg":
                    self.advance()
                    f = self.expr()
                    self.expect(",")
                    vtok = self.expect("name")
                    self.expect(")")
                    return integral(f, vtok[1])
                if val not in FUNCTIONS:
                    raise ParseError("unknown function %r" % val, at)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return call(val, arg)
            return sym(val)
        raise ParseError("unexpected token %r" % (val or "end of input"), at)


def parse(text: str) -> Expr:
    """Parse `text` into a canonical expression."""
    return _Parser(text).parse()
