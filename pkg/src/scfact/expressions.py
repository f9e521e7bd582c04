"""Arithmetic expression trees over complex scalars.

Expressions are immutable trees of constants, variable references, the binary
operators ``+ - * / ^``, unary negation, and a fixed set of unary functions
(``exp ln sqrt sin cos abs re im conj``).  They are the substrate for every
equation definition in this package: right-hand sides, separable components,
and forcing sequences are all expression trees evaluated in IEEE
double-precision complex arithmetic.

Grammar (EBNF)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := unary ("^" factor)?
    unary  := "-" unary | atom
    atom   := NUMBER | "i" | IDENT | IDENT "(" expr ")" | "(" expr ")"
    IDENT  := [A-Za-z_][A-Za-z0-9_]*

``i`` is reserved for the imaginary unit and is never a variable.  Numeric
literals are decimal with an optional exponent; there is no implicit
multiplication.  Note that per this grammar the base of ``^`` may be a bare
negated atom, so ``-x^2`` denotes ``(-x)^2``.

Powers use the principal branch: ``w^c = exp(c*Log w)`` with ``Log`` the
principal logarithm, and ``0^c = 0`` when ``Re(c) > 0`` (a domain error
otherwise).  Evaluation is pure and deterministic; trees and bindings are
immutable and safe to share across threads.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExpressionError",
    "ParseError",
    "EvaluationError",
    "UnboundVariableError",
    "DomainError",
    "FUNCTIONS",
    "parse_expression",
    "evaluate",
    "format_expression",
    "substitute",
    "as_expression",
]

#: Function names accepted by the grammar's ``IDENT "(" expr ")"`` production.
FUNCTIONS = frozenset({"exp", "ln", "sqrt", "sin", "cos", "abs", "re", "im", "conj"})


class ExpressionError(Exception):
    """Base class for parse- and evaluation-time failures."""


class ParseError(ExpressionError):
    """Syntax error, reported with the byte offset of the offending token."""

    def __init__(self, message: str, offset: int, expected: str | None = None):
        self.offset = offset
        self.expected = expected
        text = f"syntax error at offset {offset}: {message}"
        if expected is not None:
            text += f" (expected {expected})"
        super().__init__(text)


class EvaluationError(ExpressionError):
    """Evaluation failure carrying the offending subexpression."""

    def __init__(self, message: str, node: "Expression | None" = None):
        self.node = node
        if node is not None:
            message = f"{message} in '{format_expression(node)}'"
        super().__init__(message)


class UnboundVariableError(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


ExprLike = Union["Expression", complex, float, int]


def as_expression(value: ExprLike) -> "Expression":
    """Coerce a number to a :class:`Const`; pass expressions through."""
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float, complex)):
        return Const(complex(value))
    raise TypeError(f"cannot treat {value!r} as an expression")


class Expression:
    """Abstract node.  Operator overloads build new trees without simplifying."""

    __slots__ = ()

    def free_variables(self) -> frozenset[str]:
        return frozenset(self._names())

    def _names(self) -> Iterator[str]:
        raise NotImplementedError

    def _eval(self, env: Mapping[str, complex]) -> complex:
        raise NotImplementedError

    def __add__(self, other: ExprLike) -> "BinOp":
        return BinOp("+", self, as_expression(other))

    def __radd__(self, other: ExprLike) -> "BinOp":
        return BinOp("+", as_expression(other), self)

    def __sub__(self, other: ExprLike) -> "BinOp":
        return BinOp("-", self, as_expression(other))

    def __rsub__(self, other: ExprLike) -> "BinOp":
        return BinOp("-", as_expression(other), self)

    def __mul__(self, other: ExprLike) -> "BinOp":
        return BinOp("*", self, as_expression(other))

    def __rmul__(self, other: ExprLike) -> "BinOp":
        return BinOp("*", as_expression(other), self)

    def __truediv__(self, other: ExprLike) -> "BinOp":
        return BinOp("/", self, as_expression(other))

    def __rtruediv__(self, other: ExprLike) -> "BinOp":
        return BinOp("/", as_expression(other), self)

    def __pow__(self, other: ExprLike) -> "BinOp":
        return BinOp("^", self, as_expression(other))

    def __neg__(self) -> "Neg":
        return Neg(self)

    def __str__(self) -> str:
        return format_expression(self)


@dataclass(frozen=True, slots=True)
class Const(Expression):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))

    def _names(self):
        return iter(())

    def _eval(self, env):
        return self.value


@dataclass(frozen=True, slots=True)
class Var(Expression):
    name: str

    def _names(self):
        yield self.name

    def _eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnboundVariableError(f"unbound variable '{self.name}'", self) from None


@dataclass(frozen=True, slots=True)
class Neg(Expression):
    operand: Expression

    def _names(self):
        yield from self.operand._names()

    def _eval(self, env):
        return -self.operand._eval(env)


@dataclass(frozen=True, slots=True)
class BinOp(Expression):
    op: str  # one of + - * / ^
    left: Expression
    right: Expression

    def _names(self):
        yield from self.left._names()
        yield from self.right._names()

    def _eval(self, env):
        a = self.left._eval(env)
        b = self.right._eval(env)
        op = self.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise DomainError("division by zero", self)
            return a / b
        return _power(a, b, self)


@dataclass(frozen=True, slots=True)
class Call(Expression):
    func: str
    arg: Expression

    def _names(self):
        yield from self.arg._names()

    def _eval(self, env):
        v = complex(self.arg._eval(env))
        f = self.func
        try:
            if f == "exp":
                return cmath.exp(v)
            if f == "ln":
                if v == 0:
                    raise DomainError("logarithm of zero", self)
                return cmath.log(v)
            if f == "sqrt":
                return cmath.sqrt(v)
            if f == "sin":
                return cmath.sin(v)
            if f == "cos":
                return cmath.cos(v)
            if f == "abs":
                return complex(abs(v))
            if f == "re":
                return complex(v.real)
            if f == "im":
                return complex(v.imag)
            if f == "conj":
                return v.conjugate()
        except OverflowError:
            raise DomainError(f"overflow in {f}", self) from None
        raise EvaluationError(f"unknown function '{f}'", self)


def _power(w, c, node: BinOp) -> complex:
    w = complex(w)
    c = complex(c)
    if w == 0:
        if c.real > 0:
            return 0j
        raise DomainError("zero base raised to exponent with non-positive real part", node)
    try:
        return w**c
    except (OverflowError, ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"power failed ({exc})", node) from None


def evaluate(expr: Expression, env: Mapping[str, complex]) -> complex:
    """Evaluate ``expr`` with every free variable bound in ``env``.

    Raises :class:`UnboundVariableError` for missing names and
    :class:`DomainError` for division by zero, ``ln(0)``, or a zero base
    raised to an exponent with non-positive real part; the error message
    names the offending subexpression.
    """
    return complex(expr._eval(env))


def substitute(expr: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expression trees (capture is not a concern:
    there are no binders)."""
    if isinstance(expr, Var):
        return mapping.get(expr.name, expr)
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Neg):
        return Neg(substitute(expr.operand, mapping))
    if isinstance(expr, BinOp):
        return BinOp(expr.op, substitute(expr.left, mapping), substitute(expr.right, mapping))
    if isinstance(expr, Call):
        return Call(expr.func, substitute(expr.arg, mapping))
    raise TypeError(f"not an expression: {expr!r}")


# ----------------------------------------------------------------------
# Tokenizer / recursive-descent parser
# ----------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # "number" | "ident" | "op" | "end"
    text: str
    pos: int  # character offset into the source


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(_Token("number", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], i))
            i = j
            continue
        if ch in "+-*/^()":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", _byte_offset(text, i))
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, tok: _Token, expected: str):
        found = repr(tok.text) if tok.kind != "end" else "end of input"
        raise ParseError(
            f"unexpected {found}", _byte_offset(self.text, tok.pos), expected=expected
        )

    def expect_op(self, op: str):
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            return self.advance()
        self.fail(tok, f"'{op}'")

    def parse(self) -> Expression:
        expr = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            self.fail(tok, "an operator or end of input")
        return expr

    def expr(self) -> Expression:
        node = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.advance()
                node = BinOp(tok.text, node, self.term())
            else:
                return node

    def term(self) -> Expression:
        node = self.factor()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*/":
                self.advance()
                node = BinOp(tok.text, node, self.factor())
            else:
                return node

    def factor(self) -> Expression:
        node = self.unary()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return BinOp("^", node, self.factor())
        return node

    def unary(self) -> Expression:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expression:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Const(complex(float(tok.text)))
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name == "i":
                return Const(1j)
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if name not in FUNCTIONS:
                    raise ParseError(
                        f"unknown function name '{name}'",
                        _byte_offset(self.text, tok.pos),
                    )
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(name, arg)
            return Var(name)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail(tok, "a number, a name, '-', or '('")


def parse_expression(text: str) -> Expression:
    """Parse ``text`` per the module grammar.

    Raises :class:`ParseError` with the byte offset of the first offending
    token and a description of what was expected there.
    """
    return _Parser(text).parse()


# ----------------------------------------------------------------------
# Formatter.  The output re-parses to an evaluation-equivalent tree; the
# parenthesization rules below preserve the exact operation sequence except
# for negated constants, which reappear as unary minus over a literal.
# ----------------------------------------------------------------------

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_UNARY, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5
_BINOP_LEVEL = {"+": _LEVEL_ADD, "-": _LEVEL_ADD, "*": _LEVEL_MUL, "/": _LEVEL_MUL, "^": _LEVEL_POW}


def _fmt_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt_imag(b: float) -> str:
    if b == 1:
        return "i"
    if b == -1:
        return "-i"
    return _fmt_real(b) + "*i"


def _format_const(v: complex) -> str:
    re, im = v.real, v.imag
    if im == 0:
        return _fmt_real(re)
    if re == 0:
        return _fmt_imag(im)
    sign = " - " if im < 0 else " + "
    return _fmt_real(re) + sign + _fmt_imag(abs(im))


def _level(expr: Expression) -> int:
    if isinstance(expr, (Var, Call)):
        return _LEVEL_ATOM
    if isinstance(expr, Neg):
        return _LEVEL_UNARY
    if isinstance(expr, BinOp):
        return _BINOP_LEVEL[expr.op]
    v = expr.value  # Const
    if v.imag == 0:
        return _LEVEL_ATOM if v.real >= 0 else _LEVEL_UNARY
    if v.real == 0:
        if v.imag == 1:
            return _LEVEL_ATOM
        if v.imag == -1:
            return _LEVEL_UNARY
        return _LEVEL_MUL
    return _LEVEL_ADD


def _wrap(expr: Expression, needs_parens: bool) -> str:
    s = _fmt(expr)
    return f"({s})" if needs_parens else s


def _fmt(expr: Expression) -> str:
    if isinstance(expr, Const):
        return _format_const(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.func}({_fmt(expr.arg)})"
    if isinstance(expr, Neg):
        inner = expr.operand
        needs = _level(inner) < _LEVEL_UNARY or (isinstance(inner, BinOp) and inner.op == "^")
        return "-" + _wrap(inner, needs)
    if isinstance(expr, BinOp):
        op = expr.op
        if op == "^":
            ls = _wrap(expr.left, _level(expr.left) < _LEVEL_ATOM)
            rs = _wrap(expr.right, _level(expr.right) < _LEVEL_UNARY)
            return f"{ls}^{rs}"
        lvl = _BINOP_LEVEL[op]
        ls = _wrap(expr.left, _level(expr.left) < lvl)
        rs = _wrap(expr.right, _level(expr.right) <= lvl)
        if op in "+-":
            return f"{ls} {op} {rs}"
        return f"{ls}{op}{rs}"
    raise TypeError(f"not an expression: {expr!r}")


def format_expression(expr: Expression) -> str:
    """Render ``expr`` as text that re-parses to an equivalent expression."""
    return _fmt(expr)


def format_complex(v: complex) -> str:
    """Render a scalar the way the formatter renders constants (``3 - 2*i``)."""
    return _format_const(complex(v))
