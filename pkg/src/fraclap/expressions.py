"""Arithmetic mini-language for coefficient functions of ``x``.

A small recursive-descent parser over ``{literals, x, pi, + - * /,
^ with rational exponents, sin, cos, sinh, cosh, tanh, exp}``, the
grammar configs use to describe beam coefficients ("cosh(x)",
"1.01+tanh(10*x)", "sin(2*pi*x)^2*(1+x)*(1-x)^2", ...).  Precedence is
``^`` above unary minus above ``* /`` above ``+ -``; binary operators
associate to the left.  ``print_expr`` emits a string whose reparse is
the identical AST, and ``eval_expr`` evaluates vectorized over numpy
arrays.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "BinOp",
    "Call",
    "Expr",
    "ExprError",
    "FUNCTIONS",
    "Lit",
    "Neg",
    "Pi",
    "Pow",
    "Var",
    "eval_expr",
    "expr_callable",
    "parse_expr",
    "print_expr",
]

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "tanh", "exp")

_NUMPY_FUNCS = {name: getattr(np, name) for name in FUNCTIONS}


class ExprError(ValueError):
    """Parse failure; ``offset`` is the byte position in the source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class Expr:
    """Base class of AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expr):
    """Nonnegative numeric literal (negative values come from Neg)."""

    value: float


@dataclass(frozen=True)
class Var(Expr):
    """The spatial variable ``x``."""


@dataclass(frozen=True)
class Pi(Expr):
    """The constant ``pi``."""


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    """Left-associative binary node; ``op`` is one of ``+ - * /``."""

    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    """Power with a rational constant exponent."""

    base: Expr
    exponent: Fraction


@dataclass(frozen=True)
class Call(Expr):
    """Application of one of the known function names."""

    func: str
    arg: Expr


# -- tokenizer -----------------------------------------------------------------


_OPERATORS = "+-*/^()"


def _tokenize(src):
    """Yield ``(kind, text, offset)``; kinds: num, name, op, end."""
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPERATORS:
            tokens.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ExprError(f"malformed number {text!r}", i) from None
            tokens.append(("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i))
            i = j
            continue
        raise ExprError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


# -- parser --------------------------------------------------------------------


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ExprError(f"expected {op!r}", offset)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected trailing input {text!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary())
            else:
                return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            node = Pow(node, self.exponent())
        return node

    def exponent(self):
        """Rational exponent: ``[-]int``, ``([-]int)`` or ``([-]int/int)``."""
        kind, text, offset = self.peek()
        if kind == "op" and text == "(":
            self.advance()
            num = self._signed_int()
            den = 1
            kind, text, _ = self.peek()
            if kind == "op" and text == "/":
                self.advance()
                den = self._unsigned_int()
            self.expect_op(")")
            return Fraction(num, den)
        return Fraction(self._signed_int(), 1)

    def _signed_int(self):
        kind, text, offset = self.peek()
        sign = 1
        if kind == "op" and text == "-":
            self.advance()
            sign = -1
        return sign * self._unsigned_int()

    def _unsigned_int(self):
        kind, text, offset = self.peek()
        if kind != "num" or not text.isdigit():
            raise ExprError("exponents must be integers or (p/q)", offset)
        self.advance()
        return int(text)

    def atom(self):
        kind, text, offset = self.advance()
        if kind == "num":
            return Lit(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if text == "pi":
                return Pi()
            if text in _NUMPY_FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            raise ExprError(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprError(
            f"expected a number, name or '(', found {text or 'end'!r}",
            offset,
        )


def parse_expr(src):
    """Parse the mini-language into an AST.

    Raises
    ------
    ExprError
        Syntax error or unknown identifier, with the byte offset.
    """
    if not src or not src.strip():
        raise ExprError("empty expression", 0)
    return _Parser(src).parse()


# -- printer -------------------------------------------------------------------

# Precedence levels for parenthesization: addition 0, multiplication 1,
# unary minus 2, power 3, atoms 4.  A child is wrapped when its level is
# below what its grammar slot requires; right operands of the
# left-associative binaries require strictly more than the operator
# itself.

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POW, _LEVEL_ATOM = 0, 1, 2, 3, 4


def _level(node):
    if isinstance(node, BinOp):
        return _LEVEL_ADD if node.op in "+-" else _LEVEL_MUL
    if isinstance(node, Neg):
        return _LEVEL_NEG
    if isinstance(node, Lit) and node.value < 0.0:
        return _LEVEL_NEG  # prints with a leading '-', binds like Neg
    if isinstance(node, Pow):
        return _LEVEL_POW
    return _LEVEL_ATOM


def _print_at(node, min_level):
    text = _print(node)
    if _level(node) < min_level:
        return f"({text})"
    return text


def _print(node):
    if isinstance(node, Lit):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Neg):
        return "-" + _print_at(node.arg, _LEVEL_NEG)
    if isinstance(node, BinOp):
        if node.op in "+-":
            lo, hi = _LEVEL_ADD, _LEVEL_MUL
        else:
            lo, hi = _LEVEL_MUL, _LEVEL_NEG
        return (_print_at(node.left, lo) + node.op
                + _print_at(node.right, hi))
    if isinstance(node, Pow):
        e = node.exponent
        etext = str(e.numerator) if e.denominator == 1 else f"({e})"
        return _print_at(node.base, _LEVEL_ATOM) + "^" + etext
    if isinstance(node, Call):
        return f"{node.func}({_print(node.arg)})"
    raise TypeError(f"not an Expr node: {node!r}")


def print_expr(node):
    """Render the AST so that ``parse_expr(print_expr(e)) == e``.

    The identity holds for every parser-producible AST (in particular,
    literal values are nonnegative and finite; a sign is a Neg node).
    """
    return _print(node)


# -- evaluation ----------------------------------------------------------------


def eval_expr(node, x):
    """Evaluate at ``x`` (scalar or ndarray), deterministically."""
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Var):
        return np.asarray(x, dtype=float)
    if isinstance(node, Pi):
        return np.pi
    if isinstance(node, Neg):
        return -eval_expr(node.arg, x)
    if isinstance(node, BinOp):
        left = eval_expr(node.left, x)
        right = eval_expr(node.right, x)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    if isinstance(node, Pow):
        base = eval_expr(node.base, x)
        e = node.exponent
        if e.denominator == 1:
            return np.power(base, int(e))
        return np.power(base, float(e))
    if isinstance(node, Call):
        return _NUMPY_FUNCS[node.func](eval_expr(node.arg, x))
    raise TypeError(f"not an Expr node: {node!r}")


def expr_callable(node):
    """The AST as a vectorized ``f(x)`` returning arrays shaped like x."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(eval_expr(node, x)), x.shape).copy()

    return f
