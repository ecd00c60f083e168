"""Exact Laurent-polynomial arithmetic over the rationals.

This is the coefficient algebra for every stencil entry: multivariate
Laurent polynomials in the four fixed symbols D (diffusivity), tau
(relaxation time), dt (time step) and dx (space step), with
arbitrary-precision rational coefficients.  Everything here is exact --
no floats are accepted or produced.

Square roots are never represented: whenever a derivation needs
dx = sqrt(...), the caller works with dx^2 as a composite quantity (see
:meth:`LaurentPoly.substitute_squared`), so the algebra stays a true
Laurent ring over Q.
"""

from __future__ import annotations

from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Tuple, Union

from .errors import (
    NonIntegerExponentError,
    NonInvertibleSubstitution,
    SchemeSyntaxError,
    UnknownSymbolError,
)

__all__ = [
    "SymbolId",
    "Monomial",
    "LaurentPoly",
    "D",
    "TAU",
    "DT",
    "DX",
    "ONE",
    "ZERO",
    "parse_poly",
]


class SymbolId(IntEnum):
    """The closed set of four symbols; the value is the exponent-vector slot."""

    DIFFUSIVITY = 0
    RELAX_TIME = 1
    TIME_STEP = 2
    SPACE_STEP = 3

    @property
    def text(self) -> str:
        return _SYMBOL_TEXT[self]


_SYMBOL_TEXT = {
    SymbolId.DIFFUSIVITY: "D",
    SymbolId.RELAX_TIME: "tau",
    SymbolId.TIME_STEP: "dt",
    SymbolId.SPACE_STEP: "dx",
}

SYMBOL_BY_TEXT = {text: sym for sym, text in _SYMBOL_TEXT.items()}

# A monomial is identified by its integer exponent 4-vector, one slot per
# SymbolId; negative exponents are allowed.
Monomial = Tuple[int, int, int, int]

_UNIT: Monomial = (0, 0, 0, 0)

Rat = Union[int, Fraction]


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"exact coefficient required, got {type(value).__name__}")
    return Fraction(value)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


def _mono_neg(a: Monomial) -> Monomial:
    return (-a[0], -a[1], -a[2], -a[3])


class LaurentPoly:
    """An immutable Laurent polynomial in normal form (no zero terms)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Union[Mapping[Monomial, Rat], Iterable[tuple]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, Fraction] = {}
        for mono, coeff in items:
            mono = tuple(mono)
            if len(mono) != 4 or not all(isinstance(e, int) for e in mono):
                raise ValueError(f"bad exponent vector: {mono!r}")
            c = acc.get(mono, Fraction(0)) + _as_fraction(coeff)
            if c:
                acc[mono] = c
            elif mono in acc:
                del acc[mono]
        object.__setattr__(self, "_terms", acc)

    def __setattr__(self, name, value):
        raise AttributeError("LaurentPoly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls()

    @classmethod
    def one(cls) -> "LaurentPoly":
        return cls({_UNIT: 1})

    @classmethod
    def constant(cls, value: Rat) -> "LaurentPoly":
        return cls({_UNIT: value})

    @classmethod
    def symbol(cls, sym: SymbolId, exponent: int = 1) -> "LaurentPoly":
        exps = [0, 0, 0, 0]
        exps[sym] = exponent
        return cls({tuple(exps): 1})

    @classmethod
    def term(cls, coeff: Rat, exps: Monomial) -> "LaurentPoly":
        return cls({tuple(exps): coeff})

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in canonical order: ascending lexicographic exponent vectors."""
        return sorted(self._terms.items())

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return not self._terms or set(self._terms) == {_UNIT}

    def as_constant(self) -> Fraction:
        if not self._terms:
            return Fraction(0)
        if set(self._terms) != {_UNIT}:
            raise ValueError(f"not a constant: {self}")
        return self._terms[_UNIT]

    @property
    def is_single_term(self) -> bool:
        return len(self._terms) == 1

    def single_term(self) -> tuple[Monomial, Fraction]:
        if len(self._terms) != 1:
            raise ValueError(f"not a single term: {self}")
        return next(iter(self._terms.items()))

    def uses(self, sym: SymbolId) -> bool:
        return any(mono[sym] for mono in self._terms)

    def exponents_of(self, sym: SymbolId) -> set[int]:
        return {mono[sym] for mono in self._terms}

    # -- ring operations ---------------------------------------------------

    @staticmethod
    def _coerce(other):
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return LaurentPoly.constant(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        acc = dict(self._terms)
        for mono, coeff in other._terms.items():
            c = acc.get(mono, Fraction(0)) + coeff
            if c:
                acc[mono] = c
            elif mono in acc:
                del acc[mono]
        return LaurentPoly(acc)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        acc: dict[Monomial, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                mono = _mono_mul(ma, mb)
                c = acc.get(mono, Fraction(0)) + ca * cb
                if c:
                    acc[mono] = c
                elif mono in acc:
                    del acc[mono]
        return LaurentPoly(acc)

    __rmul__ = __mul__

    def inverted(self) -> "LaurentPoly":
        """Multiplicative inverse; defined only for single-term polynomials."""
        if self.is_zero:
            raise ZeroDivisionError("cannot invert the zero polynomial")
        if not self.is_single_term:
            raise ValueError(f"cannot invert a sum of terms: {self}")
        mono, coeff = self.single_term()
        return LaurentPoly({_mono_neg(mono): Fraction(1, 1) / coeff})

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverted()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverted()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("exponent must be an integer")
        if n < 0:
            return self.inverted() ** (-n)
        result = LaurentPoly.one()
        for _ in range(n):
            result = result * self
        return result

    # -- equality / hashing ------------------------------------------------

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self.is_constant:
            return hash(self.as_constant())
        return hash(frozenset(self._terms.items()))

    def __bool__(self):
        return bool(self._terms)

    # -- substitution / evaluation ------------------------------------------

    def substitute(self, bindings: Mapping[SymbolId, Union["LaurentPoly", Rat]]) -> "LaurentPoly":
        """Replace bound symbols by polynomials; unbound symbols pass through.

        A negative power of a bound symbol requires the replacement to be an
        invertible single monomial, otherwise NonInvertibleSubstitution.
        """
        reps = {}
        for sym, value in bindings.items():
            rep = self._coerce(value)
            if rep is None:
                raise TypeError(f"cannot bind {sym!r} to {value!r}")
            reps[SymbolId(sym)] = rep
        result = LaurentPoly.zero()
        for mono, coeff in self._terms.items():
            factor = LaurentPoly.constant(coeff)
            for sym in SymbolId:
                e = mono[sym]
                if e == 0:
                    continue
                if sym in reps:
                    try:
                        factor = factor * (reps[sym] ** e)
                    except ValueError as exc:
                        raise NonInvertibleSubstitution(
                            f"binding for {sym.text} must be a single monomial to "
                            f"substitute into {sym.text}^{e}: {reps[sym]}"
                        ) from exc
                else:
                    factor = factor * LaurentPoly.symbol(sym, e)
            result = result + factor
        return result

    def substitute_squared(self, sym: SymbolId, replacement: Union["LaurentPoly", Rat]) -> "LaurentPoly":
        """Replace sym^2 by ``replacement``; every exponent of sym must be even.

        This is how square-root constraints are carried: a binding for dx^2
        never mentions dx itself.
        """
        rep = self._coerce(replacement)
        if rep is None:
            raise TypeError(f"cannot bind {sym.text}^2 to {replacement!r}")
        result = LaurentPoly.zero()
        for mono, coeff in self._terms.items():
            e = mono[sym]
            if e % 2:
                raise ValueError(
                    f"odd exponent {sym.text}^{e} cannot take a squared substitution"
                )
            rest = list(mono)
            rest[sym] = 0
            factor = LaurentPoly.term(coeff, tuple(rest))
            if e:
                try:
                    factor = factor * (rep ** (e // 2))
                except ValueError as exc:
                    raise NonInvertibleSubstitution(
                        f"binding for {sym.text}^2 must be a single monomial to "
                        f"substitute into {sym.text}^{e}: {rep}"
                    ) from exc
            result = result + factor
        return result

    def evaluate(self, values: Mapping[SymbolId, Rat]) -> Fraction:
        """Exact rational value with all four symbols bound to positive rationals."""
        bound = {}
        for sym in SymbolId:
            if sym not in values:
                raise ValueError(f"no value for symbol {sym.text}")
            v = _as_fraction(values[sym])
            if v <= 0:
                raise ValueError(f"symbol {sym.text} must be positive, got {v}")
            bound[sym] = v
        total = Fraction(0)
        for mono, coeff in self._terms.items():
            value = coeff
            for sym in SymbolId:
                if mono[sym]:
                    value *= bound[sym] ** mono[sym]
            total += value
        return total

    # -- rendering -----------------------------------------------------------

    def render(self) -> str:
        """Canonical text form, e.g. ``1 - 3*D*tau*dx^-2``; parse_poly inverts it."""
        if not self._terms:
            return "0"
        chunks: list[str] = []
        for mono, coeff in self.sorted_terms():
            body = _render_term(mono, abs(coeff))
            if not chunks:
                chunks.append(body if coeff > 0 else f"-{body}")
            else:
                chunks.append(f" + {body}" if coeff > 0 else f" - {body}")
        return "".join(chunks)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"LaurentPoly({self.render()!r})"


def _render_term(mono: Monomial, coeff: Fraction) -> str:
    parts = []
    for sym in SymbolId:
        e = mono[sym]
        if e == 1:
            parts.append(sym.text)
        elif e:
            parts.append(f"{sym.text}^{e}")
    if not parts:
        return str(coeff)
    if coeff == 1:
        return "*".join(parts)
    return "*".join([str(coeff)] + parts)


D = LaurentPoly.symbol(SymbolId.DIFFUSIVITY)
TAU = LaurentPoly.symbol(SymbolId.RELAX_TIME)
DT = LaurentPoly.symbol(SymbolId.TIME_STEP)
DX = LaurentPoly.symbol(SymbolId.SPACE_STEP)
ONE = LaurentPoly.one()
ZERO = LaurentPoly.zero()


# ---------------------------------------------------------------------------
# Tokenizer and expression parser.  The scheme DSL reuses both; on its own
# this module only needs them for the parse(render(p)) round trip.
# ---------------------------------------------------------------------------


class Token(NamedTuple):
    kind: str  # "num" | "ident" | "op" | "eof"
    text: str
    line: int
    column: int


_PUNCT = set("+-*/^(){},:;=")


def tokenize(source: str) -> list[Token]:
    """Split source text into tokens, skipping whitespace and # comments."""
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("num", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("ident", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch in _PUNCT:
            tokens.append(Token("op", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise SchemeSyntaxError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class ExprParser:
    """Recursive-descent parser for exact rational expressions over the
    symbols D, tau, dt, dx with integer powers, ``* / + -`` and parentheses.
    """

    def __init__(self, tokens: list[Token], pos: int = 0, allowed_symbols=None):
        self.tokens = tokens
        self.pos = pos
        # None means "all four"; otherwise a set of permitted symbol texts.
        self.allowed_symbols = allowed_symbols

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> SchemeSyntaxError:
        tok = tok or self.peek()
        return SchemeSyntaxError(message, tok.line, tok.column)

    def expect_op(self, op: str) -> Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            shown = tok.text if tok.kind != "eof" else "end of input"
            raise self.error(f"expected '{op}', found {shown!r}")
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in ops

    # expr := term (('+'|'-') term)*
    def parse_expr(self) -> LaurentPoly:
        value = self.parse_term()
        while self.at_op("+", "-"):
            op = self.advance().text
            rhs = self.parse_term()
            value = value + rhs if op == "+" else value - rhs
        return value

    # term := factor (('*'|'/') factor)*
    def parse_term(self) -> LaurentPoly:
        value = self.parse_factor()
        while self.at_op("*", "/"):
            tok = self.advance()
            rhs = self.parse_factor()
            if tok.text == "*":
                value = value * rhs
            else:
                try:
                    value = value / rhs
                except ZeroDivisionError:
                    raise self.error("division by zero", tok) from None
                except ValueError:
                    raise self.error(
                        "can only divide by a single monomial term", tok
                    ) from None
        return value

    # factor := ('+'|'-')* atom ('^' exponent)?
    def parse_factor(self) -> LaurentPoly:
        sign = 1
        while self.at_op("+", "-"):
            if self.advance().text == "-":
                sign = -sign
        value = self.parse_atom()
        if self.at_op("^"):
            caret = self.advance()
            exponent = self._parse_exponent(caret)
            try:
                value = value ** exponent
            except ValueError:
                raise self.error(
                    "cannot raise a sum of terms to a negative power", caret
                ) from None
        return value if sign > 0 else -value

    def parse_atom(self) -> LaurentPoly:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return LaurentPoly.constant(int(tok.text))
        if tok.kind == "ident":
            if tok.text not in SYMBOL_BY_TEXT:
                raise UnknownSymbolError(
                    f"unknown symbol {tok.text!r} (expected one of D, tau, dt, dx)",
                    tok.line,
                    tok.column,
                )
            if self.allowed_symbols is not None and tok.text not in self.allowed_symbols:
                raise UnknownSymbolError(
                    f"symbol {tok.text!r} is not declared in params",
                    tok.line,
                    tok.column,
                )
            self.advance()
            return LaurentPoly.symbol(SYMBOL_BY_TEXT[tok.text])
        if self.at_op("("):
            self.advance()
            value = self.parse_expr()
            self.expect_op(")")
            return value
        shown = tok.text if tok.kind != "eof" else "end of input"
        raise self.error(f"expected a number, symbol or '(', found {shown!r}")

    def _parse_exponent(self, caret: Token) -> int:
        sign = 1
        while self.at_op("+", "-"):
            if self.advance().text == "-":
                sign = -sign
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return sign * int(tok.text)
        if self.at_op("("):
            self.advance()
            value = self.parse_expr()
            self.expect_op(")")
            if not value.is_constant:
                raise NonIntegerExponentError(
                    "exponent must be an integer constant", caret.line, caret.column
                )
            const = value.as_constant()
            if const.denominator != 1:
                raise NonIntegerExponentError(
                    f"exponent must be an integer, got {const}", caret.line, caret.column
                )
            return sign * const.numerator
        raise NonIntegerExponentError(
            "exponent must be an integer constant", caret.line, caret.column
        )


def parse_poly(text: str) -> LaurentPoly:
    """Parse the canonical rendering back into a polynomial."""
    tokens = tokenize(text)
    parser = ExprParser(tokens)
    value = parser.parse_expr()
    tail = parser.peek()
    if tail.kind != "eof":
        raise parser.error(f"unexpected trailing input {tail.text!r}")
    return value
