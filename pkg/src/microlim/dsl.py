"""A small text language for user-defined schemes.

A ``.scheme`` file declares derivative templates (offset -> coefficient
expressions) and exactly one scheme combining templates, local or built
in, into  coeff * template +/- ... = 0.  Coefficients are exact rational
expressions over D, tau, dt, dx; whitespace is free, ``#`` starts a line
comment.

Example::

    params D, tau;

    template wide_t for ut {
      (1, 0): 1/dt;
      (0, 0): -1/dt;
    }

    scheme {
      tau * central_second_t
      + wide_t
      - D * dufort_frankel_xx
      = 0
    }

Every diagnostic carries a 1-based line and column.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import (
    SchemeSyntaxError,
    UnknownSymbolError,
    UnresolvedTemplateError,
)
from .laurent import SYMBOL_BY_TEXT, ExprParser, LaurentPoly, Token, tokenize
from .stencil import (
    Derivative,
    DerivativeTemplate,
    GridOffset,
    SchemeSpec,
    Stencil,
    assemble,
    builtin_template,
    builtin_template_names,
)

__all__ = [
    "SchemeFile",
    "parse_scheme",
    "render_scheme",
    "random_scheme_file",
]

_KEYWORDS = frozenset({"template", "for", "scheme", "params"})
_TARGETS = {d.value: d for d in Derivative}
_PARAM_NAMES = frozenset({"D", "tau"})


@dataclass(frozen=True)
class SchemeFile:
    """A parsed scheme file: local templates, the scheme's terms (by
    template name), and the optional declared parameter set."""

    templates: Mapping[str, DerivativeTemplate]
    terms: tuple[tuple[LaurentPoly, str], ...]
    params: Optional[frozenset[str]] = None

    def __post_init__(self):
        object.__setattr__(self, "templates", dict(self.templates))
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.params is not None:
            bad = set(self.params) - _PARAM_NAMES
            if bad:
                raise ValueError(f"params may only declare D and tau, not {sorted(bad)}")
            object.__setattr__(self, "params", frozenset(self.params))
        for _, name in self.terms:
            self.resolve(name)

    def resolve(self, name: str) -> DerivativeTemplate:
        if name in self.templates:
            return self.templates[name]
        try:
            return builtin_template(name)
        except Exception:
            raise UnresolvedTemplateError(
                f"scheme references unknown template {name!r}", 0, 0
            ) from None

    def scheme_spec(self) -> SchemeSpec:
        return SchemeSpec([(coeff, self.resolve(name)) for coeff, name in self.terms])

    def assemble(self) -> Stencil:
        return assemble(self.scheme_spec())

    def __eq__(self, other):
        if not isinstance(other, SchemeFile):
            return NotImplemented
        return (
            dict(self.templates) == dict(other.templates)
            and self.terms == other.terms
            and self.params == other.params
        )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _FileParser(ExprParser):
    def __init__(self, tokens: list[Token]):
        super().__init__(tokens)
        self.templates: dict[str, DerivativeTemplate] = {}
        self.terms: Optional[list[tuple[LaurentPoly, str]]] = None
        self.params: Optional[frozenset[str]] = None

    # -- helpers ---------------------------------------------------------

    def expect_ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            shown = tok.text if tok.kind != "eof" else "end of input"
            raise self.error(f"expected {what}, found {shown!r}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        tok = self.expect_ident(f"keyword {word!r}")
        if tok.text != word:
            raise SchemeSyntaxError(
                f"expected keyword {word!r}, found {tok.text!r}", tok.line, tok.column
            )
        return tok

    def parse_int_offset(self) -> int:
        sign = 1
        while self.at_op("+", "-"):
            if self.advance().text == "-":
                sign = -sign
        tok = self.peek()
        if tok.kind != "num":
            shown = tok.text if tok.kind != "eof" else "end of input"
            raise self.error(f"expected an integer offset, found {shown!r}")
        self.advance()
        return sign * int(tok.text)

    # -- grammar ---------------------------------------------------------

    def parse_file(self) -> SchemeFile:
        first = True
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind != "ident":
                raise self.error(
                    f"expected 'params', 'template' or 'scheme', found {tok.text!r}"
                )
            if tok.text == "params":
                if not first:
                    raise SchemeSyntaxError(
                        "params declaration must come first", tok.line, tok.column
                    )
                if self.params is not None:
                    raise SchemeSyntaxError(
                        "duplicate params declaration", tok.line, tok.column
                    )
                self.parse_params()
            elif tok.text == "template":
                self.parse_template()
            elif tok.text == "scheme":
                if self.terms is not None:
                    raise SchemeSyntaxError(
                        "duplicate scheme block", tok.line, tok.column
                    )
                self.parse_scheme_block()
            else:
                raise self.error(
                    f"expected 'params', 'template' or 'scheme', found {tok.text!r}"
                )
            first = False
        if self.terms is None:
            tok = self.peek()
            raise SchemeSyntaxError("file declares no scheme", tok.line, tok.column)
        return SchemeFile(
            templates=self.templates, terms=tuple(self.terms), params=self.params
        )

    def parse_params(self) -> None:
        self.expect_keyword("params")
        declared: list[str] = []
        while True:
            tok = self.expect_ident("a parameter name")
            if tok.text not in _PARAM_NAMES:
                raise UnknownSymbolError(
                    f"params may declare only D and tau, not {tok.text!r}",
                    tok.line,
                    tok.column,
                )
            if tok.text in declared:
                raise SchemeSyntaxError(
                    f"parameter {tok.text!r} declared twice", tok.line, tok.column
                )
            declared.append(tok.text)
            if self.at_op(","):
                self.advance()
                continue
            break
        self.expect_op(";")
        self.params = frozenset(declared)
        # step sizes are always available; PDE parameters only if declared
        self.allowed_symbols = set(declared) | {"dt", "dx"}

    def parse_template(self) -> None:
        self.expect_keyword("template")
        name_tok = self.expect_ident("a template name")
        name = name_tok.text
        if name in _KEYWORDS or name in SYMBOL_BY_TEXT or name in _TARGETS:
            raise SchemeSyntaxError(
                f"{name!r} is reserved and cannot name a template",
                name_tok.line,
                name_tok.column,
            )
        if name in self.templates:
            raise SchemeSyntaxError(
                f"duplicate template name {name!r}", name_tok.line, name_tok.column
            )
        self.expect_keyword("for")
        target_tok = self.expect_ident("a derivative tag (ut, utt, uxx, utxx)")
        if target_tok.text not in _TARGETS:
            raise SchemeSyntaxError(
                f"unknown derivative tag {target_tok.text!r} "
                f"(expected ut, utt, uxx or utxx)",
                target_tok.line,
                target_tok.column,
            )
        self.expect_op("{")
        entries: dict[GridOffset, LaurentPoly] = {}
        while not self.at_op("}"):
            open_tok = self.expect_op("(")
            dt_off = self.parse_int_offset()
            self.expect_op(",")
            dx_off = self.parse_int_offset()
            self.expect_op(")")
            offset = GridOffset(dt_off, dx_off)
            if offset in entries:
                raise SchemeSyntaxError(
                    f"duplicate offset ({dt_off}, {dx_off})",
                    open_tok.line,
                    open_tok.column,
                )
            self.expect_op(":")
            entries[offset] = self.parse_expr()
            self.expect_op(";")
        self.expect_op("}")
        try:
            template = DerivativeTemplate(name, _TARGETS[target_tok.text], entries)
        except ValueError as exc:
            raise SchemeSyntaxError(str(exc), name_tok.line, name_tok.column) from None
        self.templates[name] = template

    def _is_template_name(self, tok: Token) -> bool:
        return tok.kind == "ident" and tok.text not in SYMBOL_BY_TEXT

    def parse_scheme_term(self) -> tuple[LaurentPoly, str]:
        """One product chain whose final factor is a template name."""
        coeff = LaurentPoly.one()
        pending_op = "*"
        while True:
            tok = self.peek()
            if self._is_template_name(tok):
                if pending_op == "/":
                    raise SchemeSyntaxError(
                        "cannot divide by a template", tok.line, tok.column
                    )
                self.advance()
                follow = self.peek()
                if follow.kind == "op" and follow.text in ("*", "/"):
                    raise SchemeSyntaxError(
                        "template name must end its term",
                        follow.line,
                        follow.column,
                    )
                name = tok.text
                if name not in self.templates:
                    try:
                        builtin_template(name)
                    except Exception:
                        raise UnresolvedTemplateError(
                            f"unknown template {name!r} (neither declared in this "
                            f"file nor built in)",
                            tok.line,
                            tok.column,
                        ) from None
                return coeff, name
            factor = self.parse_factor()
            coeff = coeff * factor if pending_op == "*" else coeff / factor
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text in ("*", "/"):
                pending_op = self.advance().text
            else:
                shown = nxt.text if nxt.kind != "eof" else "end of input"
                raise self.error(
                    f"expected '*' and a template name to end the term, "
                    f"found {shown!r}"
                )

    def parse_scheme_block(self) -> None:
        self.expect_keyword("scheme")
        self.expect_op("{")
        terms: list[tuple[LaurentPoly, str]] = []
        sign = Fraction(1)
        if self.at_op("+", "-"):
            if self.advance().text == "-":
                sign = -sign
        while True:
            coeff, name = self.parse_scheme_term()
            terms.append((coeff * sign, name))
            if self.at_op("+", "-"):
                sign = Fraction(1) if self.advance().text == "+" else Fraction(-1)
                continue
            break
        self.expect_op("=")
        zero_tok = self.peek()
        if zero_tok.kind != "num" or zero_tok.text != "0":
            shown = zero_tok.text if zero_tok.kind != "eof" else "end of input"
            raise self.error(f"scheme must be equated to 0, found {shown!r}")
        self.advance()
        self.expect_op("}")
        self.terms = terms


def parse_scheme(text: str) -> SchemeFile:
    """Parse scheme text; raises a positioned Diagnostic on any problem."""
    tokens = tokenize(text)
    return _FileParser(tokens).parse_file()


# ---------------------------------------------------------------------------
# Rendering (canonical form; parse(render(f)) == f)
# ---------------------------------------------------------------------------


def _render_coeff_term(coeff: LaurentPoly, name: str) -> tuple[str, str]:
    """Return (sign, body) for one scheme term."""
    if coeff.is_single_term:
        _, c = coeff.single_term()
        if c < 0:
            coeff = -coeff
            sign = "-"
        else:
            sign = "+"
        if coeff == 1:
            return sign, name
        return sign, f"{coeff.render()} * {name}"
    return "+", f"({coeff.render()}) * {name}"


def render_scheme(file: SchemeFile) -> str:
    lines: list[str] = []
    if file.params is not None:
        lines.append(f"params {', '.join(sorted(file.params))};")
        lines.append("")
    for name, template in file.templates.items():
        lines.append(f"template {name} for {template.target.value} {{")
        for offset, poly in template.items():
            lines.append(
                f"  ({offset.dt_steps}, {offset.dx_steps}): {poly.render()};"
            )
        lines.append("}")
        lines.append("")
    lines.append("scheme {")
    for i, (coeff, name) in enumerate(file.terms):
        sign, body = _render_coeff_term(coeff, name)
        if i == 0:
            lines.append(f"  {body}" if sign == "+" else f"  - {body}")
        else:
            lines.append(f"  {sign} {body}")
    lines.append("  = 0")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Random valid files, for round-trip testing
# ---------------------------------------------------------------------------


def _random_poly(rng: random.Random, symbols: Sequence[str], *, nonzero: bool) -> LaurentPoly:
    while True:
        poly = LaurentPoly.zero()
        for _ in range(rng.randint(1, 3)):
            exps = [0, 0, 0, 0]
            for text in symbols:
                if rng.random() < 0.5:
                    exps[SYMBOL_BY_TEXT[text]] = rng.randint(-2, 2)
            coeff = Fraction(rng.choice([-5, -3, -2, -1, 1, 2, 3, 5]), rng.randint(1, 4))
            poly = poly + LaurentPoly.term(coeff, tuple(exps))
        if poly.is_zero and nonzero:
            continue
        return poly


def _random_template(rng: random.Random, name: str, symbols: Sequence[str], target: Derivative) -> Optional[DerivativeTemplate]:
    offsets = [GridOffset(dt, dx) for dt in (-1, 0, 1, 2) for dx in (-2, -1, 0, 1, 2)]
    rng.shuffle(offsets)
    chosen = offsets[: rng.randint(2, 4)]
    entries = {off: _random_poly(rng, symbols, nonzero=False) for off in chosen}
    # balance the last entry so the template annihilates constants
    total = LaurentPoly.zero()
    for off in chosen[:-1]:
        total = total + entries[off]
    entries[chosen[-1]] = -total
    entries = {off: poly for off, poly in entries.items() if not poly.is_zero}
    if not entries:
        return None
    return DerivativeTemplate(name, target, entries)


def random_scheme_file(rng: random.Random) -> SchemeFile:
    """A random valid SchemeFile; drives the parse/render round-trip checks."""
    params_choice = rng.choice([None, frozenset({"D"}), frozenset({"tau"}), frozenset({"D", "tau"})])
    symbols = ["dt", "dx"] + sorted(params_choice or {"D", "tau"})

    templates: dict[str, DerivativeTemplate] = {}
    time_targets = [Derivative.U_T, Derivative.U_TT, Derivative.U_TXX]
    n_local = rng.randint(1, 3)
    for i in range(n_local):
        target = rng.choice(time_targets) if i == 0 else rng.choice(list(Derivative))
        template = _random_template(rng, f"loc_{i}", symbols, target)
        while template is None:
            template = _random_template(rng, f"loc_{i}", symbols, target)
        templates[template.name] = template

    names = list(templates)
    if rng.random() < 0.5:
        names.append(rng.choice(builtin_template_names()))
    terms = [(_random_poly(rng, symbols, nonzero=True), "loc_0")]
    for _ in range(rng.randint(0, 3)):
        terms.append((_random_poly(rng, symbols, nonzero=True), rng.choice(names)))
    return SchemeFile(templates=templates, terms=tuple(terms), params=params_choice)
