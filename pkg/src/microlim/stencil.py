"""Stencils: coefficient maps over grid offsets, and their assembly.

A Stencil is a finite map from (time offset, space offset) to exact
Laurent-polynomial coefficients, representing one discretization moved to
the convention  LHS - RHS = 0.  Schemes are assembled from per-derivative
replacement templates, each of which carries its own 1/dt, 1/dx^2 factors
and must annihilate constant fields (its entries sum to zero).
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from .errors import UnknownTemplateError
from .laurent import DT, DX, LaurentPoly

__all__ = [
    "GridOffset",
    "Stencil",
    "Derivative",
    "DerivativeTemplate",
    "SchemeSpec",
    "assemble",
    "builtin_template",
    "builtin_template_names",
]


class GridOffset(NamedTuple):
    dt_steps: int
    dx_steps: int


def _normalize_entries(entries) -> dict[GridOffset, LaurentPoly]:
    items = entries.items() if isinstance(entries, Mapping) else entries
    acc: dict[GridOffset, LaurentPoly] = {}
    for offset, poly in items:
        offset = GridOffset(*offset)
        if not isinstance(poly, LaurentPoly):
            poly = LaurentPoly.constant(poly)
        merged = acc.get(offset, LaurentPoly.zero()) + poly
        if merged.is_zero:
            acc.pop(offset, None)
        else:
            acc[offset] = merged
    return acc


class Stencil:
    """Immutable normalized map GridOffset -> LaurentPoly (no zero entries)."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Union[Mapping, Iterable[tuple]] = ()):
        object.__setattr__(self, "_entries", _normalize_entries(entries))

    def __setattr__(self, name, value):
        raise AttributeError("Stencil is immutable")

    @property
    def entries(self) -> dict[GridOffset, LaurentPoly]:
        return dict(self._entries)

    def items(self) -> list[tuple[GridOffset, LaurentPoly]]:
        """Entries sorted by (dt, dx); the deterministic iteration order."""
        return sorted(self._entries.items())

    def get(self, offset) -> LaurentPoly:
        return self._entries.get(GridOffset(*offset), LaurentPoly.zero())

    def support(self) -> frozenset[GridOffset]:
        return frozenset(self._entries)

    @property
    def is_zero(self) -> bool:
        return not self._entries

    def __add__(self, other: "Stencil") -> "Stencil":
        if not isinstance(other, Stencil):
            return NotImplemented
        merged = list(self._entries.items()) + list(other._entries.items())
        return Stencil(merged)

    def scaled(self, factor) -> "Stencil":
        """Multiply every entry by the same polynomial factor."""
        if not isinstance(factor, LaurentPoly):
            factor = LaurentPoly.constant(factor)
        return Stencil({off: poly * factor for off, poly in self._entries.items()})

    def substitute(self, bindings) -> "Stencil":
        return Stencil(
            {off: poly.substitute(bindings) for off, poly in self._entries.items()}
        )

    def substitute_squared(self, sym, replacement) -> "Stencil":
        return Stencil(
            {
                off: poly.substitute_squared(sym, replacement)
                for off, poly in self._entries.items()
            }
        )

    def total(self) -> LaurentPoly:
        """Sum of all entries; zero exactly when the stencil annihilates
        constant fields."""
        acc = LaurentPoly.zero()
        for poly in self._entries.values():
            acc = acc + poly
        return acc

    def __eq__(self, other):
        if not isinstance(other, Stencil):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def to_json(self) -> list[dict]:
        return [
            {"dt": off.dt_steps, "dx": off.dx_steps, "coeff": poly.render()}
            for off, poly in self.items()
        ]

    def __repr__(self):
        body = ", ".join(f"({o.dt_steps},{o.dx_steps}): {p}" for o, p in self.items())
        return f"Stencil({{{body}}})"


class Derivative(Enum):
    """Derivative tags a template may stand in for; values are the DSL spellings."""

    U_T = "ut"
    U_TT = "utt"
    U_XX = "uxx"
    U_TXX = "utxx"


TIME_DERIVATIVES = frozenset({Derivative.U_T, Derivative.U_TT, Derivative.U_TXX})


class DerivativeTemplate:
    """A replacement stencil for one derivative, including its step-size factors."""

    __slots__ = ("name", "target", "entries")

    def __init__(self, name: str, target: Derivative, entries):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "target", Derivative(target))
        normalized = _normalize_entries(entries)
        if not normalized:
            raise ValueError(f"template {name!r} has no entries")
        total = LaurentPoly.zero()
        for poly in normalized.values():
            total = total + poly
        if not total.is_zero:
            raise ValueError(
                f"template {name!r} does not annihilate constants "
                f"(entries sum to {total})"
            )
        object.__setattr__(self, "entries", normalized)

    def __setattr__(self, name, value):
        raise AttributeError("DerivativeTemplate is immutable")

    def items(self) -> list[tuple[GridOffset, LaurentPoly]]:
        return sorted(self.entries.items())

    def __eq__(self, other):
        if not isinstance(other, DerivativeTemplate):
            return NotImplemented
        return (
            self.name == other.name
            and self.target == other.target
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.name, self.target, frozenset(self.entries.items())))

    def __repr__(self):
        return f"DerivativeTemplate({self.name!r}, {self.target.value})"


class SchemeSpec:
    """A discretized scheme: sum of coefficient * template, equated to zero."""

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[tuple[LaurentPoly, DerivativeTemplate]]):
        fixed = []
        for coeff, template in terms:
            if not isinstance(coeff, LaurentPoly):
                coeff = LaurentPoly.constant(coeff)
            fixed.append((coeff, template))
        if not fixed:
            raise ValueError("scheme has no terms")
        if not any(t.target in TIME_DERIVATIVES for _, t in fixed):
            raise ValueError("scheme references no time derivative")
        object.__setattr__(self, "terms", tuple(fixed))

    def __setattr__(self, name, value):
        raise AttributeError("SchemeSpec is immutable")

    def __eq__(self, other):
        if not isinstance(other, SchemeSpec):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        body = " + ".join(f"({c})*{t.name}" for c, t in self.terms)
        return f"SchemeSpec({body} = 0)"


def assemble(spec: SchemeSpec) -> Stencil:
    """Collect coefficient * template into a single normalized stencil.

    Linear in the templates; zero-coefficient terms drop out.
    """
    result = Stencil()
    for coeff, template in spec.terms:
        if coeff.is_zero:
            continue
        result = result + Stencil(
            {off: coeff * poly for off, poly in template.entries.items()}
        )
    return result


# ---------------------------------------------------------------------------
# Built-in template catalog
# ---------------------------------------------------------------------------

_INV_DT = DT ** -1
_INV_DX2 = DX ** -2
_INV_DT_DX2 = _INV_DT * _INV_DX2


def _make_builtins() -> dict[str, DerivativeTemplate]:
    third_dt = _INV_DT / 3
    templates = [
        # u_t, forward Euler: (u^{k+1}_m - u^k_m)/dt
        DerivativeTemplate(
            "forward_euler_t",
            Derivative.U_T,
            {(1, 0): _INV_DT, (0, 0): -_INV_DT},
        ),
        # u_t, backward Euler: (u^k_m - u^{k-1}_m)/dt
        DerivativeTemplate(
            "backward_euler_t",
            Derivative.U_T,
            {(0, 0): _INV_DT, (-1, 0): -_INV_DT},
        ),
        # u_t, central: (u^{k+1}_m - u^{k-1}_m)/(2 dt)
        DerivativeTemplate(
            "central_t",
            Derivative.U_T,
            {(1, 0): _INV_DT / 2, (-1, 0): -_INV_DT / 2},
        ),
        # u_tt, central: (u^{k+1}_m - 2 u^k_m + u^{k-1}_m)/dt^2
        DerivativeTemplate(
            "central_second_t",
            Derivative.U_TT,
            {
                (1, 0): DT ** -2,
                (0, 0): -2 * DT ** -2,
                (-1, 0): DT ** -2,
            },
        ),
        # u_xx, central: (u^k_{m+1} - 2 u^k_m + u^k_{m-1})/dx^2
        DerivativeTemplate(
            "central_xx",
            Derivative.U_XX,
            {
                (0, 1): _INV_DX2,
                (0, 0): -2 * _INV_DX2,
                (0, -1): _INV_DX2,
            },
        ),
        # u_xx, DuFort-Frankel: (u^k_{m+1} - u^{k+1}_m - u^{k-1}_m + u^k_{m-1})/dx^2
        DerivativeTemplate(
            "dufort_frankel_xx",
            Derivative.U_XX,
            {
                (0, 1): _INV_DX2,
                (1, 0): -_INV_DX2,
                (-1, 0): -_INV_DX2,
                (0, -1): _INV_DX2,
            },
        ),
        # u_t, nonstandard: three-point average at k+1 against u^k_m, over dt
        DerivativeTemplate(
            "nonstandard_t",
            Derivative.U_T,
            {
                (1, 1): third_dt,
                (1, 0): third_dt,
                (1, -1): third_dt,
                (0, 0): -_INV_DT,
            },
        ),
        # u_txx, forward Euler in t of the central u_xx
        DerivativeTemplate(
            "forward_central_txx",
            Derivative.U_TXX,
            {
                (1, 1): _INV_DT_DX2,
                (1, 0): -2 * _INV_DT_DX2,
                (1, -1): _INV_DT_DX2,
                (0, 1): -_INV_DT_DX2,
                (0, 0): 2 * _INV_DT_DX2,
                (0, -1): -_INV_DT_DX2,
            },
        ),
    ]
    return {t.name: t for t in templates}


_BUILTINS = _make_builtins()


def builtin_template(name: str) -> DerivativeTemplate:
    try:
        return _BUILTINS[name]
    except KeyError:
        known = ", ".join(sorted(_BUILTINS))
        raise UnknownTemplateError(f"unknown template {name!r} (known: {known})") from None


def builtin_template_names() -> list[str]:
    return sorted(_BUILTINS)
