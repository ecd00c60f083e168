"""Reduce an assembled stencil to a random-walk micro-model.

Given a stencil equated to zero, the engine zeroes every coefficient
outside the random-walk support {u^{k+1}_m, u^k_{m+1}, u^k_m, u^k_{m-1}}
by solving the offending coefficients for the step sizes, then reads the
walk weights off the surviving entries.

Solving strategy, in order:

* Each outside-support coefficient is a constraint ``poly = 0``.  It is
  solved by monomial isolation only: after factoring out the common
  monomial content, the constraint must have the shape
  ``c*M*s^d + R = 0`` with a single term carrying the unknown ``s`` (dt,
  or dx^2 treated as one composite unknown) and ``R`` free of it.
  Anything else is reported honestly instead of approximated.
* Residual freedom in the relaxation-time models is closed by the
  relaxation clock dt = 2*tau, the time step both tau-bearing model
  derivations settle on; with that clock every built-in scheme collapses
  to a unique walk.
* A scheme that never generated a constraint (the plain forward-Euler
  heat scheme) only fixes the ratio dt*D/dx^2; the caller's free
  parameter p pins it.

All arithmetic is exact; success requires the weights to come out as
rational constants satisfying p+ = p-, p+ + p0 + p- = 1 and the
positivity band 0 < p+ <= 1/2, p0 >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import (
    FreeParameterForbidden,
    FreeParameterRequired,
    NonInvertibleSubstitution,
    OddSpaceExponent,
    PositivityViolation,
    UnderConstrained,
    UnsolvableConstraint,
)
from .laurent import D, DT, DX, LaurentPoly, Monomial, SymbolId, TAU
from .stencil import GridOffset, Stencil

__all__ = [
    "Binding",
    "RandomWalkForm",
    "ReductionReport",
    "DerivedScales",
    "reduce",
    "verify_report",
    "derived_scales",
    "effective_diffusivity",
    "WALK_SUPPORT",
    "REDUCIBLE_SUPPORT",
]

WALK_SUPPORT = frozenset(
    {GridOffset(1, 0), GridOffset(0, -1), GridOffset(0, 0), GridOffset(0, 1)}
)
REDUCIBLE_SUPPORT = WALK_SUPPORT | {
    GridOffset(-1, 0),
    GridOffset(1, -1),
    GridOffset(1, 1),
}
_ELIMINATION_ORDER = (GridOffset(-1, 0), GridOffset(1, 1), GridOffset(1, -1))

_UPDATE = GridOffset(1, 0)
_RELAXATION_CLOCK = 2 * TAU


@dataclass(frozen=True)
class Binding:
    """One solved step-size constraint: dt = value, or dx^2 = value."""

    target: str  # "dt" | "dx2"
    value: LaurentPoly
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.target not in ("dt", "dx2"):
            raise ValueError(f"binding target must be 'dt' or 'dx2', got {self.target!r}")

    def render(self) -> str:
        return f"{self.target} = {self.value.render()}"


@dataclass(frozen=True)
class RandomWalkForm:
    """The reduced micro-model: symmetric walk weights plus the solved
    step-size constraints.  Invariants are checked by :meth:`validate`,
    not at construction, so tampered forms can be built and then rejected.
    """

    p_plus: Fraction
    p_zero: Fraction
    p_minus: Fraction
    constraints: tuple[Binding, ...] = ()
    length_scale_sq: Optional[LaurentPoly] = None

    @property
    def weights(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.p_plus, self.p_zero, self.p_minus)

    def validate(self) -> None:
        if self.p_plus + self.p_zero + self.p_minus != 1:
            raise UnsolvableConstraint(
                f"weights do not sum to one: {self.weights}"
            )
        if self.p_plus != self.p_minus:
            raise UnsolvableConstraint(
                f"asymmetric weights p+={self.p_plus}, p-={self.p_minus}"
            )
        if not (0 < self.p_plus <= Fraction(1, 2)) or self.p_zero < 0:
            raise PositivityViolation(
                f"weights ({self.p_plus}, {self.p_zero}, {self.p_minus}) "
                f"violate the band 0 < p <= 1/2, p0 >= 0"
            )

    def binding(self, target: str) -> Optional[Binding]:
        for b in self.constraints:
            if b.target == target:
                return b
        return None


@dataclass(frozen=True)
class ReductionReport:
    """Full story of one reduction; replaying bindings against the input
    stencil reproduces the weights (see :func:`verify_report`)."""

    stencil: Stencil
    scale: LaurentPoly
    eliminated: tuple[tuple[GridOffset, LaurentPoly], ...]
    bindings: tuple[Binding, ...]
    normalizer: LaurentPoly
    form: RandomWalkForm
    label: Optional[str] = None

    def to_json_dict(self) -> dict:
        scales = None
        try:
            ds = derived_scales(self.form)
        except UnderConstrained:
            ds = None
        if ds is not None:
            scales = {
                "dt": ds.dt_binding.render(),
                "dx2": ds.dx_sq_binding.render(),
                "diffusivity_check": ds.diffusivity_check.render(),
                "length_scale_sq": (
                    ds.length_scale_sq.render() if ds.length_scale_sq is not None else None
                ),
            }
        return {
            "model": self.label,
            "stencil": self.stencil.to_json(),
            "scale": self.scale.render(),
            "eliminated": [
                {"dt": off.dt_steps, "dx": off.dx_steps, "coeff": poly.render()}
                for off, poly in self.eliminated
            ],
            "bindings": [
                {"target": b.target, "value": b.value.render(), "source": b.source}
                for b in self.bindings
            ],
            "normalizer": self.normalizer.render(),
            "weights": {
                "plus": str(self.form.p_plus),
                "zero": str(self.form.p_zero),
                "minus": str(self.form.p_minus),
            },
            "scales": scales,
        }


# ---------------------------------------------------------------------------
# Monomial isolation
# ---------------------------------------------------------------------------


def _content_monomial(poly: LaurentPoly) -> Monomial:
    """Per-symbol minimum exponent over all terms (the pure-monomial content)."""
    monos = list(poly.terms)
    return tuple(min(m[i] for m in monos) for i in range(4))


def _strip_content(poly: LaurentPoly) -> LaurentPoly:
    """Divide out the content monomial; the positive zero set is unchanged."""
    content = _content_monomial(poly)
    if content == (0, 0, 0, 0):
        return poly
    inv = LaurentPoly.term(1, tuple(-e for e in content))
    return poly * inv


def _check_value(value: LaurentPoly, target: str) -> None:
    """A solved step size must admit positive values for D, tau > 0."""
    if value.is_zero:
        raise UnsolvableConstraint(f"constraint forces {target} = 0")
    coeffs = list(value.terms.values())
    if all(c < 0 for c in coeffs):
        raise UnsolvableConstraint(
            f"constraint forces {target} = {value}, which is negative for "
            f"positive parameters"
        )


def _isolate(norm: LaurentPoly, target: str, source: str) -> Optional[Binding]:
    """Solve ``norm = 0`` for dt or dx^2 by monomial isolation.

    ``norm`` must already have its content monomial stripped, so every
    symbol's minimum exponent is zero.  Returns None when the unknown is
    absent, appears with more than two distinct exponents, appears in more
    than one term at its top exponent, or would require a root.
    """
    sym = SymbolId.TIME_STEP if target == "dt" else SymbolId.SPACE_STEP
    step = 1 if target == "dt" else 2  # dx is solved through the dx^2 lens
    exps = norm.exponents_of(sym)
    if exps == {0}:
        return None
    if len(exps) != 2:
        return None
    d = max(exps)
    if d % step:
        # can only happen for dx, where it means an odd power survived
        raise OddSpaceExponent(
            f"constraint {norm} requires solving for dx^{d}"
        )
    if d // step != 1:
        return None  # would need a root of a polynomial
    high = [(m, c) for m, c in norm.terms.items() if m[sym] == d]
    if len(high) != 1:
        return None
    (mono, coeff) = high[0]
    rest = LaurentPoly(
        {m: c for m, c in norm.terms.items() if m[sym] == 0}
    )
    stripped = list(mono)
    stripped[sym] = 0
    pivot = LaurentPoly.term(coeff, tuple(stripped))
    value = (-rest) / pivot
    _check_value(value, target)
    return Binding(target, value, source=source)


def _solve_constraint(
    coeff: LaurentPoly, offset: GridOffset, solve_order: Sequence[str]
) -> Optional[Binding]:
    """Try to zero one outside-support coefficient; None when stuck."""
    if coeff.is_constant:
        raise UnsolvableConstraint(
            f"coefficient of offset ({offset.dt_steps},{offset.dx_steps}) is the "
            f"constant {coeff}; no step-size choice can zero it"
        )
    norm = _strip_content(coeff)
    if any(e % 2 for e in norm.exponents_of(SymbolId.SPACE_STEP)):
        raise OddSpaceExponent(
            f"coefficient of offset ({offset.dt_steps},{offset.dx_steps}) carries "
            f"odd powers of dx: {norm}"
        )
    source = f"coefficient of offset ({offset.dt_steps},{offset.dx_steps})"
    for target in solve_order:
        binding = _isolate(norm, target, source)
        if binding is not None:
            return binding
    return None


def _apply_binding(stencil: Stencil, binding: Binding) -> Stencil:
    try:
        if binding.target == "dt":
            return stencil.substitute({SymbolId.TIME_STEP: binding.value})
        return stencil.substitute_squared(SymbolId.SPACE_STEP, binding.value)
    except NonInvertibleSubstitution as exc:
        raise UnsolvableConstraint(
            f"binding {binding.render()} cannot be substituted into the stencil: {exc}"
        ) from None
    except ValueError as exc:
        raise OddSpaceExponent(str(exc)) from None


def _constant_ratio(num: LaurentPoly, den: LaurentPoly) -> Optional[Fraction]:
    """Return q with num == q*den when such a rational exists, else None."""
    if num.is_zero:
        return Fraction(0)
    lead_n = num.sorted_terms()[0]
    lead_d = den.sorted_terms()[0]
    if lead_n[0] != lead_d[0]:
        return None
    q = lead_n[1] / lead_d[1]
    return q if num == den * q else None


# ---------------------------------------------------------------------------
# The reduction itself
# ---------------------------------------------------------------------------


def _canonical_scale(c_plus: LaurentPoly) -> LaurentPoly:
    """Inverse of the lexicographically least term of the update coefficient.

    Multiplying through by this factor reproduces the collected form the
    hand derivations work with (the update coefficient gains a constant
    term 1), without changing weights or constraints.
    """
    mono, coeff = c_plus.sorted_terms()[0]
    return LaurentPoly.term(Fraction(1) / coeff, tuple(-e for e in mono))


def reduce(
    stencil: Stencil,
    free_parameter: Union[Fraction, int, None] = None,
    *,
    label: Optional[str] = None,
    solve_order: Sequence[str] = ("dt", "dx2"),
) -> ReductionReport:
    """Eliminate all coefficients outside the walk support and emit the walk.

    ``free_parameter`` is accepted only for schemes that generate no
    elimination constraints and leave exactly one weight ratio free.
    """
    if tuple(solve_order) not in (("dt", "dx2"), ("dx2", "dt")):
        raise ValueError(f"solve_order must permute ('dt', 'dx2'), got {solve_order!r}")
    p = None
    if free_parameter is not None:
        p = Fraction(free_parameter)
        if not (0 < p <= Fraction(1, 2)):
            raise PositivityViolation(f"free parameter p must lie in (0, 1/2], got {p}")

    extra = stencil.support() - REDUCIBLE_SUPPORT
    if extra:
        shown = ", ".join(f"({o.dt_steps},{o.dx_steps})" for o in sorted(extra))
        raise UnsolvableConstraint(
            f"stencil support exceeds the reducible set at offsets {shown}"
        )
    c_plus = stencil.get(_UPDATE)
    if c_plus.is_zero:
        raise UnsolvableConstraint("stencil has no u^{k+1} coefficient to solve for")

    scale = _canonical_scale(c_plus)
    work = stencil.scaled(scale)
    tau_present = any(poly.uses(SymbolId.RELAX_TIME) for _, poly in work.items())

    eliminated: list[tuple[GridOffset, LaurentPoly]] = []
    bindings: list[Binding] = []
    dt_bound = False
    clock_applied = False

    def clock() -> Binding:
        return Binding("dt", _RELAXATION_CLOCK, source="relaxation clock dt = 2*tau")

    for offset in _ELIMINATION_ORDER:
        coeff = work.get(offset)
        if offset not in stencil.support() and coeff.is_zero:
            continue
        eliminated.append((offset, coeff))
        if coeff.is_zero:
            continue
        if p is not None:
            raise FreeParameterForbidden(
                "free parameter p is only accepted for schemes that generate "
                "no elimination constraints"
            )
        binding = _solve_constraint(coeff, offset, solve_order)
        if binding is None and tau_present and not dt_bound and not clock_applied:
            # Underdetermined in both step sizes at once; pin the
            # relaxation clock and retry against the updated coefficient.
            clock_applied = True
            cb = clock()
            bindings.append(cb)
            work = _apply_binding(work, cb)
            dt_bound = True
            coeff = work.get(offset)
            if coeff.is_zero:
                continue
            binding = _solve_constraint(coeff, offset, solve_order)
        if binding is None:
            raise UnsolvableConstraint(
                f"coefficient of offset ({offset.dt_steps},{offset.dx_steps}) "
                f"is not isolatable in dt or dx^2: {coeff}"
            )
        bindings.append(binding)
        work = _apply_binding(work, binding)
        if binding.target == "dt":
            dt_bound = True

    had_constraints = any(not c.is_zero for _, c in eliminated)

    def weight_ratios(current: Stencil):
        normalizer = current.get(_UPDATE)
        if normalizer.is_zero:
            raise UnsolvableConstraint("update coefficient vanished under the bindings")
        ratios = {}
        for off in (GridOffset(0, 1), GridOffset(0, 0), GridOffset(0, -1)):
            ratios[off] = _constant_ratio(-current.get(off), normalizer)
        return normalizer, ratios

    normalizer, ratios = weight_ratios(work)

    if any(r is None for r in ratios.values()):
        if p is not None:
            # No constraints were generated (checked above), so the scheme
            # leaves one ratio free; pin the u^k_{m+1} weight to p.
            pin = work.get(GridOffset(0, 1)) + normalizer * p
            binding = _solve_constraint(pin, GridOffset(0, 1), solve_order)
            if binding is None:
                raise UnsolvableConstraint(
                    f"cannot pin the free weight ratio to p = {p}: {pin}"
                )
            binding = Binding(binding.target, binding.value, source=f"free parameter p = {p}")
            bindings.append(binding)
            work = _apply_binding(work, binding)
        elif tau_present and not dt_bound and not clock_applied:
            clock_applied = True
            cb = clock()
            bindings.append(cb)
            work = _apply_binding(work, cb)
            dt_bound = True
        elif not had_constraints:
            raise FreeParameterRequired(
                "scheme only constrains a step-size ratio; supply the free "
                "parameter p in (0, 1/2]"
            )
        else:
            raise UnsolvableConstraint(
                "weights remain non-constant after eliminating all outside-"
                "support coefficients"
            )
        normalizer, ratios = weight_ratios(work)
        if any(r is None for r in ratios.values()):
            raise UnsolvableConstraint(
                "weights remain non-constant after resolving the free ratio"
            )
    elif p is not None:
        raise FreeParameterForbidden(
            "scheme admits no free parameter; its weights are already determined"
        )

    residual = work.support() - WALK_SUPPORT
    if residual:
        shown = ", ".join(f"({o.dt_steps},{o.dx_steps})" for o in sorted(residual))
        raise UnsolvableConstraint(f"offsets {shown} survived elimination")

    form = RandomWalkForm(
        p_plus=ratios[GridOffset(0, 1)],
        p_zero=ratios[GridOffset(0, 0)],
        p_minus=ratios[GridOffset(0, -1)],
        constraints=tuple(bindings),
        length_scale_sq=(
            TAU * D
            if any(b.value.uses(SymbolId.RELAX_TIME) for b in bindings)
            else None
        ),
    )
    form.validate()
    return ReductionReport(
        stencil=stencil,
        scale=scale,
        eliminated=tuple(eliminated),
        bindings=tuple(bindings),
        normalizer=normalizer,
        form=form,
        label=label,
    )


def verify_report(report: ReductionReport) -> bool:
    """Replay the report's bindings against its input stencil and check that
    they reproduce the reported normalizer and weights exactly."""
    try:
        work = report.stencil.scaled(report.scale)
        for binding in report.bindings:
            work = _apply_binding(work, binding)
    except Exception:
        return False
    if work.support() - WALK_SUPPORT:
        return False
    normalizer = work.get(_UPDATE)
    if normalizer != report.normalizer or normalizer.is_zero:
        return False
    expected = {
        GridOffset(0, 1): report.form.p_plus,
        GridOffset(0, 0): report.form.p_zero,
        GridOffset(0, -1): report.form.p_minus,
    }
    for off, weight in expected.items():
        if -work.get(off) != normalizer * weight:
            return False
    if report.form.p_plus + report.form.p_zero + report.form.p_minus != 1:
        return False
    return True


# ---------------------------------------------------------------------------
# Derived scales
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DerivedScales:
    dt_binding: LaurentPoly
    dx_sq_binding: LaurentPoly
    diffusivity_check: LaurentPoly  # dx^2 / (2 dt) under the bindings
    length_scale_sq: Optional[LaurentPoly]


def derived_scales(form: RandomWalkForm) -> DerivedScales:
    """Scale identities of a fully-constrained reduction.

    Requires both dt and dx^2 bound purely in terms of the PDE parameters;
    otherwise the scheme only relates the step sizes to each other and
    UnderConstrained is raised.
    """
    dt_b = form.binding("dt")
    dx2_b = form.binding("dx2")
    if dt_b is None or dx2_b is None:
        raise UnderConstrained(
            "both dt and dx^2 must be bound to derive scale identities"
        )
    for b in (dt_b, dx2_b):
        if b.value.uses(SymbolId.TIME_STEP) or b.value.uses(SymbolId.SPACE_STEP):
            raise UnderConstrained(
                f"binding {b.render()} still references a step size; the "
                f"scheme only fixes a functional relationship"
            )
    try:
        check = dx2_b.value / (2 * dt_b.value)
    except ValueError:
        raise UnderConstrained(
            f"cannot form dx^2/(2*dt) from non-monomial binding {dt_b.render()}"
        ) from None
    return DerivedScales(
        dt_binding=dt_b.value,
        dx_sq_binding=dx2_b.value,
        diffusivity_check=check,
        length_scale_sq=form.length_scale_sq,
    )


def effective_diffusivity(report: ReductionReport) -> LaurentPoly:
    """p+ * dx^2/dt with the report's bindings applied: the diffusivity of
    the heat kernel the emitted walk converges to under refinement."""
    ratio = (DX ** 2) * (DT ** -1)
    for binding in report.bindings:
        if binding.target == "dt":
            ratio = ratio.substitute({SymbolId.TIME_STEP: binding.value})
        else:
            ratio = ratio.substitute_squared(SymbolId.SPACE_STEP, binding.value)
    return ratio * report.form.p_plus
