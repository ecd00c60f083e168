"""The built-in heat-conduction models and their chosen discretizations.

Model identity here is the discretization, not the PDE: the plain heat
equation appears twice, once with the forward-Euler/central scheme and
once with the central-time/DuFort-Frankel scheme, because the two reduce
to different step-size constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from .laurent import D, DT, DX, LaurentPoly, TAU
from .reduction import Binding, RandomWalkForm
from .stencil import SchemeSpec, builtin_template

__all__ = [
    "ModelId",
    "ModelParams",
    "scheme_for",
    "expected_reduction",
    "pde_text",
    "template_names",
    "model_from_cli_name",
]


class ModelId(Enum):
    STANDARD_HEAT = "standard-heat"
    MAXWELL_CATTANEO = "maxwell-cattaneo"
    STANDARD_HEAT_DFF = "standard-heat-dff"
    SYMMETRY = "symmetry"


_USES_TAU = frozenset({ModelId.MAXWELL_CATTANEO, ModelId.SYMMETRY})


@dataclass(frozen=True)
class ModelParams:
    """Positive PDE parameters: thermal diffusivity D, relaxation time tau.

    The tau values of the Maxwell-Cattaneo and symmetry-derived models are
    independent parameters; nothing here couples them.
    """

    D: Fraction
    tau: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "D", Fraction(self.D))
        if self.D <= 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if self.tau is not None:
            object.__setattr__(self, "tau", Fraction(self.tau))
            if self.tau <= 0:
                raise ValueError(f"tau must be positive, got {self.tau}")

    def check_model(self, model: ModelId) -> None:
        if model in _USES_TAU and self.tau is None:
            raise ValueError(f"model {model.value} requires tau")
        if model not in _USES_TAU and self.tau is not None:
            raise ValueError(f"model {model.value} takes no tau")


def scheme_for(model: ModelId) -> SchemeSpec:
    """The model's discretization as coefficient/template pairs (LHS - RHS = 0)."""
    one = LaurentPoly.one()
    if model is ModelId.STANDARD_HEAT:
        return SchemeSpec(
            [
                (one, builtin_template("forward_euler_t")),
                (-D, builtin_template("central_xx")),
            ]
        )
    if model is ModelId.MAXWELL_CATTANEO:
        return SchemeSpec(
            [
                (TAU, builtin_template("central_second_t")),
                (one, builtin_template("backward_euler_t")),
                (-D, builtin_template("dufort_frankel_xx")),
            ]
        )
    if model is ModelId.STANDARD_HEAT_DFF:
        return SchemeSpec(
            [
                (one, builtin_template("central_t")),
                (-D, builtin_template("dufort_frankel_xx")),
            ]
        )
    if model is ModelId.SYMMETRY:
        return SchemeSpec(
            [
                (one, builtin_template("nonstandard_t")),
                (-D, builtin_template("central_xx")),
                (-(TAU * D), builtin_template("forward_central_txx")),
            ]
        )
    raise ValueError(f"unknown model {model!r}")


def expected_reduction(model: ModelId, p: Optional[Fraction] = None) -> RandomWalkForm:
    """Golden fixture: the published weights and bindings for each model.

    For the forward-Euler heat scheme the walk depends on the caller's p
    (default 1/2, the classical walk)."""
    half = Fraction(1, 2)
    third = Fraction(1, 3)
    if model is ModelId.STANDARD_HEAT:
        p = half if p is None else Fraction(p)
        return RandomWalkForm(
            p_plus=p,
            p_zero=1 - 2 * p,
            p_minus=p,
            constraints=(Binding("dt", (p / D) * DX ** 2),),
            length_scale_sq=None,
        )
    if p is not None:
        raise ValueError(f"model {model.value} admits no free parameter")
    if model is ModelId.MAXWELL_CATTANEO:
        return RandomWalkForm(
            p_plus=half,
            p_zero=Fraction(0),
            p_minus=half,
            constraints=(
                Binding("dt", 2 * TAU),
                Binding("dx2", 4 * D * TAU),
            ),
            length_scale_sq=TAU * D,
        )
    if model is ModelId.STANDARD_HEAT_DFF:
        return RandomWalkForm(
            p_plus=half,
            p_zero=Fraction(0),
            p_minus=half,
            constraints=(Binding("dt", DX ** 2 / (2 * D)),),
            length_scale_sq=None,
        )
    if model is ModelId.SYMMETRY:
        return RandomWalkForm(
            p_plus=third,
            p_zero=third,
            p_minus=third,
            constraints=(
                Binding("dx2", 3 * TAU * D),
                Binding("dt", 2 * TAU),
            ),
            length_scale_sq=TAU * D,
        )
    raise ValueError(f"unknown model {model!r}")


_PDE_TEXT = {
    ModelId.STANDARD_HEAT: "u_t = D*u_xx",
    ModelId.MAXWELL_CATTANEO: "tau*u_tt + u_t = D*u_xx",
    ModelId.STANDARD_HEAT_DFF: "u_t = D*u_xx",
    ModelId.SYMMETRY: "u_t = D*u_xx + tau*D*u_txx",
}


def pde_text(model: ModelId) -> str:
    return _PDE_TEXT[model]


def template_names(model: ModelId) -> list[str]:
    return [template.name for _, template in scheme_for(model).terms]


def model_from_cli_name(name: str) -> ModelId:
    for model in ModelId:
        if model.value == name:
            return model
    known = ", ".join(m.value for m in ModelId)
    raise ValueError(f"unknown model {name!r} (known: {known})")
