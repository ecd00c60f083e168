"""Iterate the emitted random-walk micro-model on a finite lattice.

Two arithmetic lanes: an exact-rational lane (Fractions; small lattices,
bit-exact invariants like positivity, conservation and the binomial
response) and a float lane (numpy; refinement studies).  The walk update
is the deterministic master equation

    u_m' = p+ * u_{m+1} + p0 * u_m + p- * u_{m-1}

applied synchronously, with periodic or Dirichlet boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import FreeParameterRequired, NonConvergent
from .laurent import SymbolId
from .models import ModelId, ModelParams, scheme_for
from .reduction import RandomWalkForm, ReductionReport, effective_diffusivity
from .reduction import reduce as reduce_stencil
from .stencil import assemble

__all__ = [
    "Periodic",
    "Dirichlet",
    "PERIODIC",
    "GridField",
    "WalkRun",
    "step",
    "run",
    "reference_heat",
    "ConvergenceRow",
    "convergence_study",
    "numeric_scales",
]


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class Dirichlet:
    """Clamped end values; temperatures, so they cannot be negative."""

    left: Union[float, Fraction] = 0
    right: Union[float, Fraction] = 0

    def __post_init__(self):
        if self.left < 0 or self.right < 0:
            raise ValueError("Dirichlet boundary values must be nonnegative")


PERIODIC = Periodic()

Boundary = Union[Periodic, Dirichlet]


@dataclass(frozen=True)
class GridField:
    """Nonnegative lattice values with a spacing and a boundary policy.

    ``values`` is either a numpy float array (float lane) or a tuple of
    Fractions (exact lane); the lane is fixed at construction.
    """

    values: Union[np.ndarray, tuple]
    dx: Union[float, Fraction]
    boundary: Boundary = PERIODIC

    def __post_init__(self):
        vals = self.values
        if isinstance(vals, np.ndarray):
            vals = np.asarray(vals, dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValueError("field values must be finite")
            if np.any(vals < 0):
                raise ValueError("field values must be nonnegative")
            vals.setflags(write=False)
        else:
            vals = tuple(Fraction(v) for v in vals)
            if any(v < 0 for v in vals):
                raise ValueError("field values must be nonnegative")
        object.__setattr__(self, "values", vals)
        if len(vals) < 3:
            raise ValueError("lattice needs at least 3 sites")
        if self.dx <= 0:
            raise ValueError("dx must be positive")

    @property
    def exact(self) -> bool:
        return not isinstance(self.values, np.ndarray)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def mass(self):
        """Sum of values (not weighted by dx)."""
        if self.exact:
            return sum(self.values, Fraction(0))
        return float(np.sum(self.values))

    @classmethod
    def delta(
        cls,
        n_sites: int,
        dx=1,
        boundary: Boundary = PERIODIC,
        *,
        exact: bool = False,
        height=1,
        site: Optional[int] = None,
    ) -> "GridField":
        site = n_sites // 2 if site is None else site
        if exact:
            vals = [Fraction(0)] * n_sites
            vals[site] = Fraction(height)
            return cls(tuple(vals), dx, boundary)
        vals = np.zeros(n_sites)
        vals[site] = float(height)
        return cls(vals, dx, boundary)

    @classmethod
    def constant(
        cls, n_sites: int, value, dx=1, boundary: Boundary = PERIODIC, *, exact: bool = False
    ) -> "GridField":
        if exact:
            return cls((Fraction(value),) * n_sites, dx, boundary)
        return cls(np.full(n_sites, float(value)), dx, boundary)


@dataclass(frozen=True)
class WalkRun:
    """A walk in progress: weights, current field, time step, history."""

    form: RandomWalkForm
    field: GridField
    dt: Union[float, Fraction]
    steps_taken: int = 0
    mass_trace: tuple = ()

    def __post_init__(self):
        self.form.validate()  # exact check, tolerance zero
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.mass_trace and isinstance(self.field.boundary, Periodic):
            object.__setattr__(self, "mass_trace", (self.field.mass,))

    @property
    def time(self):
        return self.steps_taken * self.dt


def _step_values_exact(values: tuple, weights, boundary: Boundary) -> tuple:
    p_plus, p_zero, p_minus = weights
    n = len(values)
    if isinstance(boundary, Periodic):
        return tuple(
            p_plus * values[(m + 1) % n]
            + p_zero * values[m]
            + p_minus * values[(m - 1) % n]
            for m in range(n)
        )
    out = [Fraction(boundary.left)]
    out.extend(
        p_plus * values[m + 1] + p_zero * values[m] + p_minus * values[m - 1]
        for m in range(1, n - 1)
    )
    out.append(Fraction(boundary.right))
    return tuple(out)


def _step_values_float(values: np.ndarray, weights, boundary: Boundary) -> np.ndarray:
    p_plus, p_zero, p_minus = (float(w) for w in weights)
    if isinstance(boundary, Periodic):
        return (
            p_plus * np.roll(values, -1)
            + p_zero * values
            + p_minus * np.roll(values, 1)
        )
    out = np.empty_like(values)
    out[1:-1] = p_plus * values[2:] + p_zero * values[1:-1] + p_minus * values[:-2]
    out[0] = float(boundary.left)
    out[-1] = float(boundary.right)
    return out


def step(walk: WalkRun) -> WalkRun:
    """One synchronous update of the whole lattice."""
    f = walk.field
    if f.exact:
        new_values = _step_values_exact(f.values, walk.form.weights, f.boundary)
    else:
        new_values = _step_values_float(f.values, walk.form.weights, f.boundary)
    new_field = GridField(new_values, f.dx, f.boundary)
    trace = walk.mass_trace
    if isinstance(f.boundary, Periodic):
        trace = trace + (new_field.mass,)
    return replace(
        walk, field=new_field, steps_taken=walk.steps_taken + 1, mass_trace=trace
    )


def run(walk: WalkRun, n_steps: int) -> WalkRun:
    """n applications of :func:`step` (mass trace recorded when periodic)."""
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    for _ in range(n_steps):
        walk = step(walk)
    return walk


def reference_heat(x, t, diffusivity):
    """Fundamental solution of u_t = D u_xx on the line (unit mass)."""
    if t <= 0:
        raise ValueError("t must be positive")
    d = float(diffusivity)
    return np.exp(-np.asarray(x, dtype=float) ** 2 / (4 * d * t)) / math.sqrt(
        4 * math.pi * d * t
    )


# ---------------------------------------------------------------------------
# Numeric bridge: turn a reduction's bindings into concrete step sizes
# ---------------------------------------------------------------------------


def numeric_scales(
    report: ReductionReport,
    params: ModelParams,
    *,
    dx: Optional[Fraction] = None,
    dt: Optional[Fraction] = None,
) -> tuple[Fraction, Fraction]:
    """Resolve (dt, dx^2) as exact rationals from the report's bindings.

    Fully-constrained reductions need nothing else; ratio-constrained ones
    (the plain heat schemes) take dx from the caller and derive dt.
    """
    values = {
        SymbolId.DIFFUSIVITY: params.D,
        SymbolId.RELAX_TIME: params.tau if params.tau is not None else Fraction(1),
        SymbolId.TIME_STEP: Fraction(1),  # placeholder; bindings never use it
        SymbolId.SPACE_STEP: Fraction(1),
    }
    dt_b = report.form.binding("dt")
    dx2_b = report.form.binding("dx2")

    dx2: Optional[Fraction] = Fraction(dx) ** 2 if dx is not None else None
    if dx2_b is not None:
        value = dx2_b.value
        if value.uses(SymbolId.TIME_STEP):
            if dt is None:
                raise ValueError("dx^2 binding references dt; supply dt")
            value = value.substitute({SymbolId.TIME_STEP: Fraction(dt)})
        dx2 = value.evaluate(values)
    if dx2 is None:
        raise ValueError("scheme does not fix dx; supply it")

    if dt_b is not None:
        value = dt_b.value.substitute_squared(SymbolId.SPACE_STEP, dx2)
        dt_val = value.evaluate(values)
    elif dt is not None:
        dt_val = Fraction(dt)
    else:
        raise ValueError("scheme does not fix dt; supply it")
    if dt_val <= 0 or dx2 <= 0:
        raise ValueError(f"resolved step sizes must be positive (dt={dt_val}, dx^2={dx2})")
    return dt_val, dx2


# ---------------------------------------------------------------------------
# Continuum-limit refinement study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    dx: float
    dt: float
    l1_error: float
    ratio: Optional[float]  # previous error / this error; None at level 0


def _report_for(model_or_report, params: ModelParams, p) -> ReductionReport:
    if isinstance(model_or_report, ReductionReport):
        return model_or_report
    model = model_or_report
    params.check_model(model)
    label = model.value
    stencil = assemble(scheme_for(model))
    if model is ModelId.STANDARD_HEAT:
        if p is None:
            raise FreeParameterRequired(
                "the forward-Euler heat scheme needs the free parameter p"
            )
        return reduce_stencil(stencil, p, label=label)
    return reduce_stencil(stencil, p, label=label) if p is not None else reduce_stencil(
        stencil, label=label
    )


def _l1_error(u: np.ndarray, dx: float, t: float, d_eff: float, parity_fix: bool) -> float:
    n = len(u)
    xs = (np.arange(n) - n // 2) * dx
    if parity_fix:
        # p0 = 0 walks live on alternating parity; the [1,2,1]/4 filter
        # annihilates the checkerboard mode exactly and is second-order.
        u = 0.25 * (np.roll(u, 1) + 2 * u + np.roll(u, -1))
    return float(np.sum(np.abs(u - reference_heat(xs, t, d_eff))) * dx)


def convergence_study(
    model_or_report,
    params: ModelParams,
    levels: int,
    p=None,
    *,
    base_steps: int = 64,
    width_factor: float = 14.0,
    dx0: Fraction = Fraction(1, 16),
    max_sites: int = 8192,
) -> list[ConvergenceRow]:
    """L1 error of the mass-normalized delta response against the heat kernel
    across refinement levels.

    Ratio-constrained schemes refine by halving dx; fully-constrained ones
    (step sizes pinned by tau and D) refine by halving tau with D fixed --
    the walk's own continuum limit.  The reference kernel uses the walk's
    effective diffusivity p * dx^2/dt, which the bindings make a pure
    function of the PDE parameters.
    """
    if levels < 2:
        raise ValueError("need at least 2 refinement levels")
    p = Fraction(p) if p is not None else None
    report = _report_for(model_or_report, params, p)
    tau_driven = any(
        b.value.uses(SymbolId.RELAX_TIME) for b in report.form.constraints
    )
    if tau_driven and params.tau is None:
        raise ValueError("tau-driven refinement needs params.tau")

    weights = tuple(float(w) for w in report.form.weights)
    parity_fix = report.form.p_zero == 0
    d_eff_poly = effective_diffusivity(report)

    rows: list[ConvergenceRow] = []
    prev_err: Optional[float] = None

    # Exact rational bookkeeping so every level lands on the same physical
    # time with an integer number of steps.
    if tau_driven:
        dt0, _ = numeric_scales(report, params)
    else:
        dt0, _ = numeric_scales(report, params, dx=dx0)
    total_time = base_steps * dt0

    for level in range(levels):
        if tau_driven:
            level_params = ModelParams(params.D, params.tau / 2 ** level)
            dt, dx2 = numeric_scales(report, level_params)
        else:
            level_params = params
            dx_l = dx0 / 2 ** level
            dt, dx2 = numeric_scales(report, params, dx=dx_l)
        n_steps_frac = total_time / dt
        if n_steps_frac.denominator != 1:
            raise ValueError("refinement does not divide the comparison time")
        n_steps = int(n_steps_frac)
        dx = math.sqrt(float(dx2))

        d_eff_values = {
            SymbolId.DIFFUSIVITY: level_params.D,
            SymbolId.RELAX_TIME: level_params.tau
            if level_params.tau is not None
            else Fraction(1),
            SymbolId.TIME_STEP: dt,
            SymbolId.SPACE_STEP: Fraction(1),
        }
        d_eff = float(
            d_eff_poly.substitute_squared(SymbolId.SPACE_STEP, dx2).evaluate(d_eff_values)
        )

        t_final = float(total_time)
        width = width_factor * math.sqrt(2 * d_eff * t_final)
        n_sites = int(round(width / dx))
        n_sites += n_sites % 2
        if n_sites > max_sites:
            raise ValueError(
                f"level {level} needs {n_sites} sites, above the cap {max_sites}"
            )

        u = np.zeros(n_sites)
        u[n_sites // 2] = 1.0 / dx  # unit discrete mass
        p_plus, p_zero, p_minus = weights
        for _ in range(n_steps):
            u = p_plus * np.roll(u, -1) + p_zero * u + p_minus * np.roll(u, 1)

        err = _l1_error(u, dx, t_final, d_eff, parity_fix)
        ratio = None if prev_err is None else prev_err / err
        rows.append(
            ConvergenceRow(
                level=level, dx=dx, dt=float(dt), l1_error=err, ratio=ratio
            )
        )
        if prev_err is not None and err >= prev_err:
            raise NonConvergent(
                f"L1 error failed to decrease at level {level}: "
                f"{prev_err:.3e} -> {err:.3e}"
            )
        prev_err = err
    return rows
