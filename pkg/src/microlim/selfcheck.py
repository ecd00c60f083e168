"""The golden self-check suite behind ``microlim check``.

Runs every exact derivation golden plus the exact-mode simulation
invariants and the DSL equivalence checks, reporting one pass/fail line
per check.  Everything here is deterministic (seeded randomness only).
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .dsl import parse_scheme, random_scheme_file, render_scheme
from .laurent import D, DT, DX, LaurentPoly, TAU
from .models import ModelId, expected_reduction, scheme_for
from .reduction import derived_scales, reduce, verify_report
from .simulate import PERIODIC, GridField, WalkRun, run, step
from .stencil import Stencil, assemble

__all__ = ["CheckResult", "run_all", "SCHEME_FILES"]

SCHEME_FILES = {
    ModelId.STANDARD_HEAT: "standard_heat.scheme",
    ModelId.MAXWELL_CATTANEO: "maxwell_cattaneo.scheme",
    ModelId.STANDARD_HEAT_DFF: "standard_heat_dff.scheme",
    ModelId.SYMMETRY: "symmetry.scheme",
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def scheme_file_text(model: ModelId) -> str:
    return (
        resources.files("microlim").joinpath("schemes", SCHEME_FILES[model]).read_text()
    )


def _walk_form(p: Fraction):
    return expected_reduction(ModelId.STANDARD_HEAT, p)


# -- individual checks ------------------------------------------------------


def check_golden_derivations() -> str:
    started = time.perf_counter()
    for model in ModelId:
        stencil = assemble(scheme_for(model))
        if model is ModelId.STANDARD_HEAT:
            report = reduce(stencil, Fraction(1, 2), label=model.value)
            expected = expected_reduction(model, Fraction(1, 2))
        else:
            report = reduce(stencil, label=model.value)
            expected = expected_reduction(model)
        if report.form != expected:
            raise AssertionError(f"{model.value}: got {report.form}, want {expected}")
        if not verify_report(report):
            raise AssertionError(f"{model.value}: report replay failed")
    elapsed = time.perf_counter() - started
    if elapsed >= 1.0:
        raise AssertionError(f"golden derivations took {elapsed:.2f}s (budget 1s)")
    return f"4 models, {elapsed * 1000:.0f} ms"


def check_symmetry_collected_form() -> str:
    stencil = assemble(scheme_for(ModelId.SYMMETRY)).scaled(3 * DT)
    one = LaurentPoly.one()
    expected = Stencil(
        {
            (1, 1): one - 3 * TAU * D * DX ** -2,
            (1, -1): one - 3 * TAU * D * DX ** -2,
            (1, 0): one + 6 * TAU * D * DX ** -2,
            (0, 1): -(3 * DT * D * DX ** -2 - 3 * TAU * D * DX ** -2),
            (0, -1): -(3 * DT * D * DX ** -2 - 3 * TAU * D * DX ** -2),
            (0, 0): -(LaurentPoly.constant(3) - 6 * DT * D * DX ** -2 + 6 * TAU * D * DX ** -2),
        }
    )
    if stencil != expected:
        raise AssertionError(f"collected symmetry stencil mismatch: {stencil}")
    return "five coefficients reproduced exactly"


def check_scale_identities() -> str:
    report = reduce(assemble(scheme_for(ModelId.MAXWELL_CATTANEO)))
    scales = derived_scales(report.form)
    if scales.diffusivity_check != D:
        raise AssertionError(f"dx^2/(2 dt) = {scales.diffusivity_check}, want D")
    if scales.length_scale_sq != TAU * D:
        raise AssertionError(f"L^2 = {scales.length_scale_sq}, want tau*D")
    return "dx^2/(2*dt) = D and L^2 = tau*D"


def check_positivity() -> str:
    rng = random.Random(20260810)
    for case in range(1000):
        n = rng.randint(3, 16)
        values = tuple(
            Fraction(rng.randint(0, 12), rng.randint(1, 7)) for _ in range(n)
        )
        p = Fraction(rng.randint(1, 100), 200)
        walk = WalkRun(
            form=_walk_form(p),
            field=GridField(values, Fraction(1), PERIODIC),
            dt=Fraction(1),
        )
        out = step(walk).field.values
        if any(v < 0 for v in out):
            raise AssertionError(f"case {case}: negative value with p={p}")
    return "1000 randomized exact cases nonnegative"


def check_conservation() -> str:
    rng = random.Random(7)
    values = tuple(Fraction(rng.randint(0, 20), rng.randint(1, 9)) for _ in range(24))
    walk = WalkRun(
        form=_walk_form(Fraction(2, 5)),
        field=GridField(values, Fraction(1), PERIODIC),
        dt=Fraction(1),
    )
    total = walk.field.mass
    walk = run(walk, 100)
    if walk.field.mass != total:
        raise AssertionError(f"mass changed: {total} -> {walk.field.mass}")
    if any(m != total for m in walk.mass_trace):
        raise AssertionError("mass trace not constant")
    return "sum invariant over 100 exact steps"


def check_binomial_oracle() -> str:
    n, sites = 10, 32
    walk = WalkRun(
        form=_walk_form(Fraction(1, 2)),
        field=GridField.delta(sites, Fraction(1), PERIODIC, exact=True),
        dt=Fraction(1),
    )
    walk = run(walk, n)
    center = sites // 2
    for site, value in enumerate(walk.field.values):
        j = site - center
        if abs(j) > n or (n + j) % 2:
            expected = Fraction(0)
        else:
            expected = Fraction(math.comb(n, (n + j) // 2), 2 ** n)
        if value != expected:
            raise AssertionError(f"site {site}: {value} != {expected}")
    return "10-step delta response equals C(10, j)/2^10"


def check_dsl_equivalence() -> str:
    for model in ModelId:
        parsed = parse_scheme(scheme_file_text(model))
        if parsed.assemble() != assemble(scheme_for(model)):
            raise AssertionError(f"{model.value}: DSL stencil differs from built-in")
    rng = random.Random(987654321)
    for case in range(500):
        scheme = random_scheme_file(rng)
        if parse_scheme(render_scheme(scheme)) != scheme:
            raise AssertionError(f"round trip failed for generated case {case}")
    return "4 model files bit-identical; 500 generated round trips"


_CHECKS = [
    ("golden-derivations", check_golden_derivations),
    ("symmetry-collected-form", check_symmetry_collected_form),
    ("scale-identities", check_scale_identities),
    ("positivity", check_positivity),
    ("conservation", check_conservation),
    ("binomial-oracle", check_binomial_oracle),
    ("dsl-equivalence", check_dsl_equivalence),
]


def run_all() -> list[CheckResult]:
    results = []
    for name, func in _CHECKS:
        try:
            detail = func()
            results.append(CheckResult(name, True, detail))
        except Exception as exc:  # report, never crash the suite
            results.append(CheckResult(name, False, str(exc)))
    return results
