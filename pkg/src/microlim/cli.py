"""Command-line front end.

Exit codes: 0 success, 1 usage or parse errors, 2 reduction failures,
3 numeric failures.  Data outputs (JSON, CSV) are deterministic given the
flags; run metadata goes to a separate ``.meta.json`` sidecar when
writing to a file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from .dsl import parse_scheme
from .errors import (
    Diagnostic,
    MicrolimError,
    NumericError,
    PositivityViolation,
    ReductionError,
    UnsolvableConstraint,
)
from .laurent import SymbolId
from .models import ModelId, ModelParams, expected_reduction, model_from_cli_name, pde_text, scheme_for, template_names
from .oscillator import (
    ChainBoundary,
    ChainParams,
    ChainState,
    integrate,
    measure_dispersion,
    mode_state,
)
from .reduction import ReductionReport, reduce
from .simulate import (
    PERIODIC,
    ConvergenceRow,
    Dirichlet,
    GridField,
    WalkRun,
    convergence_study,
    numeric_scales,
    run as run_walk,
)
from .stencil import assemble
from . import selfcheck

_STEP_5A_HINT = "hint: construct another discretization and try again"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are exit 1
        raise _UsageError(message)


def _fraction(text: str) -> Fraction:
    """Exact rational flag: 'p/q' or a decimal string (decimals are exact)."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _positive_fraction(text: str) -> Fraction:
    value = _fraction(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="microlim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"microlim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_source(p, required=True):
        p.add_argument("model", nargs="?", help="built-in model id (see list-models)")
        p.add_argument("--scheme-file", help="path to a .scheme file instead of a model id")
        p.add_argument("--D", type=_positive_fraction, default=Fraction(1), help="diffusivity (rational)")
        p.add_argument("--tau", type=_positive_fraction, help="relaxation time (rational)")
        p.add_argument("--p", type=_fraction, help="free walk parameter in (0, 1/2]")

    p = sub.add_parser("derive", help="reduce a scheme to its random-walk form")
    add_model_source(p)
    p.add_argument("--json", action="store_true", help="emit the full report as JSON")
    p.add_argument("--trace", action="store_true", help="show each elimination step")
    p.add_argument(
        "--solve-order",
        choices=["dt,dx2", "dx2,dt"],
        default="dt,dx2",
        help="which step size to isolate first",
    )

    p = sub.add_parser("simulate", help="iterate the emitted walk on a lattice")
    add_model_source(p)
    p.add_argument("--dx", type=_positive_fraction, help="lattice spacing (ratio-constrained schemes)")
    p.add_argument("--dt", type=_positive_fraction, help="time step (schemes that fix neither)")
    p.add_argument("--sites", type=int, default=128)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--boundary", choices=["periodic", "dirichlet"], default="periodic")
    p.add_argument("--left", type=_fraction, default=Fraction(0))
    p.add_argument("--right", type=_fraction, default=Fraction(0))
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("converge", help="continuum-limit refinement study")
    add_model_source(p)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--base-steps", type=int, default=64)
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("chain", help="coupled-oscillator chain for the wave equation")
    p.add_argument("--c", type=_positive_fraction, default=Fraction(1), help="wave speed")
    p.add_argument("--dx", type=_positive_fraction, default=Fraction(1))
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--mass", type=_positive_fraction, default=Fraction(1))
    p.add_argument("--mode", type=int, action="append", help="Fourier mode(s) to excite; repeatable")
    p.add_argument("--dt", type=_positive_fraction, help="time step (default 0.1*dx/c)")
    p.add_argument("--steps", type=int, default=1000, help="steps for --trajectory")
    p.add_argument("--boundary", choices=["periodic", "fixed-ends"], default="periodic")
    p.add_argument("--trajectory", action="store_true", help="emit step,time,site,u,v instead of the dispersion report")
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("list-models", help="show the built-in model catalog")
    p.add_argument("--json", action="store_true")

    sub.add_parser("check", help="run the golden derivation and invariant suite")
    return parser


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _load_report(args) -> tuple[ReductionReport, Optional[ModelId]]:
    if args.scheme_file and args.model:
        raise _UsageError("give either a model id or --scheme-file, not both")
    solve_order = tuple(getattr(args, "solve_order", "dt,dx2").split(","))
    if args.p is not None and not (0 < args.p <= Fraction(1, 2)):
        raise _UsageError("p must lie in (0, 1/2]")
    if args.scheme_file:
        with open(args.scheme_file, "r", encoding="utf-8") as handle:
            scheme = parse_scheme(handle.read())
        stencil = scheme.assemble()
        label = os.path.basename(args.scheme_file)
        report = reduce(stencil, args.p, label=label, solve_order=solve_order)
        return report, None
    if not args.model:
        raise _UsageError("a model id or --scheme-file is required")
    model = _model_or_usage(args.model)
    params = _params_for(model, args)
    params.check_model(model)
    stencil = assemble(scheme_for(model))
    report = reduce(stencil, args.p, label=model.value, solve_order=solve_order)
    return report, model


def _model_or_usage(name: str) -> ModelId:
    try:
        return model_from_cli_name(name)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _params_for(model: Optional[ModelId], args) -> ModelParams:
    needs_tau = model in (ModelId.MAXWELL_CATTANEO, ModelId.SYMMETRY)
    if needs_tau and args.tau is None:
        raise _UsageError(f"model {model.value} requires --tau")
    return ModelParams(D=args.D, tau=args.tau if needs_tau else None)


def _write_rows(path: Optional[str], header: Sequence[str], rows, meta: dict) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(buffer.getvalue())
        with open(path + ".meta.json", "w", encoding="utf-8") as handle:
            json.dump(meta, handle, indent=2, sort_keys=True)
            handle.write("\n")
    else:
        sys.stdout.write(buffer.getvalue())


def _float_text(value: float) -> str:
    return format(value, ".12g")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_derive(args) -> int:
    report, _ = _load_report(args)
    if args.json:
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
        return 0
    if args.trace:
        print(f"input stencil ({report.label}):")
        for off, poly in report.stencil.items():
            print(f"  ({off.dt_steps},{off.dx_steps}): {poly}")
        print(f"canonical scale factor: {report.scale}")
        for off, poly in report.eliminated:
            state = "already zero" if poly.is_zero else f"constraint {poly} = 0"
            print(f"eliminate ({off.dt_steps},{off.dx_steps}): {state}")
        for binding in report.bindings:
            print(f"bind {binding.render()}    [{binding.source}]")
        print(f"normalizer: {report.normalizer}")
    form = report.form
    print(f"weights: p+ = {form.p_plus}, p0 = {form.p_zero}, p- = {form.p_minus}")
    for binding in form.constraints:
        print(f"binding: {binding.render()}")
    if form.length_scale_sq is not None:
        print(f"length scale: L^2 = {form.length_scale_sq}")
    return 0


def cmd_simulate(args) -> int:
    report, model = _load_report(args)
    params = _params_for(model, args) if model else ModelParams(D=args.D, tau=args.tau)
    dt, dx2 = numeric_scales(report, params, dx=args.dx, dt=args.dt)
    dx = math.sqrt(float(dx2))
    exact = os.environ.get("MICROLIM_RATIONAL") == "1"
    if args.boundary == "dirichlet":
        boundary = Dirichlet(args.left, args.right)
    else:
        boundary = PERIODIC
    if args.sites < 3:
        raise _UsageError("--sites must be at least 3")
    field = GridField.delta(args.sites, dx, boundary, exact=exact)
    walk = WalkRun(form=report.form, field=field, dt=dt if exact else float(dt))

    rows = []
    for step_index in range(args.steps + 1):
        for site, value in enumerate(walk.field.values):
            x = (site - args.sites // 2) * dx
            rows.append(
                (step_index, site, _float_text(x), _float_text(float(value)))
            )
        if step_index < args.steps:
            walk = run_walk(walk, 1)
    meta = {
        "command": "simulate",
        "model": report.label,
        "D": str(params.D),
        "tau": str(params.tau) if params.tau is not None else None,
        "p": str(args.p) if args.p is not None else None,
        "dt": str(dt),
        "dx2": str(dx2),
        "sites": args.sites,
        "steps": args.steps,
        "boundary": args.boundary,
        "exact": exact,
        "version": __version__,
    }
    _write_rows(args.out, ["step", "site", "x", "value"], rows, meta)
    return 0


def cmd_converge(args) -> int:
    report, model = _load_report(args)
    params = _params_for(model, args) if model else ModelParams(D=args.D, tau=args.tau)
    rows = convergence_study(
        report, params, args.levels, base_steps=args.base_steps
    )
    csv_rows = [
        (
            r.level,
            _float_text(r.dx),
            _float_text(r.dt),
            _float_text(r.l1_error),
            "" if r.ratio is None else _float_text(r.ratio),
        )
        for r in rows
    ]
    meta = {
        "command": "converge",
        "model": report.label,
        "D": str(params.D),
        "tau": str(params.tau) if params.tau is not None else None,
        "p": str(args.p) if args.p is not None else None,
        "levels": args.levels,
        "base_steps": args.base_steps,
        "version": __version__,
    }
    _write_rows(args.out, ["level", "dx", "dt", "l1_error", "ratio"], csv_rows, meta)
    return 0


def cmd_chain(args) -> int:
    boundary = (
        ChainBoundary.PERIODIC if args.boundary == "periodic" else ChainBoundary.FIXED_ENDS
    )
    params = ChainParams(
        c=float(args.c), dx=float(args.dx), mass=float(args.mass),
        n_sites=args.N, boundary=boundary,
    )
    dt = float(args.dt) if args.dt is not None else 0.1 * params.max_stable_dt
    meta = {
        "command": "chain",
        "c": str(args.c),
        "dx": str(args.dx),
        "N": args.N,
        "mass": str(args.mass),
        "dt": _float_text(dt),
        "boundary": args.boundary,
        "version": __version__,
    }
    if args.trajectory:
        modes = args.mode or [1]
        state = mode_state(params, modes[0])
        rows = []
        for step_index in range(args.steps + 1):
            for site in range(params.n_sites):
                rows.append(
                    (
                        step_index,
                        _float_text(step_index * dt),
                        site,
                        _float_text(float(state.u[site])),
                        _float_text(float(state.v[site])),
                    )
                )
            if step_index < args.steps:
                state = integrate(state, params, dt, 1)
        meta["steps"] = args.steps
        meta["mode"] = modes[0]
        _write_rows(args.out, ["step", "time", "site", "u", "v"], rows, meta)
        return 0
    modes = args.mode or [1, 2, 4, 8]
    rows = []
    for mode in modes:
        result = measure_dispersion(params, mode, dt=dt)
        rows.append(
            (
                mode,
                _float_text(result.omega_measured),
                _float_text(result.omega_theory),
                _float_text(result.rel_err),
            )
        )
    meta["modes"] = modes
    _write_rows(
        args.out, ["mode", "omega_measured", "omega_theory", "rel_err"], rows, meta
    )
    return 0


def cmd_list_models(args) -> int:
    entries = []
    for model in ModelId:
        expected = (
            expected_reduction(model)
            if model is not ModelId.STANDARD_HEAT
            else expected_reduction(model, Fraction(1, 2))
        )
        entries.append(
            {
                "id": model.value,
                "pde": pde_text(model),
                "templates": template_names(model),
                "weights": {
                    "plus": str(expected.p_plus),
                    "zero": str(expected.p_zero),
                    "minus": str(expected.p_minus),
                },
                "note": "weights shown for p = 1/2"
                if model is ModelId.STANDARD_HEAT
                else None,
            }
        )
    if args.json:
        print(json.dumps(entries, indent=2, sort_keys=True))
        return 0
    for entry in entries:
        print(f"{entry['id']}")
        print(f"  pde:       {entry['pde']}")
        print(f"  templates: {', '.join(entry['templates'])}")
        weights = entry["weights"]
        note = f"   ({entry['note']})" if entry["note"] else ""
        print(
            f"  weights:   ({weights['plus']}, {weights['zero']}, {weights['minus']}){note}"
        )
    return 0


def cmd_check(_args) -> int:
    results = selfcheck.run_all()
    failed = 0
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"[{status}] {result.name}: {result.detail}")
        failed += 0 if result.passed else 1
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


_COMMANDS = {
    "derive": cmd_derive,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "chain": cmd_chain,
    "list-models": cmd_list_models,
    "check": cmd_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Diagnostic as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UnsolvableConstraint, PositivityViolation) as exc:
        print(f"error: {exc}\n{_STEP_5A_HINT}", file=sys.stderr)
        return 2
    except ReductionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (MicrolimError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
