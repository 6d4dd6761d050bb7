"""Command-line front end.

Every subcommand writes ``report.json`` (and any data files) into ``--out``
together with a ``run.json`` manifest of SHA-256 checksums, and prints a
short summary.  Numbers in reports are ``{value, error, expected, pass}``
records.

Exit codes: 0 pass, 1 a check failed, 2 usage error, 3 singular data,
4 ambiguous limit classification, 5 divergent integral.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, diagnostics, em_acoustics, energy, io, pulses
from .core import RAY_KINDS, THREADS_ENV, GridError, PulseParams, RaySpec, evaluate_on_grid, make_grid
from .diagnostics import FitQualityError, GeometryError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_SINGULAR = 3
EXIT_AMBIGUOUS = 4
EXIT_DIVERGENT = 5

SAMPLE_BOX = {"x": (-3.0, 3.0), "y": (-3.0, 3.0), "z": (-5.0, 5.0), "ct": (-5.0, 5.0)}


class UsageError(ValueError):
    """Bad flag values detected after parsing."""


def load_expected() -> dict:
    """The bundled table of reference values."""
    return json.loads(resources.files("slowdecay").joinpath("data/expected.json").read_text(encoding="utf-8"))


def record(value, error=None, expected=None, passed=None, **extra) -> dict:
    out = {"value": value, "error": error, "expected": expected, "pass": passed}
    out.update(extra)
    return out


def _rel_ok(value, expected, rel) -> bool:
    return bool(abs(value - expected) <= rel * abs(expected))


# ----------------------------------------------------------------- parsing


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _vector(text: str) -> tuple[complex, ...]:
    try:
        vals = tuple(complex(v.replace("i", "j")) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}") from exc
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("m needs exactly three components")
    return vals


def _window(text: str) -> tuple[str, float, float]:
    try:
        name, rng = text.split("=")
        lo, hi = rng.split(":")
        return name.strip(), float(lo), float(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected axis=min:max, got {text!r}") from exc


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected min:max, got {text!r}") from exc


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run control")
    g.add_argument("--out", default="slowdecay-out", help="output directory (default: %(default)s)")
    g.add_argument("--threads", type=int, default=None, help=f"worker threads (overrides ${THREADS_ENV})")
    g.add_argument("--tol", type=float, default=None, help="relative quadrature tolerance")
    g.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return p


def _pulse_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pulse parameters")
    g.add_argument("--c", type=float, default=None, help="wave speed")
    g.add_argument("--cts", type=float, default=None, help="c * t_s of the splash family")
    g.add_argument("--zs", type=float, default=None, help="z_s of the unidirectional family")
    g.add_argument("--a1", type=float, default=None)
    g.add_argument("--a2", type=float, default=None)
    g.add_argument("--nu", type=float, default=None, help="fractional power minus one")
    g.add_argument("--k", type=float, default=None, help="focus wave mode wavenumber")
    return p


def _ray_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=float, default=0.0, help="offset from the peak along the ray")
    p.add_argument("--alpha", type=float, default=math.pi / 4, help="polar angle of oblique rays")
    p.add_argument("--ct0", type=float, default=10.0)
    p.add_argument("--doublings", type=int, default=20)


def params_from(args) -> PulseParams:
    base = PulseParams()
    c = base.c if args.c is None else args.c
    changes = {"c": c}
    if args.cts is not None:
        changes["t_s"] = args.cts / c
    for flag, name in (("zs", "z_s"), ("a1", "a1"), ("a2", "a2"), ("nu", "nu")):
        if getattr(args, flag) is not None:
            changes[name] = getattr(args, flag)
    try:
        return base.with_(**changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _field(args, params: PulseParams, name: str | None = None) -> Callable:
    name = name or args.pulse
    kw = {}
    if name == "f":
        kw["nu"] = params.nu
    if name == "G" and args.k is not None:
        kw["k"] = args.k
    return pulses.field(name, params, **kw)


def _params_dict(p: PulseParams) -> dict:
    return {"c": p.c, "t_s": p.t_s, "cts": p.cts, "z_s": p.z_s, "a1": p.a1, "a2": p.a2, "nu": p.nu}


def _sample_points(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(*SAMPLE_BOX[a], n) for a in ("x", "y", "z", "ct")])


# ------------------------------------------------------------------ field


def cmd_field(args, out: Path):
    params = params_from(args)
    axes = {}
    for name, lo, hi in args.window:
        axes[name] = (lo, hi, args.n)
    try:
        grid = make_grid(axes)
    except GridError as exc:
        raise UsageError(str(exc)) from exc
    fixed = {"ct": args.ct}
    if "z" not in axes:
        fixed["z"] = 0.0
    if not {"x", "y", "rho"} & set(axes):
        fixed["rho"] = 0.0
    fixed = {k: v for k, v in fixed.items() if k not in axes}
    try:
        filled = evaluate_on_grid(_field(args, params), params, grid, fixed)
    except pulses.SingularSplitError as exc:
        return {"error": str(exc)}, EXIT_SINGULAR, []
    except GridError as exc:
        raise UsageError(str(exc)) from exc
    files = [io.write_grid_csv(out / "field.csv", filled)]
    if args.vtk:
        files.append(io.write_vtk(out / "field.vtk", filled, f"{args.pulse} at ct={args.ct}"))
    vals = filled.values
    center = vals[tuple(n // 2 for n in filled.shape)]
    frac = filled.nonfinite / filled.size
    report = {
        "shape": list(filled.shape),
        "axes": list(filled.axis_order),
        "fixed": fixed,
        "nonfinite": filled.nonfinite,
        "center": record(complex(center)),
        "max_abs": record(float(np.nanmax(np.abs(vals))) if frac < 1 else None),
        "singular_fraction": record(frac, expected=0.5, passed=frac <= 0.5),
    }
    return report, (EXIT_SINGULAR if frac > 0.5 else EXIT_OK), files


# ----------------------------------------------------------------- limits


def expected_limit(pulse: str, ray: RaySpec, params: PulseParams) -> dict:
    """Expected class and, where a closed form exists, value of ``ct * field``."""
    table = load_expected()["limits"]["classes"]
    kind, d = ray.kind, ray.delta
    c, cts, zs, nu = params.c, params.cts, params.z_s, params.nu
    if pulse == "f":
        cls = dict(table["f"])
        if nu == 0:
            cls["forward-z"] = "finite"
        elif nu > 0:
            cls["forward-z"] = "zero"
    else:
        cls = table.get(pulse)
    if cls is None:
        return {"class": None, "value": None}
    klass = cls[kind]
    value = None
    if klass == "zero":
        value = 0j
    elif pulse == "psi" and kind != "diagonal":
        shift = d * (math.sin(ray.alpha) + math.cos(ray.alpha)) if kind == "oblique" else d
        value = 1.0 / (2j * cts - 2.0 * shift)
    elif pulse == "u" and kind == "forward-z":
        value = 1j / (cts + zs + 1j * d)
    elif pulse == "u" and kind == "radial":
        value = 1j / (2 * cts + 2j * d)
    elif pulse == "U" and kind == "backward-z":
        value = complex(math.log(2.0) / c)
    elif pulse == "U" and kind in ("forward-z", "oblique"):
        value = complex(1.0 / c)
    elif pulse == "U" and kind == "radial":
        value = complex(0.5 / c)
    elif pulse == "Psi" and kind != "diagonal":
        value = complex(-0.5 / c)
    elif pulse == "f" and kind == "forward-z":
        value = 1.0 / ((-2j) ** (nu + 1.0) * (params.a1 + 1j * d))
    elif pulse == "f" and kind == "backward-z":
        value = 0.5j * (params.a2 + 1j * d) ** (-(nu + 1.0))
    elif pulse == "f" and kind == "radial":
        value = 1j * (params.a1 + params.a2 + 2j * d) ** (-(nu + 1.0))
    return {"class": klass, "value": value, "exponent": -nu if klass == "power-divergent" else None}


def _fits_summary(res) -> dict:
    return {name: {"rss": fit.rss, "r2": fit.r2, "kind": fit.kind} for name, fit in res.fits.items()}


def cmd_limits(args, out: Path):
    params = params_from(args)
    fn = _field(args, params)
    rel = load_expected()["limits"]["rel_tol"]
    tol_exp = load_expected()["decay"]["exponent"]["abs_tol"]
    tol_phase = load_expected()["decay"]["phase"]["abs_tol"]
    rays = args.rays or list(RAY_KINDS)
    report, codes = {}, []
    for kind in rays:
        if kind not in RAY_KINDS:
            raise UsageError(f"unknown ray {kind!r}; expected one of {RAY_KINDS}")
        ray = RaySpec(kind, delta=args.delta, alpha=args.alpha if kind == "oblique" else 0.0,
                      ct0=args.ct0, doublings=args.doublings)
        try:
            res = diagnostics.limit_probe(fn, ray)
        except FitQualityError as exc:
            report[kind] = {"classification": "error", "message": str(exc), "pass": False}
            codes.append(EXIT_SINGULAR)
            continue
        exp = expected_limit(args.pulse, ray, params)
        entry = {"classification": res.classification, "expected_class": exp["class"],
                 "alternatives": list(res.alternatives)}
        ok = None if exp["class"] is None else res.classification == exp["class"]
        if res.classification == "power-divergent":
            entry["exponent"] = record(res.exponent, None, exp.get("exponent"),
                                       None if exp.get("exponent") is None else abs(res.exponent - exp["exponent"]) <= tol_exp)
            ev = exp["value"]
            entry["phase"] = record(res.phase, None, None if ev is None else cmath.phase(ev),
                                    None if ev is None else abs(res.phase - cmath.phase(ev)) <= tol_phase)
            entry["coefficient"] = record(res.value, None, ev)
            ok = ok and entry["exponent"]["pass"] is not False and entry["phase"]["pass"] is not False
        else:
            ev = exp["value"]
            vpass = None
            if ev is not None and ok:
                vpass = True if ev == 0 else _rel_ok(res.value, ev, rel) or abs(res.value - ev) <= res.error
            entry["value"] = record(res.value, res.error, ev, vpass)
            ok = ok and vpass is not False if ok is not None else None
        if res.classification == "ambiguous":
            entry["fits"] = _fits_summary(res)
            codes.append(EXIT_AMBIGUOUS)
        elif ok is False:
            codes.append(EXIT_FAIL)
        entry["pass"] = ok
        report[kind] = entry
    code = EXIT_AMBIGUOUS if EXIT_AMBIGUOUS in codes else (max(codes) if codes else EXIT_OK)
    return {"pulse": args.pulse, "rays": report}, code, []


# ----------------------------------------------------------------- energy


def _qrec(res, expected=None, rel=None):
    passed = None if expected is None or not res.converged else _rel_ok(res.value, expected, rel)
    return record(float(np.real(res.value)), res.error, expected, passed,
                  converged=res.converged, divergent=res.divergent)


def _is_reference(params: PulseParams, ref: dict) -> bool:
    return all(abs(getattr(params, k) - v) < 1e-12 for k, v in ref.items())


def cmd_energy(args, out: Path):
    params = params_from(args)
    table = load_expected()["norm"]
    ref = _is_reference(params, table["params"])
    tol = args.tol if args.tol is not None else 1e-10
    norm = energy.norm_spectral(params, epsrel=tol)
    bound = energy.bound_B_nu(params, epsrel=tol)
    report = {"params": _params_dict(params)}
    if norm.divergent or bound.divergent:
        report["spectral"] = _qrec(norm)
        report["bound"] = _qrec(bound)
        report["divergent"] = True
        return report, EXIT_DIVERGENT, []
    report["spectral"] = _qrec(norm, table["spectral"]["value"] if ref else None, table["spectral"]["rel_tol"])
    report["bound"] = _qrec(bound, table["bound"]["value"] if ref else None, table["bound"]["rel_tol"])
    report["bound_holds"] = bool(bound.value >= norm.value - bound.error - norm.error)
    checks = [report["bound_holds"], report["spectral"]["pass"], report["bound"]["pass"]]
    spatial = {}
    rel = table["spatial"]["rel_tol"]
    for t in args.t:
        res = energy.norm_spatial(params, t=t, epsrel=max(tol, 1e-8))
        rec = _qrec(res, table["spatial"]["value"] if ref else float(norm.value), rel)
        if res.divergent:
            report["spatial"] = {str(t): rec}
            report["divergent"] = True
            return report, EXIT_DIVERGENT, []
        spatial[str(t)] = rec
        checks.append(rec["pass"])
    report["spatial"] = spatial
    report["divergent"] = False
    ok = all(c is not False for c in checks)
    return report, EXIT_OK if ok else EXIT_FAIL, []


# ------------------------------------------------------------------ decay


def cmd_decay(args, out: Path):
    params = params_from(args)
    fn = _field(args, params)
    ray = RaySpec(args.ray, delta=args.delta, alpha=args.alpha if args.ray == "oblique" else 0.0,
                  ct0=args.ct0, doublings=args.doublings)
    table = load_expected()["decay"]
    try:
        fit = diagnostics.decay_fit(fn, ray, window=args.window)
    except FitQualityError as exc:
        return {"error": str(exc)}, EXIT_FAIL, []
    expected = phase_exp = None
    if args.pulse == "f" and args.ray == "forward-z" and -1 < params.nu < 0:
        expected = -params.nu
        phase_exp = (params.nu + 1.0) * math.pi / 2 - math.atan2(args.delta, params.a1)
    report = {"params": _params_dict(params), "ray": args.ray,
              "slope": record(fit.slope, fit.rms_residual, expected,
                              None if expected is None else abs(fit.slope - expected) <= table["exponent"]["abs_tol"]),
              "amplitude": record(fit.amplitude)}
    if phase_exp is not None:
        res = diagnostics.limit_probe(fn, ray)
        report["phase"] = record(res.phase, None, phase_exp, abs(res.phase - phase_exp) <= table["phase"]["abs_tol"])
    ok = all(v.get("pass") is not False for v in report.values() if isinstance(v, dict) and "pass" in v)
    return report, EXIT_OK if ok else EXIT_FAIL, []


# ---------------------------------------------------------------- maxwell


def cmd_maxwell(args, out: Path):
    params = params_from(args)
    fn = _field(args, params)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", em_acoustics.PolarizationWarning)
        cfg = em_acoustics.HertzConfig(args.m)
    table = load_expected()["maxwell"]
    pts = _sample_points(args.points, args.seed)
    corrupt = em_acoustics.swap_xy if args.corrupt else None
    try:
        rep = em_acoustics.maxwell_residual(fn, cfg, pts, corrupt=corrupt, reject_singular=True)
    except (em_acoustics.SamplingError, em_acoustics.StencilError) as exc:
        return {"error": str(exc)}, EXIT_SINGULAR, []
    limit = table["residual"]["max"]
    report = {"params": _params_dict(params), "m": [complex(v) for v in cfg.m],
              "residual": record(rep.max_relative, None, limit, rep.max_relative < limit,
                                 curl=float(rep.extra["curl"].max()), divergence=float(rep.extra["divergence"].max()),
                                 rejected=rep.rejected)}
    checks = [report["residual"]["pass"]]
    if not args.no_asymptotics:
        asym = em_acoustics.em_asymptotics(cfg, params, field_fn=fn)
        transverse = cfg.m[0] != 0 or cfg.m[1] != 0
        expected = -params.nu if (args.pulse == "f" and transverse and -1 < params.nu < 0) else None
        comps = {k: {"classification": v.classification, "exponent": v.exponent} for k, v in asym.components.items()}
        report["asymptotics"] = comps
        if expected is not None:
            ok = abs(asym.transverse_exponent - expected) <= table["transverse_exponent"]["abs_tol"]
            report["transverse_exponent"] = record(asym.transverse_exponent, None, expected, ok)
            report["axial_abnormal"] = record(asym.axial_abnormal, None, False, not asym.axial_abnormal)
            checks += [ok, not asym.axial_abnormal]
        elif args.pulse == "f" and not transverse:
            none = not any(asym.abnormal.values())
            report["abnormal_components"] = record([k for k, v in asym.abnormal.items() if v], None, [], none)
            checks.append(none)
    return report, EXIT_OK if all(checks) else EXIT_FAIL, []


# -------------------------------------------------------------- acoustics


def cmd_acoustics(args, out: Path):
    params = params_from(args)
    fn = _field(args, params)
    table = load_expected()["acoustics"]
    pts = _sample_points(args.points, args.seed)
    try:
        rep = em_acoustics.fluid_residuals(fn, pts, rho0=args.rho0, c=params.c, reject_singular=True)
    except (em_acoustics.SamplingError, em_acoustics.StencilError) as exc:
        return {"error": str(exc)}, EXIT_SINGULAR, []
    limit = table["residual"]["max"]
    report = {"params": _params_dict(params), "rho0": args.rho0,
              "residual": record(rep.max_relative, None, limit, rep.max_relative < limit,
                                 continuity=float(rep.extra["continuity"].max()),
                                 euler=float(rep.extra["euler"].max()), rejected=rep.rejected),
              "convective_ratio": record(float(np.median(rep.extra["convective_ratio"])),
                                         None, None, None, max=float(np.max(rep.extra["convective_ratio"])))}
    checks = [report["residual"]["pass"]]
    asym = em_acoustics.acoustic_asymptotics(fn, rho0=args.rho0, c=params.c)
    report["asymptotics"] = {k: {"classification": v.classification, "exponent": v.exponent} for k, v in asym.items()}
    if args.pulse == "f" and -1 < params.nu < 0:
        for name in ("v_z", "p"):
            ok = asym[name].classification == "power-divergent" and \
                abs(asym[name].exponent + params.nu) <= table["exponent"]["abs_tol"]
            report[f"{name}_exponent"] = record(asym[name].exponent, None, -params.nu, ok)
            checks.append(ok)
    if args.ra is not None:
        report["rayleigh_distance"] = record(em_acoustics.rayleigh_distance(params.a1, args.ra, params.c))
    return report, EXIT_OK if all(checks) else EXIT_FAIL, []


# ------------------------------------------------------------- solidangle


def cmd_solidangle(args, out: Path):
    params = params_from(args)
    table = load_expected()["solid_angle"]
    ref = args.pulse == "f" and _is_reference(params, table["params"])
    rows, checks = {}, []
    omegas = []
    for ct in args.ct:
        try:
            if args.em:
                import warnings
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", em_acoustics.PolarizationWarning)
                    cfg = em_acoustics.HertzConfig(args.m)
                g = em_acoustics.em_solid_angle(params, ct, cfg)
            else:
                g = diagnostics.peak_geometry(_field(args, params), ct, part=args.part)
        except GeometryError as exc:
            rows[str(ct)] = {"error": str(exc)}
            checks.append(False)
            continue
        exp = None
        if ref and not args.em:
            exp = table["table"].get(str(int(ct))) if float(ct).is_integer() else None
        elif ref and args.em and abs(ct - table["em"]["ct"]) < 1e-9:
            exp = table["em"]["value"]
        rel = table["em"]["rel_tol"] if args.em else table["rel_tol"]
        ok = None if exp is None else _rel_ok(g.omega, exp, rel)
        rows[str(ct)] = record(g.omega, None, exp, ok, hwhm=g.hwhm, z_peak=g.z, peak=g.value)
        checks.append(ok)
        omegas.append((ct, g.omega))
    report = {"params": _params_dict(params), "pulse": args.pulse, "em": args.em, "omega": rows}
    if len(omegas) >= 2:
        x, y = np.log10([o[0] for o in omegas]), np.log10([o[1] for o in omegas])
        slope = float(np.polyfit(x, y, 1)[0])
        exp = table["log_slope"]["value"] if ref and not args.em else None
        ok = None if exp is None else abs(slope - exp) <= table["log_slope"]["abs_tol"]
        report["log_slope"] = record(slope, None, exp, ok)
        checks.append(ok)
    return report, EXIT_OK if all(c is not False for c in checks) else EXIT_FAIL, []


# ------------------------------------------------------------------- main


COMMANDS = {
    "field": cmd_field,
    "limits": cmd_limits,
    "energy": cmd_energy,
    "decay": cmd_decay,
    "maxwell": cmd_maxwell,
    "acoustics": cmd_acoustics,
    "solidangle": cmd_solidangle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowdecay", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common, pflags = _common(), _pulse_flags()
    parents = [common, pflags]

    p = sub.add_parser("field", parents=parents, help="sample a pulse on a grid and export it")
    p.add_argument("--pulse", required=True, choices=pulses.PULSE_NAMES)
    p.add_argument("--ct", type=float, default=0.0)
    p.add_argument("--window", type=_window, nargs="+", default=[("x", -8.0, 8.0), ("z", -8.0, 8.0)],
                   help="axis=min:max, one per grid axis (default x=-8:8 z=-8:8)")
    p.add_argument("--n", type=int, default=161, help="samples per axis")
    p.add_argument("--vtk", action="store_true", help="also write a legacy-ASCII VTK structured grid")

    p = sub.add_parser("limits", parents=parents, help="classify ct*field along rays")
    p.add_argument("--pulse", required=True, choices=pulses.PULSE_NAMES)
    p.add_argument("--rays", type=lambda s: s.split(","), default=None, help="comma-separated ray kinds")
    _ray_flags(p)

    p = sub.add_parser("energy", parents=parents, help="square norms and the spectral bound")
    p.add_argument("--t", type=_floats, default=[0.0, 10.0, 100.0], help="times for the spatial norm")

    p = sub.add_parser("decay", parents=parents, help="log-log growth exponent of ct*field along a ray")
    p.add_argument("--pulse", default="f", choices=pulses.PULSE_NAMES)
    p.add_argument("--ray", default="forward-z", choices=RAY_KINDS)
    p.add_argument("--window", type=_range, default=None, help="ct range min:max")
    _ray_flags(p)

    for name, helptext in (("maxwell", "Maxwell residuals of the Hertz-potential field"),
                           ("acoustics", "linear acoustics residuals and asymptotics")):
        p = sub.add_parser(name, parents=parents, help=helptext)
        p.add_argument("--pulse", default="f", choices=pulses.PULSE_NAMES)
        p.add_argument("--points", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        if name == "maxwell":
            p.add_argument("--m", type=_vector, default=(1, 1, 0), help="Hertz direction, e.g. 1,1,0 or 1,1j,0")
            p.add_argument("--corrupt", action="store_true", help="swap F_x and F_y (negative control)")
            p.add_argument("--no-asymptotics", action="store_true")
        else:
            p.add_argument("--rho0", type=float, default=1.0, help="ambient density")
            p.add_argument("--ra", type=float, default=None, help="aperture radius for the Rayleigh distance")

    p = sub.add_parser("solidangle", parents=parents, help="peak half width and solid angle")
    p.add_argument("--pulse", default="f", choices=pulses.PULSE_NAMES)
    p.add_argument("--ct", type=_floats, default=[10.0, 100.0, 1000.0, 10000.0])
    p.add_argument("--part", default="re", choices=("re", "im", "abs"))
    p.add_argument("--em", action="store_true", help="use E_x of the Hertz field instead of Re f")
    p.add_argument("--m", type=_vector, default=(1, 1, 0))
    return parser


def _summary(command: str, report: dict, code: int) -> str:
    lines = [f"slowdecay {command}: exit {code}"]

    def walk(prefix, obj):
        if isinstance(obj, dict) and {"value", "error", "expected", "pass"} <= set(obj):
            v = obj["value"]
            vs = f"{v:.8g}" if isinstance(v, (float, int)) and not isinstance(v, bool) else str(v)
            status = "" if obj["pass"] is None else ("  PASS" if obj["pass"] else "  FAIL")
            exp = "" if obj["expected"] is None else f"  (expected {obj['expected']})"
            lines.append(f"  {prefix}: {vs}{exp}{status}")
        elif isinstance(obj, dict):
            if "classification" in obj:
                lines.append(f"  {prefix}: {obj['classification']}"
                             + ("" if obj.get("pass") is None else ("  PASS" if obj["pass"] else "  FAIL")))
            for k, v in obj.items():
                if isinstance(v, dict):
                    walk(f"{prefix}.{k}" if prefix else k, v)
    walk("", report)
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None:
        if args.threads < 1:
            parser.print_usage(sys.stderr)
            print("slowdecay: error: --threads must be positive", file=sys.stderr)
            return EXIT_USAGE
        os.environ[THREADS_ENV] = str(args.threads)
    if args.tol is not None and not 0 < args.tol < 1:
        print("slowdecay: error: --tol must lie in (0, 1)", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report, code, files = COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"slowdecay: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": args.command, "exit_code": code, **report}
    files = list(files) + [io.write_json(out / "report.json", report)]
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "quiet")}
    io.write_manifest(out, args.command, flags, files, __version__)
    if not args.quiet:
        print(_summary(args.command, report, code))
    return code


if __name__ == "__main__":
    sys.exit(main())
