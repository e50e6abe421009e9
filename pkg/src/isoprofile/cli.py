"""Command-line front end: profile tables, comparison constants, verification suites.

Every command writes one report (JSON by default, CSV on request). ``verify``
exits 0 iff every grid point passes, 1 on a violation, and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .constants import alpha, comparison_constants
from .numerics import cosine_grid
from .report import PASS, VIOLATION, PointVerdict, VerificationReport
from .spaceform import DomainError, SpaceForm, to_h1
from .viscosity import (BBG, DEFAULT_WINDOW, FirstOrderPositive, FirstOrderZero, LevyGromov,
                        RatioMonotone, SecondOrder, TwoSided, check_supersolution, comparison_check)
from .warped import (BALL, CLOSED_SPHERE, WARP_NAMES, InvalidMetricError, WarpedMetric,
                     ball_comparison_check, candidate_derivatives, candidate_samples, hk_majorant,
                     hk_volume_bound, load_warp_csv, named_warp, normalized, ricci_lower_bound,
                     round_sphere, spaceform_ball)

SCHEMA = 1
SUITES = ("levy-gromov", "bbg", "morgan-johnson", "two-sided", "ratio-monotone",
          "supersolution-2nd", "supersolution-1st", "heintze-karcher")
COMPARISON_TOL = 1e-6
BALL_TOL = 1e-9
HK_TOL = 1e-8


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output

def _scalar(v):
    if isinstance(v, (bool, np.bool_)) or v is None:
        return json.dumps(None if v is None else bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "%.12e" % v if math.isfinite(v) else json.dumps(str(v))
    return json.dumps(str(v), ensure_ascii=False)


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float printed as ``%.12e`` (non-finite floats become strings)."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    return _scalar(obj)


def _csv_cell(v):
    if isinstance(v, dict):
        return json.dumps(json.loads(dumps(v)), separators=(",", ":"), sort_keys=False)
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "%.12e" % float(v)
    return str(v)


def to_csv(rows: list[dict]) -> str:
    columns: list[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render(document: dict, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(document.get("verdicts", document.get("rows", [])))
    return dumps(document) + "\n"


# ---------------------------------------------------------------- targets

@dataclass(frozen=True)
class RunConfig:
    command: str
    spaceform: tuple[int, float] | None
    warp: str | None
    warp_csv: str | None
    n: int | None
    eps: float
    radius: float
    length: float
    h2: bool
    grid: int | None
    beta_max: float | None
    d: tuple[float, ...] | None
    kappa: float | None
    tol: float | None
    window: int
    assume_minimizer: bool
    threads: int
    suite: str | None = None

    def as_dict(self) -> dict:
        out = {"command": self.command}
        if self.suite:
            out["suite"] = self.suite
        if self.spaceform:
            out["spaceform"] = {"n": self.spaceform[0], "kappa": float(self.spaceform[1])}
        if self.warp:
            out["warp"] = {"name": self.warp, "n": self.n, "eps": self.eps, "radius": self.radius,
                           "length": self.length}
        if self.warp_csv:
            out["warp_csv"] = {"path": self.warp_csv, "n": self.n}
        for key in ("h2", "grid", "beta_max", "kappa", "tol", "window", "assume_minimizer"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.d is not None:
            out["d"] = list(self.d)
        return out


def _parse_spaceform(tokens) -> tuple[int, float]:
    fields = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or key not in ("n", "kappa"):
            raise UsageError(f"--spaceform expects n=<int> kappa=<float>, got {token!r}")
        fields[key] = value
    if set(fields) != {"n", "kappa"}:
        raise UsageError("--spaceform needs both n=<int> and kappa=<float>")
    try:
        n, kappa = int(fields["n"]), float(fields["kappa"])
    except ValueError as exc:
        raise UsageError(f"bad --spaceform value: {exc}") from None
    if n < 2:
        raise UsageError("dimension must be >= 2")
    return n, kappa


def _load_warp(cfg: RunConfig) -> WarpedMetric:
    if cfg.n is None or cfg.n < 2:
        raise UsageError("warp targets need --n >= 2")
    try:
        if cfg.warp_csv:
            return load_warp_csv(cfg.warp_csv, cfg.n)
        return named_warp(cfg.warp, cfg.n, eps=cfg.eps, radius=cfg.radius, length=cfg.length)
    except (InvalidMetricError, ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _normalized_closed(m: WarpedMetric) -> WarpedMetric:
    if m.topology != CLOSED_SPHERE:
        raise UsageError("this suite needs a closed-sphere warp")
    if ricci_lower_bound(m).kappa_star <= 0:
        raise UsageError("warp has no positive Ricci lower bound")
    return normalized(m, 1.0)


def _fraction_grid(cfg: RunConfig, default: int) -> np.ndarray:
    return cosine_grid(0.0, 1.0, cfg.grid or default)


# ---------------------------------------------------------------- profile

def cmd_profile(cfg: RunConfig) -> dict:
    rows = []
    if cfg.spaceform:
        sf = SpaceForm(*cfg.spaceform)
        if cfg.h2:
            if sf.compact:
                hi = sf.total_volume
            else:
                hi = cfg.beta_max or 2.0 * float(sf.ball_volume(1.0))
            profile = sf.h2()
        else:
            if not sf.compact:
                raise UsageError("h1 needs kappa > 0; pass --h2 for infinite-volume space forms")
            hi, profile = 1.0, sf.h1()
        if cfg.beta_max and sf.compact and cfg.beta_max > hi:
            raise UsageError("--beta-max exceeds the profile domain")
        grid = cosine_grid(0.0, cfg.beta_max or hi, cfg.grid or 257)
        psi, dpsi, d2psi = profile.evaluate(grid)
        for i, b in enumerate(grid):
            rows.append({"beta": b, "psi": psi[i], "dpsi": dpsi[i], "d2psi": d2psi[i]})
        note = "h2" if cfg.h2 else "h1"
    else:
        m = _load_warp(cfg)
        if m.topology == CLOSED_SPHERE:
            grid = cosine_grid(0.0, m.total_volume, cfg.grid or 257)
            samples, witnesses = candidate_samples(m, grid)
            for b, v, w in zip(grid, samples.values, witnesses):
                dpsi, d2psi = candidate_derivatives(m, w)
                rows.append({"beta": b, "psi": v, "dpsi": dpsi, "d2psi": d2psi, "witness": w.kind})
            note = "h2 candidate (upper bound)"
        else:
            hi = cfg.beta_max or float(m.volume(m.length))
            grid = cosine_grid(0.0, hi, cfg.grid or 257)
            r = m.radius_for_volume(grid)
            f, fp, fpp = m.f(r), m.fp(r), m.fpp(r)
            area = m.area(r)
            dpsi = (m.n - 1) * fp / f
            d2psi = (m.n - 1) * (fpp * f - fp * fp) / (f * f) / area
            for i, b in enumerate(grid):
                rows.append({"beta": b, "psi": area[i], "dpsi": dpsi[i], "d2psi": d2psi[i], "witness": "cap@0"})
            note = "h2 of geodesic balls about r=0"
    return {"rows": rows, "global_pass": True, "tolerances": {}, "notes": [note]}


# ---------------------------------------------------------------- constants

def cmd_constants(cfg: RunConfig) -> dict:
    if cfg.n is None and cfg.spaceform is None:
        raise UsageError("constants needs --n (or --spaceform)")
    n = cfg.spaceform[0] if cfg.spaceform else cfg.n
    kappa = cfg.spaceform[1] if cfg.spaceform else (1.0 if cfg.kappa is None else cfg.kappa)
    if kappa < 0:
        raise UsageError("no first-order constants for kappa < 0")
    ds = cfg.d or ((math.pi / math.sqrt(kappa),) if kappa > 0 else (1.0,))
    rows = []
    for d in ds:
        try:
            row = comparison_constants(n, kappa, d).as_row()
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        row["variant"] = "lambda0/alpha_prime" if kappa == 0 else "lambda_kappa/alpha"
        rows.append(row)
    return {"rows": rows, "global_pass": True, "tolerances": {}}


# ---------------------------------------------------------------- verify

def _need_compact(sf: SpaceForm, suite: str):
    if not sf.compact:
        raise UsageError(f"{suite} compares normalized profiles; kappa must be > 0")


def _spaceform_suite(cfg: RunConfig, suite: str) -> VerificationReport:
    n, kappa = cfg.spaceform
    sf = SpaceForm(n, kappa)
    unit = SpaceForm(n, 1.0)
    grid = _fraction_grid(cfg, 512)
    tol = cfg.tol

    if suite == "supersolution-2nd":
        bound = kappa if cfg.kappa is None else cfg.kappa
        if sf.compact and not cfg.h2:
            profile = sf.h1()
        else:
            hi = cfg.beta_max or (sf.total_volume if sf.compact else 2.0 * float(sf.ball_volume(1.0)))
            profile, grid = sf.h2(), cosine_grid(0.0, hi, cfg.grid or 512)
        return check_supersolution(profile, SecondOrder(n, bound), grid, tol, cfg.window, cfg.threads)

    if suite == "supersolution-1st":
        _need_compact(sf, suite)
        d = cfg.d[0] if cfg.d else sf.diameter
        try:
            ineq = FirstOrderZero(n, d) if cfg.kappa == 0 else FirstOrderPositive(n, kappa, d)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        return check_supersolution(sf.h1(), ineq, grid, tol, cfg.window, cfg.threads)

    if suite == "morgan-johnson":
        if kappa > 0:
            m = round_sphere(n, 1.0 / math.sqrt(kappa))
        else:
            m = spaceform_ball(n, kappa, cfg.length)
        bound = kappa if cfg.kappa is None else cfg.kappa
        return ball_comparison_check(m, bound, tol=BALL_TOL if tol is None else tol, count=cfg.grid or 256)

    _need_compact(sf, suite)
    tol = COMPARISON_TOL if tol is None else tol
    # h1 is invariant under rescaling, so the target is compared with the unit sphere
    h, ref = sf.h1(), unit.h1()
    if suite == "levy-gromov":
        return comparison_check(h, ref, LevyGromov(), grid, tol)
    if suite == "bbg":
        d = cfg.d[0] if cfg.d else math.pi
        if not 0 < d <= math.pi:
            raise UsageError("normalized diameter must lie in (0, pi]")
        report = comparison_check(h, ref, BBG(alpha(n, d)), grid, tol)
        report.notes.append(f"alpha={alpha(n, d):.12e}")
        return report
    if suite == "two-sided":
        return comparison_check(h, ref, TwoSided(unit.total_volume), grid, tol)
    if suite == "ratio-monotone":
        h2grid = grid * unit.total_volume
        return comparison_check(unit.h2(), unit.h2(), RatioMonotone(), h2grid, tol)
    if suite == "heintze-karcher":
        d = cfg.d[0] if cfg.d else math.pi
        psi, dpsi, _ = unit.h1().evaluate(grid)
        r = unit.radius_for_volume(grid * unit.total_volume)
        return _hk_report(n, d, grid, psi, dpsi / (n - 1), r, HK_TOL if cfg.tol is None else cfg.tol)
    raise UsageError(f"unknown suite {suite!r}")


def _hk_report(n, d, betas, psi, H, r0, tol, skip=None) -> VerificationReport:
    verdicts = []
    try:
        for i, b in enumerate(betas):
            if skip is not None and skip[i]:
                verdicts.append(PointVerdict(float(b), "vacuous", None, {"reason": "band witness"}))
                continue
            value = hk_volume_bound(n, d, float(psi[i]), float(H[i]), float(r0[i]))
            cap = hk_majorant(n, d, float(psi[i]), float(H[i]))
            slack = min(value - 1.0, cap - value)
            verdicts.append(PointVerdict(float(b), PASS if slack >= -tol else VIOLATION, slack,
                                         {"bound": value, "majorant": cap, "H": float(H[i]), "r0": float(r0[i])}))
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    return VerificationReport("heintze-karcher", verdicts, {"slack": tol}, [f"d={d:.12e}"])


def _warp_suite(cfg: RunConfig, suite: str) -> VerificationReport:
    raw = _load_warp(cfg)
    n = raw.n
    if suite == "morgan-johnson":
        if raw.topology == BALL:
            bound = ricci_lower_bound(raw).kappa_star if cfg.kappa is None else cfg.kappa
            m = raw
        else:
            m = _normalized_closed(raw)
            bound = 1.0 if cfg.kappa is None else cfg.kappa
        report = ball_comparison_check(m, bound, tol=BALL_TOL if cfg.tol is None else cfg.tol,
                                       count=cfg.grid or 256)
        report.notes.append(f"normalized={m is not raw}")
        return report

    if not cfg.assume_minimizer:
        raise UsageError(f"{suite} on a warp uses candidate profiles (upper bounds); "
                         "pass --assume-minimizer to run it anyway")
    m = _normalized_closed(raw)
    total = m.total_volume
    unit = SpaceForm(n, 1.0)
    fractions = _fraction_grid(cfg, 256)
    samples, witnesses = candidate_samples(m, fractions * total)
    h1 = to_h1(samples, total)
    notes = ["candidate profile (upper bound)", f"L={m.length:.12e}", f"volume={total:.12e}"]

    if suite in ("levy-gromov", "bbg", "two-sided", "ratio-monotone"):
        tol = COMPARISON_TOL if cfg.tol is None else cfg.tol
        if suite == "levy-gromov":
            report = comparison_check(h1, unit.h1(), LevyGromov(), tol=tol)
        elif suite == "bbg":
            d = cfg.d[0] if cfg.d else m.length
            if not 0 < d <= math.pi:
                raise UsageError("diameter must lie in (0, pi] after normalization")
            report = comparison_check(h1, unit.h1(), BBG(alpha(n, d)), tol=tol)
            notes.append(f"alpha={alpha(n, d):.12e} at d={d:.12e}")
        elif suite == "two-sided":
            report = comparison_check(h1, unit.h1(), TwoSided(total, unit.total_volume), tol=tol)
        else:
            report = comparison_check(samples, unit.h2(), RatioMonotone(), tol=tol)
    elif suite == "supersolution-2nd":
        bound = 1.0 if cfg.kappa is None else cfg.kappa
        report = check_supersolution(h1, SecondOrder(n, bound), tol=cfg.tol, window=cfg.window, threads=cfg.threads)
    elif suite == "supersolution-1st":
        d = cfg.d[0] if cfg.d else m.length
        try:
            ineq = FirstOrderPositive(n, 1.0, d)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        report = check_supersolution(h1, ineq, tol=cfg.tol, window=cfg.window, threads=cfg.threads)
    elif suite == "heintze-karcher":
        d = cfg.d[0] if cfg.d else m.length
        slopes = np.array([candidate_derivatives(m, w)[0] for w in witnesses])
        r0 = np.array([w.r2 if w.kind == "cap@0" else m.length - w.r1 for w in witnesses])
        skip = [w.kind == "band" for w in witnesses]
        report = _hk_report(n, d, fractions, h1.values, slopes / (n - 1), r0,
                            HK_TOL if cfg.tol is None else cfg.tol, skip)
    else:
        raise UsageError(f"unknown suite {suite!r}")
    report.notes.extend(notes)
    return report


def cmd_verify(cfg: RunConfig) -> dict:
    suite = cfg.suite
    report = _spaceform_suite(cfg, suite) if cfg.spaceform else _warp_suite(cfg, suite)
    return {"verdicts": [v.to_dict() for v in report.verdicts], "global_pass": report.global_pass,
            "tolerances": report.tolerances, "notes": report.notes}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isoprofile", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        target = p.add_mutually_exclusive_group(required=True)
        target.add_argument("--spaceform", nargs=2, metavar="KEY=VALUE", help="space form, e.g. n=2 kappa=1")
        target.add_argument("--warp", choices=WARP_NAMES, help="built-in warp function")
        target.add_argument("--warp-csv", metavar="PATH", help="warp samples with header r,f,fp,fpp")
        p.add_argument("--n", type=int, help="dimension for warp targets")
        p.add_argument("--eps", type=float, default=0.05, help="perturbation size for sin-perturbed (default 0.05)")
        p.add_argument("--radius", type=float, default=1.0, help="radius for the sin warp (default 1)")
        p.add_argument("--length", type=float, default=2.0, help="radial extent of ball warps (default 2)")
        p.add_argument("--grid", type=int, help="cosine-spaced grid size; odd sizes include the midpoint "
                       "(default 257 for profile, 512 for space-form suites, 256 for warp suites)")
        p.add_argument("--beta-max", type=float, help="upper volume for unbounded h2 tables "
                       "(default: twice the unit geodesic ball volume)")
        p.add_argument("--h2", action="store_true", help="unnormalized profile h2 instead of h1")
        add_io(p)

    def add_io(p):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")

    p_profile = sub.add_parser("profile", help="tabulate beta, psi, psi', psi''")
    add_common(p_profile)

    p_const = sub.add_parser("constants", help="gamma_n, lambda and alpha per (n, kappa, d)")
    p_const.add_argument("--n", type=int, required=True)
    p_const.add_argument("--kappa", type=float, default=1.0, help="curvature bound (default 1)")
    p_const.add_argument("--d", type=float, nargs="+", help="diameters (default pi/sqrt(kappa), or 1 for kappa=0)")
    add_io(p_const)

    p_verify = sub.add_parser("verify", help="run a verification suite; exit 0 iff it passes")
    p_verify.add_argument("suite", choices=SUITES)
    add_common(p_verify)
    p_verify.add_argument("--d", type=float, nargs=1, help="diameter for first-order and BBG suites "
                          "(default pi/sqrt(kappa) for space forms, L for warps)")
    p_verify.add_argument("--kappa", type=float, help="curvature bound (default: the target's own; "
                          "0 selects the flat first-order variant)")
    p_verify.add_argument("--tol", type=float, help="tolerance (defaults: 1e-8 closed form, 1e-4 sampled "
                          "supersolution, 1e-6 comparisons, 1e-9 ball comparison)")
    p_verify.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="subjet half-width in grid points")
    p_verify.add_argument("--assume-minimizer", action="store_true",
                          help="treat candidate profiles of warps as true profiles")
    p_verify.add_argument("--threads", type=int, help="worker threads (env ISO_PROFILE_THREADS, default 1)")
    return parser


def _config(args) -> RunConfig:
    threads = getattr(args, "threads", None)
    if threads is None:
        env = os.environ.get("ISO_PROFILE_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise UsageError(f"ISO_PROFILE_THREADS must be an integer, got {env!r}") from None
    if threads < 1:
        raise UsageError("threads must be >= 1")
    spaceform = _parse_spaceform(args.spaceform) if getattr(args, "spaceform", None) else None
    grid = getattr(args, "grid", None)
    if grid is not None and grid < 3:
        raise UsageError("--grid must be >= 3")
    d = getattr(args, "d", None)
    return RunConfig(
        command=args.command, spaceform=spaceform, warp=getattr(args, "warp", None),
        warp_csv=getattr(args, "warp_csv", None), n=args.n, eps=getattr(args, "eps", 0.05),
        radius=getattr(args, "radius", 1.0), length=getattr(args, "length", 2.0),
        h2=getattr(args, "h2", False), grid=grid, beta_max=getattr(args, "beta_max", None),
        d=tuple(d) if d else None, kappa=getattr(args, "kappa", None), tol=getattr(args, "tol", None),
        window=getattr(args, "window", DEFAULT_WINDOW), assume_minimizer=getattr(args, "assume_minimizer", False),
        threads=threads, suite=getattr(args, "suite", None))


COMMANDS = {"profile": cmd_profile, "constants": cmd_constants, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        body = COMMANDS[cfg.command](cfg)
    except (UsageError, DomainError) as exc:
        parser.error(str(exc))
    document = {"schema": SCHEMA, "command": cfg.command, "config": cfg.as_dict()}
    document.update(body)
    text = render(document, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.command == "verify":
        return 0 if document["global_pass"] else 1
    return 0
