"""Rotationally symmetric metrics ``dr^2 + f(r)^2 g_{S^{n-1}}``.

Covers Ricci lower bounds from the warp function, geodesic-ball profiles about
either pole, rotationally invariant candidate profiles (caps and bands), the
ball comparison against a space form, and the Heintze-Karcher volume bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .constants import lambda_kappa
from .numerics import CumulativeIntegral, cosine_grid, integrate_positive_part, minimize_1d
from .report import PASS, VIOLATION, PointVerdict, VerificationFailure, VerificationReport
from .spaceform import DomainError, SampledProfile, SpaceForm, ck, sk, unit_sphere_area

CLOSED_SPHERE = "closed-sphere"
BALL = "ball"


class InvalidMetricError(ValueError):
    pass


class SingularRadiusError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WarpedMetric:
    """Warp function ``f`` with derivatives on ``[0, length]``.

    The callables must accept numpy arrays. ``closed-sphere`` metrics close up
    smoothly at both ends, ``ball`` metrics only at ``r = 0``.
    """

    n: int
    length: float
    f: Callable
    fp: Callable
    fpp: Callable
    topology: str = CLOSED_SPHERE
    closure_tol: float = 1e-8
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise InvalidMetricError("dimension must be >= 2")
        if self.topology not in (CLOSED_SPHERE, BALL):
            raise InvalidMetricError(f"unknown topology {self.topology!r}")
        if not self.length > 0:
            raise InvalidMetricError("radial extent must be positive")
        tol, L = self.closure_tol, self.length
        if abs(self._at(self.f, 0.0)) > tol or abs(self._at(self.fp, 0.0) - 1.0) > tol:
            raise InvalidMetricError("warp must satisfy f(0)=0, f'(0)=1")
        if self.topology == CLOSED_SPHERE:
            if abs(self._at(self.f, L)) > tol * max(1.0, L) or abs(self._at(self.fp, L) + 1.0) > tol:
                raise InvalidMetricError("closed-sphere warp must satisfy f(L)=0, f'(L)=-1")
        probe = np.linspace(0.0, L, 2049)[1:-1]
        if np.any(self.f(probe) <= 0):
            raise InvalidMetricError("warp must be positive on (0, L)")

    @staticmethod
    def _at(func, r: float) -> float:
        return float(np.asarray(func(np.array([r])))[0])

    @property
    def omega(self) -> float:
        return unit_sphere_area(self.n)

    @cached_property
    def _volume_table(self) -> CumulativeIntegral:
        n, f = self.n, self.f
        return CumulativeIntegral(lambda r: np.maximum(f(r), 0.0) ** (n - 1), 0.0, self.length)

    @property
    def total_volume(self) -> float:
        return self.omega * self._volume_table.total

    def volume(self, r):
        """Volume of the ball of radius ``r`` about the pole ``r = 0``."""
        return self.omega * self._volume_table(r)

    def area(self, r):
        return self.omega * np.maximum(self.f(np.asarray(r, dtype=float)), 0.0) ** (self.n - 1)

    def radius_for_volume(self, beta):
        b = np.asarray(beta, dtype=float)
        if np.any(b < 0) or np.any(b > self.total_volume * (1 + 1e-14)):
            raise DomainError("volume outside [0, |M|]")
        scaled = np.minimum(b / self.omega, self._volume_table.total)
        return self._volume_table.inverse(scaled if scaled.ndim else float(scaled))

    @cached_property
    def reflected(self) -> "WarpedMetric":
        """Same manifold with the radial coordinate measured from ``r = L``."""
        if self.topology != CLOSED_SPHERE:
            raise InvalidMetricError("only closed-sphere metrics have a second pole")
        f, fp, fpp, L = self.f, self.fp, self.fpp, self.length
        return WarpedMetric(self.n, L, lambda r: f(L - r), lambda r: -fp(L - r), lambda r: fpp(L - r),
                            self.topology, self.closure_tol, self.name + "/reflected", dict(self.params))

    def from_pole(self, pole) -> "WarpedMetric":
        if pole in (0, "0"):
            return self
        if pole in ("L", self.length):
            return self.reflected
        raise ValueError(f"pole must be 0 or 'L', got {pole!r}")

    def scaled(self, c: float) -> "WarpedMetric":
        """Metric ``c^2 g``: radii and the warp stretch by ``c``."""
        if c <= 0:
            raise ValueError("scale must be positive")
        f, fp, fpp = self.f, self.fp, self.fpp
        params = dict(self.params, scale=c * self.params.get("scale", 1.0))
        return WarpedMetric(self.n, c * self.length, lambda r: c * f(r / c), lambda r: fp(r / c),
                            lambda r: fpp(r / c) / c, self.topology, self.closure_tol, self.name, params)


def round_sphere(n: int, radius: float = 1.0) -> WarpedMetric:
    R = float(radius)
    return WarpedMetric(n, math.pi * R, lambda r: R * np.sin(r / R), lambda r: np.cos(r / R),
                        lambda r: -np.sin(r / R) / R, CLOSED_SPHERE, name="sin", params={"radius": R})


def perturbed_sphere(n: int, eps: float) -> WarpedMetric:
    """``f(r) = sin r (1 + eps sin^2 r)`` on ``[0, pi]``."""
    def f(r):
        s = np.sin(r)
        return s * (1.0 + eps * s * s)

    def fp(r):
        s = np.sin(r)
        return np.cos(r) * (1.0 + 3.0 * eps * s * s)

    def fpp(r):
        s, c = np.sin(r), np.cos(r)
        return s * (-1.0 - 3.0 * eps * s * s + 6.0 * eps * c * c)

    return WarpedMetric(n, math.pi, f, fp, fpp, CLOSED_SPHERE, name="sin-perturbed", params={"eps": eps})


def spaceform_ball(n: int, kappa: float, length: float) -> WarpedMetric:
    """Geodesic ball of radius ``length`` in the space form, as a warped metric."""
    if kappa > 0 and length >= math.pi / math.sqrt(kappa):
        raise InvalidMetricError("use round_sphere for the whole sphere")
    return WarpedMetric(n, length, lambda r: sk(kappa, r), lambda r: ck(kappa, r) * np.ones_like(r),
                        lambda r: -kappa * sk(kappa, r), BALL, name="spaceform-ball",
                        params={"kappa": kappa, "length": length})


def load_warp_csv(path, n: int, topology: str = CLOSED_SPHERE, closure_tol: float = 1e-5) -> WarpedMetric:
    """Read a sampled warp with header ``r,f,fp,fpp``.

    ``f`` and ``f'`` are cubic Hermite interpolants of the samples; ``f''`` is
    linear between nodes.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or [h.strip() for h in reader.fieldnames] != ["r", "f", "fp", "fpp"]:
            raise InvalidMetricError("warp CSV header must be exactly r,f,fp,fpp")
        try:
            rows = [[float(row[k]) for k in ("r", "f", "fp", "fpp")] for row in reader]
        except (TypeError, ValueError) as exc:
            raise InvalidMetricError(f"unreadable warp sample: {exc}") from None
    data = np.array(rows)
    if data.shape[0] < 4:
        raise InvalidMetricError("warp CSV needs at least 4 samples")
    r, fv, fpv, fppv = data.T
    if r[0] != 0.0 or np.any(np.diff(r) <= 0):
        raise InvalidMetricError("radii must start at 0 and increase strictly")
    f_spline = CubicHermiteSpline(r, fv, fpv)
    fp_spline = CubicHermiteSpline(r, fpv, fppv)
    return WarpedMetric(n, float(r[-1]), f_spline, fp_spline, lambda x: np.interp(x, r, fppv),
                        topology, closure_tol, name=Path(path).name)


class RicciBoundReport(NamedTuple):
    kappa_star: float
    argmin_radius: float
    radial: float
    tangential: float


def sectional_quantities(m: WarpedMetric, r) -> tuple[np.ndarray, np.ndarray]:
    """Radial and tangential sectional curvatures ``-f''/f`` and ``(1-f'^2)/f^2``.

    At a smooth pole both tend to ``-f'''(0)``, estimated from ``f''``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    radial = np.empty_like(r)
    tangential = np.empty_like(r)
    pole0 = r <= 0
    poleL = (r >= m.length) & (m.topology == CLOSED_SPHERE)
    inner = ~(pole0 | poleL)
    ri = r[inner]
    f, fp, fpp = m.f(ri), m.fp(ri), m.fpp(ri)
    radial[inner] = -fpp / f
    tangential[inner] = (1.0 - fp) * (1.0 + fp) / (f * f)
    if np.any(pole0):
        radial[pole0] = tangential[pole0] = _pole_limit(m)
    if np.any(poleL):
        radial[poleL] = tangential[poleL] = _pole_limit(m.reflected)
    return radial, tangential


def _pole_limit(m: WarpedMetric) -> float:
    # L'Hopital: -f''/f -> -f'''(0)/f'(0); f''' from a one-sided difference of f''
    h = 1e-6 * m.length
    f2_0 = m._at(m.fpp, 0.0)
    if abs(f2_0) > max(m.closure_tol, 1e-8):
        raise InvalidMetricError(f"f''(0) = {f2_0:.3e}; warp does not close smoothly")
    third = (m._at(m.fpp, h) - f2_0) / h
    return -third / m._at(m.fp, 0.0)


def _ricci_floor(m: WarpedMetric, r):
    radial, tangential = sectional_quantities(m, r)
    return np.minimum(radial, (radial + (m.n - 2) * tangential) / (m.n - 1))


def ricci_lower_bound(m: WarpedMetric, samples: int = 4096) -> RicciBoundReport:
    """Largest ``kappa`` with ``Ric >= (n-1) kappa`` on the metric.

    Dense-grid minimum (pole limits included) refined by golden section
    between the neighbours of the best grid point.
    """
    grid = np.linspace(0.0, m.length, samples + 1)
    values = _ricci_floor(m, grid)
    if not np.all(np.isfinite(values)):
        raise InvalidMetricError("curvature is not finite on the sampling grid")
    j = int(np.argmin(values))
    r_best, k_best = float(grid[j]), float(values[j])
    if 0 < j < samples:
        r_ref, k_ref = minimize_1d(lambda x: float(_ricci_floor(m, x)[0]), grid[j - 1], grid[j + 1], tol=1e-12)
        if k_ref < k_best:
            r_best, k_best = r_ref, k_ref
    radial, tangential = sectional_quantities(m, r_best)
    return RicciBoundReport(k_best, r_best, float(radial[0]), float(tangential[0]))


def normalized(m: WarpedMetric, kappa: float = 1.0) -> WarpedMetric:
    """Rescale so that the certified Ricci bound equals ``kappa > 0``."""
    star = ricci_lower_bound(m).kappa_star
    if star <= 0 or kappa <= 0:
        raise InvalidMetricError("normalization needs a positive Ricci lower bound")
    return m.scaled(math.sqrt(star / kappa))


def mean_curvature_sphere(m: WarpedMetric, r):
    """``f'/f`` on the distance sphere of radius ``r`` about ``r = 0``."""
    ra = np.asarray(r, dtype=float)
    upper = m.length if m.topology == CLOSED_SPHERE else math.inf
    if np.any(ra <= 0) or np.any(ra >= upper):
        raise SingularRadiusError("mean curvature is singular at the poles")
    return m.fp(ra) / m.f(ra)


def ball_profile(m: WarpedMetric, beta, pole=0):
    """Boundary area of the geodesic ball about ``pole`` enclosing volume ``beta``."""
    b = np.asarray(beta, dtype=float)
    if np.any(b <= 0) or np.any(b >= m.total_volume):
        raise DomainError("volume outside (0, |M|)")
    side = m.from_pole(pole)
    return side.area(side.radius_for_volume(b))


class Witness(NamedTuple):
    kind: str
    r1: float
    r2: float

    def as_dict(self) -> dict:
        return {"kind": self.kind, "r1": float(self.r1), "r2": float(self.r2)}


class Candidate(NamedTuple):
    value: float
    witness: Witness


def _band_area(m: WarpedMetric, r1: np.ndarray, beta: np.ndarray):
    table = m._volume_table
    lower = table(r1)
    r2 = table.inverse(np.minimum(lower + beta / m.omega, table.total))
    return m.area(r1) + m.area(r2), r2


def candidate_values(m: WarpedMetric, betas, starts: int = 8, tol: float | None = None):
    """Vectorized rotationally invariant upper bound for the h2 profile.

    Returns ``(values, witnesses)``: the least boundary area among caps about
    either pole and bands ``{r1 < r < r2}`` of the prescribed volume.
    """
    if m.topology != CLOSED_SPHERE:
        raise InvalidMetricError("candidate profiles need a closed-sphere metric")
    b = np.atleast_1d(np.asarray(betas, dtype=float))
    total = m.total_volume
    if np.any(b <= 0) or np.any(b >= total):
        raise DomainError("volume outside (0, |M|)")
    tol = 1e-10 * m.length if tol is None else tol

    r_cap0 = m.radius_for_volume(b)
    cap0 = m.area(r_cap0)
    refl = m.reflected
    r_capL = refl.radius_for_volume(b)
    capL = refl.area(r_capL)

    # band lower radius ranges over (0, r1max), split into `starts` seeds
    r1max = m.radius_for_volume(total - b)
    edges = np.linspace(0.0, 1.0, starts + 1)
    lo = (r1max[:, None] * edges[None, :-1]).ravel()
    hi = (r1max[:, None] * edges[None, 1:]).ravel()
    bb = np.repeat(b, starts)
    keep = hi > lo
    r1_best = np.zeros(b.size)
    band = np.full(b.size, np.inf)
    if np.any(keep):
        sub_b = bb[keep]
        x, val = minimize_1d(lambda r: _band_area(m, r, sub_b)[0], lo[keep], hi[keep], tol=tol)
        full_x = np.zeros(bb.size)
        full_v = np.full(bb.size, np.inf)
        full_x[keep], full_v[keep] = x, val
        full_x = full_x.reshape(b.size, starts)
        full_v = full_v.reshape(b.size, starts)
        pick = np.argmin(full_v, axis=1)
        band = full_v[np.arange(b.size), pick]
        r1_best = full_x[np.arange(b.size), pick]

    values = np.empty(b.size)
    witnesses = []
    for i in range(b.size):
        options = [(cap0[i], Witness("cap@0", 0.0, float(r_cap0[i]))),
                   (capL[i], Witness("cap@L", float(m.length - r_capL[i]), float(m.length)))]
        # a band touching a pole is a cap; only count genuinely interior ones
        r1 = float(r1_best[i])
        if np.isfinite(band[i]) and 0.0 < r1 < r1max[i]:
            r2 = float(_band_area(m, np.array([r1]), np.array([b[i]]))[1][0])
            if r2 < m.length:
                options.append((band[i], Witness("band", r1, r2)))
        best_val, best_w = options[0]
        for val, w in options[1:]:
            if val < best_val * (1.0 - 1e-12):
                best_val, best_w = val, w
        values[i] = best_val
        witnesses.append(best_w)
    return values, witnesses


def candidate_profile(m: WarpedMetric, beta: float) -> Candidate:
    values, witnesses = candidate_values(m, [beta])
    return Candidate(float(values[0]), witnesses[0])


def candidate_samples(m: WarpedMetric, grid) -> tuple[SampledProfile, list[Witness]]:
    """Candidate h2 profile on ``grid`` (an upper bound for the true profile)."""
    grid = np.asarray(grid, dtype=float)
    values, witnesses = candidate_values(m, grid)
    return SampledProfile(grid, values, "h2", m.n, (0.0, m.total_volume)), witnesses


def candidate_derivatives(m: WarpedMetric, witness: Witness) -> tuple[float, float | None]:
    """``(psi', psi'')`` of the h2 candidate where its witness is smooth.

    Caps give both from the warp; for bands only the slope (common boundary
    mean curvature) is available.
    """
    n = m.n
    if witness.kind == "band":
        r2 = witness.r2
        return (n - 1) * float(mean_curvature_sphere(m, r2)), None
    side, r = (m, witness.r2) if witness.kind == "cap@0" else (m.reflected, m.length - witness.r1)
    f, fp, fpp = (side._at(g, r) for g in (side.f, side.fp, side.fpp))
    dpsi = (n - 1) * fp / f
    d2psi = (n - 1) * (fpp * f - fp * fp) / (f * f) / float(side.area(r))
    return dpsi, d2psi


def ball_comparison_check(m: WarpedMetric, kappa: float, grid=None, pole=0,
                          tol: float = 1e-9, count: int = 256, strict: bool = False) -> VerificationReport:
    """Compare geodesic balls of ``m`` with those of the space form of curvature ``kappa``.

    Per volume: (a) ``I_p <= I_pbar``; (b) the difference ``I_p - I_pbar`` does
    not increase along the grid; (c) volume comparison ``|B_p(r)| <= |B_pbar(r)|``
    and mean-curvature comparison ``H(r) <= Hbar(r)`` at the same radius.
    """
    side = m.from_pole(pole)
    sf = SpaceForm(m.n, kappa)
    total = side.total_volume
    if sf.compact and total > sf.total_volume * (1 + 1e-12):
        raise DomainError("metric volume exceeds the model volume; is kappa a valid lower bound?")
    if grid is None:
        upper = total if m.topology == CLOSED_SPHERE else float(side.volume(side.length))
        grid = cosine_grid(0.0, upper, count)
    betas = np.asarray(grid, dtype=float)
    r = side.radius_for_volume(betas)
    r_bar = sf.radius_for_volume(betas)
    ip = side.area(r)
    ip_bar = sf.ball_area(r_bar)
    model_r = np.minimum(r, sf.diameter)
    vol_slack = sf.ball_volume(model_r) - betas
    inside = (r > 0) & (r < sf.diameter)
    h_bar = np.where(inside, ck(kappa, np.where(inside, r, 1.0)) / sk(kappa, np.where(inside, r, 1.0)), -np.inf)
    h = side.fp(r) / side.f(r)
    curv_slack = h_bar - h
    prof_slack = ip_bar - ip
    diff = ip - ip_bar
    incr_slack = -np.diff(np.concatenate([[0.0], diff]))

    verdicts = []
    for i, beta in enumerate(betas):
        slacks = {"volume": float(vol_slack[i]), "mean_curvature": float(curv_slack[i]),
                  "profile": float(prof_slack[i]), "increment": float(incr_slack[i])}
        worst = min(slacks.values())
        failed = sorted(k for k, v in slacks.items() if v < -tol)
        witness = {"r": float(r[i]), "r_model": float(r_bar[i]), "I_p": float(ip[i]),
                   "I_model": float(ip_bar[i]), "H": float(h[i]), "H_model": float(h_bar[i]),
                   "slacks": slacks}
        if failed:
            witness["failed"] = failed
        verdicts.append(PointVerdict(float(beta), VIOLATION if failed else PASS, worst, witness))
    report = VerificationReport("morgan-johnson", verdicts, {"slack": tol},
                                [f"pole={pole}", f"kappa={kappa:.12e}"])
    if strict and not report.global_pass:
        raise VerificationFailure(report)
    return report


def hk_volume_bound(n: int, d: float, psi0: float, H: float, r0: float) -> float:
    """``psi0 * int_{r0-d}^{r0} (cos t - H sin t)_+^(n-1) dt`` (unit curvature)."""
    if not 0 < d <= math.pi * (1 + 1e-14):
        raise DomainError("diameter must lie in (0, pi] for unit curvature")
    integral = integrate_positive_part(lambda t: np.cos(t) - H * np.sin(t), r0 - d, r0, power=n - 1)
    return psi0 * integral


def hk_majorant(n: int, d: float, psi0: float, H: float) -> float:
    """Closed-form upper bound ``psi0 (1+H^2)^((n-1)/2) lambda^1_{n,d}`` of :func:`hk_volume_bound`."""
    return psi0 * (1.0 + H * H) ** ((n - 1) / 2) * lambda_kappa(n, 1.0, min(d, math.pi))


WARP_NAMES = ("sin", "sin-perturbed", "sinh", "euclid")


def named_warp(name: str, n: int, eps: float = 0.05, radius: float = 1.0, length: float = 2.0) -> WarpedMetric:
    """Built-in warps: round sphere, perturbed sphere, hyperbolic and flat balls."""
    if name == "sin":
        return round_sphere(n, radius)
    if name == "sin-perturbed":
        return perturbed_sphere(n, eps)
    if name == "sinh":
        return spaceform_ball(n, -1.0, length)
    if name == "euclid":
        return spaceform_ball(n, 0.0, length)
    raise ValueError(f"unknown warp {name!r}; choose from {', '.join(WARP_NAMES)}")
