"""Viscosity supersolution checks for isoperimetric profiles.

Two equation families are tested. The second-order one,
``-psi'' psi >= (n-1)(kappa + (psi'/(n-1))^2)``, and the first-order one,
``psi (1 + (psi'/(n-1))^2/kappa)^((n-1)/2) >= 1/lambda`` (with the ``1/kappa``
dropped in the flat case). Residuals are oriented so that supersolutions have
residual >= 0.

On sampled profiles derivatives are replaced by the discrete subjet: the
slopes and curvatures of parabolas touching the samples from below on a
window around the point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import lambda0, lambda_kappa
from .numerics import cosine_grid
from .report import PASS, VACUOUS, VIOLATION, PointVerdict, VerificationReport
from .spaceform import ClosedFormProfile, SampledProfile, SpaceForm

CLOSED_FORM_TOL = 1e-8
SAMPLED_TOL = 1e-4
DEFAULT_WINDOW = 8
MIN_WINDOW = 5
DEFAULT_SLOPES = 33


class PositivityError(ValueError):
    pass


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class SecondOrder:
    n: int
    kappa: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")

    @property
    def label(self) -> str:
        return f"second-order(n={self.n}, kappa={self.kappa:g})"


@dataclass(frozen=True)
class FirstOrderPositive:
    n: int
    kappa: float
    d: float
    lam: float = field(init=False)

    def __post_init__(self):
        if self.n < 2 or self.kappa <= 0:
            raise ValueError("first-order positive variant needs n >= 2 and kappa > 0")
        object.__setattr__(self, "lam", lambda_kappa(self.n, self.kappa, self.d))

    @property
    def label(self) -> str:
        return f"first-order(n={self.n}, kappa={self.kappa:g}, d={self.d:.6g})"


@dataclass(frozen=True)
class FirstOrderZero:
    n: int
    d: float
    lam: float = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        object.__setattr__(self, "lam", lambda0(self.n, self.d))

    @property
    def label(self) -> str:
        return f"first-order(n={self.n}, kappa=0, d={self.d:.6g})"


def _positive(psi):
    if np.any(np.asarray(psi) <= 0):
        raise PositivityError("profile value must be positive")


def residual_second_order(ineq: SecondOrder, psi, p, X):
    """``-X psi - (n-1)(kappa + (p/(n-1))^2)``."""
    _positive(psi)
    m = ineq.n - 1
    return -X * psi - m * (ineq.kappa + (p / m) ** 2)


def residual_first_order(ineq, psi, p):
    """``psi (1 + (p/(n-1))^2 / kappa)^((n-1)/2) - 1/lambda``."""
    _positive(psi)
    m = ineq.n - 1
    q = (p / m) ** 2
    if isinstance(ineq, FirstOrderPositive):
        q = q / ineq.kappa
    elif not isinstance(ineq, FirstOrderZero):
        raise TypeError(f"not a first-order inequality: {ineq!r}")
    return psi * (1.0 + q) ** (m / 2) - 1.0 / ineq.lam


@dataclass(frozen=True)
class Subjet:
    """Discrete second-order subjet of a sampled profile at ``beta0``.

    ``curvatures[i]`` is the largest ``X`` for which the parabola with slope
    ``slopes[i]`` and curvature ``X`` stays below the samples on the window.
    """

    beta0: float
    index: int
    p_lo: float
    p_hi: float
    slopes: np.ndarray
    curvatures: np.ndarray
    best_slope: float
    best_curvature: float
    curvature_floor: float
    empty: bool


def subjet_at(profile: SampledProfile, index: int, window: int = DEFAULT_WINDOW,
              n_slopes: int = DEFAULT_SLOPES) -> Subjet:
    """Touching-from-below parabolas at grid point ``index``.

    The subjet is empty when even the best parabola needs a curvature below
    the curvature floor, which is read off the second differences of the
    window away from the point (a corner shows up only at the point itself).
    The slope interval holds the slopes whose best parabola is within that
    margin of the best one; with a zero floor it reduces to the interval
    between the nearest left and right chords.
    """
    x, y = profile.grid, profile.values
    left = min(window, index)
    right = min(window, x.size - 1 - index)
    if left < MIN_WINDOW or right < MIN_WINDOW:
        raise IndexError(f"grid point {index} has fewer than {MIN_WINDOW} neighbours on one side")
    lo, hi = index - left, index + right
    xs, ys = x[lo:hi + 1], y[lo:hi + 1]
    mask = np.arange(lo, hi + 1) != index
    delta = xs[mask] - x[index]
    incr = ys[mask] - y[index]
    # line j: X <= a_j + b_j p
    a = 2.0 * incr / delta**2
    b = -2.0 / delta

    def touching(p):
        p = np.atleast_1d(p)
        return np.min(a[None, :] + b[None, :] * p[:, None], axis=1)

    inc, dec = b > 0, b < 0
    ai, bi = a[inc][:, None], b[inc][:, None]
    ad, bd = a[dec][None, :], b[dec][None, :]
    crossings = ((ad - ai) / (bi - bd)).ravel()
    x_cross = touching(crossings)
    k = int(np.argmax(x_cross))
    p_star, x_star = float(crossings[k]), float(x_cross[k])

    # second differences on stencils not containing the point itself
    h = np.diff(xs)
    d2 = 2.0 * ((ys[2:] - ys[1:-1]) / h[1:] - (ys[1:-1] - ys[:-2]) / h[:-1]) / (h[1:] + h[:-1])
    centres = np.arange(lo + 1, hi)
    away = np.abs(centres - index) >= 2
    neighbour_curv = float(np.max(np.abs(d2[away]))) if np.any(away) else 0.0
    roundoff = 64.0 * np.finfo(float).eps * float(np.max(np.abs(ys))) / float(np.min(delta**2))
    floor = 4.0 * neighbour_curv + roundoff
    empty = x_star < -floor

    if empty:
        nan = float("nan")
        return Subjet(float(x[index]), index, nan, nan, np.empty(0), np.empty(0),
                      p_star, x_star, floor, True)

    margin = max(0.0, -x_star) + 1e-9 * max(1.0, abs(x_star)) + roundoff
    p_lo = float(np.max((-margin - a[inc]) / b[inc]))
    p_hi = float(np.min((-margin - a[dec]) / b[dec]))
    p_lo, p_hi = min(p_lo, p_star), max(p_hi, p_star)
    slopes = np.concatenate([np.linspace(p_lo, p_hi, n_slopes + 2), [p_star]])
    return Subjet(float(x[index]), index, p_lo, p_hi, slopes, touching(slopes),
                  p_star, x_star, floor, False)


def _interior_indices(size: int) -> list[int]:
    # every point with at least MIN_WINDOW neighbours on each side
    return list(range(MIN_WINDOW, size - MIN_WINDOW))


def _closed_form_verdicts(profile: ClosedFormProfile, ineq, grid, tol):
    psi, dpsi, d2psi = profile.evaluate(grid)
    _positive(psi)
    if isinstance(ineq, SecondOrder):
        res = residual_second_order(ineq, psi, dpsi, d2psi)
    else:
        res = residual_first_order(ineq, psi, dpsi)
    out = []
    for i, beta in enumerate(grid):
        witness = {"p": float(dpsi[i])}
        if isinstance(ineq, SecondOrder):
            witness["X"] = float(d2psi[i])
        out.append(PointVerdict(float(beta), PASS if res[i] >= -tol else VIOLATION, float(res[i]), witness))
    return out


def _sampled_verdict(profile: SampledProfile, ineq, index: int, tol: float, window: int) -> PointVerdict:
    psi0 = float(profile.values[index])
    _positive(psi0)
    jet = subjet_at(profile, index, window)
    beta = float(profile.grid[index])
    if jet.empty:
        return PointVerdict(beta, VACUOUS, None, {"best_X": jet.best_curvature, "floor": jet.curvature_floor})
    if isinstance(ineq, SecondOrder):
        res = residual_second_order(ineq, psi0, jet.slopes, jet.curvatures)
    else:
        res = residual_first_order(ineq, psi0, jet.slopes)
    k = int(np.argmin(res))
    witness = {"p": float(jet.slopes[k])}
    if isinstance(ineq, SecondOrder):
        witness["X"] = float(jet.curvatures[k])
    return PointVerdict(beta, PASS if res[k] >= -tol else VIOLATION, float(res[k]), witness)


def check_supersolution(profile, ineq, grid=None, tol: float | None = None,
                        window: int = DEFAULT_WINDOW, threads: int = 1, count: int = 512) -> VerificationReport:
    """Test the supersolution inequality at every grid point.

    Closed-form profiles use exact derivatives (the subjet of a smooth
    function); sampled profiles use :func:`subjet_at`, and ``grid`` must then
    consist of sample points. Points with an empty subjet are vacuous.
    """
    notes = [ineq.label]
    if isinstance(profile, ClosedFormProfile):
        tol = CLOSED_FORM_TOL if tol is None else tol
        if grid is None:
            lo, hi = profile.domain
            if not math.isfinite(hi):
                raise ValueError("an explicit grid is required on an unbounded domain")
            grid = cosine_grid(lo, hi, count)
        verdicts = _closed_form_verdicts(profile, ineq, np.asarray(grid, dtype=float), tol)
    elif isinstance(profile, SampledProfile):
        tol = SAMPLED_TOL if tol is None else tol
        if grid is None:
            indices = _interior_indices(profile.grid.size)
        else:
            lookup = {float(b): i for i, b in enumerate(profile.grid)}
            try:
                indices = [lookup[float(b)] for b in np.atleast_1d(grid)]
            except KeyError as exc:
                raise AlignmentError(f"grid point {exc.args[0]} is not a sample of the profile") from None

        def verdict(i):
            return _sampled_verdict(profile, ineq, i, tol, window)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                verdicts = list(pool.map(verdict, indices))
        else:
            verdicts = [verdict(i) for i in indices]
        notes.append(f"window={window}")
    else:
        raise TypeError(f"unsupported profile type {type(profile).__name__}")
    return VerificationReport("supersolution", verdicts, {"residual": tol}, notes)


@dataclass(frozen=True)
class LevyGromov:
    pass


@dataclass(frozen=True)
class BBG:
    alpha: float


@dataclass(frozen=True)
class TwoSided:
    """Upper bound ``(|M_k|/|M|) ref(|M| beta / |M_k|)`` needs both total volumes."""

    total_volume: float
    model_volume: float | None = None


@dataclass(frozen=True)
class RatioMonotone:
    pass


def _on_grid(profile, grid):
    if isinstance(profile, SampledProfile):
        if grid is not None and not np.array_equal(np.asarray(grid, dtype=float), profile.grid):
            raise AlignmentError("sampled profile is not tabulated on the requested grid")
        return profile.grid, profile.values
    if grid is None:
        raise AlignmentError("a grid is needed when no profile is sampled")
    grid = np.asarray(grid, dtype=float)
    return grid, profile(grid)


def comparison_check(h, reference, mode, grid=None, tol: float = 1e-6) -> VerificationReport:
    """Pointwise comparison of a profile against a model profile.

    ``LevyGromov``: ``h >= ref``. ``BBG``: ``h >= alpha ref``. ``TwoSided``:
    ``ref <= h <= (|M_k|/|M|) ref(|M| beta/|M_k|)``. ``RatioMonotone``: successive
    differences of ``h/ref`` are ``<= tol``.
    """
    if isinstance(mode, TwoSided) and isinstance(reference, SampledProfile):
        raise AlignmentError("two-sided bound needs a reference that can be evaluated off-grid")
    if isinstance(h, SampledProfile) and isinstance(reference, SampledProfile):
        if not np.array_equal(h.grid, reference.grid):
            raise AlignmentError("profiles are sampled on different grids")
    if grid is None and isinstance(reference, SampledProfile) and not isinstance(h, SampledProfile):
        grid = reference.grid
    if grid is None and isinstance(h, SampledProfile):
        grid = h.grid
    betas, hv = _on_grid(h, grid)
    _, rv = _on_grid(reference, betas)

    witnesses = [None] * betas.size
    if isinstance(mode, LevyGromov):
        slack = hv - rv
        label = "levy-gromov"
    elif isinstance(mode, BBG):
        slack = hv - mode.alpha * rv
        label = "bbg"
    elif isinstance(mode, TwoSided):
        model = mode.model_volume
        if model is None:
            model = SpaceForm(h.n, 1.0).total_volume
        shrink = mode.total_volume / model
        upper = reference(betas * shrink) / shrink
        lower_slack = hv - rv
        upper_slack = upper - hv
        slack = np.minimum(lower_slack, upper_slack)
        witnesses = [{"lower": float(rv[i]), "value": float(hv[i]), "upper": float(upper[i])}
                     for i in range(betas.size)]
        label = "two-sided"
    elif isinstance(mode, RatioMonotone):
        ratio = hv / rv
        slack = -np.diff(np.concatenate([[ratio[0]], ratio]))
        witnesses = [{"ratio": float(q)} for q in ratio]
        label = "ratio-monotone"
    else:
        raise TypeError(f"unknown comparison mode {mode!r}")

    verdicts = [PointVerdict(float(b), PASS if s >= -tol else VIOLATION, float(s), witnesses[i])
                for i, (b, s) in enumerate(zip(betas, slack))]
    return VerificationReport(label, verdicts, {"slack": tol})
