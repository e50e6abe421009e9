"""Shared numerical kernel.

Adaptive Gauss-Kronrod quadrature, Brent root bracketing, non-uniform finite
differences, golden-section minimization and a cumulative-integral table with a
fast monotone inverse. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Kronrod 15-point nodes (non-negative half) and weights; the embedded 7-point
# Gauss rule uses the odd-indexed nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point abscissae on [-1, 1] and matching weights
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[[13, 11, 9]] = _WG[:3]
_GAUSS_W[7] = _WG[3]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class QuadratureError(RuntimeError):
    """Subdivision budget exhausted before the tolerance was met."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class BracketError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best: float):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class RootSpec:
    lo: float
    hi: float
    xtol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if self.lo == self.hi:
            raise BracketError("bracket endpoints must be distinct")


DEFAULT_QUADRATURE = QuadratureSpec()


def _evaluator(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap ``f`` so it can be applied to an array of abscissae.

    Vectorized callables are used as-is; scalar-only ones (``math.cos``) fall
    back to a Python loop.
    """
    probe = np.array([0.25, 0.5])
    try:
        out = np.asarray(f(probe), dtype=float)
        if out.shape == probe.shape:
            return lambda x: np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        pass
    return lambda x: np.array([float(f(float(t))) for t in np.ravel(x)]).reshape(np.shape(x))


def _gk15(fv, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    y = fv(center + half * _NODES)
    if not np.all(np.isfinite(y)):
        raise ValueError(f"integrand is not finite on [{a}, {b}]")
    kronrod = half * float(np.dot(_KRONROD_W, y))
    gauss = half * float(np.dot(_GAUSS_W, y))
    return kronrod, abs(kronrod - gauss)


def integrate(f: Callable, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Globally adaptive G7-K15 quadrature of ``f`` over ``[a, b]``.

    Intervals are bisected in order of decreasing error estimate until the
    summed estimate drops below ``max(abs_tol, rel_tol * |I|)``.

    Raises:
        QuadratureError: if ``spec.max_subdivisions`` bisections do not
            suffice; the exception carries the best estimate.
    """
    if a > b:
        raise ValueError(f"integrate requires a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0
    fv = _evaluator(f)
    value, err = _gk15(fv, a, b)
    heap = [(-err, a, b, value)]
    total, total_err = value, err
    splits = 0
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if splits >= spec.max_subdivisions:
            raise QuadratureError(
                f"no convergence on [{a}, {b}] after {splits} subdivisions", total, total_err
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        left, left_err = _gk15(fv, lo, mid)
        right, right_err = _gk15(fv, mid, hi)
        heapq.heappush(heap, (-left_err, lo, mid, left))
        heapq.heappush(heap, (-right_err, mid, hi, right))
        total += left + right - val
        total_err += left_err + right_err + neg_err
        splits += 1
    # re-sum to shed the drift of the running updates
    return math.fsum(item[3] for item in heap)


def find_root(f: Callable[[float], float], spec: RootSpec) -> float:
    """Brent's method on the bracket ``[spec.lo, spec.hi]``.

    Returns once the bracket is narrower than ``spec.xtol`` (or ``f`` hits an
    exact zero).
    """
    a, b = float(spec.lo), float(spec.hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise BracketError(f"no sign change on [{a}, {b}]: f={fa:.3e}, {fb:.3e}")

    c, fc = a, fa
    d = e = b - a
    for _ in range(spec.max_iter):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2.0 * np.finfo(float).eps * abs(b) + 0.5 * spec.xtol
        m = 0.5 * (c - b)
        if abs(m) <= tol or fb == 0.0:
            return b
        if abs(e) >= tol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p, q = 2.0 * m * s, 1.0 - s
            else:
                q, r = fa / fc, fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * m * q - abs(tol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        b += d if abs(d) > tol else math.copysign(tol, m)
        fb = f(b)
    raise ConvergenceError(f"Brent iteration budget ({spec.max_iter}) exhausted", b)


def _fd_pair(x0, x1, x2, y0, y1, y2):
    # three-point Lagrange weights written as a blend of the two chord slopes
    h0 = x1 - x0
    h1 = x2 - x1
    s0 = (y1 - y0) / h0
    s1 = (y2 - y1) / h1
    return (h1 * s0 + h0 * s1) / (h0 + h1), 2.0 * (s1 - s0) / (h0 + h1)


def fd_derivatives_all(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Three-point Lagrange first and second derivatives at every interior sample."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or x.shape != y.shape:
        raise ValueError("need matching grids with at least 3 points")
    return _fd_pair(x[:-2], x[1:-1], x[2:], y[:-2], y[1:-1], y[2:])


def fd_derivatives(samples, index: int) -> tuple[float, float]:
    """Centered derivatives of a sampled profile at grid position ``index``.

    ``samples`` is anything exposing ``grid`` and ``values`` arrays (a
    ``SampledProfile`` for instance).
    """
    x = np.asarray(samples.grid, dtype=float)
    y = np.asarray(samples.values, dtype=float)
    if x.size < 3:
        raise ValueError("finite differences need at least 3 grid points")
    if not 0 < index < x.size - 1:
        raise IndexError(f"index {index} is not interior to a grid of {x.size} points")
    first, second = _fd_pair(*x[index - 1:index + 2], *y[index - 1:index + 2])
    return float(first), float(second)


def minimize_1d(f: Callable, a, b, tol: float = 1e-10, max_iter: int = 500):
    """Golden-section search for a local minimum of ``f`` on ``[a, b]``.

    ``a`` and ``b`` may be arrays, in which case independent searches run in
    lockstep and ``f`` must be vectorized. The better of the converged point
    and the two endpoints is returned, so monotone inputs give the endpoint.

    Returns:
        ``(argmin, min_value)``, scalars for scalar input.
    """
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    lo = np.atleast_1d(np.asarray(a, dtype=float)).copy()
    hi = np.atleast_1d(np.asarray(b, dtype=float)).copy()
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    if np.any(hi <= lo):
        raise ValueError("minimize_1d requires a < b")
    fv = (lambda x: np.array([float(f(t)) for t in x])) if scalar else (lambda x: np.asarray(f(x), dtype=float))

    a0, b0 = lo.copy(), hi.copy()
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = fv(x1), fv(x2)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        left = f1 <= f2
        # minimum in [lo, x2] where left, else in [x1, hi]
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        new_x = np.where(left, hi - _INV_PHI * (hi - lo), lo + _INV_PHI * (hi - lo))
        f_new = fv(new_x)
        x2, f2, x1, f1 = (
            np.where(left, x1, new_x),
            np.where(left, f1, f_new),
            np.where(left, new_x, x2),
            np.where(left, f_new, f2),
        )
    xm = 0.5 * (lo + hi)
    fm = fv(xm)
    fa, fb = fv(a0), fv(b0)
    best_x = np.where(fa < fm, a0, xm)
    best_f = np.minimum(fa, fm)
    best_x = np.where(fb < best_f, b0, best_x)
    best_f = np.minimum(fb, best_f)
    if scalar:
        return float(best_x[0]), float(best_f[0])
    return best_x, best_f


def integrate_positive_part(
    g: Callable, a: float, b: float, power: float = 1.0,
    spec: QuadratureSpec = DEFAULT_QUADRATURE, scan: int = 64,
) -> float:
    """Integral of ``max(g, 0) ** power`` over ``[a, b]``.

    Sign changes of ``g`` are located on a scan grid and refined with
    :func:`find_root`; only the positive pieces are integrated, so the kink of
    the positive part never sits inside a quadrature panel.
    """
    if a > b:
        raise ValueError("integrate_positive_part requires a <= b")
    if a == b:
        return 0.0
    fv = _evaluator(g)
    xs = np.linspace(a, b, scan + 1)
    ys = fv(xs)
    cuts = [a]
    for x0, x1, y0, y1 in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
        if y0 == 0.0 and x0 > a:
            cuts.append(float(x0))
        elif (y0 > 0) != (y1 > 0) and y1 != 0.0 and y0 != 0.0:
            cuts.append(find_root(lambda t: float(fv(np.array([t]))[0]), RootSpec(x0, x1, xtol=1e-15)))
    cuts.append(b)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        if fv(np.array([0.5 * (lo + hi)]))[0] > 0:
            total += integrate(lambda t: np.maximum(fv(t), 0.0) ** power, lo, hi, spec)
    return total


class CumulativeIntegral:
    """Running integral ``F(x) = int_a^x f`` of a non-negative integrand.

    A panel table of ``F`` is built once with :func:`integrate`; evaluation
    inside a panel adds a single Kronrod sweep (falling back to the adaptive
    routine when its error estimate is too large). :meth:`inverse` solves
    ``F(x) = v`` with Newton steps safeguarded by the panel bracket, again with
    a Brent fallback for stragglers.
    """

    def __init__(self, f: Callable, a: float, b: float, panels: int = 256,
                 spec: QuadratureSpec = DEFAULT_QUADRATURE):
        if not b > a:
            raise ValueError("CumulativeIntegral needs b > a")
        self._f = _evaluator(f)
        self.spec = spec
        self.nodes = np.linspace(a, b, panels + 1)
        pieces = [integrate(self._f, lo, hi, spec) for lo, hi in zip(self.nodes[:-1], self.nodes[1:])]
        self.table = np.concatenate([[0.0], np.cumsum(pieces)])

    @property
    def total(self) -> float:
        return float(self.table[-1])

    def _panel(self, x: np.ndarray) -> np.ndarray:
        k = np.searchsorted(self.nodes, x, side="right") - 1
        return np.clip(k, 0, self.nodes.size - 2)

    def _partial(self, k: np.ndarray, x: np.ndarray) -> np.ndarray:
        lo = self.nodes[k]
        half = 0.5 * (x - lo)
        pts = (lo + half)[:, None] + half[:, None] * _NODES[None, :]
        y = self._f(pts.ravel()).reshape(pts.shape)
        kron = half * (y @ _KRONROD_W)
        gauss = half * (y @ _GAUSS_W)
        bad = np.abs(kron - gauss) > np.maximum(self.spec.abs_tol, self.spec.rel_tol * np.abs(kron))
        for i in np.flatnonzero(bad):
            kron[i] = integrate(self._f, float(lo[i]), float(x[i]), self.spec)
        return kron

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs < self.nodes[0]) or np.any(xs > self.nodes[-1]):
            raise ValueError("argument outside the tabulated range")
        k = self._panel(xs)
        out = self.table[k] + self._partial(k, xs)
        return float(out[0]) if np.ndim(x) == 0 else out

    def inverse(self, v, xtol: float = 4 * np.finfo(float).eps):
        vs = np.atleast_1d(np.asarray(v, dtype=float))
        if np.any(vs < 0) or np.any(vs > self.table[-1]):
            raise ValueError("value outside the range of the cumulative integral")
        k = np.clip(np.searchsorted(self.table, vs, side="right") - 1, 0, self.nodes.size - 2)
        lo = self.nodes[k].copy()
        hi = self.nodes[k + 1].copy()
        span = self.table[k + 1] - self.table[k]
        frac = np.where(span > 0, (vs - self.table[k]) / np.where(span > 0, span, 1.0), 0.0)
        x = lo + frac * (hi - lo)
        done = np.zeros(vs.shape, dtype=bool)
        for _ in range(100):
            active = ~done
            if not np.any(active):
                break
            ka, xa = k[active], x[active]
            resid = self.table[ka] + self._partial(ka, xa) - vs[active]
            slope = self._f(xa)
            lo_a = np.where(resid < 0, xa, lo[active])
            hi_a = np.where(resid > 0, xa, hi[active])
            with np.errstate(divide="ignore", invalid="ignore"):
                step = resid / slope
            xn = xa - step
            bisect = ~np.isfinite(xn) | (xn <= lo_a) | (xn >= hi_a)
            xn = np.where(bisect, 0.5 * (lo_a + hi_a), xn)
            converged = (resid == 0) | (np.abs(xn - xa) <= xtol * (1.0 + np.abs(xa))) | (hi_a - lo_a <= xtol)
            lo[active], hi[active] = lo_a, hi_a
            x[active] = np.where(resid == 0, xa, xn)
            done[active] = converged
        for i in np.flatnonzero(~done):
            target = vs[i]
            x[i] = find_root(lambda t: self(t) - target, RootSpec(lo[i], hi[i], xtol=xtol * (1.0 + hi[i])))
        return float(x[0]) if np.ndim(v) == 0 else x


def cosine_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """``count`` interior points of ``(lo, hi)``, clustered at both ends."""
    if count < 1:
        raise ValueError("grid needs at least one point")
    i = np.arange(1, count + 1)
    return lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * i / (count + 1)))
