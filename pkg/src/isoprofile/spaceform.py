"""Geodesic balls and isoperimetric profiles of the simply connected space forms.

Volumes come from quadrature of ``s_kappa^(n-1)``; profile derivatives are
closed-form in the ball radius, which is recovered from the enclosed volume by
inverting the monotone volume map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .numerics import CumulativeIntegral, fd_derivatives_all


class DomainError(ValueError):
    pass


def sk(kappa: float, t):
    """Generalized sine: ``sin(sqrt(k) t)/sqrt(k)``, ``t`` or ``sinh`` by sign of ``kappa``."""
    if kappa > 0:
        rk = math.sqrt(kappa)
        return np.sin(rk * t) / rk
    if kappa < 0:
        rk = math.sqrt(-kappa)
        return np.sinh(rk * t) / rk
    return t * 1.0


def ck(kappa: float, t):
    """Generalized cosine, the derivative of :func:`sk`."""
    if kappa > 0:
        return np.cos(math.sqrt(kappa) * t)
    if kappa < 0:
        return np.cosh(math.sqrt(-kappa) * t)
    return np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0


def unit_sphere_area(n: int) -> float:
    """Area of the unit (n-1)-sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def asymptotic_constant(n: int, total_volume: float) -> float:
    """Small-volume limit of ``h1(beta) / beta^((n-1)/n)``."""
    if total_volume <= 0:
        raise ValueError("total volume must be positive")
    return n * unit_ball_volume(n) ** (1.0 / n) / total_volume ** (1.0 / n)


class ProfileValue(NamedTuple):
    psi: float | np.ndarray
    dpsi: float | np.ndarray
    d2psi: float | np.ndarray


@dataclass(frozen=True)
class SampledProfile:
    """Profile values on a strictly increasing grid.

    Derivatives are three-point finite differences (interior points only).
    """

    grid: np.ndarray
    values: np.ndarray
    normalization: str
    n: int
    domain: tuple[float, float]
    kind: str = field(default="sampled", init=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.normalization not in ("h1", "h2"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, beta):
        return np.interp(beta, self.grid, self.values)

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """First and second derivatives at ``grid[1:-1]``."""
        return fd_derivatives_all(self.grid, self.values)


@dataclass(frozen=True)
class ClosedFormProfile:
    """Profile with exact value and derivative access.

    ``evaluator`` maps an array of volumes to a :class:`ProfileValue`.
    """

    evaluator: Callable[[np.ndarray], ProfileValue]
    normalization: str
    n: int
    domain: tuple[float, float]
    kind: str = field(default="closed-form", init=False)

    def evaluate(self, beta) -> ProfileValue:
        b = np.asarray(beta, dtype=float)
        lo, hi = self.domain
        if np.any(b <= lo) or np.any(b >= hi):
            raise DomainError(f"volume outside the open domain ({lo}, {hi})")
        out = self.evaluator(np.atleast_1d(b))
        if b.ndim == 0:
            return ProfileValue(*(float(np.asarray(v)[0]) for v in out))
        return out

    def __call__(self, beta):
        return self.evaluate(beta).psi

    def sample(self, grid) -> SampledProfile:
        grid = np.asarray(grid, dtype=float)
        return SampledProfile(grid, self.evaluate(grid).psi, self.normalization, self.n, self.domain)


@dataclass(frozen=True)
class SpaceForm:
    """Simply connected space of dimension ``n`` and constant curvature ``kappa``."""

    n: int
    kappa: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("dimension must be an integer >= 2")

    @property
    def compact(self) -> bool:
        return self.kappa > 0

    @property
    def diameter(self) -> float:
        return math.pi / math.sqrt(self.kappa) if self.kappa > 0 else math.inf

    @property
    def omega(self) -> float:
        return unit_sphere_area(self.n)

    def _density(self, r):
        return sk(self.kappa, r) ** (self.n - 1)

    @cached_property
    def _tables(self) -> dict:
        return {}

    def _table(self, reach: float) -> CumulativeIntegral:
        # compact: one table over the whole diameter; otherwise grow by doubling
        if self.compact:
            upper = self.diameter
        else:
            upper = 1.0
            while upper < reach:
                upper *= 2.0
        table = self._tables.get(upper)
        if table is None:
            table = CumulativeIntegral(self._density, 0.0, upper)
            self._tables[upper] = table
        return table

    @property
    def total_volume(self) -> float:
        if not self.compact:
            return math.inf
        return self.omega * self._table(self.diameter).total

    def _check_radius(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.diameter):
            raise DomainError(f"radius outside [0, {self.diameter}]")

    def ball_volume(self, r):
        self._check_radius(r)
        reach = float(np.max(r)) if np.size(r) else 0.0
        return self.omega * self._table(reach)(r)

    def ball_area(self, r):
        self._check_radius(r)
        return self.omega * self._density(np.asarray(r, dtype=float) if np.ndim(r) else float(r))

    def radius_for_volume(self, volume):
        """Radius of the geodesic ball enclosing ``volume``."""
        v = np.asarray(volume, dtype=float)
        if np.any(v < 0) or np.any(v > self.total_volume):
            raise DomainError("volume outside the range of geodesic balls")
        scaled = v / self.omega
        if self.compact:
            table = self._table(self.diameter)
        else:
            reach = 1.0
            peak = float(np.max(scaled)) if scaled.size else 0.0
            while self._table(reach).total < peak:
                reach *= 2.0
            table = self._table(reach)
        return table.inverse(scaled if scaled.ndim else float(scaled))

    def _h2_values(self, beta: np.ndarray) -> ProfileValue:
        r = self.radius_for_volume(beta)
        n, om = self.n, self.omega
        s = sk(self.kappa, r)
        c = ck(self.kappa, r)
        psi = om * s ** (n - 1)
        dpsi = (n - 1) * c / s
        # d/dr (c/s) = -1/s^2 and dr/dbeta = 1/area
        d2psi = -(n - 1) / (s * s * psi)
        return ProfileValue(psi, dpsi, d2psi)

    def h2(self) -> ClosedFormProfile:
        return ClosedFormProfile(self._h2_values, "h2", self.n, (0.0, self.total_volume))

    def h1(self) -> ClosedFormProfile:
        if not self.compact:
            raise DomainError("h1 needs finite total volume (kappa > 0)")
        total = self.total_volume

        def values(beta):
            psi, dpsi, d2psi = self._h2_values(beta * total)
            return ProfileValue(psi / total, dpsi, d2psi * total)

        return ClosedFormProfile(values, "h1", self.n, (0.0, 1.0))


def ball_volume(sf: SpaceForm, r):
    return sf.ball_volume(r)


def ball_area(sf: SpaceForm, r):
    return sf.ball_area(r)


def profile_h1(sf: SpaceForm, beta) -> ProfileValue:
    """``(psi, psi', psi'')`` of the normalized profile at volume fraction ``beta``."""
    return sf.h1().evaluate(beta)


def profile_h2(sf: SpaceForm, beta) -> ProfileValue:
    """``(psi, psi', psi'')`` of the unnormalized profile at volume ``beta``."""
    return sf.h2().evaluate(beta)


def scale_profile(profile, c: float):
    """Profile of the metric ``c * g`` from the unnormalized profile of ``g``.

    Areas pick up ``c^((n-1)/2)`` and volumes ``c^(n/2)``.
    """
    if c <= 0:
        raise ValueError("scale factor must be positive")
    if profile.normalization != "h2":
        raise ValueError("scaling law applies to h2 profiles")
    n = profile.n
    area_factor = c ** ((n - 1) / 2)
    vol_factor = c ** (n / 2)
    lo, hi = profile.domain
    domain = (lo * vol_factor, hi * vol_factor)
    if isinstance(profile, SampledProfile):
        return SampledProfile(profile.grid * vol_factor, profile.values * area_factor, "h2", n, domain)

    def values(beta):
        psi, dpsi, d2psi = profile.evaluator(beta / vol_factor)
        return ProfileValue(area_factor * psi, dpsi * area_factor / vol_factor,
                            d2psi * area_factor / vol_factor ** 2)

    return ClosedFormProfile(values, "h2", n, domain)


def to_h1(profile, total_volume: float):
    """Normalized profile ``h1(beta) = h2(beta |M|) / |M|`` of a finite-volume h2 profile."""
    if profile.normalization != "h2":
        raise ValueError("expected an h2 profile")
    if isinstance(profile, SampledProfile):
        return SampledProfile(profile.grid / total_volume, profile.values / total_volume,
                              "h1", profile.n, (0.0, 1.0))

    def values(beta):
        psi, dpsi, d2psi = profile.evaluator(beta * total_volume)
        return ProfileValue(psi / total_volume, dpsi, d2psi * total_volume)

    return ClosedFormProfile(values, "h1", profile.n, (0.0, 1.0))
