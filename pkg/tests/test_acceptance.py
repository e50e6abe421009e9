"""Acceptance gate: every criterion at its stated tolerance.

Each ``criterion_*`` function returns ``(ok, detail)``. Under pytest every
criterion is its own test and a PASS/FAIL line is printed for it (see
``conftest.py``); ``python tests/test_acceptance.py`` prints the same lines.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from isoprofile.constants import alpha, gamma_n, lambda0, lambda_kappa
from isoprofile.numerics import cosine_grid, fd_derivatives, fd_derivatives_all
from isoprofile.spaceform import SampledProfile, SpaceForm, asymptotic_constant, to_h1
from isoprofile.viscosity import (BBG, FirstOrderPositive, RatioMonotone, SecondOrder, TwoSided, check_supersolution,
                                  comparison_check, residual_first_order, residual_second_order, subjet_at)
from isoprofile.warped import (ball_comparison_check, candidate_samples, hk_volume_bound, normalized,
                               perturbed_sphere, round_sphere)

DIMS = range(2, 7)
EPSILONS = (0.02, 0.05)


def criterion_1a():
    """Closed-form second-order residual on a 512-point cosine grid, all n, under 5 s."""
    start = time.perf_counter()
    grid = cosine_grid(0.0, 1.0, 512)
    worst = 0.0
    for n in DIMS:
        psi, dpsi, d2psi = SpaceForm(n, 1.0).h1().evaluate(grid)
        worst = max(worst, float(np.max(np.abs(residual_second_order(SecondOrder(n, 1.0), psi, dpsi, d2psi)))))
    elapsed = time.perf_counter() - start
    return worst <= 1e-8 and elapsed < 5.0, f"sup|residual|={worst:.2e} (<=1e-8), {elapsed:.2f}s (<5s)"


def criterion_1b():
    """Finite-difference second-order residual at 2048 cosine points, all n."""
    start = time.perf_counter()
    grid = cosine_grid(0.0, 1.0, 2048)
    worst, where, central, within = 0.0, None, 0.0, 0
    inner = grid[1:-1]
    middle = (inner >= 0.05) & (inner <= 0.95)
    for n in DIMS:
        psi = SpaceForm(n, 1.0).h1()(grid)
        d1, d2 = fd_derivatives_all(grid, psi)
        res = np.abs(residual_second_order(SecondOrder(n, 1.0), psi[1:-1], d1, d2))
        k = int(np.argmax(res))
        if res[k] > worst:
            worst, where = float(res[k]), (n, float(inner[k]))
        central = max(central, float(np.max(res[middle])))
        within += int(np.sum(res <= 1e-5))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 5.0
    return ok, (f"sup|residual|={worst:.2e} (<=1e-5) at n={where[0]}, beta={where[1]:.2e}; "
                f"sup on [0.05, 0.95] {central:.2e}; {within}/{len(DIMS) * inner.size} points within; "
                f"{elapsed:.2f}s")


def criterion_2():
    """First-order residual with lambda = gamma_n, plus the d = pi/2 negative control."""
    worst = 0.0
    for count in (512, 2048):
        grid = cosine_grid(0.0, 1.0, count)
        for n in DIMS:
            psi, dpsi, _ = SpaceForm(n, 1.0).h1().evaluate(grid)
            res = residual_first_order(FirstOrderPositive(n, 1.0, math.pi), psi, dpsi)
            worst = max(worst, float(np.max(np.abs(res))))
    ok = worst <= 1e-8
    h1 = SpaceForm(2, 1.0).h1()
    short = FirstOrderPositive(2, 1.0, math.pi / 2)
    report = check_supersolution(h1, short, cosine_grid(0.0, 1.0, 512))
    share = len(report.violations) / len(report.verdicts)
    at_half = check_supersolution(h1, short, [0.5]).verdicts[0].residual
    ok = ok and share >= 0.95 and at_half <= -0.20 and abs(at_half - (0.5 - 1 / math.sqrt(2))) <= 1e-4
    return ok, f"sup|residual|={worst:.2e} (<=1e-8); control: {share:.0%} violations, residual(1/2)={at_half:.6f}"


def criterion_3():
    """Euclidean h2 solves the flat second-order equation on [0.1, 10]."""
    beta = np.linspace(0.1, 10.0, 512)
    worst = 0.0
    for n in DIMS:
        psi, dpsi, d2psi = SpaceForm(n, 0.0).h2().evaluate(beta)
        expected = n * (math.pi ** (n / 2) / math.gamma(n / 2 + 1)) ** (1 / n) * beta ** ((n - 1) / n)
        assert np.allclose(psi, expected, rtol=1e-10)
        worst = max(worst, float(np.max(np.abs(residual_second_order(SecondOrder(n, 0.0), psi, dpsi, d2psi)))))
    return worst <= 1e-8, f"sup|residual|={worst:.2e} (<=1e-8)"


def criterion_4():
    """Comparison constants against closed forms."""
    errs = {
        "alpha(n,pi)": max(abs(alpha(n, math.pi) - 1) for n in range(2, 9)),
        "alpha(2,pi/2)": abs(alpha(2, math.pi / 2) - 2**0.25),
        "lambda(3,pi/2)": abs(lambda_kappa(3, 1.0, math.pi / 2) - (math.pi / 4 + 0.5)),
        "lambda0(2,1)": abs(lambda0(2, 1.0) - (math.sqrt(2) + math.log(1 + math.sqrt(2))) / 2),
    }
    limits = {"alpha(n,pi)": 1e-10, "alpha(2,pi/2)": 1e-8, "lambda(3,pi/2)": 1e-10, "lambda0(2,1)": 1e-10}
    ds = np.linspace(math.pi / 64, math.pi, 64)
    floor = min(alpha(n, d) for n in range(2, 9) for d in ds)
    ok = all(errs[k] <= limits[k] for k in errs) and floor >= 1.0 - 1e-12
    detail = ", ".join(f"{k} err {v:.1e}" for k, v in errs.items())
    return ok, f"{detail}; min alpha on d-grid {floor:.12f} (>=1); gamma_2={gamma_n(2):.12f}"


def criterion_5():
    """Heintze-Karcher bound is 1 on unit-sphere caps."""
    radii = (math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3)
    worst = max(abs(hk_volume_bound(2, math.pi, math.sin(r) / 2, 1 / math.tan(r), r) - 1) for r in radii)
    return worst <= 1e-8, f"max|bound-1|={worst:.2e} (<=1e-8)"


def criterion_6():
    """Ball comparison on normalized perturbed spheres, equality on the round sphere, under 10 s."""
    start = time.perf_counter()
    worst = math.inf
    for n in (2, 3):
        for eps in EPSILONS:
            report = ball_comparison_check(normalized(perturbed_sphere(n, eps)), 1.0, count=256)
            worst = min(worst, report.worst().residual)
    sphere = ball_comparison_check(round_sphere(2), 1.0, count=256)
    dev = max(abs(s) for v in sphere.verdicts for k, s in v.witness["slacks"].items() if k != "increment")
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-9 and dev <= 1e-9 and elapsed < 10.0
    return ok, f"min slack {worst:.2e} (>=-1e-9); round-sphere deviation {dev:.2e} (<=1e-9); {elapsed:.2f}s"


def _candidate_h1(n, eps, count=256):
    m = normalized(perturbed_sphere(n, eps))
    samples, _ = candidate_samples(m, cosine_grid(0.0, 1.0, count) * m.total_volume)
    return m, samples


def criterion_7():
    """Two-sided bounds and BBG (d = L) for candidate profiles, assuming they are minimizers."""
    lower = upper = bbg = math.inf
    for n in (2, 3):
        sphere = SpaceForm(n, 1.0)
        for eps in EPSILONS:
            m, samples = _candidate_h1(n, eps)
            h1 = to_h1(samples, m.total_volume)
            two = comparison_check(h1, sphere.h1(), TwoSided(m.total_volume, sphere.total_volume), tol=1e-6)
            lower = min(lower, min(v.witness["value"] - v.witness["lower"] for v in two.verdicts))
            upper = min(upper, min(v.witness["upper"] - v.witness["value"] for v in two.verdicts))
            b = comparison_check(h1, sphere.h1(), BBG(alpha(n, m.length)), tol=1e-6)
            bbg = min(bbg, b.worst().residual)
    ok = lower >= -1e-6 and upper >= -1e-6 and bbg >= -1e-6
    return ok, f"lower slack {lower:.2e}, upper slack {upper:.2e}, BBG slack {bbg:.2e} (all >=-1e-6)"


def criterion_8():
    """Ratio h2(g)/h2(g1) is non-increasing on round and perturbed spheres."""
    worst = -math.inf
    targets = [(n, round_sphere(n)) for n in (2, 3)]
    targets += [(n, normalized(perturbed_sphere(n, eps))) for n in (2, 3) for eps in EPSILONS]
    for n, m in targets:
        samples, _ = candidate_samples(m, cosine_grid(0.0, m.total_volume, 256))
        report = comparison_check(samples, SpaceForm(n, 1.0).h2(), RatioMonotone(), tol=1e-6)
        ratio = np.array([v.witness["ratio"] for v in report.verdicts])
        worst = max(worst, float(np.max(np.diff(ratio))))
        assert report.global_pass == (np.max(np.diff(ratio)) <= 1e-6)
    return worst <= 1e-6, f"max ratio increment {worst:.2e} (<=1e-6)"


def criterion_9():
    """Small-volume asymptotics of space-form profiles at beta = 1e-6."""
    worst = 0.0
    beta = 1e-6
    for n in (2, 3, 4):
        sphere = SpaceForm(n, 1.0)
        c = asymptotic_constant(n, sphere.total_volume)
        worst = max(worst, abs(sphere.h1()(beta) / beta ** ((n - 1) / n) - c) / c)
        for kappa in (0.0, -1.0):
            c = asymptotic_constant(n, 1.0)
            worst = max(worst, abs(SpaceForm(n, kappa).h2()(beta) / beta ** ((n - 1) / n) - c) / c)
    return worst <= 0.01, f"max relative deviation {worst:.2e} (<=1e-2)"


def criterion_10():
    """Subjet: empty at concave kinks, [-1, 1] at convex kinks, order >= 1 window convergence."""
    x = np.linspace(0.0, 1.0, 101)

    def profile(y, grid=x):
        return SampledProfile(grid, y, "h1", 2, (0.0, 1.0))

    concave_empty = subjet_at(profile(1 - np.abs(x - 0.5)), 50).empty
    convex = subjet_at(profile(1 + np.abs(x - 0.5)), 50)
    interval_err = max(abs(convex.p_lo + 1), abs(convex.p_hi - 1))
    fine = np.linspace(0.0, 1.0, 1001)
    ratios, slope_err = [], 0.0
    for y in (np.sin(2 * fine) + fine**3, np.exp(fine), -np.sqrt(fine + 0.5)):
        s = profile(y, fine)
        p_fd, x_fd = fd_derivatives(s, 400)
        wide, narrow = subjet_at(s, 400, window=16), subjet_at(s, 400, window=8)
        ratios.append(abs(wide.best_curvature - x_fd) / abs(narrow.best_curvature - x_fd))
        slope_err = max(slope_err, abs(narrow.best_slope - p_fd))
    ok = concave_empty and not convex.empty and interval_err <= 1e-6 and min(ratios) >= 2.0 and slope_err <= 1e-4
    return ok, (f"concave empty={concave_empty}, convex interval err {interval_err:.1e}, "
                f"halving-window ratio min {min(ratios):.2f} (>=2), slope err {slope_err:.1e}")


def criterion_11():
    """Identical CLI configurations give byte-identical JSON."""
    commands = [
        ["profile", "--spaceform", "n=3", "kappa=1", "--grid", "33"],
        ["constants", "--n", "4", "--d", "1.0", "2.0"],
        ["verify", "supersolution-2nd", "--spaceform", "n=2", "kappa=1"],
        ["verify", "ratio-monotone", "--warp", "sin-perturbed", "--n", "2", "--grid", "64", "--assume-minimizer"],
    ]
    same = []
    for argv in commands:
        outs = [subprocess.run([sys.executable, "-m", "isoprofile", *argv], capture_output=True, check=False).stdout
                for _ in range(2)]
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    return all(same), f"{sum(same)}/{len(same)} commands byte-identical"


CRITERIA = {
    "1a": criterion_1a, "1b": criterion_1b, "2": criterion_2, "3": criterion_3, "4": criterion_4,
    "5": criterion_5, "6": criterion_6, "7": criterion_7, "8": criterion_8, "9": criterion_9,
    "10": criterion_10, "11": criterion_11,
}


def report_line(key: str, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} criterion {key}: {CRITERIA[key].__doc__.strip()} [{detail}]"


@pytest.mark.parametrize("key", list(CRITERIA))
def test_criterion(key, acceptance_log):
    ok, detail = CRITERIA[key]()
    line = report_line(key, ok, detail)
    acceptance_log.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [report_line(k, *fn()) for k, fn in CRITERIA.items()]
    print("\n".join(results))
    sys.exit(0 if all(r.startswith("PASS") for r in results) else 1)
