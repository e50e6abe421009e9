import math

import numpy as np
import pytest

from isoprofile.constants import alpha, alpha_prime, comparison_constants, gamma_n, lambda0, lambda_kappa
from isoprofile.spaceform import DomainError


def test_gamma_examples():
    assert gamma_n(2) == pytest.approx(2.0, abs=1e-12)
    assert gamma_n(3) == pytest.approx(math.pi / 2, abs=1e-12)
    assert gamma_n(4) == pytest.approx(4 / 3, abs=1e-12)


@pytest.mark.parametrize("n", range(4, 13))
def test_gamma_wallis(n):
    assert abs(gamma_n(n) - gamma_n(n - 2) * (n - 2) / (n - 1)) <= 1e-10


def test_lambda_examples():
    assert lambda_kappa(2, 1.0, math.pi) == pytest.approx(2.0, abs=1e-12)
    assert lambda_kappa(2, 1.0, math.pi / 2) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert lambda_kappa(3, 1.0, math.pi) == pytest.approx(math.pi / 2, abs=1e-12)


def test_lambda_rescaling():
    kappa, d = 4.0, 1.2
    rk = math.sqrt(kappa)
    assert lambda_kappa(3, kappa, d) == pytest.approx(lambda_kappa(3, 1.0, rk * d) / rk, rel=1e-12)


def test_lambda_domain():
    with pytest.raises(DomainError):
        lambda_kappa(2, 1.0, 3.5)
    with pytest.raises(DomainError):
        lambda_kappa(2, 1.0, 0.0)
    with pytest.raises(ValueError):
        lambda_kappa(2, 0.0, 1.0)


def test_alpha_examples():
    for n in range(2, 9):
        assert abs(alpha(n, math.pi) - 1) <= 1e-10
    assert alpha(2, math.pi / 2) == pytest.approx(2**0.25, abs=1e-10)
    expected = ((math.pi / 2) / (math.pi / 4 + 0.5)) ** (1 / 3)
    assert alpha(3, math.pi / 2) == pytest.approx(expected, abs=1e-10)
    with pytest.raises(DomainError):
        alpha(2, 4.0)


def test_monotonicity_on_grid():
    ds = np.linspace(math.pi / 64, math.pi, 64)
    lam = [lambda_kappa(3, 1.0, d) for d in ds]
    lam0 = [lambda0(3, d) for d in ds]
    al = [alpha(3, d) for d in ds]
    assert np.all(np.diff(lam) > 0) and np.all(np.diff(lam0) > 0)
    assert np.all(np.diff(al) <= 0) and min(al) >= 1 - 1e-12


def test_lambda0_examples():
    assert lambda0(3, 1.0) == pytest.approx(4 / 3, abs=1e-12)
    assert lambda0(2, 1.0) == pytest.approx((math.sqrt(2) + math.log(1 + math.sqrt(2))) / 2, abs=1e-12)
    assert lambda0(2, 1e-8) < 1e-7
    assert alpha_prime(2, 1e-8) > 1e3
    with pytest.raises(DomainError):
        lambda0(2, 0.0)


def test_comparison_constants_rows():
    c = comparison_constants(2, 1.0, math.pi / 2)
    assert c.alpha == pytest.approx(2**0.25)
    assert c.as_row()["lambda"] == pytest.approx(math.sqrt(2))
    flat = comparison_constants(2, 0.0, 1.0)
    assert flat.alpha == pytest.approx(alpha_prime(2, 1.0))
    # kappa = 4, d = pi/4: same as unit curvature at d = pi/2
    assert comparison_constants(2, 4.0, math.pi / 4).alpha == pytest.approx(2**0.25, rel=1e-12)
    with pytest.raises(ValueError):
        comparison_constants(2, -1.0, 1.0)
