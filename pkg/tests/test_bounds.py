import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqhchain.bounds import (
    THIRD, BoundReport, bound_report, f_k, f_limit, f_sup, f_sup_argmax, fsc_bound, fsc_n,
    gamma_per, main_bound, main_bound_liminf, martingale_bound, small_volume_constants,
)
from fqhchain.configspace import OPEN, Lattice
from fqhchain.groundstates import eta_full, local_ground_projector, tiling_basis
from fqhchain.hamiltonian import ModelParams
from fqhchain.tilings import enumerate_roots, is_mm_root, mm_split

# |lam| at which sup_k f_k first reaches 1/3 (bisection on f_sup, frozen)
F_CROSSING = 5.5632003


def exact_f(k, r):
    """f_k from norm ratios in rational arithmetic."""
    r = Fraction(r)

    def norm2(n):
        return sum(comb(n - d, d) * r ** d for d in range(n // 2 + 1))

    def b(n):
        return norm2(n - 1) / norm2(n)

    bk, b1, b2, b3 = b(k), b(k - 1), b(k - 2), b(k - 3)
    return r * bk * b2 * ((1 - b1 * (1 + r)) ** 2 / (1 + 2 * r) + b3 * r * (1 - b1) ** 2 / (1 + r))


def test_f4_quarter():
    assert exact_f(4, Fraction(1, 4)) == Fraction(1, 900)
    assert f_k(0.25, 4) == pytest.approx(1 / 900, rel=1e-14)


@pytest.mark.parametrize("r", [Fraction(1, 4), Fraction(1), Fraction(4), Fraction(25), Fraction(27)])
def test_f_k_matches_rational_oracle(r):
    for k in range(4, 25):
        assert f_k(float(r), k) == pytest.approx(float(exact_f(k, r)), rel=1e-12, abs=1e-300)


def test_f_k_domain():
    assert all(f_k(0, k) == 0 for k in range(4, 20))
    with pytest.raises(ValueError):
        f_k(1.0, 3)
    with pytest.raises(ValueError):
        f_k(-1.0, 5)


def test_f_sup_basics():
    assert f_sup(0) == 0
    grid = np.arange(0, 30.0001, 0.05)
    vals = [f_sup(r) for r in grid]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(v < THIRD for v, r in zip(vals, grid) if r <= 27.0)


@pytest.mark.parametrize("r", [0.01, 0.25, 1.0, 9.0, 28.09, 40.0])
def test_f_sup_scan_is_complete(r):
    val, k = f_sup_argmax(r)
    later = max(f_k(r, j) for j in range(4, 3000))
    assert val >= later - 1e-15
    assert val >= f_limit(r) - 1e-15
    if k is not None:
        assert f_k(r, k) == val


def test_f_threshold_location():
    assert f_sup(5.2 ** 2) < THIRD
    assert f_sup(5.4 ** 2) < THIRD
    assert f_sup((F_CROSSING - 1e-6) ** 2) < THIRD < f_sup((F_CROSSING + 1e-6) ** 2)


def test_gamma_per_examples():
    assert gamma_per(ModelParams(1.0, 0)) == pytest.approx(1 / 6)
    assert gamma_per(ModelParams(math.inf, 0)) == pytest.approx(1 / 3)
    assert gamma_per(ModelParams(2.0, 1.0)) == pytest.approx(1 / 9)


@given(st.floats(1e-6, 1e6), st.complex_numbers(max_magnitude=100))
def test_gamma_per_positive(kappa, lam):
    assert gamma_per(ModelParams(kappa, lam)) > 0


def test_martingale_bound():
    p = ModelParams(1.0, 0.5)
    assert martingale_bound(p).value == pytest.approx((1 - math.sqrt(3 * f_sup(0.25))) ** 2 / 3)
    assert martingale_bound(ModelParams(1.0, 1e-9)).value == pytest.approx(1 / 3)
    assert not martingale_bound(ModelParams(1.0, 0)).applicable
    assert not martingale_bound(ModelParams(1.0, 5.6)).applicable
    assert martingale_bound(ModelParams(1.0, 5.3)).applicable


def test_fsc_bound_examples():
    p = ModelParams(1.0, 0)
    assert fsc_bound(2, p, {3: 1, 4: 1, 5: 1}) == pytest.approx(0.5)
    q = ModelParams(1.3, 0.7)
    g = 0.9
    big = fsc_bound(10 ** 9, q, {3: g, 4: g + 1, 5: g + 2})
    assert big == pytest.approx(g / (2 * (1 + 2 * q.r)), rel=1e-8)
    with pytest.raises(ValueError):
        fsc_bound(1, q, {3: 1, 4: 1, 5: 1})


def test_fsc_n():
    assert [fsc_n(L) for L in (15, 17, 18, 20, 21)] == [2, 2, 3, 3, 4]


def test_main_bound():
    p = ModelParams(1.0, 0.3)
    assert not main_bound(17, p).applicable
    n = 5
    want = min(gamma_per(p), (1 - math.sqrt(3 * f_sup(p.r))) ** 2 / (6 * (1 + 2 * p.r)) - 1 / (2 * n))
    assert main_bound(24, p).value == pytest.approx(want)
    assert not main_bound(30, ModelParams(1.0, 6.0)).applicable
    z = ModelParams(1.0, 0)
    assert main_bound_liminf(z).value == pytest.approx(1 / 6)
    assert main_bound(30, z).value == pytest.approx(1 / 6 - 1 / (2 * 7))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 10), st.floats(0, 5.2), st.integers(18, 200))
def test_main_below_liminf(kappa, lam, L):
    p = ModelParams(kappa, lam)
    assert main_bound(L, p).value <= main_bound_liminf(p).value


def test_report_row():
    rep = bound_report(21, ModelParams(1.0, 0.3 + 0.1j))
    row = rep.row()
    assert len(row) == len(BoundReport.CSV_COLUMNS)
    assert row[1:3] == ["0.29999999999999999", "0.10000000000000001"]
    assert row[-1] == "1"
    assert all(float(v) >= 0 for v in row[3:-1] if v)
    bad = bound_report(21, ModelParams(1.0, 6.0))
    assert bad.row()[-1] == "0" and bad.row()[5] == ""


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("lam", [0, 0.1, 0.6, 1.0, 0.3 - 0.4j])
def test_small_volume_constants(kappa, lam):
    p = ModelParams(kappa, lam)
    c = small_volume_constants(p)
    assert c.gap_678 == pytest.approx(kappa, rel=1e-9)
    assert c.gap_789 == pytest.approx(kappa, rel=1e-9)
    assert c.norm_678 == pytest.approx(kappa * (1 + 2 * p.r), rel=1e-9)
    # the six-site chain is not the minimizer once lam != 0
    assert c.gaps[6] == pytest.approx(kappa * (1 + p.r), rel=1e-9)
    if lam == 0:
        assert c.gap_678 == kappa and c.norm_678 == kappa


@pytest.mark.parametrize("lam", [0.25, 1.0, 2.0])
def test_projected_eta_weight_equals_f(lam):
    """The local ground projector of the last nine sites keeps exactly f_n of an excitation."""
    p = ModelParams(1.0, lam)
    for L in (10, 11, 12, 13):
        lat = Lattice(L, OPEN)
        basis = tiling_basis(lat)
        G2 = local_ground_projector(lat, basis, p, (L - 8, L))
        for r in enumerate_roots(lat):
            if not is_mm_root(r):
                continue
            n = mm_split(r)[1]
            eta = eta_full(r, p).to_dense(basis)
            ratio = np.linalg.norm(G2 @ eta) ** 2 / np.linalg.norm(eta) ** 2
            want = f_k(p.r, n) if n >= 4 else 0.0
            assert ratio == pytest.approx(want, rel=1e-10, abs=1e-14)
