"""Closed-form gap bounds.

Every bound depends on ``lam`` only through ``r = |lam|**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .groundstates import beta, beta_limit
from .hamiltonian import ModelParams

F_TOL = 1e-12
THIRD = 1.0 / 3.0


@dataclass(frozen=True)
class BoundResult:
    value: float | None
    reason: str | None = None

    @property
    def applicable(self) -> bool:
        return self.value is not None


def _bracket(r: float, bk, bk1, bk2, bk3) -> float:
    return r * bk * bk2 * ((1 - bk1 * (1 + r)) ** 2 / (1 + 2 * r)
                           + bk3 * r * (1 - bk1) ** 2 / (1 + r))


def f_k(r: float, k: int) -> float:
    if k < 4:
        raise ValueError("f_k is defined for k >= 4")
    if r < 0:
        raise ValueError("r must be nonnegative")
    return _bracket(r, beta(k, r), beta(k - 1, r), beta(k - 2, r), beta(k - 3, r))


def f_limit(r: float) -> float:
    """``lim_k f_k(r)``: every beta replaced by its limit."""
    b = beta_limit(r)
    return _bracket(r, b, b, b, b)


def _convergence_index(r: float, tol: float) -> int:
    """Smallest ``K >= 4`` with ``|beta_K - lim| < tol * lim``."""
    lim = beta_limit(r)
    K = 4
    while abs(beta(K, r) - lim) >= tol * lim:
        K += 1
    return K


def f_sup_argmax(r: float, tol: float = F_TOL) -> tuple[float, int | None]:
    """``sup_k f_k(r)`` and the maximizing ``k`` (``None`` when the limit wins).

    Scans ``k = 4 .. 10 K`` with ``K`` the beta convergence index at ``tol``
    and compares with the ``k -> inf`` value.
    """
    if r == 0:
        return 0.0, 4
    K = _convergence_index(r, tol)
    best, arg = -math.inf, None
    for k in range(4, 10 * K + 1):
        v = f_k(r, k)
        if v > best:
            best, arg = v, k
    lim = f_limit(r)
    if lim > best:
        return lim, None
    return best, arg


def f_sup(r: float, tol: float = F_TOL) -> float:
    return f_sup_argmax(r, tol)[0]


def gamma_per(params: ModelParams) -> float:
    k, r = params.kappa, params.r
    if math.isinf(k):
        return THIRD * min(1.0, 1.0 / (2 * r) if r else math.inf, 1.0)
    return THIRD * min(1.0, k / (2 + 2 * k * r), k / (1 + k))


def martingale_bound(params: ModelParams, f: float | None = None) -> BoundResult:
    """Open-chain tiling-space gap bound ``(kappa/3)(1 - sqrt(3 f))**2``."""
    if params.lam == 0:
        return BoundResult(None, "lam = 0")
    f = f_sup(params.r) if f is None else f
    if f >= THIRD:
        return BoundResult(None, f"f = {f:.6g} >= 1/3")
    return BoundResult(params.kappa / 3 * (1 - math.sqrt(3 * f)) ** 2)


def fsc_bound(n: int, params: ModelParams, e1_values: dict) -> float:
    """Ring tiling-space gap bound from open-chain gaps on ``3n+3 .. 3n+5`` sites.

    ``e1_values`` maps ``k`` in {3, 4, 5} to the gap on ``[1, 3n+k]``.  The
    result may be negative.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    r = params.r
    g = min(e1_values[k] for k in (3, 4, 5))
    return n / (2 * (1 + 2 * r) * (n - 1)) * (g - params.kappa * (1 + 2 * r) / n)


def fsc_n(L: int) -> int:
    """Largest ``n`` with ``L >= 3n + 9``."""
    return (L - 9) // 3


def _bulk_term(params: ModelParams, f: float) -> float:
    return params.kappa / (6 * (1 + 2 * params.r)) * (1 - math.sqrt(3 * f)) ** 2


def main_bound(L: int, params: ModelParams, f: float | None = None) -> BoundResult:
    """Finite-ring gap bound ``min{gamma_per, bulk - kappa/(2n)}``, ``L >= 18``."""
    if L < 18:
        return BoundResult(None, "L < 18")
    f = f_sup(params.r) if f is None else f
    if f >= THIRD:
        return BoundResult(None, f"f = {f:.6g} >= 1/3")
    n = fsc_n(L)
    return BoundResult(min(gamma_per(params), _bulk_term(params, f) - params.kappa / (2 * n)))


def main_bound_liminf(params: ModelParams, f: float | None = None) -> BoundResult:
    """``L -> inf`` bound; at ``lam = 0`` this is the ``lam -> 0`` limit since ``f(0) = 0``."""
    f = f_sup(params.r) if f is None else f
    if f >= THIRD:
        return BoundResult(None, f"f = {f:.6g} >= 1/3")
    return BoundResult(min(gamma_per(params), _bulk_term(params, f)))


@dataclass
class BoundReport:
    params: ModelParams
    L: int
    f_value: float
    gamma_per: float
    martingale: BoundResult
    fsc: BoundResult
    main: BoundResult
    main_liminf: BoundResult

    CSV_COLUMNS = ("kappa", "lambda_re", "lambda_im", "f", "gamma_per", "mm_bound",
                   "fsc_bound", "main_bound", "main_bound_liminf", "applicable_flag")

    def row(self) -> list[str]:
        def fmt(x):
            return "" if x is None else f"{x:.17g}"

        p = self.params
        return [fmt(p.kappa), fmt(p.lam.real), fmt(p.lam.imag), fmt(self.f_value),
                fmt(self.gamma_per), fmt(self.martingale.value), fmt(self.fsc.value),
                fmt(self.main.value), fmt(self.main_liminf.value),
                "1" if self.main.applicable else "0"]


def bound_report(L: int, params: ModelParams) -> BoundReport:
    """All closed-form bounds at one ``(L, kappa, lam)``, clamped at zero.

    The ring bound plugs the martingale bound in for every open-chain gap,
    with ``n`` the largest integer such that ``L >= 3n + 9``.
    """
    f = f_sup(params.r)
    mm = martingale_bound(params, f)
    n = fsc_n(L)
    if mm.applicable and n >= 2:
        fsc = BoundResult(fsc_bound(n, params, {k: mm.value for k in (3, 4, 5)}))
    else:
        fsc = BoundResult(None, mm.reason or "L < 15")
    return BoundReport(params, L, f, gamma_per(params), mm, _clamp(fsc),
                       _clamp(main_bound(L, params, f)), main_bound_liminf(params, f))


def _clamp(b: BoundResult) -> BoundResult:
    # a negative lower bound on a nonnegative gap carries no information
    return b if b.value is None else BoundResult(max(0.0, b.value), b.reason)


@dataclass(frozen=True)
class SmallVolumeConstants:
    """Gaps and norms of short open chains on their tiling spaces."""

    gaps: dict
    norms: dict
    claimed_gap: float
    claimed_norm: float

    @property
    def gap_678(self) -> float:
        return min(self.gaps[k] for k in (6, 7, 8))

    @property
    def gap_789(self) -> float:
        return min(self.gaps[k] for k in (7, 8, 9))

    @property
    def norm_678(self) -> float:
        return max(self.norms[k] for k in (6, 7, 8))

    def deviation(self, value: float, claimed: float) -> float:
        if claimed == 0:
            return abs(value)
        return abs(value - claimed) / abs(claimed)

    @property
    def deviations(self) -> dict:
        return {"gap_678": self.deviation(self.gap_678, self.claimed_gap),
                "gap_789": self.deviation(self.gap_789, self.claimed_gap),
                "norm_678": self.deviation(self.norm_678, self.claimed_norm)}


def small_volume_constants(params: ModelParams) -> SmallVolumeConstants:
    from .configspace import OPEN, Lattice
    from .spectra import tiling_space_spectrum

    gaps, norms = {}, {}
    for k in (6, 7, 8, 9):
        s = tiling_space_spectrum(Lattice(k, OPEN), params)
        gaps[k] = s.gap if s.gap is not None else math.inf
        norms[k] = s.meta["norm"]
    return SmallVolumeConstants(gaps, norms, params.kappa, params.kappa * (1 + 2 * params.r))
