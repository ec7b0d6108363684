"""Numerical checks of the model's exact statements and gap bounds.

Each check returns a ``CheckResult`` whose margin is negative exactly when a
case fails; the worst case is kept.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .configspace import OPEN, PERIODIC, Lattice
from .groundstates import beta, check_fragmentation, check_recursions, phi_norm2, vmd_state
from .hamiltonian import ModelParams, build_hamiltonian
from .spectra import (
    complement_ground_energy, edge_mode_check, knabe_check, martingale_norm_check,
    sector_kernel_dims,
)
from .tilings import enumerate_roots, is_mm_root, mm_split

PASS, FAIL, INAPPLICABLE = "pass", "fail", "inapplicable"


@dataclass
class CheckResult:
    name: str
    status: str = INAPPLICABLE
    worst_margin: float | None = None
    failing: list = field(default_factory=list)
    cases: int = 0

    def record(self, margin: float, case) -> None:
        self.cases += 1
        if self.worst_margin is None or margin < self.worst_margin:
            self.worst_margin = float(margin)
        if margin < 0:
            self.failing.append(case)
        self.status = FAIL if self.failing else PASS

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "worst_margin": self.worst_margin,
                "cases": self.cases, "failing": [list(map(str, c)) for c in self.failing]}


def root_counts(lattice: Lattice) -> dict[int, int]:
    c = Counter(r.bits.bit_count() for r in enumerate_roots(lattice))
    return {n: c.get(n, 0) for n in range(lattice.L + 1)}


def check_kernel_dimension(Ls, boundary: str, grid) -> CheckResult:
    lo = 6 if boundary == PERIODIC else 8
    out = CheckResult(f"kernel_dimension_{boundary}")
    for L in Ls:
        if not lo <= L <= 14:
            continue
        lat = Lattice(L, boundary)
        expect = root_counts(lat)
        for p in grid:
            got = sector_kernel_dims(lat, p)
            bad = [n for n in expect if got[n] != expect[n]]
            out.record(-float(sum(abs(got[n] - expect[n]) for n in bad)) if bad else 0.0,
                       (L, p.kappa, p.lam, bad))
    return out


def check_zero_energy(Ls, boundary: str, grid, tol: float = 1e-12) -> CheckResult:
    out = CheckResult(f"zero_energy_{boundary}")
    for L in Ls:
        if L > 13 or (boundary == PERIODIC and L < 6):
            continue
        lat = Lattice(L, boundary)
        roots = enumerate_roots(lat)
        for p in grid:
            ops = {}
            worst = 0.0
            for r in roots:
                n = r.bits.bit_count()
                if n not in ops:
                    ops[n] = build_hamiltonian(lat, p, n)
                op = ops[n]
                psi = vmd_state(r, p).to_dense(op.basis)
                worst = max(worst, np.linalg.norm(op.matrix @ psi) / np.linalg.norm(psi))
            out.record(tol - worst, (L, p.kappa, p.lam))
    return out


def check_electrostatic(Ls, grid, tol: float = 1e-9) -> CheckResult:
    out = CheckResult("electrostatic_bound")
    for L in Ls:
        if not 11 <= L <= 14:
            continue
        for p in grid:
            e0 = complement_ground_energy(Lattice(L, PERIODIC), p)
            out.record(e0 - bounds.gamma_per(p) + tol, (L, p.kappa, p.lam))
    return out


def check_martingale(Ls, grid, tol: float = 1e-10) -> CheckResult:
    out = CheckResult("martingale_norm")
    done = set()
    for L in Ls:
        if not 10 <= L <= 13:
            continue
        for p in grid:
            key = (L, p.r)
            if p.lam == 0 or bounds.f_sup(p.r) >= bounds.THIRD or key in done:
                continue
            done.add(key)
            c = martingale_norm_check(L, p, tol)
            out.record(c.margin + tol, (L, p.lam))
    return out


def check_knabe(Ls, grid, tol: float = 1e-9) -> CheckResult:
    out = CheckResult("knabe_consistency")
    for L in Ls:
        n = bounds.fsc_n(L)
        if n < 2 or L > 18:
            continue
        for p in grid:
            c = knabe_check(L, n, p, tol)
            out.record(c.margin + tol, (L, n, p.kappa, p.lam))
    return out


def check_beta(lambdas, n_max: int = 30, tol: float = 1e-12) -> CheckResult:
    out = CheckResult("beta_closed_form")
    for r in sorted({abs(complex(l)) ** 2 for l in lambdas}):
        for n in range(1, n_max + 1):
            direct = phi_norm2(n - 1, r) / phi_norm2(n, r)
            out.record(tol - abs(beta(n, r) - direct) / direct, (n, r))
    return out


def check_recursions_and_fragments(Ls, n_max: int = 8) -> CheckResult:
    out = CheckResult("recursions_fragmentation")
    for n in range(2, n_max + 1):
        for i in (1, 2, 3):
            out.record(0.0 if check_recursions(n, i) else -1.0, ("recursion", n, i))
    for L in Ls:
        if L > 14:
            continue
        for r in enumerate_roots(Lattice(L, OPEN)):
            if is_mm_root(r) and mm_split(r)[1] > n_max:
                continue
            out.record(0.0 if check_fragmentation(r) else -1.0, ("fragment", str(r)))
    return out


EDGE_LAMBDAS = (0.05, 0.1, 0.2)


def edge_constants(kappa: float, L: int = 8, lambdas=EDGE_LAMBDAS) -> list[float]:
    """``|E - kappa r/(1+kappa)| / |lam|**4`` for each ``lam``."""
    out = []
    for lam in lambdas:
        e, pred = edge_mode_check(L, ModelParams(kappa, lam))
        out.append(abs(e - pred) / abs(lam) ** 4)
    return out


def check_edge(kappas, L: int = 8, factor: float = 1.5) -> CheckResult:
    """The fitted quartic constant changes by at most ``factor`` between successive ``lam``."""
    out = CheckResult("edge_mode")
    for k in kappas:
        if k <= 0:
            continue
        C = edge_constants(k, L)
        worst = min(math.log(factor) - abs(math.log(C[j + 1] / C[j])) for j in range(len(C) - 1))
        out.record(worst, (k, C))
    return out


def check_f_threshold(lambdas, tol: float = 1e-10) -> CheckResult:
    out = CheckResult("f_threshold")
    for lam in lambdas:
        a = abs(complex(lam))
        if a > 5.2 + 1e-12:
            continue
        out.record(bounds.THIRD - tol - bounds.f_sup(a * a), (lam,))
    return out


def check_small_volume(grid, tol: float = 1e-9) -> CheckResult:
    out = CheckResult("small_volume_constants")
    for p in grid:
        if p.kappa == 0:
            continue
        c = bounds.small_volume_constants(p)
        dev = c.deviations
        out.record(tol - max(dev.values()), (p.kappa, p.lam, dev))
    return out


def parameter_grid(kappas, lambdas) -> list[ModelParams]:
    return [ModelParams(k, complex(l)) for k in kappas for l in lambdas]


def run_all(Ls, kappas, lambdas) -> list[CheckResult]:
    grid = parameter_grid(kappas, lambdas)
    return [
        check_kernel_dimension(Ls, PERIODIC, grid),
        check_kernel_dimension(Ls, OPEN, grid),
        check_zero_energy(Ls, PERIODIC, grid),
        check_zero_energy(Ls, OPEN, grid),
        check_electrostatic(Ls, grid),
        check_martingale(Ls, grid),
        check_knabe(Ls, grid),
        check_beta(lambdas),
        check_recursions_and_fragments(Ls),
        check_edge(kappas),
        check_f_threshold(lambdas),
        check_small_volume(grid),
    ]
