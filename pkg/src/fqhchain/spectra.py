"""Spectra, gaps and numerical checks of the gap bounds.

Blocks are labelled by particle number and centre of mass.  On a ring a
translation maps the block ``(N, c)`` to ``(N, c + N)`` and the reflection
``x -> L + 1 - x`` maps ``(N, c)`` to ``(N, N (L + 1) - c)`` on both
geometries, so only one block per orbit is diagonalized.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import bounds
from .configspace import (
    OPEN, Lattice, center_of_mass, center_of_mass_array, electrostatic_energy_array, enumerate_sector,
    pack, popcount,
)
from .groundstates import (
    StateVector, ground_states, local_ground_projector, numeric_local_ground_projector,
    orthonormalize, tiling_basis,
)
from .hamiltonian import (
    ModelParams, SparseOperator, assemble, interval_terms, martingale_interval, operator_on,
    sector_blocks,
)
from .tilings import MIN_RING, enumerate_tilings

DENSE_MAX = 1500
MAX_GAP_SITES = 22
KERNEL_REL_TOL = 1e-10
RESIDUAL_TOL = 1e-8

CSV_COLUMNS = ("L", "boundary", "N_sector", "kappa", "lambda", "kernel_dim", "gap", "method")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, complex):
        return f"({x.real:.17g}{x.imag:+.17g}j)"
    return f"{x:.17g}"


@dataclass
class SpectrumResult:
    lattice: Lattice
    sector: int | None
    eigenvalues: np.ndarray
    kernel_dim: int
    gap: float | None
    method: str
    params: ModelParams | None = None
    meta: dict = field(default_factory=dict)

    @property
    def boundary(self) -> str:
        return self.lattice.boundary

    @property
    def gapless(self) -> bool:
        """No eigenvalue above the kernel was found at this size."""
        return self.gap is None

    def row(self) -> list[str]:
        p = self.params
        return [str(self.lattice.L), self.boundary,
                "all" if self.sector is None else str(self.sector),
                _fmt(p.kappa) if p else "", _fmt(p.lam) if p else "",
                str(self.kernel_dim), _fmt(self.gap), self.method]


# --- eigensolvers ----------------------------------------------------------


def block_seed(*key) -> int:
    return zlib.crc32(repr(key).encode())


def norm_estimate(matrix, steps: int = 50, seed: int = 0) -> float:
    """Power-iteration estimate of the largest eigenvalue of a PSD matrix."""
    n = matrix.shape[0]
    if n == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(steps):
        w = matrix @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        est = float(np.vdot(v, w).real)
        v = w / nw
    # the Rayleigh quotient undershoots; the last growth factor does not by much
    return max(est, float(nw))


def kernel_tolerance(norm: float) -> float:
    return KERNEL_REL_TOL * max(1.0, norm)


def _residual(matrix, v, theta) -> float:
    return float(np.linalg.norm(matrix @ v - theta * v))


def lowest_eigenvalues(matrix, m: int = 4, known_kernel: np.ndarray | None = None,
                       dense_max: int = DENSE_MAX, seed: int = 0,
                       ktol: float | None = None) -> tuple[np.ndarray, int, str]:
    """Lowest ``m`` eigenvalues (with multiplicity), kernel dimension and method tag.

    ``known_kernel`` holds orthonormal rows spanning part of the kernel; the
    iterative path shifts them up out of the way instead of finding them.
    Iterative results are checked against the residual bound.
    """
    n = matrix.shape[0]
    if n == 0:
        return np.zeros(0), 0, "dense"
    if ktol is None:
        ktol = kernel_tolerance(norm_estimate(matrix, seed=seed))
    if n <= dense_max:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        w = np.linalg.eigvalsh(dense)
        return w[:m], int(np.sum(w < ktol)), "dense"

    Q = np.zeros((0, n), dtype=complex) if known_kernel is None else known_kernel
    sigma = 2.0 * norm_estimate(matrix, seed=seed) + 1.0
    cut = 0.75 * sigma  # anything above is a shifted copy of the locked kernel
    A = sp.csr_matrix(matrix)

    def mv(x):
        x = np.ravel(x)
        y = A @ x
        if len(Q):
            y = y + sigma * (Q.T @ (Q.conj() @ x))
        return y

    op = spla.LinearOperator((n, n), matvec=mv, dtype=complex)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    k = min(m + 2, n - 1)
    while True:
        w, V = spla.eigsh(op, k=k, which="SA", v0=v0, tol=1e-12, maxiter=20 * n)
        order = np.argsort(w)
        w, V = w[order], V[:, order]
        for j in np.nonzero(w < cut)[0]:
            res = _residual(A, V[:, j], w[j])
            if res > RESIDUAL_TOL * (1 + abs(w[j])):
                raise RuntimeError(f"eigenpair residual {res:.3g} above tolerance")
        extra = int(np.sum(w < ktol))
        if extra < len(w) or k >= n - 1:
            break
        k = min(2 * k, n - 1)
    kernel = len(Q) + extra
    vals = np.concatenate([np.zeros(len(Q)), w[w < cut]])
    vals.sort()
    return vals[:m], kernel, "iterative"


# --- block bookkeeping -------------------------------------------------------


def block_orbits(lattice: Lattice, n: int, coms) -> list[tuple[int, int]]:
    """Representatives of the symmetry orbits of centre-of-mass labels, with orbit sizes."""
    coms = sorted(coms)
    L = lattice.L
    seen, out = set(), []
    for c in coms:
        if c in seen:
            continue
        orbit = {c}
        frontier = [c]
        while frontier:
            x = frontier.pop()
            images = [n * (L + 1) - x]
            if lattice.periodic:
                images = [y % L for y in images] + [(x + n) % L]
            for y in images:
                if y not in orbit:
                    orbit.add(y)
                    frontier.append(y)
        seen |= orbit
        out.append((c, len(orbit)))
    return out


def _dense_kernel_rows(states: list[StateVector], basis: np.ndarray) -> np.ndarray:
    if not states:
        return np.zeros((0, len(basis)), dtype=complex)
    Q = orthonormalize([s.to_dense(basis) for s in states])
    return Q if Q.size else np.zeros((0, len(basis)), dtype=complex)


def full_gap(lattice: Lattice, params: ModelParams, m: int = 4,
             dense_max: int = DENSE_MAX, use_symmetry: bool = True) -> SpectrumResult:
    """Spectral gap of the Hamiltonian of ``lattice`` over all particle sectors.

    A block whose smallest electrostatic diagonal entry is positive has no
    kernel and cannot beat that entry, so it is skipped once the running gap
    is at most that value.
    """
    L = lattice.L
    if L > MAX_GAP_SITES:
        raise ValueError(f"full_gap is limited to L <= {MAX_GAP_SITES}")
    e, q = interval_terms(lattice)
    kernel_total, gap, where = 0, math.inf, None
    ktol_max, methods, skipped = 0.0, set(), 0
    per_sector = {}
    use_tilings = lattice.L >= (MIN_RING if lattice.periodic else 8)
    states_by_block = {}
    if use_tilings:
        for s in ground_states(lattice, params):
            b = next(iter(s.amps))
            states_by_block.setdefault((b.bit_count(), center_of_mass(b, lattice)), []).append(s)
    for n in range(L + 1):
        blocks = sector_blocks(lattice, n)
        reps = block_orbits(lattice, n, blocks) if use_symmetry else [(c, 1) for c in blocks]
        kern_n = 0
        for c, mult in reps:
            basis = blocks[c]
            emin = float(electrostatic_energy_array(basis, lattice).min())
            if emin > 0 and emin >= gap:
                skipped += mult
                continue
            H = assemble(lattice, basis, params, e, q)
            seed = block_seed(L, lattice.boundary, n, c)
            ktol = kernel_tolerance(norm_estimate(H, seed=seed))
            ktol_max = max(ktol_max, ktol)
            Q = None
            if use_tilings and len(basis) > dense_max:
                Q = _dense_kernel_rows(states_by_block.get((n, c), []), basis)
            w, kd, method = lowest_eigenvalues(H, m, Q, dense_max, seed, ktol)
            methods.add(method)
            kern_n += kd * mult
            above = w[w >= ktol]
            if len(above) and above[0] < gap:
                gap, where = float(above[0]), (n, c)
        per_sector[n] = kern_n
        kernel_total += kern_n
    method = "dense" if methods <= {"dense"} else "iterative"
    return SpectrumResult(
        lattice, None, np.array([0.0] * min(kernel_total, m) + ([gap] if math.isfinite(gap) else [])),
        kernel_total, gap if math.isfinite(gap) else None, method, params,
        {"argmin_block": where, "kernel_by_sector": per_sector, "kernel_tol": ktol_max,
         "skipped_blocks": skipped})


def sector_kernel_dims(lattice: Lattice, params: ModelParams, use_symmetry: bool = True) -> dict[int, int]:
    """Dense kernel dimension of every particle sector."""
    e, q = interval_terms(lattice)
    out = {}
    for n in range(lattice.L + 1):
        blocks = sector_blocks(lattice, n)
        reps = block_orbits(lattice, n, blocks) if use_symmetry else [(c, 1) for c in blocks]
        total = 0
        for c, mult in reps:
            H = assemble(lattice, blocks[c], params, e, q).toarray()
            w = np.linalg.eigvalsh(H)
            total += mult * int(np.sum(w < kernel_tolerance(max(w[-1], 0.0))))
        out[n] = total
    return out


def sector_spectrum(lattice: Lattice, params: ModelParams, n: int) -> np.ndarray:
    """All eigenvalues of one particle sector, assembled from its blocks."""
    e, q = interval_terms(lattice)
    ws = [np.linalg.eigvalsh(assemble(lattice, b, params, e, q).toarray())
          for b in sector_blocks(lattice, n).values()]
    return np.sort(np.concatenate(ws))


# --- restricted spectra -------------------------------------------------------


def restricted_spectrum(op: SparseOperator, subspace_basis, m: int | None = None,
                        params: ModelParams | None = None) -> SpectrumResult:
    """Spectrum of ``op`` compressed to the span of ``subspace_basis``.

    ``subspace_basis`` is a list of ``StateVector`` or of dense vectors over
    ``op.basis``.  Dependent vectors are dropped and the rank is recorded.
    """
    vecs = [v.to_dense(op.basis) if isinstance(v, StateVector) else np.asarray(v, dtype=complex)
            for v in subspace_basis]
    Q = orthonormalize(vecs)
    rank = len(Q) if Q.size else 0
    if rank == 0:
        return SpectrumResult(op.lattice, op.n_particles, np.zeros(0), 0, None, "dense", params,
                              {"rank": 0, "requested": len(vecs)})
    M = Q.conj() @ (op.matrix @ Q.T)
    w = np.linalg.eigvalsh((M + M.conj().T) / 2)
    return _summarize(op.lattice, op.n_particles, w, m, params,
                      {"rank": rank, "requested": len(vecs)})


def _summarize(lattice, sector, w, m, params, meta) -> SpectrumResult:
    ktol = kernel_tolerance(float(w[-1]) if len(w) else 0.0)
    above = w[w >= ktol]
    meta = dict(meta, kernel_tol=ktol, norm=float(w[-1]) if len(w) else 0.0)
    return SpectrumResult(lattice, sector, w if m is None else w[:m], int(np.sum(w < ktol)),
                          float(above[0]) if len(above) else None, "dense", params, meta)


def coordinate_spectrum(lattice: Lattice, params: ModelParams, configs, interval=None,
                        by_block: bool = True) -> SpectrumResult:
    """Spectrum of the Hamiltonian (of ``interval``) compressed to a coordinate subspace."""
    configs = np.array(sorted(int(c) for c in configs), dtype=np.uint64)
    if by_block:
        keys = popcount(configs) * (64 * 64 * 64) + center_of_mass_array(configs, lattice)
        groups = [configs[keys == k] for k in np.unique(keys)]
    else:
        groups = [configs]
    ws = []
    for g in groups:
        op = operator_on(lattice, params, g, interval=interval, compress=True)
        ws.append(np.linalg.eigvalsh(op.dense()))
    w = np.sort(np.concatenate(ws)) if ws else np.zeros(0)
    return _summarize(lattice, None, w, None, params, {"dim": len(configs)})


def tiling_space_spectrum(lattice: Lattice, params: ModelParams) -> SpectrumResult:
    """Hamiltonian of ``lattice`` on its tiling space: ``E_1`` is ``.gap``, the norm in ``meta``."""
    return coordinate_spectrum(lattice, params, tiling_basis(lattice))


def complement_ground_energy(lattice: Lattice, params: ModelParams) -> float:
    """Lowest energy on the coordinate complement of the tiling space of a ring."""
    tiled = set(t.bits for t in enumerate_tilings(lattice))
    e, q = interval_terms(lattice)
    best = math.inf
    for n in range(lattice.L + 1):
        for c, basis in sector_blocks(lattice, n).items():
            rest = np.array([b for b in basis.tolist() if b not in tiled], dtype=np.uint64)
            if len(rest) == 0:
                continue
            if float(electrostatic_energy_array(rest, lattice).min()) >= best:
                continue
            H = assemble(lattice, rest, params, e, q, compress=True)
            best = min(best, float(np.linalg.eigvalsh(H.toarray())[0]))
    return best


def open_chain_e1(k: int, params: ModelParams) -> float | None:
    """``E_1`` of the open chain ``[1, k]`` on its tiling space."""
    return tiling_space_spectrum(Lattice(k, OPEN), params).gap


# --- bound checks ------------------------------------------------------------


@dataclass(frozen=True)
class BoundComparison:
    value: float
    bound: float
    margin: float
    tol: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol


def martingale_norm(L: int, params: ModelParams, numeric: bool = False) -> float:
    """``|| G_2 (1 - G) G_1 ||**2`` on the tiling space of ``[1, L]``.

    ``G_1``, ``G_2`` and ``G`` project onto the ground states of ``[1, L-3]``,
    ``[L-8, L]`` and the whole chain.
    """
    if L < 10:
        raise ValueError("needs L >= 10")
    lat = Lattice(L, OPEN)
    basis = tiling_basis(lat)
    proj = numeric_local_ground_projector if numeric else local_ground_projector
    G1 = proj(lat, basis, params, (1, L - 3))
    G2 = proj(lat, basis, params, (L - 8, L))
    G = proj(lat, basis, params, (1, L))
    M = G2 @ (np.eye(len(basis)) - G) @ G1
    return float(np.linalg.norm(M, 2) ** 2)


def martingale_norm_check(L: int, params: ModelParams, tol: float = 1e-10) -> BoundComparison:
    if params.lam == 0:
        raise ValueError("needs lam != 0")
    v = martingale_norm(L, params)
    f = bounds.f_sup(params.r)
    return BoundComparison(v, f, f - v, tol)


EDGE_STATES = ("110010", "101100")


def edge_mode_check(L: int, params: ModelParams) -> tuple[float, float]:
    """Smaller eigenvalue on the two-state invariant edge subspace, and ``kappa r / (1 + kappa)``."""
    if L < 6:
        raise ValueError("needs L >= 6")
    lat = Lattice(L, OPEN)
    configs = [pack(s + "0" * (L - 6)) for s in EDGE_STATES]
    op = operator_on(lat, params, configs)  # raises if the span is not invariant
    w = np.linalg.eigvalsh(op.dense())
    return float(w[0]), params.kappa * params.r / (1 + params.kappa)


def knabe_check(L: int, n: int, params: ModelParams, tol: float = 1e-9) -> BoundComparison:
    """Ring ``E_1`` against the finite-size bound built from open-chain ``E_1`` values."""
    if L < 3 * n + 9:
        raise ValueError("needs L >= 3n + 9")
    ring = tiling_space_spectrum(Lattice(L, "periodic"), params)
    e1 = {k: open_chain_e1(3 * n + k, params) for k in (3, 4, 5)}
    bnd = bounds.fsc_bound(n, params, e1)
    return BoundComparison(ring.gap, bnd, ring.gap - bnd, tol, {"e1_values": e1})


def martingale_hamiltonian(lattice: Lattice, params: ModelParams, n: int, basis) -> SparseOperator:
    """Sum of the local Hamiltonians on the first ``n - 1`` martingale intervals."""
    total = None
    for j in range(2, n + 1):
        op = operator_on(lattice, params, basis, interval=martingale_interval(j, lattice.L))
        total = op if total is None else SparseOperator(lattice, op.basis, total.matrix + op.matrix)
    return total


def equivalent_hamiltonians_check(L: int, n: int, params: ModelParams, n_particles: int) -> tuple[float, float]:
    """Smallest eigenvalues of ``H_n - H_[1,3n+k]`` and ``3 H_[1,3n+k] - H_n``."""
    lat = Lattice(L, OPEN)
    basis = enumerate_sector(lat, n_particles)
    k = (L - 1) % 3 + 1
    Hn = martingale_hamiltonian(lat, params, n, basis).dense()
    Hi = operator_on(lat, params, basis, interval=(1, 3 * n + k)).dense()
    return (float(np.linalg.eigvalsh(Hn - Hi)[0]), float(np.linalg.eigvalsh(3 * Hi - Hn)[0]))
