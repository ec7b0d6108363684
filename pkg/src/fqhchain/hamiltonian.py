"""Sparse occupation-basis Hamiltonians of the truncated nu=1/3 chain.

    H = sum_x n_x n_{x+2} + kappa * sum_x q_x^* q_x,
    q_x = s^-_{x+1} s^-_{x+2} - lam * s^-_x s^-_{x+3}.

Ring Hamiltonians sum every ``x`` modulo ``L``; an interval ``[a, b]`` keeps the
electrostatic terms with ``x <= b - 2`` and the dipole terms with ``x <= b - 3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .configspace import Configuration, Lattice, center_of_mass_array, enumerate_sector, lower


@dataclass(frozen=True)
class ModelParams:
    kappa: float
    lam: complex = 0.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def r(self) -> float:
        """``|lam|**2``."""
        return abs(self.lam) ** 2


@dataclass
class SparseOperator:
    """Hermitian operator on an ordered list of packed configurations."""

    lattice: Lattice
    basis: np.ndarray
    matrix: sp.csr_matrix
    n_particles: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, bits) -> np.ndarray:
        bits = np.atleast_1d(np.asarray(bits, dtype=np.uint64))
        idx = np.searchsorted(self.basis, bits)
        ok = (idx < len(self.basis)) & (self.basis[np.minimum(idx, len(self.basis) - 1)] == bits)
        if not ok.all():
            raise KeyError("configuration outside the basis")
        return idx

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def submatrix(self, idx) -> "SparseOperator":
        idx = np.asarray(idx)
        m = self.matrix[idx][:, idx].tocsr()
        return SparseOperator(self.lattice, self.basis[idx], m, self.n_particles, dict(self.meta))

    def to_text(self) -> str:
        """Coordinate listing: header ``L boundary N dim nnz``, then ``row col re im``."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        n = "all" if self.n_particles is None else str(self.n_particles)
        lines = [f"{self.lattice.L} {self.lattice.boundary} {n} {self.dim} {len(order)}"]
        for k in order:
            v = complex(coo.data[k])
            lines.append(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}")
        return "\n".join(lines) + "\n"


def read_operator_text(text: str) -> tuple[dict, sp.csr_matrix]:
    lines = text.strip().splitlines()
    L, boundary, n, dim, nnz = lines[0].split()
    rows, cols, vals = [], [], []
    for line in lines[1:]:
        i, j, re, im = line.split()
        rows.append(int(i))
        cols.append(int(j))
        vals.append(complex(float(re), float(im)))
    header = {"L": int(L), "boundary": boundary, "N": None if n == "all" else int(n),
              "dim": int(dim), "nnz": int(nnz)}
    m = sp.csr_matrix((vals, (rows, cols)), shape=(int(dim), int(dim)), dtype=complex)
    return header, m


# --- local terms ----------------------------------------------------------


def apply_qx(mu: Configuration, x: int, params: ModelParams) -> list[tuple[Configuration, complex]]:
    """``q_x |mu>`` as a list of (configuration, coefficient)."""
    lat = mu.lattice
    s = [lat.site(x + d) for d in range(4)]
    out = []
    nu = lower(lower(mu, s[1]), s[2])
    if nu is not None:
        out.append((nu, 1.0 + 0j))
    nu = lower(lower(mu, s[0]), s[3])
    if nu is not None:
        out.append((nu, -params.lam))
    return out


def interval_terms(lattice: Lattice, a: int | None = None, b: int | None = None) -> tuple[list, list]:
    """Electrostatic and dipole term positions of the Hamiltonian on ``[a, b]``.

    With no interval this is the full Hamiltonian of the lattice (all ``x`` on
    a ring).  On a ring ``b`` may exceed ``L``; positions are reduced mod ``L``.
    """
    L = lattice.L
    if a is None:
        if lattice.periodic:
            xs = list(range(1, L + 1))
            return xs, xs
        a, b = 1, L
    if not lattice.periodic and not 1 <= a <= b <= L:
        raise ValueError(f"[{a}, {b}] not inside [1, {L}]")
    e = [lattice.site(x) if lattice.periodic else x for x in range(a, b - 1)]
    q = [lattice.site(x) if lattice.periodic else x for x in range(a, b - 2)]
    return e, q


def _bit(x: int) -> np.uint64:
    return np.uint64(1) << np.uint64(x - 1)


def assemble(lattice: Lattice, basis: np.ndarray, params: ModelParams,
             e_sites, q_sites, compress: bool = False) -> sp.csr_matrix:
    """Matrix of ``sum_e n_x n_{x+2} + kappa sum_q q_x^* q_x`` on ``basis``.

    ``basis`` must be sorted.  Matrix elements leaving the basis raise unless
    ``compress`` is set, in which case they are dropped (compression onto the
    coordinate subspace spanned by ``basis``).
    """
    w = np.asarray(basis, dtype=np.uint64)
    dim = len(w)
    zero = np.uint64(0)
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    site = lattice.site if lattice.periodic else (lambda y: y)

    for x in e_sites:
        a, c = _bit(x), _bit(site(x + 2))
        diag += (((w & a) != zero) & ((w & c) != zero))

    kappa, lam = params.kappa, params.lam
    for x in q_sites:
        s0, s1, s2, s3 = (site(x + d) for d in range(4))
        A = _bit(s1) | _bit(s2) if s1 != s2 else None
        B = _bit(s0) | _bit(s3) if s0 != s3 else None
        has_a = ((w & A) == A) if A is not None else np.zeros(dim, bool)
        has_b = ((w & B) == B) if B is not None else np.zeros(dim, bool)
        diag += kappa * (has_a + params.r * has_b)
        if A is None or B is None:
            continue
        # <mu'| q^* q |mu> with mu -> nu through one pair, nu -> mu' through the other
        for src_has, src, dst, coef in ((has_a, A, B, -np.conj(lam)), (has_b, B, A, -lam)):
            nu = w[src_has] ^ src
            free = (nu & dst) == zero
            target = nu[free] | dst
            col = np.nonzero(src_has)[0][free]
            rows.append(target)
            cols.append(col)
            vals.append(np.full(len(col), kappa * coef))

    if rows:
        target = np.concatenate(rows)
        col = np.concatenate(cols)
        val = np.concatenate(vals)
        row = np.searchsorted(w, target)
        found = (row < dim) & (w[np.minimum(row, dim - 1)] == target)
        if not found.all() and not compress:
            raise ValueError("basis is not invariant under the Hamiltonian")
        row, col, val = row[found], col[found], val[found]
    else:
        row = col = np.zeros(0, dtype=np.int64)
        val = np.zeros(0, dtype=complex)
    idx = np.arange(dim)
    m = sp.coo_matrix((np.concatenate([val, diag.astype(complex)]),
                       (np.concatenate([row, idx]), np.concatenate([col, idx]))),
                      shape=(dim, dim))
    m = m.tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


def build_hamiltonian(lattice: Lattice, params: ModelParams, n_particles: int,
                      interval: tuple[int, int] | None = None) -> SparseOperator:
    """Hamiltonian block on the ``n_particles`` sector (optionally of a sub-interval)."""
    basis = enumerate_sector(lattice, n_particles)
    e, q = interval_terms(lattice, *(interval or (None, None)))
    m = assemble(lattice, basis, params, e, q)
    return SparseOperator(lattice, basis, m, n_particles, {"interval": interval})


def operator_on(lattice: Lattice, params: ModelParams, basis, interval=None,
                compress: bool = False) -> SparseOperator:
    """Hamiltonian (of ``interval`` or the whole lattice) on an arbitrary sorted basis."""
    basis = np.asarray(sorted(int(b) for b in basis), dtype=np.uint64)
    e, q = interval_terms(lattice, *(interval or (None, None)))
    m = assemble(lattice, basis, params, e, q, compress=compress)
    return SparseOperator(lattice, basis, m, None, {"interval": interval})


def full_hamiltonian(lattice: Lattice, params: ModelParams) -> SparseOperator:
    """Whole-space operator in packed order (small ``L`` only)."""
    if lattice.L > 16:
        raise ValueError("full-space assembly is limited to L <= 16")
    basis = np.arange(1 << lattice.L, dtype=np.uint64)
    e, q = interval_terms(lattice)
    return SparseOperator(lattice, basis, assemble(lattice, basis, params, e, q))


def sector_blocks(lattice: Lattice, n_particles: int) -> dict[int, np.ndarray]:
    """Split a particle sector by centre of mass (mod ``L`` on rings)."""
    basis = enumerate_sector(lattice, n_particles)
    com = center_of_mass_array(basis, lattice)
    return {int(c): basis[com == c] for c in np.unique(com)}


# --- coarse-graining intervals --------------------------------------------


def martingale_interval(n: int, L: int) -> tuple[int, int]:
    """Interval of the ``n``-th local Hamiltonian for ``L = 3N + k``, ``k`` in 1..3."""
    if L < 10:
        raise ValueError("the martingale sequence needs L >= 10")
    N, k = divmod(L - 1, 3)
    k += 1
    if not 2 <= n <= N:
        raise ValueError(f"n must lie in 2..{N}")
    if n == 2:
        return 1, 6 + k
    return 3 * n + k - 8, 3 * n + k


def fsc_interval(m: int, L: int) -> tuple[int, int]:
    """Ring interval ``m`` of the cover for ``L = 3N + r``, ``r`` in 3..5.

    The upper end may exceed ``L``; read it modulo ``L``.
    """
    N, r = divmod(L - 3, 3)
    r += 3
    if N < 1:
        raise ValueError("ring too short")
    if not 1 <= m <= N + 1:
        raise ValueError(f"m must lie in 1..{N + 1}")
    if m <= N:
        return 3 * m - 2, 3 * m + 3
    return L - r + 1, L + 3


# --- physical parameters --------------------------------------------------


def f1(k: float, alpha: float, period: int, truncation_j: int) -> float:
    js = np.arange(-truncation_j, truncation_j + 1)
    u = k + js * period
    return float(np.sum(alpha * u * np.exp(-(alpha * u) ** 2)))


def physical_params(alpha: float, period: int, truncation_j: int | None = None) -> tuple[float, float]:
    """``(kappa, lam)`` from the thin-torus form factor summed with the given period.

    ``period`` is the summation period inside the form factor; whether that is
    the flux ``L`` or the particle number is left to the caller.  With no
    ``truncation_j`` the smallest one whose next term is negligible is used.
    """
    if alpha <= 0 or period <= 0:
        raise ValueError("alpha and period must be positive")

    def tail_ok(j):
        for k in (0.5, 1.0, 1.5):
            ref = abs(f1(k, alpha, period, 0))
            nxt = max(alpha * abs(u) * math.exp(-(alpha * u) ** 2)
                      for u in (k + (j + 1) * period, k - (j + 1) * period))
            if not nxt <= 1e-15 * ref:
                return False
        return True

    if truncation_j is None:
        truncation_j = 0
        while not tail_ok(truncation_j):
            truncation_j += 1
            if truncation_j > 1000:
                raise ValueError("form factor sum does not converge")
    elif not tail_ok(truncation_j):
        raise ValueError("truncation too short: next term exceeds 1e-15 relative")
    F = {k: f1(k, alpha, period, truncation_j) for k in (0.5, 1.0, 1.5)}
    return abs(F[0.5]) ** 2 / abs(F[1.0]) ** 2, -F[1.5] / F[1.0]
