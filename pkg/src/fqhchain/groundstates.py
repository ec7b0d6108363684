"""Tiling ground states, squeezed Tao-Thouless states and their excitations."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from math import sqrt

import numpy as np
import scipy.sparse as sp

from .configspace import OPEN, Configuration, Lattice, enumerate_sector, pack, unpack
from .hamiltonian import ModelParams, SparseOperator
from .tilings import (
    MIN_RING, PATTERNS, Tiling, classify_configuration, enumerate_roots, enumerate_tilings,
    equivalence_class, is_root, mm_split, root_of, tt_root,
)

MIN_OPEN_KERNEL = 8  # open chains from this length have no kernel outside the tiling states
GS_TOL = 1e-10


@dataclass
class StateVector:
    """Sparse amplitudes over packed configurations of ``L`` sites."""

    L: int
    amps: dict = field(default_factory=dict)

    @classmethod
    def basis_state(cls, s: str) -> "StateVector":
        return cls(len(s), {pack(s): 1.0 + 0j})

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amps.values()))

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        small, big = (self, other) if len(self.amps) < len(other.amps) else (other, self)
        s = sum(np.conj(self.amps[k]) * other.amps[k] for k in small.amps if k in big.amps)
        return complex(s)

    def tensor(self, other: "StateVector") -> "StateVector":
        """``self`` on the first ``L`` sites, ``other`` after them."""
        amps = {}
        for ka, a in self.amps.items():
            for kb, b in other.amps.items():
                amps[ka | (kb << self.L)] = a * b
        return StateVector(self.L + other.L, amps)

    def __add__(self, other: "StateVector") -> "StateVector":
        if self.L != other.L:
            raise ValueError("length mismatch")
        amps = dict(self.amps)
        for k, v in other.amps.items():
            amps[k] = amps.get(k, 0) + v
        return StateVector(self.L, amps)

    def __rmul__(self, c) -> "StateVector":
        return StateVector(self.L, {k: c * v for k, v in self.amps.items()})

    def to_dense(self, basis: np.ndarray) -> np.ndarray:
        v = np.zeros(len(basis), dtype=complex)
        keys = np.fromiter(self.amps.keys(), dtype=np.uint64, count=len(self.amps))
        idx = np.searchsorted(basis, keys)
        if len(keys) and not (basis[np.minimum(idx, len(basis) - 1)] == keys).all():
            raise KeyError("state leaves the basis")
        v[idx] = list(self.amps.values())
        return v

    def to_text(self) -> str:
        """Lines ``bitstring re im`` in ascending packed order."""
        return "".join(f"{unpack(k, self.L)} {complex(a).real:.17g} {complex(a).imag:.17g}\n"
                       for k, a in sorted(self.amps.items()))

    @classmethod
    def from_text(cls, text: str) -> "StateVector":
        amps, L = {}, 0
        for line in text.strip().splitlines():
            s, re, im = line.split()
            L = len(s)
            amps[pack(s)] = complex(float(re), float(im))
        return cls(L, amps)


EMPTY = StateVector(0, {0: 1.0 + 0j})


# --- exact states: amplitudes as polynomials in lambda ---------------------
# A poly-state maps configuration -> Counter(power -> integer coefficient).


def _poly_state(root: Tiling) -> dict:
    return {t.bits: Counter({t.n_dimers: 1}) for t in equivalence_class(root)}


def _poly_tensor(a: dict, La: int, b: dict) -> dict:
    out = {}
    for ka, pa in a.items():
        for kb, pb in b.items():
            c = Counter()
            for ea, ca in pa.items():
                for eb, cb in pb.items():
                    c[ea + eb] += ca * cb
            out[ka | (kb << La)] = c
    return out


def _poly_add(a: dict, b: dict, shift_b: int = 0) -> dict:
    out = {k: Counter(v) for k, v in a.items()}
    for k, p in b.items():
        c = out.setdefault(k, Counter())
        for e, v in p.items():
            c[e + shift_b] += v
    return {k: +c for k, c in out.items() if +c}


def _poly_literal(s: str) -> dict:
    return {pack(s): Counter({0: 1})}


def _poly_phi(n: int, i: int = 3) -> tuple[dict, int]:
    if n == 0:
        return {0: Counter({0: 1})}, 0
    r = tt_root(n, i)
    return _poly_state(r), r.lattice.L


def _poly_eval(p: dict, L: int, lam: complex) -> StateVector:
    return StateVector(L, {k: sum(c * lam ** e for e, c in pc.items()) for k, pc in p.items()})


# --- tiling ground states -------------------------------------------------


def vmd_state(root: Tiling, params: ModelParams) -> StateVector:
    """Sum of ``lam**d(T) |sigma(T)>`` over the tilings connected to ``root``."""
    if not is_root(root):
        raise ValueError(f"{root} contains a dimer")
    lam = params.lam
    return StateVector(root.lattice.L, {t.bits: lam ** t.n_dimers for t in equivalence_class(root)})


def tt_state(n: int, i: int, params: ModelParams) -> StateVector:
    """Squeezed Tao-Thouless state: ground state of ``(M, ..., M, M_i)``; ``n = 0`` is the empty product."""
    if n == 0:
        return EMPTY
    return vmd_state(tt_root(n, i), params)


def check_recursions(n: int, i: int, params: ModelParams | None = None) -> bool:
    """Exact coefficient check of the Tao-Thouless recursions at ``n``.

    Verifies, as polynomial identities in ``lam``:
    ``phi_n^(i) = phi_n^(j) (x) |0>^(i-j)`` for ``j < i``;
    ``phi_n^(i) = phi_{n-1} (x) |M_i> + lam phi_{n-2} (x) |D_i>`` (``n >= 2``);
    ``phi_{l+r}^(i) = phi_l (x) phi_r^(i) + lam phi_{l-1} (x) |D> (x) phi_{r-1}^(i)``
    for every split with ``l >= 1, r >= 2``.  With ``params`` the numeric
    states are also compared against the evaluated polynomials.
    """
    target, Lt = _poly_phi(n, i)
    ok = True
    for j in range(1, i):
        pj, Lj = _poly_phi(n, j)
        ok &= _poly_tensor(pj, Lj, _poly_literal("0" * (i - j))) == target
    if n >= 2:
        a, La = _poly_phi(n - 1)
        b, Lb = _poly_phi(n - 2)
        m_i = PATTERNS[{1: "M_1", 2: "M_2", 3: "M"}[i]]
        d_i = PATTERNS[{1: "D_1", 2: "D_2", 3: "D"}[i]]
        rhs = _poly_add(_poly_tensor(a, La, _poly_literal(m_i)),
                        _poly_tensor(b, Lb, _poly_literal(d_i)), shift_b=1)
        ok &= rhs == target
    for l in range(1, n - 1):
        r = n - l
        pl, Ll = _poly_phi(l)
        pr, _ = _poly_phi(r, i)
        pl1, Ll1 = _poly_phi(l - 1)
        pr1, _ = _poly_phi(r - 1, i)
        first = _poly_tensor(pl, Ll, pr)
        second = _poly_tensor(_poly_tensor(pl1, Ll1, _poly_literal(PATTERNS["D"])), Ll1 + 6, pr1)
        ok &= _poly_add(first, second, shift_b=1) == target
    if params is not None and n >= 1:
        num = tt_state(n, i, params)
        ev = _poly_eval(target, Lt, params.lam)
        ok &= num.amps.keys() == ev.amps.keys() and all(num.amps[k] == ev.amps[k] for k in num.amps)
    return bool(ok)


def fragment_state(root: Tiling, params: ModelParams | None = None):
    """Product of Tao-Thouless fragments, voids and boundary pieces for an open root.

    Returns an exact poly-state when ``params`` is None, else a StateVector.
    """
    if root.lattice.periodic or not is_root(root):
        raise ValueError("need an open root tiling")
    pieces = []
    kinds = root.kinds
    j = 0
    while j < len(kinds):
        k = kinds[j]
        if k in ("M", "M_1", "M_2"):
            run = j
            while j < len(kinds) and kinds[j] == "M":
                j += 1
            if j < len(kinds) and kinds[j] in ("M_1", "M_2"):
                i = int(kinds[j][-1])
                j += 1
            else:
                i = 3
            pieces.append(_poly_phi(j - run, i))
            continue
        pieces.append((_poly_literal(PATTERNS[k]), len(PATTERNS[k])))
        j += 1
    acc, La = {0: Counter({0: 1})}, 0
    for p, Lp in pieces:
        acc = _poly_tensor(acc, La, p)
        La += Lp
    if params is None:
        return acc
    return _poly_eval(acc, La, params.lam)


def check_fragmentation(root: Tiling) -> bool:
    return fragment_state(root) == _poly_state(root)


# --- norms ----------------------------------------------------------------


def beta(n: int, lambda_sq: float) -> float:
    """Closed form of ``||phi_{n-1}||^2 / ||phi_n||^2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if lambda_sq < 0:
        raise ValueError("lambda_sq must be nonnegative")
    s = sqrt(1 + 4 * lambda_sq)
    bp, bm = (1 + s) / 2, (1 - s) / 2
    b = bm / bp
    return (1 / bp) * (1 - b ** n) / (1 - b ** (n + 1))


def beta_limit(lambda_sq: float) -> float:
    return 2 / (1 + sqrt(1 + 4 * lambda_sq))


def phi_norm2(n: int, lambda_sq: float) -> float:
    """``||phi_n||^2`` from ``a_n = a_{n-1} + r a_{n-2}``, ``a_0 = a_1 = 1``."""
    a, b = 1.0, 1.0
    for _ in range(n - 1):
        a, b = b, b + lambda_sq * a
    return b if n >= 1 else a


def eta_state(n: int, i: int, params: ModelParams) -> StateVector:
    """Excitation ``-conj(lam) beta_{n-1} phi_{n-1}|M_i> + phi_{n-2}|D_i>`` orthogonal to ``phi_n^(i)``."""
    if n < 2:
        raise ValueError("eta needs n >= 2")
    m_i = StateVector.basis_state(PATTERNS[{1: "M_1", 2: "M_2", 3: "M"}[i]])
    d_i = StateVector.basis_state(PATTERNS[{1: "D_1", 2: "D_2", 3: "D"}[i]])
    c = -np.conj(params.lam) * beta(n - 1, params.r)
    return c * tt_state(n - 1, 3, params).tensor(m_i) + tt_state(n - 2, 3, params).tensor(d_i)


def eta_full(root: Tiling, params: ModelParams) -> StateVector:
    """``psi(head) (x) eta_n^(i)`` for a root ending in ``n >= 2`` monomers."""
    head, n, i = mm_split(root)
    eta = eta_state(n, i, params)
    if not head:
        return eta
    L_head = root.lattice.L - eta.L
    return vmd_state(Tiling(Lattice(L_head, OPEN), head), params).tensor(eta)


# --- projectors -----------------------------------------------------------


def orthonormalize(vectors, tol: float = GS_TOL) -> np.ndarray:
    """Modified Gram-Schmidt (two passes); drops vectors with residual below ``tol``."""
    basis = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        nrm0 = np.linalg.norm(w)
        if nrm0 == 0:
            continue
        for _ in range(2):
            for q in basis:
                w -= np.vdot(q, w) * q
        nrm = np.linalg.norm(w)
        if nrm < tol * max(1.0, nrm0):
            continue
        basis.append(w / nrm)
    if not basis:
        return np.zeros((0, 0), dtype=complex)
    return np.array(basis)


def ground_states(lattice: Lattice, params: ModelParams, n_particles: int | None = None) -> list[StateVector]:
    """Tiling ground states of the full Hamiltonian, one per root (optionally one sector)."""
    out = []
    for r in enumerate_roots(lattice):
        if n_particles is None or r.bits.bit_count() == n_particles:
            out.append(vmd_state(r, params))
    return out


def _numeric_kernel(op: SparseOperator, tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(op.dense())
    scale = max(1.0, float(np.max(np.abs(w))) if len(w) else 1.0)
    return v[:, w < tol * scale].T


def projector(space: str, lattice: Lattice, params: ModelParams, n_particles: int) -> SparseOperator:
    """Orthogonal projector onto the ground or tiling space within one particle sector.

    ``space`` is ``"ground"`` or ``"tiling"``.  Ground projectors come from the
    tiling states where those are known to span the kernel (rings of at least
    six sites, open chains of at least eight) and from a numerical kernel
    otherwise.
    """
    basis = enumerate_sector(lattice, n_particles)
    if space == "tiling":
        tiled = np.array(sorted(t.bits for t in enumerate_tilings(lattice)
                                if t.bits.bit_count() == n_particles), dtype=np.uint64)
        diag = np.isin(basis, tiled).astype(complex)
        m = sp.diags(diag).tocsr()
        return SparseOperator(lattice, basis, m, n_particles, {"space": space})
    if space != "ground":
        raise ValueError(f"unknown space {space!r}")
    big_enough = lattice.L >= (MIN_RING if lattice.periodic else MIN_OPEN_KERNEL)
    if big_enough:
        vecs = [s.to_dense(basis) for s in ground_states(lattice, params, n_particles)]
    else:
        from .hamiltonian import build_hamiltonian
        vecs = list(_numeric_kernel(build_hamiltonian(lattice, params, n_particles), GS_TOL))
    Q = orthonormalize(vecs)
    if len(Q) == 0:
        m = sp.csr_matrix((len(basis), len(basis)), dtype=complex)
    else:
        m = sp.csr_matrix(Q.T @ Q.conj())
    return SparseOperator(lattice, basis, m, n_particles, {"space": space, "rank": len(Q)})


def tiling_basis(lattice: Lattice) -> np.ndarray:
    """Packed configurations spanning the tiling space, ascending."""
    return np.array(sorted(t.bits for t in enumerate_tilings(lattice)), dtype=np.uint64)


def local_ground_projector(lattice: Lattice, basis: np.ndarray, params: ModelParams,
                           interval: tuple[int, int]) -> np.ndarray:
    """Projector onto ``ker H_[a,b] (x) 1`` compressed to the tiling space of ``lattice``.

    ``basis`` lists the tiling configurations of ``lattice``.  Each one is cut
    into (outside part, tiling of ``[a, b]``); states sharing the outside part
    and the root of the inner tiling span one block, whose ground state carries
    ``lam**d`` on the inner tiling.
    """
    a, b = interval
    L = lattice.L
    blocks = defaultdict(list)
    sites = [(y - 1) % L + 1 for y in range(a, b + 1)]
    inner_mask = sum(1 << (y - 1) for y in sites)
    for idx, bits in enumerate(int(x) for x in basis):
        s = unpack(bits, L)
        sub = "".join(s[y - 1] for y in sites)
        t = classify_configuration(Configuration(Lattice(len(sub), OPEN), pack(sub)))
        if t is None:
            raise ValueError(f"{s} does not restrict to a tiling on [{a}, {b}]")
        key = (bits & ~inner_mask, root_of(t).bits)
        blocks[key].append((idx, params.lam ** t.n_dimers))
    P = np.zeros((len(basis), len(basis)), dtype=complex)
    for members in blocks.values():
        idx = np.array([m[0] for m in members])
        v = np.array([m[1] for m in members], dtype=complex)
        nrm2 = np.vdot(v, v).real
        if nrm2 == 0:
            continue
        P[np.ix_(idx, idx)] += np.outer(v, v.conj()) / nrm2
    return P


def numeric_local_ground_projector(lattice: Lattice, basis: np.ndarray, params: ModelParams,
                                   interval: tuple[int, int] | None, tol: float = GS_TOL) -> np.ndarray:
    """Same projector from a dense kernel computation of ``H_[a,b]`` on the tiling space."""
    from .hamiltonian import operator_on
    op = operator_on(lattice, params, basis, interval=interval)
    K = _numeric_kernel(op, tol)
    return K.T @ K.conj()
