import numpy as np
import pytest

from fqhchain import bounds
from fqhchain.configspace import (
    OPEN, PERIODIC, Lattice, electrostatic_energy_array, enumerate_sector, pack,
)
from fqhchain.groundstates import StateVector, ground_states, orthonormalize
from fqhchain.hamiltonian import (
    ModelParams, build_hamiltonian, full_hamiltonian, operator_on, sector_blocks,
)
from fqhchain.spectra import (
    CSV_COLUMNS, block_orbits, complement_ground_energy, edge_mode_check,
    equivalent_hamiltonians_check, full_gap, knabe_check, lowest_eigenvalues, martingale_norm,
    martingale_norm_check, norm_estimate, restricted_spectrum, sector_kernel_dims, sector_spectrum,
    tiling_space_spectrum,
)
from fqhchain.tilings import enumerate_roots, enumerate_tilings

P = ModelParams(1.0, 0.3)


@pytest.mark.parametrize("kappa,want", [(1.0, 1.0), (0.5, 0.5)])
def test_gap_at_zero_lambda(kappa, want):
    r = full_gap(Lattice(12, PERIODIC), ModelParams(kappa, 0))
    assert r.gap == pytest.approx(want, abs=1e-12)


def test_six_site_ring_kernel():
    r = full_gap(Lattice(6, PERIODIC), P)
    assert r.kernel_dim == len(enumerate_roots(Lattice(6, PERIODIC)))


@pytest.mark.parametrize("boundary,L", [(PERIODIC, 11), (OPEN, 10), (PERIODIC, 14)])
def test_gap_independent_of_shortcuts(boundary, L):
    lat = Lattice(L, boundary)
    p = ModelParams(1.5, 0.4 + 0.2j)
    a = full_gap(lat, p)
    b = full_gap(lat, p, use_symmetry=False)
    c = full_gap(lat, p, dense_max=12)
    assert a.gap == pytest.approx(b.gap, abs=1e-10)
    assert a.gap == pytest.approx(c.gap, abs=1e-8)
    assert a.kernel_dim == b.kernel_dim == c.kernel_dim
    assert c.method == "iterative"


def test_gap_matches_full_space():
    lat = Lattice(10, PERIODIC)
    w = np.linalg.eigvalsh(full_hamiltonian(lat, P).dense())
    r = full_gap(lat, P)
    assert r.kernel_dim == int(np.sum(w < 1e-9))
    assert r.gap == pytest.approx(w[w > 1e-9][0], abs=1e-10)


def test_gap_guard():
    with pytest.raises(ValueError):
        full_gap(Lattice(23, PERIODIC), P)


@pytest.mark.parametrize("L,boundary,n", [(14, OPEN, 4), (16, PERIODIC, 5), (16, OPEN, 3), (18, OPEN, 5)])
def test_dense_and_iterative_agree(L, boundary, n):
    # per (N, COM) block, with the kernel locked: a Krylov method cannot resolve
    # the multiplicity of a large kernel or of symmetry-related copies
    lat = Lattice(L, boundary)
    p = ModelParams(0.8, 0.5 - 0.1j)
    blocks = sector_blocks(lat, n)
    c = max(blocks, key=lambda k: (len(blocks[k]), k))
    basis = blocks[c]
    assert len(basis) <= 4000
    op = operator_on(lat, p, basis)
    states = [s for s in ground_states(lat, p, n) if next(iter(s.amps)) in set(basis.tolist())]
    Q = orthonormalize([s.to_dense(basis) for s in states]) if states else None
    nq = 0 if Q is None else len(Q)
    dense, kd, m1 = lowest_eigenvalues(op.matrix, nq + 5)
    it, ki, m2 = lowest_eigenvalues(op.matrix, nq + 5, known_kernel=Q, dense_max=0, seed=7)
    assert (m1, m2) == ("dense", "iterative")
    assert kd == ki == nq
    assert np.allclose(dense, it, atol=1e-8)


def test_iterative_is_deterministic():
    H = build_hamiltonian(Lattice(14, OPEN), P, 4).matrix
    a = lowest_eigenvalues(H, 4, dense_max=0, seed=3)[0]
    b = lowest_eigenvalues(H, 4, dense_max=0, seed=3)[0]
    assert np.array_equal(a, b)


def test_norm_estimate():
    H = build_hamiltonian(Lattice(10, PERIODIC), P, 3).matrix
    top = np.linalg.eigvalsh(H.toarray())[-1]
    assert norm_estimate(H) == pytest.approx(top, rel=0.05)
    assert norm_estimate(H) <= top * (1 + 1e-12)


@pytest.mark.parametrize("L", [5, 6, 7, 8])
@pytest.mark.parametrize("boundary", [OPEN, PERIODIC])
def test_sector_decomposition(L, boundary):
    lat = Lattice(L, boundary)
    full = np.linalg.eigvalsh(full_hamiltonian(lat, P).dense())
    parts = np.sort(np.concatenate([sector_spectrum(lat, P, n) for n in range(L + 1)]))
    assert np.allclose(full, parts, atol=1e-12)


@pytest.mark.parametrize("boundary", [OPEN, PERIODIC])
def test_symmetry_orbits_are_isospectral(boundary):
    lat = Lattice(12, boundary)
    for n in (3, 4, 6):
        blocks = sector_blocks(lat, n)
        orbits = block_orbits(lat, n, blocks)
        assert sum(m for _, m in orbits) == len(blocks)
    dims = sector_kernel_dims(lat, P)
    assert dims == sector_kernel_dims(lat, P, use_symmetry=False)


def test_restricted_spectrum_four_sites():
    p = ModelParams(1.7, 0.6)
    op = build_hamiltonian(Lattice(4), p, 2)
    basis = [StateVector.basis_state("0110"), StateVector.basis_state("1001")]
    r = restricted_spectrum(op, basis, params=p)
    assert r.gap == pytest.approx(1.7 * (1 + 0.36))
    assert r.kernel_dim == 1
    dup = restricted_spectrum(op, basis + [StateVector.basis_state("0110")])
    assert dup.meta["rank"] == 2 and dup.meta["requested"] == 3


def test_tiling_space_is_invariant():
    lat = Lattice(12, PERIODIC)
    H = full_hamiltonian(lat, ModelParams(1.1, 0.5 - 0.5j)).matrix.tocsr()
    tiled = np.zeros(2 ** 12, bool)
    tiled[[t.bits for t in enumerate_tilings(lat)]] = True
    assert abs(H[tiled][:, ~tiled]).max() < 1e-12


def test_complement_energy_at_zero_lambda():
    lat = Lattice(11, PERIODIC)
    p = ModelParams(0.7, 0)
    tiled = {t.bits for t in enumerate_tilings(lat)}
    best = np.inf
    for n in range(12):
        b = enumerate_sector(lat, n)
        rest = np.array([x for x in b.tolist() if x not in tiled], dtype=np.uint64)
        if len(rest):
            H = build_hamiltonian(lat, p, n)
            best = min(best, np.real(H.matrix.diagonal()[np.searchsorted(H.basis, rest)]).min())
    assert complement_ground_energy(lat, p) == pytest.approx(best)


def test_complement_above_gamma():
    for L in (11, 12):
        e0 = complement_ground_energy(Lattice(L, PERIODIC), P)
        assert e0 >= bounds.gamma_per(P) - 1e-9


def test_edge_mode():
    e, pred = edge_mode_check(8, ModelParams(1.0, 0))
    assert e == 0 and pred == 0
    devs = []
    for lam in (0.2, 0.1, 0.05):
        e, pred = edge_mode_check(9, ModelParams(1.0, lam))
        devs.append(abs(e - pred) / lam ** 2)
    assert 4 / 1.5 <= devs[0] / devs[1] <= 4 * 1.5
    assert 4 / 1.5 <= devs[1] / devs[2] <= 4 * 1.5
    with pytest.raises(ValueError):
        edge_mode_check(5, P)


@pytest.mark.parametrize("L", [6, 7, 10])
def test_edge_mode_exact_two_by_two(L):
    p = ModelParams(2.0, 0.3 + 0.1j)
    k, r = p.kappa, p.r
    H = np.array([[k * r, -k * np.conj(p.lam)], [-k * p.lam, 1 + k * (1 + r)]])
    assert edge_mode_check(L, p)[0] == pytest.approx(np.linalg.eigvalsh(H)[0], abs=1e-14)


@pytest.mark.parametrize("L,n", [(10, 2), (11, 3), (12, 3)])
def test_equivalent_hamiltonians(L, n):
    for N in (2, 3, 4):
        lo, hi = equivalent_hamiltonians_check(L, n, P, N)
        assert lo >= -1e-12 and hi >= -1e-12


@pytest.mark.parametrize("L", [10, 11, 12])
def test_martingale_norm(L):
    p = ModelParams(1.0, 0.5)
    v = martingale_norm(L, p)
    assert v == pytest.approx(martingale_norm(L, p, numeric=True), abs=1e-10)
    assert martingale_norm_check(L, p).passed
    assert martingale_norm(L, ModelParams(1.0, 1e-3)) < 1e-5
    with pytest.raises(ValueError):
        martingale_norm_check(L, ModelParams(1.0, 0))


def test_knabe():
    c = knabe_check(15, 2, P)
    assert c.passed and c.margin > 0
    assert set(c.detail["e1_values"]) == {3, 4, 5}
    with pytest.raises(ValueError):
        knabe_check(14, 2, P)


def test_tiling_space_spectrum_counts_roots():
    lat = Lattice(11, OPEN)
    r = tiling_space_spectrum(lat, P)
    assert r.kernel_dim == len(enumerate_roots(lat))


def test_result_row():
    r = full_gap(Lattice(8, PERIODIC), ModelParams(1.0, 0.5 + 0.25j))
    row = r.row()
    assert len(row) == len(CSV_COLUMNS)
    assert row[:3] == ["8", "periodic", "all"]
    assert complex(row[4]) == 0.5 + 0.25j
