import numpy as np
import pytest

import magfiber as mf
from magfiber.eigensolver import EIG_ABS_TOL, RESIDUAL_BOUND
from magfiber.errors import EigensolverError
from magfiber.operator import TridiagonalOperator


def laplacian3():
    return TridiagonalOperator(diag=np.array([2.0, 2.0, 2.0]),
                               off=np.array([-1.0, -1.0]))


def test_discrete_laplacian_spectrum():
    # closed form 2 - 2 cos(k pi / 4)
    vals = mf.lowest_eigenvalues(laplacian3(), 3)
    assert np.allclose(vals, [2 - np.sqrt(2), 2.0, 2 + np.sqrt(2)], atol=1e-12)


def test_zero_levels_requested():
    assert mf.lowest_eigenvalues(laplacian3(), 0).size == 0
    assert mf.eigenpairs(laplacian3(), 0) == []
    with pytest.raises(ValueError):
        mf.lowest_eigenvalues(laplacian3(), 4)


def test_middle_laplacian_eigenvector_sign_convention():
    v = mf.eigenvector(laplacian3(), 2.0)
    expect = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
    assert np.allclose(v, expect, atol=1e-11)   # leading component positive


def test_ground_state_has_no_sign_change(harmonic, fine_grid):
    # no sign change above the eigenvector's far-tail noise floor
    for m in (0, 2):
        T = mf.discretize(harmonic, fine_grid, m, -1.0)
        lam = mf.lowest_eigenvalues(T, 1)[0]
        v = mf.eigenvector(T, lam)
        assert np.all(v > -1e-10 * v.max())


def test_harmonic_ground_energy(harmonic, fine_grid):
    # constant unit field, zero momentum: lowest level of the m = 0 fiber is 2
    T = mf.discretize(harmonic, fine_grid, 0, 0.0)
    assert mf.lowest_eigenvalues(T, 1)[0] == pytest.approx(2.0, abs=1e-3)


def test_harmonic_m2_levels(harmonic, fine_grid):
    T = mf.discretize(harmonic, fine_grid, 2, 0.0)
    vals = mf.lowest_eigenvalues(T, 2)
    assert vals[0] == pytest.approx(6.0, abs=1e-3)
    assert vals[1] == pytest.approx(10.0, abs=1e-3)


def test_harmonic_m1_eigenpair(harmonic, fine_grid):
    pairs = mf.eigenpairs(mf.discretize(harmonic, fine_grid, 1, 0.0), 1)
    assert pairs[0].energy == pytest.approx(4.0, abs=1e-3)
    assert pairs[0].n == 1 and pairs[0].m == 1


def test_ground_state_is_gaussian(harmonic, fine_grid):
    # m = 0 fiber of the constant field at p = 0 is the planar oscillator;
    # its radial ground state is exp(-r^2/2)
    pair = mf.eigenpairs(mf.discretize(harmonic, fine_grid, 0, 0.0), 1)[0]
    r = fine_grid.nodes
    gauss = np.exp(-r ** 2 / 2)
    corr = np.sum(pair.psi * gauss * r) / np.sqrt(
        np.sum(pair.psi ** 2 * r) * np.sum(gauss ** 2 * r))
    assert corr >= 0.999


def test_wire_ground_energy_matches_frozen_dense_oracle(wire):
    # golden value from numpy.linalg.eigvalsh on the dense 2000x2000 matrix
    # (R = 40, h = 0.02), frozen ahead of the solver implementation
    golden = 1.4005109593181007
    grid = mf.RadialGrid(R=40.0, N=2000)
    lam = mf.lowest_eigenvalues(mf.discretize(wire, grid, 1, 0.0), 1)[0]
    assert abs(lam - golden) / golden < 1e-9
    # halving h moves the value by O(h^2) only
    lam_fine = mf.lowest_eigenvalues(
        mf.discretize(wire, mf.RadialGrid(R=40.0, N=4000), 1, 0.0), 1)[0]
    assert abs(lam_fine - golden) < 5e-4


def test_normalizations(harmonic, fine_grid):
    pairs = mf.eigenpairs(mf.discretize(harmonic, fine_grid, 1, -0.5), 3)
    h = fine_grid.h
    r = fine_grid.nodes
    for pr in pairs:
        assert np.sum(pr.g ** 2) * h == pytest.approx(1.0, abs=1e-12)
        assert np.sum(pr.psi ** 2 * r) * h == pytest.approx(1.0, abs=1e-12)
    # orthogonality in L^2(dr)
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(np.sum(pairs[i].g * pairs[j].g) * h) <= 1e-8


def test_residual_bound(harmonic, fine_grid):
    T = mf.discretize(harmonic, fine_grid, 1, 0.0)
    lam = mf.lowest_eigenvalues(T, 2)
    for l in lam:
        v = mf.eigenvector(T, l)
        assert (np.linalg.norm(T.matvec(v) - l * v)
                <= RESIDUAL_BOUND * (abs(l) + T.norm_inf()))


def test_spectrum_positive_on_physical_fibers(harmonic, wire, fine_grid):
    for field, m, p in ((harmonic, 0, 0.0), (harmonic, 0, -15.0), (wire, 1, 2.0)):
        T = mf.discretize(field, fine_grid, m, p)
        assert mf.sturm_count(T, 0.0) == 0


def test_sturm_count_matches_dense_oracle():
    rng = np.random.default_rng(42)
    for _ in range(10):
        n = int(rng.integers(8, 64))
        T = TridiagonalOperator(diag=rng.normal(size=n) * 3,
                                off=rng.normal(size=n - 1))
        dense_vals = np.linalg.eigvalsh(T.dense())
        for x in rng.normal(size=3) * 4:
            assert mf.sturm_count(T, x) == int(np.sum(dense_vals < x))


def test_bisection_matches_dense_oracle_small_n():
    rng = np.random.default_rng(3)
    for _ in range(5):
        n = int(rng.integers(16, 512))
        T = TridiagonalOperator(diag=5 * rng.uniform(-1, 1, size=n),
                                off=3 * rng.uniform(-1, 1, size=n - 1))
        ours = mf.lowest_eigenvalues(T, 4)
        oracle = np.linalg.eigvalsh(T.dense())[:4]
        assert np.all(np.abs(ours - oracle) <= 1e-9 * np.maximum(np.abs(oracle), 1.0))
        assert np.all(np.abs(ours - oracle)
                      <= EIG_ABS_TOL * max(1.0, T.norm_inf()) + 1e-12)


def test_strictly_increasing(harmonic, fine_grid):
    vals = mf.lowest_eigenvalues(mf.discretize(harmonic, fine_grid, 0, -3.0), 6)
    assert np.all(np.diff(vals) > 0)


def test_near_degenerate_detected():
    T = TridiagonalOperator(diag=np.array([1.0, 1.0]), off=np.array([1e-15]))
    with pytest.raises(EigensolverError):
        mf.eigenpairs(T, 2)


def test_sign_continuity_along_momentum(harmonic):
    grid = mf.RadialGrid(R=14.0, N=1400)
    curve = mf.sweep(harmonic, 0, 1, np.linspace(-2.0, 2.0, 21),
                     grid_policy=grid)[0]
    w = grid.nodes * grid.h
    for j in range(1, curve.p.size):
        assert float(curve.psi[j - 1] @ (curve.psi[j] * w)) > 0


def test_boundary_exponent_m1(harmonic, fine_grid):
    pair = mf.eigenpairs(mf.discretize(harmonic, fine_grid, 1, 0.0), 1)[0]
    r = fine_grid.nodes
    sel = r <= 10 * r[0]
    slope = np.polyfit(np.log(r[sel]), np.log(np.abs(pair.psi[sel])), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.15)
