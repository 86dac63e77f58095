import numpy as np
import pytest

import magfiber as mf
from magfiber.errors import GridCapWarning
from magfiber.operator import MAX_NODES


def test_grid_basics():
    g = mf.RadialGrid(R=12.0, N=2400)
    assert g.h == pytest.approx(0.005)
    r = g.nodes
    assert r[0] == pytest.approx(g.h / 2)
    assert r[-1] < g.R
    assert np.all(np.diff(r) > 0)


def test_grid_validation():
    with pytest.raises(ValueError):
        mf.RadialGrid(R=-1.0, N=100)
    with pytest.raises(ValueError):
        mf.RadialGrid(R=1.0, N=8)


def test_centrifugal_entry_m1(harmonic):
    # h = 1 so the first node sits at r = 0.5; the m = 1 centrifugal term
    # contributes (1 - 1/4) / 0.25 = 3 on top of the stencil and potential
    grid = mf.RadialGrid(R=24.0, N=24)
    T = mf.discretize(harmonic, grid, 1, 0.0)
    r0 = grid.nodes[0]
    assert T.diag[0] - 2.0 - (r0 + 0.0) ** 2 == pytest.approx(3.0, rel=1e-14)
    assert np.all(T.off == -1.0)


def test_potential_entry_m0(harmonic):
    # (a(1.5) - 2)^2 = 0.25 on the m = 0 diagonal (flux-form rows carry no
    # pointwise centrifugal term)
    grid = mf.RadialGrid(R=24.0, N=24)
    T = mf.discretize(harmonic, grid, 0, -2.0)
    i = 1   # r = 1.5
    assert T.diag[i] - 2.0 == pytest.approx(0.25, rel=1e-14)


def test_m0_off_diagonal_flux_factors(harmonic):
    grid = mf.RadialGrid(R=16.0, N=16)
    T = mf.discretize(harmonic, grid, 0, 0.0)
    i = np.arange(1, 16)
    assert np.allclose(T.off, -i / np.sqrt(i * i - 0.25))
    # the factors approach the plain stencil away from the axis
    assert abs(T.off[-1] + 1.0) < 1e-3


def test_non_integer_m_rejected(harmonic, fine_grid):
    with pytest.raises(ValueError):
        mf.discretize(harmonic, fine_grid, 0.5, 0.0)


def test_symmetry_reconstruction(harmonic, wire):
    grid = mf.RadialGrid(R=12.0, N=64)
    for field, m in ((harmonic, 0), (harmonic, 3), (wire, 1)):
        M = mf.discretize(field, grid, m, -1.0).dense()
        assert np.array_equal(M, M.T)


def test_matvec_matches_dense(harmonic):
    grid = mf.RadialGrid(R=12.0, N=32)
    T = mf.discretize(harmonic, grid, 2, 0.5)
    rng = np.random.default_rng(7)
    x = rng.standard_normal(32)
    assert np.allclose(T.matvec(x), T.dense() @ x, rtol=1e-13)


def test_eigenvalues_increase_with_angular_momentum(harmonic, fine_grid):
    # the centrifugal barrier grows pointwise with m^2, so every eigenvalue
    # must strictly increase with |m|
    prev = None
    for m in (0, 1, 2, 3):
        vals = mf.lowest_eigenvalues(mf.discretize(harmonic, fine_grid, m, 0.0), 3)
        if prev is not None:
            assert np.all(vals > prev)
        prev = vals


@pytest.mark.parametrize("m", [0, 1])
def test_h_refinement_second_order(harmonic, m):
    vals = []
    for h in (0.02, 0.01, 0.005):
        grid = mf.RadialGrid(R=12.0, N=int(round(12.0 / h)))
        vals.append(mf.lowest_eigenvalues(mf.discretize(harmonic, grid, m, 0.0), 1)[0])
    order = np.log2((vals[0] - vals[1]) / (vals[1] - vals[2]))
    assert order >= 1.8


# ---------------------------------------------------------------------------
# grid recommendation
# ---------------------------------------------------------------------------

def test_recommend_covers_outer_well(harmonic):
    g = mf.recommend_grid(harmonic, 0, (-20.0, 5.0), 2)
    assert g.R >= 28.0        # well center 20 plus 8 well widths


def test_recommend_default_floor(harmonic):
    g = mf.recommend_grid(harmonic, 0, (0.0, 5.0), 2)
    assert g.R == 12.0


def test_recommend_wire_field(wire):
    g = mf.recommend_grid(wire, 1, (-3.0, 3.0), 1)
    rho = mf.well_center(wire, 3.0)
    needed = rho + 8.0 * mf.field_strength(wire, rho) ** -0.5
    assert g.R >= needed
    assert g.h <= 0.01 * g.R


def test_recommend_resolves_local_wavelength(harmonic):
    g = mf.recommend_grid(harmonic, 0, (-20.0, 5.0), 2)
    r = g.nodes
    v_max = np.abs(mf.potential_a(harmonic, r) + -20.0).max()
    assert g.h <= 0.25 / np.sqrt(v_max) + 1e-12


def test_recommend_caps_with_warning(harmonic):
    with pytest.warns(GridCapWarning):
        g = mf.recommend_grid(harmonic, 0, (-5000.0, 0.0), 1)
    assert g.N == MAX_NODES


def test_recommend_rejects_bad_range(harmonic):
    from magfiber.errors import FieldDomainError
    with pytest.raises(FieldDomainError):
        mf.recommend_grid(harmonic, 0, (np.inf, 0.0), 1)
