import json

import numpy as np
import pytest

import magfiber as mf


@pytest.fixture(scope="module")
def harmonic_m0_sweep(harmonic):
    grid = mf.RadialGrid(R=32.0, N=6400)
    p = np.linspace(-25.0, 5.0, 121)
    return mf.sweep(harmonic, 0, 2, p, grid_policy=grid, keep_psi=False)


def test_sweep_validates_inputs(harmonic):
    with pytest.raises(ValueError):
        mf.sweep(harmonic, 0, 1, np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        mf.sweep(harmonic, 0, 0, np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        mf.sweep(harmonic, 0, 1, np.array([0.0, 1.0]), grid_policy="bogus")


def test_sweep_harmonic_level(harmonic, fine_grid):
    c = mf.sweep(harmonic, 0, 1, np.linspace(-1.0, 1.0, 5),
                 grid_policy=fine_grid, keep_psi=False)[0]
    assert c.energies[2] == pytest.approx(2.0, abs=1e-3)


def test_sweep_workers_match_serial(harmonic, fine_grid):
    p = np.linspace(-2.0, 2.0, 9)
    serial = mf.sweep(harmonic, 1, 2, p, grid_policy=fine_grid, keep_psi=False)
    threaded = mf.sweep(harmonic, 1, 2, p, grid_policy=fine_grid,
                        keep_psi=False, workers=4)
    for a, b in zip(serial, threaded):
        assert np.array_equal(a.energies, b.energies)


def test_deep_negative_momentum_below_landau(harmonic):
    grid = mf.RadialGrid(R=30.0, N=6000)
    c = mf.sweep(harmonic, 0, 1, np.array([-15.0, -14.0]),
                 grid_policy=grid, keep_psi=False)[0]
    assert 0.0 < c.energies[0] < 1.0


def test_interlacing_and_angular_monotonicity(harmonic, fine_grid):
    p = np.linspace(-3.0, 3.0, 13)
    by_m = {m: mf.sweep(harmonic, m, 3, p, grid_policy=fine_grid, keep_psi=False)
            for m in (0, 1, 2)}
    for m, curves in by_m.items():
        for a, b in zip(curves, curves[1:]):
            assert np.all(a.energies < b.energies)
    for n_idx in range(3):
        assert np.all(by_m[1][n_idx].energies > by_m[0][n_idx].energies)
        assert np.all(by_m[2][n_idx].energies > by_m[1][n_idx].energies)


def test_gauge_covariance_of_sweep(root_field):
    # adding c to the potential shifts the curves: lambda_c(p) = lambda_0(p+c)
    grid = mf.RadialGrid(R=20.0, N=4000)
    p = np.linspace(-2.0, 2.0, 21)
    shifted = mf.sweep(root_field.with_gauge(3.0), 1, 2, p,
                       grid_policy=grid, keep_psi=False)
    plain = mf.sweep(root_field, 1, 2, p + 3.0, grid_policy=grid, keep_psi=False)
    for a, b in zip(shifted, plain):
        assert np.allclose(a.energies, b.energies, rtol=1e-8, atol=1e-10)


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------

def test_thresholds_harmonic_m0(harmonic_m0_sweep):
    rep = mf.thresholds(harmonic_m0_sweep)
    assert rep.m == 0
    assert rep.E_m == rep.per_n[0].energy
    assert 0.0 < rep.E_m < 1.0          # strictly inside (0, b0]
    assert rep.per_n[0].attained
    assert rep.per_n[0].argmin_p < 0.0
    assert rep.per_n[0].energy <= rep.per_n[1].energy


def test_thresholds_wire_m1(wire):
    grid = mf.RadialGrid(R=140.0, N=14000)
    p = np.linspace(-6.0, 6.0, 25)
    curves = mf.sweep(wire, 1, 1, p, grid_policy=grid, keep_psi=False)
    rep = mf.thresholds(curves)
    assert rep.E_m > 0.0
    assert isinstance(rep.per_n[0].attained, bool)


def test_threshold_boundary_advisory(harmonic, fine_grid):
    c = mf.sweep(harmonic, 0, 1, np.linspace(0.0, 2.0, 5),
                 grid_policy=fine_grid, keep_psi=False)
    rep = mf.thresholds(c)
    assert not rep.per_n[0].attained
    assert "extend sweep" in rep.per_n[0].advisory


def test_threshold_json_schema(harmonic_m0_sweep, tmp_path):
    rep = mf.thresholds(harmonic_m0_sweep)
    path = tmp_path / "thr.json"
    mf.write_threshold_json(rep, path)
    data = json.loads(path.read_text())
    assert set(data) == {"m", "E_m", "per_n"}
    assert set(data["per_n"][0]) == {"n", "E", "attained", "argmin_p"}


def test_thresholds_need_common_m(harmonic, fine_grid):
    p = np.linspace(-1.0, 1.0, 5)
    c0 = mf.sweep(harmonic, 0, 1, p, grid_policy=fine_grid, keep_psi=False)[0]
    c1 = mf.sweep(harmonic, 1, 1, p, grid_policy=fine_grid, keep_psi=False)[0]
    with pytest.raises(ValueError):
        mf.thresholds([c0, c1])


# ---------------------------------------------------------------------------
# left-tail classification
# ---------------------------------------------------------------------------

def test_left_tail_constant_field_first_level(harmonic):
    rep = mf.classify_left_asymptotics(harmonic, 0, 1, [5.0, 10.0, 15.0, 20.0])
    assert rep.left_law == "landau"
    assert rep.left_limit_fit == pytest.approx(1.0, abs=0.05)
    assert rep.below_constant_limit is True
    assert rep.hypotheses_verified


def test_left_tail_constant_field_second_level(harmonic):
    rep = mf.classify_left_asymptotics(harmonic, 0, 2, [5.0, 10.0, 15.0, 20.0])
    assert rep.left_law == "landau"
    assert rep.left_limit_fit == pytest.approx(3.0, abs=0.1)


def test_left_tail_decaying_field(root_field):
    rep = mf.classify_left_asymptotics(root_field, 1, 1, [4.0, 8.0, 16.0, 32.0])
    assert rep.left_law == "to_zero"
    assert rep.left_limit_fit == 0.0


def test_left_tail_decaying_field_m0(root_field):
    # the first-level threshold of the decaying field is approached only as
    # the sweep extends left: the m = 0 branch also classifies to_zero
    rep = mf.classify_left_asymptotics(root_field, 0, 1, [4.0, 8.0, 16.0, 32.0])
    assert rep.left_law == "to_zero"
    assert np.all(np.diff(rep.energies) < 0)


def test_left_tail_growing_field():
    f = mf.power_law(1.0, -0.5, experimental=True)
    rep = mf.classify_left_asymptotics(f, 0, 1, [4.0, 6.0, 8.0, 10.0])
    assert rep.left_law == "to_infinity"
    assert not rep.hypotheses_verified


def test_left_tail_tabulated_flagged_unverified():
    r = np.linspace(0.0, 260.0, 26000)
    t = mf.tabulated(r, np.ones_like(r))
    rep = mf.classify_left_asymptotics(t, 0, 1, [5.0, 10.0, 15.0, 20.0])
    assert not rep.hypotheses_verified
    assert rep.left_law == "landau"


def test_left_tail_requires_enough_samples(harmonic):
    with pytest.raises(ValueError):
        mf.classify_left_asymptotics(harmonic, 0, 1, [5.0, 10.0, 15.0])


def test_constant_field_levels_stay_below_landau(harmonic):
    # approach from below, with a shrinking positive gap
    for n in (1, 2):
        rep = mf.classify_left_asymptotics(harmonic, 0, n, [5.0, 10.0, 15.0, 20.0])
        gaps = (2 * n - 1) * 1.0 - rep.energies
        assert np.all(gaps > 0)
        assert np.all(np.diff(gaps) < 0)


def test_right_tail_ratios(harmonic):
    ratios = mf.large_p_ratios(harmonic, 0, 1, [5.0, 10.0, 20.0])
    assert np.all(np.diff(ratios) < 0)
    assert np.all(ratios > 1.0)
    rep = mf.classify_left_asymptotics(harmonic, 0, 1, [5.0, 10.0, 15.0, 20.0],
                                       p_list_right=[5.0, 10.0])
    assert rep.right_ratio is not None and rep.right_ratio.size == 2


# ---------------------------------------------------------------------------
# local minima
# ---------------------------------------------------------------------------

def test_constant_field_m0_has_negative_minimum(harmonic_m0_sweep):
    minima = mf.find_local_minima(harmonic_m0_sweep[0])
    assert len(minima) >= 1
    assert all(p_star < 0 for p_star, _ in minima)


def test_wire_field_m0_is_monotone(wire):
    p = np.linspace(-4.0, 4.0, 33)
    c = mf.sweep(wire, 0, 1, p, grid_policy="auto", keep_psi=False)[0]
    assert mf.find_local_minima(c) == []
    assert np.all(np.diff(c.energies) > 0)


def test_root_field_m1_is_monotone(root_field):
    p = np.linspace(-4.0, 4.0, 33)
    c = mf.sweep(root_field, 1, 1, p, grid_policy="auto", keep_psi=False)[0]
    assert mf.find_local_minima(c) == []


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def test_curve_csv_export(harmonic, fine_grid, tmp_path):
    c = mf.sweep(harmonic, 1, 1, np.linspace(-1.0, 1.0, 9),
                 grid_policy=fine_grid, keep_psi=False)[0]
    path = tmp_path / "curve.csv"
    mf.write_curve_csv(c, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "p,n,m,lambda"
    assert len(lines) == 10
    p0, n0, m0, lam0 = lines[1].split(",")
    assert (float(p0), int(n0), int(m0)) == (-1.0, 1, 1)
    assert float(lam0) == pytest.approx(c.energies[0], rel=1e-16)
    # export is deterministic
    path2 = tmp_path / "curve2.csv"
    mf.write_curve_csv(c, path2)
    assert path.read_bytes() == path2.read_bytes()
