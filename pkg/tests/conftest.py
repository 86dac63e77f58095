import numpy as np
import pytest

import magfiber as mf


@pytest.fixture(scope="session")
def harmonic():
    """Constant field: linear potential, the analytically solvable case."""
    return mf.power_law(1.0, 0.0)


@pytest.fixture(scope="session")
def wire():
    """Field of a straight axial current: logarithmic potential."""
    return mf.power_law(1.0, 1.0)


@pytest.fixture(scope="session")
def root_field():
    return mf.power_law(1.0, 0.5)


@pytest.fixture(scope="session")
def fine_grid():
    return mf.RadialGrid(R=12.0, N=2400)   # h = 0.005


@pytest.fixture(scope="session")
def wire_packet(wire):
    """Dense positive-momentum sweep of the wire field with a Gaussian packet.

    Shared by the wave-packet tests; the momentum spacing supports direct
    quadrature out to |t| ~ 200.
    """
    p = np.linspace(0.5, 3.5, 3201)
    grid = mf.RadialGrid(R=12.0, N=3000)
    curve = mf.sweep(wire, 1, 1, p, grid_policy=grid)[0]
    spec = mf.gaussian_packet(curve, 2.0, 0.25)
    sp = mf.build_stationary_phase(curve, spec.interval)
    return curve, spec, sp


def l2_deviation(field_a, field_b):
    """Relative L^2 distance between two evolution fields on a shared grid."""
    from magfiber.wavepacket import trapezoid_weights

    assert np.array_equal(field_a.x3, field_b.x3)
    wts = trapezoid_weights(field_a.x3)
    diff2 = np.einsum("i,ij->j", field_a.r_weights,
                      np.abs(field_a.values - field_b.values) ** 2)
    return float(np.sqrt(np.sum(diff2 * wts)) / field_a.norm())
