"""Group velocities: three independent estimators of d(lambda)/dp.

* ``velocity_fh``: first-order perturbation theory (Feynman-Hellmann),
      lambda'(p) = 2 * integral (a(r)+p) psi^2 r dr.
  On the discrete operator this is the *exact* derivative of the discrete
  eigenvalue, so it doubles as the reference for the finite-difference route.

* ``velocity_ibp``: the integration-by-parts representation
      lambda'(p) = -2 int r b^-2 b' psi'^2 - 1/2 int v' psi^2
                   + 2 m^2 int r^-2 b^-1 psi^2        (m != 0),
  with v the field's velocity weight.  For m = 0 it is only available for
  power-law fields, where the same manipulation gives
      lambda'(p) = 2 b0^-1 delta int r^delta psi'^2
                   - 1/2 b0^-1 (1-delta)^2 (1+delta)
                       * int r^(delta-2) (psi^2 - psi(0)^2),
  psi(0) being the quadratic extrapolation from the first three nodes.

* ``velocity_fd``: centered differences of the sampled dispersion curve
  (Richardson-extrapolated on uniform sweeps).

Agreement between all three on a converged grid is the toolkit's strongest
internal consistency check; the estimators share the eigenfunction but weigh
completely different moments of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionCurve
from .eigensolver import EigenPair, eigenpairs, lowest_eigenvalues
from .errors import FormulaUnavailableError, NormalizationError
from .fields import POWER_LAW, FieldProfile, derived_data, field_strength, potential_a
from .operator import MAX_NODES, RadialGrid, discretize, recommend_grid

FLOAT_FMT = "%.17g"
NORMALIZATION_TOL = 1e-6
AGREEMENT_TOL = 1e-3
SIGN_DEAD_BAND = 1e-6
DEFAULT_FD_STEP = 5e-3
VELOCITY_GRID_REFINE = 32    # estimator cross-agreement needs finer h than
                             # eigenvalues alone; disagreement shrinks like O(h)


@dataclass(frozen=True)
class VelocityEstimate:
    p: float
    n: int
    m: int
    v_fh: float
    v_ibp: float | None
    v_fd: float
    agreement: float

    def consensus(self) -> float:
        return self.v_fh


@dataclass(frozen=True)
class SignCertificate:
    kind: str                                  # all_positive | all_negative | sign_change | inconclusive
    p_star: float | None
    estimates: tuple[VelocityEstimate, ...]
    detail: str | None = None


def _check_psi(eigpair: EigenPair):
    if eigpair.psi is None or eigpair.grid is None:
        raise ValueError("eigenpair must come from a discretized fiber operator")
    r = eigpair.grid.nodes
    h = eigpair.grid.h
    norm = float(np.sum(eigpair.psi ** 2 * r) * h)
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(
            f"psi is not L^2(r dr)-normalized: sum psi^2 r h = {norm!r}")
    return r, h


def velocity_fh(field_: FieldProfile, eigpair: EigenPair, p: float) -> float:
    """Feynman-Hellmann velocity, midpoint quadrature on the eigen grid."""
    r, h = _check_psi(eigpair)
    return float(2.0 * np.sum((potential_a(field_, r) + p) * eigpair.psi ** 2 * r) * h)


def _psi_at_axis(psi: np.ndarray, r: np.ndarray) -> float:
    """Quadratic extrapolation of psi to r = 0 from the first three nodes."""
    r3, y3 = r[:3], psi[:3]
    out = 0.0
    for i in range(3):
        li = 1.0
        for j in range(3):
            if j != i:
                li *= (0.0 - r3[j]) / (r3[i] - r3[j])
        out += y3[i] * li
    return float(out)


def velocity_ibp(field_: FieldProfile, eigpair: EigenPair, p: float) -> float:
    """Integration-by-parts velocity (independent of the F-H route)."""
    r, h = _check_psi(eigpair)
    m = eigpair.m
    if m is None:
        raise ValueError("eigenpair carries no magnetic quantum number")
    psi = eigpair.psi
    dpsi = np.gradient(psi, h)

    if m != 0:
        dd = derived_data(field_)
        b = field_strength(field_, r)
        t_kinetic = -2.0 * np.sum(r * b ** -2 * dd.b_prime(r) * dpsi ** 2) * h
        t_weight = -0.5 * np.sum(dd.velocity_weight_prime(r) * psi ** 2) * h
        t_centrifugal = 2.0 * m * m * np.sum(r ** -2 / b * psi ** 2) * h
        return float(t_kinetic + t_weight + t_centrifugal)

    if field_.kind != POWER_LAW:
        raise FormulaUnavailableError(
            "the m = 0 integration-by-parts formula is only available for "
            "power-law fields")
    b0, delta = field_.b0, field_.delta
    psi0 = _psi_at_axis(psi, r)
    t_kinetic = 2.0 * delta / b0 * np.sum(r ** delta * dpsi ** 2) * h
    t_weight = (-0.5 * (1 - delta) ** 2 * (1 + delta) / b0
                * np.sum(r ** (delta - 2.0) * (psi ** 2 - psi0 ** 2)) * h)
    # the -psi(0)^2 subtraction leaves an algebraic tail beyond the grid cut
    # (psi itself is already negligible there); add it in closed form
    R = eigpair.grid.R
    t_tail = 0.5 * (1 - delta) * (1 + delta) / b0 * psi0 ** 2 * R ** (delta - 1.0)
    return float(t_kinetic + t_weight + t_tail)


def velocity_fd(curve: DispersionCurve, p_index: int, dp: float | None = None) -> float:
    """Finite-difference velocity read off a sampled dispersion curve.

    Interior indices use centered differences, Richardson-extrapolated when
    the sweep is uniform and 5 points are available.  Boundary indices fall
    back to a one-sided difference (first order; treat with a widened
    tolerance).
    """
    y, ps = curve.energies, curve.p
    n = ps.size
    if not 0 <= p_index < n:
        raise IndexError(f"p_index {p_index} out of range")
    if n < 2:
        raise ValueError("curve has fewer than 2 samples")
    steps = np.diff(ps)
    uniform = np.allclose(steps, steps[0], rtol=1e-10, atol=0.0)
    if p_index == 0:
        return float((y[1] - y[0]) / steps[0])
    if p_index == n - 1:
        return float((y[-1] - y[-2]) / steps[-1])
    if uniform and 2 <= p_index <= n - 3:
        d = dp if dp is not None else float(steps[0])
        return float((8 * (y[p_index + 1] - y[p_index - 1])
                      - (y[p_index + 2] - y[p_index - 2])) / (12 * d))
    return float((y[p_index + 1] - y[p_index - 1]) / (ps[p_index + 1] - ps[p_index - 1]))


def velocity_grid(field_: FieldProfile, m: int, p_range: tuple[float, float],
                  n: int) -> RadialGrid:
    """Recommended grid refined for estimator cross-agreement."""
    base = recommend_grid(field_, m, p_range, n)
    return RadialGrid(R=base.R, N=min(base.N * VELOCITY_GRID_REFINE, MAX_NODES))


def estimate(field_: FieldProfile, m: int, n: int, p: float,
             grid: RadialGrid | None = None,
             dp: float = DEFAULT_FD_STEP) -> VelocityEstimate:
    """All three velocity estimators at one momentum, on a shared grid.

    The finite-difference route solves the fiber at p +- dp and p +- 2*dp on
    the *same* grid, so the discretization bias of the curve cancels.
    """
    if grid is None:
        grid = velocity_grid(field_, m, (p - 2 * dp, p + 2 * dp), n)
    pair = eigenpairs(discretize(field_, grid, m, p), n)[n - 1]
    v_fh = velocity_fh(field_, pair, p)
    try:
        v_ibp = velocity_ibp(field_, pair, p)
    except FormulaUnavailableError:
        v_ibp = None
    lams = {}
    for k in (-2, -1, 1, 2):
        lams[k] = lowest_eigenvalues(discretize(field_, grid, m, p + k * dp), n)[n - 1]
    v_fd = float((8 * (lams[1] - lams[-1]) - (lams[2] - lams[-2])) / (12 * dp))

    vals = [v for v in (v_fh, v_ibp, v_fd) if v is not None]
    scale = max(max(abs(v) for v in vals), 1e-12)
    agreement = max(abs(a - b) for a in vals for b in vals) / scale
    return VelocityEstimate(p=float(p), n=int(n), m=int(m), v_fh=v_fh,
                            v_ibp=v_ibp, v_fd=v_fd, agreement=float(agreement))


def _refined_sign(field_, m, n, p, grid, dp):
    """Near-zero tiebreak: shrink the FD step until the sign is resolved."""
    for factor in (0.25, 0.05):
        est = estimate(field_, m, n, p, grid=grid, dp=dp * factor)
        if abs(est.v_fd) >= SIGN_DEAD_BAND:
            return np.sign(est.v_fd)
    return 0.0


def sign_certificate(field_: FieldProfile, m: int, n: int, p_grid: np.ndarray,
                     grid: RadialGrid | None = None,
                     dp: float = DEFAULT_FD_STEP) -> SignCertificate:
    """Consensus sign classification of lambda' over a momentum grid."""
    p_grid = np.asarray(p_grid, dtype=float)
    if grid is None:
        grid = velocity_grid(field_, m, (p_grid[0] - 2 * dp, p_grid[-1] + 2 * dp), n)
    ests = tuple(estimate(field_, m, n, p, grid=grid, dp=dp) for p in p_grid)

    bad = [e for e in ests if e.agreement > AGREEMENT_TOL]
    if bad:
        worst = max(bad, key=lambda e: e.agreement)
        return SignCertificate(
            kind="inconclusive", p_star=None, estimates=ests,
            detail=f"estimator disagreement {worst.agreement:.2e} at p={worst.p} "
                   f"(fh={worst.v_fh!r}, ibp={worst.v_ibp!r}, fd={worst.v_fd!r})")

    signs = []
    for e in ests:
        if abs(e.v_fh) >= SIGN_DEAD_BAND:
            signs.append(np.sign(e.v_fh))
        else:
            signs.append(_refined_sign(field_, m, n, e.p, grid, dp))
    signs = np.array(signs)

    has_pos, has_neg = np.any(signs > 0), np.any(signs < 0)
    if has_pos and has_neg:
        flip = int(np.flatnonzero(np.diff(np.sign(signs + 0.5 * (signs == 0))) != 0)[0])
        lo, hi = p_grid[flip], p_grid[flip + 1]
        v_lo = ests[flip].v_fh
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            pair = eigenpairs(discretize(field_, grid, m, mid), n)[n - 1]
            v_mid = velocity_fh(field_, pair, mid)
            if np.sign(v_mid) == np.sign(v_lo):
                lo, v_lo = mid, v_mid
            else:
                hi = mid
            if hi - lo < 1e-6:
                break
        return SignCertificate(kind="sign_change", p_star=float(0.5 * (lo + hi)),
                               estimates=ests)
    if has_pos:
        return SignCertificate(kind="all_positive", p_star=None, estimates=ests)
    if has_neg:
        return SignCertificate(kind="all_negative", p_star=None, estimates=ests)
    return SignCertificate(kind="inconclusive", p_star=None, estimates=ests,
                           detail="velocity within the dead band on every sample")


def sufficient_monotonicity_condition(field_: FieldProfile, m: int,
                                      r: np.ndarray) -> bool:
    """Pointwise sufficient condition for lambda' >= 0 everywhere:
    b' <= 0 and r^2 b v' <= 4 m^2 on the sampled radii."""
    dd = derived_data(field_)
    r = np.asarray(r, dtype=float)
    bp_ok = np.all(dd.b_prime(r) <= 1e-12)
    weight_ok = np.all(r ** 2 * field_strength(field_, r)
                       * dd.velocity_weight_prime(r) <= 4.0 * m * m + 1e-12)
    return bool(bp_ok and weight_ok)


def write_velocity_csv(estimates, path) -> None:
    """CSV export with header ``p,n,m,v_fh,v_ibp,v_fd,agreement``."""
    with open(path, "w") as fh:
        fh.write("p,n,m,v_fh,v_ibp,v_fd,agreement\n")
        for e in estimates:
            ibp = FLOAT_FMT % e.v_ibp if e.v_ibp is not None else ""
            fh.write(f"{FLOAT_FMT % e.p},{e.n},{e.m},{FLOAT_FMT % e.v_fh},"
                     f"{ibp},{FLOAT_FMT % e.v_fd},{FLOAT_FMT % e.agreement}\n")
