"""Finite-difference discretization of the radial fiber operators.

After separating the polar angle (magnetic quantum number m) and Fourier
transforming along the axis (momentum p), the problem reduces to the
half-line operator

    L_m(p) = -d^2/dr^2 + (m^2 - 1/4)/r^2 + (a(r) + p)^2

acting on g(r) in L^2(dr); the physical radial amplitude is recovered as
psi = g / sqrt(r), normalized in L^2(r dr).

Discretization: half-offset uniform grid r_i = (i + 1/2) h on (0, R] with a
Dirichlet cut at r = R (eigenfunctions decay super-exponentially, so R only
has to clear the classically allowed region).  For m != 0 the plain
three-point stencil with the pointwise centrifugal term is second-order
accurate and the half-offset grid imposes the regular r^(|m|+1/2) branch at
the axis.  For m = 0 the pointwise term -1/(4 r^2) is *critically* attractive
(Hardy borderline) and the naive stencil is unstable: its ground state dives
like -0.02/h^2.  The m = 0 rows therefore use the conservative flux form of
the original cylindrical operator (axis flux vanishes identically), which is
the same matrix up to O(h^2) row corrections concentrated near the axis:

    diag_i = 2/h^2 + (a(r_i)+p)^2,   off_i = -(i+1)/sqrt((i+1)^2 - 1/4) / h^2.

Both variants are symmetric tridiagonal by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FieldDomainError, GridCapWarning
from .fields import FieldProfile, field_strength, potential_a, well_center
from .errors import BelowPotentialRangeError

MAX_NODES = 200_000
MIN_NODES = 16
DEFAULT_R_FLOOR = 12.0
WELL_WIDTH_FACTOR = 8.0      # margin beyond the well center, in units of b**-1/2
DE_BROGLIE_FRACTION = 0.25   # h <= this fraction of the shortest local wavelength


@dataclass(frozen=True)
class RadialGrid:
    """Half-offset uniform grid: N interior nodes r_i = (i + 1/2) h, h = R/N."""

    R: float
    N: int

    def __post_init__(self):
        if not (self.R > 0):
            raise ValueError(f"truncation radius must be positive, got {self.R}")
        if self.N < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} nodes, got {self.N}")

    @property
    def h(self) -> float:
        return self.R / self.N

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.h


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix: main diagonal and one off-diagonal array."""

    diag: np.ndarray
    off: np.ndarray
    m: int | None = None
    p: float | None = None
    grid: RadialGrid | None = None
    field: FieldProfile | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.off.shape != (self.diag.shape[0] - 1,):
            raise ValueError("off-diagonal must have N-1 entries")

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def norm_inf(self) -> float:
        a = np.abs(self.diag).copy()
        a[:-1] += np.abs(self.off)
        a[1:] += np.abs(self.off)
        return float(a.max())

    def dense(self) -> np.ndarray:
        """Full matrix; for small-N oracles and tests only."""
        return (np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y


def discretize(field_: FieldProfile, grid: RadialGrid, m: int, p: float) -> TridiagonalOperator:
    """Assemble the discretized fiber operator for quantum number m at momentum p."""
    if int(m) != m:
        raise ValueError(f"magnetic quantum number must be an integer, got {m}")
    m = int(m)
    r = grid.nodes
    h = grid.h
    pot = (potential_a(field_, r) + p) ** 2
    if m == 0:
        diag = 2.0 / h**2 + pot
        i = np.arange(1, grid.N, dtype=float)
        off = -(i / np.sqrt(i * i - 0.25)) / h**2
    else:
        diag = 2.0 / h**2 + (m * m - 0.25) / r**2 + pot
        off = np.full(grid.N - 1, -1.0 / h**2)
    return TridiagonalOperator(diag=diag, off=off, m=m, p=float(p),
                               grid=grid, field=field_)


def recommend_grid(field_: FieldProfile, m: int, p_range: tuple[float, float],
                   n_max: int) -> RadialGrid:
    """Pick (R, N) covering the classically relevant region for a momentum range.

    For p_min < 0 the outer well of (a(r)+p)^2 sits at the radius where
    a(r) = |p_min|, with width scale b**-1/2 there; R clears it by
    ``WELL_WIDTH_FACTOR`` widths.  The spacing resolves a quarter of the
    shortest local wavelength |a(r)+p|**-1/2 and is at most R/100.  N is
    capped at ``MAX_NODES`` with a :class:`GridCapWarning`.
    """
    p_lo, p_hi = float(p_range[0]), float(p_range[1])
    if not (np.isfinite(p_lo) and np.isfinite(p_hi) and p_lo <= p_hi):
        raise FieldDomainError(f"momentum range must be finite and ordered, got {p_range}")

    R = DEFAULT_R_FLOOR
    if p_lo < 0:
        try:
            rho = well_center(field_, -p_lo)
            width = field_strength(field_, rho) ** -0.5
            R = max(R, rho + WELL_WIDTH_FACTOR * width)
        except BelowPotentialRangeError:
            pass  # shallow negative momenta: the default floor already covers it
    if np.isfinite(field_.r_max):
        R = min(R, field_.r_max)

    # probe |a(r)+p| on a log-spaced set of radii (the potential may diverge
    # logarithmically at the axis, so probing down to the smallest
    # representable node is enough)
    r_lo = max(R * 1e-6, field_.r_min + 1e-12)
    r_probe = np.geomspace(r_lo, R, 64)
    a_probe = potential_a(field_, r_probe)
    v_max = max(np.abs(a_probe + p_lo).max(), np.abs(a_probe + p_hi).max(), 1e-12)
    h = min(0.01 * R, DE_BROGLIE_FRACTION * v_max ** -0.5)

    N = int(np.ceil(R / h))
    if N > MAX_NODES:
        warnings.warn(
            f"grid too large: requested N={N} capped at {MAX_NODES} "
            f"(R={R:.3g}, h={h:.3g})", GridCapWarning, stacklevel=2)
        N = MAX_NODES
    N = max(N, MIN_NODES)
    return RadialGrid(R=R, N=N)
