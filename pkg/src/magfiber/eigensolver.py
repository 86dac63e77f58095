"""Lowest eigenpairs of a symmetric tridiagonal operator.

Eigenvalues come from Sturm-count bisection (LAPACK ``stebz`` via scipy),
eigenvectors from shifted inverse iteration on the banded system.  The
spectrum of the physical fiber operators is simple and positive, so only
the lowest handful of pairs is ever needed.

Conventions
-----------
* ``g`` is normalized in L^2(dr):  sum g_i^2 h = 1.
* ``psi_i = g_i / sqrt(r_i)`` carries the L^2(r dr) normalization
  sum psi_i^2 r_i h = 1 (exactly, by construction).
* Sign: the first component with |g_i| > 1e-3 * max|g| is positive.  Along a
  momentum sweep this keeps psi(.; p) continuous in p (checked and re-flipped
  by the sweep itself).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from .errors import EigensolverError
from .operator import RadialGrid, TridiagonalOperator

EIG_ABS_TOL = 1e-10          # guaranteed bisection accuracy, times max(1, |T|_inf)
RESIDUAL_BOUND = 1e-8        # |(T - lam) g| <= bound * (|lam| + |T|_inf)
SIGN_THRESHOLD = 1e-3        # "significantly nonzero" component, rel. to max
INVERSE_ITER_SHIFT = 1e-12   # shift offset, times |T|_inf
MAX_INVERSE_ITER = 5


@dataclass(frozen=True)
class EigenPair:
    """One bound level: eigenvalue plus both normalizations of the eigenvector."""

    n: int                       # 1-based level index, increasing eigenvalue
    energy: float
    g: np.ndarray                # L^2(dr)-normalized grid vector
    psi: np.ndarray | None       # g / sqrt(r); None for bare matrices
    m: int | None = None
    grid: RadialGrid | None = None


def sturm_count(T: TridiagonalOperator, x: float) -> int:
    """Number of eigenvalues of T strictly below x (LDL^T pivot signs)."""
    d = T.diag
    e = T.off
    count = 0
    q = d[0] - x
    if q < 0:
        count += 1
    tiny = np.finfo(float).tiny
    for i in range(1, d.shape[0]):
        if q == 0.0:
            q = tiny
        q = d[i] - x - e[i - 1] * e[i - 1] / q
        if q < 0:
            count += 1
    return count


def lowest_eigenvalues(T: TridiagonalOperator, n_max: int) -> np.ndarray:
    """The n_max smallest eigenvalues, strictly increasing."""
    if n_max < 0 or n_max > T.n:
        raise ValueError(f"n_max must be in [0, {T.n}], got {n_max}")
    if n_max == 0:
        return np.empty(0)
    # tol=0 makes stebz bisect to machine precision, comfortably inside the
    # EIG_ABS_TOL * max(1, |T|_inf) guarantee the callers rely on
    vals = eigvalsh_tridiagonal(T.diag, T.off, select="i",
                                select_range=(0, n_max - 1),
                                lapack_driver="stebz", tol=0.0)
    return np.sort(vals)


def _apply_sign_convention(v: np.ndarray) -> np.ndarray:
    thresh = SIGN_THRESHOLD * np.abs(v).max()
    lead = np.flatnonzero(np.abs(v) > thresh)[0]
    return -v if v[lead] < 0 else v


def eigenvector(T: TridiagonalOperator, energy: float,
                orthogonalize_against: list[np.ndarray] | None = None) -> np.ndarray:
    """Unit 2-norm eigenvector for a converged eigenvalue, by inverse iteration.

    The shift is offset from the eigenvalue by ``INVERSE_ITER_SHIFT * |T|_inf``
    so the banded solve stays factorizable while the eigendirection still
    dominates.  If the residual bound is not met within
    ``MAX_INVERSE_ITER`` sweeps, the start vector is re-orthogonalized
    against previously found vectors and the iteration retried once.
    """
    norm = T.norm_inf()
    shift = energy + INVERSE_ITER_SHIFT * max(norm, 1.0)
    n = T.n
    ab = np.zeros((3, n))
    ab[0, 1:] = T.off
    ab[1, :] = T.diag - shift
    ab[2, :-1] = T.off
    scale = abs(energy) + norm
    accept = RESIDUAL_BOUND * scale
    # keep sweeping down to the roundoff floor: orthogonality between levels
    # is only as good as the residual, and the contract bound is loose when
    # |T| ~ 2/h^2 dominates the eigenvalue
    floor = 100.0 * np.finfo(float).eps * scale

    rng = np.random.default_rng(0x5EED)
    v = np.ones(n) + 1e-3 * rng.standard_normal(n)
    v /= np.linalg.norm(v)

    best, best_residual = None, np.inf
    for attempt in range(2):
        if attempt == 1:
            if not orthogonalize_against:
                break
            v = rng.standard_normal(n)
            for w in orthogonalize_against:
                v -= (w @ v) / (w @ w) * w
            v /= np.linalg.norm(v)
        for _ in range(MAX_INVERSE_ITER):
            try:
                v = solve_banded((1, 1), ab, v)
            except np.linalg.LinAlgError:
                ab[1, :] += INVERSE_ITER_SHIFT * max(norm, 1.0)
                v = solve_banded((1, 1), ab, v)
            v /= np.linalg.norm(v)
            residual = np.linalg.norm(T.matvec(v) - energy * v)
            if residual < best_residual:
                best, best_residual = v, residual
            if residual <= floor:
                break
        if best_residual <= accept:
            return _apply_sign_convention(best)
    raise EigensolverError(
        f"inverse iteration stalled: residual {best_residual:.3e} > {accept:.3e} "
        f"at energy {energy!r} (n={n})")


def eigenpairs(T: TridiagonalOperator, n_max: int) -> list[EigenPair]:
    """Lowest n_max eigenpairs with both normalizations attached."""
    energies = lowest_eigenvalues(T, n_max)
    if energies.size > 1 and np.any(np.diff(energies) < 1e-9 * np.maximum(1.0, np.abs(energies[:-1]))):
        raise EigensolverError(
            "near-degenerate eigenvalues: the fiber spectrum is simple, "
            "refine the grid spacing")
    pairs = []
    found: list[np.ndarray] = []
    for idx, lam in enumerate(energies):
        v = eigenvector(T, lam, orthogonalize_against=found)
        found.append(v)
        if T.grid is not None:
            h = T.grid.h
            g = v / np.sqrt(h)                  # sum g^2 h = 1
            psi = g / np.sqrt(T.grid.nodes)     # sum psi^2 r h = 1
        else:
            g = v
            psi = None
        pairs.append(EigenPair(n=idx + 1, energy=float(lam), g=g, psi=psi,
                               m=T.m, grid=T.grid))
    return pairs
