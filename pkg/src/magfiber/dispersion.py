"""Dispersion curves: momentum sweeps, thresholds and asymptotic laws.

A dispersion curve is the n-th eigenvalue of the fiber operator as a
function of momentum p.  The curves are real analytic, strictly positive,
and strictly ordered in n; their infima over p are the spectral thresholds
of the corresponding axial Hamiltonians.

Asymptotics encoded here (and checked by the test suite):

* p -> +infinity: every curve grows like p^2.
* p -> -infinity: the curve approaches (2n-1) * b(rho_k) where rho_k is the
  well-center radius for k = -p.  Depending on the field tail this limit is
  0 (decaying field), the constant Landau value (2n-1) * b0 (field with a
  finite limit), or +infinity (growing field).
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .eigensolver import eigenpairs, lowest_eigenvalues
from .errors import GridCapWarning
from .fields import POWER_LAW, FieldProfile, field_strength, well_center
from .operator import RadialGrid, discretize, recommend_grid

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class DispersionCurve:
    """lambda_{n,m} sampled on a momentum grid, with its eigenfunction bank."""

    m: int
    n: int
    p: np.ndarray
    energies: np.ndarray
    psi: np.ndarray | None      # (len(p), N) sign-continuous, L^2(r dr)-normalized
    grid: RadialGrid
    grid_capped: bool = False

    def __post_init__(self):
        if np.any(self.energies <= 0):
            raise ValueError("fiber eigenvalues must be positive")


@dataclass(frozen=True)
class LevelThreshold:
    n: int
    energy: float
    attained: bool
    argmin_p: float | None
    advisory: str | None = None


@dataclass(frozen=True)
class ThresholdReport:
    """Per-level spectral thresholds for one magnetic quantum number."""

    m: int
    E_m: float
    per_n: tuple[LevelThreshold, ...]

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "E_m": self.E_m,
            "per_n": [
                {"n": t.n, "E": t.energy, "attained": t.attained,
                 "argmin_p": t.argmin_p}
                for t in self.per_n
            ],
        }


@dataclass(frozen=True)
class AsymptoticsReport:
    """Classification of the left tail of a dispersion curve (and optionally
    the ratio lambda/p^2 on the right tail)."""

    m: int
    n: int
    k: np.ndarray
    energies: np.ndarray
    left_law: str                       # "to_zero" | "landau" | "to_infinity"
    left_limit_fit: float
    residuals: dict
    hypotheses_verified: bool
    below_constant_limit: bool | None = None
    grid_capped: bool = False
    right_p: np.ndarray | None = None
    right_ratio: np.ndarray | None = None


def _solve_fiber(field_, grid, m, p, n_max, want_psi):
    T = discretize(field_, grid, m, p)
    if want_psi:
        pairs = eigenpairs(T, n_max)
        lams = np.array([pr.energy for pr in pairs])
        psis = np.stack([pr.psi for pr in pairs])
        return lams, psis
    return lowest_eigenvalues(T, n_max), None


def sweep(field_: FieldProfile, m: int, n_max: int, p_grid: np.ndarray,
          grid_policy: str | RadialGrid = "auto", keep_psi: bool = True,
          workers: int = 1) -> list[DispersionCurve]:
    """Solve the fiber problem on every momentum sample.

    Under the "auto" policy a single grid is recommended for the whole
    momentum range, so all samples share nodes and the eigenfunction bank is
    directly comparable across p; the bank's signs are then fixed so that
    adjacent columns overlap positively.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    if p_grid.ndim != 1 or p_grid.size < 1 or np.any(np.diff(p_grid) <= 0):
        raise ValueError("p_grid must be a strictly increasing 1-d array")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")

    capped = False
    if isinstance(grid_policy, RadialGrid):
        grid = grid_policy
    elif grid_policy == "auto":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GridCapWarning)
            grid = recommend_grid(field_, m, (p_grid[0], p_grid[-1]), n_max)
        capped = any(issubclass(w.category, GridCapWarning) for w in caught)
    else:
        raise ValueError(f"grid_policy must be 'auto' or a RadialGrid, got {grid_policy!r}")

    solve = lambda p: _solve_fiber(field_, grid, m, p, n_max, keep_psi)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, p_grid))
    else:
        results = [solve(p) for p in p_grid]

    energies = np.array([lams for lams, _ in results])          # (n_p, n_max)
    banks = None
    if keep_psi:
        banks = np.stack([psis for _, psis in results], axis=1)  # (n_max, n_p, N)
        w = grid.nodes * grid.h
        for bank in banks:                   # enforce sign continuity along p
            for j in range(1, bank.shape[0]):
                if float(bank[j - 1] @ (bank[j] * w)) < 0:
                    bank[j] = -bank[j]

    curves = []
    for i in range(n_max):
        curves.append(DispersionCurve(
            m=int(m), n=i + 1, p=p_grid, energies=energies[:, i],
            psi=banks[i] if keep_psi else None, grid=grid, grid_capped=capped))
    return curves


def _parabolic_min(p3: np.ndarray, y3: np.ndarray) -> tuple[float, float, float]:
    """Vertex of the parabola through three points; returns (p*, y*, curvature)."""
    coeffs = np.polyfit(p3, y3, 2)
    a, b, c = coeffs
    if a <= 0:
        return float(p3[1]), float(y3[1]), float(2 * a)
    p_star = -b / (2 * a)
    y_star = c - b * b / (4 * a)
    return float(p_star), float(y_star), float(2 * a)


def thresholds(curves: list[DispersionCurve]) -> ThresholdReport:
    """Per-level infima over the sweep, refined parabolically when interior."""
    if not curves:
        raise ValueError("need at least one curve")
    m = curves[0].m
    if any(c.m != m for c in curves):
        raise ValueError("all curves must share the magnetic quantum number")

    per_n = []
    for c in sorted(curves, key=lambda c: c.n):
        j = int(np.argmin(c.energies))
        if 0 < j < c.p.size - 1:
            p_star, y_star, curv = _parabolic_min(c.p[j - 1:j + 2], c.energies[j - 1:j + 2])
            attained = curv > 0
            per_n.append(LevelThreshold(n=c.n, energy=min(y_star, float(c.energies[j])),
                                        attained=attained, argmin_p=p_star))
        else:
            per_n.append(LevelThreshold(
                n=c.n, energy=float(c.energies[j]), attained=False, argmin_p=None,
                advisory="infimum at sweep boundary; extend sweep"))
    return ThresholdReport(m=m, E_m=per_n[0].energy, per_n=tuple(per_n))


def _fit_tail(k, y, scale):
    """Least-squares fits of the tail against the three limit laws."""
    resid = {}
    # scaled law: y = c * scale(k), meaningful when scale is monotone
    c = float(np.dot(y, scale) / np.dot(scale, scale))
    resid_scaled = float(np.linalg.norm(y - c * scale) / np.linalg.norm(y))
    trend = scale[-1] / scale[0]
    resid["to_zero"] = resid_scaled if trend < 0.8 else np.inf
    resid["to_infinity"] = resid_scaled if trend > 1.25 else np.inf
    # constant law with the known 1/k^2 approach rate
    A = np.column_stack([np.ones_like(k), k ** -2.0])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    resid["landau"] = (float(np.linalg.norm(y - fit) / np.linalg.norm(y))
                       if coef[0] > 0 else np.inf)
    return resid, float(coef[0]), c


def classify_left_asymptotics(field_: FieldProfile, m: int, n: int,
                              k_list: np.ndarray,
                              p_list_right: np.ndarray | None = None) -> AsymptoticsReport:
    """Evaluate lambda_{n,m}(-k) along k_list and classify the limit law.

    Each k gets its own recommended grid (the well drifts outward).  If the
    node cap truncates a grid, the corresponding samples are excluded from
    the fit and the report is flagged.
    """
    k_arr = np.asarray(k_list, dtype=float)
    if k_arr.size < 4 or np.any(np.diff(k_arr) <= 0):
        raise ValueError("k_list must be increasing with at least 4 entries")

    energies, usable = [], []
    capped_any = False
    for k in k_arr:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GridCapWarning)
            grid = recommend_grid(field_, m, (-k, -k), n)
        capped = any(issubclass(w.category, GridCapWarning) for w in caught)
        capped_any = capped_any or capped
        lam = lowest_eigenvalues(discretize(field_, grid, m, -k), n)[n - 1]
        energies.append(float(lam))
        usable.append(not capped)
    energies = np.array(energies)
    usable = np.array(usable)

    k_fit = k_arr[usable][-4:]
    y_fit = energies[usable][-4:]
    if k_fit.size < 3:
        raise ValueError("grid cap left fewer than 3 usable samples; reduce k_list")
    scale = (2 * n - 1) * np.array([field_strength(field_, well_center(field_, k))
                                    for k in k_fit])
    resid, landau_limit, scale_coef = _fit_tail(k_fit, y_fit, scale)
    law = min(resid, key=resid.get)
    limit = {"to_zero": 0.0, "landau": landau_limit, "to_infinity": np.inf}[law]

    below = None
    if field_.kind == POWER_LAW and field_.delta == 0.0 and m == 0:
        below = bool(np.all(energies < (2 * n - 1) * field_.b0))

    right_p = right_ratio = None
    if p_list_right is not None:
        right_p = np.asarray(p_list_right, dtype=float)
        right_ratio = large_p_ratios(field_, m, n, right_p)

    return AsymptoticsReport(
        m=int(m), n=int(n), k=k_arr, energies=energies, left_law=law,
        left_limit_fit=limit, residuals=resid,
        hypotheses_verified=field_.kind == POWER_LAW and not field_.experimental,
        below_constant_limit=below, grid_capped=capped_any,
        right_p=right_p, right_ratio=right_ratio)


def large_p_ratios(field_: FieldProfile, m: int, n: int,
                   p_list: np.ndarray) -> np.ndarray:
    """lambda_{n,m}(p) / p^2 sampled on a positive momentum list."""
    p_arr = np.asarray(p_list, dtype=float)
    if np.any(p_arr <= 0):
        raise ValueError("right-tail ratios are defined for positive momenta")
    out = np.empty_like(p_arr)
    for i, p in enumerate(p_arr):
        grid = recommend_grid(field_, m, (p, p), n)
        out[i] = lowest_eigenvalues(discretize(field_, grid, m, p), n)[n - 1] / p ** 2
    return out


def find_local_minima(curve: DispersionCurve) -> list[tuple[float, float]]:
    """All interior local minima of a sampled curve, refined parabolically."""
    y = curve.energies
    minima = []
    for j in range(1, y.size - 1):
        if y[j] < y[j - 1] and y[j] <= y[j + 1]:
            p_star, y_star, curv = _parabolic_min(curve.p[j - 1:j + 2], y[j - 1:j + 2])
            if curv > 0:
                minima.append((p_star, min(y_star, float(y[j]))))
    return minima


def write_curve_csv(curve: DispersionCurve, path) -> None:
    """CSV export with header ``p,n,m,lambda``."""
    with open(path, "w") as fh:
        fh.write("p,n,m,lambda\n")
        for p, lam in zip(curve.p, curve.energies):
            fh.write(f"{FLOAT_FMT % p},{curve.n},{curve.m},{FLOAT_FMT % lam}\n")


def write_threshold_json(report: ThresholdReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
