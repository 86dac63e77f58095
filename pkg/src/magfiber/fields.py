"""Magnetic field profiles b(r) with constant-direction axial potential.

The field lines are circles around the symmetry axis, with strength b(r)
depending only on the distance r to the axis.  The axial potential is the
antiderivative

    a(r) = gauge_c + integral of b,

which must be nondecreasing and unbounded (b > 0 enforces both for the
families handled here).  Adding a constant to a(r) is a pure gauge choice:
it shifts every dispersion curve in momentum without changing physics.

Two families are supported:

* power-law fields  b(r) = b0 * r**(-delta) with b0 > 0 and delta in [0, 1]:
  a(r) = gauge_c + b0 * r**(1-delta) / (1-delta)  for delta < 1, and
  a(r) = gauge_c + b0 * log(r)                    for delta = 1.
  delta = 0 is the constant field (linear potential), delta = 1 the field of
  a straight current-carrying wire on the axis.  delta < 0 (growing field)
  is accepted only behind ``experimental=True``: the toolkit's monotonicity
  guarantees are not re-verified for it.

* tabulated fields, loaded from "r,b" text files.  b is interpolated
  piecewise-linearly, so a(r) is its exact piecewise-quadratic integral and
  the identity a'(r) = b(r) holds exactly at the sample points, which the
  Feynman-Hellmann cross-checks rely on.

All functions are pure and accept scalar or array radii.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    BelowPotentialRangeError,
    FieldDomainError,
    InsufficientTableError,
)

POWER_LAW = "power_law"
TABULATED = "tabulated"


@dataclass(frozen=True)
class FieldProfile:
    """A cylindrically symmetric field b(r) > 0 and its axial potential.

    Use :func:`power_law`, :func:`tabulated` or :func:`load_field_table`
    rather than constructing directly.
    """

    kind: str
    b0: float = 1.0
    delta: float = 0.0
    gauge_c: float = 0.0
    table_r: np.ndarray | None = field(default=None, repr=False)
    table_b: np.ndarray | None = field(default=None, repr=False)
    monotone_potential: bool = True
    experimental: bool = False

    def with_gauge(self, gauge_c: float) -> "FieldProfile":
        """Same field with a different additive gauge constant."""
        return replace(self, gauge_c=float(gauge_c))

    @property
    def r_min(self) -> float:
        return 0.0 if self.kind == POWER_LAW else float(self.table_r[0])

    @property
    def r_max(self) -> float:
        return np.inf if self.kind == POWER_LAW else float(self.table_r[-1])

    def describe(self) -> dict:
        """JSON-friendly summary (used by the CLI manifest)."""
        if self.kind == POWER_LAW:
            return {"kind": self.kind, "b0": self.b0, "delta": self.delta,
                    "gauge_c": self.gauge_c}
        return {"kind": self.kind, "gauge_c": self.gauge_c,
                "n_samples": int(self.table_r.size),
                "r_range": [float(self.table_r[0]), float(self.table_r[-1])]}


def power_law(b0: float, delta: float, gauge_c: float = 0.0,
              experimental: bool = False) -> FieldProfile:
    """Field b(r) = b0 * r**(-delta)."""
    if b0 <= 0:
        raise FieldDomainError(f"field amplitude must be positive, got b0={b0}")
    if delta > 1:
        raise FieldDomainError(f"delta={delta} > 1 gives a bounded potential")
    if delta < 0 and not experimental:
        raise FieldDomainError(
            f"delta={delta} < 0 is outside the verified range [0, 1]; "
            "pass experimental=True to proceed without guarantees")
    return FieldProfile(kind=POWER_LAW, b0=float(b0), delta=float(delta),
                        gauge_c=float(gauge_c), experimental=delta < 0)


def tabulated(r: np.ndarray, b: np.ndarray, gauge_c: float = 0.0) -> FieldProfile:
    """Field given by sorted (r, b) samples, piecewise linear in b."""
    r = np.asarray(r, dtype=float)
    b = np.asarray(b, dtype=float)
    if r.ndim != 1 or r.shape != b.shape or r.size < 2:
        raise InsufficientTableError("need two 1-d arrays with >= 2 samples")
    if np.any(np.diff(r) <= 0):
        raise FieldDomainError("table radii must be strictly increasing")
    if r[0] < 0:
        raise FieldDomainError("table radii must be nonnegative")
    if np.any(b <= 0):
        raise FieldDomainError("field strength must be positive everywhere")
    return FieldProfile(kind=TABULATED, gauge_c=float(gauge_c),
                        table_r=r.copy(), table_b=b.copy(),
                        monotone_potential=True)


def load_field_table(path: str | Path, gauge_c: float = 0.0) -> FieldProfile:
    """Load a tabulated field from a two-column "r,b" text file.

    Lines starting with '#' are comments; columns may be separated by a
    comma or by whitespace.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise FieldDomainError(f"{path}:{lineno}: expected two columns, got {raw!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if len(rows) < 2:
        raise InsufficientTableError(f"{path}: fewer than two samples")
    arr = np.array(rows, dtype=float)
    return tabulated(arr[:, 0], arr[:, 1], gauge_c=gauge_c)


def _check_radii(field_: FieldProfile, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise FieldDomainError("radius must be positive")
    if field_.kind == TABULATED:
        if np.any(r < field_.table_r[0]) or np.any(r > field_.table_r[-1]):
            raise FieldDomainError(
                f"radius outside table range [{field_.table_r[0]}, {field_.table_r[-1]}]")
    return r


def field_strength(field_: FieldProfile, r) -> np.ndarray | float:
    """b(r)."""
    rr = _check_radii(field_, r)
    if field_.kind == POWER_LAW:
        out = field_.b0 * rr ** (-field_.delta)
    else:
        out = np.interp(rr, field_.table_r, field_.table_b)
    return out if np.ndim(r) else float(out)


def potential_a(field_: FieldProfile, r) -> np.ndarray | float:
    """Axial potential a(r), antiderivative of b plus the gauge constant.

    Power-law fields use the closed form; tabulated fields integrate the
    piecewise-linear b exactly (piecewise quadratic in r), anchored so that
    a(first table radius) = gauge_c.
    """
    rr = _check_radii(field_, r)
    if field_.kind == POWER_LAW:
        if field_.delta == 1.0:
            out = field_.gauge_c + field_.b0 * np.log(rr)
        else:
            e = 1.0 - field_.delta
            out = field_.gauge_c + field_.b0 * rr ** e / e
        return out if np.ndim(r) else float(out)

    tr, tb = field_.table_r, field_.table_b
    # cumulative trapezoid integral of b at the sample points
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (tb[1:] + tb[:-1]) * np.diff(tr))))
    j = np.clip(np.searchsorted(tr, rr, side="right") - 1, 0, tr.size - 2)
    dr = rr - tr[j]
    slope = (tb[j + 1] - tb[j]) / (tr[j + 1] - tr[j])
    out = field_.gauge_c + cum[j] + tb[j] * dr + 0.5 * slope * dr * dr
    return out if np.ndim(r) else float(out)


def well_center(field_: FieldProfile, k: float) -> float:
    """Greatest radius where a(r) = k.

    For momentum p = -k the effective potential (a(r) + p)^2 vanishes here,
    so this is where its outer well is centered.  Raises
    :class:`BelowPotentialRangeError` when no solution exists.
    """
    k = float(k)
    if field_.kind == POWER_LAW:
        excess = k - field_.gauge_c
        if field_.delta == 1.0:
            return float(np.exp(excess / field_.b0))
        if excess <= 0:
            raise BelowPotentialRangeError(
                f"a(r) = {k} has no positive solution (potential starts at {field_.gauge_c})")
        e = 1.0 - field_.delta
        return float((excess * e / field_.b0) ** (1.0 / e))

    tr = field_.table_r
    lo = tr[0] if tr[0] > 0 else tr[0] + 1e-30
    a_lo = potential_a(field_, lo) if tr[0] > 0 else field_.gauge_c
    a_hi = potential_a(field_, tr[-1])
    if not (a_lo <= k <= a_hi):
        raise BelowPotentialRangeError(
            f"a(r) = {k} unsolvable in table range (potential spans [{a_lo}, {a_hi}])")
    # b > 0 makes a strictly increasing, so the last monotone segment is the
    # whole table; plain bracketed bisection.
    lo_r, hi_r = float(tr[0]), float(tr[-1])
    for _ in range(100):
        mid = 0.5 * (lo_r + hi_r)
        if potential_a(field_, max(mid, 1e-300)) < k:
            lo_r = mid
        else:
            hi_r = mid
    return 0.5 * (lo_r + hi_r)


class FieldDerivatives:
    """Differential-geometric weights of a field used by the velocity formulas.

    * ``r_over_b(r)``: the weight tau(r) = r / b(r) converting the momentum
      derivative of the potential term into a radial derivative.
    * ``velocity_weight(r)``: v(r) = r * (r**-1 * (r/b)')' whose derivative
      multiplies psi^2 in the integration-by-parts velocity formula.
    * ``b_prime``, ``velocity_weight_prime``: first derivatives of b and v.
    * ``local_slope_bound(r)``: sup of |b'| over [r/2, 3r/2].

    Power-law fields use exact formulas; tabulated fields fall back to
    central differences with a step tied to the sample spacing and need at
    least 4 samples.
    """

    def __init__(self, field_: FieldProfile):
        if field_.kind == TABULATED and field_.table_r.size < 4:
            raise InsufficientTableError(
                "derived data needs >= 4 table samples for numerical derivatives")
        self.field = field_

    # -- exact in both representations -------------------------------------
    def r_over_b(self, r):
        return np.asarray(r, dtype=float) / field_strength(self.field, r)

    # -- power law: closed forms; tabulated: central differences ------------
    def _fd_step(self):
        # span ~10 samples: second differences of the piecewise-linear
        # interpolant only converge once the step averages over its kinks
        return 10.0 * float(np.median(np.diff(self.field.table_r)))

    def _stencil(self, rr, s):
        """Clamped three-point stencil (lo, mid, hi) inside the table.

        The step shrinks near the axis (never exceeding r/2) so that weights
        diverging like powers of 1/r stay resolved; below the table spacing
        the interpolant limits accuracy, but the values remain bounded.
        """
        f = self.field
        floor = max(float(f.table_r[0]), 1e-12)
        s_eff = np.clip(0.5 * rr, 0.05 * s, s)
        lo = np.maximum(rr - s_eff, floor)
        hi = np.minimum(rr + s_eff, float(f.table_r[-1]))
        mid = np.clip(rr, lo, hi)
        return lo, mid, hi

    def b_prime(self, r):
        f = self.field
        rr = np.asarray(r, dtype=float)
        if f.kind == POWER_LAW:
            out = -f.delta * f.b0 * rr ** (-f.delta - 1.0)
        else:
            lo, _, hi = self._stencil(rr, self._fd_step())
            out = (field_strength(f, hi) - field_strength(f, lo)) / (hi - lo)
        return out if np.ndim(r) else float(out)

    def velocity_weight(self, r):
        f = self.field
        rr = np.asarray(r, dtype=float)
        if f.kind == POWER_LAW:
            out = (f.delta ** 2 - 1.0) / f.b0 * rr ** (f.delta - 1.0)
        else:
            lo, mid, hi = self._stencil(rr, self._fd_step())
            d1, d2 = mid - lo, hi - mid
            d1 = np.maximum(d1, 1e-12)
            d2 = np.maximum(d2, 1e-12)
            w_lo, w_mid, w_hi = (self.r_over_b(lo), self.r_over_b(mid),
                                 self.r_over_b(hi))
            w1 = (w_hi - w_lo) / (d1 + d2)
            w2 = 2.0 * (d1 * w_hi - (d1 + d2) * w_mid + d2 * w_lo) / (d1 * d2 * (d1 + d2))
            out = w2 - w1 / mid  # r*(w'/r)' written out
        return out if np.ndim(r) else float(out)

    def velocity_weight_prime(self, r):
        f = self.field
        rr = np.asarray(r, dtype=float)
        if f.kind == POWER_LAW:
            out = (f.delta ** 2 - 1.0) * (f.delta - 1.0) / f.b0 * rr ** (f.delta - 2.0)
        else:
            lo, _, hi = self._stencil(rr, self._fd_step())
            out = (self.velocity_weight(hi) - self.velocity_weight(lo)) / (hi - lo)
        return out if np.ndim(r) else float(out)

    def local_slope_bound(self, r):
        f = self.field
        rr = np.asarray(r, dtype=float)
        if f.kind == POWER_LAW:
            # |b'| is a pure power, hence monotone: the sup sits at an endpoint
            lo, hi = np.abs(self.b_prime(0.5 * rr)), np.abs(self.b_prime(1.5 * rr))
            out = np.maximum(lo, hi)
        else:
            tr, tb = f.table_r, f.table_b
            slopes = np.abs(np.diff(tb) / np.diff(tr))

            def one(x):
                lo_i = np.searchsorted(tr, 0.5 * x, side="right") - 1
                hi_i = np.searchsorted(tr, 1.5 * x, side="left")
                lo_i = max(lo_i, 0)
                hi_i = min(max(hi_i, lo_i + 1), slopes.size)
                return slopes[lo_i:hi_i].max()

            out = np.vectorize(one)(rr)
        return out if np.ndim(r) else float(out)


def derived_data(field_: FieldProfile) -> FieldDerivatives:
    """Derived weights (r/b, velocity weight, slope bounds) for a field."""
    return FieldDerivatives(field_)
