"""Wave-packet evolution on a single dispersion branch.

A packet is a momentum profile f(p) supported inside one monotonicity
interval of the group velocity (an interval between consecutive zeros of
lambda'').  Its field at time t is the oscillatory spectral integral

    u(r, x3, t) = (2 pi)^-1/2 * int e^{i p x3 - i lambda(p) t} psi(r, p) f(p) dp,

evaluated here by direct trapezoid quadrature over the sweep's momentum
samples.  For large |t| the integral concentrates on the stationary point
lambda'(p) = gamma with gamma = x3 / t, giving the closed-form asymptotics

    u ~ tau e^{i Phi(gamma) t} psi(r, nu(gamma)) |lambda''(nu)|^(-1/2)
        f(nu(gamma)) chi(gamma) |t|^(-1/2),

with nu the inverse group-velocity map, Phi(gamma) = nu gamma - lambda(nu),
tau = exp(-/+ i pi sgn(lambda'')/4) for t -> +/-infinity, and chi the
indicator of the velocity window (alpha, beta) spanned on the interval.
Outside the window the true field decays faster than any power; at the
window edges the amplitude degenerates, so a configurable band around them
is masked rather than evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .dispersion import DispersionCurve
from .errors import PhaseResolutionError

FLOAT_FMT = "%.17g"
SNAPSHOT_MAGIC = b"MSWP0001"
METHOD_CODES = {"quadrature": 1.0, "stationary_phase": 2.0}
PHASE_RESOLUTION_LIMIT = np.pi / 4   # max |dPhi/dp| * dp allowed in quadrature
DEFAULT_T_MIN = 50.0
DEFAULT_EDGE_BAND = 0.02             # masked band near velocity-window edges
GAUSSIAN_SUPPORT_SIGMAS = 4.0        # hard truncation of the default profile
INTERVAL_MARGIN_STEPS = 2


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    return w


@dataclass(frozen=True)
class WavePacketSpec:
    """Momentum profile living strictly inside one group-velocity interval."""

    n: int
    m: int
    f: np.ndarray                     # complex amplitudes on the sweep's p grid
    support: tuple[float, float]
    interval_id: int
    interval: tuple[float, float]

    def norm(self, p: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(self.f) ** 2 * trapezoid_weights(p))))


@dataclass(frozen=True)
class EvolutionField:
    """u(r, x3) at one time, with the quadrature weights of both axes."""

    t: float
    n: int
    m: int
    r: np.ndarray
    r_weights: np.ndarray             # include the r dr measure
    x3: np.ndarray
    values: np.ndarray                # (len(r), len(x3)) complex
    method: str
    mask: np.ndarray | None = None    # True where stationary phase was masked

    @property
    def gamma_grid(self) -> np.ndarray:
        if self.t == 0:
            raise ValueError("gamma = x3/t is undefined at t = 0")
        return self.x3 / self.t

    def x3_density(self) -> np.ndarray:
        """|u|^2 integrated over r, as a function of x3."""
        return np.einsum("i,ij->j", self.r_weights, np.abs(self.values) ** 2)

    def norm(self) -> float:
        dens = self.x3_density()
        return float(np.sqrt(np.sum(dens * trapezoid_weights(self.x3))))

    def mass_fraction_x3(self, predicate) -> float:
        """Fraction of the squared norm at x3 samples where predicate holds."""
        dens = self.x3_density() * trapezoid_weights(self.x3)
        total = dens.sum()
        return float(dens[predicate(self.x3)].sum() / total)

    def mass_beyond_radius(self, r_loc: float) -> float:
        w = np.where(self.r > r_loc, self.r_weights, 0.0)
        outer = np.einsum("i,ij->j", w, np.abs(self.values) ** 2)
        total = self.x3_density()
        wx = trapezoid_weights(self.x3)
        return float(np.sum(outer * wx) / np.sum(total * wx))


def detect_intervals(curve: DispersionCurve) -> list[tuple[float, float]]:
    """Split the sweep range at the zeros of lambda''.

    Zeros are bracketed by sign changes of the discrete second difference
    and refined by bisection on its piecewise-linear interpolant.  If no
    zero is found the whole sweep range is a single interval.
    """
    p, y = curve.p, curve.energies
    if p.size < 5:
        return [(float(p[0]), float(p[-1]))]
    d2 = np.gradient(np.gradient(y, p), p)
    inner = slice(1, p.size - 1)  # gradient endpoints are first-order, skip them
    pi, d2i = p[inner], d2[inner]

    zeros = []
    for j in range(d2i.size - 1):
        if d2i[j] == 0.0:
            zeros.append(float(pi[j]))
        elif np.sign(d2i[j]) != np.sign(d2i[j + 1]):
            lo, hi = pi[j], pi[j + 1]
            f_lo = d2i[j]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                f_mid = np.interp(mid, pi, d2i)
                if np.sign(f_mid) == np.sign(f_lo):
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
            zeros.append(float(0.5 * (lo + hi)))

    edges = [float(p[0])] + zeros + [float(p[-1])]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def gaussian_packet(curve: DispersionCurve, p0: float, sigma: float,
                    interval_id: int | None = None) -> WavePacketSpec:
    """Gaussian profile exp(-(p-p0)^2 / 2 sigma^2), hard-truncated at
    +-GAUSSIAN_SUPPORT_SIGMAS * sigma, placed inside one velocity interval."""
    intervals = detect_intervals(curve)
    if interval_id is None:
        interval_id = next((i for i, (lo, hi) in enumerate(intervals)
                            if lo <= p0 <= hi), None)
        if interval_id is None:
            raise ValueError(f"p0={p0} outside the sweep range")
    lo, hi = intervals[interval_id]

    half = GAUSSIAN_SUPPORT_SIGMAS * sigma
    step = float(np.max(np.diff(curve.p)))
    margin = INTERVAL_MARGIN_STEPS * step
    if p0 - half < lo + margin or p0 + half > hi - margin:
        raise ValueError(
            f"support [{p0 - half:.4g}, {p0 + half:.4g}] must sit inside the "
            f"velocity interval ({lo:.4g}, {hi:.4g}) with a {margin:.4g} margin; "
            "shrink sigma or move p0")

    f = np.exp(-((curve.p - p0) ** 2) / (2 * sigma ** 2)).astype(complex)
    f[np.abs(curve.p - p0) > half] = 0.0
    if not np.any(f != 0):
        raise ValueError("profile vanished: sweep grid too coarse for sigma")
    return WavePacketSpec(n=curve.n, m=curve.m, f=f,
                          support=(p0 - half, p0 + half),
                          interval_id=int(interval_id), interval=(lo, hi))


@dataclass(frozen=True)
class StationaryPhaseData:
    """Inverse group-velocity map and phase data on one interval."""

    interval: tuple[float, float]
    alpha: float                       # group velocity at the left endpoint
    beta: float                        # group velocity at the right endpoint
    curvature_sign: float              # sign of lambda'' inside the interval
    _energy: CubicSpline = dc_field(repr=False, default=None)
    _p_fine: np.ndarray = dc_field(repr=False, default=None)
    _v_fine: np.ndarray = dc_field(repr=False, default=None)

    @property
    def gamma_window(self) -> tuple[float, float]:
        return (min(self.alpha, self.beta), max(self.alpha, self.beta))

    def chi(self, gamma: np.ndarray) -> np.ndarray:
        lo, hi = self.gamma_window
        return (gamma > lo) & (gamma < hi)

    def nu(self, gamma: np.ndarray) -> np.ndarray:
        """Solve lambda'(nu) = gamma on the interval (monotone there)."""
        g = np.asarray(gamma, dtype=float)
        asc = self._v_fine[-1] > self._v_fine[0]
        v = self._v_fine if asc else self._v_fine[::-1]
        q = self._p_fine if asc else self._p_fine[::-1]
        nu = np.interp(g, v, q)
        d1, d2 = self._energy.derivative(1), self._energy.derivative(2)
        for _ in range(3):  # Newton polish; curvature is bounded away from 0 off-edge
            curv = d2(nu)
            safe = np.abs(curv) > 1e-14
            nu = np.where(safe, nu - (d1(nu) - g) / np.where(safe, curv, 1.0), nu)
            nu = np.clip(nu, self.interval[0], self.interval[1])
        return nu

    def phase(self, gamma: np.ndarray) -> np.ndarray:
        nu = self.nu(gamma)
        return nu * np.asarray(gamma) - self._energy(nu)

    def inv_sqrt_curvature(self, gamma: np.ndarray) -> np.ndarray:
        curv = self._energy.derivative(2)(self.nu(gamma))
        return np.abs(curv) ** -0.5

    def tau(self, t: float) -> complex:
        sign = self.curvature_sign if t >= 0 else -self.curvature_sign
        return np.exp(-1j * np.pi * sign / 4.0)


def build_stationary_phase(curve: DispersionCurve,
                           interval: tuple[float, float]) -> StationaryPhaseData:
    """Fit the phase/velocity interpolants of one interval of a sweep."""
    lo, hi = float(interval[0]), float(interval[1])
    if not (curve.p[0] - 1e-12 <= lo < hi <= curve.p[-1] + 1e-12):
        raise ValueError("interval outside the sweep range")
    cs = CubicSpline(curve.p, curve.energies)
    p_fine = np.linspace(lo, hi, max(4 * curve.p.size, 1000))
    v_fine = cs.derivative(1)(p_fine)
    alpha, beta = float(v_fine[0]), float(v_fine[-1])
    mid_curv = float(cs.derivative(2)(0.5 * (lo + hi)))
    return StationaryPhaseData(interval=(lo, hi), alpha=alpha, beta=beta,
                               curvature_sign=float(np.sign(mid_curv)),
                               _energy=cs, _p_fine=p_fine, _v_fine=v_fine)


def _resolve_r(curve: DispersionCurve, r_grid):
    """Eigenfunction bank and r dr quadrature weights on the requested radii."""
    native_r = curve.grid.nodes
    if r_grid is None:
        bank = curve.psi
        weights = native_r * curve.grid.h
        return native_r, weights, bank
    r = np.asarray(r_grid, dtype=float)
    bank = np.empty((curve.psi.shape[0], r.size))
    for j in range(curve.psi.shape[0]):
        bank[j] = np.interp(r, native_r, curve.psi[j])
    return r, trapezoid_weights(r) * r, bank


def default_x3_grid(spec: WavePacketSpec, curve: DispersionCurve, t: float,
                    points_scale: float = 1.0) -> np.ndarray:
    """Uniform axial grid containing the velocity cone plus generous margins.

    The step resolves the beat frequencies of |u|^2 (bounded by the width of
    the momentum support), so trapezoid sums of the density are alias-free.
    """
    sel = spec.f != 0
    v = np.gradient(curve.energies, curve.p)[sel]
    cone_lo, cone_hi = min(v.min() * t, v.max() * t), max(v.min() * t, v.max() * t)
    p_lo, p_hi = spec.support
    width = max(p_hi - p_lo, 1e-6)
    prob = np.abs(spec.f[sel]) ** 2
    prob /= prob.sum()
    mean_p = float(prob @ curve.p[sel])
    sigma_eff = max(float(np.sqrt(prob @ (curve.p[sel] - mean_p) ** 2)), width / 16)
    pad = 0.2 * max(cone_hi - cone_lo, 1.0) + 8.0 / sigma_eff
    lo, hi = cone_lo - pad, cone_hi + pad
    step = (np.pi / (2.0 * width)) / points_scale
    count = int(np.ceil((hi - lo) / step)) + 1
    return np.linspace(lo, hi, count)


def evolve_quadrature(spec: WavePacketSpec, curve: DispersionCurve,
                      r_grid=None, x3_grid=None, t: float = 0.0) -> EvolutionField:
    """Direct trapezoid quadrature of the spectral integral at time t.

    Raises :class:`PhaseResolutionError` when the sweep's momentum spacing
    cannot resolve the total phase p*x3 - lambda(p)*t over the requested
    axial window.
    """
    if curve.psi is None:
        raise ValueError("curve was swept without eigenfunctions (keep_psi=False)")
    if x3_grid is None:
        x3_grid = default_x3_grid(spec, curve, t)
    x3 = np.asarray(x3_grid, dtype=float)

    sel = np.flatnonzero(spec.f != 0)
    p = curve.p
    w = trapezoid_weights(p)[sel]
    f = spec.f[sel]
    lam = curve.energies[sel]
    ps = p[sel]

    v = np.gradient(curve.energies, p)[sel]
    dp = float(np.max(np.diff(ps))) if ps.size > 1 else 0.0
    if dp > 0:
        phase_rate = max(abs(x3.min() - v.max() * t), abs(x3.min() - v.min() * t),
                         abs(x3.max() - v.max() * t), abs(x3.max() - v.min() * t))
        if phase_rate * dp > PHASE_RESOLUTION_LIMIT:
            required = PHASE_RESOLUTION_LIMIT / phase_rate
            raise PhaseResolutionError(
                f"momentum spacing {dp:.3g} too coarse: needs <= {required:.3g} "
                f"for |t| = {abs(t)} on this axial window; refine the sweep",
                required_spacing=required)

    r, r_weights, bank = _resolve_r(curve, r_grid)
    if sel.size and np.array_equal(sel, np.arange(sel[0], sel[-1] + 1)):
        B = bank[sel[0]:sel[-1] + 1]        # contiguous support: keep a view
    else:
        B = bank[sel]
    values = np.empty((r.size, x3.size), dtype=complex)
    amp = w * f * np.exp(-1j * lam * t)
    for j0 in range(0, x3.size, 1024):      # chunk x3 to bound the coef matrix
        j1 = min(j0 + 1024, x3.size)
        coef = amp[:, None] * np.exp(1j * np.outer(ps, x3[j0:j1]))
        # contiguous copies: BLAS refuses the strided real/imag views
        coef_re = np.ascontiguousarray(coef.real)
        coef_im = np.ascontiguousarray(coef.imag)
        values[:, j0:j1] = B.T @ coef_re + 1j * (B.T @ coef_im)
    values /= np.sqrt(2 * np.pi)
    return EvolutionField(t=float(t), n=spec.n, m=spec.m, r=r,
                          r_weights=r_weights, x3=x3, values=values,
                          method="quadrature")


def evolve_stationary_phase(spec: WavePacketSpec, curve: DispersionCurve,
                            sp: StationaryPhaseData, r_grid=None, x3_grid=None,
                            t: float = 100.0, t_min: float = DEFAULT_T_MIN,
                            edge_band: float = DEFAULT_EDGE_BAND) -> EvolutionField:
    """Leading-order stationary-phase field at time t (|t| >= t_min).

    Axial positions whose velocity gamma = x3/t falls outside the window
    (alpha, beta) are exactly zero; positions within ``edge_band`` times the
    window width of either edge are masked (the amplitude degenerates there).
    """
    if abs(t) < t_min:
        raise ValueError(f"|t| = {abs(t)} below the stationary-phase floor {t_min}")
    if curve.psi is None:
        raise ValueError("curve was swept without eigenfunctions (keep_psi=False)")
    if x3_grid is None:
        x3_grid = default_x3_grid(spec, curve, t)
    x3 = np.asarray(x3_grid, dtype=float)
    gamma = x3 / t

    lo, hi = sp.gamma_window
    band = edge_band * (hi - lo)
    inside = sp.chi(gamma)
    masked = inside & ((np.abs(gamma - lo) < band) | (np.abs(gamma - hi) < band))
    live = inside & ~masked

    r, r_weights, bank = _resolve_r(curve, r_grid)
    values = np.zeros((r.size, x3.size), dtype=complex)
    if np.any(live):
        g = gamma[live]
        nu = sp.nu(g)
        f_nu = np.interp(nu, curve.p, spec.f.real) + 1j * np.interp(nu, curve.p, spec.f.imag)
        amp = sp.inv_sqrt_curvature(g)
        phase = np.exp(1j * sp.phase(g) * t)
        # psi(r, nu): linear interpolation between neighbouring bank columns
        idx = np.clip(np.searchsorted(curve.p, nu) - 1, 0, curve.p.size - 2)
        theta = (nu - curve.p[idx]) / (curve.p[idx + 1] - curve.p[idx])
        psi_nu = bank[idx].T * (1 - theta) + bank[idx + 1].T * theta
        values[:, live] = (sp.tau(t) * psi_nu * (phase * amp * f_nu)
                           * abs(t) ** -0.5)
    return EvolutionField(t=float(t), n=spec.n, m=spec.m, r=r,
                          r_weights=r_weights, x3=x3, values=values,
                          method="stationary_phase", mask=masked)


def packet_localization_radius(spec: WavePacketSpec, curve: DispersionCurve,
                               quantile: float = 0.999) -> float:
    """Radius containing the given quantile of the packet's transverse mass."""
    w = trapezoid_weights(curve.p) * np.abs(spec.f) ** 2
    density_r = (w[:, None] * curve.psi ** 2).sum(axis=0)
    density_r *= curve.grid.nodes * curve.grid.h
    cum = np.cumsum(density_r) / density_r.sum()
    return float(curve.grid.nodes[np.searchsorted(cum, quantile)])


@dataclass(frozen=True)
class AsymptoticVelocityRow:
    t: float
    observed: float       # <Q(x3/t) u, u> by quadrature evolution
    spectral: float       # int Q(lambda'(p)) |f|^2 dp
    abs_diff: float


@dataclass(frozen=True)
class AsymptoticVelocityTable:
    rows: tuple[AsymptoticVelocityRow, ...]
    non_increasing_tail: bool

    def diffs(self) -> np.ndarray:
        return np.array([r.abs_diff for r in self.rows])


def asymptotic_velocity_check(spec: WavePacketSpec, curve: DispersionCurve,
                              Q, t_list, r_grid=None) -> AsymptoticVelocityTable:
    """Compare the position observable Q(x3/t) against its spectral limit.

    The spectral side multiplies |f|^2 by Q(group velocity); the observed
    side evolves the packet by quadrature and integrates Q against |u|^2.
    The absolute differences should shrink (up to plateaus) as t grows.
    """
    p, w = curve.p, trapezoid_weights(curve.p)
    v = np.gradient(curve.energies, p)
    spectral = float(np.sum(Q(v) * np.abs(spec.f) ** 2 * w))
    rows = []
    for t in t_list:
        field = evolve_quadrature(spec, curve, r_grid=r_grid, t=float(t))
        dens = field.x3_density() * trapezoid_weights(field.x3)
        observed = float(np.sum(Q(field.x3 / t) * dens))
        rows.append(AsymptoticVelocityRow(t=float(t), observed=observed,
                                          spectral=spectral,
                                          abs_diff=abs(observed - spectral)))
    diffs = [r.abs_diff for r in rows]
    tail_ok = all(diffs[i + 1] <= diffs[i] + 1e-12 for i in range(len(diffs) - 1))
    return AsymptoticVelocityTable(rows=tuple(rows), non_increasing_tail=tail_ok)


# ---------------------------------------------------------------------------
# snapshot export
# ---------------------------------------------------------------------------

def write_evolution_csv(field: EvolutionField, path) -> None:
    """CSV export with header ``t,x3,r,re_u,im_u`` (row-major over r, x3)."""
    with open(path, "w") as fh:
        fh.write("t,x3,r,re_u,im_u\n")
        t_s = FLOAT_FMT % field.t
        for i, r in enumerate(field.r):
            r_s = FLOAT_FMT % r
            row = field.values[i]
            for j, x in enumerate(field.x3):
                fh.write(f"{t_s},{FLOAT_FMT % x},{r_s},"
                         f"{FLOAT_FMT % row[j].real},{FLOAT_FMT % row[j].imag}\n")


def write_snapshot(field: EvolutionField, path) -> None:
    """Compact binary block: 8-byte magic, seven little-endian float64 header
    fields (N_r, N_x3, t, n, m, method code, reserved), then the complex
    field values as little-endian float64 pairs, row-major."""
    header = np.array([field.r.size, field.x3.size, field.t,
                       field.n, field.m, METHOD_CODES[field.method], 0.0],
                      dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())


def read_snapshot(path) -> dict:
    raw = Path(path).read_bytes()
    if raw[:8] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a wave-packet snapshot")
    header = np.frombuffer(raw, dtype="<f8", count=7, offset=8)
    n_r, n_x3 = int(header[0]), int(header[1])
    values = np.frombuffer(raw, dtype="<c16", offset=8 + 7 * 8,
                           count=n_r * n_x3).reshape(n_r, n_x3)
    method = {v: k for k, v in METHOD_CODES.items()}[float(header[5])]
    return {"t": float(header[2]), "n": int(header[3]), "m": int(header[4]),
            "method": method, "values": values.copy()}
