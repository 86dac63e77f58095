"""Group velocities three ways, and where monotonicity fails.

The slope of a dispersion curve is computed by three estimators that share
nothing but the eigenfunction:

  * first-order perturbation theory (Feynman-Hellmann moment of psi^2),
  * an integration-by-parts representation built from the field's
    geometric weights (moments of psi'^2 and psi^2),
  * finite differences across neighbouring momenta.

Their mutual agreement (~1e-4 on these grids) is the toolkit's core
cross-check.  Sign certificates then summarize each curve: every m != 0
power-law curve climbs monotonically, the wire field is monotone even at
m = 0, but the constant field's m = 0 curve dips - a genuinely quantum
effect, since the corresponding classical drift never goes backward.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import magfiber as mf

harmonic = mf.power_law(1.0, 0.0)
wire = mf.power_law(1.0, 1.0)

print("three estimators on the constant field, m = 1, n = 1:")
grid = mf.velocity_grid(harmonic, 1, (-2.0, 2.0), 1)
rows = []
for p in (-2.0, -1.0, 0.0, 1.0, 2.0):
    e = mf.estimate(harmonic, 1, 1, p, grid=grid)
    rows.append(e)
    print(f"  p={p:+.1f}: fh={e.v_fh:+.6f}  ibp={e.v_ibp:+.6f}  "
          f"fd={e.v_fd:+.6f}  spread={e.agreement:.2e}")
mf.write_velocity_csv(rows, "velocities_m1.csv")

print("\nsign certificates (lowest level):")
for label, field, m, p_grid in [
        ("constant, m=1", harmonic, 1, np.linspace(-4, 4, 5)),
        ("wire,     m=0", wire, 0, np.linspace(-2, 2, 5)),
        ("constant, m=0", harmonic, 0, np.linspace(-6, 2, 9))]:
    cert = mf.sign_certificate(field, m, 1, p_grid)
    extra = f" at p* = {cert.p_star:.3f}" if cert.p_star is not None else ""
    print(f"  {label}: {cert.kind}{extra}")

# the non-monotone curve and its velocity
grid = mf.RadialGrid(R=32.0, N=6400)
curve = mf.sweep(harmonic, 0, 1, np.linspace(-20.0, 3.0, 161),
                 grid_policy=grid, keep_psi=False)[0]
minima = mf.find_local_minima(curve)
print(f"\nconstant-field m=0 minima: {[(round(p, 3), round(v, 4)) for p, v in minima]}")

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
ax1.plot(curve.p, curve.energies)
ax1.axhline(1.0, color="gray", lw=0.6, ls=":")
for p_star, lam in minima:
    ax1.plot([p_star], [lam], "rv")
ax1.set_ylabel("lowest eigenvalue")
v = [mf.velocity_fd(curve, j) for j in range(curve.p.size)]
ax2.plot(curve.p, v)
ax2.axhline(0.0, color="gray", lw=0.6)
ax2.set_ylabel("group velocity")
ax2.set_xlabel("momentum p")
fig.tight_layout()
fig.savefig("group_velocity.png", dpi=140)
print("wrote group_velocity.png and velocities_m1.csv")
