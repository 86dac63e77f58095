"""Dispersion curves of the radial fiber operators.

Three field families, same machinery:

  * constant field        b(r) = 1        (linear potential a = r)
  * inverse square root   b(r) = r^-1/2   (a = 2 sqrt(r))
  * straight-wire field   b(r) = 1/r      (a = log r)

For each one we sweep the lowest two levels of the m = 0 and m = 1 fibers
over momentum.  The right tails always climb like p^2; the left tails reveal
the field's strength at infinity: the constant field saturates at the Landau
values (2n-1) while the decaying fields slide to zero.  The constant-field
m = 0 curves dip below their left limit before climbing away, which is the
seed of every negative-velocity effect in the later demos.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import magfiber as mf

FAMILIES = [
    ("constant field", mf.power_law(1.0, 0.0)),
    ("b = r^-1/2", mf.power_law(1.0, 0.5)),
    ("wire field b = 1/r", mf.power_law(1.0, 1.0)),
]

fig, axes = plt.subplots(1, 3, figsize=(15, 4.5), sharey=False)

for ax, (label, field) in zip(axes, FAMILIES):
    p = np.linspace(-12.0, 4.0, 81)
    for m, style in ((0, "-"), (1, "--")):
        curves = mf.sweep(field, m, 2, p, grid_policy="auto", keep_psi=False)
        for c in curves:
            ax.plot(c.p, c.energies, style, label=f"m={m}, n={c.n}")
        report = mf.thresholds(curves)
        print(f"{label}, m={m}: threshold E_m = {report.E_m:.5f} "
              f"(attained={report.per_n[0].attained})")
    if label == "constant field":
        for n in (1, 2):
            ax.axhline(2 * n - 1, color="gray", lw=0.6, ls=":")
    ax.set_title(label)
    ax.set_xlabel("momentum p")
    ax.legend(fontsize=8)
axes[0].set_ylabel("fiber eigenvalue")

fig.tight_layout()
fig.savefig("dispersion_curves.png", dpi=140)
print("wrote dispersion_curves.png")
