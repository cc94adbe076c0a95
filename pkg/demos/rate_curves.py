"""
Damping rate of a trapped impurity in a uniform gas
===================================================

Closed-form rate curve for the reference configuration, the low-frequency
power law and the quantum Landau bound. Runs in well under a second.
"""

import numpy as np

from bec_impurity import analytic
from bec_impurity.params import default_params, thomas_fermi_scales

params = default_params()
mu, r_tf = thomas_fermi_scales(params)
hp = analytic.HomogeneousParams.from_params(params, mu)
print(f"mu_TF = {mu:.2f}, R_TF = {r_tf:.2f}, g = {params.coupling:.4f}")

# The rate rises steeply from zero, peaks where the phonon wavelength is
# comparable to the interaction range, and falls off once k a >> 1.
omega = np.geomspace(0.5, 200.0, 25)
gamma = analytic.homogeneous_rate(omega, hp)
for w, g in zip(omega, gamma):
    bar = "#" * int(60 * g / gamma.max())
    print(f"{w:8.2f}  {g:10.4g}  {bar}")

# Deep in the phonon regime the rate follows Omega^4. A finite range bends
# the curve slightly, so the slope is shown for two ranges.
low = np.geomspace(1e-3, 1e-2, 40) * mu
for a in (0.5, 1.5):
    hp_a = analytic.HomogeneousParams.from_params(params.replace(interaction_range=a), mu)
    slope = analytic.loglog_slope(low, analytic.homogeneous_rate(low, hp_a))
    print(f"range a = {a}: log-log slope over [1e-3, 1e-2] mu = {slope:.3f}")

print(f"quantum Landau bound 2 M mu = {analytic.landau_bound(mu, params.mass_ratio):.1f}")
