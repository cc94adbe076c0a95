"""
Sound round trip in a trapped condensate
========================================

Ground state, injected perturbation and bath correlation function for a
small cloud on a coarse grid. The revival near sqrt(2) pi marks the sound
wave coming back from the edge of the cloud. Runs in a few seconds.
"""

import math

import numpy as np

from bec_impurity import correlation, gpe
from bec_impurity.params import PhysicalParams, thomas_fermi_scales

params = PhysicalParams(mass_ratio=10.0, atom_number=400_000, scattering_length=0.005,
                        interaction_range=1.0, interaction_strength=1.0,
                        bare_trap_frequency=15.0, epsilon=0.005)
mu_tf, r_tf = thomas_fermi_scales(params)
grid = gpe.build_grid(params, n=32)
psi0, mu, info = gpe.ground_state(params, grid)
print(f"ground state: mu = {mu:.3f} (Thomas-Fermi {mu_tf:.3f}) after {info['steps']} steps")

# %%
# Linear response of the condensate to a small displacement of the impurity.
t_ret = math.sqrt(2.0) * math.pi
series = correlation.correlation_series(psi0, mu, params, dt=2e-3, t_final=1.4 * t_ret)
onset = correlation.revival_onset(series)
print(f"revival onset {onset:.3f}, estimate sqrt(2) pi = {t_ret:.3f}")

# %%
# Coarse text trace of |Im alpha|, normalized to its early peak.
scale = np.max(np.abs(series.im_alpha[series.times < 1.0]))
for t in np.arange(0.0, 1.4 * t_ret, 0.25):
    v = abs(np.interp(t, series.times, series.im_alpha)) / scale
    print(f"{t:5.2f} {'*' * int(50 * min(v, 1.0))}")
