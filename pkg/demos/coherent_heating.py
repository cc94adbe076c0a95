"""
Coherent heating from a single delayed return
=============================================

A kernel made of an instantaneous part and one echo at the return time.
Depending on the phase accumulated over one round trip the echo either
pumps energy back into the oscillator or removes more of it.
"""

import math

import numpy as np

from bec_impurity import analytic, dynamics

t_ret = math.sqrt(2.0) * math.pi

# %%
# Sign of the echo for a few trap frequencies, starting from rest at Q = 1.
for omega in (13.0, 14.0, 15.0, 16.0):
    tp = analytic.ToyModelParams(0.05, 0.1, t_ret, omega, q0=1.0, v0=0.0)
    print(f"Omega = {omega:4.1f}: prefactor {analytic.toy_prefactor(tp):+.3f} "
          f"-> {analytic.heating_sign(tp)}")

# %%
# The same model as a regularized kernel in the memory equation. The slow
# amplitude of the numerical trajectory follows the closed form.
tp = analytic.ToyModelParams(0.05, 0.1, t_ret, 15.0, q0=1.0, v0=0.0)
kernel = analytic.toy_kernel(tp, 2 * t_ret + 0.1, 1e-3)
traj = dynamics.solve_memory_oscillator(kernel, tp.omega, tp.q0, tp.v0, dt=1e-3,
                                        t_final=2 * t_ret)
keep = traj.times <= 2 * t_ret
numeric = dynamics.slow_amplitude(traj)[keep].real
closed = analytic.toy_delay_solution(tp, traj.times[keep])
for t in np.linspace(0, 2 * t_ret, 9):
    i = min(np.searchsorted(traj.times[keep], t), keep.sum() - 1)
    print(f"t = {traj.times[i]:6.3f}  numeric {numeric[i]:+.4f}  closed form {closed[i]:+.4f}")
