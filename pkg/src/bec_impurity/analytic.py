"""Closed-form reference results.

Homogeneous-gas damping rate, Fourier transform of the impurity potential,
the Landau-type bound for a trapped particle and the delta-kick toy model of
the coherent heating after the sound round trip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlation import DampingKernel


def vtilde(k, strength: float, range_: float):
    """3D Fourier transform of V0 (1 + r^2/a^2)^-2: pi^2 V0 a^3 exp(-k a)."""
    k = np.asarray(k, dtype=float)
    return math.pi ** 2 * strength * range_ ** 3 * np.exp(-k * range_)


def bogoliubov_k(omega, mu: float, m: float = 1.0):
    """Wavenumber of the Bogoliubov mode with energy ``omega`` (hbar = 1)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    # sqrt(w^2 + mu^2) - mu written without cancellation
    excess = omega ** 2 / (np.sqrt(omega ** 2 + mu ** 2) + mu)
    return np.sqrt(2.0 * m * excess)


@dataclass(frozen=True)
class HomogeneousParams:
    """Uniform gas of density mu/g seen by the impurity.

    ``prefactor`` is the constant C in ``gamma = C k^5 |V(k)|^2 / (w sqrt(w^2+mu^2))``
    for the amplitude damping rate in the conventions of this package
    (``mu / (24 pi M g)``, m = hbar = 1). ``printed_prefactor`` keeps the
    alternative normalization ``mu / (12 M N g pi^2)`` for reference; it
    differs from ``prefactor`` by the factor ``2 / (pi N)``.
    """

    mu: float
    mass_ratio: float
    atom_number: int
    coupling: float
    strength: float
    range_: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    @property
    def density(self) -> float:
        return self.mu / self.coupling

    @property
    def prefactor(self) -> float:
        return self.mu / (24.0 * math.pi * self.mass_ratio * self.coupling)

    @property
    def printed_prefactor(self) -> float:
        return self.mu / (12.0 * self.mass_ratio * self.atom_number * self.coupling
                          * math.pi ** 2)

    @classmethod
    def from_params(cls, params, mu: float) -> "HomogeneousParams":
        return cls(mu, params.mass_ratio, params.atom_number, params.coupling,
                   params.interaction_strength, params.interaction_range)


def homogeneous_spectral_density(omega, hp: HomogeneousParams, vt=None):
    """J(w) = n k^5 |V(k)|^2 / (12 pi^2 sqrt(w^2 + mu^2)) for the uniform gas.

    ``vt`` optionally replaces the Fourier transform of the potential
    (callable of k).
    """
    omega = np.asarray(omega, dtype=float)
    k = bogoliubov_k(omega, hp.mu)
    v = vtilde(k, hp.strength, hp.range_) if vt is None else vt(k)
    return hp.density * k ** 5 * v ** 2 / (12.0 * math.pi ** 2
                                           * np.sqrt(omega ** 2 + hp.mu ** 2))


def homogeneous_rate(omega, hp: HomogeneousParams, vt=None):
    """Amplitude damping rate of an impurity oscillating at ``omega`` in a uniform gas."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    k = bogoliubov_k(omega, hp.mu)
    v = vtilde(k, hp.strength, hp.range_) if vt is None else vt(k)
    return hp.prefactor * k ** 5 * v ** 2 / (omega * np.sqrt(omega ** 2 + hp.mu ** 2))


def loglog_slope(omega, values) -> float:
    """Least-squares slope of log(values) against log(omega)."""
    slope, _ = np.polyfit(np.log(omega), np.log(values), 1)
    return float(slope)


def landau_bound(mu: float, mass_ratio: float) -> float:
    """Frequency below which damping of a trapped particle is suppressed: 2 (M/m) mu."""
    return 2.0 * mass_ratio * mu


# --- coherent heating toy model -------------------------------------------------

@dataclass(frozen=True)
class ToyModelParams:
    """Instantaneous damping ``gamma1`` plus a single delayed return ``gamma2``.

    ``q0`` and ``v0`` are the initial position and velocity of the impurity.
    """

    gamma1: float
    gamma2: float
    t_ret: float
    omega: float
    q0: float = 1.0
    v0: float = 0.0

    def __post_init__(self):
        if self.gamma1 < 0:
            raise ValueError("gamma1 must be non-negative")
        if not self.t_ret > 0:
            raise ValueError("t_ret must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


def toy_prefactor(tp: ToyModelParams) -> float:
    """q0 cos(w T) - (v0/w) sin(w T): negative means heating."""
    phase = tp.omega * tp.t_ret
    return tp.q0 * math.cos(phase) - tp.v0 / tp.omega * math.sin(phase)


def toy_delay_solution(tp: ToyModelParams, t):
    """Slowly varying amplitude of the delta-kick model on [0, 2 T_ret].

    ``q0 exp(-g1 t)`` up to T_ret; afterwards the returned energy adds
    ``-g2 P exp(-g1 (t - T)) (t - T)`` with P from :func:`toy_prefactor`.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 2.0 * tp.t_ret * (1 + 1e-12)):
        raise ValueError(f"t must lie in [0, 2 T_ret] = [0, {2 * tp.t_ret:.6g}]")
    out = tp.q0 * np.exp(-tp.gamma1 * t)
    late = t > tp.t_ret
    if tp.gamma2 != 0 and np.any(late):
        d = t[late] - tp.t_ret
        out[late] -= tp.gamma2 * toy_prefactor(tp) * np.exp(-tp.gamma1 * d) * d
    return out


def heating_sign(tp: ToyModelParams, atol: float = 1e-12) -> str:
    p = toy_prefactor(tp)
    if abs(p) < atol:
        return "neutral"
    return "heating" if p < 0 else "cooling"


def _pulse(tau, width, one_sided):
    """Unit-area gaussian pulse; the one-sided version lives on tau >= 0."""
    if one_sided:
        return np.where(tau >= 0, 2.0 / (width * math.sqrt(2 * math.pi))
                        * np.exp(-0.5 * (tau / width) ** 2), 0.0)
    return np.exp(-0.5 * (tau / width) ** 2) / (width * math.sqrt(2 * math.pi))


def toy_kernel(tp: ToyModelParams, t_max: float, dt: float,
               width: float = 0.01) -> DampingKernel:
    """Damping kernel realizing the toy model in the memory equation.

    ``Gamma = 2 g1 p+(tau) + 2 g2 p(tau - T)`` with unit-area gaussian pulses of
    rms ``width`` (one-sided at the origin). Averaged over the fast
    oscillation this reproduces :func:`toy_delay_solution`.
    """
    tau = np.arange(0.0, t_max + 0.5 * dt, dt)
    values = 2.0 * tp.gamma1 * _pulse(tau, width, True) \
        + 2.0 * tp.gamma2 * _pulse(tau - tp.t_ret, width, False)
    return DampingKernel(tau, values, anchoring="closed form")


def markov_kernel(gamma: float, t_max: float, dt: float,
                  width: float = 0.01) -> DampingKernel:
    """``2 gamma`` times a one-sided unit pulse: amplitude decay rate ``gamma``."""
    tau = np.arange(0.0, t_max + 0.5 * dt, dt)
    return DampingKernel(tau, 2.0 * gamma * _pulse(tau, width, True),
                         anchoring="closed form")
