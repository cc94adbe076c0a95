"""Bath correlation function from condensate dynamics.

The impurity couples to the gas through the force operator
``F = int dV/dR|_0 |Psi|^2``. Kicking the gas with ``exp(-i eps F)`` multiplies
the condensate by ``1 - i eps dV/dR``; linear response then gives

    Im alpha(t) = eps^-2 Im <dPsi(0)|dPsi(t)>,     dPsi(t) = Psi(t) - Psi_0,

with Psi(t) propagated in the frame rotating at the chemical potential. From
Im alpha follow the damping kernel ``Gamma`` and the spectral density ``J``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import gpe
from .params import EPSILON_MAX, PhysicalParams

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class CorrelationSeries:
    """Im alpha(t) on a uniform time grid (scalar part of the isotropic tensor)."""

    times: np.ndarray
    im_alpha: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.shape != self.im_alpha.shape or self.times.ndim != 1:
            raise ValueError("times and im_alpha must be 1D arrays of equal length")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class DampingKernel:
    times: np.ndarray
    values: np.ndarray
    anchoring: str = "zero at tau_max"

    def __call__(self, tau):
        """Linear interpolation; zero beyond the table."""
        return np.interp(tau, self.times, self.values, left=0.0, right=0.0)


@dataclass(frozen=True)
class SpectralDensity:
    omega: np.ndarray
    values: np.ndarray
    window: dict = field(default_factory=dict)

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < self.omega[0]) or np.any(omega > self.omega[-1]):
            raise ValueError(f"frequency outside the tabulated range "
                             f"[{self.omega[0]:.4g}, {self.omega[-1]:.4g}]")
        return np.interp(omega, self.omega, self.values)


def coupling_gradient(grid: gpe.Grid3D, params: PhysicalParams, direction: str = "x"):
    """dV(r, R)/dR_i at R = 0 for V = V0 (1 + |r-R|^2/a^2)^-2.

    Equals ``4 V0 x_i / a^2 (1 + r^2/a^2)^-3``.
    """
    a = params.interaction_range
    coords = grid.axes()[_AXES[direction]]
    return 4.0 * params.interaction_strength * coords / a ** 2 \
        * (1.0 + grid.r2() / a ** 2) ** -3


def inject_perturbation(psi0: gpe.Wavefunction, params: PhysicalParams,
                        direction: str = "x", epsilon: Optional[float] = None):
    """Return ``Psi_0 + dPsi_0`` with ``dPsi_0 = -i eps Psi_0 dV/dR_dir``."""
    eps = params.epsilon if epsilon is None else epsilon
    if not 0.0 <= eps <= EPSILON_MAX:
        raise ValueError(f"epsilon must lie in [0, {EPSILON_MAX}] (got {eps})")
    dpsi = -1j * eps * psi0.psi * coupling_gradient(psi0.grid, params, direction)
    return gpe.Wavefunction(psi0.psi + dpsi, psi0.grid)


class LinearityError(gpe.NumericalError):
    pass


def correlation_series(psi0: gpe.Wavefunction, mu: float, params: PhysicalParams,
                       dt: float, t_final: float, stride: int = 5,
                       direction: str = "x", epsilon: Optional[float] = None,
                       readout: Optional[str] = None, sign: Optional[int] = None,
                       mask: Optional[np.ndarray] = None, workers: int = 1,
                       linearity_tol: float = 0.1) -> CorrelationSeries:
    """Im alpha(t) from the autocorrelation of the injected perturbation.

    ``mu`` must be the chemical potential of the same ground-state run. The
    overlap is sampled every ``stride`` steps. ``readout`` selects a different
    Cartesian component for the bra (cross-correlation spot checks). The
    global sign is fixed so that the spectral density is non-negative unless
    ``sign`` is given.

    Raises :class:`LinearityError` when the fluctuation anywhere exceeds
    ``linearity_tol`` times the peak condensate amplitude, i.e. when
    ``epsilon`` is too large for linear response.
    """
    eps = params.epsilon if epsilon is None else epsilon
    if eps <= 0:
        raise ValueError("epsilon must be positive for a correlation run")
    grid = psi0.grid
    start = inject_perturbation(psi0, params, direction, eps)
    bra_dir = readout or direction
    bra = -1j * eps * psi0.psi * coupling_gradient(grid, params, bra_dir)
    base = psi0.psi
    peak = float(np.max(np.abs(base)))

    # whole strides only, so every sample sits on the uniform time grid
    steps = stride * math.ceil(round(t_final / dt, 6) / stride)
    samples = []

    def observe(t, psi):
        d = psi - base
        samples.append(np.vdot(bra, d).imag * grid.dv)
        largest = float(np.max(np.abs(d)))
        if largest > linearity_tol * peak:
            raise LinearityError(
                f"fluctuation reached {largest / peak:.3g} of the condensate peak at "
                f"t = {t:.4g}; reduce epsilon (now {eps})")

    g = params.coupling
    potentials = gpe.build_potentials(params, grid)
    gpe.split_step_evolve(start, potentials, g, dt, steps, mu=mu, observer=observe,
                          stride=stride, mask=mask, workers=workers)

    times = dt * stride * np.arange(len(samples))
    values = np.asarray(samples) / eps ** 2
    if bra_dir == direction:
        values[0] = 0.0  # <a|a> is real
    if sign is None:
        sign = fix_sign(times, values)
    meta = {
        "epsilon": eps, "grid": grid.descriptor(), "params_hash": params.digest(),
        "mu": mu, "dt": dt, "stride": stride, "direction": direction,
        "readout": bra_dir, "sign": sign, "truncation": None,
    }
    return CorrelationSeries(times, sign * values, meta)


def fix_sign(times, values, t_max: float = 1.0) -> int:
    """Sign that makes the low-time spectral weight positive.

    With J >= 0, ``int_0^T Im alpha(t) sin(w t) dt`` is negative for the
    frequencies that carry the weight, i.e. ``sum_w J(w) > 0``.
    """
    sel = times <= t_max
    t, v = times[sel], values[sel]
    if len(t) < 3:
        t, v = times, values
    omega = np.linspace(0.0, np.pi / (t[1] - t[0]), 256)[1:]
    J = -(2.0 / np.pi) * np.trapezoid(v[None, :] * np.sin(omega[:, None] * t[None, :]), t, axis=1)
    return 1 if J.sum() >= 0 else -1


def revival_onset(series: CorrelationSeries, t_min: float = 1.5,
                  t_max: Optional[float] = None, fraction: float = 0.5) -> float:
    """First time after ``t_min`` at which |Im alpha| reaches ``fraction`` of its
    largest value on ``[t_min, t_max]``.

    ``t_min`` must lie past the initial decay. ``t_max`` defaults to
    ``1.5 sqrt(2) pi`` so that only the first return is considered.
    """
    t_max = 1.5 * math.sqrt(2.0) * math.pi if t_max is None else t_max
    sel = (series.times >= t_min) & (series.times <= t_max)
    if np.count_nonzero(sel) < 3:
        raise ValueError(f"series does not cover [{t_min}, {t_max}]")
    env = np.abs(series.im_alpha[sel])
    return float(series.times[sel][np.argmax(env >= fraction * env.max())])


def half_cosine_taper(times, t_cut: float, width: float) -> np.ndarray:
    """1 for t < t_cut, half-cosine down to 0 over [t_cut, t_cut+width], 0 after."""
    w = np.ones_like(times, dtype=float)
    if width <= 0:
        w[times >= t_cut] = 0.0
        return w
    ramp = (times >= t_cut) & (times < t_cut + width)
    w[ramp] = 0.5 * (1.0 + np.cos(np.pi * (times[ramp] - t_cut) / width))
    w[times >= t_cut + width] = 0.0
    return w


def truncate_returns(series: CorrelationSeries, t_cut: float = 1.0,
                     width: float = 0.1) -> CorrelationSeries:
    """Remove the revivals: zero for t >= t_cut + width, half-cosine roll-off before.

    ``width = 0`` gives a hard cut at ``t_cut``. A cut at or beyond the end of
    the series returns it unchanged.
    """
    if not t_cut > 0:
        raise ValueError(f"t_cut must be positive (got {t_cut})")
    if t_cut >= series.times[-1]:
        return series
    taper = half_cosine_taper(series.times, t_cut, width)
    meta = dict(series.metadata)
    meta["truncation"] = {"t_cut": t_cut, "width": width}
    return CorrelationSeries(series.times, series.im_alpha * taper, meta)


def damping_kernel(series: CorrelationSeries, mass_ratio: float) -> DampingKernel:
    """Gamma(tau) = -(2/M) int_tau^tau_max Im alpha, trapezoid rule, Gamma(tau_max)=0."""
    t, v = series.times, series.im_alpha
    seg = 0.5 * (v[1:] + v[:-1]) * np.diff(t)
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return DampingKernel(t.copy(), -(2.0 / mass_ratio) * tail)


def spectral_density(series: CorrelationSeries, omega=None, n_omega: int = 2048,
                     taper_width: float = 0.1) -> SpectralDensity:
    """J(w) = -(2/pi) int_0^T Im alpha(t) sin(w t) dt by trapezoid quadrature.

    A half-cosine taper over the last ``taper_width`` of the record suppresses
    the ringing of a hard end (already-truncated series are unaffected).
    Frequencies default to a uniform grid up to the Nyquist limit pi/dt.
    """
    t, v = series.times, series.im_alpha
    nyquist = math.pi / series.dt
    if omega is None:
        omega = np.linspace(0.0, nyquist, n_omega)
    omega = np.asarray(omega, dtype=float)
    if np.any(omega > nyquist * (1 + 1e-12)) or np.any(omega < 0):
        raise ValueError(f"requested frequencies must lie in [0, {nyquist:.6g}] (Nyquist)")
    if taper_width > 0:
        v = v * half_cosine_taper(t, t[-1] - taper_width, taper_width)
    weights = np.full_like(t, series.dt)
    weights[0] = weights[-1] = 0.5 * series.dt
    J = np.empty_like(omega)
    # chunked to bound memory of the (omega x t) table
    for lo in range(0, len(omega), 256):
        w = omega[lo:lo + 256]
        J[lo:lo + 256] = np.sin(w[:, None] * t[None, :]) @ (v * weights)
    J *= -2.0 / math.pi
    window = {"taper_width": taper_width, "truncation": series.metadata.get("truncation")}
    return SpectralDensity(omega, J, window)
