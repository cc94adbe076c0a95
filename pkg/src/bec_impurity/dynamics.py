"""Impurity motion with memory and damping-rate extraction.

The position expectation obeys

    Q'' + Omega^2 Q + int_0^t Gamma(t - s) Q'(s) ds = 0 .

Rates are obtained three ways: from the decay of the solution's extrema, from
the spectral density (golden rule) and from the Laplace transform of the
kernel. All three are amplitude decay rates.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .correlation import DampingKernel, SpectralDensity
from .gpe import NumericalError


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    q0: float
    v0: float
    omega: float
    kernel: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RateCurve:
    omega: np.ndarray
    gamma: np.ndarray
    method: str


@dataclass(frozen=True)
class DecayFit:
    gamma: float
    omega: float
    amplitude: float
    ok: bool
    reason: str = ""
    t_extrema: np.ndarray = field(default_factory=lambda: np.empty(0))
    q_extrema: np.ndarray = field(default_factory=lambda: np.empty(0))


def _step_weights(omega, h):
    """Exact propagation weights of q'' + w^2 q = f with f linear over a step."""
    c, s = math.cos(omega * h), math.sin(omega * h)
    a0 = (1.0 - c) / omega ** 2
    a1 = (s / omega ** 2 - h * c / omega) / (omega * h)
    b0 = s / omega
    b1 = (h * s / omega + (c - 1.0) / omega ** 2) / h
    return c, s, a0, a1, b0, b1


def solve_memory_oscillator(kernel: Optional[DampingKernel], omega: float,
                            q0: float = 0.0, v0: float = 1.0,
                            dt: Optional[float] = None, t_final: float = 10.0,
                            blowup: float = 1e6) -> Trajectory:
    """Integrate the memory oscillator on a uniform grid.

    The free oscillation is propagated exactly; the memory force
    ``f = -int Gamma(t-s) p(s) ds`` is evaluated with the trapezoid rule and
    taken linear across each step, which makes the scheme second order. The
    implicit end point of the trapezoid is solved for exactly. ``kernel=None``
    means no bath.

    Beyond its table the kernel is taken as zero. A warning is issued when
    that cuts off a non-vanishing tail (return-free kernels end in zeros and
    pass silently).
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if dt is None:
        dt = 0.1 / omega
        if kernel is not None:
            dt = min(dt, float(kernel.times[1] - kernel.times[0]))
    steps = int(round(t_final / dt))
    times = dt * np.arange(steps + 1)

    if kernel is None:
        G = np.zeros(1)
    else:
        tail = kernel.values[int(0.95 * len(kernel.values)):]
        if t_final > kernel.times[-1] * (1 + 1e-12) and np.max(np.abs(tail), initial=0.0) > 1e-12 * np.max(np.abs(kernel.values)):
            warnings.warn(f"kernel table ends at {kernel.times[-1]:.4g} < t_final = "
                          f"{t_final:.4g}; zero-extended", RuntimeWarning, stacklevel=2)
        G = kernel(times)
        nz = np.flatnonzero(G)
        G = G[: nz[-1] + 1] if nz.size else np.zeros(1)
    support = len(G)

    c, s, a0, a1, b0, b1 = _step_weights(omega, dt)
    kappa = 0.5 * dt * G[0]
    q = np.empty(steps + 1)
    p = np.empty(steps + 1)
    q[0], p[0] = q0, v0
    f_prev = 0.0
    limit = blowup * (abs(q0) + abs(v0) / omega)
    for n in range(steps):
        m = n + 1
        # history part of the trapezoid sum for the memory integral at t_m
        H = 0.0
        if m < support:
            H = 0.5 * G[m] * p[0]
        jlo = max(1, m - support + 1)
        if jlo < m:
            H += float(np.dot(G[m - jlo:0:-1], p[jlo:m]))
        H *= dt
        p_base = -omega * s * q[n] + c * p[n] + b1 * f_prev
        beta = b0 - b1
        p_new = (p_base - beta * H) / (1.0 + beta * kappa)
        f_new = -H - kappa * p_new
        q[m] = c * q[n] + s / omega * p[n] + a1 * f_prev + (a0 - a1) * f_new
        p[m] = p_new
        f_prev = f_new
        if not abs(q[m]) < limit:
            raise NumericalError(f"memory oscillator unstable at t = {times[m]:.4g} "
                                 f"(|Q| = {abs(q[m]):.3g})")
    desc = {} if kernel is None else {"t_max": float(kernel.times[-1]),
                                      "anchoring": kernel.anchoring}
    return Trajectory(times, q, p, q0, v0, omega, desc)


def find_extrema(times, q):
    """Local extrema of a sampled signal, refined by parabolic interpolation."""
    d = np.diff(q)
    idx = np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0) + 1
    y0, y1, y2 = q[idx - 1], q[idx], q[idx + 1]
    denom = y0 - 2 * y1 + y2
    shift = np.where(denom != 0, 0.5 * (y0 - y2) / np.where(denom != 0, denom, 1), 0.0)
    h = times[1] - times[0]
    t_ext = times[idx] + shift * h
    q_ext = y1 - 0.25 * (y0 - y2) * shift
    return t_ext, q_ext


def fit_decay(trajectory, window=None, min_extrema: int = 5,
              monotone_tol: float = 1e-3) -> DecayFit:
    """Exponential fit ``A exp(-gamma t)`` to the magnitudes of the extrema.

    ``trajectory`` is a :class:`Trajectory` or a ``(times, q)`` pair. The
    frequency follows from the mean spacing of the extrema (pi / spacing).
    If the extremum magnitudes ever grow by more than ``monotone_tol``
    (relative) the envelope is not a decay: the result carries ``ok=False``
    and ``gamma = nan``.
    """
    times, q = (trajectory.times, trajectory.q) if isinstance(trajectory, Trajectory) \
        else (np.asarray(trajectory[0]), np.asarray(trajectory[1]))
    t_ext, q_ext = find_extrema(times, q)
    if window is not None:
        sel = (t_ext >= window[0]) & (t_ext <= window[1])
        t_ext, q_ext = t_ext[sel], q_ext[sel]
    if len(t_ext) < min_extrema:
        raise ValueError(f"only {len(t_ext)} extrema in the fit window; "
                         f"need at least {min_extrema}")
    amp = np.abs(q_ext)
    omega_fit = math.pi / float(np.mean(np.diff(t_ext)))
    growth = amp[1:] / amp[:-1] - 1.0
    if np.any(growth > monotone_tol):
        return DecayFit(math.nan, omega_fit, math.nan, False,
                        f"envelope grows by up to {growth.max():.3g}", t_ext, q_ext)
    slope, intercept = np.polyfit(t_ext, np.log(amp), 1)
    return DecayFit(float(-slope), omega_fit, float(math.exp(intercept)), True, "",
                    t_ext, q_ext)


def slow_amplitude(trajectory: Trajectory) -> np.ndarray:
    """Complex amplitude A(t) with Q = Re[A exp(i Omega t)] and dQ/dt = Re[i Omega A exp(i Omega t)].

    ``Re A`` is the quantity the delayed-return toy model predicts.
    """
    w = trajectory.omega
    return (trajectory.q - 1j * trajectory.p / w) * np.exp(-1j * w * trajectory.times)


def return_deviation(trajectory, pre, post) -> float:
    """Mean log-envelope excess over the decay fitted in the ``pre`` window.

    Extrema inside ``post`` are compared with the exponential extrapolated
    from ``pre``. Positive values mean the amplitude after the return exceeds
    pure decay (heating); negative values mean additional cooling.
    """
    times, q = (trajectory.times, trajectory.q) if isinstance(trajectory, Trajectory) \
        else trajectory
    t_ext, q_ext = find_extrema(times, q)
    a = (t_ext >= pre[0]) & (t_ext <= pre[1])
    b = (t_ext >= post[0]) & (t_ext <= post[1])
    if a.sum() < 3 or b.sum() < 1:
        raise ValueError("not enough extrema in the comparison windows")
    slope, icpt = np.polyfit(t_ext[a], np.log(np.abs(q_ext[a])), 1)
    return float(np.mean(np.log(np.abs(q_ext[b])) - (slope * t_ext[b] + icpt)))


def golden_rule_rate(J: SpectralDensity, omega, mass_ratio: float):
    """Weak-coupling amplitude damping rate pi J(w) / (2 M w)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    return math.pi * J(omega) / (2.0 * mass_ratio * omega)


def laplace_rate(kernel: DampingKernel, omega):
    """Half the real part of the kernel's Laplace transform at s = i w."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    tau, G = kernel.times, kernel.values
    out = 0.5 * np.trapezoid(G[None, :] * np.cos(omega[:, None] * tau[None, :]), tau, axis=1)
    return out if out.size > 1 else float(out[0])


def _fit_one(args):
    kernel, omega, t_final, window, dt = args
    traj = solve_memory_oscillator(kernel, omega, 0.0, 1.0, dt=dt, t_final=t_final)
    fit = fit_decay(traj, window)
    return fit.gamma


def rate_sweep(omegas, method: str, *, kernel: Optional[DampingKernel] = None,
               J: Optional[SpectralDensity] = None, mass_ratio: float = 1.0,
               t_final: Optional[float] = None, window=None, dt=None,
               parallel: int = 1) -> RateCurve:
    """gamma(w) on a grid of frequencies by ``fit``, ``golden_rule`` or ``laplace``.

    Fits integrate the memory equation for each frequency; with
    ``parallel > 1`` these independent solves run in worker processes.
    """
    omegas = np.asarray(omegas, dtype=float)
    if method == "golden_rule":
        if J is None:
            raise ValueError("golden_rule needs a spectral density")
        gam = golden_rule_rate(J, omegas, mass_ratio)
    elif method == "laplace":
        if kernel is None:
            raise ValueError("laplace needs a damping kernel")
        gam = np.atleast_1d(laplace_rate(kernel, omegas))
    elif method == "fit":
        if kernel is None:
            raise ValueError("fit needs a damping kernel")
        t_final = float(kernel.times[-1]) if t_final is None else t_final
        jobs = [(kernel, w, t_final, window, dt) for w in omegas]
        if parallel > 1:
            with ProcessPoolExecutor(max_workers=parallel) as pool:
                gam = np.array(list(pool.map(_fit_one, jobs)))
        else:
            gam = np.array([_fit_one(job) for job in jobs])
    else:
        raise ValueError(f"unknown method {method!r}")
    return RateCurve(omegas, np.asarray(gam, dtype=float), method)
