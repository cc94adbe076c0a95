"""Spectral Gross-Pitaevskii solver on a periodic 3D Cartesian grid.

The condensate feels the harmonic trap ``U = r^2/2`` and the static impurity
potential ``V(r) = V0 (1 + r^2/a^2)^-2`` of an impurity held at the origin.
Propagation uses Strang splitting (half kinetic, full local, half kinetic);
consecutive half kinetic steps are fused between observation points.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .params import DerivedScales, PhysicalParams, thomas_fermi_scales


class NumericalError(RuntimeError):
    """NaN/Inf, norm drift or instability during a propagation."""


class ConvergenceError(NumericalError):
    pass


@dataclass(frozen=True)
class Grid3D:
    """Cubic periodic grid ``x_j = -L + j dx``, ``j = 0..n-1``, ``dx = 2L/n``."""

    n: int
    half_length: float

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two (got {self.n})")
        if not self.half_length > 0:
            raise ValueError("box half length must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def dv(self) -> float:
        return self.dx ** 3

    @property
    def x(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers dual to :attr:`x` (spacing pi/L)."""
        return 2.0 * np.pi * sfft.fftfreq(self.n, d=self.dx)

    def axes(self):
        """Sparse broadcastable coordinate arrays (X, Y, Z)."""
        x = self.x
        return x[:, None, None], x[None, :, None], x[None, None, :]

    def r2(self) -> np.ndarray:
        X, Y, Z = self.axes()
        return X ** 2 + Y ** 2 + Z ** 2

    def k2(self, real: bool = False) -> np.ndarray:
        k = self.k
        kz = np.abs(k[: self.n // 2 + 1]) if real else k
        return k[:, None, None] ** 2 + k[None, :, None] ** 2 + kz[None, None, :] ** 2

    def descriptor(self) -> dict:
        return {"n": self.n, "half_length": self.half_length, "dx": self.dx}


@dataclass
class Wavefunction:
    """Complex field on a :class:`Grid3D`; ``norm`` is the integral of |psi|^2."""

    psi: np.ndarray
    grid: Grid3D

    @property
    def norm(self) -> float:
        return float(np.vdot(self.psi, self.psi).real) * self.grid.dv

    def copy(self) -> "Wavefunction":
        return Wavefunction(self.psi.copy(), self.grid)


@dataclass(frozen=True)
class StaticPotentials:
    trap: np.ndarray
    impurity: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.trap + self.impurity


def impurity_potential(r2, strength: float, range_: float):
    """V(r) = V0 / (1 + r^2/a^2)^2."""
    return strength / (1.0 + r2 / range_ ** 2) ** 2


def build_grid(params: PhysicalParams, scales: Optional[DerivedScales] = None,
               n: int = 64, margin: float = 1.5) -> Grid3D:
    """Grid with half length ``margin * r_tf``."""
    if margin < 1.5:
        raise ValueError(f"margin must be >= 1.5 (got {margin}); the box must hold "
                         "the Thomas-Fermi cloud")
    r_tf = scales.r_tf if scales is not None else thomas_fermi_scales(params)[1]
    return Grid3D(n, margin * r_tf)


def build_potentials(params: PhysicalParams, grid: Grid3D) -> StaticPotentials:
    r2 = grid.r2()
    return StaticPotentials(
        trap=0.5 * r2,
        impurity=impurity_potential(r2, params.interaction_strength,
                                    params.interaction_range))


def absorbing_mask(grid: Grid3D, width: float = 0.1) -> np.ndarray:
    """Smooth cos^(1/8) damping mask over the outer ``width`` fraction of each axis."""
    x = np.abs(grid.x) / grid.half_length
    edge = 1.0 - width
    m = np.ones_like(x)
    outer = x > edge
    m[outer] = np.cos(0.5 * np.pi * (x[outer] - edge) / width) ** 0.125
    return m[:, None, None] * m[None, :, None] * m[None, None, :]


def energy(psi: np.ndarray, grid: Grid3D, potentials: StaticPotentials,
           g: float) -> float:
    """GPE energy functional (kinetic + trap + impurity + g/2 |psi|^4)."""
    dens = np.abs(psi) ** 2
    psik = sfft.fftn(psi)
    kin = 0.5 * float(np.sum(grid.k2() * np.abs(psik) ** 2)) / psi.size
    pot = float(np.sum(potentials.total * dens))
    inter = 0.5 * g * float(np.sum(dens ** 2))
    return (kin + pot + inter) * grid.dv


def chemical_potential(psi: np.ndarray, grid: Grid3D, potentials: StaticPotentials,
                       g: float) -> float:
    """mu = <psi|-lap/2 + U + V + g|psi|^2|psi> / N."""
    dens = np.abs(psi) ** 2
    psik = sfft.fftn(psi)
    kin = 0.5 * float(np.sum(grid.k2() * np.abs(psik) ** 2)) / psi.size
    pot = float(np.sum((potentials.total + g * dens) * dens))
    return (kin + pot) / float(np.sum(dens))


def _thomas_fermi_guess(params, grid, potentials):
    mu, _ = thomas_fermi_scales(params)
    dens = np.clip(mu - potentials.total, 0.0, None) / params.coupling
    # gaussian blur keeps the initial kinetic energy finite
    kernel = np.exp(-0.5 * grid.k2(real=True) * (2 * grid.dx) ** 2)
    psi = sfft.irfftn(sfft.rfftn(np.sqrt(dens)) * kernel, s=dens.shape)
    return np.abs(psi) + 1e-12


def _relax(psi, grid, potentials, g, N, dtau, tol, state_tol, max_steps, check_every,
           min_steps=0):
    """Normalized imaginary-time Strang relaxation; returns (psi, energies, steps)."""
    half_kin = np.exp(-0.25 * dtau * grid.k2(real=True))
    shape = psi.shape

    def local_factors(mu):
        # exact flow of d(psi)/dtau = -(W - mu + g psi^2) psi over one step:
        # psi^2 -> psi^2 decay / (1 + g psi^2 growth)
        W = potentials.total - mu
        decay = np.exp(-2.0 * dtau * W)
        small = np.abs(W) < 1e-12
        growth = -np.expm1(-2.0 * dtau * W) / np.where(small, 1.0, W)
        growth[small] = 2.0 * dtau
        return decay, growth

    mu = chemical_potential(psi, grid, potentials, g)
    energies = [energy(psi, grid, potentials, g)]
    step = 0
    rate = math.inf
    while step < max_steps:
        decay, growth = local_factors(mu)
        previous = psi.copy()
        for _ in range(check_every):
            psi = sfft.irfftn(sfft.rfftn(psi) * half_kin, s=shape)
            psi *= np.sqrt(decay / (1.0 + g * growth * psi ** 2))
            psi = sfft.irfftn(sfft.rfftn(psi) * half_kin, s=shape)
            psi *= math.sqrt(N / (np.sum(psi ** 2) * grid.dv))
        step += check_every
        e = energy(psi, grid, potentials, g)
        if not math.isfinite(e):
            raise NumericalError(f"non-finite energy after {step} imaginary-time steps")
        rate = abs(e - energies[-1]) / (abs(e) * check_every * dtau)
        energies.append(e)
        mu = chemical_potential(psi, grid, potentials, g)
        change = np.linalg.norm(psi - previous) / (np.linalg.norm(psi) * check_every * dtau)
        if rate < tol and change < state_tol and step >= min_steps:
            return psi, energies, step
    raise ConvergenceError(
        f"imaginary-time propagation not converged after {step} steps "
        f"(last relative energy rate {rate:.3g}, tol {tol:.3g}; state change "
        f"{change:.3g}, state_tol {state_tol:.3g})")


def ground_state(params: PhysicalParams, grid: Grid3D, dtau: Optional[float] = None,
                 tol: float = 1e-10, max_steps: int = 200_000,
                 initial: Optional[np.ndarray] = None, check_every: int = 10,
                 potentials: Optional[StaticPotentials] = None,
                 coupling: Optional[float] = None, state_tol: float = 1e-8,
                 refine: bool = True):
    """Imaginary-time relaxation to the condensate ground state.

    Returns ``(Wavefunction, mu, info)``. The state is real, non-negative and
    normalized to N. Convergence is declared once the relative energy change
    per unit imaginary time drops below ``tol`` and the relative change of the
    state per unit imaginary time below ``state_tol`` (the energy is quadratic
    in the error, so it alone pins the state to ~sqrt(tol) only).
    ``info["energies"]`` holds the
    energy history sampled every ``check_every`` steps.

    The Strang fixed point carries an O(dtau^2) residual. With ``refine`` the
    relaxation is repeated at dtau/2 and the two fixed points are
    Richardson-extrapolated, which removes that term.
    """
    if dtau is None:
        dtau = 0.1 * grid.dx ** 2
    if dtau > 0.1 * grid.dx ** 2 * (1 + 1e-12):
        raise ValueError(f"dtau={dtau} exceeds 0.1 dx^2 = {0.1 * grid.dx ** 2}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if potentials is None:
        potentials = build_potentials(params, grid)
    g = params.coupling if coupling is None else coupling
    N = float(params.atom_number)

    if initial is None:
        psi = _thomas_fermi_guess(params, grid, potentials)
    else:
        psi = np.abs(np.asarray(initial)).astype(float)
    psi *= math.sqrt(N / (np.sum(psi ** 2) * grid.dv))

    psi, energies, steps = _relax(psi, grid, potentials, g, N, dtau, tol, state_tol,
                                  max_steps, check_every)
    if refine:
        half, extra, more = _relax(psi.copy(), grid, potentials, g, N, 0.5 * dtau,
                                   tol, state_tol, max_steps, check_every)
        energies = energies + extra[1:]
        steps += more
        psi = (4.0 * half - psi) / 3.0

    psi = np.abs(psi)
    psi *= math.sqrt(N / (np.sum(psi ** 2) * grid.dv))
    mu = chemical_potential(psi, grid, potentials, g)
    e = energy(psi, grid, potentials, g)
    info = {"steps": steps, "dtau": dtau, "energies": np.array(energies), "energy": e}
    return Wavefunction(psi.astype(complex), grid), mu, info


class SplitStepPropagator:
    """Real-time Strang-split propagator in the frame rotating at ``mu``.

    Solves ``i dpsi/dt = (-lap/2 + U + V + g|psi|^2 - mu) psi``.
    """

    def __init__(self, grid: Grid3D, potentials: StaticPotentials, g: float,
                 dt: float, mu: float = 0.0, mask: Optional[np.ndarray] = None,
                 workers: int = 1):
        self.grid = grid
        self.g = g
        self.dt = dt
        self.mu = mu
        self.mask = mask
        self.workers = workers
        k2 = grid.k2()
        self.half_kin = np.exp(-0.25j * dt * k2)
        self.full_kin = np.exp(-0.5j * dt * k2)
        self.local = potentials.total - mu

    def _kin(self, psi, factor):
        psi = sfft.fftn(psi, overwrite_x=True, workers=self.workers)
        psi *= factor
        return sfft.ifftn(psi, overwrite_x=True, workers=self.workers)

    def _local(self, psi):
        phase = self.local + self.g * (psi.real ** 2 + psi.imag ** 2)
        phase *= -self.dt
        psi *= np.cos(phase) + 1j * np.sin(phase)
        if self.mask is not None:
            psi *= self.mask
        return psi

    def advance(self, psi: np.ndarray, steps: int) -> np.ndarray:
        """Advance by ``steps`` full Strang steps (fused half kinetic steps)."""
        if steps <= 0:
            return psi
        psi = self._kin(psi, self.half_kin)
        for i in range(steps):
            psi = self._local(psi)
            psi = self._kin(psi, self.full_kin if i < steps - 1 else self.half_kin)
        return psi


def split_step_evolve(wf: Wavefunction, potentials: StaticPotentials, g: float,
                      dt: float, steps: int, mu: float = 0.0,
                      observer: Optional[Callable[[float, np.ndarray], None]] = None,
                      stride: int = 1, mask: Optional[np.ndarray] = None,
                      norm_tol: float = 1e-6, workers: int = 1) -> Wavefunction:
    """Propagate ``wf`` for ``steps`` steps of size ``dt``.

    ``observer(t, psi)`` is called at t = 0 and after every ``stride`` steps
    with a read-only view of the field. Raises :class:`NumericalError` on
    NaN/Inf or when the norm drifts by more than ``norm_tol`` (relative;
    skipped when an absorbing mask is active).
    """
    grid = wf.grid
    prop = SplitStepPropagator(grid, potentials, g, dt, mu, mask, workers)
    psi = np.array(wf.psi, dtype=complex, copy=True)
    norm0 = wf.norm

    def notify(t):
        if observer is not None:
            view = psi.view()
            view.flags.writeable = False
            observer(t, view)

    notify(0.0)
    done = 0
    while done < steps:
        block = min(stride, steps - done)
        psi = prop.advance(psi, block)
        done += block
        norm = float(np.vdot(psi, psi).real) * grid.dv
        if not math.isfinite(norm):
            raise NumericalError(f"non-finite field at t = {done * dt:.6g}")
        if mask is None and abs(norm - norm0) > norm_tol * norm0:
            raise NumericalError(
                f"norm drift {abs(norm - norm0) / norm0:.3g} exceeds {norm_tol:.3g} "
                f"at t = {done * dt:.6g}; reduce dt")
        notify(done * dt)
    return Wavefunction(psi, grid)


def return_time(params: PhysicalParams, scales: Optional[DerivedScales] = None):
    """Sound round-trip time through the Thomas-Fermi cloud.

    Returns ``(quadrature, closed_form)`` where the quadrature evaluates
    ``2 int_0^R dr / c(r)`` with ``c(r)^2 = g n_TF(r) = mu - r^2/2`` and the
    closed form is ``sqrt(2) pi``.
    """
    if scales is not None:
        mu, r_tf = scales.mu_tf, scales.r_tf
    else:
        mu, r_tf = thomas_fermi_scales(params)
    # 1/sqrt(mu - r^2/2) = sqrt(2) (R - r)^-1/2 (R + r)^-1/2 ; algebraic weight
    val, _ = integrate.quad(lambda r: math.sqrt(2.0) / math.sqrt(r_tf + r), 0.0, r_tf,
                            weight="alg", wvar=(0.0, -0.5), epsabs=1e-13, epsrel=1e-13)
    return 2.0 * val, math.sqrt(2.0) * math.pi


# --- checkpoints --------------------------------------------------------------

CHECKPOINT_MAGIC = b"BECPSI01"
_HEADER = struct.Struct("<8sIIddd64s")


def write_checkpoint(path, wf: Wavefunction, mu: float, params_hash: str) -> None:
    """Write ``wf`` as header + little-endian complex64 array (C order, x slowest).

    Header (104 bytes, little endian): magic ``BECPSI01``; uint32 n; uint32
    reserved (0); float64 box half length; float64 mu; float64 norm; 64 ASCII
    bytes of the hex SHA-256 params hash.
    """
    header = _HEADER.pack(CHECKPOINT_MAGIC, wf.grid.n, 0, wf.grid.half_length, mu,
                          wf.norm, params_hash.encode("ascii")[:64].ljust(64, b"0"))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(wf.psi, dtype="<c8").tobytes())


def read_checkpoint(path):
    """Inverse of :func:`write_checkpoint`; returns ``(wf, mu, params_hash)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint")
    magic, n, _, half_length, mu, _norm, digest = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a wavefunction checkpoint")
    data = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size)
    if data.size != n ** 3:
        raise ValueError(f"{path}: expected {n ** 3} samples, found {data.size}")
    grid = Grid3D(n, half_length)
    psi = data.reshape(n, n, n).astype(complex)
    return Wavefunction(psi, grid), mu, digest.decode("ascii")
