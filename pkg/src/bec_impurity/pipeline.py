"""Stage orchestration on top of the numerical modules.

Each stage reads its inputs from the output directory, writes its products
there and records itself in ``manifest.json``. Stages that depend on a
missing product raise :class:`~bec_impurity.io.MissingArtifactError`.
"""
from __future__ import annotations

import math
import time
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import analytic, correlation, dynamics, gpe
from .io import MissingArtifactError, RunManifest, read_csv, write_csv
from .params import RunConfig, thomas_fermi_scales

T_RET = math.sqrt(2.0) * math.pi
CHECKPOINT = "psi0.bin"


class Stage:
    """Shared context of one output directory."""

    def __init__(self, config: RunConfig, out_dir, parallel: int = 1):
        self.config = config
        self.params = config.params
        self.settings = config.settings
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.parallel = max(1, int(parallel))
        self.manifest = RunManifest.load(self.out, config.digest())

    @property
    def tag(self) -> str:
        return self.manifest.hash

    def path(self, name) -> Path:
        return self.out / name

    def need(self, name) -> Path:
        p = self.path(name)
        if not p.exists():
            raise MissingArtifactError(f"missing artifact {p}; run the stage that writes "
                                       f"{name} first")
        return p

    def finish(self, stage, inputs, outputs, started, steps=0, **extra):
        self.manifest.record(stage, inputs, outputs, time.perf_counter() - started,
                             steps, **extra)
        self.manifest.save(self.out)


# --- stages -------------------------------------------------------------------

def groundstate(st: Stage, out_name: str = CHECKPOINT, n: Optional[int] = None) -> Path:
    started = time.perf_counter()
    grid = gpe.build_grid(st.params, n=n or st.settings["grid_points"],
                          margin=st.settings["box_margin"])
    wf, mu, info = gpe.ground_state(st.params, grid, dtau=st.settings["dtau"],
                                    tol=st.settings["ground_tol"])
    path = st.path(out_name)
    gpe.write_checkpoint(path, wf, mu, st.params.digest())
    st.finish("groundstate", [], [path], started, info["steps"], mu=mu,
              energy=info["energy"])
    return path


def correlate(st: Stage, t_final: Optional[float] = None, checkpoint: Optional[str] = None,
              direction: Optional[str] = None) -> Path:
    started = time.perf_counter()
    src = st.need(checkpoint or CHECKPOINT)
    wf, mu, digest = gpe.read_checkpoint(src)
    if digest != st.params.digest():
        raise MissingArtifactError(f"{src} was computed for different parameters")
    s = st.settings
    t_final = t_final or s["t_final"] or 2.0 * T_RET
    series = correlation.correlation_series(wf, mu, st.params, s["dt"], t_final,
                                            stride=s["stride"],
                                            direction=direction or s["direction"])
    path = st.path("correlation.csv")
    meta = {k: series.metadata[k] for k in ("epsilon", "mu", "dt", "stride", "direction",
                                            "sign", "grid")}
    write_csv(path, {"t": series.times, "im_alpha": series.im_alpha}, st.tag, meta)
    st.finish("correlate", [src], [path], started, (len(series.times) - 1) * s["stride"])
    return path


def load_series(st: Stage) -> correlation.CorrelationSeries:
    cols, meta = read_csv(st.need("correlation.csv"))
    return correlation.CorrelationSeries(cols["t"], cols["im_alpha"], meta)


def kernel(st: Stage) -> tuple[Path, Path]:
    """Write the full kernel (with returns) and the return-free one."""
    started = time.perf_counter()
    series = load_series(st)
    full = correlation.damping_kernel(series, st.params.mass_ratio)
    cut = correlation.truncate_returns(series, st.settings["t_cut"], st.settings["rolloff"])
    trunc = correlation.damping_kernel(cut, st.params.mass_ratio)
    p_full, p_cut = st.path("kernel.csv"), st.path("kernel_truncated.csv")
    write_csv(p_full, {"tau": full.times, "gamma_kernel": full.values}, st.tag,
              {"anchoring": full.anchoring, "mass_ratio": st.params.mass_ratio})
    write_csv(p_cut, {"tau": trunc.times, "gamma_kernel": trunc.values}, st.tag,
              {"anchoring": trunc.anchoring, "mass_ratio": st.params.mass_ratio,
               "truncation": cut.metadata.get("truncation")})
    st.finish("kernel", [st.path("correlation.csv")], [p_full, p_cut], started)
    return p_full, p_cut


def load_kernel(path) -> correlation.DampingKernel:
    cols, meta = read_csv(path)
    return correlation.DampingKernel(cols["tau"], cols["gamma_kernel"],
                                     meta.get("anchoring", "zero at tau_max"))


def spectral_of(st: Stage, series=None) -> correlation.SpectralDensity:
    series = series if series is not None else load_series(st)
    cut = correlation.truncate_returns(series, st.settings["t_cut"], st.settings["rolloff"])
    return correlation.spectral_density(cut)


def spectral(st: Stage) -> Path:
    started = time.perf_counter()
    J = spectral_of(st)
    path = st.path("spectral.csv")
    write_csv(path, {"omega": J.omega, "J": J.values}, st.tag, {"window": J.window})
    st.finish("spectral", [st.path("correlation.csv")], [path], started)
    return path


def load_spectral(path) -> correlation.SpectralDensity:
    cols, _ = read_csv(path)
    return correlation.SpectralDensity(cols["omega"], cols["J"])


def run_dynamics(st: Stage, omega: float, t_final: float, kernel_path=None,
                 q0: float = 0.0, v0: float = 1.0, out_name: str = "trajectory.csv") -> Path:
    started = time.perf_counter()
    src = Path(kernel_path) if kernel_path else st.need("kernel.csv")
    if not src.exists():
        raise MissingArtifactError(f"missing artifact {src}")
    traj = dynamics.solve_memory_oscillator(load_kernel(src), omega, q0, v0, t_final=t_final)
    path = st.path(out_name)
    write_csv(path, {"t": traj.times, "Q": traj.q}, st.tag,
              {"omega": omega, "q0": q0, "v0": v0, "kernel": src.name})
    st.finish("dynamics", [src], [path], started, len(traj.times) - 1)
    return path


def fit_rates(kern, omegas, t_final: float, parallel: int = 1):
    """Extremum-fit rates on a return-free kernel (window starts at t = 0.5)."""
    return dynamics.rate_sweep(omegas, "fit", kernel=kern, t_final=t_final,
                               window=(0.5, t_final), parallel=parallel).gamma


def ratesweep(st: Stage, omegas, methods: Iterable[str] = ("golden_rule", "laplace", "fit"),
              t_final: Optional[float] = None) -> Path:
    started = time.perf_counter()
    omegas = np.asarray(omegas, dtype=float)
    rows_w, rows_g, rows_m = [], [], []
    inputs = []
    for method in methods:
        if method == "golden_rule":
            J = spectral_of(st)
            inputs.append(st.path("correlation.csv"))
            gam = dynamics.golden_rule_rate(J, omegas, st.params.mass_ratio)
        elif method in ("laplace", "fit"):
            src = st.need("kernel_truncated.csv")
            inputs.append(src)
            kern = load_kernel(src)
            if method == "laplace":
                gam = np.atleast_1d(dynamics.laplace_rate(kern, omegas))
            else:
                gam = fit_rates(kern, omegas, t_final or 2.0 * T_RET, st.parallel)
        else:
            raise ValueError(f"unknown method {method!r}")
        rows_w.extend(omegas)
        rows_g.extend(np.asarray(gam, dtype=float))
        rows_m.extend([method] * len(omegas))
    path = st.path("rates.csv")
    write_csv(path, {"omega": rows_w, "gamma": rows_g, "method": rows_m}, st.tag,
              {"mass_ratio": st.params.mass_ratio})
    st.finish("ratesweep", sorted(set(inputs)), [path], started)
    return path


def analytic_rates(st: Stage, omegas, mu: Optional[float] = None,
                   out_name: str = "rates_analytic.csv") -> Path:
    """Homogeneous-gas rate; mu from the ground-state run when available."""
    started = time.perf_counter()
    inputs = []
    if mu is None:
        ck = st.path(CHECKPOINT)
        if ck.exists():
            _, mu, _ = gpe.read_checkpoint(ck)
            inputs.append(ck)
        else:
            mu = thomas_fermi_scales(st.params)[0]
    hp = analytic.HomogeneousParams.from_params(st.params, mu)
    omegas = np.asarray(omegas, dtype=float)
    path = st.path(out_name)
    write_csv(path, {"omega": omegas, "gamma": analytic.homogeneous_rate(omegas, hp),
                     "method": ["homogeneous"] * len(omegas)}, st.tag,
              {"mu": mu, "landau_bound": analytic.landau_bound(mu, st.params.mass_ratio)})
    st.finish("analytic", inputs, [path], started)
    return path


def toy(out_dir, tp: analytic.ToyModelParams, points: int = 1001, tag: str = "toy") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = np.linspace(0.0, 2.0 * tp.t_ret, points)
    path = out / "toy.csv"
    write_csv(path, {"t": t, "Q_envelope": analytic.toy_delay_solution(tp, t)}, tag,
              {"gamma1": tp.gamma1, "gamma2": tp.gamma2, "t_ret": tp.t_ret,
               "omega": tp.omega, "q0": tp.q0, "v0": tp.v0,
               "prefactor": analytic.toy_prefactor(tp),
               "regime": analytic.heating_sign(tp)})
    return path


# --- figure bundles -----------------------------------------------------------

FIG2_OMEGAS = (3.0, 15.0, 50.0)


def ensure_series(config: RunConfig, out_dir, t_final: Optional[float] = None) -> Stage:
    """Ground state and correlation series in ``out_dir``, reused when current."""
    st = Stage(config, out_dir)
    done = st.manifest.stages
    if not (st.path(CHECKPOINT).exists() and "groundstate" in done):
        groundstate(st)
    if not (st.path("correlation.csv").exists() and "correlate" in done):
        correlate(st, t_final)
    if not st.path("kernel.csv").exists():
        kernel(st)
    return st


def two_n_configs(config: RunConfig):
    n = config.params.atom_number
    for factor in (1, 4):
        params = config.params.replace(atom_number=n * factor)
        yield n * factor, RunConfig(params, dict(config.settings))


def fig_repro(which: str, config: RunConfig, out_dir, parallel: int = 1) -> Path:
    out = Path(out_dir) / which
    out.mkdir(parents=True, exist_ok=True)
    tag = config.digest()
    if which == "fig1":
        for n, cfg in two_n_configs(config):
            st = ensure_series(cfg, Path(out_dir) / f"N{n}")
            series = load_series(st)
            write_csv(out / f"correlation_N{n}.csv",
                      {"t": series.times, "im_alpha": series.im_alpha}, st.tag,
                      {"atom_number": n, "t_ret_estimate": T_RET})
    elif which == "fig2":
        st = ensure_series(config, Path(out_dir) / f"N{config.params.atom_number}")
        kern = load_kernel(st.path("kernel.csv"))
        t_final = float(kern.times[-1])
        for w in FIG2_OMEGAS:
            traj = dynamics.solve_memory_oscillator(kern, w, 0.0, 1.0, t_final=t_final)
            pre = dynamics.fit_decay(traj, window=(0.5, 0.9 * T_RET))
            overlay = pre.amplitude * np.exp(-pre.gamma * traj.times)
            write_csv(out / f"trajectory_omega{w:g}.csv",
                      {"t": traj.times, "Q": traj.q, "envelope_fit": overlay}, st.tag,
                      {"omega": w, "gamma_fit": pre.gamma, "fit_window": [0.5, 0.9 * T_RET]})
    elif which == "fig3":
        omegas = np.linspace(1.0, 60.0, 119)
        points = np.array([3.0, 5.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 40.0])
        for n, cfg in two_n_configs(config):
            st = ensure_series(cfg, Path(out_dir) / f"N{n}")
            gpe_mu = gpe.read_checkpoint(st.path(CHECKPOINT))[1]
            series = load_series(st)
            J = spectral_of(st, series)
            golden = dynamics.golden_rule_rate(J, omegas, cfg.params.mass_ratio)
            cut = correlation.truncate_returns(series, cfg.settings["t_cut"],
                                               cfg.settings["rolloff"])
            kern = correlation.damping_kernel(cut, cfg.params.mass_ratio)
            fitted = fit_rates(kern, points, 4.0 * T_RET, parallel)
            hp = analytic.HomogeneousParams.from_params(cfg.params, gpe_mu)
            closed = analytic.homogeneous_rate(omegas, hp)
            write_csv(out / f"rates_N{n}.csv",
                      {"omega": np.concatenate([omegas, points, omegas]),
                       "gamma": np.concatenate([golden, fitted, closed]),
                       "method": ["golden_rule"] * len(omegas) + ["fit"] * len(points)
                       + ["homogeneous"] * len(omegas)},
                      st.tag, {"atom_number": n, "mu": gpe_mu})
    else:
        raise ValueError(f"unknown figure {which!r}; expected fig1, fig2 or fig3")
    return out
