"""Physical parameters, unit system and static derived scales.

All quantities are dimensionless with hbar = m = omega_BEC = 1, where ``m`` is
the mass of a condensate atom and ``omega_BEC`` the (isotropic) trap frequency
of the gas. Lengths are in units of the bath oscillator length
``a_ho = sqrt(hbar / (m omega_BEC))``.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields

EPSILON_MAX = 0.05

#: config key -> PhysicalParams field
CONFIG_KEYS = {
    "mass_ratio": "mass_ratio",
    "atom_number": "atom_number",
    "scattering_length": "scattering_length",
    "interaction_range": "interaction_range",
    "interaction_strength": "interaction_strength",
    "trap_frequency_ion": "bare_trap_frequency",
    "epsilon": "epsilon",
}

#: optional run settings accepted in the same document, with defaults
RUN_DEFAULTS = {
    "grid_points": 64,
    "box_margin": 1.5,
    "dt": 1e-3,
    "dtau": None,
    "ground_tol": 1e-10,
    "t_final": None,
    "stride": 5,
    "t_cut": 1.0,
    "rolloff": 0.1,
    "direction": "x",
}


class ConfigError(ValueError):
    """Raised for malformed or invalid run configurations."""


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless physical inputs of the impurity + condensate model.

    ``interaction_strength`` (V0) may have either sign; everything else is
    strictly positive.
    """

    mass_ratio: float
    atom_number: int
    scattering_length: float
    interaction_range: float
    interaction_strength: float
    bare_trap_frequency: float
    epsilon: float = 0.005

    def __post_init__(self):
        for name in ("mass_ratio", "scattering_length", "interaction_range",
                     "bare_trap_frequency", "epsilon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive (got {value!r})")
        if int(self.atom_number) != self.atom_number or self.atom_number <= 0:
            raise ConfigError(f"atom_number must be positive (got {self.atom_number!r})")
        if not math.isfinite(self.interaction_strength):
            raise ConfigError("interaction_strength must be finite")
        if self.epsilon > EPSILON_MAX:
            raise ConfigError(
                f"epsilon must be <= {EPSILON_MAX} to stay in linear response "
                f"(got {self.epsilon!r})")

    @property
    def coupling(self) -> float:
        """Contact coupling g = 4 pi a_s (hbar = m = 1)."""
        return 4.0 * math.pi * self.scattering_length

    def replace(self, **changes) -> "PhysicalParams":
        data = asdict(self)
        data.update(changes)
        return PhysicalParams(**data)

    def digest(self) -> str:
        """Stable content hash of the parameter values."""
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class DerivedScales:
    mu_tf: float
    r_tf: float
    shifted_frequency: float
    delta_omega_sq: float


@dataclass(frozen=True)
class RunConfig:
    params: PhysicalParams
    settings: dict = field(default_factory=dict)

    def digest(self) -> str:
        blob = json.dumps({"params": asdict(self.params), "settings": self.settings},
                          sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _coerce(key: str, raw: str):
    text = raw.strip()
    if key == "direction":
        if text not in ("x", "y", "z"):
            raise ConfigError(f"direction must be one of x, y, z (got {text!r})")
        return text
    if text.lower() in ("none", "null", ""):
        return None
    try:
        if key in ("atom_number", "grid_points", "stride"):
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse a flat ``key = value`` document (``#`` starts a comment).

    ``key: value`` is accepted as well. Unknown keys are rejected, all of them
    listed in one message.
    """
    values = {}
    unknown = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, raw = line.split(sep, 1)
                break
        else:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip()
        if key not in CONFIG_KEYS and key not in RUN_DEFAULTS:
            unknown.append(key)
            continue
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        values[key] = _coerce(key, raw)
    if unknown:
        raise ConfigError("unknown keys: " + ", ".join(unknown))

    required = [k for k in CONFIG_KEYS if k != "epsilon"]
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError("missing keys: " + ", ".join(missing))

    kwargs = {CONFIG_KEYS[k]: values[k] for k in CONFIG_KEYS if k in values}
    for key in kwargs:
        if kwargs[key] is None:
            raise ConfigError(f"{key} must be given a value")
    params = PhysicalParams(**kwargs)

    settings = dict(RUN_DEFAULTS)
    settings.update({k: v for k, v in values.items() if k in RUN_DEFAULTS})
    n = settings["grid_points"]
    if n <= 0 or n & (n - 1):
        raise ConfigError(f"grid_points must be a power of two (got {n})")
    for key in ("box_margin", "dt", "ground_tol", "t_cut"):
        if settings[key] is None or settings[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if settings["rolloff"] < 0:
        raise ConfigError("rolloff must be non-negative")
    if settings["stride"] <= 0:
        raise ConfigError("stride must be positive")
    return RunConfig(params, settings)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(config: RunConfig) -> str:
    """Inverse of :func:`parse_config` (round-trips exactly)."""
    lines = []
    reverse = {v: k for k, v in CONFIG_KEYS.items()}
    for f in fields(PhysicalParams):
        lines.append(f"{reverse[f.name]} = {getattr(config.params, f.name)!r}")
    for key, value in config.settings.items():
        lines.append(f"{key} = {value if isinstance(value, str) else repr(value)}")
    return "\n".join(lines) + "\n"


def thomas_fermi_scales(params: PhysicalParams) -> tuple[float, float]:
    """Thomas-Fermi chemical potential and radius of the trapped gas.

    ``mu = 0.5 (15 N a_s)**(2/5)``, ``R = sqrt(2 mu)``; this normalizes the
    inverted-parabola density ``(mu - r^2/2)/g`` to N.
    """
    product = params.atom_number * params.scattering_length
    if product < 10:
        warnings.warn(f"N a_s = {product:.3g} < 10: Thomas-Fermi scales are only "
                      "indicative", RuntimeWarning, stacklevel=2)
    mu = 0.5 * (15.0 * product) ** 0.4
    return mu, math.sqrt(2.0 * mu)


def static_frequency_shift(params: PhysicalParams) -> DerivedScales:
    """Confining shift of the impurity trap frequency from the static gas density.

    ``delta Omega^2 = (pi/32) (a/a_s) V0^2 (m/M)``; even in V0.
    """
    mu, r_tf = thomas_fermi_scales(params)
    dw2 = (math.pi / 32.0) * (params.interaction_range / params.scattering_length) \
        * params.interaction_strength ** 2 / params.mass_ratio
    omega = math.sqrt(params.bare_trap_frequency ** 2 + dw2)
    return DerivedScales(mu_tf=mu, r_tf=r_tf, shifted_frequency=omega,
                         delta_omega_sq=dw2)


#: Reference configuration used by the demos, tests and ``fig-repro``. The
#: cloud (mu ~ 60, R_TF ~ 11) is large enough for sound to dominate the round
#: trip while the n = 64 grid still resolves the free-particle part of the
#: spectrum at the edge; a = 1.5 puts the rate maximum near Omega ~ 10-15.
DEFAULT_CONFIG = """\
mass_ratio = 10
atom_number = 2100000
scattering_length = 0.005
interaction_range = 1.5
interaction_strength = 1.0
trap_frequency_ion = 15.0
epsilon = 0.005
"""


def default_config() -> RunConfig:
    return parse_config(DEFAULT_CONFIG)


def default_params() -> PhysicalParams:
    return default_config().params
