"""Physical quantities, validation, nondimensionalization and config ingestion.

All public types are frozen dataclasses. Array-valued fields are stored as
read-only numpy arrays so that configs can be shared across threads.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from decolab.constants import H, HBAR, K_B
from decolab.errors import ConfigError, InvalidParameterError

log = logging.getLogger(__name__)

FRAUNHOFER_WARN = 0.01
FRAUNHOFER_ERROR = 0.1
NORM_TOL = 1e-12


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuantonSpec:
    mass: float  # kg
    wavelength: float  # m, de Broglie


@dataclass(frozen=True)
class SlitArray:
    """``n`` Gaussian slits of width ``width``; slit j (1-based) sits at j*spacing."""

    n: int
    spacing: float  # m
    width: float  # m

    @property
    def centers(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.n + 1)

    @property
    def pattern_center(self) -> float:
        return self.spacing * (self.n + 1) / 2.0


@dataclass(frozen=True, eq=False)
class SourceAmplitudes:
    magnitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "magnitudes", _frozen(self.magnitudes))
        object.__setattr__(self, "phases", _frozen(self.phases))
        if self.magnitudes.shape != self.phases.shape or self.magnitudes.ndim != 1:
            raise InvalidParameterError("amplitude magnitudes and phases must be 1-D and equal length")

    @classmethod
    def uniform(cls, n: int) -> "SourceAmplitudes":
        return cls(np.full(n, 1.0 / math.sqrt(n)), np.zeros(n))

    @property
    def n(self) -> int:
        return len(self.magnitudes)

    @property
    def complex(self) -> np.ndarray:
        return self.magnitudes * np.exp(1j * self.phases)

    @property
    def norm(self) -> float:
        return float(np.sum(self.magnitudes**2))


@dataclass(frozen=True, eq=False)
class DetectorOverlaps:
    """Real Gram matrix of which-way detector states, O_jk = <d_j|d_k>."""

    matrix: np.ndarray
    mode: str = "matrix"

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if np.iscomplexobj(m):
            if np.any(np.imag(m) != 0):
                raise InvalidParameterError("complex detector overlaps are not supported; fold phases into theta")
            m = np.real(m)
        object.__setattr__(self, "matrix", _frozen(m))
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise InvalidParameterError("detector overlap matrix must be square")

    @classmethod
    def parallel(cls, n: int) -> "DetectorOverlaps":
        return cls(np.ones((n, n)), "parallel")

    @classmethod
    def orthogonal(cls, n: int) -> "DetectorOverlaps":
        return cls(np.eye(n), "orthogonal")

    @classmethod
    def from_mode(cls, mode: str, n: int) -> "DetectorOverlaps":
        if mode == "parallel":
            return cls.parallel(n)
        if mode == "orthogonal":
            return cls.orthogonal(n)
        raise InvalidParameterError(f"unknown detector mode {mode!r}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EnvironmentSpec:
    """Thermal oscillator bath.

    ``diffusion`` overrides D = 2 m gamma k_B T. It represents the weak-coupling
    limit gamma -> 0, T -> inf at fixed D, which is how a bare decoherence
    strength t/tau_d is carried when gamma is not known.
    """

    gamma: float = 0.0  # 1/s
    temperature: float = 0.0  # K
    diffusion: Optional[float] = None  # kg^2 m^2 / s^3

    def diffusion_for(self, mass: float) -> float:
        if self.diffusion is not None:
            return float(self.diffusion)
        return diffusion_coefficient(mass, self.gamma, self.temperature)


@dataclass(frozen=True)
class ScreenGeometry:
    L: float  # m, slit-to-screen distance
    x_min: float
    x_max: float
    points: int = 2001

    def grid(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)

    @property
    def cell(self) -> float:
        return (self.x_max - self.x_min) / (self.points - 1)


@dataclass(frozen=True)
class ExperimentConfig:
    quanton: QuantonSpec
    slits: SlitArray
    amplitudes: SourceAmplitudes
    detector: DetectorOverlaps
    environment: EnvironmentSpec
    screen: ScreenGeometry

    @property
    def n(self) -> int:
        return self.slits.n

    @property
    def diffusion(self) -> float:
        return self.environment.diffusion_for(self.quanton.mass)

    @property
    def flight_time(self) -> float:
        return flight_time(self.quanton.wavelength, self.screen.L, self.quanton.mass)

    @property
    def fraunhofer_number(self) -> float:
        """pi eps^2 / (lambda L); far-field formulas need this << 1."""
        return math.pi * self.slits.width**2 / (self.quanton.wavelength * self.screen.L)

    @property
    def envelope_width(self) -> float:
        """Far-field single-slit envelope scale lambda L / (pi eps)."""
        return self.quanton.wavelength * self.screen.L / (math.pi * self.slits.width)

    @property
    def fringe_spacing(self) -> float:
        return self.quanton.wavelength * self.screen.L / self.slits.spacing

    def tau_d(self) -> float:
        """Two-slit (nearest-neighbour) decoherence time 12 hbar^2 / (D l^2)."""
        D = self.diffusion
        if D <= 0:
            return math.inf
        return 12.0 * HBAR**2 / (D * self.slits.spacing**2)

    def kappa(self, t: Optional[float] = None) -> float:
        """t / tau_d at time ``t`` (default: flight time)."""
        t = self.flight_time if t is None else t
        tau = self.tau_d()
        return 0.0 if math.isinf(tau) else t / tau

    def with_kappa(self, kappa: float, t: Optional[float] = None) -> "ExperimentConfig":
        """Same experiment with D chosen so that t/tau_d == kappa at ``t``."""
        if not math.isfinite(kappa) or kappa < 0:
            raise InvalidParameterError(f"kappa must be finite and >= 0, got {kappa}")
        t = self.flight_time if t is None else t
        if t <= 0:
            raise InvalidParameterError("kappa parameterization needs t > 0")
        D = 12.0 * HBAR**2 * kappa / (self.slits.spacing**2 * t)
        env = replace(self.environment, diffusion=D)
        return replace(self, environment=env)

    def with_environment(self, gamma: float, temperature: float) -> "ExperimentConfig":
        return replace(self, environment=EnvironmentSpec(gamma, temperature))

    def with_slits(self, n: int) -> "ExperimentConfig":
        """Change the slit count; amplitudes reset to uniform, detector mode kept
        when it is parallel/orthogonal and reset to parallel otherwise."""
        if n < 1:
            raise InvalidParameterError("slit count must be >= 1")
        mode = self.detector.mode if self.detector.mode in ("parallel", "orthogonal") else "parallel"
        return replace(
            self,
            slits=replace(self.slits, n=n),
            amplitudes=SourceAmplitudes.uniform(n),
            detector=DetectorOverlaps.from_mode(mode, n),
        )

    def with_detector(self, mode: str) -> "ExperimentConfig":
        return replace(self, detector=DetectorOverlaps.from_mode(mode, self.n))

    def with_screen(self, **kw) -> "ExperimentConfig":
        return replace(self, screen=replace(self.screen, **kw))


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    severity: str = "error"  # or "warning"

    def __str__(self):
        return f"[{self.severity}] {self.field}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    @property
    def errors(self):
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self):
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def fields(self):
        return [v.field for v in self.violations]


def _finite_positive(x) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x) and x > 0


def _finite_nonneg(x) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x) and x >= 0


def validate(config: ExperimentConfig) -> ValidationReport:
    """Check every invariant; never raises."""
    out = []

    def bad(fieldname, msg, severity="error"):
        out.append(Violation(fieldname, msg, severity))

    q, s, a, d, e, sc = (config.quanton, config.slits, config.amplitudes,
                         config.detector, config.environment, config.screen)
    if not _finite_positive(q.mass):
        bad("quanton.mass", "mass must be finite and > 0")
    if not _finite_positive(q.wavelength):
        bad("quanton.lambda", "wavelength must be finite and > 0")
    if not isinstance(s.n, (int, np.integer)) or s.n < 1:
        bad("slits.n", "slit count must be an integer >= 1")
    if not _finite_positive(s.spacing):
        bad("slits.spacing", "spacing must be finite and > 0")
    if not _finite_positive(s.width):
        bad("slits.width", "width must be finite and > 0")

    if a.n != s.n:
        bad("amplitudes.c", f"expected {s.n} amplitudes, got {a.n}")
    if not np.all(np.isfinite(a.magnitudes)) or np.any(a.magnitudes < 0):
        bad("amplitudes.c", "magnitudes must be finite and >= 0")
    elif abs(a.norm - 1.0) > NORM_TOL:
        bad("amplitudes.c", f"amplitude normalization: sum |c_j|^2 = {a.norm:.15g} != 1")
    if not np.all(np.isfinite(a.phases)):
        bad("amplitudes.theta", "phases must be finite")

    O = d.matrix
    if O.shape != (s.n, s.n):
        bad("detector.matrix", f"expected {s.n}x{s.n} overlaps, got {O.shape}")
    elif not np.all(np.isfinite(O)):
        bad("detector.matrix", "overlaps must be finite")
    else:
        if np.max(np.abs(np.diag(O) - 1.0)) > 1e-12:
            bad("detector.matrix", "detector states must be normalized (O_jj = 1)")
        if np.max(np.abs(O - O.T)) > 1e-12:
            bad("detector.matrix", "overlap matrix must be symmetric")
        if np.any(O < -1e-12) or np.any(O > 1 + 1e-12):
            bad("detector.matrix", "overlaps must lie in [0, 1]")
        if np.min(np.linalg.eigvalsh(0.5 * (O + O.T))) < -1e-10:
            bad("detector.matrix", "overlap matrix must be positive semidefinite")

    if not _finite_nonneg(e.gamma):
        bad("env.gamma", "friction coefficient must be finite and >= 0")
    if not _finite_nonneg(e.temperature):
        bad("env.T", "temperature must be finite and >= 0")
    if e.diffusion is not None and not _finite_nonneg(e.diffusion):
        bad("env.D", "diffusion coefficient must be finite and >= 0")

    if not _finite_positive(sc.L):
        bad("screen.L", "screen distance must be finite and > 0")
    if not (math.isfinite(sc.x_min) and math.isfinite(sc.x_max)) or sc.x_min >= sc.x_max:
        bad("screen.x", "need finite x_min < x_max")
    if not isinstance(sc.points, (int, np.integer)) or sc.points < 2:
        bad("screen.points", "need at least 2 grid points")

    if _finite_positive(s.width) and _finite_positive(q.wavelength) and _finite_positive(sc.L):
        F = config.fraunhofer_number
        if F > FRAUNHOFER_ERROR:
            bad("fraunhofer", f"pi eps^2/(lambda L) = {F:.4g} > {FRAUNHOFER_ERROR}")
        elif F > FRAUNHOFER_WARN:
            bad("fraunhofer", f"pi eps^2/(lambda L) = {F:.4g} > {FRAUNHOFER_WARN}", "warning")
    return ValidationReport(tuple(out))


def require_valid(config: ExperimentConfig) -> ExperimentConfig:
    report = validate(config)
    if report.errors:
        v = report.errors[0]
        raise InvalidParameterError(f"{v.field}: {v.message}")
    return config


# ---------------------------------------------------------------------------
# elementary quantities


def _check_finite(**kw):
    for name, v in kw.items():
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v}")


def diffusion_coefficient(m: float, gamma: float, T: float) -> float:
    """D = 2 m gamma k_B T."""
    _check_finite(m=m, gamma=gamma, T=T)
    if m <= 0 or gamma < 0 or T < 0:
        raise InvalidParameterError("need m > 0, gamma >= 0, T >= 0")
    return 2.0 * m * gamma * K_B * T


def flight_time(wavelength: float, L: float, m: float) -> float:
    """Slit-to-screen transit time lambda L m / h (de Broglie velocity h/(m lambda))."""
    _check_finite(wavelength=wavelength, L=L, m=m)
    if wavelength <= 0 or m <= 0 or L < 0:
        raise InvalidParameterError("need lambda > 0, m > 0, L >= 0")
    return wavelength * L * m / H


# ---------------------------------------------------------------------------
# dimensionless form


@dataclass(frozen=True, eq=False)
class DimensionlessInstance:
    """Experiment in units of the slit spacing and the flight time.

    In these units the master equation reads

        d rho/dt = (i/2 phi)(d_xx - d_x'x') rho - gamma_hat r (d_x - d_x') rho
                   - 3 kappa_rate r^2 rho,    r = x - x'

    with phi = 2 pi l^2/(lambda L) and kappa_rate = t_flight / tau_d.
    ``kappa`` (t/tau_d at the evaluation time) is kappa_rate * t_hat.
    The SI anchors are optional; they are only needed to go back to SI.
    """

    eps_hat: float
    phi: float
    kappa_rate: float = 0.0
    gamma_hat: float = 0.0
    t_hat: float = 1.0
    amplitudes: SourceAmplitudes = None
    overlaps: DetectorOverlaps = None
    x_hat: Optional[np.ndarray] = None
    spacing: Optional[float] = None
    t_flight: Optional[float] = None
    mass: Optional[float] = None
    wavelength: Optional[float] = None
    temperature: Optional[float] = None

    def __post_init__(self):
        if self.amplitudes is None:
            object.__setattr__(self, "amplitudes", SourceAmplitudes.uniform(2))
        if self.overlaps is None:
            object.__setattr__(self, "overlaps", DetectorOverlaps.parallel(self.amplitudes.n))
        if self.x_hat is not None:
            object.__setattr__(self, "x_hat", _frozen(self.x_hat))
        for name in ("eps_hat", "phi", "kappa_rate", "gamma_hat", "t_hat"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be finite")
        if self.eps_hat <= 0 or self.phi <= 0:
            raise InvalidParameterError("eps_hat and phi must be > 0")
        if self.kappa_rate < 0 or self.gamma_hat < 0 or self.t_hat < 0:
            raise InvalidParameterError("kappa, gamma_hat and t_hat must be >= 0")

    @classmethod
    def make(cls, n=2, *, eps_hat, phi, kappa=0.0, gamma_hat=0.0, t_hat=1.0,
             amplitudes=None, detector="parallel"):
        """Build a bare instance; ``kappa`` is t/tau_d at ``t_hat``."""
        amps = amplitudes if amplitudes is not None else SourceAmplitudes.uniform(n)
        if isinstance(detector, str):
            detector = DetectorOverlaps.from_mode(detector, n)
        rate = kappa / t_hat if t_hat > 0 else 0.0
        return cls(eps_hat=eps_hat, phi=phi, kappa_rate=rate, gamma_hat=gamma_hat,
                   t_hat=t_hat, amplitudes=amps, overlaps=detector)

    @property
    def n(self) -> int:
        return self.amplitudes.n

    @property
    def kappa(self) -> float:
        return self.kappa_rate * self.t_hat

    @property
    def fraunhofer_number(self) -> float:
        return self.eps_hat**2 * self.phi / 2.0

    def with_(self, **kw) -> "DimensionlessInstance":
        return replace(self, **kw)


def nondimensionalize(config: ExperimentConfig, t: float) -> DimensionlessInstance:
    require_valid(config)
    if not math.isfinite(t) or t < 0:
        raise InvalidParameterError("t must be finite and >= 0")
    ell = config.slits.spacing
    tf = config.flight_time
    lam, L = config.quanton.wavelength, config.screen.L
    return DimensionlessInstance(
        eps_hat=config.slits.width / ell,
        phi=2.0 * math.pi * ell**2 / (lam * L),
        kappa_rate=tf / config.tau_d(),
        gamma_hat=config.environment.gamma * tf,
        t_hat=t / tf,
        amplitudes=config.amplitudes,
        overlaps=config.detector,
        x_hat=config.screen.grid() / ell,
        spacing=ell,
        t_flight=tf,
        mass=config.quanton.mass,
        wavelength=lam,
        temperature=config.environment.temperature,
    )


def redimensionalize(inst: DimensionlessInstance):
    """Inverse of :func:`nondimensionalize`; returns ``(config, t)``."""
    if None in (inst.spacing, inst.t_flight, inst.mass, inst.wavelength):
        raise InvalidParameterError("instance carries no SI anchors")
    ell, tf, m, lam = inst.spacing, inst.t_flight, inst.mass, inst.wavelength
    L = 2.0 * math.pi * ell**2 / (inst.phi * lam)
    gamma = inst.gamma_hat / tf
    D = 12.0 * HBAR**2 * inst.kappa_rate / (ell**2 * tf)
    T = inst.temperature if inst.temperature is not None else 0.0
    if gamma > 0 and D > 0:
        T = D / (2.0 * m * gamma * K_B)
        env = EnvironmentSpec(gamma, T)
    elif D > 0:
        env = EnvironmentSpec(gamma, T, diffusion=D)
    else:
        env = EnvironmentSpec(gamma, T)
    if inst.x_hat is not None:
        x = inst.x_hat * ell
        screen = ScreenGeometry(L, float(x[0]), float(x[-1]), len(x))
    else:
        c = ell * (inst.n + 1) / 2
        w = lam * L / (math.pi * inst.eps_hat * ell)
        screen = ScreenGeometry(L, c - 2.5 * w, c + 2.5 * w)
    cfg = ExperimentConfig(
        QuantonSpec(m, lam),
        SlitArray(inst.n, ell, inst.eps_hat * ell),
        inst.amplitudes,
        inst.overlaps,
        env,
        screen,
    )
    return cfg, inst.t_hat * tf


# ---------------------------------------------------------------------------
# presets

# eps is not printed in the figure captions; 1 um / 20 nm keep eps^2 << lambda L / pi.
_PRESETS = {
    "neon": dict(mass=3.349e-26, T=2.5e-3, lam=0.018e-6, ell=6e-6, L=37e-3, eps=1e-6),
    "c60": dict(mass=1.2e-24, T=900.0, lam=0.0025e-9, ell=100e-9, L=1.25, eps=20e-9),
}
DEFAULT_SLITS = 4
SCREEN_HALF_WIDTHS = 2.5  # envelope widths on each side of the pattern centre


def preset_names():
    return list(_PRESETS)


def default_screen(n, ell, eps, lam, L, points=2001) -> ScreenGeometry:
    c = ell * (n + 1) / 2
    w = lam * L / (math.pi * eps)
    return ScreenGeometry(L, c - SCREEN_HALF_WIDTHS * w, c + SCREEN_HALF_WIDTHS * w, points)


def load_preset(name: str, n: int = DEFAULT_SLITS) -> ExperimentConfig:
    try:
        p = _PRESETS[name.lower()]
    except KeyError:
        raise InvalidParameterError(
            f"unknown preset {name!r}; available: {', '.join(_PRESETS)}") from None
    return ExperimentConfig(
        QuantonSpec(p["mass"], p["lam"]),
        SlitArray(n, p["ell"], p["eps"]),
        SourceAmplitudes.uniform(n),
        DetectorOverlaps.parallel(n),
        EnvironmentSpec(0.0, p["T"]),
        default_screen(n, p["ell"], p["eps"], p["lam"], p["L"]),
    )


# ---------------------------------------------------------------------------
# config files

_REQUIRED = ("quanton.mass_kg", "quanton.lambda_m", "slits.n", "slits.spacing_m",
             "slits.width_m", "screen.L_m")
_OPTIONAL = ("amplitudes.c", "amplitudes.theta", "detector.mode", "detector.matrix",
             "env.gamma_per_s", "env.T_K", "screen.xmin_m", "screen.xmax_m", "screen.points")


def _parse_float(text, key, line):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}", line=line, field=key) from None
    return v


def _parse_list(text, key, line):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty list", line=line, field=key)
    out = []
    for p in parts:
        try:
            out.append(float(p))
        except ValueError:
            try:
                z = complex(p.replace(" ", ""))
            except ValueError:
                raise ConfigError(f"not a number: {p!r}", line=line, field=key) from None
            if z.imag != 0:
                raise ConfigError("complex values are not accepted; fold phases into "
                                  "amplitudes.theta", line=line, field=key)
            out.append(z.real)
    return out


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into ``{key: (value, line_number)}``."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _REQUIRED and key not in _OPTIONAL:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        entries[key] = (value, lineno)
    return entries


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    return config_from_text(text)


def config_from_text(text: str) -> ExperimentConfig:
    e = parse_config_text(text)
    for key in _REQUIRED:
        if key not in e:
            raise ConfigError(f"missing required key {key!r}", field=key)

    def num(key, default=None):
        if key not in e:
            return default
        return _parse_float(e[key][0], key, e[key][1])

    n_raw = num("slits.n")
    if n_raw != int(n_raw) or n_raw < 1:
        raise ConfigError("slit count must be a positive integer", line=e["slits.n"][1], field="slits.n")
    n = int(n_raw)
    mass, lam = num("quanton.mass_kg"), num("quanton.lambda_m")
    ell, eps, L = num("slits.spacing_m"), num("slits.width_m"), num("screen.L_m")

    if "amplitudes.c" in e:
        v, ln = e["amplitudes.c"]
        mags = _parse_list(v, "amplitudes.c", ln)
        if len(mags) != n:
            raise ConfigError(f"expected {n} amplitudes, got {len(mags)}", line=ln, field="amplitudes.c")
    else:
        mags = [1.0 / math.sqrt(n)] * n
    if "amplitudes.theta" in e:
        v, ln = e["amplitudes.theta"]
        theta = _parse_list(v, "amplitudes.theta", ln)
        if len(theta) != n:
            raise ConfigError(f"expected {n} phases, got {len(theta)}", line=ln, field="amplitudes.theta")
    else:
        theta = [0.0] * n

    mode = e.get("detector.mode", ("parallel", None))[0]
    if mode in ("parallel", "orthogonal"):
        if "detector.matrix" in e:
            raise ConfigError("detector.matrix given but detector.mode is not 'matrix'",
                              line=e["detector.matrix"][1], field="detector.matrix")
        detector = DetectorOverlaps.from_mode(mode, n)
    elif mode == "matrix":
        if "detector.matrix" not in e:
            raise ConfigError("detector.mode=matrix needs detector.matrix", field="detector.matrix")
        v, ln = e["detector.matrix"]
        vals = _parse_list(v, "detector.matrix", ln)
        if len(vals) != n * n:
            raise ConfigError(f"expected {n * n} entries, got {len(vals)}", line=ln, field="detector.matrix")
        detector = DetectorOverlaps(np.array(vals).reshape(n, n), "matrix")
    else:
        raise ConfigError(f"unknown detector mode {mode!r}", line=e["detector.mode"][1], field="detector.mode")

    env = EnvironmentSpec(num("env.gamma_per_s", 0.0), num("env.T_K", 0.0))
    points_raw = num("screen.points", 2001)
    if points_raw != int(points_raw):
        raise ConfigError("screen.points must be an integer", field="screen.points")
    if eps > 0 and lam > 0 and L > 0 and ell > 0:
        default = default_screen(n, ell, eps, lam, L, int(points_raw))
    else:
        default = ScreenGeometry(L, -1.0, 1.0, int(points_raw))
    screen = ScreenGeometry(L, num("screen.xmin_m", default.x_min),
                            num("screen.xmax_m", default.x_max), int(points_raw))

    cfg = ExperimentConfig(QuantonSpec(mass, lam), SlitArray(n, ell, eps),
                           SourceAmplitudes(mags, theta), detector, env, screen)
    report = validate(cfg)
    for w in report.warnings:
        log.warning("%s", w)
    if report.errors:
        v = report.errors[0]
        raise ConfigError(v.message, field=v.field)
    return cfg
