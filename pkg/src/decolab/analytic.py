"""Closed-form screen intensity rho(x, x, t) for the decohering n-slit setup.

Three evaluation modes are provided:

* ``exact``          -- the full Gaussian solution of the master equation,
                        valid for any gamma t (including the dissipative regime).
* ``farfield``       -- weak coupling (gamma t << 1), narrow slits: every pair
                        of slits contributes a cross term damped by
                        exp(-(j-k)^2 t / tau_d).
* ``nodecoherence``  -- the far-field pattern with that damping set to one.

Every function accepts either an :class:`~decolab.model.ExperimentConfig`
(SI units) or a :class:`~decolab.model.DimensionlessInstance` (lengths in slit
spacings, times in flight times). Internally both reduce to the ratios
q = hbar/m and w = D/m^2, which is all the formulas need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from decolab.constants import HBAR
from decolab.errors import InvalidParameterError, NumericalError
from decolab.model import (
    FRAUNHOFER_ERROR,
    FRAUNHOFER_WARN,
    DimensionlessInstance,
    ExperimentConfig,
    require_valid,
)

Config = Union[ExperimentConfig, DimensionlessInstance]

# Below this gamma*t the bracket 4u + 4e^{-2u} - e^{-4u} - 3 is summed as a
# series; above it the closed form loses < 1e-14 to cancellation.
SERIES_SWITCH = 0.1


class EvaluationMode(str, Enum):
    EXACT = "exact"
    FARFIELD = "farfield"
    NODECOHERENCE = "nodecoherence"

    @classmethod
    def parse(cls, value) -> "EvaluationMode":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("-", "").replace("_", "")
        for m in cls:
            if m.value == v:
                return m
        raise InvalidParameterError(f"unknown evaluation mode {value!r}")


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    """Sampled screen intensity.

    ``normalization`` is ``"raw"`` (probability density, 1/length) or
    ``"peak-normalized"``: divided by ``reference``, the grid maximum of the
    same pattern with decoherence switched off. ``envelope`` is the matching
    incoherent (orthogonal-detector) pattern under the same normalization,
    when it was computed.
    """

    x: np.ndarray
    intensity: np.ndarray
    t: float
    normalization: str = "raw"
    reference: float = 1.0
    mode: str = "exact"
    envelope: Optional[np.ndarray] = None
    imag_max: float = 0.0

    def __post_init__(self):
        if len(self.x) != len(self.intensity):
            raise InvalidParameterError("x and intensity must have equal length")


# ---------------------------------------------------------------------------
# kernel parameters


@dataclass(frozen=True)
class _Kernel:
    eps: float
    spacing: float
    q: float  # hbar / m
    w: float  # D / m^2
    gamma: float
    mags: np.ndarray
    phases: np.ndarray
    overlaps: np.ndarray

    @property
    def n(self):
        return len(self.mags)


def _kernel(cfg: Config, *, diffusion: Optional[float] = None, overlaps=None) -> _Kernel:
    if isinstance(cfg, DimensionlessInstance):
        q = 1.0 / cfg.phi
        w = 12.0 * cfg.kappa_rate / cfg.phi**2 if diffusion is None else diffusion
        k = _Kernel(cfg.eps_hat, 1.0, q, w, cfg.gamma_hat, cfg.amplitudes.magnitudes,
                    cfg.amplitudes.phases, cfg.overlaps.matrix)
    elif isinstance(cfg, ExperimentConfig):
        require_valid(cfg)
        m = cfg.quanton.mass
        D = cfg.diffusion if diffusion is None else diffusion
        k = _Kernel(cfg.slits.width, cfg.slits.spacing, HBAR / m, D / m**2,
                    cfg.environment.gamma, cfg.amplitudes.magnitudes,
                    cfg.amplitudes.phases, cfg.detector.matrix)
    else:
        raise InvalidParameterError(f"expected a config, got {type(cfg).__name__}")
    if overlaps is not None:
        k = _Kernel(k.eps, k.spacing, k.q, k.w, k.gamma, k.mags, k.phases, np.asarray(overlaps, float))
    return k


def _overlaps_for(cfg: Config, detector) -> Optional[np.ndarray]:
    if detector is None or detector == "config":
        return None
    n = cfg.n
    if detector == "parallel":
        return np.ones((n, n))
    if detector == "orthogonal":
        return np.eye(n)
    raise InvalidParameterError(f"unknown detector mode {detector!r}")


# ---------------------------------------------------------------------------
# time-dependent coefficients


def _relax(gamma: float, t: float) -> float:
    """(1 - e^{-2 gamma t}) / gamma, -> 2t as gamma -> 0."""
    if gamma == 0.0:
        return 2.0 * t
    return -math.expm1(-2.0 * gamma * t) / gamma


def diffusion_bracket(gamma: float, t: float) -> float:
    """[4 gamma t + 4 e^{-2 gamma t} - e^{-4 gamma t} - 3] / gamma^3.

    Tends to (16/3) t^3 as gamma -> 0. Positive for every gamma t > 0.
    """
    u = gamma * t
    if u < SERIES_SWITCH:
        # sum_{k>=3} [4 (-2)^k - (-4)^k] u^k / k!, divided by gamma^3 = (u/t)^3
        total = 0.0
        term_pow = 1.0  # u^(k-3)
        fact = 6.0  # k!
        for k in range(3, 40):
            coef = 4.0 * (-2.0) ** k - (-4.0) ** k
            contrib = coef * term_pow / fact
            total += contrib
            if abs(contrib) < 1e-18 * abs(total):
                break
            term_pow *= u
            fact *= k + 1
        return total * t**3
    return (4.0 * u + 4.0 * math.exp(-2.0 * u) - math.exp(-4.0 * u) - 3.0) / gamma**3


def _alpha_k(k: _Kernel, t: float) -> float:
    E = _relax(k.gamma, t)
    a = k.eps**2 + (k.q * E / k.eps) ** 2 + k.w * diffusion_bracket(k.gamma, t) / 8.0
    if not math.isfinite(a) or a <= 0:
        raise NumericalError(f"alpha evaluated to {a}")
    return a


def _alpha_farfield(k: _Kernel, t: float) -> float:
    """alpha with gamma = D = 0: eps^2 + (2 hbar t / (m eps))^2. The far-field
    prefactor uses this, so D enters those modes only through the pair damping."""
    return _alpha_k(_Kernel(k.eps, k.spacing, k.q, 0.0, 0.0, k.mags, k.phases, k.overlaps), t)


def _check_time(t):
    if not math.isfinite(t) or t < 0:
        raise InvalidParameterError(f"t must be finite and >= 0, got {t}")


def alpha(t: float, eps: float, m: float, gamma: float, D: float) -> float:
    """Squared width parameter of the diagonal Gaussians at time t (m^2)."""
    _check_time(t)
    if eps <= 0 or m <= 0 or gamma < 0 or D < 0:
        raise InvalidParameterError("need eps > 0, m > 0, gamma >= 0, D >= 0")
    k = _Kernel(eps, 1.0, HBAR / m, D / m**2, gamma, np.ones(1), np.zeros(1), np.ones((1, 1)))
    return _alpha_k(k, t)


def alpha_of(cfg: Config, t: float) -> float:
    _check_time(t)
    return _alpha_k(_kernel(cfg), t)


def _check_pair(k: _Kernel, j: int, kk: int):
    if not (1 <= j <= k.n and 1 <= kk <= k.n):
        raise InvalidParameterError(f"slit indices must lie in 1..{k.n}")


def _f_jk(k: _Kernel, x, j, kk, t):
    ell = k.spacing
    extra = ell**2 * (j - kk) ** 2 * k.w * diffusion_bracket(k.gamma, t) / (16.0 * k.eps**2)
    return (x - j * ell) ** 2 + (x - kk * ell) ** 2 + extra


def f_jk(x, j: int, k: int, t: float, cfg: Config):
    """Exponent numerator of the (j, k) cross term."""
    _check_time(t)
    kern = _kernel(cfg)
    _check_pair(kern, j, k)
    return _f_jk(kern, np.asarray(x, float), j, k, t)


def _phase(k: _Kernel, x, j, kk, t, a):
    ell = k.spacing
    geo = 2.0 * k.q * _relax(k.gamma, t) * ell * (kk - j) * (x - ell * (kk + j) / 2.0) / (a * k.eps**2)
    return geo + k.phases[kk - 1] - k.phases[j - 1]


def phase_argument(x, j: int, k: int, t: float, cfg: Config):
    """Argument of the cosine in the (j, k) cross term (radians)."""
    _check_time(t)
    kern = _kernel(cfg)
    _check_pair(kern, j, k)
    return _phase(kern, np.asarray(x, float), j, k, t, _alpha_k(kern, t))


# ---------------------------------------------------------------------------
# intensity


def _farfield_check(cfg: Config):
    if isinstance(cfg, ExperimentConfig):
        F = cfg.fraunhofer_number
    else:
        F = cfg.fraunhofer_number
    if F > FRAUNHOFER_ERROR:
        raise InvalidParameterError(f"far-field mode needs pi eps^2/(lambda L) << 1, got {F:.3g}")
    return F > FRAUNHOFER_WARN


def _terms(k: _Kernel, x, t, mode: EvaluationMode):
    """Yield (j, k, term) with j == k for direct terms and j < k for the
    combined (j,k)+(k,j) cross terms. Terms carry the 1/sqrt(pi alpha/2)
    prefactor."""
    ell = k.spacing
    n = k.n
    if mode is EvaluationMode.EXACT:
        a = _alpha_k(k, t)
        pref = 1.0 / math.sqrt(math.pi * a / 2.0)
        for j in range(1, n + 1):
            yield j, j, pref * k.mags[j - 1] ** 2 * np.exp(-2.0 * (x - j * ell) ** 2 / a)
        for j in range(1, n + 1):
            for kk in range(j + 1, n + 1):
                amp = k.mags[j - 1] * k.mags[kk - 1] * k.overlaps[j - 1, kk - 1]
                if amp == 0.0:
                    yield j, kk, np.zeros_like(x)
                    continue
                term = np.exp(-_f_jk(k, x, j, kk, t) / a) * np.cos(_phase(k, x, j, kk, t, a))
                yield j, kk, 2.0 * pref * amp * term
        return

    if t <= 0:
        raise InvalidParameterError("far-field modes need t > 0")
    decohere = mode is EvaluationMode.FARFIELD
    a = _alpha_farfield(k, t)
    pref = 1.0 / math.sqrt(math.pi * a / 2.0)
    spread = 2.0 * k.q * t  # lambda L / pi at the flight time
    env = (spread / k.eps) ** 2
    for j in range(1, n + 1):
        yield j, j, pref * k.mags[j - 1] ** 2 * np.exp(-2.0 * (x - j * ell) ** 2 / env)
    rate = k.w * ell**2 * t / (12.0 * k.q**2) if decohere else 0.0
    for j in range(1, n + 1):
        for kk in range(j + 1, n + 1):
            amp = k.mags[j - 1] * k.mags[kk - 1] * k.overlaps[j - 1, kk - 1]
            if amp == 0.0:
                yield j, kk, np.zeros_like(x)
                continue
            damp = math.exp(-((j - kk) ** 2) * rate)
            envl = np.exp(-((x - j * ell) ** 2 + (x - kk * ell) ** 2) / env)
            arg = 2.0 * ell * (kk - j) * (x - ell * (kk + j) / 2.0) / spread
            arg = arg + k.phases[kk - 1] - k.phases[j - 1]
            yield j, kk, 2.0 * pref * amp * envl * damp * np.cos(arg)


def intensity(x, t: float, cfg: Config, mode="exact", *, detector=None):
    """rho(x, x, t) in 1/length. ``detector`` may be ``"parallel"`` or
    ``"orthogonal"`` to override the configured overlaps."""
    _check_time(t)
    mode = EvaluationMode.parse(mode)
    if mode is not EvaluationMode.EXACT:
        _farfield_check(cfg)
    kern = _kernel(cfg, overlaps=_overlaps_for(cfg, detector))
    xa = np.asarray(x, dtype=float)
    total = np.zeros_like(xa)
    for _, _, term in _terms(kern, xa, t, mode):
        total = total + term
    if not np.all(np.isfinite(total)):
        raise NumericalError("nonfinite intensity")
    return total


def pair_terms(x, t: float, cfg: Config, mode="exact", *, detector=None) -> dict:
    """Term-wise decomposition: ``{(j, j): direct, (j, k): cross (j<k)}``."""
    _check_time(t)
    mode = EvaluationMode.parse(mode)
    kern = _kernel(cfg, overlaps=_overlaps_for(cfg, detector))
    xa = np.asarray(x, dtype=float)
    return {(j, k): term for j, k, term in _terms(kern, xa, t, mode)}


def _without_decoherence(cfg: Config) -> Config:
    if isinstance(cfg, DimensionlessInstance):
        return cfg.with_(kappa_rate=0.0)
    return cfg.with_kappa(0.0, cfg.flight_time)


def screen_grid(cfg: Config) -> np.ndarray:
    if isinstance(cfg, ExperimentConfig):
        return cfg.screen.grid()
    if cfg.x_hat is not None:
        return np.asarray(cfg.x_hat)
    raise InvalidParameterError("dimensionless instance has no screen grid; pass one")


def pattern(cfg: Config, t: float, mode="farfield", grid=None, *, normalize=True,
            detector=None, with_envelope=True) -> IntensityProfile:
    """Sample the intensity on ``grid`` (default: the config's screen).

    With ``normalize`` the profile is divided by the maximum of the same
    pattern with decoherence switched off, so decay shows up as a drop below 1.
    """
    mode = EvaluationMode.parse(mode)
    x = screen_grid(cfg) if grid is None else np.asarray(grid, dtype=float)
    I = intensity(x, t, cfg, mode, detector=detector)
    env = intensity(x, t, cfg, mode, detector="orthogonal") if with_envelope else None
    if not normalize:
        return IntensityProfile(x, I, t, "raw", 1.0, mode.value, env)
    ref_cfg = _without_decoherence(cfg)
    ref = float(np.max(intensity(x, t, ref_cfg, mode, detector=detector)))
    if ref <= 0:
        raise NumericalError("reference pattern has no positive maximum")
    return IntensityProfile(x, I / ref, t, "peak-normalized", ref, mode.value,
                            None if env is None else env / ref)
