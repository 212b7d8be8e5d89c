"""Normalized l1 coherence of the slit-basis state, the two-mode intensity
protocol that measures it, and inversion of coherence into decoherence time."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import argrelextrema

from decolab.analytic import (
    Config,
    IntensityProfile,
    _alpha_farfield,
    _kernel,
    intensity,
)
from decolab.constants import H, HBAR
from decolab.errors import (
    InvalidParameterError,
    NumericalError,
    ProtocolInapplicableError,
    UndefinedCoherenceError,
)
from decolab.model import DimensionlessInstance, diffusion_coefficient

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SlitBasisDensityMatrix:
    rho: np.ndarray

    def __post_init__(self):
        r = np.array(self.rho, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise InvalidParameterError("density matrix must be square")
        if np.max(np.abs(r - r.conj().T)) > HERMITIAN_TOL:
            raise InvalidParameterError("density matrix is not Hermitian")
        if abs(np.trace(r) - 1.0) > HERMITIAN_TOL:
            raise InvalidParameterError(f"density matrix trace {np.trace(r).real:.15g} != 1")
        if np.any(np.real(np.diag(r)) < -HERMITIAN_TOL):
            raise InvalidParameterError("negative population on the diagonal")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @property
    def n(self) -> int:
        return self.rho.shape[0]


@dataclass(frozen=True)
class CoherenceReading:
    value: float
    method: str  # matrix | analytic | protocol
    t: float

    def __post_init__(self):
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise NumericalError(f"coherence {self.value} outside [0, 1]")


@dataclass(frozen=True)
class DecoherenceEstimate:
    tau_d: float
    source: str  # formula | coherence-inversion | intensity-inversion

    def __post_init__(self):
        if not self.tau_d > 0:
            raise NumericalError(f"decoherence time must be > 0, got {self.tau_d}")


# ---------------------------------------------------------------------------
# helpers


def kappa_at(cfg: Config, t: float) -> float:
    """t / tau_d with tau_d the nearest-neighbour decoherence time."""
    if isinstance(cfg, DimensionlessInstance):
        return cfg.kappa_rate * t
    return cfg.kappa(t)


def _require_pairs(n: int):
    if n < 2:
        raise UndefinedCoherenceError("coherence is undefined for a single slit (n - 1 = 0)")


def _pair_weights(n: int, kappa: float) -> np.ndarray:
    d = np.subtract.outer(np.arange(n), np.arange(n))
    return np.exp(-(d**2) * kappa)


# ---------------------------------------------------------------------------
# coherence three ways


def coherence_of_matrix(rho) -> float:
    """(1/(n-1)) sum_{i != j} |rho_ij|."""
    if not isinstance(rho, SlitBasisDensityMatrix):
        rho = SlitBasisDensityMatrix(rho)
    r = rho.rho
    n = r.shape[0]
    _require_pairs(n)
    off = np.abs(r).sum() - np.abs(np.diag(r)).sum()
    return float(off / (n - 1))


def slit_density_matrix(cfg: Config, t: float, detector_mode: str = "parallel") -> SlitBasisDensityMatrix:
    """rho_jk(t) = c_j c_k^* O_kj exp(-(j-k)^2 t/tau_d).

    ``detector_mode`` is ``parallel``, ``orthogonal`` or ``config`` (use the
    configured overlaps).
    """
    if t < 0:
        raise InvalidParameterError("t must be >= 0")
    kern = _kernel(cfg)
    c = kern.mags * np.exp(1j * kern.phases)
    n = len(c)
    if detector_mode == "parallel":
        O = np.ones((n, n))
    elif detector_mode == "orthogonal":
        O = np.eye(n)
    elif detector_mode == "config":
        O = kern.overlaps
    else:
        raise InvalidParameterError(f"unknown detector mode {detector_mode!r}")
    rho = np.outer(c, c.conj()) * O.T * _pair_weights(n, kappa_at(cfg, t))
    return SlitBasisDensityMatrix(rho)


def coherence_analytic(cfg: Config, t: float) -> float:
    """(1/(n-1)) sum_{j != k} |c_j c_k| exp(-(j-k)^2 t/tau_d); detector independent."""
    if t < 0:
        raise InvalidParameterError("t must be >= 0")
    mags = cfg.amplitudes.magnitudes
    n = len(mags)
    _require_pairs(n)
    W = np.outer(mags, mags) * _pair_weights(n, kappa_at(cfg, t))
    np.fill_diagonal(W, 0.0)
    return float(W.sum() / (n - 1))


def coherence_from_intensities(I_par: float, I_perp: float, n: int) -> float:
    """(1/(n-1)) (I_par - I_perp) / I_perp. Not clamped to [0, 1]."""
    _require_pairs(n)
    if not I_perp > 0:
        raise InvalidParameterError("I_perp must be > 0")
    return (I_par - I_perp) / I_perp / (n - 1)


def coherence(cfg: Config, t: float, method: str = "analytic") -> CoherenceReading:
    if method == "analytic":
        v = coherence_analytic(cfg, t)
    elif method == "matrix":
        v = coherence_of_matrix(slit_density_matrix(cfg, t, "parallel"))
    elif method == "protocol":
        I_par = primary_max_intensity(cfg, t, "parallel")
        I_perp = primary_max_intensity(cfg, t, "orthogonal")
        v = coherence_from_intensities(I_par, I_perp, cfg.n)
    else:
        raise InvalidParameterError(f"unknown coherence method {method!r}")
    return CoherenceReading(v, method, t)


# ---------------------------------------------------------------------------
# measurement protocol


def _phase_ramp(phases: np.ndarray) -> Optional[float]:
    """Return the step d if theta_j = theta_1 + (j-1) d (mod 2 pi), else None."""
    if len(phases) < 2:
        return 0.0
    d = phases[1] - phases[0]
    resid = np.angle(np.exp(1j * (phases - phases[0] - d * np.arange(len(phases)))))
    return float(d) if np.max(np.abs(resid)) < 1e-9 else None


def primary_maximum(cfg: Config, t: float) -> float:
    """Screen position where all cross-term cosines are (nominally) one.

    Zero phases: the pattern centre l(n+1)/2. A linear phase ramp shifts it by
    -d/(2 pi l / (lambda L)), taking the copy nearest the centre. Any other
    phase set has no common maximum.
    """
    kern = _kernel(cfg)
    centre = kern.spacing * (kern.n + 1) / 2.0
    step = _phase_ramp(kern.phases)
    if step is None:
        raise ProtocolInapplicableError(
            "phases do not form a linear ramp: no screen point makes every cross-term cosine one")
    if step == 0.0:
        return centre
    spread = 2.0 * kern.q * t  # lambda L / pi
    K = 2.0 / spread  # 2 pi / (lambda L)
    shift = -np.angle(np.exp(1j * step)) / (K * kern.spacing)
    return centre + shift


def primary_max_intensity(cfg: Config, t: float, detector_mode: str = "parallel", *,
                          method: str = "envelope") -> float:
    """Intensity at the common primary maximum for one detector setting.

    ``method="envelope"`` uses the common-envelope far-field form
    g(x*)/sqrt(pi alpha/2) [sum|c_j|^2 + sum_{j!=k} |c_j c_k| e^{-(j-k)^2 t/tau_d}]
    (orthogonal: first sum only). ``method="pattern"`` evaluates the full
    far-field pattern at the same x*, so per-slit envelope offsets are kept.
    """
    if detector_mode not in ("parallel", "orthogonal"):
        raise InvalidParameterError("detector_mode must be 'parallel' or 'orthogonal'")
    if t <= 0:
        raise InvalidParameterError("the protocol is defined at the screen, t > 0")
    kern = _kernel(cfg)
    _require_pairs(kern.n)
    x_star = primary_maximum(cfg, t)
    if method == "pattern":
        return float(intensity(np.array([x_star]), t, cfg, "farfield", detector=detector_mode)[0])
    if method != "envelope":
        raise InvalidParameterError(f"unknown method {method!r}")
    a = _alpha_farfield(kern, t)
    centre = kern.spacing * (kern.n + 1) / 2.0
    env = (2.0 * kern.q * t / kern.eps) ** 2
    g = math.exp(-2.0 * (x_star - centre) ** 2 / env)
    bracket = float(np.sum(kern.mags**2))
    if detector_mode == "parallel":
        W = np.outer(kern.mags, kern.mags) * _pair_weights(kern.n, kappa_at(cfg, t))
        np.fill_diagonal(W, 0.0)
        bracket += float(W.sum())
    return g / math.sqrt(math.pi * a / 2.0) * bracket


# ---------------------------------------------------------------------------
# decoherence times


def pair_decoherence_time(j: int, k: int, D: float, spacing: float) -> float:
    """12 hbar^2 / (D (j-k)^2 l^2)."""
    if j == k:
        raise InvalidParameterError("a slit has no decoherence time with itself (j == k)")
    if not D > 0:
        raise InvalidParameterError("D = 0: decoherence time is infinite")
    if not spacing > 0:
        raise InvalidParameterError("spacing must be > 0")
    return 12.0 * HBAR**2 / (D * (j - k) ** 2 * spacing**2)


def two_slit_decoherence_time(m: float, gamma: float, T: float, spacing: float) -> float:
    """6 hbar^2 / (m gamma k_B T l^2)."""
    for name, v in (("m", m), ("gamma", gamma), ("T", T), ("spacing", spacing)):
        if not (math.isfinite(v) and v > 0):
            raise InvalidParameterError(f"{name} must be > 0 (got {v}); decoherence time is infinite")
    return pair_decoherence_time(1, 2, diffusion_coefficient(m, gamma, T), spacing)


def tau_d_from_coherence(C: float, t: float, c1: float = 1 / math.sqrt(2), c2: float = 1 / math.sqrt(2)) -> float:
    """Two-slit inversion tau_d = t / log(2|c1 c2| / C)."""
    if not t > 0:
        raise InvalidParameterError("t must be > 0")
    ceiling = 2.0 * abs(c1 * c2)
    if C <= 0:
        raise NumericalError("coherence <= 0: fully decohered, tau_d -> 0")
    if C >= ceiling:
        raise NumericalError(f"coherence {C} >= 2|c1 c2| = {ceiling}: no decoherence detected")
    return t / math.log(ceiling / C)


def tau_d_from_intensities(I_par: float, I_perp: float, wavelength: float, L: float, m: float,
                           c1c2: float = 0.5) -> float:
    """Symmetric two-slit inversion (lambda L m / h) / log(I_perp / (I_par - I_perp)).

    ``c1c2`` = |c1 c2| generalizes to asymmetric slits via the coherence form.
    """
    if not I_perp > 0:
        raise InvalidParameterError("I_perp must be > 0")
    if I_par <= I_perp:
        raise NumericalError("I_par <= I_perp: no interference excess")
    C = (I_par - I_perp) / I_perp
    ratio = 2.0 * c1c2 / C
    if ratio <= 1.0:
        raise NumericalError("log argument <= 1: coherence shows no decoherence (tau_d infinite)")
    t = wavelength * L * m / H
    return t / math.log(ratio)


# ---------------------------------------------------------------------------
# fringe visibility


def visibility(profile: IntensityProfile, *, use_envelope: bool = True) -> float:
    """(I_max - I_min)/(I_max + I_min) from the maximum nearest the grid centre
    and its adjacent minimum.

    When the profile carries an incoherent ``envelope`` (and ``use_envelope``),
    extrema are located on I/envelope, which removes the single-slit envelope
    slope that otherwise swallows weak fringes.
    """
    I = np.asarray(profile.intensity, dtype=float)
    if np.ptp(I) <= 1e-14 * max(np.max(np.abs(I)), 1e-300):
        raise InvalidParameterError("flat profile: no fringes")
    if use_envelope and profile.envelope is not None:
        env = np.asarray(profile.envelope, dtype=float)
        if np.any(env <= 0):
            keep = env > 0
            I = np.where(keep, I / np.where(keep, env, 1.0), np.nan)
        else:
            I = I / env
    if np.nanmax(I) - np.nanmin(I) <= 1e-12 * np.nanmax(np.abs(I)):
        return 0.0  # intensity follows the incoherent envelope exactly
    maxima = argrelextrema(I, np.greater_equal, order=1)[0]
    minima = argrelextrema(I, np.less_equal, order=1)[0]
    maxima = maxima[(maxima > 0) & (maxima < len(I) - 1)]
    minima = minima[(minima > 0) & (minima < len(I) - 1)]
    if len(maxima) == 0 or len(minima) == 0:
        raise InvalidParameterError("profile has no interior maximum/minimum pair")
    mid = (len(I) - 1) / 2.0
    i_max = maxima[np.argmin(np.abs(maxima - mid))]
    i_min = minima[np.argmin(np.abs(minima - i_max))]
    hi, lo = I[i_max], I[i_min]
    if hi + lo <= 0:
        raise NumericalError("non-positive intensity at the extrema")
    return float((hi - lo) / (hi + lo))
