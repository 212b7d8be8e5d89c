"""Brute-force integration of the master equation for rho(x, x', t).

Works entirely in dimensionless units: lengths in slit spacings, times in
flight times. The generator splits into

    kinetic        (i / 2 phi) (d_x^2 - d_x'^2) rho      exact, spectral
    friction       -gamma r (d_x - d_x') rho             semi-Lagrangian
    decoherence    -3 kappa_rate r^2 rho                  exact multiplier

with r = x - x'. One step is Strang-ordered: decoherence/2, friction/2,
kinetic, friction/2, decoherence/2. The grid is periodic in both axes.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import fft

from decolab.analytic import IntensityProfile, _alpha_k, _kernel, intensity
from decolab.errors import InvalidParameterError, NumericalError, ResolutionError
from decolab.model import DimensionlessInstance, ExperimentConfig, nondimensionalize

log = logging.getLogger(__name__)

POINTS_PER_WIDTH = 8
SIGMAS_PADDING = 6.0
DEFAULT_N = 512
DT_CAP_FRACTION = 1e-2
FRICTION_CFL = 0.5
COMPARE_TOL = 1e-2

_HEADER = struct.Struct("<4sIIdd")
_MAGIC = b"DGRD"
_VERSION = 1


@dataclass(eq=False)
class DensityGrid:
    """N x N samples of rho(x, x') on a uniform periodic grid.

    ``values[i, j]`` is rho(x[i], x[j]). Mutated in place by :func:`step`.
    """

    values: np.ndarray
    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        self.x = np.asarray(self.x, dtype=float)
        N = len(self.x)
        if self.values.shape != (N, N):
            raise InvalidParameterError(f"values shape {self.values.shape} does not match grid of {N} points")
        if N < 2 or N & (N - 1):
            raise InvalidParameterError(f"N must be a power of two, got {N}")

    @property
    def N(self) -> int:
        return len(self.x)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def trace(self) -> float:
        return float(np.real(np.trace(self.values)) * self.dx)

    def hermiticity_error(self) -> float:
        """max|rho - rho^dagger| / max|rho|."""
        v = self.values
        scale = np.max(np.abs(v))
        return float(np.max(np.abs(v - v.conj().T)) / scale) if scale > 0 else 0.0

    def copy(self) -> "DensityGrid":
        return DensityGrid(self.values.copy(), self.x.copy(), self.t)


@dataclass(frozen=True)
class SolverParams:
    N: int = DEFAULT_N
    half_width: float = 5.0
    center: float = 1.5
    dt: float = 1e-2
    kinetic: bool = True  # test hook: switch the kinetic generator off

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise InvalidParameterError(f"N must be a power of two, got {self.N}")
        if not (self.half_width > 0 and self.dt > 0):
            raise InvalidParameterError("half_width and dt must be > 0")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.N

    def grid(self) -> np.ndarray:
        return self.center - self.half_width + self.dx * np.arange(self.N)

    @classmethod
    def for_instance(cls, inst: DimensionlessInstance, N: int = DEFAULT_N, *,
                     t_final: Optional[float] = None, dt: Optional[float] = None,
                     dt_cap_fraction: float = DT_CAP_FRACTION, half_width: Optional[float] = None,
                     kinetic: bool = True) -> "SolverParams":
        """Size the domain from the final packet width and pick dt.

        The half-width covers the slit array plus six standard deviations of
        the widest diagonal Gaussian. dt defaults to the smaller of
        ``dt_cap_fraction * t_final`` and the friction CFL bound.
        """
        t_final = inst.t_hat if t_final is None else t_final
        n = inst.n
        if half_width is None:
            a = _alpha_k(_kernel(inst), t_final)
            half_width = (n - 1) / 2.0 + SIGMAS_PADDING * math.sqrt(a) / 2.0
        params = cls(N=N, half_width=half_width, center=(n + 1) / 2.0, dt=1.0, kinetic=kinetic)
        check_resolution(params, inst)
        bound = friction_dt_bound(params, inst.gamma_hat)
        if dt is None:
            dt = bound if t_final == 0 else min(dt_cap_fraction * t_final, bound)
        elif dt > bound * (1 + 1e-12):
            raise InvalidParameterError(f"dt {dt} exceeds the friction CFL bound {bound:.3g}")
        return replace(params, dt=dt)


def friction_dt_bound(params: SolverParams, gamma_hat: float) -> float:
    """gamma * domain_width * dt <= 0.5 dx."""
    if gamma_hat == 0:
        return math.inf
    return FRICTION_CFL * params.dx / (gamma_hat * 2.0 * params.half_width)


def check_resolution(params: SolverParams, inst: DimensionlessInstance):
    limit = inst.eps_hat / POINTS_PER_WIDTH
    if params.dx > limit:
        raise ResolutionError(
            f"slit width eps={inst.eps_hat:g} under-resolved: dx={params.dx:.4g} > eps/{POINTS_PER_WIDTH}"
            f" = {limit:.4g}; raise N or shrink the domain")
    # fringe period 2 pi / phi at unit time (lengths in slit spacings)
    fringe = 2.0 * math.pi / inst.phi
    if params.dx > fringe / POINTS_PER_WIDTH:
        raise ResolutionError(
            f"fringe scale 2 pi/phi={fringe:.4g} under-resolved by dx={params.dx:.4g}")


# ---------------------------------------------------------------------------
# initial state


def init_density(inst: DimensionlessInstance, params: Optional[SolverParams] = None,
                 detector_mode: str = "config") -> DensityGrid:
    """Sample rho(x, x', 0) = sum_jk c_j c_k^* O_kj g_j(x) g_k(x') with
    Gaussian slits g_j(x) = exp(-(x - j)^2 / eps^2), renormalized to unit
    discrete trace."""
    if params is None:
        params = SolverParams.for_instance(inst)
    check_resolution(params, inst)
    x = params.grid()
    n = inst.n
    if detector_mode == "config":
        O = inst.overlaps.matrix
    elif detector_mode == "parallel":
        O = np.ones((n, n))
    elif detector_mode == "orthogonal":
        O = np.eye(n)
    else:
        raise InvalidParameterError(f"unknown detector mode {detector_mode!r}")
    c = inst.amplitudes.complex
    g = np.exp(-((x[None, :] - np.arange(1, n + 1)[:, None]) ** 2) / inst.eps_hat**2)  # (n, N)
    A = (c[:, None] * g)  # c_j g_j(x)
    # rho = sum_jk A_j(x) O_kj conj(A_k(x'))
    rho = A.T @ (O.T @ A.conj())
    tr = np.real(np.trace(rho)) * params.dx
    if not tr > 0:
        raise NumericalError("initial state has zero trace")
    return DensityGrid(rho / tr, x, 0.0)


# ---------------------------------------------------------------------------
# stepping


class _Stepper:
    """Precomputed factors for fixed (grid, dt, instance)."""

    def __init__(self, grid: DensityGrid, dt: float, params: SolverParams, inst: DimensionlessInstance):
        N, dx = grid.N, grid.dx
        x = grid.x
        r = x[:, None] - x[None, :]
        self.dec_half = np.exp(-3.0 * inst.kappa_rate * r**2 * dt / 2.0) if inst.kappa_rate > 0 else None
        self.kinetic = params.kinetic
        if self.kinetic:
            k = 2.0 * np.pi * np.fft.fftfreq(N, d=dx)
            ph = k**2 * dt / (2.0 * inst.phi)
            self.kin_row = np.exp(-1j * ph)[:, None]
            self.kin_col = np.exp(1j * ph)[None, :]
        self.friction = inst.gamma_hat > 0
        if self.friction:
            c = -math.expm1(-2.0 * inst.gamma_hat * dt / 2.0) / 2.0
            d = np.abs(np.subtract.outer(np.arange(N), np.arange(N))) * c  # foot offset in cells
            if d.max() >= 1.0:
                raise InvalidParameterError("friction shift exceeds one cell; reduce dt")
            self.w0 = (1 - d) ** 2
            self.w1 = d * (1 - d)
            self.w2 = d**2
            self.lower = np.tril(np.ones((N, N), bool), -1)
            self.upper = self.lower.T.copy()

    def _friction(self, v: np.ndarray) -> np.ndarray:
        # lower triangle (x > x'): foot at (i - a, j + a), neighbours i-1, j+1
        out = self.w0 * v
        s_up = np.zeros_like(v)
        s_up[1:, :] = v[:-1, :]
        s_right = np.zeros_like(v)
        s_right[:, :-1] = v[:, 1:]
        s_diag = np.zeros_like(v)
        s_diag[1:, :-1] = v[:-1, 1:]
        out += self.w1 * (s_up + s_right) + self.w2 * s_diag
        # upper triangle follows by Hermiticity
        res = np.where(self.lower, out, v)
        res[self.upper] = out.conj().T[self.upper]
        return res

    def __call__(self, v: np.ndarray) -> np.ndarray:
        if self.dec_half is not None:
            v *= self.dec_half
        if self.friction:
            v = self._friction(v)
        if self.kinetic:
            v = fft.fft2(v, overwrite_x=True)
            v *= self.kin_row
            v *= self.kin_col
            v = fft.ifft2(v, overwrite_x=True)
        if self.friction:
            v = self._friction(v)
        if self.dec_half is not None:
            v *= self.dec_half
        return v


def step(grid: DensityGrid, dt: float, params: SolverParams, inst: DimensionlessInstance) -> DensityGrid:
    """Advance ``grid`` by one Strang step of size ``dt`` (in place)."""
    stepper = _Stepper(grid, dt, params, inst)
    grid.values = stepper(grid.values)
    grid.t += dt
    if not np.all(np.isfinite(grid.values)):
        raise NumericalError("oracle diverged at step 1")
    return grid


@dataclass(frozen=True)
class EvolutionReport:
    steps: int
    dt: float
    trace_drift: float
    hermiticity: float
    min_diagonal_ratio: float
    imag_diagonal_ratio: float


def evolve(grid: DensityGrid, t_final: float, params: SolverParams, inst: DimensionlessInstance,
           *, check_every: int = 50) -> tuple[DensityGrid, EvolutionReport]:
    """Repeat :func:`step` with fixed dt until ``t_final``. The final step is
    shortened when ``t_final - t`` is not a multiple of dt."""
    if t_final < grid.t - 1e-15:
        raise InvalidParameterError(f"t_final {t_final} precedes current time {grid.t}")
    tr0 = grid.trace()
    span = t_final - grid.t
    nsteps = int(math.ceil(span / params.dt - 1e-9)) if span > 0 else 0
    if nsteps:
        dt = span / nsteps
        stepper = _Stepper(grid, dt, params, inst)
        v = grid.values
        for i in range(1, nsteps + 1):
            v = stepper(v)
            if i % check_every == 0 or i == nsteps:
                if not np.all(np.isfinite(v)):
                    raise NumericalError(f"oracle diverged at step {i}")
        grid.values = v
        grid.t = t_final
    else:
        dt = params.dt
    diag = np.diagonal(grid.values)
    peak = np.max(np.abs(diag.real))
    report = EvolutionReport(
        steps=nsteps,
        dt=dt,
        trace_drift=abs(grid.trace() - tr0),
        hermiticity=grid.hermiticity_error(),
        min_diagonal_ratio=float(np.min(diag.real) / peak) if peak > 0 else 0.0,
        imag_diagonal_ratio=float(np.max(np.abs(diag.imag)) / peak) if peak > 0 else 0.0,
    )
    log.debug("evolve: %s", report)
    return grid, report


def diagonal(grid: DensityGrid) -> IntensityProfile:
    """rho(x, x) as a profile; ``imag_max`` is max|Im| relative to max|Re|."""
    d = np.diagonal(grid.values).copy()
    peak = np.max(np.abs(d.real))
    imag = float(np.max(np.abs(d.imag)) / peak) if peak > 0 else 0.0
    return IntensityProfile(grid.x.copy(), d.real, grid.t, "raw", 1.0, "oracle", None, imag)


# ---------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class ComparisonReport:
    rel_l2: float
    sup: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.rel_l2 <= self.tol


def compare_to_analytic(grid: DensityGrid, cfg: Union[DimensionlessInstance, ExperimentConfig],
                        t: Optional[float] = None, *, tol: float = COMPARE_TOL) -> ComparisonReport:
    """Relative L2 and sup differences between the oracle diagonal and the
    exact closed form, each divided by its own maximum."""
    if isinstance(cfg, ExperimentConfig):
        if t is None:
            raise InvalidParameterError("an SI config needs the physical time t")
        cfg = nondimensionalize(cfg, t)
        t_hat = grid.t
    else:
        t_hat = grid.t if t is None else t
    if cfg.x_hat is not None and len(cfg.x_hat) != grid.N:
        raise InvalidParameterError(f"grid mismatch: instance has {len(cfg.x_hat)} points, oracle {grid.N}")
    num = diagonal(grid).intensity
    ref = intensity(grid.x, t_hat, cfg, "exact", detector="config")
    num = num / np.max(num)
    ref = ref / np.max(ref)
    diff = num - ref
    return ComparisonReport(float(np.linalg.norm(diff) / np.linalg.norm(ref)),
                            float(np.max(np.abs(diff))), tol)


def run(inst: DimensionlessInstance, N: int = DEFAULT_N, **kw) -> tuple[DensityGrid, EvolutionReport, ComparisonReport]:
    """Initialize, evolve to ``inst.t_hat`` and compare."""
    params = SolverParams.for_instance(inst, N, **kw)
    grid = init_density(inst, params)
    grid, rep = evolve(grid, inst.t_hat, params, inst)
    return grid, rep, compare_to_analytic(grid, inst)


# ---------------------------------------------------------------------------
# checkpoint


def save_checkpoint(grid: DensityGrid, path) -> None:
    """Header ("DGRD", version, N, dx, t) then N^2 little-endian complex128, row-major."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, grid.N, grid.dx, grid.t))
        fh.write(np.ascontiguousarray(grid.values, dtype="<c16").tobytes())


def load_checkpoint(path, center: float = 0.0) -> DensityGrid:
    """Inverse of :func:`save_checkpoint`. The header stores no origin, so the
    grid is rebuilt centred on ``center``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InvalidParameterError("checkpoint truncated")
    magic, version, N, dx, t = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise InvalidParameterError(f"bad checkpoint magic {magic!r}")
    if version != _VERSION:
        raise InvalidParameterError(f"unsupported checkpoint version {version}")
    body = data[_HEADER.size:]
    if len(body) != 16 * N * N:
        raise InvalidParameterError(f"checkpoint body has {len(body)} bytes, expected {16 * N * N}")
    values = np.frombuffer(body, dtype="<c16").reshape(N, N).astype(np.complex128)
    x = center - N * dx / 2.0 + dx * np.arange(N)
    return DensityGrid(values, x, t)
