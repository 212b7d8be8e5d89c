"""Command-line interface: ``decolab <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
failure (including a failed ``verify``), 4 measurement protocol not
applicable to the configuration.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from decolab import __version__
from decolab import analytic, coherence, io, oracle
from decolab.errors import DecolabError, InvalidParameterError, NumericalError
from decolab.model import (
    DimensionlessInstance,
    ExperimentConfig,
    load_config,
    load_preset,
    nondimensionalize,
    preset_names,
)

log = logging.getLogger("decolab")

SWEEP_PARAMS = ("t_over_taud", "T_K", "gamma_per_s", "n")
EXIT_INVALID = 2


# ---------------------------------------------------------------------------
# argument helpers


def parse_range(text: str) -> np.ndarray:
    """Inclusive ``start:stop:step`` grid; ``start == stop`` gives one point."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"range must be START:STOP:STEP, got {text!r}")
    try:
        a, b, s = (float(p) for p in parts)
    except ValueError:
        raise InvalidParameterError(f"range must be numeric, got {text!r}") from None
    if not all(math.isfinite(v) for v in (a, b, s)):
        raise InvalidParameterError("range values must be finite")
    if s <= 0:
        raise InvalidParameterError(f"range step must be > 0, got {s:g}")
    if a > b:
        raise InvalidParameterError(f"range start {a:g} exceeds stop {b:g}")
    count = int(math.floor((b - a) / s + 1e-9)) + 1
    return a + s * np.arange(count)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return v


def resolve_jobs(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("DECOLAB_JOBS")
    if env is None or env == "":
        return 1
    try:
        v = int(env)
    except ValueError:
        raise InvalidParameterError(f"DECOLAB_JOBS must be a positive integer, got {env!r}") from None
    if v < 1:
        raise InvalidParameterError(f"DECOLAB_JOBS must be a positive integer, got {v}")
    return v


def ordered_map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Evaluate ``fn`` over ``items`` with up to ``jobs`` threads; results keep
    the input order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# config resolution


def _base_config(args, n: Optional[int] = None) -> ExperimentConfig:
    n = args.slits if n is None else n
    if args.preset is not None:
        return load_preset(args.preset, n if n is not None else 4)
    cfg = load_config(args.config)
    return cfg if n is None or n == cfg.n else cfg.with_slits(n)


def _absolute_flags(args) -> list[str]:
    names = [("gamma_per_s", "--gamma-per-s"), ("t_s", "--t-s"), ("T_K", "--T-K")]
    return [flag for attr, flag in names if getattr(args, attr, None) is not None]


def _check_time_style(args):
    if getattr(args, "kappa", None) is not None and _absolute_flags(args):
        raise InvalidParameterError(
            "--kappa cannot be combined with " + ", ".join(_absolute_flags(args)))


def _apply_time(cfg: ExperimentConfig, args) -> tuple[ExperimentConfig, float]:
    """Apply --kappa or the absolute (gamma, T, t) flags; return (cfg, t)."""
    t_f = cfg.flight_time
    if args.kappa is not None:
        return cfg.with_kappa(args.kappa, t_f), t_f
    env = cfg.environment
    if args.gamma_per_s is not None or args.T_K is not None:
        gamma = env.gamma if args.gamma_per_s is None else args.gamma_per_s
        T = env.temperature if args.T_K is None else args.T_K
        cfg = cfg.with_environment(gamma, T)
    t = t_f if args.t_s is None else args.t_s
    if t <= 0:
        raise InvalidParameterError("--t-s must be > 0")
    return cfg, t


def _write_text(text: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_preset(args) -> int:
    if args.action == "list":
        print("\n".join(preset_names()))
        return 0
    if not args.name:
        raise InvalidParameterError("preset show needs a NAME")
    cfg = load_preset(args.name, args.slits or 4)
    t = cfg.flight_time
    sys.stdout.write(io.format_config(cfg))
    inst = nondimensionalize(cfg, t)
    print(f"# flight_time_s = {io.fmt(t)}")
    print(f"# fraunhofer_number = {io.fmt(cfg.fraunhofer_number)}")
    print(f"# fringe_spacing_m = {io.fmt(cfg.fringe_spacing)}")
    print(f"# envelope_width_m = {io.fmt(cfg.envelope_width)}")
    print(f"# phi = {io.fmt(inst.phi)}")
    print(f"# eps_hat = {io.fmt(inst.eps_hat)}")
    return 0


def cmd_pattern(args) -> int:
    _check_time_style(args)
    cfg = _base_config(args)
    if args.points is not None:
        cfg = cfg.with_screen(points=args.points)
    if args.detector is not None:
        cfg = cfg.with_detector(args.detector)
    cfg, t = _apply_time(cfg, args)
    profile = analytic.pattern(cfg, t, args.mode, normalize=not args.raw)
    text = io.emit_csv(profile, None)
    _write_text(text, args.out)
    if args.svg:
        io.emit_svg(profile, args.svg, title=f"n={cfg.n}, t/tau_d={io.fmt(cfg.kappa(t))}")
    if args.png:
        from decolab import plotting

        plotting.plot_profile(profile, args.png, title=f"n = {cfg.n}, t/τd = {cfg.kappa(t):.4g}")
    return 0


def cmd_coherence(args) -> int:
    kappas = parse_range(args.kappa_range)
    jobs = resolve_jobs(args.jobs)
    cfg = _base_config(args)
    t = cfg.flight_time

    def point(k):
        return coherence.coherence(cfg.with_kappa(float(k), t), t, args.method).value

    values = ordered_map(point, list(kappas), jobs)
    _write_text(io.emit_series(kappas, values, None), args.out)
    if args.png:
        from decolab import plotting

        plotting.plot_series(kappas, values, args.png, xlabel="t / τd", title=f"n = {cfg.n}")
    return 0


def cmd_taud(args) -> int:
    tau = coherence.tau_d_from_intensities(args.imax_par, args.imax_perp, args.lambda_m,
                                           args.L_m, args.mass_kg, c1c2=args.c1c2)
    print(f"tau_d_s={io.fmt(tau)}")
    return 0


def cmd_verify(args) -> int:
    inst = DimensionlessInstance.make(args.slits, eps_hat=args.eps_hat, phi=args.phi,
                                      kappa=args.kappa, gamma_hat=args.gamma_hat, t_hat=1.0)
    params = oracle.SolverParams.for_instance(inst, args.grid, dt=args.dt)
    grid = oracle.init_density(inst, params)
    grid, rep = oracle.evolve(grid, 1.0, params, inst)
    cmp = oracle.compare_to_analytic(grid, inst, tol=args.tol)
    if args.checkpoint:
        oracle.save_checkpoint(grid, args.checkpoint)
    print(f"rel_l2={io.fmt(cmp.rel_l2)}")
    print(f"sup={io.fmt(cmp.sup)}")
    print(f"steps={rep.steps} dt={io.fmt(rep.dt)} trace_drift={rep.trace_drift:.3g} "
          f"hermiticity={rep.hermiticity:.3g}")
    if not cmp.passed:
        print(f"decolab: verify failed: rel_l2 {cmp.rel_l2:.3g} > tol {args.tol:g}", file=sys.stderr)
        return NumericalError.exit_code
    return 0


def _sweep_point(args, base: ExperimentConfig, value: float):
    """Return (C, tau_d) for one swept value."""
    name = args.param
    cfg = base
    if name == "n":
        if value != int(value):
            raise InvalidParameterError(f"slit count must be an integer, got {value:g}")
        cfg = _base_config(args, int(value))
    if name == "t_over_taud":
        t = cfg.flight_time
        cfg = cfg.with_kappa(value, t)
    else:
        if name == "T_K":
            cfg = cfg.with_environment(cfg.environment.gamma, value)
        elif name == "gamma_per_s":
            cfg = cfg.with_environment(value, cfg.environment.temperature)
        cfg, t = _apply_time(cfg, args)
    return coherence.coherence_analytic(cfg, t), cfg.tau_d()


def cmd_sweep(args) -> int:
    _check_time_style(args)
    values = parse_range(args.range)
    if args.param == "t_over_taud" and _absolute_flags(args):
        raise InvalidParameterError("a t_over_taud sweep sets kappa directly; drop " + ", ".join(_absolute_flags(args)))
    if args.param in ("T_K", "gamma_per_s") and args.kappa is not None:
        raise InvalidParameterError(f"--kappa fixes t/tau_d and would hide the {args.param} dependence")
    if args.param == "T_K" and args.T_K is not None:
        raise InvalidParameterError("--T-K conflicts with a T_K sweep")
    if args.param == "gamma_per_s" and args.gamma_per_s is not None:
        raise InvalidParameterError("--gamma-per-s conflicts with a gamma_per_s sweep")
    jobs = resolve_jobs(args.jobs)
    base = _base_config(args)
    results = ordered_map(lambda v: _sweep_point(args, base, float(v)), list(values), jobs)
    C = [r[0] for r in results]
    if args.with_taud:
        rows = [[c, tau] for c, tau in results]
        text = io.emit_series(values, rows, None, header=(args.param, "C", "tau_d_s"))
    else:
        text = io.emit_series(values, C, None, header=(args.param, "C"))
    _write_text(text, args.out)
    if args.png:
        from decolab import plotting

        plotting.plot_series(values, C, args.png, xlabel=args.param)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_source(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", metavar="NAME", help="built-in parameter set (see `preset list`)")
    src.add_argument("--config", metavar="PATH", help="key=value configuration file")
    p.add_argument("--slits", type=_positive_int, metavar="N", help="override the slit count")


def _add_time(p: argparse.ArgumentParser, kappa: bool = True):
    if kappa:
        p.add_argument("--kappa", type=_finite, metavar="F", help="t / tau_d at the flight time")
    p.add_argument("--gamma-per-s", type=_finite, metavar="F", help="friction coefficient (1/s)")
    p.add_argument("--t-s", type=_finite, metavar="F", help="evaluation time (s); default flight time")
    p.add_argument("--T-K", type=_finite, metavar="F", help="bath temperature (K)")


def _add_jobs(p: argparse.ArgumentParser):
    p.add_argument("--jobs", type=_positive_int, metavar="N",
                   help="worker threads (default: $DECOLAB_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decolab",
        description="Decohering multi-slit interference: patterns, coherence and decoherence times.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("preset", help="list or show built-in parameter sets")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    p.add_argument("--slits", type=_positive_int, metavar="N")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("pattern", help="screen intensity as CSV (x_m,intensity_norm)")
    _add_source(p)
    _add_time(p)
    p.add_argument("--mode", choices=("exact", "farfield", "nodecoherence"), default="farfield")
    p.add_argument("--detector", choices=("parallel", "orthogonal"))
    p.add_argument("--points", type=_positive_int, metavar="N", help="screen grid points")
    p.add_argument("--out", metavar="PATH", help="CSV path (default stdout)")
    p.add_argument("--svg", metavar="PATH", help="also write an SVG line plot")
    p.add_argument("--png", metavar="PATH", help="also render a matplotlib figure")
    p.add_argument("--raw", action="store_true", help="skip peak normalization")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("coherence", help="coherence versus t/tau_d as CSV (t_over_taud,C)")
    _add_source(p)
    p.add_argument("--kappa-range", required=True, metavar="A:B:S")
    p.add_argument("--method", choices=("analytic", "matrix", "protocol"), default="analytic")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--png", metavar="PATH")
    _add_jobs(p)
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("taud", help="decoherence time from the two primary-maximum intensities")
    p.add_argument("--imax-par", type=_finite, required=True, metavar="F")
    p.add_argument("--imax-perp", type=_finite, required=True, metavar="F")
    p.add_argument("--lambda-m", type=_finite, required=True, metavar="F")
    p.add_argument("--L-m", type=_finite, required=True, metavar="F")
    p.add_argument("--mass-kg", type=_finite, required=True, metavar="F")
    p.add_argument("--c1c2", type=_finite, default=0.5, metavar="F", help="|c1 c2| (default 1/2)")
    p.set_defaults(func=cmd_taud)

    p = sub.add_parser("verify", help="compare the master-equation solver with the closed form")
    p.add_argument("--slits", type=_positive_int, default=2, metavar="N")
    p.add_argument("--kappa", type=_finite, default=0.5, metavar="F")
    p.add_argument("--grid", type=_positive_int, default=oracle.DEFAULT_N, metavar="N")
    p.add_argument("--tol", type=_finite, default=oracle.COMPARE_TOL, metavar="F")
    p.add_argument("--eps-hat", type=_finite, default=0.15, metavar="F", help="slit width / spacing")
    p.add_argument("--phi", type=_finite, default=10.0, metavar="F", help="2 pi l^2 / (lambda L)")
    p.add_argument("--gamma-hat", type=_finite, default=1e-3, metavar="F", help="gamma * flight time")
    p.add_argument("--dt", type=_finite, metavar="F", help="time step in flight times")
    p.add_argument("--checkpoint", metavar="PATH", help="dump the final grid (DGRD format)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="coherence over one parameter as CSV")
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--range", required=True, metavar="A:B:S")
    _add_source(p)
    _add_time(p)
    p.add_argument("--with-taud", action="store_true", help="add a tau_d_s column")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--png", metavar="PATH")
    _add_jobs(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse reports usage errors with status 2
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="decolab: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except DecolabError as e:
        print(f"decolab: error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"decolab: error: {e}", file=sys.stderr)
        return EXIT_INVALID


run = main

if __name__ == "__main__":
    sys.exit(main())
