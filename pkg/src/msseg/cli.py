"""Command-line interface: ``msseg <subcommand> [options]``.

Exit status is 0 on success, 1 on usage or input errors (and failed
``verify`` checks) and 2 when the solver diverges numerically.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import set_threads
from .bregman import default_alphas, resolve_constants, run_bregman, run_forward_sweep, solve_cv
from .gamma import GammaNorm
from .io import (RunManifest, load_image, load_run, save_image, save_mask, save_outputs,
                 response_rows, write_manifest)
from .phantoms import load_scene, preset, preset_names, render, save_scene
from .solver import NumericalDivergenceError, SolverConfig
from .spectral import FORWARD, detect_peaks, filter_scales, parse_band, scale_map
from .verify import run_suite

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2
_CFG = SolverConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for divergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--tau", type=float, default=_CFG.tau, help="primal step (default 1/sqrt(8))")
    g.add_argument("--sigma", type=float, default=_CFG.sigma, help="dual step (default 1/sqrt(8))")
    g.add_argument("--theta", type=float, default=_CFG.theta, help="extrapolation weight in [0, 1]")
    g.add_argument("--max-inner-its", type=int, default=_CFG.max_inner_its, help="inner iteration budget")
    g.add_argument("--tol", type=float, default=_CFG.tol, help="stop when mean |u change| drops below")
    g.add_argument("--mu", type=float, default=_CFG.mu, help="threshold for the binary mask")


def _input_args(p, gamma_default="l2"):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", "-i", type=Path, help="grayscale PGM/PNG image or .npy array")
    src.add_argument("--preset", help="render a named phantom instead of reading a file")
    src.add_argument("--scene", type=Path, help="render a scene file instead of reading an image")
    p.add_argument("--gamma", "-g", default=gamma_default, choices=[g.value for g in GammaNorm],
                   help="norm of the anisotropic TV")
    p.add_argument("--c1", type=float, help="object intensity (default: estimated)")
    p.add_argument("--c2", type=float, help="background intensity (default: estimated)")
    p.add_argument("--out", "-o", type=Path, default=Path("msseg_out"), help="output directory")
    p.add_argument("--threads", type=int, help="kernel threads (default: MSSEG_THREADS or 1)")
    _solver_args(p)


def build_parser():
    parser = _Parser(prog="msseg", description="Multiscale segmentation by inverse scale space "
                     "(Bregman iterations on convex Chan-Vese) with anisotropic TV.")
    parser.add_argument("--version", action="version", version=f"msseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", help="single convex Chan-Vese solve")
    _input_args(p)
    p.add_argument("--alpha", "-a", type=float, required=True, help="regularization weight")

    p = sub.add_parser("bregman", help="inverse scale space run with spectral outputs")
    _input_args(p)
    p.add_argument("--alpha", "-a", type=float, required=True, help="regularization weight")
    p.add_argument("--iters", "-K", type=int, required=True, help="number of Bregman steps")
    p.add_argument("--png", action="store_true", help="also write a colour scale map")
    p.add_argument("--min-mass-fraction", type=float, default=0.02, help="peak detection threshold")

    p = sub.add_parser("sweep", help="forward scale space over a descending alpha list")
    _input_args(p)
    p.add_argument("--alphas", help="comma separated, strictly descending (default: 30 log-spaced, 200..2)")
    p.add_argument("--png", action="store_true", help="also write a colour scale map")
    p.add_argument("--min-mass-fraction", type=float, default=0.02, help="peak detection threshold")

    p = sub.add_parser("spectrum", help="print the spectral response of a run directory")
    p.add_argument("run", type=Path, help="directory written by bregman or sweep")
    p.add_argument("--min-mass-fraction", type=float, default=0.02, help="peak detection threshold")

    p = sub.add_parser("filter", help="back-transform a band of scales of a run directory")
    p.add_argument("run", type=Path, help="directory written by bregman or sweep")
    p.add_argument("--band", required=True, help="indices, e.g. 3..7 or 1,4,9..")
    p.add_argument("--out", "-o", type=Path, help="output mask (default RUN/filtered_<band>.pgm)")

    p = sub.add_parser("phantom", help="render a synthetic test scene")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="one of: " + ", ".join(preset_names()))
    src.add_argument("--scene", type=Path, help="scene file (key = value lines)")
    p.add_argument("--save-scene", type=Path, help="also write the scene file that was rendered")
    p.add_argument("--out", "-o", type=Path, required=True,
                   help="image file (.pgm/.png are clipped to [0, 1]; .npy keeps values)")
    p.add_argument("--sigma", type=float, help="override the noise level")
    p.add_argument("--seed", type=int, help="override the noise seed")
    p.add_argument("--bits", type=int, default=16, choices=(8, 16), help="PGM/PNG bit depth")

    p = sub.add_parser("verify", help="run the numerical invariant suite")
    p.add_argument("--quick", action="store_true", help="skip the phantom-based checks")
    return parser


def _config(args):
    try:
        return SolverConfig(tau=args.tau, sigma=args.sigma, theta=args.theta,
                            max_inner_its=args.max_inner_its, tol=args.tol, mu=args.mu)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args):
    if args.preset:
        return render(preset(args.preset)), "", args.preset
    if args.scene:
        return render(load_scene(args.scene)), str(args.scene), ""
    return load_image(args.input), str(args.input), ""


def _constants(args, f):
    if (args.c1 is None) != (args.c2 is None):
        raise UsageError("--c1 and --c2 must be given together")
    if args.c1 is not None:
        return (args.c1, args.c2), "given"
    if f.max() == f.min():
        return None, "estimated"
    return resolve_constants(f), "estimated"


def _manifest(args, cfg, source, name, threads, **extra):
    return RunManifest(command=args.command, input=source, preset=name, gamma=args.gamma,
                       tau=cfg.tau, sigma=cfg.sigma, theta=cfg.theta, max_inner_its=cfg.max_inner_its,
                       tol=cfg.tol, mu=cfg.mu, threads=threads, version=__version__, **extra)


def _print_peaks(seq, fraction, out):
    peaks = detect_peaks(seq.responses, fraction)
    print(f"peaks: {' '.join(map(str, peaks)) if peaks else '(none)'}", file=out)
    return peaks


def cmd_segment(args, out):
    threads = set_threads(args.threads)
    cfg = _config(args)
    t0 = time.perf_counter()
    f, source, name = _load(args)
    constants, how = _constants(args, f)
    t1 = time.perf_counter()
    mask, state = solve_cv(f, args.alpha, args.gamma, cfg, constants)
    t2 = time.perf_counter()
    args.out.mkdir(parents=True, exist_ok=True)
    save_mask(args.out / "mask.pgm", mask)
    save_image(args.out / "relaxed.pgm", state.u, bits=16)
    c1, c2 = constants if constants else (float("nan"), float("nan"))
    m = _manifest(args, cfg, source, name, threads, alpha=args.alpha, iters=1, c1=c1, c2=c2,
                  constants=how, output=str(args.out),
                  timings={"load": t1 - t0, "solve": t2 - t1, "write": time.perf_counter() - t2})
    write_manifest(args.out, m)
    print(f"segmented {int(mask.sum())} of {mask.size} pixels in {state.n_iter} iterations "
          f"({'converged' if state.converged else 'budget exhausted'}); wrote {args.out}", file=out)
    return EXIT_OK


def _save_run(args, seq, m, t_solve, out):
    t2 = time.perf_counter()
    comps = seq.components()
    smap = scale_map(comps)
    m.timings["solve"] = t_solve
    save_outputs(seq, comps, smap, m, args.out, png=args.png)
    m.timings["write"] = time.perf_counter() - t2
    write_manifest(args.out, m)
    _print_peaks(seq, args.min_mass_fraction, out)
    print(f"wrote {len(seq.masks)} masks to {args.out}", file=out)
    return EXIT_OK


def cmd_bregman(args, out):
    threads = set_threads(args.threads)
    cfg = _config(args)
    if args.iters < 1:
        raise UsageError("--iters must be >= 1")
    t0 = time.perf_counter()
    f, source, name = _load(args)
    constants, how = _constants(args, f)
    t1 = time.perf_counter()
    seq = run_bregman(f, args.alpha, args.iters, args.gamma, cfg, constants)
    m = _manifest(args, cfg, source, name, threads, alpha=args.alpha, iters=args.iters,
                  c1=seq.c1, c2=seq.c2, constants=how, timings={"load": t1 - t0})
    return _save_run(args, seq, m, time.perf_counter() - t1, out)


def cmd_sweep(args, out):
    threads = set_threads(args.threads)
    cfg = _config(args)
    try:
        alphas = default_alphas() if args.alphas is None else [float(a) for a in args.alphas.split(",")]
    except ValueError:
        raise UsageError(f"--alphas must be comma separated numbers, got {args.alphas!r}") from None
    t0 = time.perf_counter()
    f, source, name = _load(args)
    constants, how = _constants(args, f)
    t1 = time.perf_counter()
    seq = run_forward_sweep(f, alphas, args.gamma, cfg, constants)
    m = _manifest(args, cfg, source, name, threads, direction=FORWARD, alphas=alphas, iters=len(alphas),
                  c1=seq.c1, c2=seq.c2, constants=how, timings={"load": t1 - t0})
    return _save_run(args, seq, m, time.perf_counter() - t1, out)


def cmd_spectrum(args, out):
    seq, manifest = load_run(args.run)
    print("k,S,alpha_effective", file=out)
    for k, s, a in response_rows(seq):
        print(f"{k},{s!r},{a!r}", file=out)
    _print_peaks(seq, args.min_mass_fraction, out)
    return EXIT_OK


def cmd_filter(args, out):
    seq, _ = load_run(args.run)
    comps = seq.components()
    try:
        band = parse_band(args.band, len(comps))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mask = filter_scales(comps, band)
    target = args.out or args.run / f"filtered_{args.band.replace('..', '-').replace(',', '_')}.pgm"
    save_mask(target, mask)
    print(f"kept {len(band)} of {len(comps)} scales, {int(mask.sum())} pixels; wrote {target}", file=out)
    return EXIT_OK


def cmd_phantom(args, out):
    spec = preset(args.preset) if args.preset else load_scene(args.scene)
    if args.sigma is not None or args.seed is not None:
        spec = spec.with_noise(spec.noise_sigma if args.sigma is None else args.sigma, args.seed)
    f = render(spec)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_image(args.out, f, bits=args.bits)
    if args.save_scene:
        save_scene(args.save_scene, spec)
    clipped = int(np.count_nonzero((f < 0) | (f > 1)))
    note = f" ({clipped} pixels clipped to [0, 1])" if clipped and args.out.suffix.lower() != ".npy" else ""
    label = spec.name or (args.scene.name if args.scene else "scene")
    desc = f", {spec.notes}" if spec.notes else ""
    print(f"{label}: {spec.height}x{spec.width}{desc}; wrote {args.out}{note}", file=out)
    return EXIT_OK


def cmd_verify(args, out):
    results, seconds = run_suite(quick=args.quick)
    for r in results:
        print(r.line(), file=out)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {seconds:.1f} s", file=out)
    return EXIT_OK if not failed else EXIT_USAGE


COMMANDS = {"segment": cmd_segment, "bregman": cmd_bregman, "sweep": cmd_sweep, "spectrum": cmd_spectrum,
            "filter": cmd_filter, "phantom": cmd_phantom, "verify": cmd_verify}


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalDivergenceError as exc:
        print(f"msseg: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, OSError) as exc:
        print(f"msseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
