"""``specwalk`` command line: spectrum files in, CSV/JSON/PGM out, each with a manifest.

Exit status is 0 on success, 2 when inputs fail validation and 1 on any
other error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import distributions, files, fractal, lyapunov, moments, spectra, walker


class ValidationError(ValueError):
    pass


def _window(values):
    lo, hi = values
    if not hi > lo:
        raise ValidationError(f"empty window [{lo}, {hi}]")
    return (lo, hi)


def _load(path):
    return files.read_spectrum(path)


def _need_weighted(spec, what):
    if not isinstance(spec, spectra.WeightedSpectrum):
        raise ValidationError(f"{what} needs a weighted (many-body) spectrum file")
    return spec


# --- subcommands -----------------------------------------------------------------


def cmd_spectrum(args):
    ref = None if args.energy_ref == "ground" else 0.0
    if args.model == "xxz-nnn":
        H = spectra.build_xxz_nnn(args.L, args.delta, args.alpha)
        meta = {"name": "xxz-nnn", "L": args.L, "Delta": args.delta, "alpha": args.alpha}
        spec = spectra.make_weighted_spectrum(spectra.diagonalize(H), args.beta, args.tol, energy_ref=ref, model_meta=meta)
    elif args.model == "syk":
        H = spectra.build_syk(args.n_majorana, args.k, args.J, args.seed)
        meta = {"name": "syk", "n_majorana": args.n_majorana, "k": args.k, "J": args.J, "seed": args.seed,
                "prng": spectra.SYK_PRNG}
        spec = spectra.make_weighted_spectrum(spectra.diagonalize(H), args.beta, args.tol, energy_ref=ref, model_meta=meta)
    elif args.model == "xy":
        spec = spectra.build_xy_one_particle(args.L, args.h, args.gamma, args.tol)
        if args.many_body:
            spec = spectra.enumerate_free_many_body(spec, args.beta, args.tol, energy_ref=ref)
    else:  # file of raw eigenvalues, one per line or .npy
        if args.eigenvalues is None:
            raise ValidationError("--model file needs --eigenvalues")
        p = Path(args.eigenvalues)
        ev = np.load(p) if p.suffix == ".npy" else np.loadtxt(p, ndmin=1)
        meta = {"name": "file", "source": p.name}
        spec = spectra.make_weighted_spectrum(np.sort(ev), args.beta, args.tol, energy_ref=ref, model_meta=meta)
    files.write_spectrum(args.output, spec)
    return [args.output], {"seed": args.seed} if args.model == "syk" else {}


def cmd_walk(args):
    spec = _need_weighted(_load(args.input), "walk")
    t = args.t if args.t is not None else float(walker.sample_times(args.time_window, 1, args.seed)[0])
    path = walker.walk_path(spec, t)
    pts = path.points / path.norm if args.normalize else path.points
    files.write_walk_csv(args.output, pts)
    return [args.output], {"seed": args.seed, "t": t}


def cmd_sff(args):
    spec = _load(args.input)
    window = _window(args.window)
    if isinstance(spec, spectra.OneParticleSpectrum):
        ts, logs = walker.sample_free_fermion_log_sff(spec, args.beta, window, args.n, args.seed, args.threads)
        vals = np.exp(logs)
    else:
        s = walker.sample_sff(spec, window, args.n, args.seed, args.threads)
        ts, vals = s.times, s.values
    files.write_sff_csv(args.output, ts, vals)
    return [args.output], {"seed": args.seed}


def cmd_moments(args):
    spec = _load(args.input)
    if isinstance(spec, spectra.OneParticleSpectrum):
        g = spec.degeneracies.tolist()
        out = {
            "p_max": args.p_max,
            "model": "quasi-free",
            "I_exact": [moments.free_fermion_moments(g, M) for M in range(1, args.p_max + 1)],
            "ln_I_exact": [moments.log_free_fermion_moments(g, M) for M in range(1, args.p_max + 1)],
        }
        files.write_json(args.output, out)
        return [args.output], {}
    w = spec.weights
    if np.all(w == np.round(w)):
        w = [int(x) for x in w]
    mc = None
    if args.mc_samples:
        mc = moments.mc_moments(spec, args.p_max, args.mc_samples, _window(args.window), args.seed, args.threads)
    try:
        rep = moments.moment_report(w, args.p_max, mc=mc)
        doc = rep.to_dict()
    except OverflowError:
        doc = {"p_max": args.p_max, "ln_I_exact": moments.log_moments_recursion(w, args.p_max),
               "a": moments.log_bessel_cumulants(args.p_max)}
        if mc is not None:
            doc["mc"] = mc.to_dict()
    files.write_json(args.output, doc)
    return [args.output], {"seed": args.seed} if args.mc_samples else {}


def cmd_lyapunov(args):
    specs = [_need_weighted(_load(p), "lyapunov") for p in args.input]
    sizes = [s.model_meta.get("L", i) for i, s in enumerate(specs)]
    rep = lyapunov.lyapunov_scan(specs, args.q, sizes=sizes, grid=args.grid)
    out = Path(args.output)
    csv_L = out.with_suffix(".L.csv")
    csv_w = out.with_suffix(".window.csv")
    files.write_csv(csv_L, ["L", "q", "R"], rep.rows())
    files.write_csv(csv_w, ["s", "h", "R1"], rep.windowed_rows())
    doc = rep.to_dict()
    doc["wiener_deviation"] = lyapunov.wiener_deviation(rep.windowed)
    files.write_json(out, doc)
    return [out, csv_L, csv_w], {}


def cmd_dist(args):
    spec = _load(args.input)
    window = _window(args.window)
    if args.law == "exp1":
        spec = _need_weighted(spec, "exp1 test")
        s = walker.sample_sff(spec, window, args.n, args.seed, args.threads)
        rep = distributions.ks_exp1(s.values, normalize=True)
    elif args.law == "lognormal":
        if not isinstance(spec, spectra.OneParticleSpectrum):
            raise ValidationError("lognormal test needs a one-particle spectrum file")
        _, logs = walker.sample_free_fermion_log_sff(spec, args.beta, window, args.n, args.seed, args.threads)
        rep = distributions.ks_lognormal_free(logs, spec.degeneracies, log_input=True)
    else:
        spec = _need_weighted(spec, "increment test")
        N = args.N or spec.n_blocks
        rep = distributions.wiener_increment_test(spec, N, args.s, args.h, args.n, args.seed, window, args.threads)
    out = Path(args.output)
    hist = out.with_suffix(".hist.csv")
    files.write_json(out, rep.to_dict())
    files.write_csv(hist, ["bin_left", "bin_right", "density"], rep.histogram_rows())
    return [out, hist], {"seed": args.seed}


def _fit_window(text):
    if text == "auto":
        return "auto"
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("window must be 'auto' or 'i,j'") from None
    return (i, j)


def cmd_fractal(args):
    spec = _need_weighted(_load(args.input), "fractal")
    est = fractal.estimate_frontier_dimension(
        spec, args.walks, _window(args.time_window), args.resolution, args.seed,
        args.padding, args.fit_window, args.threads,
    )
    outputs = [args.output]
    files.write_json(args.output, est.to_dict())
    if args.pgm:
        path = walker.walk_path(spec, float(est.times[0]))
        front = fractal.extract_frontier(fractal.rasterize_walk(path, args.resolution, args.padding))
        files.write_pgm(args.pgm, front.bits)
        outputs.append(args.pgm)
    return outputs, {"seed": args.seed}


def cmd_calibrate(args):
    starts, ends = fractal.generate_calibration(args.kind, args.depth)
    grid = fractal.rasterize_shape(starts, ends, args.resolution, args.padding)
    eps = fractal.dyadic_epsilons(grid)
    fit = fractal.fit_dimension(fractal.box_count(grid, eps), eps, args.fit_window)
    doc = fit.to_dict()
    doc.update(kind=args.kind, depth=args.depth, resolution=args.resolution,
               exact=fractal.CALIBRATION_DIMENSION[args.kind])
    files.write_json(args.output, doc)
    outputs = [args.output]
    if args.pgm:
        files.write_pgm(args.pgm, grid.bits)
        outputs.append(args.pgm)
    return outputs, {}


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specwalk", description="Spectral form factor random walks.")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: $SPECWALK_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=fn)
        sp.add_argument("-o", "--output", required=True)
        return sp

    sp = add("spectrum", cmd_spectrum, "build a spectrum file")
    sp.add_argument("--model", choices=["xxz-nnn", "xy", "syk", "file"], required=True)
    sp.add_argument("--L", type=int, default=8)
    sp.add_argument("--delta", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--h", type=float, default=0.0)
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--n-majorana", type=int, default=16)
    sp.add_argument("--k", type=int, default=4)
    sp.add_argument("--J", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--tol", type=float, default=spectra.DEFAULT_TOL)
    sp.add_argument("--energy-ref", choices=["zero", "ground"], default="zero",
                    help="energy origin for thermal weights; 'ground' avoids overflow at large beta")
    sp.add_argument("--many-body", action="store_true", help="xy: enumerate the many-body spectrum")
    sp.add_argument("--eigenvalues", help="file model: text or .npy eigenvalue list")

    sp = add("walk", cmd_walk, "export the walk Z_n(t)")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--time-window", type=float, nargs=2, default=walker.DEFAULT_WALK_WINDOW)
    sp.add_argument("--normalize", action="store_true", help="divide by sqrt(sum d^2)")

    sp = add("sff", cmd_sff, "sample |chi(t)|^2")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--window", type=float, nargs=2, default=walker.DEFAULT_SFF_WINDOW)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--beta", type=float, default=0.0, help="one-particle files only")

    sp = add("moments", cmd_moments, "exact and Monte-Carlo moments")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--p-max", type=int, default=5)
    sp.add_argument("--mc-samples", type=int, default=0)
    sp.add_argument("--window", type=float, nargs=2, default=walker.DEFAULT_SFF_WINDOW)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("lyapunov", cmd_lyapunov, "Lyapunov ratios across sizes")
    sp.add_argument("-i", "--input", required=True, nargs="+")
    sp.add_argument("--q", type=float, nargs="+", default=list(lyapunov.DEFAULT_QS))
    sp.add_argument("--grid", type=float, nargs="+", default=list(lyapunov.DEFAULT_GRID))

    sp = add("dist", cmd_dist, "distribution tests")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--law", choices=["exp1", "lognormal", "increment"], default="exp1")
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--window", type=float, nargs=2, default=walker.DEFAULT_SFF_WINDOW)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--s", type=float, default=0.0)
    sp.add_argument("--h", type=float, default=1.0)

    sp = add("fractal", cmd_fractal, "frontier dimension of walks")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--walks", type=int, default=20)
    sp.add_argument("--resolution", type=int, default=fractal.DEFAULT_WALK_RESOLUTION)
    sp.add_argument("--padding", type=float, default=fractal.DEFAULT_PADDING)
    sp.add_argument("--time-window", type=float, nargs=2, default=walker.DEFAULT_WALK_WINDOW)
    sp.add_argument("--fit-window", type=_fit_window, default="auto")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--pgm", help="also write the first walk's frontier as PGM")

    sp = add("calibrate", cmd_calibrate, "box-count a known shape")
    sp.add_argument("--kind", choices=sorted(fractal.CALIBRATION_DIMENSION), required=True)
    sp.add_argument("--depth", type=int, default=0)
    sp.add_argument("--resolution", type=int, default=fractal.DEFAULT_RESOLUTION)
    sp.add_argument("--padding", type=float, default=fractal.DEFAULT_PADDING)
    sp.add_argument("--fit-window", type=_fit_window, default="auto")
    sp.add_argument("--pgm", help="also write the raster as PGM")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        outputs, seeds = args.func(args)
    except (ValidationError, files.SpectrumFileError, spectra.BudgetError, ValueError, IndexError) as exc:
        print(f"specwalk {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"specwalk {args.command}: error: {exc}", file=sys.stderr)
        return 1
    inputs = getattr(args, "input", None) or []
    if isinstance(inputs, str):
        inputs = [inputs]
    if getattr(args, "eigenvalues", None):
        inputs = [args.eigenvalues]
    files.write_manifest(
        args.output,
        command=args.command,
        argv=["specwalk", *argv],
        seeds=seeds,
        inputs=inputs,
        outputs=outputs,
        wall_clock=time.perf_counter() - t0,
        extra={"flags": {k: v for k, v in vars(args).items() if k != "func"}},
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
