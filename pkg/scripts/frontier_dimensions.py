"""Frontier dimension of L=12 walks for the XX, non-integrable and Bethe-ansatz chains.

    python scripts/frontier_dimensions.py --seeds 0 1 2 --resolution 2048 --out frontier.json
"""
import argparse
import json
import time

from specwalk import fractal, spectra

MODELS = {"XX": (0.0, 0.0), "NI": (0.5, 0.4), "BA": (0.1, 0.0)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=12)
    ap.add_argument("--walks", type=int, default=20)
    ap.add_argument("--resolution", type=int, default=fractal.DEFAULT_WALK_RESOLUTION)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--out")
    args = ap.parse_args()

    rows = []
    for name, (Delta, alpha) in MODELS.items():
        t0 = time.perf_counter()
        ev = spectra.diagonalize(spectra.build_xxz_nnn(args.L, Delta, alpha))
        spec = spectra.make_weighted_spectrum(ev)
        for seed in args.seeds:
            est = fractal.estimate_frontier_dimension(spec, args.walks, resolution=args.resolution, seed=seed)
            rows.append({"model": name, "Delta": Delta, "alpha": alpha, "N_B": spec.n_blocks, "seed": seed,
                         "d_F": est.mean, "stderr": est.stderr})
            print(f"{name:3s} N_B={spec.n_blocks:5d} seed={seed} d_F={est.mean:.3f} +- {est.stderr:.3f}"
                  f"  ({time.perf_counter() - t0:.0f}s)", flush=True)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
