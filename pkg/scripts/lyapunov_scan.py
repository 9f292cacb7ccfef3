"""R_q^{N_B} against chain length, at infinite and at low temperature."""
import argparse

from specwalk import lyapunov, spectra


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=list(range(4, 13)))
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=0.4)
    ap.add_argument("--q", type=float, nargs="+", default=list(lyapunov.DEFAULT_QS))
    ap.add_argument("--betas", type=float, nargs="+", default=[0.0, 100.0])
    args = ap.parse_args()

    print("L    beta   " + "  ".join(f"R_{q:g}".ljust(10) for q in args.q))
    for L in args.sizes:
        ev = spectra.diagonalize(spectra.build_xxz_nnn(L, args.delta, args.alpha))
        for beta in args.betas:
            spec = spectra.make_weighted_spectrum(ev, beta, energy_ref=None)
            vals = "  ".join(f"{lyapunov.r_ratio(spec.weights, q):<10.4g}" for q in args.q)
            print(f"{L:<4d} {beta:<6g} {vals}", flush=True)
        if L == max(args.sizes):
            grid = lyapunov.wiener_grid(spectra.make_weighted_spectrum(ev).weights)
            print(f"Wiener window deviation at L={L}: {lyapunov.wiener_deviation(grid):.4f}")


if __name__ == "__main__":
    main()
