"""Ensemble-averaged SYK moment ratios K_m, exact against Monte Carlo.

Prints K_m = <I_m> / <I_1>^m and the deviation of the Gaussian guess m!.
"""
import argparse
import math

import numpy as np

from specwalk import moments, spectra


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-majorana", type=int, default=18)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--realizations", type=int, default=100)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--temperatures", type=float, nargs="+", default=[0.01, 0.1, 1.0])
    ap.add_argument("--p-max", type=int, default=4)
    args = ap.parse_args()

    evs = [spectra.diagonalize(spectra.build_syk(args.n_majorana, args.k, 1.0, s)) for s in range(args.realizations)]
    powers = np.arange(1, args.p_max + 1)
    for T in args.temperatures:
        ex, mc = [], []
        for seed, ev in enumerate(evs):
            spec = spectra.make_weighted_spectrum(ev, 1.0 / T, energy_ref=None)
            ex.append(moments.exact_moments_recursion(spec.weights, args.p_max))
            mc.append(moments.mc_moments(spec, args.p_max, args.samples, seed=seed).mean)
        ex, mc = np.mean(ex, axis=0), np.mean(mc, axis=0)
        K_ex, K_mc = ex / ex[0] ** powers, mc / mc[0] ** powers
        print(f"T={T:g}")
        for m in powers:
            f = math.factorial(m)
            print(f"  K_{m}: exact {K_ex[m - 1]:.6f}  mc {K_mc[m - 1]:.6f}  "
                  f"|K-m!|/m! {abs(K_ex[m - 1] - f) / f:.3f}")


if __name__ == "__main__":
    main()
