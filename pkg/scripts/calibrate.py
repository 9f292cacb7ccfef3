"""Box-counting dimension of the calibration shapes against their exact values."""
import argparse
import time

from specwalk import fractal

SHAPES = [("line", 0), ("square", 0), ("koch", 7), ("sierpinski", 8)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=fractal.DEFAULT_RESOLUTION)
    args = ap.parse_args()
    for kind, depth in SHAPES:
        t0 = time.perf_counter()
        fit = fractal.calibrate(kind, depth, resolution=args.resolution)
        exact = fractal.CALIBRATION_DIMENSION[kind]
        print(f"{kind:10s} depth {depth}: {fit.slope:.4f} (exact {exact:.4f}, r2 {fit.r2:.5f}, "
              f"window {fit.window}, {time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
