"""Monte-Carlo dot-product statistics for random unit vectors.

Part 1: independent pairs, variance against 1/N.
Part 2: pairs with x.y = c, dot of x with y shifted by m. Two constructions:
  isotropic   x uniform, y = c x + sqrt(1-c^2) u with u uniform in x's
              orthogonal complement (the pair is uniformly random);
  fixed-axis  y = e1 held fixed, x uniform subject to x1 = c.
The value (1-c^2)/(N-1) is only reached by the fixed-axis construction; the
isotropic variance is c^2 r + (1-c^2)(1-r)/(N-1), r = (1 + [2m = 0 mod N])/(N+2).
"""
import argparse

import numpy as np

from sense.codec import fixed_axis_variance, isotropic_variance, independent_dot_stats, shifted_dot_stats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print("independent pairs")
    print(f"{'N':>6} {'mean':>11} {'variance':>11} {'1/N':>11} {'rel err':>8}")
    for N in (2, 16, 64, 128, 512, 1024):
        mean, var = independent_dot_stats(N, args.samples, rng)
        print(f"{N:6d} {mean:11.2e} {var:11.5g} {1 / N:11.5g} {abs(var * N - 1):8.2%}")

    print("\nshifted correlated pairs")
    print(f"{'N':>5} {'c':>5} {'m':>3} {'construction':>12} {'variance':>11} {'(1-c2)/(N-1)':>13} {'isotropic':>11}")
    for N, c, m in [(128, 0.0, 1), (128, 0.6, 1), (256, 0.9, 3), (128, 1.0, 1), (64, 0.5, 32)]:
        for construction in ("isotropic", "fixed-axis"):
            _, var = shifted_dot_stats(N, c, m, args.samples, rng, construction)
            print(f"{N:5d} {c:5.2f} {m:3d} {construction:>12} {var:11.5g} "
                  f"{fixed_axis_variance(N, c):13.5g} {isotropic_variance(N, c, m):11.5g}")


if __name__ == "__main__":
    main()
