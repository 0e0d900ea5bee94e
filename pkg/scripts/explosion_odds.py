"""Order-of-magnitude odds of observing an explosion in a moment sweep.

For y -> y + dt (y - y^3) + dW the deterministic part pushes |y| outward once
dt y^2 > 2 (roughly), so a trajectory sitting in the bulk |y| <= b needs a single
Gaussian increment that carries it past sqrt(2 / dt). The union bound over the
N steps gives an estimate of the per-path explosion probability; multiplying by
the number of paths gives the expected count in a sweep. The e_0 coefficient
of the spectral scheme follows the same scalar map up to coupling with the
damped higher modes, so the same numbers apply there.

Usage: python scripts/explosion_odds.py [--paths 10000] [--bulk 1.5]
"""

import argparse
import math

import numpy as np
from scipy.special import log_ndtr


def log10_escape_probability(N: int, bulk: float, linear: float) -> float:
    dt = 1.0 / N
    y = np.linspace(-bulk, bulk, 2001)
    reach = np.max(np.abs(y + dt * (linear * y - y**3)))
    gap = max(math.sqrt(2.0 / dt) - reach, 0.0)
    z = gap / math.sqrt(dt)
    # N steps, two tails
    return (math.log(2 * N) + float(log_ndtr(-z))) / math.log(10), z


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=10_000)
    parser.add_argument("--bulk", type=float, default=1.5, help="typical |y| before the jump")
    args = parser.parse_args()
    print(f"{'N':>6} {'model':>12} {'sigmas':>8} {'log10 P(path)':>14} {'log10 E[count]':>15}")
    for N in (8, 16, 32, 64, 128, 256, 512, 1024):
        for name, linear in (("-y^3", 0.0), ("y - y^3", 1.0)):
            lp, z = log10_escape_probability(N, args.bulk, linear)
            print(f"{N:>6} {name:>12} {z:>8.1f} {lp:>14.1f} {lp + math.log10(args.paths):>15.1f}")


if __name__ == "__main__":
    main()
