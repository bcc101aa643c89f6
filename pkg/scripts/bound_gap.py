"""How far the best spin-POVM error sits above delta/4.

Fits random families of three kinds (noisy POVM families, pure noise, and
axially symmetric families with P_up = P_down) and prints summary statistics
of minimax_error - delta/4 per kind. Both numbers are reported; the gap is an
empirical quantity, not a bound.
"""

import argparse

import numpy as np

from arrival_povm.families import antipodal_directions, chiral_family, mixed_family, noise_family
from arrival_povm.measurability import delta
from arrival_povm.povm_fit import fit
from arrival_povm.time_distributions import TimeGrid


def families(kind, count, bins, pairs):
    for seed in range(count):
        rng = np.random.default_rng(seed)
        grid = TimeGrid(0, 1, bins)
        if kind == "mixed":
            yield mixed_family(grid, pairs, seed)
        elif kind == "noise":
            yield noise_family(grid, antipodal_directions(pairs, rng), rng)
        else:
            yield chiral_family(grid, pairs - 1, seed)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--bins", type=int, default=12)
    ap.add_argument("--pairs", type=int, default=4)
    args = ap.parse_args()

    print(f"{'kind':<8} {'mean delta/4':>13} {'mean fit':>10} {'min gap':>10} {'max gap':>10} {'tight':>6}")
    for kind in ("mixed", "noise", "chiral"):
        bound, err = [], []
        for f in families(kind, args.count, args.bins, args.pairs):
            bound.append(delta(f) / 4)
            err.append(fit(f).minimax_error)
        gap = np.array(err) - np.array(bound)
        tight = int((gap <= 1e-5).sum())
        print(
            f"{kind:<8} {np.mean(bound):>13.4f} {np.mean(err):>10.4f}"
            f" {gap.min():>10.2e} {gap.max():>10.2e} {tight:>6}"
        )


if __name__ == "__main__":
    main()
