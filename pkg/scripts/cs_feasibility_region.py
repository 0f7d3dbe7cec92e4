"""Minimum feasible T over an SNR grid for linear CS, in both bound forms.

Rows with no feasible T up to the cap print an empty min_t.
"""

import argparse

import numpy as np

from sparsebound.bounds import min_feasible_t, snr_necessary


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--k", type=int, default=32)
    parser.add_argument("--points", type=int, default=25)
    parser.add_argument("--max-factor", type=float, default=20.0)
    args = parser.parse_args()

    print("form,snr,snr_over_threshold,min_t")
    for form in ("asymptotic", "finite-fano"):
        threshold = snr_necessary(args.n, args.k, form)
        for factor in np.geomspace(0.9, args.max_factor, args.points):
            snr = factor * threshold
            t = min_feasible_t(snr, args.n, args.k, form)
            print(f"{form},{snr:.6g},{factor:.4f},{'' if t is None else t}")


if __name__ == "__main__":
    main()
