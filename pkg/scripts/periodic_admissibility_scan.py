"""Admissibility table over rational horizons: q, the sine bound and the resonant modes."""

import argparse
from fractions import Fraction

from wavectl.periodic_control import admissibility


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", default="1")
    ap.add_argument("--max-den", type=int, default=12)
    ap.add_argument("--T-max", type=float, default=1.0)
    args = ap.parse_args()

    horizons = sorted(
        {Fraction(n, d) for d in range(1, args.max_den + 1) for n in range(1, int(args.T_max * d) + 1)}
    )
    print(f"{'T':>7} {'2T/L':>7} {'q':>3} {'C_s':>9}  status")
    for T in horizons:
        a = admissibility(str(T), args.L)
        if a.admissible:
            status = f"resonant modes: multiples of {a.q}"
        else:
            status = "inadmissible: g is forced by f"
        print(f"{str(T):>7} {str(a.two_T_over_L):>7} {a.q:3d} {a.C_s:9.5f}  {status}")


if __name__ == "__main__":
    main()
