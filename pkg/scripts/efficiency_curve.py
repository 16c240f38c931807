"""Final population against duration for several loss rates, written as CSV."""
import argparse
import csv
import sys

import numpy as np

from optstirap.direct import efficiency_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--durations", type=float, nargs="+", default=list(np.arange(5.0, 41.0, 2.5)))
    ap.add_argument("--solver", choices=["direct", "shooting"], default="direct")
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    res = efficiency_sweep(args.gammas, args.durations, solver=args.solver)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.DictWriter(fh, ["gamma", "duration", "population", "structure", "singular_fraction", "status"])
    w.writeheader()
    for row in res.rows():
        w.writerow(row)
    if fh is not sys.stdout:
        fh.close()
    for g, ok in zip(args.gammas, res.monotone_in_duration()):
        print(f"gamma={g}: monotone in T: {ok}, singular onset T={res.onset(args.gammas.index(g))}",
              file=sys.stderr)


if __name__ == "__main__":
    main()
