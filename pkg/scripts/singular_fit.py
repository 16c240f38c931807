"""Solve gamma = 0.1, T = 20, u_max = 1 with both solvers and compare the
singular-arc constants."""
import argparse
import time

from optstirap import direct, shooting
from optstirap.dynamics import ProblemSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.1)
    ap.add_argument("--duration", type=float, default=20.0)
    ap.add_argument("--u-max", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=400)
    args = ap.parse_args()
    spec = ProblemSpec(args.gamma, args.duration, args.u_max)

    t0 = time.perf_counter()
    sh = shooting.solve(spec)
    t1 = time.perf_counter()
    dr = direct.optimize(spec, args.n)
    t2 = time.perf_counter()

    print(f"shooting: population {sh.population:.8f}  theta0 {sh.theta0:.6f}  t1 {sh.t1:.6f}  "
          f"c1 {sh.c1:.6f}  c2 {sh.c2:.4f}  ({t1 - t0:.1f}s)")
    print(f"direct:   population {dr.population:.8f}  theta0 {dr.theta0:.6f}  t1 {dr.t1:.6f}  "
          f"c1 {dr.c1:.6f}  c2 {dr.c2:.4f}  ({t2 - t1:.1f}s, {dr.extra['iterations']} iterations)")
    print(f"direct fit window {dr.fit['window']}, feedback RMS {dr.fit['feedback_rms']:.2e}, "
          f"surface RMS {dr.fit['surface_rms']:.2e}, symmetry defect {dr.symmetry_defect:.2e}")


if __name__ == "__main__":
    main()
