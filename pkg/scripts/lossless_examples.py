"""Print the lossless minimum-time protocols and a few members of the
bang-constant-bang family with their transfer."""
import numpy as np

from optstirap import lossless
from optstirap.dynamics import ProblemSpec
from optstirap.schedule import run_schedule


def main():
    T, sched = lossless.min_time_unconstrained()
    pop = run_schedule(ProblemSpec(0.0, T, allow_negative_u=True), sched).final_population
    print(f"sign-free control:  T = {T:.10f}  population = {pop:.12f}")
    T, sched = lossless.min_time_nonnegative()
    pop = run_schedule(ProblemSpec(0.0, T), sched).final_population
    print(f"nonnegative control: T = {T:.10f}  population = {pop:.12f}")

    print(f"\n{'u':>10} {'theta0':>10} {'phi':>10} {'T':>10} {'dT/du':>10} {'population':>14}")
    for u in np.linspace(lossless.U_LOW, lossless.U_HIGH, 9)[1:-1]:
        fam = lossless.solve_family(u)
        spec = ProblemSpec(0.0, fam.T, allow_negative_u=u < 0)
        pop = run_schedule(spec, fam.schedule()).final_population
        print(f"{u:10.5f} {fam.theta0:10.5f} {fam.phi:10.5f} {fam.T:10.5f} {lossless.dT_du(fam):10.4f} {pop:14.10f}")


if __name__ == "__main__":
    main()
