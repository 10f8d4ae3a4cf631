"""Fly a differential-thrust staircase and compare the simulated turning
radius on each plateau against the steady spiral prediction.

The schedule steps the thrust differential every 25 s while total thrust
stays at 7 gf.  After each step the trajectory settles onto the predicted
spiral to within a fraction of a percent in radius.
"""

import numpy as np

from blimpdyn import load_bundled, solve_spiral, turning_radius
from blimpdyn.frames import GF_TO_N
from blimpdyn.simulate import InputSchedule, Segment, integrate


def main():
    params, model = load_bundled()
    diffs = (-3.2, -4.2, -4.9)  # gf, left minus right
    total = 7.0
    plateau = 25.0

    segments = []
    for k, diff in enumerate(diffs):
        Fl = 0.5 * (total + diff) * GF_TO_N
        Fr = 0.5 * (total - diff) * GF_TO_N
        segments.append(Segment(k * plateau, (k + 1) * plateau, Fl, Fr))
    sched = InputSchedule(tuple(segments))

    # Start on the first plateau's spiral so the first window is settled too.
    first = solve_spiral(0.0, segments[0].Fl, segments[0].Fr, params, model)
    traj = integrate(first.state(params.rbar0), sched, params, model,
                     T=len(diffs) * plateau)
    print(f"simulation status: {traj.status}")

    print(f"{'diff [gf]':>10} {'R predicted [m]':>16} {'R simulated [m]':>16} "
          f"{'error':>8}")
    for k, diff in enumerate(diffs):
        Fl, Fr = segments[k].Fl, segments[k].Fr
        sol = solve_spiral(0.0, Fl, Fr, params, model)
        R_pred = turning_radius(sol)
        # Use the settled second half of each plateau.
        lo, hi = (k + 0.5) * plateau, (k + 1) * plateau
        mask = (traj.t >= lo) & (traj.t < hi)
        R_sim = float(np.median(traj.R[mask]))
        err = abs(R_sim - R_pred) / R_pred
        print(f"{diff:>10.1f} {R_pred:>16.4f} {R_sim:>16.4f} {err:>7.3%}")


if __name__ == "__main__":
    main()
