"""Print the lift/drag polar of the bundled vehicle and locate the best
glide point.

Compares the winged vehicle against the bundled wingless variant to show
how much aerodynamic performance the wings contribute.
"""

import numpy as np

from blimpdyn import lift_drag_analysis, load_bundled


def main():
    alpha = np.radians(np.arange(0.0, 16.0 + 1e-9, 0.5))

    for label, wingless in (("winged", False), ("wingless", True)):
        _, model = load_bundled(wingless=wingless)
        table = lift_drag_analysis(model, alpha)
        print(f"--- {label} ---")
        print(f"{'alpha [deg]':>12} {'C_L':>8} {'C_D':>8} {'L/D':>8}")
        for a, cl, cd, ld in zip(table.alpha[::4], table.cl[::4],
                                 table.cd[::4], table.ld[::4]):
            print(f"{np.degrees(a):>12.1f} {cl:>8.4f} {cd:>8.4f} {ld:>8.4f}")
        print(f"max L/D = {table.max_ld:.4f} at "
              f"alpha = {np.degrees(table.alpha_star):.2f} deg\n")


if __name__ == "__main__":
    main()
