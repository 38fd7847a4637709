"""Werner-state steering thresholds from the LHS solver.

Bisects the Werner mixing parameter q with fixed measurement axes and
compares the flip points against the analytic two- and three-setting
thresholds 1/sqrt(2) and 1/sqrt(3), then against the CJWR inequality
values for the same states.
"""

import numpy as np

from steerhier.atlas import werner_state
from steerhier.criteria import cjwr_value
from steerhier.steer_sdp import build_assemblage, measurement_from_axis, solve_lhs

XZ = [measurement_from_axis(u) for u in ([1, 0, 0], [0, 0, 1])]
XYZ = XZ + [measurement_from_axis([0, 1, 0])]


def flip_point(ms):
    lo, hi = 0.3, 0.95
    while hi - lo > 1e-5:
        mid = (lo + hi) / 2
        verdict = solve_lhs(build_assemblage(werner_state(mid), ms))
        if verdict.kind == "steerable":
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def main():
    q2 = flip_point(XZ)
    q3 = flip_point(XYZ)
    print("two settings  (x, z):    flip at q = %.6f, analytic 1/sqrt(2) = %.6f"
          % (q2, 1 / np.sqrt(2)))
    print("three settings (x, y, z): flip at q = %.6f, analytic 1/sqrt(3) = %.6f"
          % (q3, 1 / np.sqrt(3)))

    print("\nCJWR criterion values across the family:")
    for q in (0.5, 0.6, 1 / np.sqrt(2), 0.8):
        r2 = cjwr_value(werner_state(q), 2)
        r3 = cjwr_value(werner_state(q), 3)
        print(f"  q = {q:.4f}: F2 = {r2.value:.4f} ({r2.verdict}), "
              f"F3 = {r3.value:.4f} ({r3.verdict})")


if __name__ == "__main__":
    main()
