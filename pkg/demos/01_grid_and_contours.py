"""Grids, clamped distance profiles, and marching-squares contours.

A disc of radius r gives the zero set of u(x) = clamp(r - |x|), so the
extracted polyline should carry perimeter 2 pi r and the occupied set
{u > 0} area pi r^2, both up to O(h).  The peanut (hull of a ball with two
displaced kernel points) shows the same extraction on a nonconvex front.
"""

import numpy as np

from frontlab.contour import extract_contour
from frontlab.geometry import star_shaped_u0
from frontlab.grid import GridSpec, ScalarField, lebesgue_measure


def clamped_disc(spec, r):
    return ScalarField(spec, np.clip(r - spec.radius(), -1.0, 1.0))


def report(name, field, exact_perim, exact_area):
    c = extract_contour(field, 0.0)
    perim = c.perimeter()
    area = lebesgue_measure(field, 0.0)
    print(f"{name:>8}: {len(c.vertex_array())} vertices, "
          f"perimeter {perim:.4f} (exact {exact_perim:.4f}, "
          f"err {abs(perim - exact_perim) / exact_perim:.2e}), "
          f"area {area:.4f} (exact {exact_area:.4f})")


spec = GridSpec(101, 1.5)
print(f"grid: {spec.n} x {spec.n}, spacing h = {spec.h:.4f}")

for r in (0.3, 0.6, 0.9):
    report(f"disc {r}", clamped_disc(spec, r), 2 * np.pi * r, np.pi * r * r)

# nonconvex: hull of a ball with two displaced kernel points
init = star_shaped_u0(spec, [(0.45, 0.0), (-0.45, 0.0)], r0=0.35)
c = extract_contour(init.u0, 0.0)
print(f"\npeanut front: {len(c.vertex_array())} vertices, "
      f"perimeter {c.perimeter():.4f}, area {lebesgue_measure(init.u0, 0.0):.4f}")
print("sublevel areas shrink as the level rises:")
for level in (-0.1, 0.0, 0.1):
    print(f"  level {level:+.1f}: area {lebesgue_measure(init.u0, level):.4f}")
