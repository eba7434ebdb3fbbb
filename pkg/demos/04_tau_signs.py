"""Sign patterns of tau(n).

Counts the sign flips up to x, then finds the smallest constant c0 such that
every window [n - c0 sqrt(n), n + c0 sqrt(n)] in a range contains a flip.
"""

import math

from localvoronoi import minimal_window_constant, sign_changes, window_scan
from localvoronoi.providers import delta_stream

stream = delta_stream(100_000)
for x in (1e3, 1e4, 1e5):
    rep = sign_changes(stream, x, by="index")
    print(f"x={x:>8g}  flips={rep.n_star:6d}  flips/sqrt(x)={rep.n_star / math.sqrt(x):7.2f}"
          f"  positive={rep.n_plus} negative={rep.n_minus}")

c0 = minimal_window_constant(stream, 1e3, 2e4, 0.5)
print(f"\nsmallest c0 on [1e3, 2e4]: {c0:.5f}")
scan = window_scan(stream, 1e3, 2e4, 1.01 * c0, 0.5)
print(f"windows tiled: {len(scan.windows)}, all contain a flip: {all(w.found for w in scan.windows)}")
print(f"longest flip-free stretch: {scan.max_gap:.1f} (normalized {scan.max_gap_normalized:.3f})")
