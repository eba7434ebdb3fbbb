"""Locating a positive and a negative local mean near x.

The functional is the normalized real part of the local weighted sum. A grid
search over a window of width about x^(1 - 1/2A) finds both signs, and the
root between them is refined by bracketing.
"""

from localvoronoi import DetectionParams, derive_constants, detect_extrema
from localvoronoi.providers import builtin_instance

inst = builtin_instance("delta")
c = derive_constants(inst.spec)
stream = inst.stream_factory(60_000)
params = DetectionParams(delta=0.1, c0=1.0)

for x in (1e3, 1e4, 5e4):
    r = detect_extrema(inst.spec, c, stream, x, params)
    print(f"x={x:>7g}  x+={r.x_plus:10.2f} ({r.value_plus / r.scale:+.3f})"
          f"  x-={r.x_minus:10.2f} ({r.value_minus / r.scale:+.3f})  crossing={r.crossing:.3f}")
