"""Both sides of the summation identity for the divisor function.

The left side is a smoothly weighted sum of d(n) over a short window around
x minus the pole contribution; the right side is the dual series. Their
agreement improves as more dual terms are taken.
"""

import numpy as np

from localvoronoi import derive_constants, expansion_coeffs
from localvoronoi.providers import builtin_instance
from localvoronoi.voronoi import TruncationPolicy, voronoi_series
from localvoronoi.weight import WeightProfile

inst = builtin_instance("zeta2")
c = derive_constants(inst.spec)
coeffs = expansion_coeffs(inst.spec, c, 2)
X = 2000.0
profile = WeightProfile.for_constants(c, 0.1, X)
stream = inst.stream_factory(40_000)
print(f"L = {profile.L:g}")

for N in (2_000, 10_000, 40_000):
    policy = TruncationPolicy(max_terms=N, min_terms=N, strict=False)
    print(f"\n{N} dual terms")
    for x in np.linspace(X, 3 * X, 4):
        ev = voronoi_series(inst.spec, c, coeffs, stream, profile, x, policy, J=2)
        rel = abs(ev.series_value - ev.s_phi) / abs(ev.s_phi)
        print(f"  x={x:7.1f}  S_phi={ev.s_phi.real:+.8f}  series={ev.series_value.real:+.8f}  rel={rel:.1e}")
