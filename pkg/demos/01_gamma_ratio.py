"""How well does a few-term expansion capture the gamma quotient?

For each builtin instance we print the derived constants, fit the first
expansion coefficients and watch the residual shrink along a vertical line
as the number of terms grows.
"""

import numpy as np

from localvoronoi import derive_constants, expansion_coeffs, ratio_residual
from localvoronoi.gamma_ratio import fit_line_sigma
from localvoronoi.providers import builtin_instance

t = np.array([100.0, 200.0, 400.0, 800.0, 1600.0])

for name in ("zeta", "zeta2", "delta"):
    inst = builtin_instance(name)
    c = derive_constants(inst.spec)
    coeffs = expansion_coeffs(inst.spec, c, 3)
    print(f"\n{name}: A={c.A:g} h={c.h:g} a={c.a:g} k={c.k:g} e0={c.e0.real:.6f}")
    for j, e in enumerate(coeffs.e):
        print(f"  e_{j} = {e.real:+.6e} {e.imag:+.2e}i   (e_j/e0 = {(e / c.e0).real:+.6f})")
    s = fit_line_sigma(c) + 1j * t
    for J in (1, 2, 3):
        r = ratio_residual(inst.spec, c, coeffs, s, J=J)
        print(f"  J={J}: residual " + "  ".join(f"{v:.2e}" for v in r))

# zeta has an exact one-term quotient, so its residuals sit at rounding level
# and show no power-law decay at all.
