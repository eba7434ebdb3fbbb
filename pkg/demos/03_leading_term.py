"""The first dual term already carries the size of the local sum.

For the normalized Ramanujan tau coefficients the error after the leading
term, measured in its natural unit x^(1 - theta - 1/2A) / L, stays of order
one as x grows.
"""

from localvoronoi import derive_constants
from localvoronoi.providers import builtin_instance
from localvoronoi.voronoi import TruncationPolicy, direct_local_sum, leading_term, main_term_residues
from localvoronoi.weight import WeightProfile

inst = builtin_instance("delta")
c = derive_constants(inst.spec)
stream = inst.stream_factory(40_000)
policy = TruncationPolicy(max_terms=20_000, min_terms=20_000, strict=False)

print("     x        S_phi      leading    error ratio")
for X in (1e3, 1e4):
    p = WeightProfile.for_constants(c, 0.1, X)
    for x in (X, 2 * X, 4 * X):
        s = direct_local_sum(stream, p, x) - main_term_residues(inst.spec, c, p, x)
        lead = leading_term(inst.spec, c, stream, p, x, policy)
        unit = x ** (1 - c.theta - 1 / (2 * c.A)) / p.L
        print(f"{x:8.0f}  {s.real:+.6f}  {lead.real:+.6f}  {abs(s - lead) / unit:8.3f}")
