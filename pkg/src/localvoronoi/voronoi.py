"""Local weighted sums and their Voronoi-type dual series.

    S_phi(x) = sum_n a_n phi(lambda_n / x) - M_phi(x) = omega sum_n (b_n / mu_n) I(mu_n x)

with ``I(y) ~ (y/2A) sum_j e_j int (hyu)^(a - j/2A) phi(u) cos((hyu)^(1/2A) + (k + j/2) pi) du``.
The ``j = 0`` part of the dual series is the leading term; it is accumulated
alongside the full series so both share one truncation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ._quadrature import gauss_legendre
from .errors import (
    InsufficientDataError,
    NumericError,
    OscillationTooFastError,
    SpecError,
    TruncationError,
)
from .gamma_ratio import MAX_J, gamma_ratio
from .weight import (
    BASE_NODES,
    MAX_DERIVATIVE_ORDER,
    MAX_NODES,
    NODES_PER_PERIOD,
    bump,
    bump_derivative_sup,
    mellin,
    mellin_derivative,
)

CONTOUR_START = 64
CONTOUR_MAX = 2 ** 16
CONTOUR_RTOL = 1e-10
CHUNK_CELLS = 2_000_000


def ceil_plus(value):
    """Smallest positive integer strictly greater than ``value``."""
    return max(1, math.floor(value) + 1)


@dataclass(frozen=True)
class TruncationPolicy:
    """How far to run the dual series.

    ``r_order=None`` picks the integration-by-parts order per term from
    ``ceil_plus(2A (sigma* - theta))`` up to the bump-derivative ceiling.
    ``min_terms`` forces at least that many terms even once the bound is met;
    with ``strict=False`` an unmet tolerance is flagged instead of raised.
    """

    tolerance: float = 1e-3
    r_order: Optional[int] = None
    max_terms: int = 400_000
    min_terms: int = 0
    strict: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise SpecError("tolerance must be positive")
        if self.max_terms < 1 or self.min_terms < 0:
            raise SpecError("max_terms must be positive and min_terms non-negative")
        if self.r_order is not None and not 1 <= self.r_order <= MAX_DERIVATIVE_ORDER:
            raise SpecError(f"r_order must lie in [1, {MAX_DERIVATIVE_ORDER}]")

    def orders(self, spec, consts):
        r_min = ceil_plus(2 * consts.A * (spec.sigma_star - consts.theta))
        if self.r_order is not None:
            if self.r_order < r_min:
                raise SpecError(f"r_order {self.r_order} below convergence requirement {r_min}")
            return [self.r_order]
        if r_min > MAX_DERIVATIVE_ORDER:
            raise SpecError(f"required order {r_min} exceeds derivative ceiling {MAX_DERIVATIVE_ORDER}")
        return list(range(r_min, MAX_DERIVATIVE_ORDER + 1))


@dataclass
class VoronoiEvaluation:
    x: float
    direct_sum: complex
    main_term_residues: complex
    s_phi: complex
    leading_term: complex
    series_value: complex
    tail_bound: float
    term_count: int
    J: int = 1
    L: float = float("nan")
    empty_window: bool = False
    truncated: bool = False

    FIELDS = ("direct_sum", "main_term_residues", "s_phi", "leading_term", "series_value")

    def error_ratio(self, consts):
        """``|S_phi - leading| / (L^-1 x^(1 - theta - 1/2A))``."""
        scale = self.x ** (1 - consts.theta - 1 / (2 * consts.A)) / self.L
        return abs(self.s_phi - self.leading_term) / scale

    def to_row(self, consts=None):
        row = {"x": self.x, "L": self.L}
        for name in self.FIELDS:
            v = complex(getattr(self, name))
            row[f"{name}_re"] = v.real
            row[f"{name}_im"] = v.imag
        row.update(tail_bound=self.tail_bound, term_count=self.term_count, J=self.J,
                   empty_window=self.empty_window, truncated=self.truncated)
        if consts is not None:
            row["error_ratio"] = self.error_ratio(consts)
        return row

    @classmethod
    def from_row(cls, row):
        kw = {name: complex(float(row[f"{name}_re"]), float(row[f"{name}_im"])) for name in cls.FIELDS}
        flag = lambda v: v if isinstance(v, bool) else str(v).lower() == "true"  # noqa: E731
        return cls(x=float(row["x"]), L=float(row["L"]), tail_bound=float(row["tail_bound"]),
                   term_count=int(row["term_count"]), J=int(row["J"]),
                   empty_window=flag(row["empty_window"]), truncated=flag(row["truncated"]), **kw)


def evaluations_to_csv(evals, consts=None):
    rows = [e.to_row(consts) for e in evals]
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def evaluations_to_json(evals, consts=None, header=None):
    return json.dumps({"header": header or {}, "rows": [e.to_row(consts) for e in evals]}, indent=1)


def evaluations_from_json(text):
    return [VoronoiEvaluation.from_row(r) for r in json.loads(text)["rows"]]


def check_anchor(profile, x):
    if not profile.X / 2 <= x <= 4 * profile.X:
        raise SpecError(f"x={x:g} outside [X/2, 4X] for anchor X={profile.X:g}")


# --------------------------------------------------------------- direct side

def window_indices(lambdas, x, L):
    lo = np.searchsorted(lambdas, x * (1 - 1 / L), side="right")
    hi = np.searchsorted(lambdas, x * (1 + 1 / L), side="left")
    return lo, hi


def direct_local_sum(stream, profile, x):
    """``sum a_n phi(lambda_n / x)`` over the (open) window."""
    L = profile.L
    top = x * (1 + 1 / L)
    lam = stream.lambdas
    if not stream.complete and (lam.size == 0 or lam[-1] < top):
        raise InsufficientDataError(
            f"stream ends at lambda={lam[-1] if lam.size else 0:g}; need lambda >= {top:g}",
            required_lambda=top,
        )
    lo, hi = window_indices(lam, x, L)
    if hi <= lo:
        return 0j
    u = lam[lo:hi] / x
    return complex(np.dot(stream.coeffs[lo:hi], bump((u - 1) * L)))


def residue_coefficients(pole):
    """``d_{i,j}`` with ``Res phi(s) phi_hat(s) x^s = sum d_ij x^v phi_hat^(i)(v) (log x)^j``."""
    if len(pole.principal_part) != pole.order:
        raise SpecError(f"incomplete pole at {pole.location}: principal part length "
                        f"{len(pole.principal_part)} != order {pole.order}")
    out = {}
    for i in range(pole.order):
        for j in range(pole.order - i):
            out[(i, j)] = pole.laurent(i + j + 1) / (math.factorial(i) * math.factorial(j))
    return out


def main_term_residues(spec, consts, profile, x, method="direct"):
    """Residue form of ``M_phi(x)``; ``method`` selects how ``phi_hat^(i)`` is taken."""
    total = 0j
    logx = math.log(x)
    for pole in spec.poles:
        v = pole.location
        xv = complex(np.exp(v * logx))
        derivs = {}
        for (i, j), d in residue_coefficients(pole).items():
            if i not in derivs:
                derivs[i] = mellin_derivative(profile, v, i, method=method)
            total += d * xv * derivs[i] * logx ** j
    return total


def main_term_contour(spec, profile, x, phi_eval, radius=None):
    """``(2 pi i)^-1 \\oint_{|s|=R} phi(s) phi_hat(s) x^s ds`` by the trapezoidal rule."""
    R = spec.pole_radius if radius is None else radius
    logx = math.log(x)

    def rule(n):
        theta = 2 * math.pi * np.arange(n) / n
        s = R * np.exp(1j * theta)
        f = np.asarray(phi_eval(s)) * mellin(profile, s) * np.exp(s * logx) * s
        return complex(np.mean(f)), float(np.max(np.abs(f)))

    n = CONTOUR_START
    prev, scale = rule(n)
    while n < CONTOUR_MAX:
        n *= 2
        cur, scale = rule(n)
        if abs(cur - prev) <= CONTOUR_RTOL * max(abs(cur), 1e-6 * scale):
            return cur
        prev = cur
    raise NumericError(f"contour quadrature did not converge with {CONTOUR_MAX} nodes")


# -------------------------------------------------------------- dual side

def oscillation_nodes(phase_scale, exponent_base, L):
    lo, hi = 1 - 1 / L, 1 + 1 / L
    variation = float(np.max(phase_scale)) * abs(hi ** exponent_base - lo ** exponent_base)
    n = BASE_NODES + NODES_PER_PERIOD * math.ceil(variation / (2 * math.pi))
    if n > MAX_NODES:
        raise OscillationTooFastError(
            f"{n} nodes needed (phase variation {variation:.3g} rad) exceeds ceiling {MAX_NODES}")
    return n


def oscillatory_integral(profile, exponent_base, phase_scale, power_exponent, phase_offset, nodes=None):
    """``int phi(u) u^p cos(c u^b + o) du``; vectorized over ``phase_scale``."""
    c = np.asarray(phase_scale, dtype=float)
    if np.any(c < 0):
        raise SpecError("phase_scale must be non-negative")
    L = profile.L
    n = nodes or oscillation_nodes(c, exponent_base, L)
    v, w = gauss_legendre(n)
    logu = np.log1p(v / L)
    pw = w * bump(v) / L * np.exp(complex(power_exponent) * logu)
    phase = np.multiply.outer(c, np.exp(exponent_base * logu)) + phase_offset
    out = np.cos(phase) @ pw
    return out if out.ndim else complex(out)


def i_kernel(spec, consts, coeffs, profile, y, J):
    """``I(y)`` from its ``J``-term oscillatory expansion."""
    if not y > 0:
        raise SpecError("y must be positive")
    if not 1 <= J <= coeffs.J:
        raise SpecError(f"J={J} outside [1, {coeffs.J}]")
    twoA = 2 * consts.A
    hy = consts.h * y
    total = 0j
    for j in range(J):
        p = consts.a - j / twoA
        integral = oscillatory_integral(profile, 1 / twoA, hy ** (1 / twoA), p, (consts.k + j / 2) * math.pi)
        total += coeffs.e[j] * complex(np.exp(p * math.log(hy))) * integral
    return y / twoA * total


def i_kernel_remainder_scale(consts, profile, y, J):
    """``L^-1 y^(1 - theta - (J - 1/2)/2A)``, the size of the neglected part."""
    return y ** (1 - consts.theta - (J - 0.5) / (2 * consts.A)) / profile.L


def i_kernel_line_integral(spec, consts, profile, y, sigma=None, t_max=None, panel=None):
    """``I(y)`` straight from its Mellin-Barnes line integral (test oracle).

    ``phi_hat(1 - s)`` decays only like ``exp(-sqrt(2 |t| / L))``, so the
    default cut is ``600 L``; practical for small ``L`` only. Panels keep
    the Mellin node count local.
    """
    if sigma is None:
        sigma = consts.theta + 3 / (4 * consts.A)
    L = profile.L
    t_max = 600 * L if t_max is None else t_max
    panel = panel or max(4 * L, 8.0)
    edges = np.linspace(-t_max, t_max, 2 * math.ceil(t_max / panel) + 1)
    logy = math.log(y)
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        # 8 nodes per radian of the y^-s and gamma phases
        rate = logy + 2 * consts.A * math.log(2 + max(abs(lo), abs(hi)))
        v, w = gauss_legendre(32 + math.ceil(8 * rate * (hi - lo) / (2 * math.pi)))
        t = 0.5 * (hi + lo) + 0.5 * (hi - lo) * v
        s = sigma + 1j * t
        f = gamma_ratio(spec, consts, s) * mellin(profile, 1 - s) * np.exp((1 - s) * logy)
        total += np.dot(w, f) * 0.5 * (hi - lo)
    return complex(total / (2 * math.pi))


def _dual_terms(consts, e, profile, mu, b, x, J):
    """Per-term ``b_n/mu_n I(mu_n x)`` for ``j < J`` and its ``j = 0`` part."""
    twoA = 2 * consts.A
    L = profile.L
    total = np.empty(mu.size, dtype=complex)
    lead = np.empty(mu.size, dtype=complex)
    start = 0
    while start < mu.size:
        # chunk by node count so each block uses one rule
        y_hi = consts.h * mu[start] * x
        n0 = oscillation_nodes(y_hi ** (1 / twoA), 1 / twoA, L)
        stop = min(mu.size, start + max(1, CHUNK_CELLS // n0))
        y_top = consts.h * mu[stop - 1] * x
        n1 = oscillation_nodes(y_top ** (1 / twoA), 1 / twoA, L)
        v, w = gauss_legendre(n1)
        logu = np.log1p(v / L)
        pw = w * bump(v) / L
        hy = consts.h * mu[start:stop] * x
        loghyu = np.add.outer(np.log(hy), logu)
        phase = np.exp(loghyu / twoA)  # (hyu)^(1/2A)
        real = consts.a.imag == 0 and consts.k.imag == 0
        base = np.exp((consts.a.real if real else consts.a) * loghyu)
        cos_p, sin_p = np.cos(phase), np.sin(phase)
        acc = np.zeros(stop - start, dtype=complex)
        inv_phase = 1.0 / phase if J > 1 else None
        for j in range(J):
            off = (consts.k + j / 2) * math.pi
            co, so = (math.cos(off.real), math.sin(off.real)) if real else (np.cos(off), np.sin(off))
            part = e[j] * (((cos_p * co - sin_p * so) * base) @ pw)
            if j + 1 < J:
                base = base * inv_phase  # (hyu)^(a - (j+1)/2A)
            if j == 0:
                lead[start:stop] = part
            acc += part
        scale = b[start:stop] / mu[start:stop] * (mu[start:stop] * x) / twoA
        total[start:stop] = scale * acc
        lead[start:stop] = scale * lead[start:stop]
        start = stop
    return total, lead


def term_bounds(spec, consts, e, profile, mu, majorant, x, orders):
    """Integration-by-parts bound on ``|b_n/mu_n I(mu_n x)|`` per term.

    Uses ``|int F e^(iYw)| <= Y^-r int |F^(r)|`` in ``w = u^(1/2A)`` with
    ``F^(r)`` bounded through the exact bump-derivative sup norms (safety
    factor 2); returns the per-term minimum over ``orders`` and, per order,
    the constant ``K_r`` with bound ``K_r m_n mu_n^-(theta + r/2A)``.
    """
    twoA = 2 * consts.A
    L = profile.L
    growth = math.cosh(math.pi * abs(consts.eta))
    ecoef = sum(abs(c) for c in e)
    best = np.full(mu.size, np.inf)
    consts_r = {}
    for r in orders:
        sup_sum = sum(bump_derivative_sup(i) for i in range(r + 1))
        K = (x ** (1 - consts.theta - r / twoA) * ecoef / twoA * consts.h ** (-consts.theta - r / twoA)
             * 2 * growth * 2 / (twoA * L) * (twoA * L) ** r * sup_sum * 2)
        consts_r[r] = K
        best = np.minimum(best, K * majorant * mu ** (-(consts.theta + r / twoA)))
    return best, consts_r


def default_J(spec, consts, coeffs):
    """``J_0`` of the truncation argument, capped at the available coefficients."""
    r = ceil_plus(2 * consts.A * (spec.sigma_star - consts.theta) + 0.5)
    return min(coeffs.J, MAX_J, 1 + r)


def _series(spec, consts, coeffs, stream, profile, x, policy, J):
    check_anchor(profile, x)
    if not 1 <= J <= coeffs.J:
        raise SpecError(f"J={J} outside [1, {coeffs.J}]")
    mu, b = stream.dual_lambdas, stream.dual_coeffs
    majorant = stream.dual_majorant if stream.dual_majorant is not None else np.abs(b)
    e = coeffs.e[:J]
    orders = policy.orders(spec, consts)
    available = min(mu.size, policy.max_terms)
    bounds, K = term_bounds(spec, consts, e, profile, mu[:available], majorant[:available], x, orders)
    remainder = 0.0
    for r, Kr in K.items():
        tail = stream.dual_tail_majorant(consts.theta + r / (2 * consts.A), available)
        cand = 0.0 if tail is None else Kr * tail
        remainder = cand if r == orders[0] else min(remainder, cand)
    # tail[N] = bound on sum over n > N
    tails = np.concatenate([np.cumsum(bounds[::-1])[::-1], [0.0]]) + remainder
    ok = np.flatnonzero(tails <= policy.tolerance)
    if ok.size:
        N = max(int(ok[0]), min(policy.min_terms, available))
        truncated = False
    else:
        N = available
        truncated = True
        if policy.strict:
            raise TruncationError(
                f"tail bound {tails[N]:.3e} above tolerance {policy.tolerance:.3e} after {N} terms",
                achieved_bound=float(tails[N]), terms=N)
    N = max(N, 1)
    total, lead = _dual_terms(consts, e, profile, mu[:N], b[:N], x, J)
    return complex(spec.omega * total.sum()), complex(spec.omega * lead.sum()), float(tails[N]), N, truncated


def voronoi_series(spec, consts, coeffs, stream, profile, x, policy, J=None):
    """Both sides of the summation identity at ``x``, plus the leading term."""
    J = default_J(spec, consts, coeffs) if J is None else J
    series, lead, tail, N, truncated = _series(spec, consts, coeffs, stream, profile, x, policy, J)
    direct = direct_local_sum(stream, profile, x)
    lo, hi = window_indices(stream.lambdas, x, profile.L)
    residues = main_term_residues(spec, consts, profile, x)
    return VoronoiEvaluation(
        x=float(x), direct_sum=direct, main_term_residues=residues, s_phi=direct - residues,
        leading_term=lead, series_value=series, tail_bound=tail, term_count=N, J=J, L=profile.L,
        empty_window=bool(hi <= lo), truncated=truncated,
    )


def leading_term(spec, consts, stream, profile, x, policy, coeffs=None):
    """``omega e0/(2Ah) (hx)^(1-theta+i xi) S_{phi,0}(x)`` with ``S_{phi,0}`` truncated by ``policy``."""
    from .gamma_ratio import ExpansionCoefficients

    coeffs = coeffs or ExpansionCoefficients(J=1, e=(consts.e0,))
    _, lead, *_ = _series(spec, consts, coeffs, stream, profile, x, policy, 1)
    return lead


def s_phi0(consts, stream, profile, x, terms):
    """``S_{phi,0}(x)`` over the first ``terms`` dual terms (no scaling)."""
    mu = stream.dual_lambdas[:terms]
    b = stream.dual_coeffs[:terms]
    twoA = 2 * consts.A
    p = -consts.theta + 1j * consts.xi
    out = 0j
    for m, bn in zip(mu, b):
        c = (consts.h * m * x) ** (1 / twoA)
        out += bn * m ** p * oscillatory_integral(profile, 1 / twoA, c, p, consts.k * math.pi)
    return out
