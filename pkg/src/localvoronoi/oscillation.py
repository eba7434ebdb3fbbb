"""Sign changes: the nonnegative Fejer-type kernel, the extremum search around
``x`` and the counting/window/gap scanners for real coefficient sequences."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._quadrature import gauss_legendre
from .errors import SpecError, DataError, ThresholdError
from .feq import sign_scalar
from .voronoi import (
    _dual_terms,
    check_anchor,
    direct_local_sum,
    main_term_residues,
    oscillation_nodes,
)
from .weight import WeightProfile, bump, weight_integral


# ------------------------------------------------------------------ kernel

@dataclass(frozen=True)
class KernelParams:
    tau: float
    rho: float
    theta: float
    alpha: float = 1.0


@dataclass(frozen=True)
class DetectionParams:
    delta: float = 0.1
    c0: float = 1.0
    N: int = 50
    T_grid_count: int = 64
    tau: float = 1.0

    def __post_init__(self):
        if not (self.delta > 0 and self.c0 > 0):
            raise SpecError("delta and c0 must be positive")
        if self.N < 1 or self.T_grid_count < 1:
            raise SpecError("N and T_grid_count must be positive")


def kernel(params, t):
    """``(1 - |t|)(1 + tau cos(2 rho t + theta))`` on ``[-1, 1]``."""
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1):
        raise SpecError("kernel is defined on [-1, 1] only")
    out = (1 - np.abs(t)) * (1 + params.tau * np.cos(2 * params.rho * t + params.theta))
    return out if out.ndim else float(out)


def _sinc2(z):
    return np.sinc(np.asarray(z) / np.pi) ** 2


def kernel_transform(params, upsilon):
    """``int_{-1}^{1} K(t) e^(2 i upsilon t) dt`` in closed form."""
    u = np.asarray(upsilon, dtype=float)
    tau, rho, th = params.tau, params.rho, params.theta
    out = _sinc2(u) + 0.5 * tau * np.exp(1j * th) * _sinc2(u + rho) + 0.5 * tau * np.exp(-1j * th) * _sinc2(u - rho)
    return out if out.ndim else complex(out)


def kernel_transform_quadrature(tau, rho, theta, upsilon, nodes=256):
    """Same integral by Gauss-Legendre on each half of ``[-1, 1]``; broadcasts."""
    v, w = gauss_legendre(nodes)
    t = np.concatenate([(v - 1) / 2, (v + 1) / 2])
    wt = np.concatenate([w, w]) / 2
    tau, rho, theta, upsilon = (np.asarray(a, dtype=float)[..., None] for a in (tau, rho, theta, upsilon))
    K = (1 - np.abs(t)) * (1 + tau * np.cos(2 * rho * t + theta))
    return np.sum(wt * K * np.exp(2j * upsilon * t), axis=-1)


# --------------------------------------------------- detection constants

def kernel_params(consts, stream, alpha, tau=1.0):
    rho = (consts.h * stream.mu1) ** (1 / (2 * consts.A)) * alpha
    return KernelParams(tau=tau, rho=rho, theta=consts.kappa * math.pi, alpha=alpha)


def choose_alpha(consts, stream, delta, N):
    """Smallest ``alpha`` whose non-resonant kernel error is at most ``delta/L``.

    With ``|sinc z|^2 <= z^-2`` the off-peak transform terms give at most
    ``(2/L) cosh(eta pi) alpha^-2 sum_{n<=N} |b_n| mu_n^-theta B_n``.
    """
    twoA = 2 * consts.A
    mu = stream.dual_lambdas[:N]
    b = np.abs(stream.dual_coeffs[:N])
    c = (consts.h * mu) ** (1 / twoA)
    c1 = c[0]
    with np.errstate(divide="ignore"):
        off = np.where(np.arange(mu.size) == 0, 0.0, 0.5 / (c - c1) ** 2)
    B = c ** -2.0 + 0.5 / (c + c1) ** 2 + off
    total = float(np.sum(b * mu ** (-consts.theta) * B))
    return math.sqrt(2 * math.cosh(math.pi * abs(consts.eta)) * total / delta)


def threshold_x0(consts, alpha):
    """``(2 alpha)^(2A)``; below it the kernel window reaches ``T <= 2 alpha``."""
    return (2 * alpha) ** (2 * consts.A)


def t_grid(consts, stream, X, count):
    """``T = 2 n pi / (h mu_1)^(1/2A)`` inside ``[(2X)^(1/2A), (3X)^(1/2A)]``."""
    twoA = 2 * consts.A
    step = 2 * math.pi / (consts.h * stream.mu1) ** (1 / twoA)
    lo, hi = (2 * X) ** (1 / twoA), (3 * X) ** (1 / twoA)
    n = np.arange(math.ceil(lo / step), math.floor(hi / step) + 1)
    if n.size > count:
        n = n[np.unique(np.round(np.linspace(0, n.size - 1, count)).astype(int))]
    return n * step


@dataclass(frozen=True)
class KernelAverage:
    numeric: complex
    analytic: complex
    terms: int


def _normalizer(stream, consts, tau):
    b1 = stream.b1
    return tau * abs(b1) / (b1 * stream.mu1 ** (1j * consts.xi))


def kernel_average(spec, consts, stream, profile, T, params, detection=None, terms=None, method="transform"):
    """Kernel-weighted mean of ``S_{phi,0}((T + 2 alpha t)^(2A))``.

    ``numeric`` is normalized by ``tau |b1| / (b1 mu1^(i xi))``; ``analytic``
    is ``|b1| / (2 mu1^theta) cos((h mu1)^(1/2A) T + i eta pi) int phi``.
    ``method="transform"`` does the ``t``-integral exactly per dual term;
    ``"quadrature"`` integrates over ``t`` numerically (small streams).
    """
    alpha = params.alpha
    if not T > 2 * alpha:
        raise SpecError(f"T={T:g} must exceed 2 alpha = {2 * alpha:g}")
    twoA = 2 * consts.A
    terms = min(terms or stream.dual_lambdas.size, stream.dual_lambdas.size)
    mu = stream.dual_lambdas[:terms]
    b = stream.dual_coeffs[:terms]
    p = -consts.theta + 1j * consts.xi
    L = profile.L
    kpi = consts.k * math.pi
    if method == "transform":
        total = 0j
        for lo in range(0, terms, 256):
            m = mu[lo:lo + 256]
            cmax = (consts.h * m[-1]) ** (1 / twoA)
            n = oscillation_nodes(cmax * T, 1 / twoA, L)
            v, w = gauss_legendre(n)
            logu = np.log1p(v / L)
            pw = w * bump(v) / L * np.exp(p * logu)
            c = np.exp(np.add.outer(np.log(consts.h * m), logu) / twoA)
            inner = 0.5 * (np.exp(1j * (c * T + kpi)) * kernel_transform(params, c * alpha)
                           + np.exp(-1j * (c * T + kpi)) * kernel_transform(params, -c * alpha))
            total += np.sum(b[lo:lo + 256] * m ** p * (inner @ pw))
    elif method == "quadrature":
        cmax = (consts.h * mu[-1]) ** (1 / twoA)
        nt = max(64, 8 * math.ceil(2 * (cmax * alpha + abs(params.rho)) / math.pi))
        v, w = gauss_legendre(nt)
        t = np.concatenate([(v - 1) / 2, (v + 1) / 2])
        wt = np.concatenate([w, w]) / 2
        Kt = kernel(params, t)
        n = oscillation_nodes(cmax * (T + 2 * alpha), 1 / twoA, L)
        uv, uw = gauss_legendre(n)
        logu = np.log1p(uv / L)
        pw = uw * bump(uv) / L * np.exp(p * logu)
        total = 0j
        for m, bn in zip(mu, b):
            c = np.exp((math.log(consts.h * m) + logu) / twoA)
            vals = np.cos(np.multiply.outer(T + 2 * alpha * t, c) + kpi) @ pw
            total += bn * m ** p * np.dot(wt * Kt, vals)
    else:
        raise SpecError(f"unknown method {method!r}")
    numeric = _normalizer(stream, consts, params.tau) * total
    analytic = (abs(stream.b1) / (2 * stream.mu1 ** consts.theta)
                * np.cos((consts.h * stream.mu1) ** (1 / twoA) * T + 1j * consts.eta * math.pi)
                * weight_integral(profile))
    return KernelAverage(numeric=complex(numeric), analytic=complex(analytic), terms=terms)


# ------------------------------------------------------ extremum search

@dataclass
class DetectionResult:
    x: float
    x_plus: float
    x_minus: float
    value_plus: float
    value_minus: float
    success: bool
    crossing: Optional[float]
    c0: float
    delta: float
    L: float
    scale: float  # x^(1 - theta) / L
    alpha: float
    X0: float
    grid_points: int
    evaluator: str

    def to_dict(self):
        return asdict(self)


def functional(spec, consts, stream, profile, t, evaluator="direct", terms=None):
    """``Re(varsigma^-1 S_phi(t) / (mu_1 h t)^(i xi))``."""
    if evaluator == "direct":
        S = direct_local_sum(stream, profile, t) - main_term_residues(spec, consts, profile, t)
    elif evaluator == "leading":
        n = terms or stream.dual_lambdas.size
        _, lead = _dual_terms(consts, (consts.e0,), profile, stream.dual_lambdas[:n],
                              stream.dual_coeffs[:n], t, 1)
        S = spec.omega * lead.sum()
    else:
        raise SpecError(f"unknown evaluator {evaluator!r}")
    varsigma = sign_scalar(consts, stream.b1, spec.omega)
    return float((S / varsigma / (stream.mu1 * consts.h * t) ** (1j * consts.xi)).real)


def detect_extrema(spec, consts, stream, x, detection=None, evaluator="direct", X0=None, terms=None):
    """Grid search for ``x_+`` / ``x_-`` in ``[x - c0 x^(1-1/2A), x + c0 x^(1-1/2A)]``.

    ``L = delta^-1 x^(1/2A)`` throughout; grid spacing ``x / (8L)``.  On
    success the sign change is pinned down by root bracketing.
    """
    det = detection or DetectionParams()
    twoA = 2 * consts.A
    alpha = choose_alpha(consts, stream, det.delta, det.N)
    X0 = threshold_x0(consts, alpha) if X0 is None else X0
    half = det.c0 * x ** (1 - 1 / twoA)
    if x - half < X0:
        raise ThresholdError(f"window [{x - half:g}, {x + half:g}] reaches below X0={X0:g}")
    profile = WeightProfile(delta=det.delta, X=float(x), A=consts.A)
    L = profile.L
    count = int(math.ceil(2 * half / (x / (8 * L)))) + 1
    grid = np.linspace(x - half, x + half, count)

    def f(t):
        return functional(spec, consts, stream, profile, t, evaluator, terms)

    vals = np.array([f(t) for t in grid])
    ip, im = int(np.argmax(vals)), int(np.argmin(vals))
    success = bool(vals[ip] > 0 > vals[im])
    crossing = None
    if success:
        a, b = sorted((grid[ip], grid[im]))
        crossing = float(brentq(f, a, b, xtol=1e-10 * x))
    return DetectionResult(
        x=float(x), x_plus=float(grid[ip]), x_minus=float(grid[im]), value_plus=float(vals[ip]),
        value_minus=float(vals[im]), success=success, crossing=crossing, c0=det.c0, delta=det.delta,
        L=L, scale=x ** (1 - consts.theta) / L, alpha=alpha, X0=X0, grid_points=count, evaluator=evaluator,
    )


# ------------------------------------------------------------- scanners

@dataclass
class WindowResult:
    center: float
    found: bool
    x_plus: Optional[float]
    x_minus: Optional[float]


@dataclass
class SignChangeReport:
    x_low: float
    x_high: float
    windows: list = field(default_factory=list)
    n_star: int = 0
    n_plus: int = 0
    n_minus: int = 0
    max_gap: float = 0.0
    max_gap_normalized: float = 0.0
    c0: Optional[float] = None
    exponent: Optional[float] = None
    coordinate: str = "index"

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    def windows_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["center", "found", "x_plus", "x_minus"])
        for win in self.windows:
            w.writerow([repr(win.center), int(win.found), win.x_plus, win.x_minus])
        return buf.getvalue()


def _coordinates(stream, by):
    if by == "lambda":
        return stream.lambdas
    if by == "index":
        return np.arange(1, len(stream) + 1, dtype=float)
    raise SpecError(f"coordinate must be 'lambda' or 'index', got {by!r}")


def _nonzero_signs(stream, by, x_low, x_high):
    a = stream.real_coefficients()
    pos = _coordinates(stream, by)
    keep = (pos >= x_low) & (pos <= x_high) & (a != 0)
    return pos[keep], np.sign(a[keep])


def sign_changes(stream, x_max, zero_policy="SkipZeros", by="lambda", x_min=0.0):
    """``N+``, ``N-`` and adjacent sign flips ``N*`` among terms up to ``x_max``."""
    if zero_policy != "SkipZeros":
        raise SpecError(f"unsupported zero policy {zero_policy!r}")
    pos, sgn = _nonzero_signs(stream, by, x_min, x_max)
    flips = int(np.count_nonzero(sgn[1:] != sgn[:-1]))
    return SignChangeReport(
        x_low=float(x_min), x_high=float(x_max), n_star=flips,
        n_plus=int(np.count_nonzero(sgn > 0)), n_minus=int(np.count_nonzero(sgn < 0)), coordinate=by,
    )


def _flip_pairs(pos, sgn):
    i = np.flatnonzero(sgn[1:] != sgn[:-1])
    return pos[i], pos[i + 1]


def minimal_window_constant(stream, x_low, x_high, exponent, by="index", centers=None):
    """Smallest ``c`` such that every window ``[x - c x^e, x + c x^e]`` holds a
    pair of adjacent opposite-sign terms; maximized over ``centers``
    (default: every integer in ``[x_low, x_high]``)."""
    if centers is None:
        centers = np.arange(math.ceil(x_low), math.floor(x_high) + 1, dtype=float)
    centers = np.asarray(centers, dtype=float)
    pos, sgn = _nonzero_signs(stream, by, -np.inf, np.inf)
    p, q = _flip_pairs(pos, sgn)
    if p.size == 0:
        return math.inf
    # pair ending at or before x (largest such p) and pair starting at or after x
    k_left = np.searchsorted(q, centers, side="right") - 1
    k_right = np.searchsorted(p, centers, side="left")
    need = np.full(centers.size, np.inf)
    ok = k_left >= 0
    need[ok] = centers[ok] - p[k_left[ok]]
    ok = k_right < p.size
    need[ok] = np.minimum(need[ok], q[k_right[ok]] - centers[ok])
    # straddling pair p < x < q
    k = np.searchsorted(p, centers, side="left") - 1
    ok = (k >= 0) & (k < p.size)
    ks = np.clip(k, 0, p.size - 1)
    straddle = ok & (q[ks] > centers)
    need[straddle] = np.minimum(need[straddle],
                                np.maximum(centers[straddle] - p[ks[straddle]], q[ks[straddle]] - centers[straddle]))
    return float(np.max(need / centers ** exponent))


def tile_centers(x_low, x_high, c0, exponent):
    """Centers whose windows ``[x - c0 x^e, x + c0 x^e]`` abut and cover the range."""
    centers = []
    left = x_low
    while left < x_high:
        x = left + c0 * left ** exponent
        for _ in range(50):  # solve x - c0 x^e = left
            x = left + c0 * x ** exponent
        centers.append(x)
        left = x + c0 * x ** exponent
    return np.array(centers)


def window_scan(stream, x_low, x_high, c0, exponent, by="index", centers=None):
    """Per-window sign-change flags plus the longest stretch without a flip."""
    if x_low < 1 or not x_high > x_low:
        raise SpecError("need 1 <= x_low < x_high")
    if centers is None:
        centers = tile_centers(x_low, x_high, c0, exponent)
    centers = np.asarray(centers, dtype=float)
    if centers.size == 0:
        raise SpecError("empty tiling")
    pos, sgn = _nonzero_signs(stream, by, -np.inf, np.inf)
    windows = []
    for x in centers:
        half = c0 * x ** exponent
        lo, hi = np.searchsorted(pos, x - half, side="left"), np.searchsorted(pos, x + half, side="right")
        s = sgn[lo:hi]
        flips = np.flatnonzero(s[1:] != s[:-1])
        if flips.size:
            i = lo + int(flips[0])
            a, b = (pos[i], pos[i + 1]) if sgn[i] > 0 else (pos[i + 1], pos[i])
            windows.append(WindowResult(float(x), True, float(a), float(b)))
        else:
            windows.append(WindowResult(float(x), False, None, None))
    inside = (pos >= x_low) & (pos <= x_high)
    p_in, s_in = pos[inside], sgn[inside]
    i = np.flatnonzero(s_in[1:] != s_in[:-1])
    marks = np.concatenate([[x_low], (p_in[i] + p_in[i + 1]) / 2, [x_high]])
    gaps = np.diff(marks)
    j = int(np.argmax(gaps))
    report = sign_changes(stream, x_high, by=by, x_min=x_low)
    report.windows = windows
    report.max_gap = float(gaps[j])
    report.max_gap_normalized = float(np.max(gaps / marks[:-1] ** exponent))
    report.c0 = float(c0)
    report.exponent = float(exponent)
    return report


GAP_RTOL = 1e-12


def gap_scan(stream, value_range, A):
    """``max (lambda_{n+1} - lambda_n) / lambda_n^(1 - 1/2A)`` over consecutive
    pairs with both points in ``value_range``; accepts a stream or an array."""
    lam = np.asarray(stream.lambdas if hasattr(stream, "lambdas") else stream, dtype=float)
    steps = np.diff(lam)
    if np.any(~(steps > 0)):
        i = int(np.flatnonzero(~(steps > 0))[0]) + 1
        raise DataError(f"lambda not strictly increasing at index {i + 1}", index=i)
    lo, hi = value_range
    keep = (lam[:-1] >= lo) & (lam[1:] <= hi)
    if not np.any(keep):
        raise SpecError("no consecutive pair inside the range")
    expo = 1 - 1 / (2 * A)
    return float(np.max(steps[keep] / lam[:-1][keep] ** expo))
