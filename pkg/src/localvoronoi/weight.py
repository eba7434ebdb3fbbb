"""The localized weight ``phi(u) = phi0((u - 1) L)`` and its Mellin transform.

``phi0(v) = exp(1 - 1/(1 - v^2))`` on ``|v| < 1``.  All integrals over the
support are done in the bump variable ``v``, where ``u = 1 + v/L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from ._quadrature import gauss_legendre
from .errors import NumericError, SpecError

MAX_DERIVATIVE_ORDER = 8
BASE_NODES = 128
NODES_PER_PERIOD = 8
MAX_NODES = 2 ** 14


def _derivative_numerators(order):
    # phi0^(r)(v) = P_r(v) / (1 - v^2)^(2r) * phi0(v)
    one_minus = Polynomial([1.0, 0.0, -1.0])
    v = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for r in range(order):
        p = polys[-1]
        polys.append(p.deriv() * one_minus ** 2 + 4 * r * v * one_minus * p - 2 * v * p)
    return tuple(polys)


_NUMERATORS = _derivative_numerators(MAX_DERIVATIVE_ORDER)


def bump(u):
    """Standard bump ``exp(1 - 1/(1 - u^2))`` for ``|u| < 1``, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    out = np.zeros_like(u)
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out if out.ndim else float(out)


def bump_derivative(u, r):
    """Exact ``r``-th derivative of :func:`bump` (``r <= 8``)."""
    if not 0 <= r <= MAX_DERIVATIVE_ORDER:
        raise SpecError(f"derivative order {r} unsupported (maximum {MAX_DERIVATIVE_ORDER})")
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    out = np.zeros_like(u)
    ui = u[inside]
    q = 1.0 - ui * ui
    out[inside] = _NUMERATORS[r](ui) * np.exp(1.0 - 1.0 / q - 2 * r * np.log(q))
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def bump_integral():
    """``int phi0``; about 1.2069."""
    v, w = gauss_legendre(512)
    return float(np.dot(w, bump(v)))


@lru_cache(maxsize=None)
def bump_derivative_sup(r, samples=200_001):
    v = np.linspace(-1.0, 1.0, samples)[1:-1]
    return float(np.max(np.abs(bump_derivative(v, r))))


@lru_cache(maxsize=None)
def bump_moments(count):
    """``int phi0(v) v^m dv`` for ``m < count``."""
    v, w = gauss_legendre(512)
    pv = w * bump(v)
    return np.array([np.dot(pv, v ** m) for m in range(count)])


@dataclass(frozen=True)
class WeightProfile:
    delta: float
    X: float
    A: float
    bump: str = "StandardExp"

    def __post_init__(self):
        if not (self.delta > 0 and self.X > 0 and self.A > 0):
            raise SpecError("delta, X and A must be positive")
        if self.bump != "StandardExp":
            raise SpecError(f"unknown bump {self.bump!r}")

    @property
    def L(self):
        return self.X ** (1.0 / (2.0 * self.A)) / self.delta

    @property
    def support(self):
        L = self.L
        return 1.0 - 1.0 / L, 1.0 + 1.0 / L

    @classmethod
    def for_constants(cls, consts, delta, X):
        return cls(delta=float(delta), X=float(X), A=consts.A)


def weight(profile, u):
    L = profile.L
    return bump((np.asarray(u, dtype=float) - 1.0) * L)


def weight_integral(profile, nodes=256):
    """``int phi(u) du`` by Gauss-Legendre on the support."""
    v, w = gauss_legendre(nodes)
    coarse = float(np.dot(w, bump(v)))
    v2, w2 = gauss_legendre(2 * nodes)
    fine = float(np.dot(w2, bump(v2)))
    if abs(fine - coarse) > 1e-12 * abs(fine):
        raise NumericError(f"weight integral not converged, residual {abs(fine - coarse):.3e}")
    return fine / profile.L


def mellin_nodes(L, s_imag_max):
    periods = abs(s_imag_max) * 2.0 / L / (2.0 * math.pi)
    n = BASE_NODES + NODES_PER_PERIOD * math.ceil(periods)
    if n > MAX_NODES:
        raise NumericError(f"Mellin transform too oscillatory (|Im s| = {s_imag_max:g}, L = {L:g})")
    return n


def mellin(profile, s, nodes=None):
    """``phi_hat(s) = int phi(u) u^(s-1) du``, vectorized over ``s``."""
    s = np.asarray(s, dtype=complex)
    L = profile.L
    n = nodes or mellin_nodes(L, np.max(np.abs(s.imag)) if s.size else 0.0)
    v, w = gauss_legendre(n)
    logu = np.log1p(v / L)
    pw = w * bump(v) / L
    vals = np.exp(np.multiply.outer(s - 1.0, logu)) @ pw
    return vals if vals.ndim else complex(vals)


def mellin_derivative(profile, s, order, method="direct", radius=None, points=64):
    """``phi_hat^(order)(s)``.

    ``direct`` integrates ``phi(u) u^(s-1) (log u)^order``; ``cauchy`` uses
    the trapezoidal rule on a circle of ``radius`` (default ``L/2``).
    """
    s = complex(s)
    L = profile.L
    if method == "direct":
        n = mellin_nodes(L, abs(s.imag))
        v, w = gauss_legendre(n)
        logu = np.log1p(v / L)
        return complex(np.sum(w * bump(v) / L * np.exp((s - 1.0) * logu) * logu ** order))
    if method == "cauchy":
        r = radius if radius is not None else 0.5 * L
        theta = 2.0 * math.pi * np.arange(points) / points
        ring = s + r * np.exp(1j * theta)
        vals = mellin(profile, ring)
        return complex(math.factorial(order) / r ** order * np.mean(vals * np.exp(-1j * order * theta)))
    raise SpecError(f"unknown method {method!r}")


def mellin_expansion_coeffs(upsilon, order, M):
    """Coefficients ``c_m`` with ``phi_hat^(order)(upsilon) ~ sum_{m=1}^M c_m L^{-m}``.

    Expands ``(1 + v/L)^(upsilon-1) log^order(1 + v/L)`` in powers of ``1/L``
    and integrates against ``phi0`` term by term.
    """
    upsilon = complex(upsilon)
    K = M  # powers eps^0 .. eps^(M-1) contribute to L^-1 .. L^-M
    # log(1+eps) = sum_{j>=1} (-1)^(j+1) eps^j / j
    log1p = np.zeros(K, dtype=complex)
    for j in range(1, K):
        log1p[j] = (-1) ** (j + 1) / j
    # (1+eps)^c via generalized binomial coefficients
    power = np.zeros(K, dtype=complex)
    c = upsilon - 1.0
    coef = 1.0 + 0j
    for j in range(K):
        power[j] = coef
        coef = coef * (c - j) / (j + 1)
    series = power
    for _ in range(order):
        series = np.convolve(series, log1p)[:K]
    moments = bump_moments(K)
    return series * moments


def derivative_sup(profile, r, samples=20_001):
    """``sup |phi^(r)|`` by dense sampling of the exact derivative on the support."""
    if not 0 <= r <= MAX_DERIVATIVE_ORDER:
        raise SpecError(f"derivative order {r} unsupported (maximum {MAX_DERIVATIVE_ORDER})")
    L = profile.L
    u = np.linspace(1.0 - 1.0 / L, 1.0 + 1.0 / L, samples)
    return float(np.max(np.abs(L ** r * bump_derivative((u - 1.0) * L, r))))
