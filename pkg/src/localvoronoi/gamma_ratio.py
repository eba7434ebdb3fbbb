"""The gamma quotient ``DeltaTilde(s) / Delta(1 - s)`` and its expansion

    DeltaTilde(s)/Delta(1-s) ~ sum_j e_j F_j(s),
    F_j(s) = h^{-s} Gamma(2A(s+a) - j) cos(pi A (s+a) + k pi).

Everything is evaluated in log space so that ``|Im s|`` up to ``1e4`` does
not overflow.  ``F_j / F_0 = 1 / prod_{l=1}^{j} (2A(s+a) - l)`` exactly, which
is what the coefficient fit uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .errors import FitError, SingularityError, SpecError

POLE_DISTANCE = 1e-8
MAX_J = 4
FIT_T = (100.0, 200.0, 400.0, 800.0, 1600.0)
FIT_TOLERANCE = 1e-4


def _check_gamma_args(z, label):
    z = np.asarray(z)
    nonpos = (z.real <= POLE_DISTANCE) & (np.abs(z.imag) < POLE_DISTANCE)
    near = nonpos & (np.abs(z.real - np.round(z.real)) < POLE_DISTANCE)
    if np.any(near):
        raise SingularityError(f"gamma pole too close in {label}", factor=label)


def log_gamma_ratio(spec, s):
    s = np.asarray(s, dtype=complex)
    total = np.zeros_like(s)
    for i, f in enumerate(spec.factors):
        top = f.alpha * s + f.beta_tilde
        bottom = f.alpha * (1.0 - s) + f.beta
        _check_gamma_args(top, f"DeltaTilde factor {i}")
        _check_gamma_args(bottom, f"Delta(1-s) factor {i}")
        total = total + loggamma(top) - loggamma(bottom)
    return total


def gamma_ratio(spec, consts, s):
    """``DeltaTilde(s) / Delta(1 - s)``."""
    out = np.exp(log_gamma_ratio(spec, s))
    return out if out.ndim else complex(out)


def _log_cos(w):
    w = np.asarray(w, dtype=complex)
    upper = w.imag >= 0
    sgn = np.where(upper, 1.0, -1.0)
    with np.errstate(divide="ignore"):
        return -1j * sgn * w - math.log(2.0) + np.log1p(np.exp(2j * sgn * w))


def log_f_term(consts, j, s):
    s = np.asarray(s, dtype=complex)
    z = 2.0 * consts.A * (s + consts.a) - j
    _check_gamma_args(z, f"Gamma(2A(s+a)-{j})")
    w = math.pi * consts.A * (s + consts.a) + consts.k * math.pi
    return -s * math.log(consts.h) + loggamma(z) + _log_cos(w)


def f_term(consts, j, s):
    """``F_j(s)``; exact zeros of the cosine give 0."""
    if j < 0:
        raise SpecError("j must be non-negative")
    out = np.exp(log_f_term(consts, j, s))
    return out if out.ndim else complex(out)


def _falling(consts, s, j):
    z = 2.0 * consts.A * (np.asarray(s, dtype=complex) + consts.a)
    out = np.ones_like(z)
    for ell in range(1, j + 1):
        out = out * (z - ell)
    return out


def ratio_over_f0(spec, consts, s):
    """``(DeltaTilde(s)/Delta(1-s)) / F_0(s)``."""
    return np.exp(log_gamma_ratio(spec, s) - log_f_term(consts, 0, s))


@dataclass(frozen=True)
class ExpansionCoefficients:
    J: int
    e: tuple
    fit_diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.e) != self.J:
            raise SpecError("coefficient count must equal J")


def fit_line_sigma(consts):
    return consts.theta + 1.0 / (4.0 * consts.A)


def _richardson(values):
    table = [np.asarray(values, dtype=complex)]
    for m in range(1, len(values)):
        prev = table[-1]
        table.append((2.0 ** m * prev[1:] - prev[:-1]) / (2.0 ** m - 1.0))
    return table


def expansion_coeffs(spec, consts, J):
    """``e_0`` in closed form, ``e_1 .. e_{J-1}`` by Richardson extrapolation
    along ``Re s = vartheta + 1/(4A)``, ``t = 100, 200, ..., 1600``."""
    if not 1 <= J <= MAX_J:
        raise SpecError(f"J must lie in [1, {MAX_J}], got {J}")
    sigma0 = fit_line_sigma(consts)
    t = np.array(FIT_T)
    s = sigma0 + 1j * t
    ratio = ratio_over_f0(spec, consts, s)
    e = [consts.e0]
    diag = {"sigma0": sigma0, "t": list(FIT_T), "estimates": {}, "slopes": {}}
    for j in range(1, J):
        acc = ratio.copy()
        for i in range(j):
            acc = acc - e[i] / _falling(consts, s, i)
        table = _richardson(acc * _falling(consts, s, j))
        best = complex(table[-1][0])
        previous = complex(table[-2][-1])
        scale = max(abs(best), abs(consts.e0))
        spread = abs(best - previous) / scale
        diag["estimates"][j] = {"best": [best.real, best.imag], "previous": [previous.real, previous.imag],
                                "relative_spread": spread}
        if spread > FIT_TOLERANCE:
            raise FitError(f"extrapolation for e_{j} did not settle (spread {spread:.2e})", diagnostics=diag)
        e.append(best)
    coeffs = ExpansionCoefficients(J=J, e=tuple(e), fit_diagnostics=diag)
    ts = np.array(FIT_T[1:])
    for jj in range(1, J + 1):
        res = ratio_residual(spec, consts, coeffs, sigma0 + 1j * ts, J=jj)
        with np.errstate(divide="ignore"):
            slope = np.polyfit(np.log(ts), np.log(res), 1)[0] if np.all(res > 0) else float("nan")
        diag["slopes"][jj] = float(slope)
    return coeffs


def ratio_residual(spec, consts, coeffs, s, J=None):
    """``|DeltaTilde(s)/Delta(1-s) - sum_{j<J} e_j F_j(s)| / |F_0(s)|``."""
    J = coeffs.J if J is None else J
    if J > coeffs.J:
        raise SpecError(f"J={J} exceeds fitted coefficient count {coeffs.J}")
    s = np.asarray(s, dtype=complex)
    acc = ratio_over_f0(spec, consts, s)
    for j in range(J):
        acc = acc - coeffs.e[j] / _falling(consts, s, j)
    out = np.abs(acc)
    return out if out.ndim else float(out)
