"""Functional-equation data and the constants derived from it.

A Dirichlet series ``phi(s) = sum a_n lambda_n^{-s}`` is paired with a dual
``psi(s) = sum b_n mu_n^{-s}`` through

    Delta(s) phi(s) = omega * DeltaTilde(1 - s) psi(1 - s),

where ``Delta(s) = prod Gamma(alpha_v s + beta_v)`` and ``DeltaTilde`` uses
``betaTilde_v``.  Everything downstream is expressed through the handful of
constants computed by :func:`derive_constants`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SpecError

COMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class GammaFactor:
    alpha: float
    beta: complex = 0j
    beta_tilde: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "beta_tilde", complex(self.beta_tilde))


@dataclass(frozen=True)
class PoleSpec:
    """Pole of ``phi`` at ``location`` with Laurent principal part.

    ``principal_part[0]`` multiplies ``(s - location)^{-order}`` and
    ``principal_part[-1]`` multiplies ``(s - location)^{-1}``.
    """

    location: complex
    order: int
    principal_part: tuple

    def __post_init__(self):
        object.__setattr__(self, "location", complex(self.location))
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "principal_part", tuple(complex(c) for c in self.principal_part))

    def laurent(self, m):
        """Coefficient of ``(s - location)^{-m}`` for ``1 <= m <= order``."""
        return self.principal_part[self.order - m]


@dataclass(frozen=True)
class FunctionalEquationSpec:
    factors: tuple
    omega: complex = 1 + 0j
    sigma_star: float = 1.1
    pole_radius: float = 2.0
    poles: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "poles", tuple(self.poles))
        object.__setattr__(self, "omega", complex(self.omega))
        object.__setattr__(self, "sigma_star", float(self.sigma_star))
        object.__setattr__(self, "pole_radius", float(self.pole_radius))

    @property
    def degree(self):
        """The degree ``2A``."""
        return 2.0 * sum(f.alpha for f in self.factors)

    def is_self_dual(self):
        def key(z):
            return (round(z.real, 12), round(z.imag, 12))

        b = sorted(key(f.beta) for f in self.factors)
        bt = sorted(key(f.beta_tilde) for f in self.factors)
        return b == bt

    def to_dict(self):
        return {
            "factors": [
                {
                    "alpha": f.alpha,
                    "betaRe": f.beta.real,
                    "betaIm": f.beta.imag,
                    "betaTildeRe": f.beta_tilde.real,
                    "betaTildeIm": f.beta_tilde.imag,
                }
                for f in self.factors
            ],
            "omegaRe": self.omega.real,
            "omegaIm": self.omega.imag,
            "sigmaStar": self.sigma_star,
            "poleRadius": self.pole_radius,
            "poles": [
                {
                    "locRe": p.location.real,
                    "locIm": p.location.imag,
                    "order": p.order,
                    "principalPart": [[c.real, c.imag] for c in p.principal_part],
                }
                for p in self.poles
            ],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            factors = [
                GammaFactor(
                    f["alpha"],
                    complex(f.get("betaRe", 0.0), f.get("betaIm", 0.0)),
                    complex(f.get("betaTildeRe", 0.0), f.get("betaTildeIm", 0.0)),
                )
                for f in data["factors"]
            ]
            poles = [
                PoleSpec(
                    complex(p["locRe"], p.get("locIm", 0.0)),
                    p["order"],
                    [complex(re, im) for re, im in p["principalPart"]],
                )
                for p in data.get("poles", [])
            ]
            return cls(
                factors=factors,
                omega=complex(data.get("omegaRe", 1.0), data.get("omegaIm", 0.0)),
                sigma_star=data["sigmaStar"],
                pole_radius=data["poleRadius"],
                poles=poles,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed functional-equation spec: {exc!r}") from exc

    def to_json(self, path=None, indent=2):
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source):
        """Load from a path or from a JSON string."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise SpecError(f"cannot read spec file {source}: {exc}") from exc
        else:
            text = source
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class DerivedConstants:
    A: float
    B: complex
    Btilde: complex
    h: float
    a: complex
    k: complex
    e0: complex
    d: int

    @property
    def theta(self):
        """``vartheta`` with ``a = -vartheta + i xi``."""
        return -self.a.real

    @property
    def xi(self):
        return self.a.imag

    @property
    def kappa(self):
        return self.k.real

    @property
    def eta(self):
        return self.k.imag

    @property
    def degree(self):
        return 2.0 * self.A

    def as_dict(self):
        return {
            "A": self.A,
            "B": [self.B.real, self.B.imag],
            "Btilde": [self.Btilde.real, self.Btilde.imag],
            "h": self.h,
            "a": [self.a.real, self.a.imag],
            "k": [self.k.real, self.k.imag],
            "e0": [self.e0.real, self.e0.imag],
            "d": self.d,
            "theta": self.theta,
            "xi": self.xi,
            "kappa": self.kappa,
            "eta": self.eta,
        }


def validate_spec(spec):
    """List every violated invariant of ``spec``; an empty list means valid."""
    problems = []
    if not spec.factors:
        problems.append("empty factor list: at least one gamma factor is required")
    for i, f in enumerate(spec.factors):
        if not (f.alpha > 0 and math.isfinite(f.alpha)):
            problems.append(f"factor {i}: alpha must be positive, got {f.alpha}")
    if abs(abs(spec.omega) - 1.0) > COMPLEX_TOL:
        problems.append(f"root number modulus must be 1, got |omega| = {abs(spec.omega):.15g}")
    if not spec.sigma_star > 0:
        problems.append(f"sigmaStar must be positive, got {spec.sigma_star}")
    if not spec.pole_radius > 0:
        problems.append(f"poleRadius must be positive, got {spec.pole_radius}")
    for i, p in enumerate(spec.poles):
        if abs(p.location) >= spec.pole_radius:
            problems.append(
                f"pole outside disk: pole {i} at {p.location} has modulus >= poleRadius {spec.pole_radius}"
            )
        if p.order < 1:
            problems.append(f"pole {i}: order must be a positive integer, got {p.order}")
        if len(p.principal_part) != p.order:
            problems.append(
                f"pole {i}: principal part length {len(p.principal_part)} does not match order {p.order}"
            )
        elif p.order >= 1 and p.principal_part[0] == 0:
            problems.append(f"pole {i}: leading principal-part coefficient is zero")
    return problems


def derive_constants(spec):
    if not spec.factors:
        raise SpecError("empty factor list")
    alpha = np.array([f.alpha for f in spec.factors], dtype=float)
    if np.any(~(alpha > 0)):
        raise SpecError("every alpha must be strictly positive")
    beta = np.array([f.beta for f in spec.factors], dtype=complex)
    beta_t = np.array([f.beta_tilde for f in spec.factors], dtype=complex)
    d = len(spec.factors)

    A = float(math.fsum(alpha))
    B = complex(beta.sum())
    Bt = complex(beta_t.sum())
    ratio = 2.0 * A / alpha
    h = float(np.exp(np.sum(2.0 * alpha * np.log(ratio))))
    a = 1.0 / (4.0 * A) - 0.5 - (B - Bt) / (2.0 * A)
    k = d / 2.0 - 0.25 - (A + B + Bt) / 2.0
    e0 = math.sqrt(2.0 / math.pi) * complex(np.exp(np.sum((alpha + beta - beta_t) * np.log(ratio))))
    return DerivedConstants(A=A, B=B, Btilde=Bt, h=h, a=complex(a), k=complex(k), e0=e0, d=d)


def sign_scalar(consts, b1, omega=1.0):
    """``varsigma = omega * e0 * b1 / |b1|``, the phase normaliser of the detection functional."""
    b1 = complex(b1)
    if b1 == 0:
        raise SpecError("b1 must be nonzero")
    return complex(omega) * consts.e0 * b1 / abs(b1)
