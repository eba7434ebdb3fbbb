"""Coefficient streams: zeta, zeta squared, normalized Ramanujan tau and files.

A stream carries the ordered pairs ``(lambda_n, a_n)`` and the dual pairs
``(mu_n, b_n)``.  Builtin streams also carry a coefficient majorant
``m_n >= |b_n|`` with a closed-form Dirichlet series, which is what lets the
truncation bounds account for terms beyond the materialized range.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import gmpy2
import numpy as np
from scipy.special import bernoulli, loggamma, zeta as real_zeta

from .errors import DataError, SpecError
from .feq import FunctionalEquationSpec, GammaFactor, PoleSpec

EULER_GAMMA = 0.5772156649015329
TAU_LIMIT = 10 ** 6
IMAG_TOL = 1e-12
_SLOT_BITS = 192

# exponent toward the Ramanujan bound |lambda(n)| <= n^theta_m d_m(n) for GL_m data
THETA_TABLE = {2: 7 / 64, 3: 5 / 14, 4: 9 / 22}


def theta_m(m):
    if m < 2:
        raise SpecError("m must be at least 2")
    return THETA_TABLE.get(m, 0.5 - 1.0 / (m * m + 1))


class ComplexCoefficientError(DataError, TypeError):
    """A real-valued routine met a materially complex coefficient."""


@dataclass(frozen=True, eq=False)
class CoefficientStream:
    kind: str
    lambdas: np.ndarray
    coeffs: np.ndarray
    dual_lambdas: Optional[np.ndarray] = None
    dual_coeffs: Optional[np.ndarray] = None
    degree: Optional[float] = None
    dual_majorant: Optional[np.ndarray] = None
    majorant_total: Optional[Callable[[float], float]] = None
    complete: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.ascontiguousarray(self.lambdas, dtype=float)
        a = np.ascontiguousarray(self.coeffs, dtype=complex)
        if lam.ndim != 1 or lam.shape != a.shape:
            raise DataError("lambdas and coefficients must be 1-d arrays of equal length")
        self_dual = self.dual_lambdas is None
        mu = lam if self_dual else np.ascontiguousarray(self.dual_lambdas, dtype=float)
        b = a if self_dual else np.ascontiguousarray(self.dual_coeffs, dtype=complex)
        if mu.shape != b.shape:
            raise DataError("dual lambdas and coefficients must have equal length")
        for name, arr in (("lambda", lam), ("mu", mu)):
            _check_monotone(arr, name)
        if a.size and a[0] == 0:
            raise DataError("first coefficient a_1 must be nonzero", index=0)
        if b.size and b[0] == 0:
            raise DataError("first dual coefficient b_1 must be nonzero", index=0)
        for arr in (lam, a, mu, b):
            arr.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "dual_lambdas", mu)
        object.__setattr__(self, "dual_coeffs", b)
        if self.dual_majorant is not None:
            m = np.ascontiguousarray(self.dual_majorant, dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, "dual_majorant", m)

    def __len__(self):
        return self.lambdas.size

    @property
    def self_dual(self):
        return self.dual_lambdas is self.lambdas and self.dual_coeffs is self.coeffs

    @property
    def mu1(self):
        return float(self.dual_lambdas[0])

    @property
    def b1(self):
        return complex(self.dual_coeffs[0])

    def dual_stream(self):
        return CoefficientStream(
            kind=self.kind,
            lambdas=self.dual_lambdas,
            coeffs=self.dual_coeffs,
            degree=self.degree,
            complete=self.complete,
        )

    def truncated(self, count):
        """First ``count`` terms of both sequences."""
        return CoefficientStream(
            kind=self.kind,
            lambdas=self.lambdas[:count],
            coeffs=self.coeffs[:count],
            dual_lambdas=None if self.self_dual else self.dual_lambdas[:count],
            dual_coeffs=None if self.self_dual else self.dual_coeffs[:count],
            degree=self.degree,
            complete=True,
            metadata=dict(self.metadata),
        )

    def dual_tail_majorant(self, sigma, count):
        """Upper bound for ``sum_{n > count} |b_n| mu_n^-sigma`` (``None`` when unknown)."""
        if self.majorant_total is None or self.dual_majorant is None:
            return None
        m = self.dual_majorant[:count]
        mu = self.dual_lambdas[:count]
        total = float(self.majorant_total(sigma))
        head = float(np.sum(m * mu ** (-sigma)))
        return max(total - head, 0.0) + 8 * np.finfo(float).eps * total

    def real_coefficients(self):
        """Real parts, refusing materially complex entries."""
        a = self.coeffs
        bad = np.abs(a.imag) >= IMAG_TOL * np.maximum(np.abs(a), 1e-300)
        bad &= a.imag != 0
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ComplexCoefficientError(f"coefficient {i + 1} is complex: {a[i]!r}", index=i)
        return a.real


def _check_monotone(arr, name, line_offset=None):
    if arr.size and not np.all(arr > 0):
        i = int(np.flatnonzero(~(arr > 0))[0])
        raise DataError(f"{name}_{i + 1} must be positive", index=i)
    steps = np.diff(arr)
    if np.any(~(steps > 0)):
        i = int(np.flatnonzero(~(steps > 0))[0]) + 1
        line = None if line_offset is None else i + line_offset
        raise DataError(f"{name} not strictly increasing at index {i + 1}", line=line, index=i)


def divisor_counts(limit):
    """``d(n)`` for ``1 <= n <= limit`` by sieving multiples."""
    if limit < 1:
        raise SpecError("limit must be at least 1")
    d = np.zeros(limit + 1, dtype=np.int64)
    for k in range(1, limit + 1):
        d[k::k] += 1
    return d[1:]


def zeta_stream(limit):
    if limit < 1:
        raise SpecError("limit must be at least 1")
    n = np.arange(1, limit + 1, dtype=float)
    return CoefficientStream(
        kind="Zeta",
        lambdas=math.sqrt(math.pi) * n,
        coeffs=np.ones(limit, dtype=complex),
        degree=1.0,
        dual_majorant=np.ones(limit),
        majorant_total=lambda s: math.pi ** (-s / 2) * real_zeta(s),
    )


def zeta_squared_stream(limit):
    d = divisor_counts(limit).astype(float)
    n = np.arange(1, limit + 1, dtype=float)
    return CoefficientStream(
        kind="ZetaSquared",
        lambdas=math.pi * n,
        coeffs=d.astype(complex),
        degree=2.0,
        dual_majorant=d,
        majorant_total=lambda s: math.pi ** (-s) * real_zeta(s) ** 2,
    )


def _pentagonal_signs(length):
    """Coefficients of ``prod (1 - q^k)`` below ``q^length`` as sparse (index, sign)."""
    terms = [(0, 1)]
    k = 1
    while True:
        added = False
        sign = -1 if k % 2 else 1
        for e in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if e < length:
                terms.append((e, sign))
                added = True
        if not added:
            return sorted(terms)
        k += 1


def _pack_sparse(terms, length, slot_bytes):
    pos = bytearray(length * slot_bytes)
    neg = bytearray(length * slot_bytes)
    for e, sgn in terms:
        (pos if sgn > 0 else neg)[e * slot_bytes] = 1
    return gmpy2.mpz(int.from_bytes(pos, "little")) - gmpy2.mpz(int.from_bytes(neg, "little"))


class _Packed:
    """A truncated integer power series packed as ``sum c_i 2^(bits i)``.

    Slots hold signed values; the offset trick keeps truncation and decoding
    borrow-free as long as every kept coefficient fits in ``bits - 1`` bits.
    """

    def __init__(self, value, length, bits):
        self.value = value
        self.length = length
        self.bits = bits

    def _offset(self):
        half = gmpy2.mpz(1) << (self.bits - 1)
        ones = ((gmpy2.mpz(1) << (self.bits * self.length)) - 1) // ((gmpy2.mpz(1) << self.bits) - 1)
        return half * ones

    def __mul__(self, other):
        prod = self.value * other.value
        off = self._offset()
        mask = (gmpy2.mpz(1) << (self.bits * self.length)) - 1
        return _Packed(((prod + off) & mask) - off, self.length, self.bits)

    def coefficients(self):
        off = self._offset()
        raw = int(self.value + off).to_bytes(self.length * self.bits // 8, "little")
        width = self.bits // 8
        half = 1 << (self.bits - 1)
        return [int.from_bytes(raw[i * width:(i + 1) * width], "little") - half for i in range(self.length)]


def tau_series(limit):
    """Exact ``tau(1) .. tau(limit)`` from ``q prod (1 - q^k)^24``.

    The Euler product is sparse (pentagonal exponents); its 24th power is
    formed as ``E^16 E^8`` by repeated squaring, each product done exactly
    with big-integer Kronecker substitution.
    """
    if limit < 1:
        raise SpecError("limit must be at least 1")
    if limit > TAU_LIMIT:
        raise MemoryError(f"tau_series limit {limit} exceeds ceiling {TAU_LIMIT}")
    length = limit  # tau(n) is the q^(n-1) coefficient of E^24
    e1 = _Packed(_pack_sparse(_pentagonal_signs(length), length, _SLOT_BITS // 8), length, _SLOT_BITS)
    e2 = e1 * e1
    e4 = e2 * e2
    e8 = e4 * e4
    e16 = e8 * e8
    return (e16 * e8).coefficients()


def delta_stream(limit):
    """Normalized ``a_n = tau(n) / n^(11/2)`` at ``lambda_n = 2 pi n``."""
    taus = tau_series(limit)
    n = np.arange(1, limit + 1, dtype=float)
    a = np.array([float(t) for t in taus]) / n ** 5.5
    return CoefficientStream(
        kind="RamanujanDelta",
        lambdas=2.0 * math.pi * n,
        coeffs=a.astype(complex),
        degree=2.0,
        dual_majorant=divisor_counts(limit).astype(float),
        majorant_total=lambda s: (2.0 * math.pi) ** (-s) * real_zeta(s) ** 2,
    )


def toy_stream(lambdas, coeffs, dual_lambdas=None, dual_coeffs=None, degree=None):
    """Finite stream from explicit arrays (treated as complete)."""
    return CoefficientStream(
        kind="Toy",
        lambdas=np.asarray(lambdas, dtype=float),
        coeffs=np.asarray(coeffs, dtype=complex),
        dual_lambdas=None if dual_lambdas is None else np.asarray(dual_lambdas, dtype=float),
        dual_coeffs=None if dual_coeffs is None else np.asarray(dual_coeffs, dtype=complex),
        degree=degree,
        complete=True,
    )


def check_ramanujan_bound(stream, m, d_m=None):
    """Indices (0-based) where ``|a_n| > d_m(n) n^theta_m (1 + 1e-9)``; warns if any.

    Assumes ``lambda_n`` is proportional to ``n``; ``d_m`` defaults to the
    ``m``-fold divisor function.
    """
    count = len(stream)
    if d_m is None:
        d_m = np.ones(count, dtype=np.int64)
        for _ in range(m - 1):
            nxt = np.zeros(count, dtype=np.int64)
            for k in range(1, count + 1):
                nxt[k - 1::k] += d_m[k - 1]  # d_{j+1}(n) = sum_{k | n} d_j(k)
            d_m = nxt
    n = np.arange(1, count + 1, dtype=float)
    bound = np.asarray(d_m, dtype=float) * n ** theta_m(m) * (1 + 1e-9)
    bad = np.flatnonzero(np.abs(stream.coeffs) > bound)
    if bad.size:
        warnings.warn(f"{bad.size} coefficients exceed the GL_{m} reference bound (first at n={bad[0] + 1})",
                      stacklevel=2)
    return bad.tolist()


# ---------------------------------------------------------------- file I/O

def _fmt(x):
    return repr(float(x))


def export_stream(stream, path=None, fmt="csv"):
    """Write ``stream`` as CSV or JSON; returns the text."""
    fmt = fmt.lower()
    lam, a = stream.lambdas, stream.coeffs
    dual = not stream.self_dual
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "aRe", "aIm"] + (["mu", "bRe", "bIm"] if dual else []))
        rows = max(len(lam), len(stream.dual_lambdas) if dual else 0)
        for i in range(rows):
            row = [_fmt(lam[i]), _fmt(a[i].real), _fmt(a[i].imag)] if i < len(lam) else ["", "", ""]
            if dual:
                mu, b = stream.dual_lambdas, stream.dual_coeffs
                row += [_fmt(mu[i]), _fmt(b[i].real), _fmt(b[i].imag)] if i < len(mu) else ["", "", ""]
            w.writerow(row)
        text = buf.getvalue()
    elif fmt == "json":
        doc = {
            "points": [{"lambda": float(x), "a": [float(c.real), float(c.imag)]} for x, c in zip(lam, a)],
            "metadata": {"selfDual": not dual, "degree2A": stream.degree, "kind": stream.kind},
        }
        if dual:
            doc["dual"] = [
                {"mu": float(x), "b": [float(c.real), float(c.imag)]}
                for x, c in zip(stream.dual_lambdas, stream.dual_coeffs)
            ]
        text = json.dumps(doc)
    else:
        raise SpecError(f"unknown stream format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _parse_float(cell, line, what):
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"line {line}: cannot parse {what} {cell!r}", line=line) from None


def _ingest_csv(text):
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty file", line=1) from None
    if header[:3] != ["lambda", "aRe", "aIm"] or header[3:] not in ([], ["mu", "bRe", "bIm"]):
        raise DataError(f"line 1: unexpected header {header}", line=1)
    has_dual = len(header) == 6
    lam, a, mu, b = [], [], [], []
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}", line=line)
        if row[0].strip():
            lam.append(_parse_float(row[0], line, "lambda"))
            a.append(complex(_parse_float(row[1], line, "aRe"), _parse_float(row[2], line, "aIm")))
            if len(lam) > 1 and not lam[-1] > lam[-2]:
                raise DataError(f"line {line}: lambda {lam[-1]!r} not above previous {lam[-2]!r}", line=line)
        if has_dual and row[3].strip():
            mu.append(_parse_float(row[3], line, "mu"))
            b.append(complex(_parse_float(row[4], line, "bRe"), _parse_float(row[5], line, "bIm")))
            if len(mu) > 1 and not mu[-1] > mu[-2]:
                raise DataError(f"line {line}: mu {mu[-1]!r} not above previous {mu[-2]!r}", line=line)
    return lam, a, (mu, b) if has_dual else None, {}


def _ingest_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"line {exc.lineno}: invalid JSON ({exc.msg})", line=exc.lineno) from exc
    points = doc if isinstance(doc, list) else doc.get("points")
    if points is None:
        raise DataError("JSON stream needs a 'points' array")
    meta = {} if isinstance(doc, list) else doc.get("metadata", {})

    def read(items, key, ckey):
        xs, cs = [], []
        for i, item in enumerate(items):
            try:
                xs.append(float(item[key]))
                re, im = item[ckey]
                cs.append(complex(float(re), float(im)))
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"entry {i}: malformed ({exc!r})", index=i) from None
            if len(xs) > 1 and not xs[-1] > xs[-2]:
                raise DataError(f"entry {i}: {key} {xs[-1]!r} not above previous {xs[-2]!r}", index=i)
        return xs, cs

    lam, a = read(points, "lambda", "a")
    dual = read(doc["dual"], "mu", "b") if isinstance(doc, dict) and doc.get("dual") else None
    return lam, a, dual, meta


def ingest_stream(path, fmt=None):
    """Read a coefficient file; the dual defaults to the stream itself."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    fmt = (fmt or p.suffix.lstrip(".") or "csv").lower()
    if fmt == "csv":
        lam, a, dual, meta = _ingest_csv(text)
    elif fmt == "json":
        lam, a, dual, meta = _ingest_json(text)
    else:
        raise SpecError(f"unknown stream format {fmt!r}")
    if not lam:
        raise DataError("stream has no points")
    self_dual = dual is None or meta.get("selfDual") is True
    return CoefficientStream(
        kind="FromFile",
        lambdas=np.array(lam),
        coeffs=np.array(a, dtype=complex),
        dual_lambdas=None if self_dual else np.array(dual[0]),
        dual_coeffs=None if self_dual else np.array(dual[1], dtype=complex),
        degree=meta.get("degree2A"),
        complete=True,
        metadata={"source": str(p)},
    )


# ---------------------------------------------------------- zeta(s) anywhere

_EM_TERMS = 12
_B2K = bernoulli(2 * _EM_TERMS)[2::2]


def _zeta_em_right(s, n_head):
    # the remainder shrinks like (|s| / 2 pi N)^(2K), so keep N above |s|
    N = max(n_head, int(np.max(np.abs(s), initial=0.0)) + 1)
    n = np.arange(1, N, dtype=float)
    head = np.exp(-np.multiply.outer(s, np.log(n))).sum(axis=-1)
    total = head + N ** (1 - s) / (s - 1) + 0.5 * N ** (-s)
    rising = s.copy()  # s (s+1) ... (s+2k-2)
    for kk in range(1, _EM_TERMS + 1):
        total = total + _B2K[kk - 1] / math.factorial(2 * kk) * rising * N ** (-s - 2 * kk + 1)
        rising = rising * (s + 2 * kk - 1) * (s + 2 * kk)
    return total


def zeta_em(s, n_head=20):
    """Riemann zeta at complex ``s != 1``: Euler-Maclaurin, reflected for ``Re s < -1/2``."""
    s = np.asarray(s, dtype=complex)
    left = s.real < -0.5  # keeps 1 - s clear of the pole
    right = np.where(left, 1 - s, s)
    total = _zeta_em_right(right, n_head)
    if np.any(left):
        sl = s[left]
        # zeta(s) = 2 (2 pi)^(s-1) sin(pi s / 2) Gamma(1 - s) zeta(1 - s)
        factor = 2 * np.exp((sl - 1) * math.log(2 * math.pi) + loggamma(1 - sl)) * np.sin(np.pi * sl / 2)
        total = np.array(total, dtype=complex)
        total[left] = factor * total[left]
    return total if total.ndim else complex(total)


# ------------------------------------------------------------ builtin bundle

@dataclass(frozen=True)
class BuiltinInstance:
    name: str
    spec: FunctionalEquationSpec
    stream_factory: Callable[[int], CoefficientStream]
    phi: Optional[Callable]


def _zeta_phi(s):
    return np.pi ** (-np.asarray(s) / 2) * zeta_em(s)


def _zeta2_phi(s):
    return np.pi ** (-np.asarray(s)) * zeta_em(s) ** 2


def builtin_instance(name):
    """``zeta``, ``zeta2`` or ``delta``: spec, stream factory and ``phi(s)``."""
    if name == "zeta":
        spec = FunctionalEquationSpec(
            factors=[GammaFactor(0.5)],
            sigma_star=1.1,
            pole_radius=2.0,
            poles=[PoleSpec(1.0, 1, [1.0 / math.sqrt(math.pi)])],
        )
        return BuiltinInstance(name, spec, zeta_stream, _zeta_phi)
    if name == "zeta2":
        spec = FunctionalEquationSpec(
            factors=[GammaFactor(0.5), GammaFactor(0.5)],
            sigma_star=1.1,
            pole_radius=2.0,
            poles=[PoleSpec(1.0, 2, [1.0 / math.pi, (2 * EULER_GAMMA - math.log(math.pi)) / math.pi])],
        )
        return BuiltinInstance(name, spec, zeta_squared_stream, _zeta2_phi)
    if name == "delta":
        spec = FunctionalEquationSpec(
            factors=[GammaFactor(1.0, 5.5, 5.5)],
            sigma_star=1.6,
            pole_radius=2.0,
        )
        return BuiltinInstance(name, spec, delta_stream, None)
    raise SpecError(f"unknown instance {name!r} (expected zeta, zeta2 or delta)")


BUILTIN_NAMES = ("zeta", "zeta2", "delta")
