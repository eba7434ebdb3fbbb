import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import tau_by_expansion
from localvoronoi.errors import DataError, SpecError, ThresholdError
from localvoronoi.feq import FunctionalEquationSpec, GammaFactor, derive_constants
from localvoronoi.oscillation import (
    DetectionParams,
    KernelParams,
    choose_alpha,
    detect_extrema,
    functional,
    gap_scan,
    kernel,
    kernel_average,
    kernel_params,
    kernel_transform,
    kernel_transform_quadrature,
    minimal_window_constant,
    sign_changes,
    t_grid,
    threshold_x0,
    tile_centers,
    window_scan,
)
from localvoronoi.providers import ComplexCoefficientError, builtin_instance, delta_stream, toy_stream
from localvoronoi.weight import WeightProfile

# measured once on the single-term stream over X in {1e3, 1e4}: max gap 0.163 delta/L
SINGLE_TERM_GAP = 0.25
# measured once on zeta2 at X = 1e4 (2000 dual terms): |numeric - analytic| / analytic ~ 0.011
ZETA2_AVERAGE_RATIO = 0.5


def test_kernel_values():
    p = KernelParams(tau=0.7, rho=3.0, theta=0.4)
    assert kernel(p, 1.0) == 0 and kernel(p, -1.0) == 0
    assert kernel(KernelParams(0.0, 5.0, 1.0), 0.0) == 1.0
    assert kernel(KernelParams(1.0, 0.0, 0.0), 0.0) == 2.0
    with pytest.raises(SpecError):
        kernel(p, 1.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-50, 50), st.floats(-7, 7))
def test_kernel_nonnegative_and_mass(tau, rho, theta):
    p = KernelParams(tau, rho, theta)
    t = np.linspace(-1, 1, 10_000)
    assert np.all(kernel(p, t) >= 0)
    assert kernel_transform(p, 0.0).real <= 2 + 1e-14


def test_transform_examples():
    assert kernel_transform(KernelParams(1.0, 0.0, 0.0), 0.0) == pytest.approx(2.0, abs=1e-15)
    assert abs(kernel_transform(KernelParams(0.0, 3.0, 1.0), math.pi)) < 1e-15


def test_transform_near_resonance():
    rng = np.random.default_rng(11)
    tau = rng.uniform(-1, 1, 200)
    rho = rng.uniform(-50, 50, 200)
    theta = rng.uniform(-math.pi, math.pi, 200)
    ups = rho * rng.choice([-1, 1], 200) + rng.normal(scale=1e-6, size=200)
    closed = np.array([kernel_transform(KernelParams(*a), u) for *a, u in zip(tau, rho, theta, ups)])
    assert np.max(np.abs(closed - kernel_transform_quadrature(tau, rho, theta, ups))) < 1e-12


@pytest.fixture(scope="module")
def zeta2():
    inst = builtin_instance("zeta2")
    return inst.spec, derive_constants(inst.spec)


def test_detection_constants(zeta2):
    spec, c = zeta2
    toy = toy_stream([math.pi], [1.0])
    alpha = choose_alpha(c, toy, 0.1, 50)
    assert alpha == pytest.approx(math.sqrt(2 * math.pi ** -0.25 * (1 / (16 * math.pi) * 1.125) / 0.1))
    assert threshold_x0(c, alpha) == pytest.approx((2 * alpha) ** 2)
    p = kernel_params(c, toy, alpha)
    assert p.rho == pytest.approx(math.sqrt(16 * math.pi) * alpha) and p.theta == pytest.approx(0.25 * math.pi)
    T = t_grid(c, toy, 1e4, 64)
    step = 2 * math.pi / math.sqrt(16 * math.pi)
    assert np.allclose(np.round(T / step), T / step)
    assert T[0] >= math.sqrt(2e4) and T[-1] <= math.sqrt(3e4)


@pytest.mark.parametrize("X", [1e3, 1e4])
def test_single_term_average(zeta2, X):
    spec, c = zeta2
    toy = toy_stream([math.pi], [1.0])
    prof = WeightProfile.for_constants(c, 0.1, X)
    params = kernel_params(c, toy, choose_alpha(c, toy, 0.1, 50))
    half_period = math.pi / math.sqrt(16 * math.pi)
    for T in t_grid(c, toy, X, 4):
        ka = kernel_average(spec, c, toy, prof, T, params)
        assert abs(ka.numeric - ka.analytic) <= SINGLE_TERM_GAP * 0.1 / prof.L
        quad = kernel_average(spec, c, toy, prof, T, params, method="quadrature")
        assert abs(quad.numeric - ka.numeric) < 1e-14
        flipped = kernel_average(spec, c, toy, prof, T + half_period, params)
        assert flipped.analytic.real == pytest.approx(-ka.analytic.real, rel=1e-9)
        assert flipped.numeric.real < 0 < ka.numeric.real


def test_average_domain(zeta2):
    spec, c = zeta2
    toy = toy_stream([math.pi], [1.0])
    prof = WeightProfile.for_constants(c, 0.1, 1e3)
    params = kernel_params(c, toy, 2.0)
    with pytest.raises(SpecError):
        kernel_average(spec, c, toy, prof, 3.0, params)
    with pytest.raises(SpecError):
        kernel_average(spec, c, toy, prof, 50.0, params, method="nope")


def test_zeta2_average_regression(zeta2):
    spec, c = zeta2
    stream = builtin_instance("zeta2").stream_factory(2000)
    prof = WeightProfile.for_constants(c, 0.1, 1e4)
    params = kernel_params(c, stream, choose_alpha(c, stream, 0.1, 50))
    T = t_grid(c, stream, 1e4, 1)[0]
    ka = kernel_average(spec, c, stream, prof, T, params)
    assert abs(ka.numeric - ka.analytic) <= ZETA2_AVERAGE_RATIO * abs(ka.analytic)


def test_detect_single_term_hits_extrema(zeta2):
    spec, c = zeta2
    toy = toy_stream([math.pi], [1.0])
    r = detect_extrema(spec, c, toy, 1e4, evaluator="leading")
    assert r.success and r.value_plus > 0 > r.value_minus

    def phase(t):
        return math.sqrt(16 * math.pi * t) + c.kappa * math.pi

    # half an oscillation period in phase is pi
    assert abs(math.remainder(phase(r.x_plus), 2 * math.pi)) < math.pi / 2
    assert abs(math.remainder(phase(r.x_minus) - math.pi, 2 * math.pi)) < math.pi / 2
    assert min(r.x_plus, r.x_minus) < r.crossing < max(r.x_plus, r.x_minus)


def test_detect_reports_failure_without_error():
    spec = FunctionalEquationSpec(factors=[GammaFactor(0.5)])
    c = derive_constants(spec)
    ones = builtin_instance("zeta").stream_factory(20000)
    r = detect_extrema(spec, c, ones, 1e4, DetectionParams(c0=3.0))
    assert not r.success and r.crossing is None and r.value_minus >= 0


def test_detect_threshold(zeta2):
    spec, c = zeta2
    toy = toy_stream([math.pi], [1.0])
    with pytest.raises(ThresholdError):
        detect_extrema(spec, c, toy, 1e3, evaluator="leading", X0=5e3)
    with pytest.raises(SpecError):
        DetectionParams(c0=0)


def test_detection_success_implies_crossing():
    inst = builtin_instance("delta")
    c = derive_constants(inst.spec)
    stream = inst.stream_factory(400)
    r = detect_extrema(inst.spec, c, stream, 1e3)
    assert r.success
    prof = WeightProfile(delta=0.1, X=1e3, A=c.A)
    lo, hi = sorted((r.x_plus, r.x_minus))
    vals = [functional(inst.spec, c, stream, prof, t) for t in np.linspace(lo, hi, 200)]
    assert min(vals) < 0 < max(vals)


def test_sign_changes_examples():
    ones = builtin_instance("zeta").stream_factory(500)
    r = sign_changes(ones, ones.lambdas[-1])
    assert (r.n_star, r.n_plus, r.n_minus) == (0, 500, 0)
    alt = toy_stream(np.arange(1, 101.0), [(-1) ** n for n in range(100)])
    assert sign_changes(alt, 100).n_star == 99
    with pytest.raises(ComplexCoefficientError) as info:
        sign_changes(toy_stream([1.0, 2.0, 3.0], [1, 1 + 1j, 1]), 3)
    assert info.value.index == 1
    with pytest.raises(TypeError):
        sign_changes(toy_stream([1.0, 2.0], [1, 2j]), 3)


def test_sign_changes_skip_zeros():
    s = toy_stream(np.arange(1, 7.0), [1, 0, 1, -1, 0, -1])
    r = sign_changes(s, 6)
    assert (r.n_star, r.n_plus, r.n_minus) == (1, 2, 2)


def test_tau_sign_changes_against_oracle():
    tau = tau_by_expansion(100)
    expected = sum(1 for a, b in zip(tau, tau[1:]) if a * b < 0)  # tau(n) != 0 here
    r = sign_changes(delta_stream(100), 100, by="index")
    assert r.n_star == expected
    assert r.n_plus + r.n_minus == 100 and r.n_star <= r.n_plus + r.n_minus


def test_window_scan_trivial_streams():
    alt = toy_stream(np.arange(1, 1001.0), [(-1) ** n for n in range(1000)])
    rep = window_scan(alt, 10, 990, 1.0, 0.0)
    assert all(w.found for w in rep.windows)
    pos = toy_stream(np.arange(1, 1001.0), np.ones(1000))
    rep = window_scan(pos, 10, 990, 3.0, 0.0)
    assert not any(w.found for w in rep.windows)
    assert rep.max_gap == pytest.approx(980)


def test_window_flags_stable_under_half_spacing_shift():
    stream = delta_stream(3000)
    centers = np.arange(100.0, 2900.0, 7.0)
    # half-width 2.5 puts window edges on half-integers
    base = [w.found for w in window_scan(stream, 50, 2950, 2.5, 0.0, centers=centers).windows]
    for shift in (-0.4, 0.4):
        moved = window_scan(stream, 50, 2950, 2.5, 0.0, centers=centers + shift).windows
        assert [w.found for w in moved] == base


def test_minimal_constant_is_tight():
    stream = delta_stream(20000)
    c_min = minimal_window_constant(stream, 1e3, 1.5e4, 0.5)
    centers = np.arange(1000.0, 15001.0)
    assert all(w.found for w in window_scan(stream, 1e3, 1.5e4, c_min * 1.001, 0.5, centers=centers).windows)
    assert not all(w.found for w in window_scan(stream, 1e3, 1.5e4, c_min * 0.99, 0.5, centers=centers).windows)


def test_tiling_covers_range():
    centers = tile_centers(1e3, 1e5, 0.2, 0.5)
    lo = centers - 0.2 * np.sqrt(centers)
    hi = centers + 0.2 * np.sqrt(centers)
    assert lo[0] == pytest.approx(1e3) and hi[-1] >= 1e5
    assert np.allclose(lo[1:], hi[:-1])
    with pytest.raises(SpecError):
        window_scan(delta_stream(10), 0.5, 5, 1.0, 0.5)


def test_report_serialization():
    rep = window_scan(delta_stream(2000), 100, 1900, 2.0, 0.5)
    doc = json.loads(rep.to_json())
    assert doc["n_star"] == rep.n_star and len(doc["windows"]) == len(rep.windows)
    rows = rep.windows_csv().splitlines()
    assert rows[0] == "center,found,x_plus,x_minus" and len(rows) == len(rep.windows) + 1


def test_gap_scan_closed_forms():
    n = np.arange(1, 2001, dtype=float)
    assert gap_scan(math.sqrt(math.pi) * n, (1, 3000), 0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    lam = 2 * math.pi * n
    assert gap_scan(lam, (lam[9], lam[-1]), 1.0) == pytest.approx(2 * math.pi / math.sqrt(lam[9]), rel=1e-12)
    sq = n ** 2
    assert gap_scan(sq, (sq[4], sq[-1]), 1.0) == pytest.approx(11 / 5, rel=1e-12)
    assert gap_scan(toy_stream(sq, np.ones(2000)), (1, 4e6), 1.0) == pytest.approx(3.0, rel=1e-12)


def test_gap_scan_errors():
    with pytest.raises(DataError):
        gap_scan(np.array([1.0, 3.0, 2.0]), (0, 5), 1.0)
    with pytest.raises(SpecError):
        gap_scan(np.array([1.0, 3.0]), (10, 20), 1.0)
