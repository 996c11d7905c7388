import json

import numpy as np
import pytest

from periodic_dividends.barrier import b_star
from periodic_dividends.errors import DomainError
from periodic_dividends.expsum import ExpPoly, zero_below
from periodic_dividends.levy import PRESETS, LevyModel, JumpTerm, preset
from periodic_dividends.scale import bases
from periodic_dividends.value import value_function
from periodic_dividends.verify import (GENERATOR_TOL, generator_apply, generator_identity_suite,
                                       hjb_check, smoothness_jump)

CASES = list(PRESETS)


def test_generator_on_constant():
    spec = preset("case1")
    one = zero_below(ExpPoly(poly=[1.0]), ExpPoly(poly=[1.0]))
    assert generator_apply(spec.model, spec.q, one, 1.0) == pytest.approx(-spec.q, abs=1e-15)
    assert generator_apply(spec.model, spec.q, lambda x: 1.0, 1.0) == pytest.approx(-spec.q, abs=1e-9)


def test_generator_rejects_nonpositive_x():
    spec = preset("case1p")
    with pytest.raises(DomainError):
        generator_apply(spec.model, spec.q, lambda x: 1.0, 0.0)


@pytest.mark.parametrize("name", CASES)
def test_scale_functions_are_harmonic_at_one(name):
    spec = preset(name)
    bq, bqr = bases(spec)
    assert abs(generator_apply(spec.model, spec.q, bq.piecewise("W"), 1.0)) <= 1e-7 * (1 + bq.W(1.0))
    got = generator_apply(spec.model, spec.q, bqr.piecewise("W"), 1.0)
    assert got == pytest.approx(spec.r * bqr.W(1.0), rel=1e-9)


def test_generator_closed_form_matches_quadrature_path():
    m = LevyModel(c=0.8, sigma=0.3, jumps=(JumpTerm(1.0, 2.0), JumpTerm(0.4, 0.7)))
    spec = preset("case1").__class__(m, 0.05, 0.5)
    bq, _ = bases(spec)
    w = bq.piecewise("W")
    for x in (0.3, 1.0, 4.0):
        closed = generator_apply(m, 0.05, w, x)
        numeric = generator_apply(m, 0.05, lambda y: w(y), x,
                                  df=lambda y: w(y, 1), d2f=lambda y: w(y, 2))
        assert closed == pytest.approx(numeric, abs=1e-9 * (1 + w(x)))


@pytest.mark.parametrize("name", CASES)
def test_identity_suite(name):
    res = generator_identity_suite(preset(name))
    assert set(res) == {"W_q", "Z_q", "W_qr", "Wbar_qr", "Wbarbar_qr"}
    assert max(res.values()) <= 1e-7


def test_identity_suite_rejects_negative_grid():
    with pytest.raises(DomainError):
        generator_identity_suite(preset("case1p"), grid=(-1.0, 1.0))


@pytest.mark.parametrize("name", CASES)
def test_hjb_check_passes_at_optimum(name):
    report = hjb_check(preset(name))
    assert report.passed, [d for d in report.details if not d["ok"]][:3]
    assert len(report.grid) == 64
    assert report.max_generator_residual <= GENERATOR_TOL
    assert report.max_hjb_slack <= 1e-6
    assert max(report.argmax_errors) <= 1e-4
    assert report.slope_violations == []


def test_case1p_pointwise_statements():
    spec = preset("case1p")
    bs = b_star(spec).b_star
    v = value_function(spec, bs)
    x = bs / 2
    assert abs(generator_apply(spec.model, spec.q, v.piecewise, x)) <= 1e-6 * (1 + v(x))
    x = bs + 2
    eq = generator_apply(spec.model, spec.q, v.piecewise, x) + spec.r * ((x - bs) + v(bs) - v(x))
    assert abs(eq) <= 1e-6
    report = hjb_check(spec, grid=[bs / 2, bs + 2])
    assert [d["argmax_expected"] for d in report.details] == pytest.approx([0.0, 2.0])
    assert report.passed


def test_case2p_zero_barrier_branch():
    spec = preset("case2p")
    v = value_function(spec, 0.0)
    x = 1.0
    gen = generator_apply(spec.model, spec.q, v.piecewise, x)
    assert gen == pytest.approx(-spec.r * (x + v(0.0) - v(x)), abs=1e-6)
    assert hjb_check(spec, grid=[0.5, 1.0, 3.0]).passed


def test_forced_suboptimal_barrier_fails():
    spec = preset("case1p")
    report = hjb_check(spec, barrier=1.0)
    assert not report.passed
    assert report.max_hjb_slack > 1e-3


@pytest.mark.parametrize("name", ["case1", "case1p"])
def test_classical_barrier_is_not_optimal(name):
    spec = preset(name)
    sol = b_star(spec)
    report = hjb_check(spec, barrier=sol.b_bar)
    assert not report.passed
    assert report.max_hjb_slack > 0


def test_generator_residual_tracks_quadrature_tolerance():
    spec = preset("case1p")
    bs = b_star(spec).b_star
    v = value_function(spec, bs)
    for x in (0.5, 2.0, 3.5):
        prev = np.inf
        for tol in (1e-4, 1e-6, 1e-8, 1e-10, 1e-12):
            res = abs(generator_apply(spec.model, spec.q, lambda y: v(y), x,
                                      df=lambda y: v(y, 1), quad_tol=tol))
            assert res <= max(tol, 1e-13)
            assert res <= prev + 1e-15
            prev = res


def test_smoothness_jump():
    assert smoothness_jump(preset("case1p"), b_star(preset("case1p")).b_star) <= 1e-8
    assert smoothness_jump(preset("case1"), b_star(preset("case1")).b_star) <= 1e-5
    assert smoothness_jump(preset("case1p"), 1.0) > 1e-3
    assert smoothness_jump(preset("case2p"), 0.0) == 0.0


def test_report_json_schema():
    report = hjb_check(preset("case2p"), grid=[0.5, 1.0])
    doc = json.loads(report.to_json())
    assert set(doc) == {"pass", "max_generator_residual", "max_hjb_slack", "smoothness_jump",
                        "grid", "details"}
    assert doc["pass"] is True and doc["grid"] == [0.5, 1.0]
