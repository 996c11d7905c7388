"""The ten acceptance criteria, each at its stated tolerance.

Every test records one line that is printed in the terminal summary and also
echoed immediately, so ``pytest -v`` shows a pass/fail line per criterion.
"""
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.integrate import quad

from periodic_dividends.barrier import b_star, bar_b, h
from periodic_dividends.cli import main
from periodic_dividends.levy import PRESETS, laplace_exponent, preset
from periodic_dividends.scale import bases
from periodic_dividends.simulate import SimConfig, simulate_value
from periodic_dividends.sweeps import (FIGURE_GRIDS, SENSITIVITY_SIGMAS, _sensitivity_row,
                                       b_star_column, dominance_gap, dominance_panel, sensitivity,
                                       sensitivity_template, value_matrix)
from periodic_dividends.value import classical_value, value, value_function
from periodic_dividends.verify import generator_identity_suite, hjb_check, smoothness_jump

import oracles
from conftest import ACCEPTANCE

CASES = list(PRESETS)


@contextmanager
def criterion(n, title, capsys):
    detail = []
    try:
        yield detail
    except BaseException:
        ACCEPTANCE.append((n, title, False, "; ".join(detail) or "see traceback"))
        with capsys.disabled():
            print(f"\n[FAIL] {n}. {title}: {'; '.join(detail)}")
        raise
    ACCEPTANCE.append((n, title, True, "; ".join(detail)))
    with capsys.disabled():
        print(f"\n[PASS] {n}. {title}: {'; '.join(detail)}")


def test_criterion_01_case_classification(capsys):
    with criterion(1, "case classification", capsys) as d:
        t0 = time.perf_counter()
        sols = {name: b_star(preset(name)) for name in CASES}
        grid = np.linspace(0.05, 20, 400)
        h3 = {name: h(preset(name), grid) for name in ("case3", "case3p")}
        elapsed = time.perf_counter() - t0
        d.append(", ".join(f"{k} b*={s.b_star:.4g}" for k, s in sols.items()))
        d.append(f"{elapsed:.2f}s")
        for name in ("case1", "case1p"):
            assert sols[name].b_star > 0
        for name in ("case2", "case2p", "case3", "case3p"):
            assert sols[name].b_star == 0
        for name, hv in h3.items():
            assert sols[name].b_bar == 0
            assert np.all(hv < 0) and np.all(np.diff(hv) > 0)
        assert elapsed < 1.0


def _quadratic_root(a, b, c, sign):
    return (-b + sign * math.sqrt(b * b - 4 * a * c)) / (2 * a)


def test_criterion_02_analytic_oracle_case1p(capsys):
    with criterion(2, "case1p analytic oracle match", capsys) as d:
        spec = preset("case1p")
        sol = b_star(spec)
        c, q, r = 1.5, 0.05, 0.5
        # psi(t) = p  <=>  c t^2 + (c - 1 - p) t - p = 0 for kappa = lambda = 1
        roots = {p: (_quadratic_root(c, c - 1 - p, -p, 1), _quadratic_root(c, c - 1 - p, -p, -1))
                 for p in (q, q + r)}
        dpsi = lambda t: c - 1 / (1 + t) ** 2
        t1, t2 = roots[q]
        a1, a2 = 1 / dpsi(t1), 1 / dpsi(t2)
        beta = roots[q + r][0]
        b_bar_cf = math.log(-a2 * t2**2 / (a1 * t1**2)) / (t1 - t2)
        ratio = -a2 * t2**2 * (beta - t1) / (a1 * t1**2 * (beta - t2))
        b_star_cf = math.log(ratio) / (t1 - t2)
        errs = {"phi(q)": abs(sol.phi_q - t1), "phi(q+r)": abs(sol.phi_qr - beta),
                "b_bar": abs(sol.b_bar - b_bar_cf), "b*": abs(sol.b_star - b_star_cf)}
        d.append(f"b*={sol.b_star:.6f} b_bar={sol.b_bar:.6f} max|err|={max(errs.values()):.1e}")
        d.append(f"smooth fit {sol.smooth_fit_residual:.1e}")
        literal = {"phi(q)": 0.086291, "phi(q+r)": 0.622423, "b_bar": 5.1347, "b*": 3.7963}
        got = {"phi(q)": sol.phi_q, "phi(q+r)": sol.phi_qr, "b_bar": sol.b_bar, "b*": sol.b_star}
        off = {k: abs(got[k] - literal[k]) for k in literal if abs(got[k] - literal[k]) > 1e-4}
        if off:
            d.append("rounded reference figures off by " +
                     ", ".join(f"{k} {v:.1e}" for k, v in off.items()))
        assert max(errs.values()) <= 1e-4
        # the mpmath oracle agrees with the float closed forms far below the tolerance
        assert abs(sol.b_star - oracles.CASE1P["b_star"]) <= 1e-10
        assert abs(sol.b_bar - oracles.CASE1P["b_bar"]) <= 1e-10
        assert sol.smooth_fit_residual <= 1e-8


def test_criterion_03_scale_identities(capsys):
    with criterion(3, "scale function identity suite", capsys) as d:
        t0 = time.perf_counter()
        worst = dict(laplace=0.0, convolution=0.0, boundary=0.0)
        for name in CASES:
            spec = preset(name)
            m = spec.model
            bq, bqr = bases(spec)
            for basis in (bq, bqr):
                for theta in basis.phi + np.linspace(0.1, 5.0, 5):
                    x_max = 40.0 / (theta - basis.phi)
                    f = lambda x: np.sum(basis.coeffs * np.exp((basis.roots - theta) * x))
                    val = quad(f, 0, x_max, limit=500, epsabs=0, epsrel=1e-12)[0]
                    ref = 1.0 / (laplace_exponent(m, theta) - basis.rate_p)
                    worst["laplace"] = max(worst["laplace"], abs(val / ref - 1))
                w0 = basis.W(0.0)
                want = 0.0 if m.sigma > 0 else 1 / m.c
                worst["boundary"] = max(worst["boundary"], abs(w0 - want))
                if m.sigma > 0:
                    worst["boundary"] = max(worst["boundary"], abs(basis.W(0.0, 1) * m.sigma**2 / 2 - 1))
                else:
                    d0 = (basis.rate_p + m.total_rate) / m.c**2
                    worst["boundary"] = max(worst["boundary"], abs(basis.W(0.0, 1) / d0 - 1))
                assert basis.coeffs[0] > 0 and np.all(basis.coeffs[1:] < 0)
            for x in (0.5, 1.0, 2.0, 5.0):
                lhs = bqr.W(x) - bq.W(x)
                conv = sum(a * b * (np.exp(s * x) - np.exp(t * x)) / (s - t)
                           for a, s in zip(bqr.coeffs, bqr.roots) for b, t in zip(bq.coeffs, bq.roots))
                worst["convolution"] = max(worst["convolution"], abs(spec.r * conv / lhs - 1))
        elapsed = time.perf_counter() - t0
        d.append(", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {elapsed:.2f}s")
        assert worst["laplace"] <= 1e-6
        assert worst["convolution"] <= 1e-8
        assert worst["boundary"] <= 1e-10
        assert elapsed < 5.0


def test_criterion_04_generator_identities(capsys):
    with criterion(4, "generator identity suite (normalized residuals)", capsys) as d:
        t0 = time.perf_counter()
        worst = {name: max(generator_identity_suite(preset(name)).values()) for name in CASES}
        elapsed = time.perf_counter() - t0
        d.append(f"max {max(worst.values()):.1e} over 5 identities x 6 presets, {elapsed:.2f}s")
        assert max(worst.values()) <= 1e-7
        assert elapsed < 10.0


def test_criterion_05_hjb_certification(capsys):
    with criterion(5, "HJB certification", capsys) as d:
        for name in CASES:
            rep = hjb_check(preset(name))
            assert rep.passed, name
            assert rep.max_generator_residual <= 1e-6
            assert max(rep.argmax_errors) <= 1e-4
            assert not rep.slope_violations
        forced = hjb_check(preset("case1p"), barrier=1.0)
        d.append(f"all presets pass; forced b=1.0 slack {forced.max_hjb_slack:.3g}")
        assert not forced.passed and forced.max_hjb_slack > 1e-3


def test_criterion_06_smoothness_at_b_star(capsys):
    with criterion(6, "smoothness at b*", capsys) as d:
        jump = smoothness_jump(preset("case1p"), b_star(preset("case1p")).b_star)
        spec = preset("case1")
        bs = b_star(spec).b_star
        v = value_function(spec, bs)
        eps = 1e-5
        right = (-3 * v(bs, 2) + 4 * v(bs + eps, 2) - v(bs + 2 * eps, 2)) / (2 * eps)
        left = (3 * v(bs, 2, side="left") - 4 * v(bs - eps, 2) + v(bs - 2 * eps, 2)) / (2 * eps)
        rel = abs(right - left) / abs(right)
        d.append(f"case1p v'' jump {jump:.1e}; case1 v''' one-sided rel diff {rel:.1e}")
        assert jump <= 1e-8
        assert rel <= 1e-5


MC_RUNS = [("case1p", "b*"), ("case1p", 1.0), ("case1", "b*")]


@pytest.mark.slow
def test_criterion_07_monte_carlo(capsys):
    with criterion(7, "Monte Carlo cross-validation at 2e5 paths", capsys) as d:
        t0 = time.perf_counter()
        zs, trunc = [], 0.0
        for name, b in MC_RUNS:
            spec = preset(name)
            bb = b_star(spec).b_star if b == "b*" else b
            for x0 in (0.5, 2.0, 6.0):
                est = simulate_value(spec, bb, x0, SimConfig(n_paths=200_000, seed=1, dt=1e-3))
                z = (est.mean - value(spec, bb, x0)) / est.std_error
                zs.append(z)
                trunc = max(trunc, est.truncation_bound / est.mean)
        d.append("z = " + " ".join(f"{z:+.2f}" for z in zs))
        d.append(f"max truncation/mean {trunc:.1e}, {time.perf_counter() - t0:.1f}s")
        assert max(abs(z) for z in zs) <= 3
        assert trunc < 1e-3


def test_criterion_08_dominance(capsys):
    with criterion(8, "dominance of v_b*", capsys) as d:
        gaps = {}
        for name in CASES:
            spec = preset(name)
            gaps[name] = dominance_gap(dominance_panel(spec), b_star(spec).b_star)
        d.append(f"max_b v_b - v_b* <= {max(gaps.values()):.1e}")
        assert max(gaps.values()) <= 1e-8


def test_criterion_09_sensitivity(capsys):
    with criterion(9, "sensitivity sweeps", capsys) as d:
        _sensitivity_row.cache_clear()
        t0 = time.perf_counter()
        tables = {(p, s): sensitivity(sensitivity_template(s), p, FIGURE_GRIDS[p])
                  for p in FIGURE_GRIDS for s in SENSITIVITY_SIGMAS}
        elapsed = time.perf_counter() - t0
        direction = {"c": 1, "kappa": -1, "lambda": 1, "r": 1}
        for (p, s), t in tables.items():
            _, _, mat = value_matrix(t)
            assert np.all(direction[p] * np.diff(mat, axis=0) >= -1e-10), (p, s)
        for p in ("kappa", "lambda"):
            for s in SENSITIVITY_SIGMAS:
                diff = np.diff(b_star_column(tables[p, s])[1])
                assert np.any(diff > 1e-9) and np.any(diff < -1e-9), (p, s)
        for s in SENSITIVITY_SIGMAS:
            spec = sensitivity_template(s)
            t = tables["r", s]
            _, bs = b_star_column(t)
            _, xs, mat = value_matrix(t)
            assert np.all(np.diff(bs) >= 0) and np.all(bs <= bar_b(spec))
            assert np.all(mat <= classical_value(spec, xs) + 1e-8)
        skipped = sum(len(t.skipped) for t in tables.values())
        d.append(f"8 sweeps, {skipped} skipped rows, {elapsed:.1f}s")
        assert elapsed < 60


def test_criterion_10_determinism(capsys):
    with criterion(10, "simulate determinism across thread counts", capsys) as d:
        argv = ["simulate", "case1", "--quiet", "--paths", "200000", "--seed", "7", "--x0", "2"]
        outs = []
        for threads in ("1", "3", "8"):
            assert main(argv + ["--threads", threads]) == 0
            outs.append(capsys.readouterr().out)
        d.append(f"threads 1/3/8 byte-identical: {len(set(outs)) == 1}")
        assert len(set(outs)) == 1
        assert json.loads(outs[0])["n_paths"] == 200000
