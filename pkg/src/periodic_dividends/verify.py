"""Numerical certification of the optimality conditions on a grid."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .barrier import BarrierSolution, b_star, bar_b
from .errors import DomainError
from .expsum import Piecewise
from .levy import LevyModel, ProblemSpec
from .scale import bases
from .value import ValueFunction, second_derivative_jump, value_function

GENERATOR_TOL = 1e-6
HJB_TOL = 1e-6
IMPROVEMENT_TOL = 1e-8
ARGMAX_TOL = 1e-4
SLOPE_TOL = 1e-8
JUMP2_TOL = 1e-8
JUMP3_RTOL = 1e-5
IDENTITY_GRID = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0)


def _generator_terms(model: LevyModel, q: float, f, x: float, df=None, d2f=None,
                     quad_tol: float = 1e-10, fd_step: float = 1e-4):
    if not x > 0:
        raise DomainError("the generator is applied at x > 0")
    if isinstance(f, Piecewise):
        f0, f1 = float(f(x)), float(f(x, 1))
        f2 = float(f(x, 2)) if model.sigma > 0 else 0.0
        jumps = [f.jump_integral(x, j.lam) for j in model.jumps]
    else:
        f0 = float(f(x))
        f1 = float(df(x)) if df is not None else (f(x + fd_step) - f(x - fd_step)) / (2 * fd_step)
        if model.sigma > 0:
            f2 = float(d2f(x)) if d2f is not None else (
                (f(x + fd_step) - 2 * f0 + f(x - fd_step)) / fd_step**2)
        else:
            f2 = 0.0
        jumps = []
        for j in model.jumps:
            g = lambda u, lam=j.lam: f(x - u) * lam * np.exp(-lam * u)
            inner = quad(g, 0.0, x, epsabs=quad_tol, epsrel=quad_tol, limit=200)[0]
            outer = quad(g, x, np.inf, epsabs=quad_tol, epsrel=quad_tol, limit=200)[0]
            jumps.append(inner + outer)
    terms = [model.c * f1, 0.5 * model.sigma**2 * f2, -q * f0]
    terms += [j.rate * (ji - f0) for j, ji in zip(model.jumps, jumps)]
    return terms


def generator_apply(model: LevyModel, q: float, f: Piecewise | Callable, x: float, *,
                    df=None, d2f=None, quad_tol: float = 1e-10) -> float:
    """``(L - q) f(x)`` for the Levy generator ``L``.

    Piecewise exponential polynomials get a closed-form jump integral; any
    other callable is integrated with adaptive quadrature, with derivatives
    from ``df``/``d2f`` or central differences.
    """
    return float(sum(_generator_terms(model, q, f, x, df, d2f, quad_tol)))


def _normalized(terms, target) -> float:
    scale = max([abs(t) for t in terms] + [abs(target)])
    return abs(sum(terms) - target) / (1.0 + scale)


def generator_identity_suite(spec: ProblemSpec, grid=IDENTITY_GRID) -> dict[str, float]:
    """Max normalized residual of each harmonic identity over ``grid``.

    Residuals are ``|lhs - rhs| / (1 + largest term)`` so that exponentially
    large scale functions are judged at their own precision.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise DomainError("identities are checked at y > 0")
    bq, bqr = bases(spec)
    m, q, r = spec.model, spec.q, spec.r
    w_qr, wbar_qr, wbb_qr = (bqr.piecewise(k) for k in ("W", "Wbar", "Wbarbar"))
    cases = {
        "W_q": (bq.piecewise("W"), lambda y: 0.0),
        "Z_q": (bq.piecewise("Z"), lambda y: 0.0),
        "W_qr": (w_qr, lambda y: r * w_qr(y)),
        "Wbar_qr": (wbar_qr, lambda y: 1.0 + r * wbar_qr(y)),
        "Wbarbar_qr": (wbb_qr, lambda y: y + r * wbb_qr(y)),
    }
    out = {}
    for name, (f, rhs) in cases.items():
        out[name] = max(_normalized(_generator_terms(m, q, f, y), float(rhs(y))) for y in grid)
    return out


def default_grid(spec: ProblemSpec, n: int = 64) -> np.ndarray:
    return np.geomspace(1e-3, 4.0 * max(bar_b(spec), 1.0), n)


def _best_improvement(v: ValueFunction, x: float, n_scan: int = 2001):
    """Scan ``l -> l + v(x - l) - v(x)`` on ``[0, x]`` and refine around the best grid point."""
    vx = float(v(x))
    ls = np.linspace(0.0, x, n_scan)
    obj = ls + v(x - ls) - vx
    i = int(np.argmax(obj))
    best_l, best = float(ls[i]), float(obj[i])
    lo, hi = ls[max(i - 1, 0)], ls[min(i + 1, n_scan - 1)]
    if hi > lo:
        res = minimize_scalar(lambda l: -(l + float(v(x - l)) - vx), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        if -res.fun > best:
            best_l, best = float(res.x), float(-res.fun)
    return best_l, best


@dataclass
class VerificationReport:
    barrier: float
    grid: list
    generator_residuals: list
    hjb_slack: list
    argmax_errors: list
    slope_violations: list
    smoothness_jump: float
    passed: bool
    details: list = field(default_factory=list)

    @property
    def max_generator_residual(self) -> float:
        return max(self.generator_residuals, default=0.0)

    @property
    def max_hjb_slack(self) -> float:
        return max(self.hjb_slack, default=0.0)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "max_generator_residual": self.max_generator_residual,
            "max_hjb_slack": self.max_hjb_slack,
            "smoothness_jump": self.smoothness_jump,
            "grid": self.grid,
            "details": self.details,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def smoothness_jump(spec: ProblemSpec, b: float) -> float:
    """Discontinuity at ``b`` of the highest derivative the barrier choice controls.

    Bounded variation: ``|v''(b+) - v''(b-)|``. Unbounded variation: relative
    gap between the one-sided third derivatives.
    """
    if not b > 0:
        return 0.0
    if spec.model.sigma == 0:
        return abs(second_derivative_jump(spec, b))
    v = value_function(spec, b)
    right, left = float(v(b, 3)), float(v(b, 3, side="left"))
    return abs(right - left) / max(abs(left), abs(right), 1e-300)


def hjb_check(spec: ProblemSpec, solution: BarrierSolution | None = None, grid=None,
              barrier: float | None = None) -> VerificationReport:
    """Check the variational inequality for ``v_b`` at every grid point.

    ``barrier`` overrides the optimal level, which lets the check demonstrate
    that a suboptimal barrier violates the inequality.
    """
    if solution is None:
        solution = b_star(spec)
    b = solution.b_star if barrier is None else float(barrier)
    grid = default_grid(spec) if grid is None else np.asarray(grid, dtype=float)
    v = value_function(spec, b)
    r, vb = spec.r, float(v(b))

    gen_res, slack, arg_err, slope_bad, details = [], [], [], [], []
    for x in grid:
        x = float(x)
        terms = _generator_terms(spec.model, spec.q, v.piecewise, x)
        gen = sum(terms)
        vx = float(v(x))
        if x <= b:
            l_pred = 0.0
            res = abs(gen) / (1.0 + abs(vx))
        else:
            l_pred = x - b
            res = abs(gen + r * ((x - b) + vb - vx)) / (1.0 + max(abs(t) for t in terms))
        pred = l_pred + float(v(x - l_pred)) - vx
        l_scan, m_scan = _best_improvement(v, x)
        best = max(pred, m_scan)
        s = gen + r * best
        d1 = float(v(x, 1))
        if x < b:
            slope_ok = d1 >= 1.0 - SLOPE_TOL
        elif x > b:
            slope_ok = -SLOPE_TOL <= d1 <= 1.0 + SLOPE_TOL
        else:
            slope_ok = True
        if not slope_ok:
            slope_bad.append(x)
        improvement_ok = x > b or m_scan <= IMPROVEMENT_TOL
        gen_res.append(res)
        slack.append(s)
        arg_err.append(abs(l_scan - l_pred))
        details.append({
            "x": x, "v": vx, "v_prime": d1, "generator": gen, "generator_residual": res,
            "max_term": best, "argmax": l_scan, "argmax_expected": l_pred, "hjb_slack": s,
            "ok": bool(res <= GENERATOR_TOL and s <= HJB_TOL and slope_ok and improvement_ok
                       and abs(l_scan - l_pred) <= ARGMAX_TOL),
        })

    jump = smoothness_jump(spec, b)
    jump_ok = jump <= (JUMP2_TOL if spec.model.sigma == 0 else JUMP3_RTOL)
    passed = bool(all(d["ok"] for d in details) and jump_ok)
    return VerificationReport(b, grid.tolist(), gen_res, slack, arg_err, slope_bad, jump, passed,
                              details)
