"""Classical barrier, smooth-fit function ``h`` and the optimal periodic barrier."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .levy import ProblemSpec
from .scale import Z_phi, bases

B_STAR_EPS = 1e-12
B_STAR_XTOL = 1e-12


@dataclass(frozen=True)
class BarrierSolution:
    b_star: float
    b_bar: float
    phi_q: float
    phi_qr: float
    h_at_zero: float
    positive_criterion: bool
    smooth_fit_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def h(spec: ProblemSpec, b):
    """``exp(-Phi(q+r) b) [r W'(b) - Phi(q+r) Z'(b, Phi(q+r))]`` with the damping applied per term.

    Its zero on ``(0, b_bar)`` is the smooth-fit barrier.
    """
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0):
        raise DomainError("h is defined for b > 0")
    bq, bqr = bases(spec)
    beta, r = bqr.phi, spec.r
    theta, a = bq.roots, bq.coeffs
    damp = np.exp(np.multiply.outer(b, theta - beta))
    w_prime = damp @ (a * theta)
    w = damp @ a
    z = damp @ (r * a / (beta - theta))
    z_prime = beta * z - r * w
    out = r * w_prime - beta * z_prime
    return out if out.ndim else float(out)


def h_at_zero(spec: ProblemSpec) -> float:
    """``h(0+) = r (W'(0+) + Phi(q+r) W(0)) - Phi(q+r)^2``."""
    bq, bqr = bases(spec)
    beta = bqr.phi
    return spec.r * (bq.w0_prime + beta * bq.w0) - beta**2


def positive_barrier_criterion(spec: ProblemSpec) -> bool:
    """True iff the optimal periodic barrier is strictly positive."""
    return h_at_zero(spec) > 0


def bar_b(spec: ProblemSpec) -> float:
    """Optimal barrier of the classical (continuous payment) problem, the zero of ``W''``."""
    bq, _ = bases(spec)
    w2 = bq.piecewise("W").deriv(2)
    f = lambda x: float(w2(x))
    if f(0.0) >= 0:
        return 0.0
    cap = 1e3 * (1.0 / bq.phi + 1.0)
    lo, hi = 0.0, 1e-6
    while f(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi >= cap:
            if f(cap) < 0:
                warnings.warn("W'' still negative at the search cap; b_bar set to the cap")
                return cap
            hi = cap
            break
    try:
        return brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(f"b_bar root search failed: {exc}") from exc


def smooth_fit_residual(spec: ProblemSpec, b: float) -> float:
    """``|r W'(b) - Phi(q+r) Z'(b, Phi(q+r))| / (r W'(b))``."""
    bq, bqr = bases(spec)
    wp = bq.W(b, 1)
    _, zp = Z_phi(spec, b)
    return abs(spec.r * wp - bqr.phi * zp) / (spec.r * wp)


def b_star(spec: ProblemSpec) -> BarrierSolution:
    """Optimal periodic barrier.

    ``h`` decreases on ``(0, b_bar)`` and then increases to 0, so a sign
    change exists on ``[eps, b_bar]`` exactly when ``h(0+) > 0``.
    """
    bq, bqr = bases(spec)
    hb0 = h_at_zero(spec)
    bb = bar_b(spec)
    positive = hb0 > 0
    if not positive:
        return BarrierSolution(0.0, bb, bq.phi, bqr.phi, hb0, False, 0.0)
    if not bb > 0:
        raise NumericalError("positive barrier criterion holds but b_bar is zero")
    lo, hi = B_STAR_EPS, bb
    if h(spec, lo) <= 0 or h(spec, hi) >= 0:
        raise NumericalError("h does not change sign on [eps, b_bar]")
    try:
        root = brentq(lambda b: h(spec, b), lo, hi, xtol=B_STAR_XTOL, rtol=4 * np.finfo(float).eps,
                      maxiter=200)
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(f"b* search failed: {exc}") from exc
    return BarrierSolution(root, bb, bq.phi, bqr.phi, hb0, True, smooth_fit_residual(spec, root))


solve = b_star
