"""Expected NPV of dividends under a periodic barrier strategy, and the classical value.

Above the barrier, every ``exp(theta_i y)`` term of the q-scale function cancels
against the convolution term (partial fractions of ``1/(psi - q - r)`` at a
root of ``psi = q`` equal ``-1/r``), and so does the ``exp(Phi(q+r) y)`` term.
What is left is a sum of decaying exponentials in ``y = x - b`` plus an
affine part, which is what :class:`ValueFunction` stores.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .barrier import b_star, bar_b
from .errors import DomainError
from .expsum import ExpPoly, Piece, Piecewise
from .levy import ProblemSpec
from .scale import Z_phi, bases


class ValueFunction:
    """``v_b`` as a piecewise exponential polynomial on R."""

    def __init__(self, spec: ProblemSpec, b: float):
        if not b >= 0:
            raise DomainError("barrier must be nonnegative")
        self.spec = spec
        self.barrier_b = b = float(b)
        bq, bqr = bases(spec)
        r, beta = spec.r, bqr.phi
        rho, big_a = bqr.roots, bqr.coeffs

        if b == 0:
            z_prime = beta - r * bq.w0
            scale = r / (beta * z_prime)
            coefs = big_a * (scale * (1.0 - r * bq.w0 / rho) - r / rho**2)
            w_b = bq.w0
        else:
            _, z_prime = Z_phi(spec, b)
            scale = r / (beta * z_prime)
            w_b = float(bq.W(b))
            # sum_i a_i e^{theta_i b} / (rho_j - theta_i), per root rho_j of psi = q + r
            weights = bq.coeffs * np.exp(bq.roots * b)
            zg = (weights / (rho[:, None] - bq.roots)).sum(axis=1)
            coefs = r * big_a * (scale * (zg - w_b / rho) - 1.0 / rho**2)
        # the Phi(q+r) term vanishes identically; drop it rather than carry rounding
        coefs = coefs[1:]
        const = scale * r * w_b * np.sum(big_a / rho) + r * np.sum(big_a / rho**2)
        slope = r * np.sum(big_a / rho)

        self.scale = scale
        self.z_prime = z_prime
        self.above = ExpPoly(rho[1:], coefs, [const, slope])
        pieces = [Piece(-np.inf, 0.0, 0.0, ExpPoly())]
        if b > 0:
            pieces.append(Piece(0.0, b, 0.0, bq.expoly * scale))
        pieces.append(Piece(b, np.inf, b, self.above))
        self.piecewise = Piecewise(pieces)

    def __call__(self, x, order: int = 0, side: str = "right"):
        return self.piecewise(x, order, side)

    def derivative(self, x, order: int = 1, side: str = "right"):
        if order not in (1, 2, 3):
            raise DomainError("order must be 1, 2 or 3")
        return self.piecewise(x, order, side)

    @property
    def asymptotic_slope(self) -> float:
        return float(self.above.poly[1])


@lru_cache(maxsize=1024)
def value_function(spec: ProblemSpec, b: float) -> ValueFunction:
    return ValueFunction(spec, b)


def value(spec: ProblemSpec, b: float, x):
    """Expected NPV ``v_b(x)`` of the periodic barrier strategy at level ``b``."""
    return value_function(spec, float(b))(x)


def value_derivative(spec: ProblemSpec, b: float, x, order: int = 1, side: str = "right"):
    return value_function(spec, float(b)).derivative(x, order, side)


def optimal_value(spec: ProblemSpec, x):
    return value(spec, b_star(spec).b_star, x)


def second_derivative_jump(spec: ProblemSpec, b: float) -> float:
    """Closed-form ``v_b''(b+) - v_b''(b-)``; zero for unbounded variation."""
    if not b > 0:
        raise DomainError("barrier must be positive")
    bq, bqr = bases(spec)
    _, z_prime = Z_phi(spec, b)
    return spec.r * bqr.w0 * (spec.r * float(bq.W(b, 1)) / (bqr.phi * z_prime) - 1.0)


def classical_value(spec: ProblemSpec, x, b_bar: float | None = None):
    """Value of the classical problem where dividends may be paid at any time."""
    bq, _ = bases(spec)
    bb = bar_b(spec) if b_bar is None else b_bar
    x = np.asarray(x, dtype=float)
    wpb = float(bq.W(bb, 1))
    below = bq.W(np.minimum(x, bb)) / wpb
    out = np.where(x <= bb, below, float(bq.W(bb)) / wpb + (x - bb))
    return out if out.ndim else float(out)
