"""Scale functions as exact exponential sums.

For a rational Laplace exponent, ``1/(psi(theta) - p)`` has simple poles at
the real roots of ``psi(theta) = p`` and its inverse Laplace transform is

    W^{(p)}(x) = sum_i exp(theta_i x) / psi'(theta_i),   x >= 0.

There is one positive root ``Phi(p)``; the others sit one per interval
between consecutive poles ``-lam_i`` (plus one below the last pole when
``sigma > 0``), which gives guaranteed brackets.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .expsum import ExpPoly, Piecewise, zero_below
from .levy import LevyModel, ProblemSpec, laplace_exponent, laplace_exponent_prime

ROOT_GAP_TOL = 1e-9


def _bracket_toward(f, anchor, direction, width, want_positive):
    """Step from a pole/endpoint ``anchor`` into the interval until ``f`` has the wanted sign."""
    delta = 0.5
    for _ in range(200):
        t = anchor + direction * delta * width
        if t == anchor:
            break
        v = f(t)
        if (v > 0) == want_positive and v != 0:
            return t
        delta *= 0.1
        if delta < 1e-300:
            break
    raise NumericalError(f"could not bracket a root next to {anchor}")


def _solve(f, a, b):
    try:
        return brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:  # pragma: no cover - defensive
        raise NumericalError(f"root solve failed on [{a}, {b}]: {exc}") from exc


def _positive_root(model: LevyModel, p: float) -> float:
    f = lambda t: laplace_exponent(model, t) - p
    hi = 1.0
    for _ in range(2000):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise NumericalError("psi(theta) - p stays nonpositive; cannot bracket Phi(p)")
    return _solve(f, 0.0, hi)


def find_roots(model: LevyModel, p: float) -> np.ndarray:
    """All real roots of ``psi(theta) = p``, sorted descending (``Phi(p)`` first)."""
    if not p > 0:
        raise DomainError("transform rate p must be positive")
    f = lambda t: laplace_exponent(model, t) - p
    roots = [_positive_root(model, p)]
    edges = [0.0] + sorted(-model.lams, reverse=True)
    for right, left in zip(edges[:-1], edges[1:]):
        width = right - left
        a = _bracket_toward(f, left, +1.0, width, want_positive=True)
        b = right if right == 0.0 else _bracket_toward(f, right, -1.0, width, want_positive=False)
        roots.append(_solve(f, a, b))
    if model.sigma > 0:
        right = edges[-1]
        scale = max(1.0, abs(right))
        b = right if right == 0.0 else _bracket_toward(f, right, -1.0, scale, want_positive=False)
        length = scale
        for _ in range(2000):
            a = right - length
            if f(a) > 0:
                break
            length *= 2.0
        else:
            raise NumericalError("could not bracket the lowest root")
        roots.append(_solve(f, a, b))
    roots = np.array(sorted(roots, reverse=True))
    gaps = -np.diff(roots)
    if gaps.size and np.any(gaps < ROOT_GAP_TOL * (1.0 + np.abs(roots[1:]))):
        i = int(np.argmin(gaps))
        raise NumericalError(f"near-degenerate roots {roots[i]!r} and {roots[i + 1]!r}")
    return roots


def phi(model: LevyModel, p: float) -> float:
    """Right inverse of the Laplace exponent, the unique positive root of ``psi = p``."""
    if not p > 0:
        raise DomainError("transform rate p must be positive")
    return _positive_root(model, p)


@dataclass(frozen=True, eq=False)
class ScaleBasis:
    """Exponential-sum representation of ``W^{(p)}`` on ``[0, inf)``."""

    rate_p: float
    roots: np.ndarray
    coeffs: np.ndarray
    w0: float
    w0_prime: float

    @property
    def phi(self) -> float:
        return float(self.roots[0])

    @property
    def phi_prime(self) -> float:
        return float(self.coeffs[0])

    @property
    def expoly(self) -> ExpPoly:
        return ExpPoly(self.roots, self.coeffs)

    def piecewise(self, kind: str = "W") -> Piecewise:
        """``W``, ``Wbar``, ``Wbarbar``, ``Z`` or ``Zbar`` as a function on all of R."""
        w = self.expoly
        if kind == "W":
            return zero_below(w)
        wbar = w.antideriv()
        if kind == "Wbar":
            return zero_below(wbar)
        if kind == "Wbarbar":
            return zero_below(wbar.antideriv())
        if kind == "Z":
            return zero_below(ExpPoly(poly=[1.0]) + self.rate_p * wbar, ExpPoly(poly=[1.0]))
        if kind == "Zbar":
            return zero_below(
                ExpPoly(poly=[0.0, 1.0]) + self.rate_p * wbar.antideriv(), ExpPoly(poly=[0.0, 1.0])
            )
        raise ValueError(f"unknown kind {kind!r}")

    def W(self, x, order: int = 0):
        if order not in (0, 1, 2, 3):
            raise DomainError("order must be 0, 1, 2 or 3")
        return self.piecewise("W")(x, order)

    def antiderivatives(self, x):
        return tuple(self.piecewise(k)(x) for k in ("Wbar", "Wbarbar", "Z", "Zbar"))

    def laplace(self, theta):
        """``int_0^inf e^{-theta x} W(x) dx`` from the basis, valid for ``theta > Phi(p)``."""
        theta = np.asarray(theta, dtype=float)
        return np.sum(self.coeffs / (theta[..., None] - self.roots), axis=-1)

    def to_dict(self) -> dict:
        return {
            "p": self.rate_p,
            "roots": self.roots.tolist(),
            "coeffs": self.coeffs.tolist(),
            "w0": self.w0,
            "w0_prime": self.w0_prime,
        }


@lru_cache(maxsize=4096)
def build_basis(model: LevyModel, p: float) -> ScaleBasis:
    """Roots and partial-fraction weights of ``1/(psi(theta) - p)``."""
    roots = find_roots(model, p)
    coeffs = 1.0 / laplace_exponent_prime(model, roots)
    if not coeffs[0] > 0 or np.any(coeffs[1:] >= 0):
        raise NumericalError(f"scale basis sign pattern violated: coeffs={coeffs!r}")
    if model.sigma > 0:
        w0, w0_prime = 0.0, 2.0 / model.sigma**2
    else:
        w0, w0_prime = 1.0 / model.c, (p + model.total_rate) / model.c**2
    return ScaleBasis(float(p), roots, coeffs, w0, w0_prime)


def bases(spec: ProblemSpec) -> tuple[ScaleBasis, ScaleBasis]:
    """Scale bases at rates ``q`` and ``q + r``."""
    return build_basis(spec.model, spec.q), build_basis(spec.model, spec.q + spec.r)


def W(basis: ScaleBasis, x, order: int = 0):
    return basis.W(x, order)


def W_antiderivatives(basis: ScaleBasis, x):
    """``(Wbar, Wbarbar, Z, Zbar)`` at ``x``, with their conventions below zero."""
    return basis.antiderivatives(x)


def Z_phi(spec: ProblemSpec, x):
    """``Z^{(q)}(x, Phi(q+r))`` and its derivative in ``x``."""
    bq, bqr = bases(spec)
    beta = bqr.phi
    x = np.asarray(x, dtype=float)
    pos = np.maximum(x, 0.0)
    terms = spec.r * bq.coeffs / (beta - bq.roots)
    value = np.where(x >= 0, ExpPoly(bq.roots, terms)(pos), np.exp(beta * np.minimum(x, 0.0)))
    deriv = beta * value - spec.r * bq.W(x)
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def two_sided_exit(spec: ProblemSpec, x, b: float):
    """Discounted probabilities of exiting ``[0, b]`` upward first and downward first."""
    if not b > 0:
        raise DomainError("upper level b must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > b):
        raise DomainError("start point must lie in [0, b]")
    bq, _ = bases(spec)
    wb = bq.W(b)
    up = bq.W(x) / wb
    zb = bq.piecewise("Z")(b)
    down = bq.piecewise("Z")(x) - zb * up
    return up, down
