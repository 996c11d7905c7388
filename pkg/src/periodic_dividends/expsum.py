"""Exponential-polynomial functions and piecewise assemblies of them.

Every scale function of a Levy process with rational Laplace exponent, and
every dividend value built from those, is a finite sum of exponentials plus
a low-degree polynomial on each interval between breakpoints. Representing
them symbolically keeps derivatives, antiderivatives and the jump integral
of the generator exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P


class ExpPoly:
    """``f(s) = sum_k coefs[k] * exp(rates[k] * s) + sum_m poly[m] * s**m``."""

    __slots__ = ("rates", "coefs", "poly")

    def __init__(self, rates=(), coefs=(), poly=()):
        self.rates = np.atleast_1d(np.asarray(rates, dtype=float))
        self.coefs = np.atleast_1d(np.asarray(coefs, dtype=float))
        self.poly = np.atleast_1d(np.asarray(poly, dtype=float))
        if self.rates.shape != self.coefs.shape:
            raise ValueError("rates and coefs must have the same length")

    def __repr__(self):
        return f"ExpPoly(rates={self.rates!r}, coefs={self.coefs!r}, poly={self.poly!r})"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = P.polyval(s, self.poly) if self.poly.size else np.zeros_like(s)
        if self.rates.size:
            e = np.multiply.outer(s, self.rates)
            # factor out the dominant exponent so a large growth term cannot
            # swamp the others before the sum is formed
            emax = e.max(axis=-1)
            out = out + np.exp(emax) * (np.exp(e - emax[..., None]) @ self.coefs)
        return out

    def deriv(self, n: int = 1) -> ExpPoly:
        if n == 0:
            return self
        poly = P.polyder(self.poly, n) if self.poly.size else self.poly
        return ExpPoly(self.rates, self.coefs * self.rates**n, poly)

    def antideriv(self) -> ExpPoly:
        """Antiderivative vanishing at ``s = 0``."""
        if np.any(self.rates == 0.0):
            raise ZeroDivisionError("zero rate in exponential term")
        c = self.coefs / self.rates
        poly = P.polyint(self.poly) if self.poly.size else np.zeros(1)
        poly = poly.copy()
        poly[0] -= c.sum()
        return ExpPoly(self.rates, c, poly)

    def __add__(self, other: ExpPoly) -> ExpPoly:
        return ExpPoly(
            np.concatenate([self.rates, other.rates]),
            np.concatenate([self.coefs, other.coefs]),
            P.polyadd(self.poly, other.poly) if (self.poly.size or other.poly.size) else (),
        )

    def __mul__(self, k: float) -> ExpPoly:
        return ExpPoly(self.rates, self.coefs * k, self.poly * k)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)


def _exp_segment(rho: float, lam: float, s1: float, u1: float, length: float) -> float:
    """``int_{u1}^{u1+length} exp(rho (s1 - (u - u1)) - lam u) du``.

    Both endpoint exponents stay inside the piece, so they are evaluated
    separately; ``expm1`` takes over when ``rho + lam`` is nearly zero.
    """
    a = rho + lam
    e1 = rho * s1 - lam * u1
    if np.isinf(length):
        if a <= 0:
            raise ValueError("divergent jump integral")
        return np.exp(e1) / a
    if abs(a * length) < 1.0:
        if a == 0.0:
            return np.exp(e1) * length
        return np.exp(e1) * -np.expm1(-a * length) / a
    return (np.exp(e1) - np.exp(e1 - a * length)) / a


@dataclass(frozen=True)
class Piece:
    """``f(x) = fn(x - origin)`` for ``lo <= x < hi``."""

    lo: float
    hi: float
    origin: float
    fn: ExpPoly

    def jump_integral(self, x: float, lam: float) -> float:
        """Contribution of this piece to ``int_0^inf f(x-u) lam e^{-lam u} du``."""
        u1 = max(0.0, x - self.hi)
        u2 = x - self.lo
        if not u2 > u1:
            return 0.0
        length = u2 - u1
        s1 = x - u1 - self.origin
        total = 0.0
        for rho, c in zip(self.fn.rates, self.fn.coefs):
            total += c * lam * _exp_segment(rho, lam, s1, u1, length)
        if self.fn.poly.size and np.any(self.fn.poly):
            # int_0^L Q(t) lam e^{-lam t} dt with Q(t) = poly(s1 - t), by parts
            acc = 0.0
            tail = 0.0 if np.isinf(length) else np.exp(-lam * length)
            d = self.fn.poly
            k = 0
            while d.size and np.any(d):
                sign = -1.0 if k % 2 else 1.0
                head = P.polyval(s1, d)
                end = P.polyval(s1 - length, d) * tail if tail else 0.0
                acc += sign * (head - end) / lam**k
                d = P.polyder(d)
                k += 1
            total += np.exp(-lam * u1) * acc
        return float(total)


class Piecewise:
    """Right-continuous concatenation of :class:`Piece` objects covering R."""

    def __init__(self, pieces: Sequence[Piece]):
        pieces = sorted(pieces, key=lambda p: p.lo)
        if pieces[0].lo != -np.inf or pieces[-1].hi != np.inf:
            raise ValueError("pieces must cover the real line")
        for a, b in zip(pieces, pieces[1:]):
            if a.hi != b.lo:
                raise ValueError("pieces must be contiguous")
        self.pieces = tuple(pieces)
        self._breaks = np.array([p.lo for p in self.pieces[1:]])
        self._derivs: dict[int, Piecewise] = {}

    def deriv(self, n: int = 1) -> Piecewise:
        if n == 0:
            return self
        if n not in self._derivs:
            self._derivs[n] = Piecewise(
                [Piece(p.lo, p.hi, p.origin, p.fn.deriv(n)) for p in self.pieces]
            )
        return self._derivs[n]

    def __call__(self, x, order: int = 0, side: str = "right"):
        """Evaluate the ``order``-th derivative; ``side='left'`` gives left limits at breakpoints."""
        f = self.deriv(order)
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._breaks, x, side="right" if side == "right" else "left")
        out = np.empty_like(x)
        for i, p in enumerate(f.pieces):
            m = idx == i
            if np.any(m):
                out[m] = p.fn(x[m] - p.origin)
        return out if out.ndim else float(out)

    def jump_integral(self, x: float, lam: float) -> float:
        return sum(p.jump_integral(x, lam) for p in self.pieces)


def zero_below(fn: ExpPoly, below: ExpPoly | None = None) -> Piecewise:
    """``fn`` on ``[0, inf)`` and ``below`` (default 0) on ``(-inf, 0)``."""
    below = ExpPoly() if below is None else below
    return Piecewise([Piece(-np.inf, 0.0, 0.0, below), Piece(0.0, np.inf, 0.0, fn)])
