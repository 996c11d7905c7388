"""Spectrally negative Levy model: drift, Brownian part, hyperexponential claims."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, ModelError

BOUNDED = "bounded"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class JumpTerm:
    """Downward jumps at ``rate`` with Exp(``lam``) sizes."""

    rate: float
    lam: float


def validate(sigma: float, c: float, jumps: Iterable) -> list[str]:
    """Return every violated model invariant; an empty list means the model is valid."""
    problems = []
    jumps = [j if isinstance(j, JumpTerm) else JumpTerm(*j) for j in jumps]
    if not np.isfinite(sigma) or sigma < 0:
        problems.append("sigma must be finite and nonnegative")
    if not np.isfinite(c):
        problems.append("drift must be finite")
    for j in jumps:
        if not (np.isfinite(j.rate) and j.rate > 0):
            problems.append(f"jump rate must be positive (got {j.rate})")
        if not (np.isfinite(j.lam) and j.lam > 0):
            problems.append(f"exponential parameter must be positive (got {j.lam})")
    lams = [j.lam for j in jumps]
    if len(set(lams)) != len(lams):
        problems.append("duplicate exponential parameters")
    if sigma == 0 and not c > 0:
        problems.append("drift must be positive when sigma=0")
    if sigma == 0 and not jumps:
        problems.append("a model with sigma=0 needs at least one jump term")
    return problems


@dataclass(frozen=True)
class LevyModel:
    """``X(t) = c t + sigma B(t) - (compound Poisson with hyperexponential sizes)``.

    ``c`` is the total linear coefficient of the Laplace exponent, i.e. the
    premium rate; with integrable jumps no separate compensator is kept.
    """

    c: float
    sigma: float = 0.0
    jumps: tuple[JumpTerm, ...] = field(default=())

    def __post_init__(self):
        jumps = tuple(j if isinstance(j, JumpTerm) else JumpTerm(*j) for j in self.jumps)
        jumps = tuple(JumpTerm(float(j.rate), float(j.lam)) for j in jumps)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "sigma", float(self.sigma))
        problems = validate(self.sigma, self.c, self.jumps)
        if problems:
            raise ModelError(problems)

    @classmethod
    def exponential(cls, c, sigma=0.0, kappa=1.0, lam=1.0):
        """Single exponential claim class, the model used for the numerical cases."""
        return cls(c=c, sigma=sigma, jumps=(JumpTerm(kappa, lam),))

    @property
    def rates(self) -> np.ndarray:
        return np.array([j.rate for j in self.jumps])

    @property
    def lams(self) -> np.ndarray:
        return np.array([j.lam for j in self.jumps])

    @property
    def total_rate(self) -> float:
        """Total jump intensity, the mass of the Levy measure."""
        return float(self.rates.sum())

    def jump_density(self, u):
        """Density of the Levy measure at jump size ``u > 0``."""
        u = np.asarray(u, dtype=float)
        return np.sum(self.rates * self.lams * np.exp(-np.multiply.outer(u, self.lams)), axis=-1)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "c": self.c,
            "jumps": [{"rate": j.rate, "lambda": j.lam} for j in self.jumps],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> LevyModel:
        if not isinstance(doc, dict):
            raise ModelError("model document must be a JSON object")
        unknown = set(doc) - {"sigma", "c", "jumps"}
        if unknown:
            raise ModelError(f"unknown model fields: {sorted(unknown)}")
        missing = {"sigma", "c", "jumps"} - set(doc)
        if missing:
            raise ModelError(f"missing model fields: {sorted(missing)}")
        jumps = []
        for j in doc["jumps"]:
            if not isinstance(j, dict) or set(j) != {"rate", "lambda"}:
                raise ModelError('each jump must have exactly the fields "rate" and "lambda"')
            jumps.append(JumpTerm(_number(j["rate"]), _number(j["lambda"])))
        return cls(c=_number(doc["c"]), sigma=_number(doc["sigma"]), jumps=tuple(jumps))

    @classmethod
    def from_json(cls, text: str) -> LevyModel:
        return cls.from_dict(json.loads(text))


def _number(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelError(f"expected a number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class ProblemSpec:
    """A model together with the discount rate ``q`` and observation rate ``r``."""

    model: LevyModel
    q: float
    r: float

    def __post_init__(self):
        problems = []
        if not (np.isfinite(self.q) and self.q > 0):
            problems.append("discount rate q must be positive")
        if not (np.isfinite(self.r) and self.r > 0):
            problems.append("observation rate r must be positive")
        if problems:
            raise ModelError(problems)
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "r", float(self.r))

    def replace(self, **kw) -> ProblemSpec:
        """Copy with any of ``c, sigma, kappa, lam, q, r`` changed (single-jump models for kappa/lam)."""
        m = self.model
        c = kw.pop("c", m.c)
        sigma = kw.pop("sigma", m.sigma)
        jumps = m.jumps
        if "kappa" in kw or "lam" in kw:
            if len(jumps) != 1:
                raise ModelError("kappa/lam overrides need a single jump term")
            jumps = (JumpTerm(kw.pop("kappa", jumps[0].rate), kw.pop("lam", jumps[0].lam)),)
        q = kw.pop("q", self.q)
        r = kw.pop("r", self.r)
        if kw:
            raise TypeError(f"unexpected overrides {sorted(kw)}")
        return ProblemSpec(LevyModel(c=c, sigma=sigma, jumps=jumps), q, r)

    def to_dict(self) -> dict:
        return {**self.model.to_dict(), "q": self.q, "r": self.r}

    @classmethod
    def from_dict(cls, doc: dict) -> ProblemSpec:
        if not isinstance(doc, dict):
            raise ModelError("config must be a JSON object")
        doc = dict(doc)
        missing = {"q", "r"} - set(doc)
        if missing:
            raise ModelError(f"missing config fields: {sorted(missing)}")
        q, r = _number(doc.pop("q")), _number(doc.pop("r"))
        return cls(LevyModel.from_dict(doc), q, r)


def variation_class(model: LevyModel) -> str:
    """Path variation; jump activity is finite so only the Brownian part matters."""
    return UNBOUNDED if model.sigma > 0 else BOUNDED


def laplace_exponent(model: LevyModel, theta):
    """``psi(theta) = c theta + sigma^2 theta^2 / 2 - sum_i kappa_i theta / (lam_i + theta)``.

    Defined on ``theta > -min(lam_i)`` and, by continuation, everywhere off
    the poles ``-lam_i``.
    """
    theta = np.asarray(theta, dtype=float)
    denom = np.add.outer(theta, model.lams)
    if np.any(denom == 0):
        raise DomainError("laplace exponent has a pole at theta = -lambda_i")
    jump = np.sum(model.rates * np.multiply.outer(theta, np.ones_like(model.lams)) / denom, axis=-1)
    out = model.c * theta + 0.5 * model.sigma**2 * theta**2 - jump
    return out if out.ndim else float(out)


def laplace_exponent_prime(model: LevyModel, theta):
    theta = np.asarray(theta, dtype=float)
    denom = np.add.outer(theta, model.lams)
    if np.any(denom == 0):
        raise DomainError("laplace exponent has a pole at theta = -lambda_i")
    out = model.c + model.sigma**2 * theta - np.sum(model.rates * model.lams / denom**2, axis=-1)
    return out if out.ndim else float(out)


PRESETS = {
    "case1": (0.2, 1.5),
    "case1p": (0.0, 1.5),
    "case2": (0.2, 0.1),
    "case2p": (0.0, 1.15),
    "case3": (0.2, 0.0),
    "case3p": (0.0, 0.1),
}


def preset(name: str) -> ProblemSpec:
    """The six numerical cases: kappa = lam = 1, r = 0.5, q = 0.05 with per-case sigma and c."""
    try:
        sigma, c = PRESETS[name]
    except KeyError:
        raise ModelError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return ProblemSpec(LevyModel.exponential(c=c, sigma=sigma), q=0.05, r=0.5)
