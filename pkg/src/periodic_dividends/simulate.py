"""Monte Carlo for the surplus under a periodic barrier strategy.

Event times (claims and dividend decisions) are sampled exactly from the
superposed Poisson stream. Between events the surplus is ``c t`` plus, when
``sigma > 0``, a Brownian increment drawn in one Gaussian step; ruin inside
such a segment is decided with the exact Brownian-bridge crossing
probability ``exp(-2 u0 u1 / (sigma^2 dt))``. The bounded-variation case is
exact in distribution.

Paths are simulated in fixed-size blocks, each with its own Philox stream
keyed by ``(seed, block index)``, and block results are summed in block order,
so the estimate does not depend on how many threads run the blocks.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .levy import LevyModel, ProblemSpec
from .value import classical_value

DEFAULT_TAIL = 1e-5


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 200_000
    horizon_t: float | None = None
    dt: float = 1e-3
    seed: int = 0
    antithetic: bool = False
    threads: int = 1
    block_size: int = 8192

    def horizon(self, q: float) -> float:
        """Default truncation time makes ``exp(-q T)`` equal to 1e-5."""
        return self.horizon_t if self.horizon_t is not None else math.log(1 / DEFAULT_TAIL) / q

    def check(self, sigma: float):
        if self.n_paths <= 0:
            raise DomainError("n_paths must be positive")
        if self.block_size <= 0:
            raise DomainError("block_size must be positive")
        if self.horizon_t is not None and not self.horizon_t > 0:
            raise DomainError("horizon_t must be positive")
        if sigma > 0 and not self.dt > 0:
            raise DomainError("dt must be positive when sigma > 0")
        if self.antithetic and (self.n_paths % 2 or self.block_size % 2):
            raise DomainError("antithetic sampling needs even n_paths and block_size")


@dataclass(frozen=True)
class DividendEstimate:
    mean: float
    std_error: float
    n_paths: int
    ruin_fraction: float
    truncation_bound: float
    seed: int
    horizon_t: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class ExitEstimate:
    up: float
    up_std_error: float
    down: float
    down_std_error: float
    n_paths: int


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _blocks(cfg: SimConfig) -> list[int]:
    full, rest = divmod(cfg.n_paths, cfg.block_size)
    return [cfg.block_size] * full + ([rest] if rest else [])


class _Draws:
    """Uniform and normal draws, mirrored across path pairs when antithetic."""

    def __init__(self, rng: np.random.Generator, n: int, antithetic: bool):
        self.rng, self.n, self.antithetic = rng, n, antithetic

    def uniform(self, idx):
        if not self.antithetic:
            return self.rng.random(idx.size)
        half = self.rng.random(self.n // 2)
        full = np.empty(self.n)
        full[0::2], full[1::2] = half, 1.0 - half
        return full[idx]

    def normal(self, idx):
        if not self.antithetic:
            return self.rng.standard_normal(idx.size)
        half = self.rng.standard_normal(self.n // 2)
        full = np.empty(self.n)
        full[0::2], full[1::2] = half, -half
        return full[idx]


def _exponential(u, rate):
    return -np.log1p(-u) / rate


def _pick_sizes(model: LevyModel, draws: _Draws, idx):
    """Claim sizes from the hyperexponential mixture."""
    lams = model.lams
    if lams.size == 1:
        return _exponential(draws.uniform(idx), lams[0])
    comp = np.searchsorted(np.cumsum(model.rates) / model.total_rate, draws.uniform(idx), side="right")
    comp = np.minimum(comp, lams.size - 1)
    return _exponential(draws.uniform(idx), lams[comp])


def _bridge_ruin(u0, u1, sigma, dt, bridge_u):
    """Exact crossing of 0 by a Brownian bridge from ``u0`` to ``u1`` over ``dt``."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        prod = np.maximum(u0, 0.0) * np.maximum(u1, 0.0)
        p = np.where(prod > 0, np.exp(-2.0 * prod / (sigma**2 * np.maximum(dt, 1e-300))), 1.0)
    return (u1 < 0) | (bridge_u < p)


def _value_block(spec: ProblemSpec, b: float, x0: float, horizon: float, n: int,
                 rng: np.random.Generator, antithetic: bool):
    m = spec.model
    q, r = spec.q, spec.r
    lam_tot = m.total_rate + r
    p_decision = r / lam_tot
    draws = _Draws(rng, n, antithetic)
    t = np.zeros(n)
    u = np.full(n, float(x0))
    pv = np.zeros(n)
    tail = np.zeros(n)
    ruined = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    if m.sigma > 0 and x0 == 0:
        idx = idx[:0]
        ruined[:] = True
    while idx.size:
        gap = _exponential(draws.uniform(idx), lam_tot)
        t_next = t[idx] + gap
        at_h = t_next >= horizon
        step = np.where(at_h, horizon - t[idx], gap)
        u_new = u[idx] + m.c * step
        if m.sigma > 0:
            u_new = u_new + m.sigma * np.sqrt(step) * draws.normal(idx)
            dead = _bridge_ruin(u[idx], u_new, m.sigma, step, draws.uniform(idx))
        else:
            dead = np.zeros(idx.size, dtype=bool)
        u[idx] = u_new
        t[idx] = np.where(at_h, horizon, t_next)
        ruined[idx[dead]] = True
        done = idx[at_h & ~dead]
        if done.size:
            tail[done] = math.exp(-q * horizon) * classical_value(spec, u[done])
        idx = idx[~dead & ~at_h]
        if not idx.size:
            break
        kind = draws.uniform(idx)
        dec = idx[kind < p_decision]
        over = dec[u[dec] > b]
        pv[over] += np.exp(-q * t[over]) * (u[over] - b)
        u[over] = b
        jmp = idx[kind >= p_decision]
        if jmp.size:
            u[jmp] -= _pick_sizes(m, draws, jmp)
            neg = jmp[u[jmp] < 0]
            ruined[neg] = True
        idx = idx[~ruined[idx]]

    samples = pv.reshape(-1, 2).mean(axis=1) if antithetic else pv
    return (float(samples.sum()), float(np.square(samples).sum()), samples.size,
            int(ruined.sum()), float(tail.sum()))


def _combine(parts, n_paths: int, seed: int, horizon: float) -> DividendEstimate:
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    k = sum(p[2] for p in parts)
    mean = total / k
    var = max(total_sq / k - mean**2, 0.0) * k / max(k - 1, 1)
    return DividendEstimate(
        mean=mean,
        std_error=math.sqrt(var / k),
        n_paths=n_paths,
        ruin_fraction=sum(p[3] for p in parts) / n_paths,
        truncation_bound=sum(p[4] for p in parts) / n_paths,
        seed=seed,
        horizon_t=horizon,
    )


def simulate_value(spec: ProblemSpec, b: float, x0: float, config: SimConfig = SimConfig()
                   ) -> DividendEstimate:
    """Estimate the expected discounted dividends paid until ruin.

    ``truncation_bound`` estimates ``E[exp(-q T) vbar(U_T)]`` over paths still
    alive at the horizon, an upper bound on the dividends cut off by
    truncation since no strategy beats the classical value.
    """
    config.check(spec.model.sigma)
    if not b >= 0:
        raise DomainError("barrier must be nonnegative")
    horizon = config.horizon(spec.q)
    if x0 < 0:
        return DividendEstimate(0.0, 0.0, config.n_paths, 1.0, 0.0, config.seed, horizon)
    sizes = _blocks(config)

    def run(i):
        return _value_block(spec, b, x0, horizon, sizes[i], block_rng(config.seed, i),
                            config.antithetic)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return _combine(parts, config.n_paths, config.seed, horizon)


@dataclass(frozen=True)
class PathEvent:
    time: float
    kind: str
    surplus_before: float
    surplus_after: float
    paid: float

    def to_dict(self) -> dict:
        return asdict(self)


def sample_path(spec: ProblemSpec, b: float, x0: float, rng: np.random.Generator,
                horizon_t: float | None = None, max_events: int = 1_000_000) -> list[PathEvent]:
    """Event log of one controlled path; ``b = inf`` never pays.

    Kinds are ``jump``, ``decision_pay``, ``decision_nopay`` and ``ruin``. The
    log ends at ruin or at the horizon.
    """
    m = spec.model
    horizon = horizon_t if horizon_t is not None else math.log(1 / DEFAULT_TAIL) / spec.q
    lam_tot = m.total_rate + spec.r
    cum = np.cumsum(m.rates) / m.total_rate
    t, u = 0.0, float(x0)
    log: list[PathEvent] = []
    if u < 0 or (u == 0 and m.sigma > 0):
        return [PathEvent(0.0, "ruin", u, u, 0.0)]
    for _ in range(max_events):
        gap = rng.exponential(1.0 / lam_tot)
        if t + gap >= horizon:
            break
        u_new = u + m.c * gap
        if m.sigma > 0:
            u_new += m.sigma * math.sqrt(gap) * rng.standard_normal()
            if _bridge_ruin(np.array(u), np.array(u_new), m.sigma, gap, rng.random()):
                log.append(PathEvent(t + gap, "ruin", u, u_new, 0.0))
                return log
        t, u = t + gap, u_new
        if rng.random() < spec.r / lam_tot:
            if u > b:
                log.append(PathEvent(t, "decision_pay", u, b, u - b))
                u = b
            else:
                log.append(PathEvent(t, "decision_nopay", u, u, 0.0))
        else:
            comp = min(int(np.searchsorted(cum, rng.random(), side="right")), len(cum) - 1)
            size = rng.exponential(1.0 / m.lams[comp])
            log.append(PathEvent(t, "jump", u, u - size, 0.0))
            u -= size
            if u < 0:
                log.append(PathEvent(t, "ruin", u, u, 0.0))
                return log
    return log


def discounted_dividends(log: list[PathEvent], q: float) -> float:
    return sum(math.exp(-q * e.time) * e.paid for e in log)


def _exit_block(model: LevyModel, q: float, x0: float, b: float, n: int, dt: float,
                horizon: float, rng: np.random.Generator):
    kappa = model.total_rate
    t = np.zeros(n)
    u = np.full(n, float(x0))
    up = np.zeros(n)
    down = np.zeros(n)
    idx = np.arange(n)
    if x0 >= b:
        return np.ones(n), down
    if model.sigma > 0 and x0 == 0:
        return up, np.ones(n)
    draws = _Draws(rng, n, False)
    next_jump = _exponential(draws.uniform(idx), kappa) if kappa > 0 else np.full(n, np.inf)
    while idx.size:
        tj = next_jump[idx]
        if model.sigma == 0:
            # linear climb: the upper level is reached before the next claim or not at all
            reach = (b - u[idx]) / model.c
            hit = reach <= tj
            up[idx[hit]] = np.exp(-q * (t[idx[hit]] + reach[hit]))
            rest = idx[~hit]
            t[rest] += tj[~hit]
            u[rest] += model.c * tj[~hit] - _pick_sizes(model, draws, rest)
            neg = rest[u[rest] < 0]
            down[neg] = np.exp(-q * t[neg])
            alive = rest[u[rest] >= 0]
            next_jump[alive] = _exponential(draws.uniform(alive), kappa)
        else:
            step = np.minimum(dt, tj)
            u0 = u[idx]
            u1 = u0 + model.c * step + model.sigma * np.sqrt(step) * draws.normal(idx)
            s2 = model.sigma**2 * step
            with np.errstate(over="ignore", invalid="ignore"):
                p_down = np.where(u1 > 0, np.exp(-2 * u0 * u1 / s2), 1.0)
                p_up = np.where(u1 < b, np.exp(-2 * (b - u0) * (b - u1) / s2), 1.0)
            w = draws.uniform(idx)
            t[idx] += step
            went_down = (u1 <= 0) | ((u1 < b) & (w < p_down))
            went_up = ~went_down & ((u1 >= b) | (w < p_down + p_up))
            down[idx[went_down]] = np.exp(-q * t[idx[went_down]])
            up[idx[went_up]] = np.exp(-q * t[idx[went_up]])
            u[idx] = u1
            cont = ~went_down & ~went_up
            jumped = cont & (step == tj)
            next_jump[idx] = tj - step
            jidx = idx[jumped]
            if jidx.size:
                u[jidx] -= _pick_sizes(model, draws, jidx)
                neg = jidx[u[jidx] < 0]
                down[neg] = np.exp(-q * t[neg])
                next_jump[jidx] = _exponential(draws.uniform(jidx), kappa)
            alive = idx[cont]
            alive = alive[u[alive] >= 0]
        idx = alive[t[alive] < horizon]
    return up, down


def simulate_exit(model: LevyModel, q: float, x0: float, b: float,
                  config: SimConfig = SimConfig()) -> ExitEstimate:
    """Estimate ``E[e^{-q tau_b^+}; up first]`` and ``E[e^{-q tau_0^-}; down first]``.

    Exact for ``sigma = 0``; for ``sigma > 0`` the path is stepped with ``dt``
    and both levels are checked with bridge crossing probabilities.
    """
    if not 0 <= x0 <= b:
        raise DomainError("start point must lie in [0, b]")
    config.check(model.sigma)
    horizon = config.horizon(q)
    ups, downs = [], []
    for i, n in enumerate(_blocks(config)):
        up, down = _exit_block(model, q, x0, b, n, config.dt, horizon, block_rng(config.seed, i))
        ups.append(up)
        downs.append(down)
    up, down = np.concatenate(ups), np.concatenate(downs)
    k = up.size
    return ExitEstimate(float(up.mean()), float(up.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                        float(down.mean()), float(down.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                        k)
