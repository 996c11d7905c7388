"""Parameter sweeps: h-curves, dominance panels and sensitivity tables.

Every sweep returns a :class:`Table` whose rows follow the input grid order.
Rows are computed independently, so a parameter value that yields an invalid
model or a numerical failure is recorded in ``Table.skipped`` instead of
aborting the sweep.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .barrier import b_star, bar_b, h
from .errors import DomainError, ModelError, NumericalError
from .levy import PRESETS, ProblemSpec, preset
from .value import classical_value, value_function

PARAMS = {"c": "c", "kappa": "kappa", "lambda": "lam", "r": "r"}
SENSITIVITY_BASE = dict(c=1.5, kappa=1.0, lam=1.0, q=0.05, r=0.5)
SENSITIVITY_SIGMAS = (0.2, 0.0)
DEFAULT_X_GRID = tuple(np.linspace(0.0, 10.0, 51))


def _steps(start: int, stop: int, scale: float) -> list[float]:
    return [round(k * scale, 10) for k in range(start, stop + 1)]


FIGURE_GRIDS = {
    "c": _steps(10, 50, 0.1),
    "kappa": _steps(1, 9, 0.001) + _steps(1, 9, 0.01) + _steps(1, 30, 0.1),
    "lambda": _steps(1, 30, 0.1) + _steps(4, 9, 1.0) + [float(v) for v in range(15, 101, 5)],
    "r": _steps(1, 10, 0.001) + _steps(2, 9, 0.01) + _steps(1, 9, 0.1) + _steps(1, 100, 1.0),
}
FIGURE_PARAMS = {3: "c", 4: "kappa", 5: "lambda", 6: "r"}
CASES = tuple(PRESETS)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    return "%.12g" % v


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    skipped: list[tuple[float, str]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def h_curve(spec: ProblemSpec, b_grid=None) -> Table:
    """``h`` on ``b_grid`` with ``b*`` and ``b_bar`` inserted and flagged when positive."""
    b_grid = np.linspace(0.0, 20.0, 401)[1:] if b_grid is None else np.asarray(b_grid, dtype=float)
    if np.any(b_grid <= 0) or np.any(np.diff(b_grid) <= 0):
        raise DomainError("b_grid must be sorted and positive")
    sol = b_star(spec)
    marks = {x for x in (sol.b_star, sol.b_bar) if x > 0}
    pts = np.union1d(b_grid, sorted(marks))
    hv = h(spec, pts)
    rows = [(float(b), float(v), b == sol.b_star, b == sol.b_bar) for b, v in zip(pts, hv)]
    return Table(("b", "h", "is_bstar", "is_bbar"), rows)


def figure2_barriers(spec: ProblemSpec) -> list[float]:
    """Suboptimal barrier list of the dominance figure, plus ``b*`` itself."""
    sol = b_star(spec)
    bs, bb = sol.b_star, sol.b_bar
    if bs > 0:
        cands = [0.0, bs / 4, bs / 2, 3 * bs / 4, (bs + bb) / 2, bb, bb + (bb - bs) / 2]
    elif bb > 0:
        cands = [bb / 2, bb, 3 * bb / 2]
    else:
        cands = [1 / 3, 2 / 3, 1.0]
    return sorted({bs, *cands})


def dominance_x_grid(spec: ProblemSpec, n: int = 201) -> np.ndarray:
    return np.linspace(0.0, 2 * max(bar_b(spec), 1.0) + 2.0, n)


def dominance_panel(spec: ProblemSpec, b_list=None, x_grid=None) -> Table:
    b_list = figure2_barriers(spec) if b_list is None else [float(b) for b in b_list]
    x_grid = dominance_x_grid(spec) if x_grid is None else np.asarray(x_grid, dtype=float)
    rows = []
    for b in b_list:
        vals = value_function(spec, b)(x_grid)
        rows.extend((float(x), b, float(v)) for x, v in zip(x_grid, vals))
    return Table(("x", "b", "v"), rows)


def dominance_gap(table: Table, b_opt: float) -> float:
    """Largest ``max_b v_b(x) - v_{b_opt}(x)`` over the panel; nonpositive when ``b_opt`` dominates."""
    x, b, v = table.column("x"), table.column("b"), table.column("v")
    gap = -math.inf
    for xi in np.unique(x):
        m = x == xi
        opt = v[m & (b == b_opt)]
        if opt.size:
            gap = max(gap, float(v[m].max() - opt[0]))
    return gap


@lru_cache(maxsize=4096)
def _sensitivity_row(spec: ProblemSpec, param: str, value: float, x_grid: tuple):
    s = spec.replace(**{PARAMS[param]: value})
    sol = b_star(s)
    v = value_function(s, sol.b_star)(np.array(x_grid))
    return sol.b_star, sol.b_bar, tuple(float(t) for t in v), s


def sensitivity(spec: ProblemSpec, param: str, values, x_grid=DEFAULT_X_GRID,
                threads: int = 1) -> Table:
    """``b*``, ``b_bar`` and ``v_{b*}`` on ``x_grid`` for each parameter value.

    For ``param='r'`` the classical value is appended as rows with
    ``value = inf``, whose ``b_star`` column holds ``b_bar``.
    """
    if param not in PARAMS:
        raise DomainError(f"param must be one of {sorted(PARAMS)}")
    values = [float(v) for v in values]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError("values must be sorted increasing")
    x_grid = tuple(float(x) for x in x_grid)

    def run(val):
        try:
            return _sensitivity_row(spec, param, val, x_grid)
        except (ModelError, DomainError, NumericalError, ValueError) as exc:
            return exc

    out = Table(("param", "value", "b_star", "b_bar", "x", "v"))
    for val, res in zip(values, _map(run, values, threads)):
        if isinstance(res, Exception):
            out.skipped.append((val, f"{type(res).__name__}: {res}"))
            continue
        bs, bb, vs, _ = res
        out.rows.extend((param, val, bs, bb, x, v) for x, v in zip(x_grid, vs))
    if param == "r":
        bb = bar_b(spec)
        vbar = classical_value(spec, np.array(x_grid))
        out.rows.extend(("r", math.inf, bb, bb, x, float(v)) for x, v in zip(x_grid, vbar))
    return out


def value_matrix(table: Table):
    """``(values, x_grid, V)`` from a sensitivity table, classical rows excluded."""
    vals, xs, vs = table.column("value"), table.column("x"), table.column("v")
    finite = np.isfinite(vals)
    uv = np.unique(vals[finite])
    ux = np.unique(xs[finite])
    mat = np.full((uv.size, ux.size), np.nan)
    mat[np.searchsorted(uv, vals[finite]), np.searchsorted(ux, xs[finite])] = vs[finite]
    return uv, ux, mat


def b_star_column(table: Table):
    vals, bs = table.column("value"), table.column("b_star")
    finite = np.isfinite(vals)
    uv, idx = np.unique(vals[finite], return_index=True)
    return uv, bs[finite][idx]


def sensitivity_template(sigma: float) -> ProblemSpec:
    return preset("case1p").replace(sigma=sigma, **SENSITIVITY_BASE)


def paper_figure(n: int, out_dir: str | Path, threads: int = 1) -> list[Path]:
    """Write the CSVs behind one of the six numerical figures; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if n in (1, 2):
        for name in CASES:
            spec = preset(name)
            table = h_curve(spec) if n == 1 else dominance_panel(spec)
            path = out / f"fig{n}_{'h' if n == 1 else 'dominance'}_{name}.csv"
            table.to_csv(path)
            written.append(path)
    elif n in FIGURE_PARAMS:
        param = FIGURE_PARAMS[n]
        for sigma in SENSITIVITY_SIGMAS:
            table = sensitivity(sensitivity_template(sigma), param, FIGURE_GRIDS[param],
                                threads=threads)
            path = out / f"fig{n}_{param}_sigma{sigma:g}.csv"
            table.to_csv(path)
            written.append(path)
    else:
        raise DomainError("figure number must be in 1..6")
    return written
