"""How the optimal barrier moves with premium rate, claim intensity, claim size
and payment frequency, for the bounded- and unbounded-variation templates.

    python demos/sensitivity_tour.py
"""
from __future__ import annotations

import numpy as np

from periodic_dividends.sweeps import (FIGURE_GRIDS, SENSITIVITY_SIGMAS, b_star_column, sensitivity,
                                       sensitivity_template, value_matrix)


def describe(col: np.ndarray) -> str:
    d = np.diff(col)
    up, down = np.any(d > 1e-9), np.any(d < -1e-9)
    return {(True, False): "nondecreasing", (False, True): "nonincreasing",
            (True, True): "not monotone", (False, False): "flat"}[(bool(up), bool(down))]


def main():
    for sigma in SENSITIVITY_SIGMAS:
        print(f"sigma = {sigma}")
        for param, grid in FIGURE_GRIDS.items():
            t = sensitivity(sensitivity_template(sigma), param, grid)
            vals, bs = b_star_column(t)
            _, _, mat = value_matrix(t)
            k = int(np.argmax(bs))
            print(f"  {param:>6}: {len(vals)} values, b* {describe(bs)} "
                  f"(max {bs[k]:.3f} at {vals[k]:g}), v(5) from {mat[0, 25]:.3f} to {mat[-1, 25]:.3f}")


if __name__ == "__main__":
    main()
