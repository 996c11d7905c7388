"""Optimal dividend barriers with Poisson payment times for spectrally negative
Levy processes with hyperexponential jumps."""
from __future__ import annotations

from .barrier import BarrierSolution, b_star, bar_b, h, h_at_zero, positive_barrier_criterion
from .errors import DomainError, ModelError, NumericalError
from .levy import JumpTerm, LevyModel, PRESETS, ProblemSpec, laplace_exponent, preset
from .scale import ScaleBasis, bases, build_basis, find_roots, phi, two_sided_exit
from .simulate import DividendEstimate, SimConfig, sample_path, simulate_exit, simulate_value
from .sweeps import dominance_panel, h_curve, paper_figure, sensitivity
from .value import ValueFunction, classical_value, optimal_value, value, value_derivative
from .verify import VerificationReport, generator_apply, generator_identity_suite, hjb_check

__version__ = "0.1.0"
