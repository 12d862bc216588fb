"""Peakons, exact solutions and a Lagrangian solver for the modified
two-component Camassa-Holm system.

Modules: :mod:`m2ch.core` (peakon states and fields), :mod:`m2ch.peakons`
(multipeakon ODEs), :mod:`m2ch.closed_form` (exact antisymmetric pairs),
:mod:`m2ch.lagrangian` and :mod:`m2ch.kernel` (conservative continuation
through wave breaking), :mod:`m2ch.scenario`, :mod:`m2ch.verify` and
:mod:`m2ch.cli` (runs, self-checks, command line).
"""

__version__ = "0.1.0"

from .core import (EulerianSample, PeakonState, eval_derivatives, eval_rho_bar,
                   eval_u, sample, total_energy)

__all__ = [
    "__version__",
    "PeakonState",
    "EulerianSample",
    "eval_u",
    "eval_rho_bar",
    "eval_derivatives",
    "sample",
    "total_energy",
]
