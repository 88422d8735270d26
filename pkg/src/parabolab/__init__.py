"""Numerical laboratory for degenerate parabolic maximum principles and singular SDEs.

Subpackages by capability:

- :mod:`parabolab.mixed_norms`: space-time grid functions, mixed and localized norms.
- :mod:`parabolab.embeddings`: exponent predicates and interpolation-inequality checks.
- :mod:`parabolab.variational`: monotone-cutoff variational problems and oracles.
- :mod:`parabolab.pde_solver`: conservative solver for div-form degenerate equations.
- :mod:`parabolab.degiorgi`: level-set schedules, recursion lemma, energy diagnostics.
- :mod:`parabolab.sde_mc`: Euler-Maruyama ensembles, occupation-time and tightness stats.
- :mod:`parabolab.acceptance`: the executable acceptance suite.
- :mod:`parabolab.cli`: the ``parabolab`` experiment runner.
"""

__version__ = "0.1.0"

from .mixed_norms import (  # noqa: F401
    INF,
    Cylinder,
    GridFunction,
    MixedNormSpec,
    from_callable,
    localized_norm,
    minkowski_gap,
    mixed_norm,
    v_norm,
)
from .embeddings import ExponentConfig, kappa_from_p0  # noqa: F401
from .variational import CutoffProfile, VariationalProblem  # noqa: F401
from .pde_solver import CoefficientField, SolverConfig, solve  # noqa: F401
from .degiorgi import LevelSchedule, RecursionParams, recursion_simulate  # noqa: F401
from .sde_mc import PathEnsemble, build_coefficients, euler_maruyama  # noqa: F401
