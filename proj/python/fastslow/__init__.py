"""Fast/slow decomposition, stationary profiles and reaction-diffusion manifolds."""

import json as _json

from ._fastslow import (
    ConfigError,
    ContractViolation,
    ConvergenceError,
    DecompositionError,
    DivergenceError,
    Error,
    GqlDecomposition,
    IllPosedSampleError,
    LinearModel,
    MichaelisMentenModel,
    MichaelisMentenParams,
    NonEntryError,
    ParametrizationError,
    ReactionDiffusionModel,
    StabilityError,
    __version__,
    build_surrogate,
    equilibrium,
    eval_source,
    from_fast_slow_coords,
    integrate_to_steady,
    jacobian,
    pseudo_inverse,
    spectral_split,
    tangent_projector,
    to_fast_slow_coords,
)
from ._fastslow import run_pipeline as _run_pipeline


def run_pipeline(config=None, **overrides):
    """Runs every stage; config is a dict of run keys, overrides are merged on top."""
    merged = dict(config or {})
    merged.update(overrides)
    return _run_pipeline(_json.dumps(merged))
