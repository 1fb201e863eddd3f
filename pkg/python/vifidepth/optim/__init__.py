from .objective import LossWeights, ObjectiveResult, objective_and_gradient
from .optimizer import OptimConfig, OptimizeResult, OptimStatus, initial_params, optimize
from .params import DepthParam, ObjectiveParams, OptimError, ParamLayout, decode_depth, sigma_from_depth

__all__ = [
    "DepthParam",
    "LossWeights",
    "ObjectiveParams",
    "ObjectiveResult",
    "OptimConfig",
    "OptimError",
    "OptimStatus",
    "OptimizeResult",
    "ParamLayout",
    "decode_depth",
    "initial_params",
    "objective_and_gradient",
    "optimize",
    "sigma_from_depth",
]
