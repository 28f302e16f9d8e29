"""Hybrid-belief inference for semantic SLAM with hypothesis pruning.

Maintains a joint belief over robot/object poses and joint class
assignments; after pruning to a small retained set, answers posterior
queries three ways: naive renormalization, the exact normalizer for
independent class priors, or a guaranteed lower bound on the normalizer for
dependent priors, both updated incrementally.
"""

from .engine import EngineConfig, HypothesisEngine, ObservationRecord
from .errors import (
    AlreadyRetained,
    BoundaryObservation,
    CapacityExceeded,
    DegeneratePoint,
    DuplicateHypothesis,
    DuplicateObservation,
    HybridBeliefError,
    InfeasiblePlacement,
    InvalidClass,
    NonConvergence,
    NotRetained,
    SingularHessian,
    TensorTooLarge,
    TooManyHypotheses,
    UnknownObject,
    WrongPriorKind,
)
from .oracle import EnumerationResult, enumerate_hypotheses
from .priors import (
    DependentPrior,
    IndependentPrior,
    PriorModel,
    generate_random_prior,
    validate_assignment,
)
from .scenario import NoiseConfig, Scenario, generate, scenario_from_json, scenario_to_json
from .se2 import Pose2, bearing, between, compose, inverse, wrap_angle
from .semantics import (
    SemanticModelParams,
    SemanticObservation,
    log_likelihood,
    mean_logit,
    sample_observation,
    viewpoint_coeff,
)
from .slam import (
    GeometricBelief,
    GeometricSolver,
    MotionModel,
    TrajectorySample,
    draw_samples,
)

__version__ = "0.1.0"

__all__ = [
    "AlreadyRetained",
    "BoundaryObservation",
    "CapacityExceeded",
    "DegeneratePoint",
    "DependentPrior",
    "DuplicateHypothesis",
    "DuplicateObservation",
    "EngineConfig",
    "EnumerationResult",
    "GeometricBelief",
    "GeometricSolver",
    "HybridBeliefError",
    "HypothesisEngine",
    "IndependentPrior",
    "InfeasiblePlacement",
    "InvalidClass",
    "MotionModel",
    "NoiseConfig",
    "NonConvergence",
    "NotRetained",
    "ObservationRecord",
    "Pose2",
    "PriorModel",
    "Scenario",
    "SemanticModelParams",
    "SemanticObservation",
    "SingularHessian",
    "TensorTooLarge",
    "TooManyHypotheses",
    "TrajectorySample",
    "UnknownObject",
    "WrongPriorKind",
    "bearing",
    "between",
    "compose",
    "draw_samples",
    "enumerate_hypotheses",
    "generate",
    "generate_random_prior",
    "inverse",
    "log_likelihood",
    "mean_logit",
    "sample_observation",
    "scenario_from_json",
    "scenario_to_json",
    "validate_assignment",
    "viewpoint_coeff",
    "wrap_angle",
]
