"""Synthetic viewpoint-dependent classifier model.

Classifier outputs live on the M-simplex and follow a logit-normal law whose
latent mean encodes how informative the current viewpoint is: seeing the
front of an object at close range pushes the output toward the true class,
seeing its back carries no information at all. Class M plays the role of the
uninformative label whose latent mean is always zero.

Convention: the latent Gaussian lives in R^(M-1) with covariance
sigma_s^2 * I; the M-th logit is pinned to 0 (additive logistic transform).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryObservation, DegeneratePoint, InvalidClass
from .se2 import Pose2, wrap_angle

# Observations at or below this distance from the simplex boundary are
# rejected; sampled observations are clamped to this margin and renormalized.
BOUNDARY_MARGIN = 1e-12

MIN_DISTANCE = 1e-9

# Distance below which the 1/dist falloff saturates (coefficient cap 1/2).
_RANGE_CAP = 2.0


@dataclass(frozen=True)
class SemanticModelParams:
    """Number of classes and latent standard deviation of the classifier."""

    n_classes: int
    sigma_s: float

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if not self.sigma_s > 0.0:
            raise ValueError("sigma_s must be positive")


class SemanticObservation:
    """One classifier output: a strictly positive M-vector summing to 1."""

    __slots__ = ("probs",)

    def __init__(self, probs) -> None:
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("observation must be a vector of at least 2 scores")
        if np.any(p <= 0.0):
            raise ValueError("observation entries must be positive")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("observation must sum to 1 within 1e-9")
        self.probs = p

    def __len__(self) -> int:
        return self.probs.size

    def __repr__(self) -> str:
        return f"SemanticObservation({self.probs.tolist()})"


def _relative_viewpoint(robot: Pose2, obj: Pose2) -> tuple[float, float]:
    """(theta, dist) of the robot-to-object relative pose."""
    dist = math.hypot(obj.x - robot.x, obj.y - robot.y)
    if dist <= MIN_DISTANCE:
        raise DegeneratePoint("robot and object positions coincide")
    theta = wrap_angle(obj.theta - robot.theta)
    return theta, dist


def viewpoint_coeff(robot: Pose2, obj: Pose2) -> float:
    """Informativeness of the viewpoint, in [0, 1].

    (1 - cos theta) * min(1/dist, 1/2): zero when the object faces away
    (theta = 0), maximal when facing the robot at close range.
    """
    theta, dist = _relative_viewpoint(robot, obj)
    return (1.0 - math.cos(theta)) * min(1.0 / dist, 1.0 / _RANGE_CAP)


def mean_logit(robot: Pose2, obj: Pose2, c: int, params: SemanticModelParams) -> np.ndarray:
    """Latent Gaussian mean for class c: e_c scaled by the viewpoint
    coefficient for c < M, the zero vector for the uninformative class M."""
    m = params.n_classes
    if not 1 <= c <= m:
        raise InvalidClass(f"class label {c} outside [1, {m}]")
    mu = np.zeros(m - 1)
    if c < m:
        mu[c - 1] = viewpoint_coeff(robot, obj)
    return mu


def sample_observation(
    robot: Pose2, obj: Pose2, c: int, params: SemanticModelParams, rng: np.random.Generator
) -> SemanticObservation:
    """Draw one classifier output for true class c at the given viewpoint."""
    mu = mean_logit(robot, obj, c, params)
    y = mu + params.sigma_s * rng.standard_normal(params.n_classes - 1)
    logits = np.concatenate([y, [0.0]])
    logits -= logits.max()
    z = np.exp(logits)
    z /= z.sum()
    # extreme draws can softmax onto the boundary; pull them inside
    z = np.clip(z, BOUNDARY_MARGIN, 1.0 - BOUNDARY_MARGIN)
    z /= z.sum()
    return SemanticObservation(z)


def _logit(probs: np.ndarray) -> np.ndarray:
    """Additive-logistic coordinates: log(z_i / z_M) for i < M."""
    z = np.clip(probs, BOUNDARY_MARGIN, 1.0 - BOUNDARY_MARGIN)
    z = z / z.sum()
    return np.log(z[:-1]) - np.log(z[-1])


def log_likelihood(
    z: SemanticObservation, robot: Pose2, obj: Pose2, c: int, params: SemanticModelParams
) -> float:
    """Exact logit-normal log-density of observation z under class c."""
    row = log_likelihood_all_classes(
        z,
        robot.as_array()[None, :],
        obj.as_array()[None, :],
        params,
    )
    m = params.n_classes
    if not 1 <= c <= m:
        raise InvalidClass(f"class label {c} outside [1, {m}]")
    return float(row[0, c - 1])


def log_likelihood_all_classes(
    z: SemanticObservation,
    robot_states: np.ndarray,
    object_states: np.ndarray,
    params: SemanticModelParams,
) -> np.ndarray:
    """Log-density of one observation under every class, at a batch of poses.

    robot_states and object_states are (S, 3) arrays of (x, y, theta); the
    result is (S, M). This is the hot path of the engine: the quadratic form
    ||v - e_c h||^2 expands to ||v||^2 - 2 h v_c + h^2 so all classes share
    one viewpoint evaluation per pose sample.
    """
    if np.any(z.probs <= BOUNDARY_MARGIN):
        raise BoundaryObservation(
            f"observation has entries <= {BOUNDARY_MARGIN}; density undefined"
        )
    m = params.n_classes
    if len(z) != m:
        raise ValueError(f"observation has {len(z)} entries, model has {m} classes")
    robot_states = np.asarray(robot_states, dtype=float)
    object_states = np.asarray(object_states, dtype=float)

    dx = object_states[:, 0] - robot_states[:, 0]
    dy = object_states[:, 1] - robot_states[:, 1]
    dist = np.hypot(dx, dy)
    if np.any(dist <= MIN_DISTANCE):
        raise DegeneratePoint("a pose sample puts the object on top of the robot")
    rel_theta = object_states[:, 2] - robot_states[:, 2]
    h = (1.0 - np.cos(rel_theta)) * np.minimum(1.0 / dist, 1.0 / _RANGE_CAP)

    v = _logit(z.probs)
    v_sq = float(v @ v)
    var = params.sigma_s**2
    # quad[s, c] = ||v||^2 - 2 h_s v_c + h_s^2 for c < M; ||v||^2 for c = M
    quad = np.empty((robot_states.shape[0], m))
    quad[:, :-1] = v_sq - 2.0 * np.outer(h, v) + (h**2)[:, None]
    quad[:, -1] = v_sq
    const = (
        -0.5 * (m - 1) * math.log(2.0 * math.pi)
        - (m - 1) * math.log(params.sigma_s)
        - float(np.log(z.probs).sum())
    )
    return const - quad / (2.0 * var)
