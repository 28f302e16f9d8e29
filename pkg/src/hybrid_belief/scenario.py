"""Synthetic world: object placement, a rectangular patrol loop, and noisy
measurement generation with known data association.

A scenario fixes everything the simulation needs: object poses and true
classes, the robot's waypoint plan, the class prior, noise levels, the
retained hypothesis set, and whether the true assignment is inside it.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePlacement
from .priors import (
    DependentPrior,
    IndependentPrior,
    PriorModel,
    generate_random_prior,
    validate_assignment,
)
from .se2 import Pose2, bearing, between, wrap_angle
from .semantics import SemanticModelParams, SemanticObservation, sample_observation

# Measurement noise defaults: pose prior, odometry step, bearing variance,
# classifier latent std.
DEFAULT_PRIOR_COV = (0.01, 0.01, 0.001)
DEFAULT_ODOM_COV = (0.3, 0.3, 0.03)
DEFAULT_BEARING_VAR = 0.03
DEFAULT_SIGMA_S = 0.015

# Sensor footprint: objects within this radius and inside +-fov of the
# heading are observed (both bearing and classifier output together).
DEFAULT_VIS_RADIUS = 10.0
DEFAULT_VIS_FOV = math.pi / 2

# Rectangular counterclockwise loop, 1 m waypoint spacing, start lower-left.
ARENA_WIDTH = 10
ARENA_HEIGHT = 8


@dataclass
class NoiseConfig:
    prior_cov: np.ndarray = field(
        default_factory=lambda: np.diag(DEFAULT_PRIOR_COV).astype(float)
    )
    odom_cov: np.ndarray = field(
        default_factory=lambda: np.diag(DEFAULT_ODOM_COV).astype(float)
    )
    bearing_var: float = DEFAULT_BEARING_VAR
    sigma_s: float = DEFAULT_SIGMA_S

    def scaled(self, s: float) -> "NoiseConfig":
        """All covariances scaled by s (stds by sqrt(s)); used for the
        near-zero-noise limit tests."""
        return NoiseConfig(
            prior_cov=np.asarray(self.prior_cov) * s,
            odom_cov=np.asarray(self.odom_cov) * s,
            bearing_var=self.bearing_var * s,
            sigma_s=self.sigma_s * math.sqrt(s),
        )


def rectangle_waypoints(width: int = ARENA_WIDTH, height: int = ARENA_HEIGHT) -> list[Pose2]:
    """Counterclockwise rectangular loop with 1 m spacing; heading along the
    direction of motion, turning at corners. Closes back on the start."""
    corners = [(0, 0), (width, 0), (width, height), (0, height), (0, 0)]
    points: list[tuple[float, float]] = []
    for (x0, y0), (x1, y1) in zip(corners[:-1], corners[1:]):
        steps = int(round(math.hypot(x1 - x0, y1 - y0)))
        for i in range(steps):
            points.append((x0 + (x1 - x0) * i / steps, y0 + (y1 - y0) * i / steps))
    points.append(points[0])
    out = []
    for i, (x, y) in enumerate(points):
        nx, ny = points[i + 1] if i + 1 < len(points) else points[1]
        out.append(Pose2(x, y, math.atan2(ny - y, nx - x)))
    return out


@dataclass
class Scenario:
    objects: list[tuple[Pose2, int]]  # (ground-truth pose, true class)
    waypoints: list[Pose2]
    prior: PriorModel
    noise: NoiseConfig
    retained: list[tuple]
    true_assignment: tuple
    placement: str  # "in" | "out"
    vis_radius: float = DEFAULT_VIS_RADIUS
    vis_fov: float = DEFAULT_VIS_FOV
    seed: int = 0

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_classes(self) -> int:
        return self.prior.n_classes

    @property
    def n_steps(self) -> int:
        return len(self.waypoints) - 1

    def semantic_params(self) -> SemanticModelParams:
        return SemanticModelParams(self.n_classes, self.noise.sigma_s)

    def visible_objects(self, t: int) -> list[int]:
        """Objects inside the sensor footprint at waypoint t."""
        robot = self.waypoints[t]
        out = []
        for oid, (pose, _) in enumerate(self.objects):
            dist = math.hypot(pose.x - robot.x, pose.y - robot.y)
            if dist > self.vis_radius or dist <= 1e-9:
                continue
            if abs(bearing(robot, (pose.x, pose.y))) <= self.vis_fov:
                out.append(oid)
        return out


def sample_distinct_assignments(
    n: int, m: int, count: int, exclude: set, rng: np.random.Generator
) -> list[tuple]:
    total = m**n
    if total - len(exclude) < count:
        raise InfeasiblePlacement(
            f"cannot pick {count} distinct assignments from {m}^{n} excluding {len(exclude)}"
        )
    if total <= 65536:
        pool = [c for c in itertools.product(range(1, m + 1), repeat=n) if c not in exclude]
        idx = rng.choice(len(pool), size=count, replace=False)
        return [pool[i] for i in sorted(idx)]
    out: list[tuple] = []
    seen = set(exclude)
    while len(out) < count:
        c = tuple(int(v) for v in rng.integers(1, m + 1, size=n))
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def generate(
    n_objects: int,
    n_classes: int,
    seed: int,
    placement: str = "in",
    dependent_prior: bool = False,
    n_retained: int = 8,
    noise: NoiseConfig | None = None,
) -> Scenario:
    """Random scenario, deterministic per seed.

    The retained set holds n_retained distinct assignments; it contains the
    true assignment iff placement is "in".
    """
    if placement not in ("in", "out"):
        raise ValueError("placement must be 'in' or 'out'")
    total = n_classes**n_objects
    needed = n_retained + (placement == "out")
    if total < needed:
        raise InfeasiblePlacement(
            f"{n_classes}^{n_objects} hypotheses cannot support "
            f"{n_retained} retained with placement={placement}"
        )
    rng = np.random.default_rng(seed)
    noise = noise if noise is not None else NoiseConfig()

    waypoints = rectangle_waypoints()
    positions = rng.uniform([1.5, 1.0], [ARENA_WIDTH - 1.5, ARENA_HEIGHT - 1.0],
                            size=(n_objects, 2))
    headings = rng.uniform(-math.pi, math.pi, size=n_objects)
    classes = rng.integers(1, n_classes + 1, size=n_objects)
    objects = [
        (Pose2(positions[i, 0], positions[i, 1], headings[i]), int(classes[i]))
        for i in range(n_objects)
    ]
    true_assignment = tuple(int(c) for c in classes)

    prior = generate_random_prior(n_objects, n_classes, dependent_prior, seed=seed + 1)

    if placement == "in":
        others = sample_distinct_assignments(
            n_objects, n_classes, n_retained - 1, {true_assignment}, rng
        )
        retained = [true_assignment] + others
    else:
        retained = sample_distinct_assignments(
            n_objects, n_classes, n_retained, {true_assignment}, rng
        )

    return Scenario(
        objects=objects,
        waypoints=waypoints,
        prior=prior,
        noise=noise,
        retained=retained,
        true_assignment=true_assignment,
        placement=placement,
        seed=seed,
    )


@dataclass
class StepMeasurements:
    """Everything the robot senses between waypoint t-1 and t."""

    odometry: Pose2
    bearings: list[tuple[int, float]]  # (object id, measured bearing)
    semantics: list[tuple[int, SemanticObservation]]


def step(scenario: Scenario, t: int, rng: np.random.Generator) -> StepMeasurements:
    """Simulate motion to waypoint t and all observations taken there.

    Valid for 1 <= t <= n_steps. Noise: odometry perturbed by a draw from the
    odometry covariance composed onto the true step, bearings by additive
    Gaussian noise, classifier outputs drawn from the semantic model at the
    object's true class.
    """
    if not 1 <= t <= scenario.n_steps:
        raise ValueError(f"step {t} outside [1, {scenario.n_steps}]")
    prev, here = scenario.waypoints[t - 1], scenario.waypoints[t]
    true_step = between(prev, here)
    eps = rng.multivariate_normal(np.zeros(3), scenario.noise.odom_cov)
    odometry = Pose2(
        true_step.x + eps[0], true_step.y + eps[1], wrap_angle(true_step.theta + eps[2])
    )

    params = scenario.semantic_params()
    sigma_b = math.sqrt(scenario.noise.bearing_var)
    bearings = []
    semantics = []
    for oid in scenario.visible_objects(t):
        pose, true_class = scenario.objects[oid]
        b = bearing(here, (pose.x, pose.y)) + sigma_b * rng.standard_normal()
        bearings.append((oid, wrap_angle(b)))
        semantics.append((oid, sample_observation(here, pose, true_class, params, rng)))
    return StepMeasurements(odometry=odometry, bearings=bearings, semantics=semantics)


# -- serialization ------------------------------------------------------------

def scenario_to_json(scenario: Scenario) -> str:
    """Canonical JSON (sorted keys, no whitespace): save/load/save is
    byte-identical."""
    if isinstance(scenario.prior, IndependentPrior):
        prior_doc = {"kind": "independent", "marginals": scenario.prior.marginals.tolist()}
    else:
        prior_doc = {
            "kind": "dependent",
            "table": scenario.prior.table.tolist(),
            "n_objects": scenario.prior.n_objects,
            "n_classes": scenario.prior.n_classes,
        }
    doc = {
        "schema": 1,
        "objects": [
            {"x": p.x, "y": p.y, "theta": p.theta, "true_class": c}
            for p, c in scenario.objects
        ],
        "waypoints": [[p.x, p.y, p.theta] for p in scenario.waypoints],
        "prior": prior_doc,
        "noise": {
            "prior_cov": np.asarray(scenario.noise.prior_cov).tolist(),
            "odom_cov": np.asarray(scenario.noise.odom_cov).tolist(),
            "bearing_var": scenario.noise.bearing_var,
            "sigma_s": scenario.noise.sigma_s,
        },
        "retained": [list(c) for c in scenario.retained],
        "true_assignment": list(scenario.true_assignment),
        "placement": scenario.placement,
        "vis_radius": scenario.vis_radius,
        "vis_fov": scenario.vis_fov,
        "seed": scenario.seed,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    if doc.get("schema") != 1:
        raise ValueError(f"unsupported scenario schema {doc.get('schema')}")
    if doc["prior"]["kind"] == "independent":
        prior: PriorModel = IndependentPrior(doc["prior"]["marginals"])
    else:
        prior = DependentPrior(
            doc["prior"]["table"],
            doc["prior"]["n_objects"],
            doc["prior"]["n_classes"],
        )
    n, m = prior.n_objects, prior.n_classes
    return Scenario(
        objects=[
            (Pose2(o["x"], o["y"], o["theta"]), int(o["true_class"]))
            for o in doc["objects"]
        ],
        waypoints=[Pose2(*w) for w in doc["waypoints"]],
        prior=prior,
        noise=NoiseConfig(
            prior_cov=np.asarray(doc["noise"]["prior_cov"], dtype=float),
            odom_cov=np.asarray(doc["noise"]["odom_cov"], dtype=float),
            bearing_var=float(doc["noise"]["bearing_var"]),
            sigma_s=float(doc["noise"]["sigma_s"]),
        ),
        retained=[validate_assignment(c, n, m) for c in doc["retained"]],
        true_assignment=validate_assignment(doc["true_assignment"], n, m),
        placement=doc["placement"],
        vis_radius=float(doc["vis_radius"]),
        vis_fov=float(doc["vis_fov"]),
        seed=int(doc["seed"]),
    )
