"""Geometric-only estimation: a dense Gauss-Newton solver over robot poses
and object positions with prior, odometry, and bearing factors.

The solved Gaussian (Laplace approximation: mean at the MAP, covariance from
the inverse Gauss-Newton Hessian) is the geometric belief all semantic
expectations sample from. Problems here are desk scale, so everything is
dense; the performance-sensitive code lives in the engine, not here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonConvergence, SingularHessian
from .se2 import Pose2, bearing, compose, wrap_angle

# Bearing-only landmarks are unobservable from one sighting, and with noisy
# near-parallel rays the least-squares depth is unidentifiable: the cost can
# always be driven to zero by sliding the landmark onto the sensor. A
# landmark's bearing factors therefore stay out of the optimization until the
# spread of its measured ray directions exceeds ACTIVATION_SPREAD_SIGMAS
# times the bearing noise AND the rays triangulate to a point at plausible
# range from every sighting pose; until then the landmark sits on its first
# ray at INIT_RANGE, held by a weak position prior. If an activated landmark
# still slides onto the trajectory (within DEMOTION_RADIUS of a pose, the
# degenerate zero-residual configuration), it is demoted back to pending and
# the solve restarts without its bearing factors.
INIT_RANGE = 3.0
WEAK_PRIOR_SIGMA = 10.0
ACTIVATION_SPREAD_SIGMAS = 3.0
MIN_TRIANGULATED_RANGE = 1.0
MAX_TRIANGULATED_RANGE = 50.0
DEMOTION_RADIUS = 0.25


@dataclass(frozen=True)
class MotionModel:
    """Relative-pose process noise for one odometry step."""

    process_noise_cov: np.ndarray  # 3x3, (m^2, m^2, rad^2)

    def __post_init__(self) -> None:
        cov = np.asarray(self.process_noise_cov, dtype=float)
        if cov.shape != (3, 3):
            raise ValueError("process noise must be 3x3")
        if not np.allclose(cov, cov.T):
            raise ValueError("process noise must be symmetric")
        np.linalg.cholesky(cov)  # SPD check
        object.__setattr__(self, "process_noise_cov", cov)


@dataclass
class GeometricBelief:
    """Joint Gaussian over all robot poses and object positions.

    index maps ("pose", t) to the offset of a 3-dof pose block and
    ("object", id) to the offset of a 2-dof position block.
    """

    mean: np.ndarray
    covariance: np.ndarray
    index: dict[tuple[str, int], int]
    n_poses: int
    object_ids: list[int]

    def pose_mean(self, t: int) -> Pose2:
        off = self.index[("pose", t)]
        return Pose2.from_array(self.mean[off : off + 3])

    def object_mean(self, object_id: int) -> np.ndarray:
        off = self.index[("object", object_id)]
        return self.mean[off : off + 2].copy()

    def marginal(self, kind: str, ident: int) -> np.ndarray:
        off = self.index[(kind, ident)]
        dim = 3 if kind == "pose" else 2
        return self.covariance[off : off + dim, off : off + dim].copy()


@dataclass
class TrajectorySample:
    """One joint draw from the geometric belief, as poses."""

    robot_poses: list[Pose2]
    object_poses: list[Pose2]


def _sqrt_info(cov: np.ndarray) -> np.ndarray:
    """Whitening matrix W with W^T W = cov^{-1}."""
    try:
        return np.linalg.cholesky(np.linalg.inv(np.asarray(cov, dtype=float))).T
    except np.linalg.LinAlgError as exc:
        raise SingularHessian(f"noise covariance not SPD: {exc}") from exc


def _triangulate(origins: list[np.ndarray], directions: list[float]) -> Optional[np.ndarray]:
    """Least-squares intersection of 2D rays (origin, global angle), or None
    when the rays are near-parallel or the fix lands at an implausible range
    from any of the ray origins."""
    coeff = np.zeros((2, 2))
    rhs = np.zeros(2)
    for origin, angle in zip(origins, directions):
        d = np.array([math.cos(angle), math.sin(angle)])
        perp = np.eye(2) - np.outer(d, d)
        coeff += perp
        rhs += perp @ origin
    if np.linalg.cond(coeff) > 1e8:
        return None
    point = np.linalg.solve(coeff, rhs)
    ranges = [
        float(np.dot([math.cos(a), math.sin(a)], point - o))
        for o, a in zip(origins, directions)
    ]
    if min(ranges) < MIN_TRIANGULATED_RANGE or max(ranges) > MAX_TRIANGULATED_RANGE:
        return None
    return point


class GeometricSolver:
    """Factor graph over SE(2) poses and 2D landmarks, solved by dense
    Gauss-Newton with backtracking (accepted cost never increases)."""

    def __init__(self, prior_mean: Pose2, prior_cov) -> None:
        self._poses: list[np.ndarray] = [prior_mean.as_array()]
        self._objects: dict[int, np.ndarray] = {}
        self._object_order: list[int] = []
        self._priors: list[tuple[int, np.ndarray, np.ndarray]] = [
            (0, prior_mean.as_array(), _sqrt_info(prior_cov))
        ]
        self._odometry: list[tuple[int, int, np.ndarray, np.ndarray]] = []
        self._bearings: list[tuple[int, int, float, float]] = []
        self._object_priors: dict[int, tuple[np.ndarray, float]] = {}
        self._active: set[int] = set()

    @property
    def n_poses(self) -> int:
        return len(self._poses)

    @property
    def object_ids(self) -> list[int]:
        return list(self._object_order)

    def add_odometry(self, step: Pose2, noise: MotionModel) -> None:
        """Register pose k+1 and the relative-pose factor from pose k."""
        prev = len(self._poses) - 1
        guess = compose(Pose2.from_array(self._poses[prev]), step)
        self._poses.append(guess.as_array())
        self._odometry.append(
            (prev, prev + 1, step.as_array(), _sqrt_info(noise.process_noise_cov))
        )

    def add_bearing(
        self, robot_index: int, object_id: int, bearing_meas: float, sigma: float
    ) -> None:
        """Register one bearing factor; first sighting of an object creates
        its variable on the measured ray. The object's bearing factors join
        the optimization once its ray directions spread beyond the noise."""
        if not 0 <= robot_index < len(self._poses):
            raise ValueError(f"no robot pose {robot_index}")
        if sigma <= 0.0:
            raise ValueError("bearing sigma must be positive")
        if object_id not in self._objects:
            p = Pose2.from_array(self._poses[robot_index])
            ray = p.theta + bearing_meas
            init = p.position + INIT_RANGE * np.array([math.cos(ray), math.sin(ray)])
            self._objects[object_id] = init
            self._object_order.append(object_id)
            self._object_priors[object_id] = (init.copy(), 1.0 / WEAK_PRIOR_SIGMA)
        self._bearings.append((robot_index, object_id, float(bearing_meas), 1.0 / sigma))
        if object_id not in self._active:
            self._maybe_activate(object_id)

    def _maybe_activate(self, object_id: int) -> None:
        """Admit an object's bearing factors once the global directions of its
        measured rays disagree by more than the measurement noise can explain
        and the rays triangulate sanely; before that, depth is unidentifiable
        and the factors would let Gauss-Newton collapse the landmark onto the
        trajectory."""
        sightings = [
            (t, meas, w) for t, oid, meas, w in self._bearings if oid == object_id
        ]
        dirs = [wrap_angle(self._poses[t][2] + meas) for t, meas, _ in sightings]
        spread = max(
            (abs(wrap_angle(a - b)) for a in dirs for b in dirs), default=0.0
        )
        threshold = ACTIVATION_SPREAD_SIGMAS * max(1.0 / w for _, _, w in sightings)
        if spread <= threshold:
            return
        origins = [self._poses[t][:2].copy() for t, _, _ in sightings]
        point = _triangulate(origins, dirs)
        if point is None:
            return
        self._active.add(object_id)
        self._objects[object_id] = point
        self._object_priors[object_id] = (point.copy(), 1.0 / WEAK_PRIOR_SIGMA)

    def _reset_to_first_ray(self, object_id: int) -> None:
        """Put a landmark back at the pending-state init on its first ray."""
        t, meas = next((t, m) for t, oid, m, _ in self._bearings if oid == object_id)
        p = Pose2.from_array(self._poses[t])
        ray = p.theta + meas
        init = p.position + INIT_RANGE * np.array([math.cos(ray), math.sin(ray)])
        self._objects[object_id] = init
        self._object_priors[object_id] = (init.copy(), 1.0 / WEAK_PRIOR_SIGMA)

    def _demote_collapsed(self) -> bool:
        """Retract the bearing factors of the active landmark closest to the
        trajectory if it has slid within DEMOTION_RADIUS of a pose; such a
        landmark is in the degenerate configuration where its residuals vanish
        regardless of the true geometry. Returns False when none qualifies."""
        worst, worst_dist = None, DEMOTION_RADIUS
        for oid in self._active:
            est = self._objects[oid]
            dist = min(
                math.hypot(p[0] - est[0], p[1] - est[1]) for p in self._poses
            )
            if dist < worst_dist:
                worst, worst_dist = oid, dist
        if worst is None:
            return False
        self._active.discard(worst)
        self._reset_to_first_ray(worst)
        return True

    # -- packing -------------------------------------------------------------

    def _layout(self) -> tuple[dict[tuple[str, int], int], int]:
        index: dict[tuple[str, int], int] = {}
        off = 0
        for t in range(len(self._poses)):
            index[("pose", t)] = off
            off += 3
        for oid in self._object_order:
            index[("object", oid)] = off
            off += 2
        return index, off

    def _pack(self, index: dict, dim: int) -> np.ndarray:
        x = np.empty(dim)
        for t, p in enumerate(self._poses):
            x[index[("pose", t)] : index[("pose", t)] + 3] = p
        for oid in self._object_order:
            off = index[("object", oid)]
            x[off : off + 2] = self._objects[oid]
        return x

    def _n_residuals(self) -> int:
        active_bearings = sum(1 for _, oid, _, _ in self._bearings if oid in self._active)
        return (
            3 * len(self._priors)
            + 3 * len(self._odometry)
            + active_bearings
            + 2 * len(self._object_priors)
        )

    def _linearize(
        self, x: np.ndarray, index: dict, with_jacobian: bool = True
    ) -> tuple[np.ndarray, Optional[np.ndarray]]:
        """Whitened residual vector and (optionally) its Jacobian at x."""
        r = np.zeros(self._n_residuals())
        jac = np.zeros((r.size, x.size)) if with_jacobian else None
        row = 0

        for t, mean, w in self._priors:
            off = index[("pose", t)]
            raw = x[off : off + 3] - mean
            raw[2] = wrap_angle(raw[2])
            r[row : row + 3] = w @ raw
            if jac is not None:
                jac[row : row + 3, off : off + 3] = w
            row += 3

        for i, j, meas, w in self._odometry:
            oi, oj = index[("pose", i)], index[("pose", j)]
            ai = x[oi : oi + 3]
            bj = x[oj : oj + 3]
            c, s = math.cos(ai[2]), math.sin(ai[2])
            dx, dy = bj[0] - ai[0], bj[1] - ai[1]
            pred = np.array(
                [c * dx + s * dy, -s * dx + c * dy, wrap_angle(bj[2] - ai[2])]
            )
            raw = pred - meas
            raw[2] = wrap_angle(raw[2])
            r[row : row + 3] = w @ raw
            if jac is not None:
                d_ai = np.array(
                    [
                        [-c, -s, -s * dx + c * dy],
                        [s, -c, -c * dx - s * dy],
                        [0.0, 0.0, -1.0],
                    ]
                )
                d_bj = np.array(
                    [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
                )
                jac[row : row + 3, oi : oi + 3] = w @ d_ai
                jac[row : row + 3, oj : oj + 3] = w @ d_bj
            row += 3

        for t, oid, meas, w in self._bearings:
            if oid not in self._active:
                continue
            op = index[("pose", t)]
            ol = index[("object", oid)]
            px, py, pth = x[op : op + 3]
            lx, ly = x[ol : ol + 2]
            dx, dy = lx - px, ly - py
            d2 = dx * dx + dy * dy
            pred = math.atan2(dy, dx) - pth
            r[row] = w * wrap_angle(pred - meas)
            if jac is not None:
                jac[row, op : op + 3] = w * np.array([dy / d2, -dx / d2, -1.0])
                jac[row, ol : ol + 2] = w * np.array([-dy / d2, dx / d2])
            row += 1

        for oid, (mean, w) in self._object_priors.items():
            ol = index[("object", oid)]
            r[row : row + 2] = w * (x[ol : ol + 2] - mean)
            if jac is not None:
                jac[row, ol] = w
                jac[row + 1, ol + 1] = w
            row += 2

        return r, jac

    def _cost(self, x: np.ndarray, index: dict) -> float:
        r, _ = self._linearize(x, index, with_jacobian=False)
        return 0.5 * float(r @ r)

    @staticmethod
    def _wrap_state(x: np.ndarray, index: dict, n_poses: int) -> np.ndarray:
        for t in range(n_poses):
            off = index[("pose", t)] + 2
            x[off] = wrap_angle(x[off])
        return x

    def solve(self, max_iters: int = 50, rel_tol: float = 1e-9) -> GeometricBelief:
        """Gauss-Newton MAP with Laplace covariance.

        Raises NonConvergence if the relative cost decrease still exceeds
        rel_tol after max_iters accepted iterations, SingularHessian if the
        normal equations or the covariance are rank-deficient. A solve that
        fails -- or converges -- with a landmark collapsed onto the trajectory
        demotes that landmark back to pending and retries without its bearing
        factors.
        """
        for _ in range(len(self._object_order) + 1):
            try:
                belief = self._solve_once(max_iters, rel_tol)
            except (SingularHessian, NonConvergence):
                if not self._demote_collapsed():
                    raise
                continue
            if self._demote_collapsed():
                continue
            return belief
        raise SingularHessian("landmark demotion did not stabilize the problem")

    def _solve_once(self, max_iters: int, rel_tol: float) -> GeometricBelief:
        index, dim = self._layout()
        x = self._pack(index, dim)
        try:
            cost = self._cost(x, index)
            converged = False
            for _ in range(max_iters):
                r, jac = self._linearize(x, index)
                hess = jac.T @ jac
                try:
                    chol = np.linalg.cholesky(hess)
                except np.linalg.LinAlgError as exc:
                    raise SingularHessian(
                        f"normal equations rank-deficient: {exc}"
                    ) from exc
                rhs = -(jac.T @ r)
                delta = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))

                step = 1.0
                new_x, new_cost = x, cost
                for _ in range(30):
                    cand = self._wrap_state(x + step * delta, index, len(self._poses))
                    cand_cost = self._cost(cand, index)
                    if cand_cost <= cost:
                        new_x, new_cost = cand, cand_cost
                        break
                    step *= 0.5
                decrease = cost - new_cost
                x, cost = new_x, new_cost
                if decrease <= rel_tol * max(cost, 1e-300):
                    converged = True
                    break
            if not converged:
                raise NonConvergence(
                    f"cost still decreasing by more than {rel_tol} "
                    f"after {max_iters} iterations"
                )

            _, jac = self._linearize(x, index)
            hess = jac.T @ jac
            try:
                cov = np.linalg.inv(hess)
            except np.linalg.LinAlgError as exc:
                raise SingularHessian(f"Hessian not invertible: {exc}") from exc
            cov = 0.5 * (cov + cov.T)

            return GeometricBelief(
                mean=x.copy(),
                covariance=cov,
                index=index,
                n_poses=len(self._poses),
                object_ids=list(self._object_order),
            )
        finally:
            # write the iterate back (even on failure, so collapse detection
            # and later factors see where the optimization actually ended up)
            for t in range(len(self._poses)):
                off = index[("pose", t)]
                self._poses[t] = x[off : off + 3].copy()
            for oid in self._object_order:
                off = index[("object", oid)]
                self._objects[oid] = x[off : off + 2].copy()


def draw_samples(
    belief: GeometricBelief,
    n_samples: int,
    seed: int,
    object_orientations: Optional[dict[int, float]] = None,
    n_objects: Optional[int] = None,
) -> list[TrajectorySample]:
    """Joint samples from the geometric belief, deterministic per seed.

    Object orientation is not estimated by bearing factors; it is filled from
    object_orientations (ground truth in simulation), defaulting to 0. When
    n_objects is given, objects the solver has not seen yet are emitted at
    their prior state (the sample lists then always have length n_objects).
    """
    cov = belief.covariance
    scale = max(float(np.max(np.diag(cov))), 1e-300)
    chol = None
    # the covariance is PSD up to inversion roundoff; escalate diagonal
    # jitter (relative to its scale) before declaring it unusable
    for jitter in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            chol = np.linalg.cholesky(cov + jitter * scale * np.eye(cov.shape[0]))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise SingularHessian("belief covariance not positive definite")
    rng = np.random.default_rng(seed)
    draws = belief.mean + rng.standard_normal((n_samples, belief.mean.size)) @ chol.T
    orientations = object_orientations or {}
    total_objects = belief.object_ids if n_objects is None else range(n_objects)

    out = []
    for k in range(n_samples):
        row = draws[k]
        robots = [
            Pose2.from_array(row[belief.index[("pose", t)] : belief.index[("pose", t)] + 3])
            for t in range(belief.n_poses)
        ]
        objects = []
        for oid in total_objects:
            key = ("object", oid)
            theta = float(orientations.get(oid, 0.0))
            if key in belief.index:
                off = belief.index[key]
                objects.append(Pose2(row[off], row[off + 1], theta))
            else:
                objects.append(Pose2(0.0, 0.0, theta))
        out.append(TrajectorySample(robot_poses=robots, object_poses=objects))
    return out
