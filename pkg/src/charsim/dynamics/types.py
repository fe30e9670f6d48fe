"""Core rigid-body data types shared by the simulator and the character loader."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HINGE = "hinge"
SPHERICAL = "spherical"


class ModelValidationError(ValueError):
    """A character model violates a structural invariant."""


class SimulationDivergedError(RuntimeError):
    """State left the sane range (|value| > 1e6); carries the substep index."""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


class NonFiniteInputError(ValueError):
    """A dynamics input contained NaN/inf; names the offending link or joint."""


@dataclass
class SpatialInertia:
    """Mass properties of one link, expressed in the link frame.

    mass [kg], com_offset [m] (link frame), rot_inertia [kg m^2], symmetric
    positive definite, about the link's own center of mass.
    """

    mass: float
    com_offset: np.ndarray
    rot_inertia: np.ndarray

    def validate(self, name: str = "link") -> None:
        if not self.mass > 0.0:
            raise ModelValidationError(f"{name}: mass must be > 0, got {self.mass}")
        inertia = np.asarray(self.rot_inertia, dtype=float)
        if inertia.shape != (3, 3):
            raise ModelValidationError(f"{name}: rot_inertia must be 3x3")
        if not np.allclose(inertia, inertia.T, atol=1e-9):
            raise ModelValidationError(f"{name}: rot_inertia must be symmetric")
        eigvals = np.linalg.eigvalsh(inertia)
        if np.min(eigvals) <= 0.0:
            raise ModelValidationError(
                f"{name}: rot_inertia must be positive definite (eigenvalues {eigvals})"
            )


@dataclass
class JointModel:
    """One joint of the articulation tree.

    kind is "hinge" (1 DOF about `axis`) or "spherical" (3 DOF, exponential-map
    coordinates). Anchors are the joint location in the parent / child link
    frames. limits is (dof, 2) in radians, stiffness/damping are the drive
    gains, max_torque clamps the drive per DOF.
    """

    name: str
    kind: str
    parent_link: int
    child_link: int
    parent_anchor: np.ndarray
    child_anchor: np.ndarray
    limits: np.ndarray
    stiffness: float = 0.0
    damping: float = 0.0
    max_torque: float = 100.0
    axis: np.ndarray | None = None

    @property
    def dof(self) -> int:
        return 1 if self.kind == HINGE else 3

    def validate(self) -> None:
        if self.kind not in (HINGE, SPHERICAL):
            raise ModelValidationError(f"joint {self.name}: unknown kind {self.kind!r}")
        if self.kind == HINGE:
            if self.axis is None:
                raise ModelValidationError(f"joint {self.name}: hinge needs an axis")
            n = float(np.linalg.norm(self.axis))
            if abs(n - 1.0) > 1e-6:
                raise ModelValidationError(f"joint {self.name}: axis must be unit length")
        limits = np.asarray(self.limits, dtype=float)
        if limits.shape != (self.dof, 2):
            raise ModelValidationError(
                f"joint {self.name}: limits must be ({self.dof}, 2), got {limits.shape}"
            )
        if np.any(limits[:, 0] > limits[:, 1]):
            raise ModelValidationError(f"joint {self.name}: limit lo > hi")
        if self.stiffness < 0.0 or self.damping < 0.0:
            raise ModelValidationError(f"joint {self.name}: gains must be >= 0")
        if not self.max_torque > 0.0:
            raise ModelValidationError(f"joint {self.name}: max_torque must be > 0")


@dataclass
class ArticulationState:
    """Full reduced-coordinate state of one simulated character.

    Root pose/velocity are world frame (root_ang_vel in rad/s, world axes).
    joint_q holds hinge angles and spherical exponential-map 3-vectors; joint_qd
    holds hinge rates and spherical local angular velocities, both per DOF.
    """

    root_position: np.ndarray
    root_orientation: np.ndarray
    root_lin_vel: np.ndarray
    root_ang_vel: np.ndarray
    joint_q: np.ndarray
    joint_qd: np.ndarray

    @classmethod
    def zeros(cls, dof_count: int) -> "ArticulationState":
        return cls(
            root_position=np.zeros(3),
            root_orientation=np.array([1.0, 0.0, 0.0, 0.0]),
            root_lin_vel=np.zeros(3),
            root_ang_vel=np.zeros(3),
            joint_q=np.zeros(dof_count),
            joint_qd=np.zeros(dof_count),
        )

    def copy(self) -> "ArticulationState":
        return ArticulationState(
            self.root_position.copy(),
            self.root_orientation.copy(),
            self.root_lin_vel.copy(),
            self.root_ang_vel.copy(),
            self.joint_q.copy(),
            self.joint_qd.copy(),
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.root_position))
            and np.all(np.isfinite(self.root_orientation))
            and np.all(np.isfinite(self.root_lin_vel))
            and np.all(np.isfinite(self.root_ang_vel))
            and np.all(np.isfinite(self.joint_q))
            and np.all(np.isfinite(self.joint_qd))
        )


@dataclass
class ContactModel:
    """Flat-ground contact parameters.

    Normal force per sphere is a spring-damper (never pulling); tangential
    friction is viscous, clamped by the Coulomb cone friction_coeff * normal.
    contact_spheres defaults to the spheres authored on the character's links.
    """

    ground_height: float = 0.0
    normal_stiffness: float = 2.0e4
    normal_damping: float = 300.0
    friction_coeff: float = 1.0
    contact_spheres: list | None = None

    def validate(self) -> None:
        if not self.normal_stiffness > 0.0:
            raise ModelValidationError("contact normal_stiffness must be > 0")
        if self.friction_coeff < 0.0:
            raise ModelValidationError("contact friction_coeff must be >= 0")


GRAVITY = np.array([0.0, -9.81, 0.0])
PHYSICS_DT = 1.0 / 600.0
CONTROL_SUBSTEPS = 10
CONTROL_DT = PHYSICS_DT * CONTROL_SUBSTEPS
