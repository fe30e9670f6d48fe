from .types import (
    HINGE,
    SPHERICAL,
    ArticulationState,
    ContactModel,
    JointModel,
    ModelValidationError,
    NonFiniteInputError,
    SimulationDivergedError,
    SpatialInertia,
    CONTROL_DT,
    CONTROL_SUBSTEPS,
    GRAVITY,
    PHYSICS_DT,
)
from .arrays import ModelArrays, build_model_arrays
from .engine import (
    angular_momentum,
    center_of_mass,
    dense_oracle_dynamics,
    forward_dynamics,
    link_kinematics,
    linear_momentum,
    pd_torque,
    probe_mass_matrix,
    step,
    total_energy,
)

__all__ = [
    "HINGE",
    "SPHERICAL",
    "ArticulationState",
    "ContactModel",
    "JointModel",
    "ModelArrays",
    "ModelValidationError",
    "NonFiniteInputError",
    "SimulationDivergedError",
    "SpatialInertia",
    "CONTROL_DT",
    "CONTROL_SUBSTEPS",
    "GRAVITY",
    "PHYSICS_DT",
    "angular_momentum",
    "build_model_arrays",
    "center_of_mass",
    "dense_oracle_dynamics",
    "forward_dynamics",
    "link_kinematics",
    "linear_momentum",
    "pd_torque",
    "probe_mass_matrix",
    "step",
    "total_energy",
]
