from .builders import build_humanoid_lite, build_walker2d
from .files import ModelFileError, load_model, model_from_dict, model_to_dict, write_model
from .fk import forward_kinematics, joint_rotations_from_poses, reference_pose, standing_root_height
from .inertia import capsule_inertia
from .model import (
    CharacterModel,
    JointSpec,
    LinkSpec,
    ReferencePose,
    RenderCapsule,
    make_model,
    with_actuated_gains,
)

__all__ = [
    "CharacterModel",
    "JointSpec",
    "LinkSpec",
    "ModelFileError",
    "ReferencePose",
    "RenderCapsule",
    "build_humanoid_lite",
    "build_walker2d",
    "capsule_inertia",
    "forward_kinematics",
    "joint_rotations_from_poses",
    "load_model",
    "make_model",
    "with_actuated_gains",
    "model_from_dict",
    "model_to_dict",
    "reference_pose",
    "standing_root_height",
    "write_model",
]
