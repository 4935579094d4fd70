from ._core import (
    DATA_DIR,
    Pose,
    builtin_model_ids,
    discretize_screw_path,
    early_stop_beta,
    forward_kinematics,
    load_config,
    per_arm_sample_count,
    pose_distance,
    run_acquisition,
    run_k_sweep,
    run_mask_study,
    sclerp,
    screw_log,
    segment_into_screws,
    stopping_satisfied,
    validate_bandit,
)

__all__ = [
    "DATA_DIR",
    "Pose",
    "builtin_model_ids",
    "discretize_screw_path",
    "early_stop_beta",
    "forward_kinematics",
    "load_config",
    "per_arm_sample_count",
    "pose_distance",
    "run_acquisition",
    "run_k_sweep",
    "run_mask_study",
    "sclerp",
    "screw_log",
    "segment_into_screws",
    "stopping_satisfied",
    "validate_bandit",
]
