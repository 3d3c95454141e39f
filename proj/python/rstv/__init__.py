"""Pose regression from motion-compensated spatiotemporal volumes."""

from ._rstv import (
    BoundingBox,
    ExpChi2Embedding,
    FitConfig,
    Hog3DConfig,
    Pose3D,
    PoseModel,
    RBFOutputEmbedding,
    SequenceManifest,
    SkeletonSpec,
    chi2_distance,
    compensate,
    descriptor,
    exp_chi2_kernel,
    fit_pose_model,
    gen_sequence_to_dir,
    load_frame,
    load_manifest,
    mpjpe,
    pcp,
    sequence_descriptors,
)

__all__ = [
    "BoundingBox",
    "ExpChi2Embedding",
    "FitConfig",
    "Hog3DConfig",
    "Pose3D",
    "PoseModel",
    "RBFOutputEmbedding",
    "SequenceManifest",
    "SkeletonSpec",
    "chi2_distance",
    "compensate",
    "descriptor",
    "exp_chi2_kernel",
    "fit_pose_model",
    "gen_sequence_to_dir",
    "load_frame",
    "load_manifest",
    "mpjpe",
    "pcp",
    "sequence_descriptors",
]
