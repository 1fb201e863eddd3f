from .camera import BehindCameraError, CameraError, Intrinsics, LinearPose, Pose, PoseParams, PoseSE3
from .imgrid import GridError, ImageGrid, SampleResult, ValidityMask, bilinear_sample

__all__ = [
    "BehindCameraError",
    "CameraError",
    "GridError",
    "ImageGrid",
    "Intrinsics",
    "LinearPose",
    "Pose",
    "PoseParams",
    "PoseSE3",
    "SampleResult",
    "ValidityMask",
    "bilinear_sample",
]
