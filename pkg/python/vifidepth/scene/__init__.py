from .bundle import TripletBundle, make_triplet, quantize_bundle
from .trajectory import POSITIONS, Trajectory
from .world import Scene, SceneConfig, SceneError, generate_scene, ground_truth_flow, render_view

__all__ = [
    "POSITIONS",
    "Scene",
    "SceneConfig",
    "SceneError",
    "Trajectory",
    "TripletBundle",
    "generate_scene",
    "ground_truth_flow",
    "make_triplet",
    "quantize_bundle",
    "render_view",
]
