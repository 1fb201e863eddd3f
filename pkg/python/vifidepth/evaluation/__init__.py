from .metrics import DepthMetrics, MetricsError, abs_rel_map, depth_metrics, median_scale, psnr

__all__ = ["DepthMetrics", "MetricsError", "abs_rel_map", "depth_metrics", "median_scale", "psnr"]
