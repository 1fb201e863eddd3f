from .consistency import ConsistencyConfig, ConsistencyError, TripletLosses, triplet_consistency
from .photometric import PhotoConfig, PhotometricError, self_supervised_loss

__all__ = [
    "ConsistencyConfig",
    "ConsistencyError",
    "PhotoConfig",
    "PhotometricError",
    "TripletLosses",
    "self_supervised_loss",
    "triplet_consistency",
]
