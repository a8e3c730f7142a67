"""Individual-level behavioral anomaly detection for human mobility data."""
from ._kernels import USE_NUMBA
from .data_model import PeriodSplit, StayPoint, Trip, ingest_staypoints, segment_trips, split_periods
from .metrics import auroc, average_precision
from .model import ClusterModel, ModelConfig, cluster_centers, decode_trip, encode_trip, fuse, total_loss, train
from .profiles import BehaviorProfile, align_cluster, assign_test_clusters, build_profile
from .scoring import (ScoreWeights, anomaly_score, dominant_change, entropy_change, frequency_change,
                      js_divergence, new_behavior_mass, transition_change)
from .spatial import SpatialFeatureIndex, buffer_counts, build_index, normalize_spatial
from .temporal import encode_temporal

__version__ = "0.1.0"
