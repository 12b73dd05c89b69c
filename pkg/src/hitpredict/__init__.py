"""Hit-song prediction from Spotify audio features."""

from .data import FEATURES, FeatureMatrix, SplitSpec, TrackRecord, load_tracks_csv, split, to_feature_matrix, write_tracks_csv

__version__ = "0.1.0"

__all__ = [
    "FEATURES", "FeatureMatrix", "SplitSpec", "TrackRecord", "load_tracks_csv", "split",
    "to_feature_matrix", "write_tracks_csv",
]
