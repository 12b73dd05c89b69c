from .acquisition import (
    AcquisitionSummary,
    Candidate,
    ChartEntry,
    SearchResponse,
    acquire,
    enrich_audio_features,
    fetch_charts,
    most_popular,
    resolve_hit,
    sample_random_tracks,
)
from .transport import LiveTransport, RecordTransport, ReplayTransport, Request, Transport, open_transport

__all__ = [
    "AcquisitionSummary", "Candidate", "ChartEntry", "LiveTransport", "RecordTransport",
    "ReplayTransport", "Request", "SearchResponse", "Transport", "acquire",
    "enrich_audio_features", "fetch_charts", "most_popular", "open_transport", "resolve_hit",
    "sample_random_tracks",
]
