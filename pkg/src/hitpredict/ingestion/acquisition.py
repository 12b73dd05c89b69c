"""Dataset acquisition: chart hits, random non-hits, audio-feature enrichment."""

from __future__ import annotations

import dataclasses
import logging
import re
import string
from collections import Counter
from dataclasses import dataclass, field

from ..data import AUDIO_FIELDS, TrackRecord
from ..errors import FormatError, ParameterError, UnresolvedTrackError, ValidationError
from ..rng import substream
from .transport import Request, send_all

log = logging.getLogger(__name__)

CHART_PATH = "/charts/year-end/hot-100"
SEARCH_PATH = "/v1/search"
FEATURES_PATH = "/v1/audio-features"
HIT_PAGE = 10
RANDOM_PAGE = 50
FEATURE_BATCH = 100

_ARTIST_SEP = re.compile(r"\s+(?:featuring|feat\.?|ft\.?|with|x|&)\s+|\s*,\s*", re.IGNORECASE)


@dataclass(frozen=True)
class ChartEntry:
    title: str
    artists: tuple
    year: int
    rank: int

    def __post_init__(self):
        if not 1 <= self.rank <= 100:
            raise ValidationError("rank", self.rank)


@dataclass(frozen=True)
class Candidate:
    track_id: str
    artist_id: str
    popularity: int
    payload: dict = field(compare=False, repr=False)


@dataclass(frozen=True)
class SearchResponse:
    query: str
    candidates: tuple


@dataclass
class AcquisitionSummary:
    chart_entries: int = 0
    hits_resolved: int = 0
    hits_unresolved: int = 0
    random_requests: int = 0
    random_failed: int = 0
    nonhits_sampled: int = 0
    enriched: int = 0
    dropped: Counter = field(default_factory=Counter)
    hits_emitted: int = 0
    nonhits_emitted: int = 0

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["dropped"] = dict(sorted(self.dropped.items()))
        return d


def split_artists(text):
    return tuple(a for a in (s.strip() for s in _ARTIST_SEP.split(text or "")) if a)


def parse_chart(payload, year):
    try:
        entries = payload["entries"]
        if len(entries) > 100:
            raise FormatError(f"chart for {year} has {len(entries)} entries (max 100)")
        return [ChartEntry(str(e["title"]), split_artists(e["artist"]), int(year), int(e["rank"]))
                for e in entries]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed chart payload for {year}: {exc!r}") from None


def fetch_charts(years, transport, max_in_flight=1):
    """Year-end Hot 100 entries for every year in ``years`` (in year order)."""
    years = list(years)
    if not years:
        raise ParameterError("year range is empty")
    payloads = send_all(transport, [Request.get(CHART_PATH, year=y) for y in years], max_in_flight)
    entries = []
    for year, payload in zip(years, payloads):
        entries.extend(parse_chart(payload, year))
    return entries


def parse_search(query, payload, page):
    try:
        items = payload["tracks"]["items"]
        cands = tuple(
            Candidate(str(it["id"]), str(it["artists"][0]["id"]) if it.get("artists") else "",
                      int(it["popularity"]), it)
            for it in items if it)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed search payload for {query!r}: {exc!r}") from None
    if len(cands) > page:
        raise FormatError(f"search for {query!r} returned {len(cands)} items (page size {page})")
    return SearchResponse(query, cands)


def hit_query(entry):
    artist = entry.artists[0] if entry.artists else ""
    return f"track:{entry.title} artist:{artist}".strip()


def search_request(query, limit):
    return Request.get(SEARCH_PATH, q=query, type="track", limit=limit)


def most_popular(candidates):
    """Candidate with maximal popularity; the earliest one wins ties."""
    best = None
    for cand in candidates:
        if best is None or cand.popularity > best.popularity:
            best = cand
    return best


def track_from_item(item, hit):
    artists = item.get("artists") or [{}]
    return TrackRecord(
        id=str(item["id"]),
        artist=str(artists[0].get("name", "")),
        popularity=int(item["popularity"]),
        explicit=bool(item.get("explicit", False)),
        album_type=str((item.get("album") or {}).get("album_type", "album")),
        hit=hit,
    )


def _resolve(entry, payload):
    response = parse_search(hit_query(entry), payload, HIT_PAGE)
    best = most_popular(response.candidates)
    if best is None:
        raise UnresolvedTrackError(f"no Spotify match for {entry.title!r} by {', '.join(entry.artists)}")
    return track_from_item(best.payload, hit=True)


def resolve_hit(entry, transport):
    """Search Spotify for a chart entry and keep the most popular match."""
    if not entry.title:
        raise ParameterError("chart entry has an empty title")
    return _resolve(entry, transport.send(search_request(hit_query(entry), HIT_PAGE)))


def random_query(rng, wildcard=True):
    length = int(rng.integers(1, 4))
    letters = "".join(rng.choice(list(string.ascii_lowercase), size=length))
    return letters + ("*" if wildcard else "")


def sample_random_tracks(request_count, per_request_keep, seed, transport, max_in_flight=1,
                         summary=None, wildcard=True):
    """Non-hit candidates from random-character searches.

    Request ``i`` draws its query and its kept subset from the stream
    ``(seed, "ingest-random", i)``; output follows request order.
    """
    if request_count < 1:
        raise ParameterError("request_count must be >= 1")
    if not 1 <= per_request_keep <= RANDOM_PAGE:
        raise ParameterError(f"per_request_keep must lie in [1, {RANDOM_PAGE}]")
    summary = summary if summary is not None else AcquisitionSummary()
    rngs = [substream(seed, "ingest-random", i) for i in range(request_count)]
    queries = [random_query(rng, wildcard) for rng in rngs]
    payloads = send_all(transport, [search_request(q, RANDOM_PAGE) for q in queries],
                        max_in_flight, capture=True)
    tracks = []
    summary.random_requests += request_count
    for rng, query, payload in zip(rngs, queries, payloads):
        if isinstance(payload, Exception):
            log.warning("random search %r failed: %s", query, payload)
            summary.random_failed += 1
            continue
        cands = parse_search(query, payload, RANDOM_PAGE).candidates
        keep = min(per_request_keep, len(cands))
        for idx in sorted(rng.choice(len(cands), size=keep, replace=False).tolist()):
            try:
                tracks.append(track_from_item(cands[idx].payload, hit=False))
            except ValidationError as exc:
                summary.dropped[f"invalid search item: {exc.field}"] += 1
    summary.nonhits_sampled += len(tracks)
    return tracks


def _features_from_payload(payload):
    values = {}
    for name in AUDIO_FIELDS:
        v = payload.get(name)
        if v is None:
            continue
        values[name] = int(v) if name in ("key", "mode", "duration_ms", "time_signature") else float(v)
    return values


def enrich_audio_features(tracks, transport, max_in_flight=1, summary=None, batch_size=FEATURE_BATCH):
    """Fill audio fields by track id; tracks without (valid) features are dropped."""
    summary = summary if summary is not None else AcquisitionSummary()
    unique_ids = list(dict.fromkeys(t.id for t in tracks))
    batches = [unique_ids[i:i + batch_size] for i in range(0, len(unique_ids), batch_size)]
    payloads = send_all(transport, [Request.get(FEATURES_PATH, ids=",".join(b)) for b in batches],
                        max_in_flight)
    features = {}
    for batch, payload in zip(batches, payloads):
        try:
            items = payload["audio_features"]
        except (KeyError, TypeError):
            raise FormatError("malformed audio-features payload") from None
        if len(items) != len(batch):
            raise FormatError(f"audio-features returned {len(items)} items for {len(batch)} ids")
        for tid, item in zip(batch, items):
            features[tid] = item
    out = []
    for t in tracks:
        item = features.get(t.id)
        if item is None:
            log.info("dropping %s: no audio features", t.id)
            summary.dropped["no audio features"] += 1
            continue
        try:
            out.append(dataclasses.replace(t, **_features_from_payload(item)))
        except ValidationError as exc:
            log.info("dropping %s: %s", t.id, exc)
            summary.dropped[f"invalid {exc.field}"] += 1
    summary.enriched += len(out)
    return out


def acquire(years, request_count, per_request_keep, seed, transport, max_in_flight=1,
            wildcard=True):
    """Full acquisition run: hits (chart order) followed by random non-hits."""
    summary = AcquisitionSummary()
    entries = fetch_charts(years, transport, max_in_flight)
    summary.chart_entries = len(entries)
    payloads = send_all(transport, [search_request(hit_query(e), HIT_PAGE) for e in entries],
                        max_in_flight)
    hits = []
    for entry, payload in zip(entries, payloads):
        try:
            hits.append(_resolve(entry, payload))
        except UnresolvedTrackError as exc:
            log.info("skipping chart entry: %s", exc)
            summary.hits_unresolved += 1
        except ValidationError as exc:
            summary.hits_unresolved += 1
            summary.dropped[f"invalid search item: {exc.field}"] += 1
    summary.hits_resolved = len(hits)
    nonhits = sample_random_tracks(request_count, per_request_keep, seed, transport,
                                   max_in_flight, summary, wildcard)
    tracks = enrich_audio_features(hits + nonhits, transport, max_in_flight, summary)
    summary.hits_emitted = sum(t.hit for t in tracks)
    summary.nonhits_emitted = len(tracks) - summary.hits_emitted
    return tracks, summary
