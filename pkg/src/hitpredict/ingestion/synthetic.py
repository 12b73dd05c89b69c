"""A deterministic fake of the chart and Spotify endpoints.

Used to record the bundled offline fixtures: running the real acquisition
code against a ``SyntheticCatalog`` wrapped in a ``RecordTransport`` writes
exactly the fixture files a later replay run will ask for.
"""

import string
import zlib

import numpy as np

from ..errors import FormatError
from ..rng import substream
from .acquisition import CHART_PATH, FEATURES_PATH, SEARCH_PATH, acquire, hit_query, ChartEntry, split_artists
from .transport import RecordTransport, Transport

_ALPHABET = np.array(list(string.ascii_letters + string.digits))
_SYLLABLES = ["la", "mo", "ri", "ka", "ne", "so", "ty", "ve", "da", "lu", "mi", "ro", "xe", "zo"]


def _track_id(rng):
    return "".join(rng.choice(_ALPHABET, size=22))


def _name(rng, words):
    parts = []
    for _ in range(words):
        n = int(rng.integers(2, 4))
        parts.append("".join(rng.choice(_SYLLABLES, size=n)).capitalize())
    return " ".join(parts)


def _audio_features(rng, hit):
    """Spotify-like audio features; hits skew danceable, loud and popular."""
    if hit:
        f = {
            "danceability": rng.beta(7, 3.5), "energy": rng.beta(6, 3.5),
            "loudness": rng.normal(-6.0, 2.0), "speechiness": rng.beta(1.5, 12),
            "acousticness": rng.beta(1.2, 5), "liveness": rng.beta(2, 10),
            "valence": rng.beta(4.5, 4), "tempo": rng.normal(120, 25),
            "duration_ms": rng.normal(210_000, 35_000), "mode": rng.random() < 0.6,
            "instrumentalness": rng.beta(1, 200) if rng.random() < 0.9 else rng.beta(1, 8),
        }
    else:
        f = {
            "danceability": rng.beta(4, 4), "energy": rng.beta(3.5, 3),
            "loudness": rng.normal(-10.0, 5.0), "speechiness": rng.beta(1.2, 10),
            "acousticness": rng.beta(1.2, 2), "liveness": rng.beta(2, 9),
            "valence": rng.beta(3.5, 4), "tempo": rng.normal(118, 30),
            "duration_ms": rng.lognormal(np.log(220_000), 0.35), "mode": rng.random() < 0.65,
            "instrumentalness": rng.beta(2, 2) if rng.random() < 0.35 else rng.beta(1, 100),
        }
    out = {k: round(float(v), 4) for k, v in f.items() if k not in ("mode", "duration_ms")}
    out["loudness"] = round(min(max(out["loudness"], -60.0), 3.0), 3)
    out["tempo"] = round(min(max(out["tempo"], 40.0), 240.0), 3)
    out["mode"] = int(f["mode"])
    out["duration_ms"] = int(max(30_000, f["duration_ms"]))
    out["key"] = int(rng.integers(0, 12))
    out["time_signature"] = int(rng.choice([4, 3, 5, 1], p=[0.92, 0.05, 0.02, 0.01]))
    return out


class SyntheticCatalog(Transport):
    """In-memory chart + Spotify catalog built from a seed.

    ``chart_size`` entries per year (the real chart has 100); a share of
    entries repeat an earlier year's song, some have no Spotify match, and
    some tracks have no audio features or no detected key.
    """

    def __init__(self, seed=0, years=range(2011, 2022), chart_size=20, pool_size=8000,
                 repeat_rate=0.08, unresolved_rate=0.05, null_features_rate=0.02,
                 no_key_rate=0.01):
        rng = substream(seed, "catalog")
        self.seed = seed
        self.items = {}
        self.features = {}
        self.charts = {}
        self.search = {}
        songs = []
        for year in years:
            entries = []
            for rank in range(1, chart_size + 1):
                if songs and rng.random() < repeat_rate:
                    title, artist = songs[int(rng.integers(len(songs)))]
                else:
                    title, artist = _name(rng, int(rng.integers(1, 4))), _name(rng, 2)
                    if rng.random() < 0.25:
                        artist += " Featuring " + _name(rng, 2)
                    songs.append((title, artist))
                    self._add_hit_song(rng, title, artist, unresolved_rate, null_features_rate,
                                       no_key_rate)
                entries.append({"rank": rank, "title": title, "artist": artist})
            self.charts[int(year)] = {"chart": "hot-100-year-end", "year": int(year), "entries": entries}
        self.pool = []
        for _ in range(pool_size):
            item = self._new_item(rng, _name(rng, 2), _name(rng, 2), hit=False,
                                  null_features_rate=null_features_rate, no_key_rate=no_key_rate)
            self.pool.append(item["id"])

    def _new_item(self, rng, title, artist, hit, null_features_rate, no_key_rate, popularity=None):
        tid = _track_id(rng)
        if popularity is None:
            popularity = rng.normal(68, 12) if hit else rng.beta(2, 4) * 100
        popularity = int(min(100, max(0, round(popularity))))
        explicit = bool(rng.random() < (0.35 if hit else 0.15))
        album_type = rng.choice(["single", "album", "compilation"],
                                p=[0.55, 0.4, 0.05] if hit else [0.3, 0.6, 0.1])
        item = {
            "id": tid, "name": title, "popularity": popularity, "explicit": explicit,
            "artists": [{"id": _track_id(rng), "name": artist}],
            "album": {"album_type": str(album_type)}, "type": "track",
        }
        self.items[tid] = item
        feats = _audio_features(rng, hit)
        if rng.random() < no_key_rate:
            feats["key"] = -1
        feats["id"] = tid
        self.features[tid] = None if rng.random() < null_features_rate else feats
        return item

    def _add_hit_song(self, rng, title, artist, unresolved_rate, null_features_rate, no_key_rate):
        query = hit_query(ChartEntry(title, split_artists(artist), 2011, 1))
        if rng.random() < unresolved_rate:
            self.search[query] = []
            return
        target = self._new_item(rng, title, artist, True, null_features_rate, no_key_rate)
        others = []
        for _ in range(int(rng.integers(0, 10))):
            pop = rng.integers(0, max(1, target["popularity"]))
            others.append(self._new_item(rng, title + " (Cover)", _name(rng, 2), False,
                                         null_features_rate, no_key_rate, popularity=pop)["id"])
        ids = others + [target["id"]]
        order = rng.permutation(len(ids))
        self.search[query] = [ids[i] for i in order]

    def _random_page(self, query, limit):
        rng = substream(self.seed, "catalog-query", zlib.crc32(query.encode("utf-8")))
        picks = rng.choice(len(self.pool), size=min(limit, len(self.pool)), replace=False)
        return [self.pool[i] for i in picks]

    def send(self, request):
        params = dict(request.params)
        if request.path == CHART_PATH:
            try:
                return self.charts[int(params["year"])]
            except KeyError:
                return {"chart": "hot-100-year-end", "year": int(params["year"]), "entries": []}
        if request.path == SEARCH_PATH:
            query, limit = params["q"], int(params.get("limit", 20))
            ids = self.search[query] if query in self.search else self._random_page(query, limit)
            return {"tracks": {"items": [self.items[i] for i in ids[:limit]], "limit": limit}}
        if request.path == FEATURES_PATH:
            ids = params["ids"].split(",")
            return {"audio_features": [self.features.get(i) for i in ids]}
        raise FormatError(f"synthetic catalog does not serve {request.path}")


def record_fixtures(root, years, request_count, per_request_keep, seed=0, catalog_seed=0, **catalog):
    """Write the fixture set a replay run with the same arguments will need."""
    source = SyntheticCatalog(catalog_seed, years=years, **catalog)
    return acquire(years, request_count, per_request_keep, seed, RecordTransport(root, source))
