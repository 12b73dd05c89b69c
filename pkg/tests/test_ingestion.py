import itertools
import json

import httpx
import pytest

from hitpredict.errors import (
    CredentialsError, FixtureMissError, FormatError, ParameterError, TransportError,
    UnresolvedTrackError,
)
import hitpredict.ingestion.acquisition as acq
from hitpredict.ingestion.synthetic import SyntheticCatalog, record_fixtures
from hitpredict.ingestion.transport import (
    LiveTransport, RecordTransport, ReplayTransport, Request, TokenBucket, Transport,
    fixture_path, open_transport,
)


class DictTransport(Transport):
    """Serves canned payloads keyed by request; raises for anything else."""

    def __init__(self, responses=None, fail=()):
        self.responses = dict(responses or {})
        self.fail = set(fail)
        self.sent = []

    def send(self, request):
        self.sent.append(request)
        if request in self.fail:
            raise TransportError(f"boom: {request.describe()}")
        return self.responses[request]


def item(tid, popularity, artist="A"):
    return {"id": tid, "popularity": popularity, "explicit": False,
            "artists": [{"id": "art-" + artist, "name": artist}], "album": {"album_type": "single"}}


def features(tid, **over):
    f = dict(id=tid, danceability=0.73, energy=0.6, key=2, loudness=-5.0, mode=1,
             speechiness=0.05, acousticness=0.1, instrumentalness=0.0, liveness=0.1,
             valence=0.4, tempo=100.0, duration_ms=180000, time_signature=4)
    f.update(over)
    return f


ENTRY = acq.ChartEntry("Song", ("Singer",), 2015, 1)


def search_payload(items):
    return {"tracks": {"items": items}}


def hit_transport(items):
    req = acq.search_request(acq.hit_query(ENTRY), acq.HIT_PAGE)
    return DictTransport({req: search_payload(items)})


def test_resolve_hit_picks_most_popular():
    t = acq.resolve_hit(ENTRY, hit_transport([item("a", 40), item("b", 91), item("c", 77)]))
    assert t.id == "b" and t.popularity == 91 and t.hit is True


def test_resolve_hit_single_candidate():
    assert acq.resolve_hit(ENTRY, hit_transport([item("only", 3)])).id == "only"


def test_resolve_hit_ties_go_to_first_in_every_ordering():
    pops = [50, 50, 20, 49]
    for perm in itertools.permutations(range(len(pops))):
        items = [item(f"id{i}", pops[i]) for i in perm]
        chosen = acq.resolve_hit(ENTRY, hit_transport(items))
        # oracle: scan for the first index holding the maximum
        top = max(pops)
        first = next(it["id"] for it in items if it["popularity"] == top)
        assert chosen.id == first
        assert all(chosen.popularity >= it["popularity"] for it in items)


def test_resolve_hit_without_candidates():
    with pytest.raises(UnresolvedTrackError, match="Song"):
        acq.resolve_hit(ENTRY, hit_transport([]))


def test_hit_query_uses_title_and_first_artist():
    e = acq.ChartEntry("Uptown Funk!", acq.split_artists("Mark Ronson Featuring Bruno Mars"), 2015, 1)
    assert e.artists == ("Mark Ronson", "Bruno Mars")
    assert acq.hit_query(e) == "track:Uptown Funk! artist:Mark Ronson"


def chart_payload(n, year):
    return {"year": year, "entries": [{"rank": r, "title": f"T{year}-{r}", "artist": f"A{r}"}
                                      for r in range(1, n + 1)]}


def test_fetch_single_year_of_hundred():
    req = Request.get(acq.CHART_PATH, year=2016)
    entries = acq.fetch_charts([2016], DictTransport({req: chart_payload(100, 2016)}))
    assert len(entries) == 100
    assert [e.rank for e in entries] == list(range(1, 101))
    assert all(e.year == 2016 for e in entries)


def test_fetch_eleven_full_years(tmp_path):
    years = range(2011, 2022)
    catalog = SyntheticCatalog(seed=1, years=years, chart_size=100, pool_size=100)
    entries = acq.fetch_charts(years, catalog, max_in_flight=4)
    assert len(entries) == 1100
    assert [e.year for e in entries[::100]] == list(years)


def test_fetch_charts_rejects_bad_input():
    with pytest.raises(ParameterError):
        acq.fetch_charts([], DictTransport())
    req = Request.get(acq.CHART_PATH, year=2012)
    with pytest.raises(FormatError):
        acq.fetch_charts([2012], DictTransport({req: chart_payload(101, 2012)}))
    with pytest.raises(FormatError):
        acq.fetch_charts([2012], DictTransport({req: {"rows": []}}))


def test_transport_failure_on_charts_propagates():
    req = Request.get(acq.CHART_PATH, year=2012)
    with pytest.raises(TransportError) as info:
        acq.fetch_charts([2012], DictTransport(fail={req}))
    assert info.value.retryable


class PageTransport(Transport):
    """Any search returns the same page of 50 distinct items."""

    def __init__(self, n=50, fail_every=0):
        self.n = n
        self.fail_every = fail_every
        self.calls = 0

    def send(self, request):
        self.calls += 1
        if self.fail_every and self.calls % self.fail_every == 0:
            raise TransportError("throttled")
        q = dict(request.params)["q"]
        return search_payload([item(f"{q}-{i}", i) for i in range(self.n)])


def test_one_random_request_keeps_ten_distinct():
    tracks = acq.sample_random_tracks(1, 10, seed=0, transport=PageTransport())
    assert len(tracks) == 10
    assert len({t.id for t in tracks}) == 10
    assert all(not t.hit for t in tracks)


def test_random_sampling_deterministic_and_bounded():
    a = acq.sample_random_tracks(30, 10, seed=7, transport=PageTransport(), max_in_flight=4)
    b = acq.sample_random_tracks(30, 10, seed=7, transport=PageTransport(), max_in_flight=1)
    c = acq.sample_random_tracks(30, 10, seed=8, transport=PageTransport())
    assert a == b
    assert a != c
    assert len(a) <= 300


def test_random_query_shape():
    import numpy as np

    rng = np.random.default_rng(0)
    for _ in range(200):
        q = acq.random_query(rng)
        assert q.endswith("*") and 1 <= len(q) - 1 <= 3 and q[:-1].isalpha() and q[:-1].islower()


def test_random_failures_are_skipped_and_counted():
    summary = acq.AcquisitionSummary()
    tracks = acq.sample_random_tracks(10, 5, seed=0, transport=PageTransport(fail_every=3),
                                      summary=summary)
    assert summary.random_failed == 3
    assert len(tracks) == 7 * 5


def test_random_keep_validated():
    with pytest.raises(ParameterError):
        acq.sample_random_tracks(1, 51, 0, PageTransport())
    with pytest.raises(ParameterError):
        acq.sample_random_tracks(0, 10, 0, PageTransport())


def _bare(tid):
    return acq.track_from_item(item(tid, 10), hit=False)


def _features_transport(ids, payloads):
    req = Request.get(acq.FEATURES_PATH, ids=",".join(ids))
    return DictTransport({req: {"audio_features": payloads}})


def test_enrich_three_complete():
    ids = ["a", "b", "c"]
    out = acq.enrich_audio_features([_bare(i) for i in ids],
                                    _features_transport(ids, [features(i) for i in ids]))
    assert [t.id for t in out] == ids
    assert all(t.complete for t in out)
    assert out[0].danceability == 0.73


def test_enrich_drops_null_payload():
    ids = ["a", "b", "c"]
    summary = acq.AcquisitionSummary()
    out = acq.enrich_audio_features([_bare(i) for i in ids],
                                    _features_transport(ids, [features("a"), None, features("c")]),
                                    summary=summary)
    assert [t.id for t in out] == ["a", "c"]
    assert summary.dropped == {"no audio features": 1}


def test_enrich_drops_invalid_values_with_reason():
    ids = ["a", "b"]
    summary = acq.AcquisitionSummary()
    out = acq.enrich_audio_features([_bare(i) for i in ids],
                                    _features_transport(ids, [features("a"), features("b", tempo=0)]),
                                    summary=summary)
    assert [t.id for t in out] == ["a"]
    assert summary.dropped == {"invalid tempo": 1}


def test_enrich_batches_by_hundred():
    ids = [f"x{i}" for i in range(250)]
    transport = DictTransport({
        Request.get(acq.FEATURES_PATH, ids=",".join(ids[i:i + 100])):
            {"audio_features": [features(t) for t in ids[i:i + 100]]}
        for i in range(0, 250, 100)
    })
    out = acq.enrich_audio_features([_bare(i) for i in ids], transport)
    assert len(out) == 250 and len(transport.sent) == 3


def test_request_digest_ignores_param_order():
    a = Request("GET", "/v1/search", (("q", "x"), ("limit", "10")))
    b = Request("GET", "/v1/search", (("limit", "10"), ("q", "x")))
    assert a.digest() == b.digest()
    assert a.digest() != Request.get("/v1/search", q="y", limit=10).digest()


def test_record_then_replay(tmp_path):
    req = Request.get(acq.CHART_PATH, year=2011)
    inner = DictTransport({req: chart_payload(3, 2011)})
    assert RecordTransport(tmp_path, inner).send(req) == chart_payload(3, 2011)
    path = fixture_path(tmp_path, req)
    assert path.parent.name == "billboard" and path.name == req.digest() + ".json"
    assert ReplayTransport(tmp_path).send(req) == chart_payload(3, 2011)


def test_replay_miss_names_request(tmp_path):
    req = Request.get(acq.CHART_PATH, year=1999)
    with pytest.raises(FixtureMissError) as info:
        ReplayTransport(tmp_path).send(req)
    assert "year=1999" in str(info.value)
    assert str(fixture_path(tmp_path, req)) in str(info.value)
    assert not info.value.retryable


def test_replay_corrupt_fixture(tmp_path):
    req = Request.get(acq.CHART_PATH, year=2011)
    path = fixture_path(tmp_path, req)
    path.parent.mkdir(parents=True)
    path.write_text("{not json")
    with pytest.raises(FormatError):
        ReplayTransport(tmp_path).send(req)


def test_open_transport_modes(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope"):
        open_transport("replay", tmp_path / "nope")
    with pytest.raises(ParameterError):
        open_transport("tape", tmp_path)
    assert isinstance(open_transport("replay", tmp_path), ReplayTransport)


def test_token_bucket_waits_for_refill():
    now = [0.0]
    slept = []

    def sleep(dt):
        slept.append(dt)
        now[0] += dt

    bucket = TokenBucket(rate=2.0, capacity=2, clock=lambda: now[0], sleep=sleep)
    for _ in range(4):
        bucket.acquire()
    assert sum(slept) == pytest.approx(1.0)


def _live(handler, monkeypatch, **kw):
    monkeypatch.setenv("SPOTIFY_CLIENT_ID", "id")
    monkeypatch.setenv("SPOTIFY_CLIENT_SECRET", "secret")
    client = httpx.Client(transport=httpx.MockTransport(handler))
    slept = []
    live = LiveTransport(chart_base_url="https://charts.test", requests_per_second=1000,
                         client=client, sleep=slept.append, **kw)
    return live, slept


def test_live_retries_throttling_with_backoff(monkeypatch):
    calls = []

    def handler(request):
        if request.url.host == "accounts.spotify.com":
            return httpx.Response(200, json={"access_token": "tok", "expires_in": 3600})
        calls.append(request)
        assert request.headers["Authorization"] == "Bearer tok"
        if len(calls) < 3:
            return httpx.Response(429, headers={"Retry-After": "3"} if len(calls) == 2 else {})
        return httpx.Response(200, json={"tracks": {"items": []}})

    live, slept = _live(handler, monkeypatch, backoff=1.0)
    assert live.send(acq.search_request("a*", 50)) == {"tracks": {"items": []}}
    assert slept == [1.0, 3.0]
    assert dict(calls[-1].url.params) == {"limit": "50", "q": "a*", "type": "track"}


def test_live_gives_up_after_retries(monkeypatch):
    live, slept = _live(lambda r: httpx.Response(503), monkeypatch, max_retries=2)
    with pytest.raises(TransportError, match="503"):
        live.send(Request.get(acq.CHART_PATH, year=2011))
    assert slept == [1.0, 2.0]


def test_live_needs_credentials(monkeypatch):
    monkeypatch.delenv("SPOTIFY_CLIENT_ID", raising=False)
    monkeypatch.delenv("SPOTIFY_CLIENT_SECRET", raising=False)
    live = LiveTransport(client=httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200))))
    with pytest.raises(CredentialsError):
        live.send(acq.search_request("a*", 50))


def test_acquire_replay_is_pure_function_of_fixtures(tmp_path):
    years = [2011, 2012]
    recorded, summary = record_fixtures(tmp_path, years, 12, 10, seed=3, chart_size=15, pool_size=400)
    replay_a, sa = acq.acquire(years, 12, 10, 3, ReplayTransport(tmp_path), max_in_flight=4)
    replay_b, _ = acq.acquire(years, 12, 10, 3, ReplayTransport(tmp_path))
    assert recorded == replay_a == replay_b
    assert sa.to_dict() == summary.to_dict()
    assert summary.chart_entries == 30
    assert summary.hits_emitted == sum(t.hit for t in recorded)
    assert all(t.complete for t in recorded)
    assert [t.hit for t in recorded] == sorted((t.hit for t in recorded), reverse=True)


def test_replay_with_other_seed_misses(tmp_path):
    record_fixtures(tmp_path, [2011], 5, 10, seed=0, chart_size=5, pool_size=200)
    with pytest.raises(FixtureMissError):
        acq.acquire([2011], 5, 10, 1, ReplayTransport(tmp_path))


def test_bundled_fixtures_replay(fixtures_dir):
    tracks, summary = acq.acquire(range(2011, 2022), 180, 10, 0, ReplayTransport(fixtures_dir),
                                  max_in_flight=4)
    assert summary.hits_emitted == sum(t.hit for t in tracks)
    assert 1500 <= len(tracks) <= 2500
    assert 0.05 <= summary.hits_emitted / len(tracks) <= 0.15
    some = next(fixtures_dir.glob("billboard/*.json"))
    body = json.loads(some.read_text())
    assert set(body) == {"request", "response"}
