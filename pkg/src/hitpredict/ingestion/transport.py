"""Request/response transports: live HTTP, record-to-fixtures, replay-from-fixtures.

A fixture is one JSON file per distinct request, stored as
``<root>/<category>/<sha256 of the canonical request>.json``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..errors import CredentialsError, FixtureMissError, FormatError, ParameterError, TransportError

log = logging.getLogger(__name__)

CATEGORIES = {
    "/charts/": "billboard",
    "/v1/search": "spotify-search",
    "/v1/audio-features": "spotify-features",
}


@dataclass(frozen=True)
class Request:
    method: str
    path: str
    params: tuple = ()

    @classmethod
    def get(cls, path, **params):
        return cls("GET", path, tuple(sorted((k, str(v)) for k, v in params.items())))

    def canonical(self):
        return json.dumps([self.method.upper(), self.path, [list(p) for p in sorted(self.params)]],
                          separators=(",", ":"), ensure_ascii=False)

    def digest(self):
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    @property
    def category(self):
        for prefix, name in CATEGORIES.items():
            if self.path.startswith(prefix):
                return name
        raise FormatError(f"no fixture category for path {self.path!r}")

    def describe(self):
        query = "&".join(f"{k}={v}" for k, v in self.params)
        return f"{self.method} {self.path}" + (f"?{query}" if query else "")

    def to_dict(self):
        return {"method": self.method, "path": self.path, "params": dict(self.params)}


class Transport:
    """Anything that maps a Request to a decoded JSON payload."""

    def send(self, request):
        raise NotImplementedError

    def close(self):
        pass


def fixture_path(root, request):
    return Path(root) / request.category / f"{request.digest()}.json"


class ReplayTransport(Transport):
    def __init__(self, root):
        self.root = Path(root)

    def send(self, request):
        path = fixture_path(self.root, request)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise FixtureMissError(request, path) from None
        try:
            return json.loads(text)["response"]
        except (ValueError, KeyError) as exc:
            raise FormatError(f"corrupt fixture {path}: {exc}") from None


class RecordTransport(Transport):
    """Forward to ``inner`` and store every response as a fixture."""

    def __init__(self, root, inner):
        self.root = Path(root)
        self.inner = inner
        self._lock = threading.Lock()

    def send(self, request):
        response = self.inner.send(request)
        path = fixture_path(self.root, request)
        body = json.dumps({"request": request.to_dict(), "response": response},
                          sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(body + "\n", encoding="utf-8")
        return response

    def close(self):
        self.inner.close()


class TokenBucket:
    def __init__(self, rate, capacity=None, clock=time.monotonic, sleep=time.sleep):
        self.rate = float(rate)
        self.capacity = float(capacity or max(1.0, rate))
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self._lock = threading.Lock()

    def acquire(self):
        with self._lock:
            while True:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                self.sleep((1.0 - self.tokens) / self.rate)


class LiveTransport(Transport):
    """HTTP backend for the Spotify Web API and a JSON chart API.

    Spotify uses the client-credentials flow (``SPOTIFY_CLIENT_ID`` /
    ``SPOTIFY_CLIENT_SECRET``). Chart requests go to ``chart_base_url``
    (default ``$BILLBOARD_API_URL``), which must serve the year-end chart
    payload documented in the README.
    """

    spotify_base = "https://api.spotify.com"
    token_url = "https://accounts.spotify.com/api/token"

    def __init__(self, chart_base_url=None, requests_per_second=5.0, max_retries=5,
                 backoff=1.0, client=None, sleep=time.sleep):
        import httpx

        self.chart_base_url = chart_base_url or os.environ.get("BILLBOARD_API_URL")
        self.client = client or httpx.Client(timeout=30.0)
        self.bucket = TokenBucket(requests_per_second, sleep=sleep)
        self.max_retries = max_retries
        self.backoff = backoff
        self.sleep = sleep
        self._token = None
        self._token_expiry = 0.0
        self._lock = threading.Lock()

    def _spotify_token(self):
        with self._lock:
            if self._token and time.monotonic() < self._token_expiry - 30:
                return self._token
            cid = os.environ.get("SPOTIFY_CLIENT_ID")
            secret = os.environ.get("SPOTIFY_CLIENT_SECRET")
            if not cid or not secret:
                raise CredentialsError("live mode needs SPOTIFY_CLIENT_ID and SPOTIFY_CLIENT_SECRET")
            resp = self.client.post(self.token_url, data={"grant_type": "client_credentials"},
                                    auth=(cid, secret))
            if resp.status_code != 200:
                raise CredentialsError(f"Spotify token request failed: HTTP {resp.status_code}")
            data = resp.json()
            self._token = data["access_token"]
            self._token_expiry = time.monotonic() + float(data.get("expires_in", 3600))
            return self._token

    def _url_and_headers(self, request):
        if request.category == "billboard":
            if not self.chart_base_url:
                raise CredentialsError("live chart requests need BILLBOARD_API_URL")
            return self.chart_base_url.rstrip("/") + request.path, {}
        return self.spotify_base + request.path, {"Authorization": f"Bearer {self._spotify_token()}"}

    def send(self, request):
        import httpx

        url, headers = self._url_and_headers(request)
        delay = self.backoff
        for attempt in range(self.max_retries + 1):
            self.bucket.acquire()
            try:
                resp = self.client.request(request.method, url, params=dict(request.params),
                                           headers=headers)
            except httpx.HTTPError as exc:
                err = TransportError(f"{request.describe()}: {exc}")
            else:
                if resp.status_code == 200:
                    try:
                        return resp.json()
                    except ValueError:
                        raise FormatError(f"{request.describe()}: response is not JSON") from None
                if resp.status_code not in (429, 500, 502, 503, 504):
                    raise TransportError(f"{request.describe()}: HTTP {resp.status_code}")
                err = TransportError(f"{request.describe()}: HTTP {resp.status_code}")
                retry_after = resp.headers.get("Retry-After")
                if retry_after and retry_after.isdigit():
                    delay = max(delay, float(retry_after))
            if attempt == self.max_retries:
                raise err
            log.warning("retrying %s in %.1fs (%s)", request.describe(), delay, err)
            self.sleep(delay)
            delay *= 2
        raise AssertionError("unreachable")

    def close(self):
        self.client.close()


def open_transport(mode, root, inner=None, **live_options):
    """Build the transport for ``mode`` in {replay, record, live}."""
    if mode == "replay":
        if not Path(root).is_dir():
            raise FileNotFoundError(f"fixture directory not found: {root}")
        return ReplayTransport(root)
    if mode == "record":
        return RecordTransport(root, inner or LiveTransport(**live_options))
    if mode == "live":
        return LiveTransport(**live_options)
    raise ParameterError(f"unknown transport mode {mode!r} (expected replay, record or live)")


def send_all(transport, requests, max_in_flight=1, capture=False):
    """Issue requests, possibly concurrently; results come back in request order.

    With ``capture=True`` a TransportError is returned in place of its
    response instead of being raised.
    """

    def one(req):
        try:
            return transport.send(req)
        except TransportError as exc:
            if capture:
                return exc
            raise

    requests = list(requests)
    if max_in_flight <= 1:
        return [one(r) for r in requests]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(one, requests))
