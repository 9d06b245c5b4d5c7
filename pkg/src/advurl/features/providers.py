"""Pluggable web providers with live, record and replay modes.

Fixture store format (one JSON document per provider kind)::

    {
      "kind": "whois",
      "version": 1,
      "default": null,
      "entries": {
        "example.com": {"captured_at": "2024-01-01T00:00:00Z", "response": {...}}
      }
    }

``default`` is optional. When it is not null, keys missing from ``entries``
answer with that value (a closed-world store, used for the domain registry).
When it is null a missing key raises :class:`ProviderUnavailable`. A null
``response`` is a recorded negative answer: no WHOIS record, page not
fetchable. Documents are written with sorted keys and two-space indentation,
so ``load`` followed by ``save`` reproduces the file byte for byte.

Responses per kind:

* ``search``   -- list of result hostnames, best first
* ``whois``    -- record dict (``ip``, ``asn``, ``asn_country_code``,
  ``asn_cidr``, ``postal_code``, ``creation_date``, ``updated_date``) or null
* ``pages``    -- HTML body string or null
* ``registry`` -- boolean
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import re
import socket
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Protocol

from ..errors import ProviderUnavailable

KINDS = ("search", "whois", "pages", "registry")
MODES = ("live", "record", "replay")

# Flipped on by the CLI in replay mode; live providers refuse to touch the network.
_network_blocked = False


def block_network(blocked: bool = True) -> None:
    global _network_blocked
    _network_blocked = blocked


def _require_network(what: str) -> None:
    if _network_blocked:
        raise ProviderUnavailable(f"network access disabled (replay mode): {what}")


class SearchProvider(Protocol):
    def search(self, query: str) -> list[str]: ...


class WhoisProvider(Protocol):
    def lookup(self, domain: str) -> Optional[dict]: ...


class PageFetcher(Protocol):
    def fetch(self, url: str) -> Optional[str]: ...


class DomainRegistry(Protocol):
    def is_registered(self, domain: str) -> bool: ...


class FixtureStore:
    """In-memory view of one fixture document."""

    def __init__(self, kind: str, entries: dict | None = None, default: Any = None):
        if kind not in KINDS:
            raise ValueError(f"unknown fixture kind {kind!r}")
        self.kind = kind
        self.entries: dict[str, dict] = dict(entries or {})
        self.default = default
        self._lock = threading.Lock()

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: str):
        try:
            return self.entries[key]["response"]
        except KeyError:
            if self.default is not None:
                return self.default
            raise ProviderUnavailable(f"no {self.kind} fixture for {key!r}") from None

    def put(self, key: str, response: Any, captured_at: str | None = None) -> None:
        if captured_at is None:
            captured_at = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        with self._lock:
            self.entries[key] = {"captured_at": captured_at, "response": response}

    def to_json(self) -> dict:
        return {"kind": self.kind, "version": 1, "default": self.default, "entries": self.entries}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "FixtureStore":
        doc = json.loads(text)
        return cls(doc["kind"], doc.get("entries", {}), doc.get("default"))

    @classmethod
    def load(cls, path) -> "FixtureStore":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def fixture_path(directory, kind: str) -> Path:
    return Path(directory) / f"{kind}.json"


class _Replay:
    def __init__(self, store: FixtureStore):
        self.store = store


class ReplaySearch(_Replay):
    def search(self, query):
        return list(self.store.get(query))


class ReplayWhois(_Replay):
    def lookup(self, domain):
        return self.store.get(domain)


class ReplayFetcher(_Replay):
    def fetch(self, url):
        return self.store.get(url)


class ReplayRegistry(_Replay):
    def is_registered(self, domain):
        return bool(self.store.get(domain))


class _Recorder:
    """Wraps a live provider; each answered call is persisted to the store."""

    def __init__(self, live, store: FixtureStore, method: str):
        self.live = live
        self.store = store
        self.method = method

    def _call(self, key):
        response = getattr(self.live, self.method)(key)
        self.store.put(key, response)
        return response


class RecordSearch(_Recorder):
    def __init__(self, live, store):
        super().__init__(live, store, "search")

    def search(self, query):
        return self._call(query)


class RecordWhois(_Recorder):
    def __init__(self, live, store):
        super().__init__(live, store, "lookup")

    def lookup(self, domain):
        return self._call(domain)


class RecordFetcher(_Recorder):
    def __init__(self, live, store):
        super().__init__(live, store, "fetch")

    def fetch(self, url):
        return self._call(url)


class RecordRegistry(_Recorder):
    def __init__(self, live, store):
        super().__init__(live, store, "is_registered")

    def is_registered(self, domain):
        return self._call(domain)


# -- live providers ---------------------------------------------------------


class LiveSearch:
    """Delegates to a user-supplied ``backend(query) -> list of result URLs/hosts``.

    No search engine is scraped by default; without a backend every query
    raises :class:`ProviderUnavailable`.
    """

    def __init__(self, backend: Callable[[str], list[str]] | None = None, limit: int = 60):
        self.backend = backend
        self.limit = limit

    def search(self, query):
        _require_network("search")
        if self.backend is None:
            raise ProviderUnavailable("no search backend configured")
        hosts = []
        for item in self.backend(query)[: self.limit]:
            host = re.sub(r"^[a-z][a-z0-9+.-]*://", "", item.strip().lower()).split("/", 1)[0]
            hosts.append(host)
        return hosts


class LiveRegistry:
    """A domain counts as registered when it resolves in DNS."""

    def is_registered(self, domain):
        _require_network("dns")
        try:
            socket.getaddrinfo(domain, None)
        except socket.gaierror:
            return False
        except OSError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        return True


class LiveFetcher:
    def __init__(self, timeout: float = 10.0, max_bytes: int = 2_000_000):
        self.timeout = timeout
        self.max_bytes = max_bytes

    def fetch(self, url):
        _require_network("fetch")
        if "://" not in url:
            url = "http://" + url
        req = urllib.request.Request(url, headers={"User-Agent": "Mozilla/5.0 (advurl)"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read(self.max_bytes)
                charset = resp.headers.get_content_charset() or "utf-8"
        except (urllib.error.URLError, OSError, ValueError):
            return None
        return body.decode(charset, errors="replace")


def whois_query(server: str, query: str, timeout: float = 10.0) -> str:
    with socket.create_connection((server, 43), timeout=timeout) as sock:
        sock.sendall((query + "\r\n").encode())
        chunks = []
        while True:
            data = sock.recv(4096)
            if not data:
                break
            chunks.append(data)
    return b"".join(chunks).decode("utf-8", errors="replace")


_DATE_KEYS = {
    "creation_date": ("creation date", "created", "registered on", "registration time", "created on"),
    "updated_date": ("updated date", "last updated", "changed", "last-update", "modified"),
}


def parse_whois_text(text: str) -> dict:
    """Pull creation/update dates and a postal code out of free-form WHOIS text."""
    out: dict[str, Any] = {}
    for line in text.splitlines():
        key, sep, value = line.partition(":")
        if not sep:
            continue
        key, value = key.strip().lower(), value.strip()
        if not value:
            continue
        for field_name, aliases in _DATE_KEYS.items():
            if field_name not in out and any(key.endswith(a) for a in aliases):
                m = re.search(r"(\d{4})-(\d{2})-(\d{2})", value)
                if m:
                    out[field_name] = m.group(0)
        if "postal code" in key and "postal_code" not in out:
            out["postal_code"] = value
    return out


def parse_cymru_line(text: str) -> dict:
    """Parse Team Cymru verbose output: ``AS | IP | BGP Prefix | CC | Registry | Allocated | AS Name``."""
    for line in text.splitlines():
        parts = [p.strip() for p in line.split("|")]
        if len(parts) >= 4 and parts[0].isdigit():
            return {"asn": int(parts[0]), "ip": parts[1], "asn_cidr": parts[2], "asn_country_code": parts[3]}
    return {}


class LiveWhois:
    """DNS + Team Cymru ASN lookup + registry WHOIS (referral via IANA)."""

    def __init__(self, timeout: float = 10.0):
        self.timeout = timeout

    def lookup(self, domain):
        _require_network("whois")
        try:
            ip = socket.gethostbyname(domain)
        except OSError:
            return None
        record: dict[str, Any] = {"ip": ip}
        try:
            record.update(parse_cymru_line(whois_query("whois.cymru.com", f" -v {ip}", self.timeout)))
            tld = domain.rsplit(".", 1)[-1]
            iana = whois_query("whois.iana.org", tld, self.timeout)
            m = re.search(r"^whois:\s*(\S+)", iana, re.M)
            if m:
                record.update(parse_whois_text(whois_query(m.group(1), domain, self.timeout)))
        except OSError as exc:
            raise ProviderUnavailable(f"whois failed for {domain}: {exc}") from exc
        return record


# -- suite ------------------------------------------------------------------


@dataclass
class ProviderSuite:
    search: SearchProvider
    whois: WhoisProvider
    fetcher: PageFetcher
    registry: DomainRegistry
    mode: str = "replay"
    stores: dict[str, FixtureStore] = field(default_factory=dict)

    @classmethod
    def replay(cls, stores: dict[str, FixtureStore]) -> "ProviderSuite":
        missing = [k for k in KINDS if k not in stores]
        if missing:
            raise ProviderUnavailable(f"replay needs fixture stores for {missing}")
        return cls(ReplaySearch(stores["search"]), ReplayWhois(stores["whois"]),
                   ReplayFetcher(stores["pages"]), ReplayRegistry(stores["registry"]),
                   "replay", stores)

    @classmethod
    def live(cls, search_backend=None) -> "ProviderSuite":
        return cls(LiveSearch(search_backend), LiveWhois(), LiveFetcher(), LiveRegistry(), "live")

    @classmethod
    def record(cls, stores: dict[str, FixtureStore] | None = None, search_backend=None) -> "ProviderSuite":
        stores = stores or {k: FixtureStore(k) for k in KINDS}
        return cls(RecordSearch(LiveSearch(search_backend), stores["search"]),
                   RecordWhois(LiveWhois(), stores["whois"]),
                   RecordFetcher(LiveFetcher(), stores["pages"]),
                   RecordRegistry(LiveRegistry(), stores["registry"]),
                   "record", stores)

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        for kind, store in self.stores.items():
            store.save(fixture_path(directory, kind))


def load_stores(directory) -> dict[str, FixtureStore]:
    stores = {}
    for kind in KINDS:
        p = fixture_path(directory, kind)
        if not p.exists():
            raise ProviderUnavailable(f"missing fixture file {p}")
        stores[kind] = FixtureStore.load(p)
    return stores


def build_providers(mode: str, fixture_dir=None, search_backend=None) -> ProviderSuite:
    if mode not in MODES:
        raise ValueError(f"provider mode must be one of {MODES}")
    if mode == "replay":
        if fixture_dir is None:
            raise ProviderUnavailable("replay mode needs a fixture directory")
        return ProviderSuite.replay(load_stores(fixture_dir))
    if mode == "record":
        stores = None
        if fixture_dir is not None and all(fixture_path(fixture_dir, k).exists() for k in KINDS):
            stores = load_stores(fixture_dir)
        return ProviderSuite.record(stores, search_backend)
    return ProviderSuite.live(search_backend)
