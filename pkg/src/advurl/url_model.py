"""Structural decomposition of raw URL strings.

Every feature extractor works off :class:`ParsedUrl`. Parsing is deliberately
forgiving: rows that carry only a hostname (``example.com``) are parsed
host-first, and nothing is fetched or resolved.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional
from urllib.parse import unquote

from .errors import UnparsableUrl

_SCHEME_RE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*)://")
_PORT_RE = re.compile(r"^(.*):(\d{1,5})$")

TLD_SNAPSHOT = "public_suffix.txt"


@dataclass(frozen=True)
class ParsedUrl:
    scheme: Optional[str]
    host: str
    subdomain: Optional[str]
    domain: str
    tld: Optional[str]
    is_ip_host: bool
    port: Optional[int]
    path: str
    query: Optional[str]  # None when no "?" was present
    fragment: Optional[str]  # None when no "#" was present
    userinfo: Optional[str] = None

    @property
    def registered_domain(self) -> str:
        if self.is_ip_host or not self.tld:
            return self.domain
        return f"{self.domain}.{self.tld}"

    def serialize(self) -> str:
        out = []
        if self.scheme is not None:
            out.append(self.scheme + "://")
        if self.userinfo is not None:
            out.append(self.userinfo + "@")
        out.append(self.host)
        if self.port is not None:
            out.append(f":{self.port}")
        out.append(self.path)
        if self.query is not None:
            out.append("?" + self.query)
        if self.fragment is not None:
            out.append("#" + self.fragment)
        return "".join(out)


def load_tld_table(path=None) -> frozenset[str]:
    """Read a suffix snapshot: one suffix per line, ``//`` comments."""
    if path is None:
        text = resources.files("advurl.data").joinpath(TLD_SNAPSHOT).read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    entries = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if not line or line.startswith("//"):
            continue
        entries.add(line.lstrip("."))
    return frozenset(entries)


@lru_cache(maxsize=1)
def default_tld_table() -> frozenset[str]:
    return load_tld_table()


def is_ipv4(text: str) -> bool:
    if text.count(".") != 3:
        return False
    try:
        ipaddress.IPv4Address(text)
    except ValueError:
        return False
    return True


def is_ip_host(host: str) -> bool:
    """True for dotted-quad IPv4 (optionally behind ``www.``) or bracketed IPv6."""
    host = host.lower()
    if host.startswith("[") and host.endswith("]"):
        try:
            ipaddress.IPv6Address(host[1:-1])
        except ValueError:
            return False
        return True
    if host.startswith("www."):
        host = host[4:]
    return is_ipv4(host)


def effective_tld_split(host: str, tld_table: Iterable[str] | None = None):
    """Split a hostname into ``(subdomain, domain, tld)``.

    The tld is the longest suffix found in ``tld_table`` that still leaves at
    least one label for the domain. Hosts with no known suffix get
    ``tld=None`` and the last label as the domain.
    """
    if tld_table is None:
        tld_table = default_tld_table()
    elif not isinstance(tld_table, (set, frozenset)):
        tld_table = frozenset(tld_table)
    labels = host.lower().rstrip(".").split(".")
    for i in range(1, len(labels)):
        suffix = ".".join(labels[i:])
        if suffix in tld_table:
            sub = ".".join(labels[: i - 1]) or None
            return sub, labels[i - 1], suffix
    sub = ".".join(labels[:-1]) or None
    return sub, labels[-1], None


def _normalize_host(host: str) -> str:
    if "%" in host:
        decoded = unquote(host)
        if not decoded.isascii():
            host = decoded
    return host.lower()


def parse_url(raw: str, tld_table: Iterable[str] | None = None) -> ParsedUrl:
    text = raw.strip()
    if not text:
        raise UnparsableUrl("empty URL")

    m = _SCHEME_RE.match(text)
    if m:
        scheme = m.group(1)
        rest = text[m.end():]
    else:
        scheme = None
        rest = text

    fragment = None
    if "#" in rest:
        rest, fragment = rest.split("#", 1)
    query = None
    if "?" in rest:
        rest, query = rest.split("?", 1)
    slash = rest.find("/")
    if slash >= 0:
        authority, path = rest[:slash], rest[slash:]
    else:
        authority, path = rest, ""

    userinfo = None
    if "@" in authority:
        userinfo, authority = authority.rsplit("@", 1)

    port = None
    if not authority.endswith("]"):
        pm = _PORT_RE.match(authority)
        if pm and int(pm.group(2)) <= 65535:
            authority, port = pm.group(1), int(pm.group(2))

    host = _normalize_host(authority)
    if not host or host.strip(".") == "":
        raise UnparsableUrl(f"no host in {raw!r}")

    if is_ip_host(host):
        if host.startswith("www."):
            sub, domain = "www", host[4:]
        else:
            sub, domain = None, host
        return ParsedUrl(scheme, host, sub, domain, None, True, port, path, query, fragment, userinfo)

    sub, domain, tld = effective_tld_split(host, tld_table)
    if not domain:
        raise UnparsableUrl(f"no domain label in {raw!r}")
    return ParsedUrl(scheme, host, sub, domain, tld, False, port, path, query, fragment, userinfo)
