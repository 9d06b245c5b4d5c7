"""The 40 web-scraped features: deep-web, URL segmentation, host and content.

Provider failures never raise out of this module; they turn into the
missing-value sentinel -1 for the affected slots. Every legitimate value is
non-negative, so the sentinel cannot collide.

Content flags are found by pattern scanning of the raw HTML, not by a DOM
parse. The pattern table:

====================  ==========================================================
FakeLinkInStatusBar   ``onmouseover=`` handler that writes ``window.status``
RightClickDisabled    ``event.button==2`` or ``oncontextmenu=...return false``
PopUpWindow           ``window.open(``
CheckMailto           ``mailto:``
CheckFrametag         ``<frame`` or ``<iframe``
TitleCheck            no ``<title>`` tag, or one with only whitespace inside
ImageOnlyInForm       a ``<form>`` holding ``<img>`` but no visible text and no
                      text/password/email inputs
====================  ==========================================================
"""

from __future__ import annotations

import datetime as _dt
import ipaddress
import math
import re
import zlib
from collections import Counter
from typing import Iterable, Optional

from ..errors import EmptyString, ProviderUnavailable
from ..url_model import ParsedUrl, parse_url
from .schema import MISSING, TYPOSQUAT_KINDS, TYPOSQUAT_SLOT_NAMES
from .typosquat import typosquat_variants

SEARCH_LIMIT = 60

HOST_SLOTS = ("IPAddress", "ASNNumber", "ASNCountryCode", "ASN_CIDR", "ASNPostalCode",
              "ASNCreationDate", "ASNUpdationDate", "DomainAgeInDays")
CONTENT_SLOTS = ("ImgCount", "TotalLinks", "NumParameters", "NumFragments", "BodyTagCount",
                 "MetaTagCount", "DivTagCount", "FakeLinkInStatusBar", "RightClickDisabled",
                 "PopUpWindow", "CheckMailto", "CheckFrametag", "TitleCheck", "SourceEvalCount",
                 "SourceEscapeCount", "SourceExecCount", "SourceSearchCount", "ImageOnlyInForm")

_EPOCH = _dt.date(1970, 1, 1)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def shannon_entropy(s: str) -> float:
    """Bits per character of the empirical character distribution."""
    if not s:
        raise EmptyString("entropy of an empty string")
    n = len(s)
    h = -sum((c / n) * math.log2(c / n) for c in Counter(s).values())
    return h + 0.0  # no negative zero


# -- deep web ---------------------------------------------------------------


def _split_label(domain: str) -> tuple[str, str]:
    label, _, tld = domain.partition(".")
    return label, tld


def typosquat_feature(domain: str, kind: str, registry) -> int:
    """How many generated look-alikes of ``domain`` the registry reports as registered.

    ``domain`` is a registered domain such as ``example.com``; permutations are
    applied to the leftmost label and the suffix is re-attached.
    """
    label, tld = _split_label(domain)
    variants = typosquat_variants(label, kind)
    try:
        return sum(1 for v in sorted(variants)
                   if registry.is_registered(f"{v}.{tld}" if tld else v))
    except ProviderUnavailable:
        return -1


def _registered(host: str) -> str:
    try:
        return parse_url(host).registered_domain
    except Exception:
        return host.lower()


def search_hit_count(domain: str, search) -> int:
    """Number of the top 60 result hosts that sit on the queried registered domain."""
    try:
        hosts = search.search(domain)
    except ProviderUnavailable:
        return -1
    target = domain.lower()
    return sum(1 for h in hosts[:SEARCH_LIMIT] if _registered(h) == target)


def nearest_distance(domain: str, candidates: Iterable[str]) -> Optional[int]:
    best = None
    for c in candidates:
        d = levenshtein(domain, c)
        if best is None or d < best:
            best = d
            if d == 0:
                break
    return best


def levenshtein_feature(domain: str, search, suspicious_domains: Iterable[str] = ()) -> float:
    """Edit distance from ``domain`` to its nearest search-result host.

    Falls back to the nearest suspicious-list entry when search is down, and
    to the sentinel when neither source has candidates.
    """
    try:
        hosts = [_registered(h) for h in search.search(domain)[:SEARCH_LIMIT]]
    except ProviderUnavailable:
        hosts = []
    d = nearest_distance(domain, hosts)
    if d is None:
        d = nearest_distance(domain, sorted(suspicious_domains))
    return MISSING if d is None else float(d)


# -- host based -------------------------------------------------------------


def ipv4_to_int(ip: str) -> int:
    return int(ipaddress.IPv4Address(ip))


def country_code_id(code: str) -> int:
    """Two-letter code as base-27 number ("US" -> 21*27+19); 0 for anything else."""
    code = (code or "").strip().upper()
    if len(code) != 2 or not code.isalpha() or not code.isascii():
        return 0
    return (ord(code[0]) - 64) * 27 + (ord(code[1]) - 64)


def postal_code_id(code: str) -> int:
    code = (code or "").strip().upper()
    if not code:
        return 0
    if code.isdigit():
        return int(code)
    return zlib.crc32(code.encode()) % 10_000_000


def _epoch_days(value) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return int(value)
    try:
        return (_dt.date.fromisoformat(str(value)[:10]) - _EPOCH).days
    except ValueError:
        return None


def _non_negative(v) -> float:
    return float(v) if v is not None and v >= 0 else MISSING


def host_features(domain: str, whois, today: str | _dt.date, ip_hint: str | None = None) -> dict:
    """IP, ASN, country, CIDR prefix length, postal code, WHOIS dates and domain age.

    Dates are days since 1970-01-01. ``today`` is configuration, never the wall
    clock, so replayed extractions are stable.
    """
    out = dict.fromkeys(HOST_SLOTS, MISSING)
    try:
        rec = whois.lookup(domain)
    except ProviderUnavailable:
        return out
    if not rec:
        return out
    ip = rec.get("ip") or ip_hint
    if ip:
        try:
            out["IPAddress"] = float(ipv4_to_int(ip))
        except ValueError:
            pass
    if rec.get("asn") is not None:
        out["ASNNumber"] = float(int(rec["asn"]))
    if rec.get("asn_country_code"):
        out["ASNCountryCode"] = float(country_code_id(rec["asn_country_code"]))
    cidr = rec.get("asn_cidr")
    if cidr and "/" in str(cidr):
        try:
            out["ASN_CIDR"] = float(int(str(cidr).rsplit("/", 1)[1]))
        except ValueError:
            pass
    if rec.get("postal_code"):
        out["ASNPostalCode"] = float(postal_code_id(rec["postal_code"]))
    created = _epoch_days(rec.get("creation_date"))
    updated = _epoch_days(rec.get("updated_date"))
    out["ASNCreationDate"] = _non_negative(created)
    out["ASNUpdationDate"] = _non_negative(updated)
    if created is not None:
        today_days = _epoch_days(today.isoformat() if isinstance(today, _dt.date) else today)
        out["DomainAgeInDays"] = _non_negative(today_days - created)
    return out


# -- content based ----------------------------------------------------------

_TAG = {name: re.compile(rf"<{tag}\b", re.I) for name, tag in (
    ("ImgCount", "img"), ("BodyTagCount", "body"), ("MetaTagCount", "meta"), ("DivTagCount", "div"))}
_LINK_RE = re.compile(r"<(?:a|link)\b", re.I)
_STATUS_RE = re.compile(r"onmouseover\s*=\s*([\"']).*?window\.status.*?\1", re.I | re.S)
_RIGHT_CLICK_RE = re.compile(r"event\.button\s*==+\s*2|oncontextmenu\s*=\s*[\"']?\s*return\s+false", re.I)
_POPUP_RE = re.compile(r"window\.open\s*\(", re.I)
_FRAME_RE = re.compile(r"<i?frame\b", re.I)
_TITLE_RE = re.compile(r"<title\b[^>]*>(.*?)</title>", re.I | re.S)
_FORM_RE = re.compile(r"<form\b[^>]*>(.*?)</form>", re.I | re.S)
_TEXT_INPUT_RE = re.compile(r"<input\b(?![^>]*type\s*=\s*[\"']?(?:hidden|submit|image|button)\b)[^>]*>", re.I)
_CALLS = {name: re.compile(rf"\b{fn}\s*\(", re.I) for name, fn in (
    ("SourceEvalCount", "eval"), ("SourceEscapeCount", "escape"),
    ("SourceExecCount", "exec"), ("SourceSearchCount", "search"))}
_TAG_STRIP_RE = re.compile(r"<[^>]*>")


def _image_only_form(html: str) -> int:
    for body in _FORM_RE.findall(html):
        if re.search(r"<img\b", body, re.I) and not _TEXT_INPUT_RE.search(body):
            if not _TAG_STRIP_RE.sub("", body).strip():
                return 1
    return 0


def content_features(url: ParsedUrl | str, fetcher) -> dict:
    """Eighteen page/URL content slots; all -1 when the page cannot be fetched."""
    u = parse_url(url) if isinstance(url, str) else url
    key = url if isinstance(url, str) else u.serialize()
    out = dict.fromkeys(CONTENT_SLOTS, MISSING)
    try:
        html = fetcher.fetch(key)
    except ProviderUnavailable:
        return out
    if html is None:
        return out
    for name, rx in _TAG.items():
        out[name] = float(len(rx.findall(html)))
    out["TotalLinks"] = float(len(_LINK_RE.findall(html)))
    query = u.query or ""
    out["NumParameters"] = float(sum(1 for p in query.split("&") if p))
    out["NumFragments"] = float(key.count("#"))
    out["FakeLinkInStatusBar"] = float(bool(_STATUS_RE.search(html)))
    out["RightClickDisabled"] = float(bool(_RIGHT_CLICK_RE.search(html)))
    out["PopUpWindow"] = float(bool(_POPUP_RE.search(html)))
    out["CheckMailto"] = float("mailto:" in html.lower())
    out["CheckFrametag"] = float(bool(_FRAME_RE.search(html)))
    titles = _TITLE_RE.findall(html)
    out["TitleCheck"] = float(not titles or not any(t.strip() for t in titles))
    for name, rx in _CALLS.items():
        out[name] = float(len(rx.findall(html)))
    out["ImageOnlyInForm"] = float(_image_only_form(html))
    return out


# -- all web slots ----------------------------------------------------------


def extract_web(u: ParsedUrl, raw: str, providers, today, suspicious_domains: Iterable[str] = ()) -> dict:
    """All 40 web slots in table order."""
    domain = u.registered_domain
    f: dict[str, float] = {}
    f["LevenshteinDistance"] = levenshtein_feature(domain, providers.search, suspicious_domains)
    f["Entropy"] = shannon_entropy(raw.strip())
    for kind, name in zip(TYPOSQUAT_KINDS, TYPOSQUAT_SLOT_NAMES):
        f[name] = 0.0 if u.is_ip_host else float(typosquat_feature(domain, kind, providers.registry))
    f["GoogleSearchFeature"] = float(search_hit_count(domain, providers.search))
    ip_hint = u.domain if u.is_ip_host and "[" not in u.domain else None
    f.update(host_features(domain, providers.whois, today, ip_hint))
    f.update(content_features(raw.strip(), providers.fetcher))
    return f
