"""Desk-scale synthetic URL corpora and matching replay fixtures.

Per-row targets for host-label length, path length and special-character
count are drawn first (symmetric clipped normals, so clipping leaves the
mean alone) and the URL is then assembled to hit them exactly. The label
mean is solved from the class's target total length, so class means track
the targets up to sampling noise and the small hard-case admixture.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset, Row
from .features.lexical import LexicalResources
from .features.providers import FixtureStore
from .features.schema import TYPOSQUAT_KINDS
from .features.typosquat import typosquat_variants
from .url_model import parse_url

CAPTURED_AT = "2024-01-01T00:00:00Z"


@dataclass(frozen=True)
class ClassProfile:
    mean_length: float
    mean_special: float
    mean_path: float
    sd_special: float
    sd_path: float
    https_rate: float
    www_rate: float
    ip_rate: float


BENIGN = ClassProfile(44.28, 8.64, 17.54, 1.5, 5.0, 0.6, 0.7, 0.0)
MALICIOUS = ClassProfile(63.14, 13.98, 42.60, 2.5, 9.0, 0.25, 0.15, 0.012)

BENIGN_TLDS = ("com", "com", "com", "org", "net", "edu", "co.uk", "de", "io", "gov")
MALICIOUS_TLDS = ("com", "tk", "ml", "ga", "xyz", "top", "info", "ru", "cn", "biz")
BENIGN_SEPS = "/-_."
MALICIOUS_SEPS = "/-_.=~%@&"
HARD_FRACTION = 0.02


def _clipped(rng, mean, sd, width=2.5):
    return float(np.clip(rng.normal(mean, sd), mean - width * sd, mean + width * sd))


def _alnum_fill(rng, n: int, words: list[str], digit_rate: float) -> str:
    out = []
    while sum(len(w) for w in out) < n:
        if rng.random() < digit_rate:
            out.append("".join(rng.choice(list(string.digits + "abcdef"), size=int(rng.integers(3, 9)))))
        else:
            out.append(words[int(rng.integers(len(words)))])
    return "".join(out)[:n]


def _build_path(rng, length: int, specials: int, seps: str, words, digit_rate) -> str:
    """Exactly ``length`` chars starting with "/", exactly ``specials`` non-alnum chars."""
    length = max(length, 1)
    specials = int(np.clip(specials, 1, max(1, (length + 1) // 2)))
    if length == 1:
        return "/"
    # separators sit at distinct positions 1..length-1, never adjacent
    slots = np.arange(2, length, 2)
    k = min(specials - 1, len(slots))
    pos = set(rng.choice(slots, size=k, replace=False).tolist()) if k else set()
    fill = _alnum_fill(rng, length, words, digit_rate)
    chars = ["/"]
    for i in range(1, length):
        chars.append(seps[int(rng.integers(len(seps)))] if i in pos else fill[i])
    return "".join(chars)


def _word_fill(rng, n: int, by_len: dict[int, list[str]]) -> str:
    """Whole dictionary words totalling exactly ``n`` chars when the lengths allow it."""
    out, left = [], n
    while left > 0:
        if left in by_len and (left <= 8 or rng.random() < 0.5):
            pool = by_len[left]
        else:
            fits = [k for k in by_len if k <= left - 3] or [k for k in by_len if k <= left]
            if not fits:
                out.append("x" * left)
                break
            pool = by_len[fits[int(rng.integers(len(fits)))]]
        w = pool[int(rng.integers(len(pool)))]
        out.append(w)
        left -= len(w)
    return "".join(out)


def _label(rng, n: int, words, digit_rate) -> str:
    n = max(n, 2)
    if digit_rate == 0.0:
        by_len: dict[int, list[str]] = {}
        for w in words:
            by_len.setdefault(len(w), []).append(w)
        return _word_fill(rng, n, by_len)
    s = _alnum_fill(rng, n, words, digit_rate)
    return s if s[0].isalpha() else "x" + s[1:]


def _label_mean(profile: ClassProfile, tlds) -> float:
    """Label length that makes the expected URL length equal the profile mean."""
    scheme = 7 + profile.https_rate
    prefix = 4 * profile.www_rate
    suffix = 1 + float(np.mean([len(t) for t in tlds]))
    return profile.mean_length - scheme - prefix - suffix - profile.mean_path


def _synth_one(rng, profile: ClassProfile, malicious: bool, words, sensitive, ip: bool) -> str:
    tlds = MALICIOUS_TLDS if malicious else BENIGN_TLDS
    scheme = "https://" if rng.random() < profile.https_rate else "http://"
    path_len = int(round(_clipped(rng, profile.mean_path, profile.sd_path)))
    special = int(round(_clipped(rng, profile.mean_special, profile.sd_special)))
    label_len = int(round(_clipped(rng, _label_mean(profile, tlds), 3.0, width=2.0)))
    if ip:
        host = ".".join(str(int(x)) for x in rng.integers(1, 255, size=4))
        host_specials = 3
    else:
        tld = tlds[int(rng.integers(len(tlds)))]
        prefix = "www." if rng.random() < profile.www_rate else ""
        digit_rate = 0.45 if malicious else 0.0
        label = _label(rng, label_len, words if not malicious else words + sensitive, digit_rate)
        if malicious and len(label) > 6 and rng.random() < 0.4:
            cut = int(rng.integers(2, len(label) - 2))
            label = label[:cut] + "-" + label[cut + 1:]
        host = f"{prefix}{label}.{tld}"
        host_specials = sum(1 for c in host if not c.isalnum())
    path_specials = special - 3 - host_specials
    pool = (sensitive + words) if malicious else words
    path = _build_path(rng, path_len, path_specials, MALICIOUS_SEPS if malicious else BENIGN_SEPS,
                       pool, 0.3 if malicious else 0.05)
    return scheme + host + path


def synthesize_corpus(n_per_class: int, seed, name: str = "synthetic",
                      hard_fraction: float = HARD_FRACTION) -> LabeledDataset:
    """``n_per_class`` benign then malicious-like URLs, shuffled by ``seed``.

    A ``hard_fraction`` of each class is drawn from the other class's URL
    profile (label unchanged), so detectors are not trivially perfect.
    """
    if n_per_class < 10:
        raise ValueError("n_per_class must be >= 10")
    rng = np.random.default_rng(seed)
    res = LexicalResources.default()
    nouns = sorted(w for w, t in res.dictionary.items() if t & {"noun", "verb", "adjective"} and w.isalpha() and len(w) >= 2)
    sensitive = [w for w in res.sensitive_words if w.isalpha()]
    n_ip = int(round(MALICIOUS.ip_rate * n_per_class))
    n_hard = int(round(hard_fraction * n_per_class))
    rows = []
    for label in (0, 1):
        profile = MALICIOUS if label else BENIGN
        ip_rows = set(rng.permutation(n_per_class)[:n_ip].tolist()) if label else set()
        hard_rows = set(rng.permutation(n_per_class)[:n_hard].tolist())
        seen: set[str] = set()
        i = 0
        while i < n_per_class:
            flip = i in hard_rows
            p = (BENIGN if label else MALICIOUS) if flip else profile
            looks_bad = bool(label) != flip
            url = _synth_one(rng, p, looks_bad, nouns, sensitive, i in ip_rows and not flip)
            host = parse_url(url).host
            if host in seen:
                continue
            seen.add(host)
            rows.append(Row(url, label))
            i += 1
    order = rng.permutation(len(rows))
    return LabeledDataset(tuple(rows[i] for i in order), name,
                          {"sources": ["synthetic"], "seed": seed, "n_per_class": n_per_class})


# -- replay fixtures ----------------------------------------------------------


def _days_to_iso(days: int) -> str:
    return str(np.datetime64("1970-01-01") + np.timedelta64(int(days), "D"))


def _page(rng, benign: bool) -> str:
    imgs = int(rng.integers(3, 30) if benign else rng.integers(0, 6))
    links = int(rng.integers(20, 120) if benign else rng.integers(0, 15))
    divs = int(rng.integers(10, 80) if benign else rng.integers(1, 12))
    parts = ["<html><head>"]
    if benign or rng.random() < 0.3:
        parts.append("<title>Welcome</title>")
    parts.append('<meta charset="utf-8">' * int(rng.integers(1, 6)))
    parts.append("</head><body>")
    parts.append('<a href="/p">x</a>' * links)
    parts.append('<img src="i.png">' * imgs)
    parts.append("<div>text</div>" * divs)
    bad = not benign
    if bad and rng.random() < 0.5:
        parts.append("<script>window.open('http://x.example/');eval(unescape('%61'));</script>")
    if bad and rng.random() < 0.4:
        parts.append('<body oncontextmenu="return false">')
    if bad and rng.random() < 0.3:
        parts.append('<a href="#" onmouseover="window.status=\'https://bank.example\'">go</a>')
    if bad and rng.random() < 0.3:
        parts.append('<iframe src="http://x.example/"></iframe>')
    if bad and rng.random() < 0.3:
        parts.append('<form action="/x"><img src="b.png"></form>')
    if benign and rng.random() < 0.5:
        parts.append('<a href="mailto:info@example.org">mail</a>')
    if benign and rng.random() < 0.3:
        parts.append("<script>document.search('q');</script>")
    parts.append("</body></html>")
    return "".join(parts)


def synthesize_fixtures(d: LabeledDataset, seed, today: str = "2024-01-01") -> dict[str, FixtureStore]:
    """Label-conditioned search/whois/pages/registry stores covering every row of ``d``."""
    rng = np.random.default_rng(seed)
    stores = {"search": FixtureStore("search"), "whois": FixtureStore("whois"),
              "pages": FixtureStore("pages"), "registry": FixtureStore("registry", default=False)}
    today_days = int((np.datetime64(today) - np.datetime64("1970-01-01")).astype(int))
    benign_domains = sorted({parse_url(r.url).registered_domain for r in d.rows if r.label == 0}) or ["example.com"]
    for r in d.rows:
        u = parse_url(r.url)
        dom = u.registered_domain
        benign = r.label == 0
        # noisy label signal: 5% of rows get the other class's web profile
        looks_benign = benign != (rng.random() < 0.05)
        others = [benign_domains[int(i)] for i in rng.integers(len(benign_domains), size=int(rng.integers(10, 60)))]
        if looks_benign and not u.is_ip_host:
            own = [f"{p}.{dom}" for p in ("www", "m", "blog", "shop", "news")[: int(rng.integers(1, 6))]]
            hits = own * int(rng.integers(2, 8))
            results = (hits + others)[:60]
        else:
            results = others[: int(rng.integers(5, 40))]
        if dom not in stores["search"]:
            stores["search"].put(dom, results, CAPTURED_AT)
        if dom not in stores["whois"]:
            if looks_benign:
                created = today_days - int(rng.integers(700, 9000))
            else:
                created = today_days - int(rng.integers(1, 400))
            if not looks_benign and rng.random() < 0.35:
                rec = None
            else:
                ip = u.domain if u.is_ip_host else ".".join(str(int(x)) for x in rng.integers(1, 255, size=4))
                rec = {
                    "ip": ip,
                    "asn": int(rng.integers(1000, 20000) if looks_benign else rng.integers(20000, 65000)),
                    "asn_country_code": str(rng.choice(["US", "GB", "DE", "FR", "CA"] if looks_benign
                                                       else ["RU", "CN", "NG", "US", "BR"])),
                    "asn_cidr": f"{ip}/{int(rng.integers(12, 20) if looks_benign else rng.integers(20, 28))}",
                    "postal_code": str(int(rng.integers(10000, 99999))),
                    "creation_date": _days_to_iso(created),
                    "updated_date": _days_to_iso(min(today_days, created + int(rng.integers(0, 700)))),
                }
            stores["whois"].put(dom, rec, CAPTURED_AT)
        key = r.url.strip()
        reachable = looks_benign or rng.random() < 0.5
        stores["pages"].put(key, _page(rng, looks_benign) if reachable else None, CAPTURED_AT)
        if looks_benign and not u.is_ip_host:
            label, _, tld = dom.partition(".")
            for kind in TYPOSQUAT_KINDS:
                variants = sorted(typosquat_variants(label, kind))
                if not variants:
                    continue
                take = min(len(variants), int(rng.integers(0, 4)))
                for i in rng.choice(len(variants), size=take, replace=False):
                    stores["registry"].put(f"{variants[int(i)]}.{tld}", True, CAPTURED_AT)
    return stores
