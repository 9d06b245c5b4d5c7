"""Domain-label permutation fuzzer (eleven typosquat families)."""

from __future__ import annotations

import re
import string

from ..errors import UnknownKind
from .schema import TYPOSQUAT_KINDS

_LABEL_RE = re.compile(r"^[a-z0-9](?:[a-z0-9-]*[a-z0-9])?(?:\.[a-z0-9](?:[a-z0-9-]*[a-z0-9])?)*$")
_VALID_CHARS = set(string.ascii_lowercase + string.digits + "-")
VOWELS = "aeiou"

QWERTY = {
    "1": "2q", "2": "3wq1", "3": "4ew2", "4": "5re3", "5": "6tr4", "6": "7yt5", "7": "8uy6",
    "8": "9iu7", "9": "0oi8", "0": "po9",
    "q": "12wa", "w": "3esaq2", "e": "4rdsw3", "r": "5tfde4", "t": "6ygfr5", "y": "7uhgt6",
    "u": "8ijhy7", "i": "9okju8", "o": "0plki9", "p": "lo0",
    "a": "qwsz", "s": "edxzaw", "d": "rfcxse", "f": "tgvcdr", "g": "yhbvft", "h": "ujnbgy",
    "j": "ikmnhu", "k": "olmji", "l": "kop",
    "z": "asx", "x": "zsdc", "c": "xdfv", "v": "cfgb", "b": "vghn", "n": "bhjm", "m": "njk",
}

# ASCII confusables; keys may span two characters ("rn" looks like "m")
HOMOGLYPHS = {
    "0": ("o",), "1": ("l", "i"), "3": ("8",), "5": ("s",), "6": ("9", "b"), "8": ("3", "b"),
    "9": ("6", "g"), "a": ("4",), "b": ("d", "6", "lb"), "c": ("e",), "d": ("b", "cl"),
    "e": ("c", "3"), "g": ("q", "9"), "h": ("lh", "b"), "i": ("1", "l", "j"), "j": ("i",),
    "k": ("lc",), "l": ("1", "i"), "m": ("n", "nn", "rn"), "n": ("m", "r"), "o": ("0",),
    "q": ("g",), "s": ("5",), "u": ("v",), "v": ("u",), "w": ("vv",), "z": ("2",),
    "rn": ("m",), "cl": ("d",), "vv": ("w",),
}


def _valid(label: str) -> bool:
    return bool(label) and _LABEL_RE.match(label) is not None


def _hyphenation(d):
    return {d[:i] + "-" + d[i:] for i in range(1, len(d))}


def _homoglyph(d):
    out = set()
    for i in range(len(d)):
        for width in (1, 2):
            key = d[i:i + width]
            if len(key) == width:
                for rep in HOMOGLYPHS.get(key, ()):
                    out.add(d[:i] + rep + d[i + width:])
    return out


def _vowel_swap(d):
    return {d[:i] + v + d[i + 1:] for i, c in enumerate(d) if c in VOWELS for v in VOWELS if v != c}


def _bitsquatting(d):
    out = set()
    for i, c in enumerate(d):
        code = ord(c)
        for bit in range(8):
            flipped = chr(code ^ (1 << bit))
            if flipped in _VALID_CHARS:
                out.add(d[:i] + flipped + d[i + 1:])
    return out


def _insertion(d):
    out = set()
    for i, c in enumerate(d):
        for k in QWERTY.get(c, ""):
            out.add(d[:i] + k + d[i:])
            out.add(d[:i + 1] + k + d[i + 1:])
    return out


def _omission(d):
    return {d[:i] + d[i + 1:] for i in range(len(d))}


def _repetition(d):
    return {d[:i] + c + d[i:] for i, c in enumerate(d)}


def _replacement(d):
    return {d[:i] + k + d[i + 1:] for i, c in enumerate(d) for k in QWERTY.get(c, "")}


def _subdomain(d):
    return {d[:i] + "." + d[i:] for i in range(1, len(d)) if d[i - 1] not in "-." and d[i] not in "-."}


def _transposition(d):
    return {d[:i] + d[i + 1] + d[i] + d[i + 2:] for i in range(len(d) - 1) if d[i] != d[i + 1]}


def _addition(d):
    return {d + c for c in string.ascii_lowercase + string.digits}


_GENERATORS = dict(zip(TYPOSQUAT_KINDS, (
    _hyphenation, _homoglyph, _vowel_swap, _bitsquatting, _insertion, _omission,
    _repetition, _replacement, _subdomain, _transposition, _addition,
)))


def typosquat_variants(domain: str, kind: str) -> frozenset[str]:
    """Candidate look-alike labels of ``domain`` for one permutation family.

    The input label itself and anything that is not a valid ``[a-z0-9-]``
    hostname label are dropped.
    """
    try:
        gen = _GENERATORS[kind]
    except KeyError:
        raise UnknownKind(f"unknown typosquat kind {kind!r}") from None
    domain = domain.lower()
    return frozenset(v for v in gen(domain) if v != domain and _valid(v))


def all_variants(domain: str) -> dict[str, frozenset[str]]:
    return {kind: typosquat_variants(domain, kind) for kind in TYPOSQUAT_KINDS}
