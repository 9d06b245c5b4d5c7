"""The 49 lexical URL features (40 linguistic + 9 human-engineered).

Everything here is computed from the URL string alone. Word lists, the
part-of-speech dictionary and the suffix table are bundled snapshots under
``advurl/data`` so extraction is deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

from ..errors import EmptyDictionary, EmptyDomain
from ..url_model import ParsedUrl, default_tld_table
from .ngram import NgramModel, ngram_score, ngram_train

DELIMITERS = set("(){}[],/*")
_HEX_TOKEN_RE = re.compile(r"[0-9a-fA-F]{16,}")
_PATH_TLD_RE = re.compile(r"\.([a-z]{2,})(?=[^a-z0-9]|$)")
_EXT_RE = re.compile(r"\.([A-Za-z0-9]{1,6})$")

NOUN_LIKE = {"noun", "pronoun"}
VERB_LIKE = {"verb", "adjective"}


def _read_lines(name: str) -> list[str]:
    text = resources.files("advurl.data").joinpath(name).read_text("utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def load_word_list(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]


def parse_dictionary(lines: Iterable[str]) -> dict[str, frozenset[str]]:
    """Tab-separated ``word<TAB>pos`` lines; a word may appear with several tags."""
    tags: dict[str, set[str]] = {}
    for line in lines:
        word, _, pos = line.partition("\t")
        word = word.strip().lower()
        if word:
            tags.setdefault(word, set()).add(pos.strip().lower())
    return {w: frozenset(p) for w, p in tags.items()}


@dataclass(frozen=True)
class LexicalResources:
    tld_table: frozenset[str]
    dictionary: Mapping[str, frozenset[str]]
    sensitive_words: tuple[str, ...]
    suspicious_domains: frozenset[str]
    anonymous_words: tuple[str, ...]
    ngram_models: tuple[NgramModel, NgramModel, NgramModel] = field(repr=False, default=None)

    @classmethod
    @lru_cache(maxsize=1)
    def default(cls) -> "LexicalResources":
        dictionary = parse_dictionary(_read_lines("dictionary.tsv"))
        return cls.build(
            tld_table=default_tld_table(),
            dictionary=dictionary,
            sensitive_words=_read_lines("sensitive_words.txt"),
            suspicious_domains=_read_lines("suspicious_domains.txt"),
            anonymous_words=_read_lines("anonymous_words.txt"),
        )

    @classmethod
    def build(cls, tld_table, dictionary, sensitive_words, suspicious_domains, anonymous_words,
              ngram_corpus: Iterable[str] | None = None) -> "LexicalResources":
        corpus = sorted(dictionary) if ngram_corpus is None else list(ngram_corpus)
        models = tuple(ngram_train(corpus, n) for n in (1, 2, 3))
        return cls(frozenset(tld_table), dictionary, tuple(w.lower() for w in sensitive_words),
                   frozenset(d.lower() for d in suspicious_domains),
                   tuple(w.lower() for w in anonymous_words), models)


def _ratio(num: int, den: int) -> float:
    return num / den if den else float(num)


def dist_digit_alphabet(text: str) -> float:
    """Mean distance (in character positions) from each digit to its nearest letter."""
    letters = [i for i, c in enumerate(text) if c.isascii() and c.isalpha()]
    digits = [i for i, c in enumerate(text) if c.isascii() and c.isdigit()]
    if not letters or not digits:
        return 0.0
    total = 0
    j = 0
    for d in digits:
        while j + 1 < len(letters) and letters[j + 1] < d:
            j += 1
        best = abs(d - letters[j])
        if j + 1 < len(letters):
            best = min(best, abs(letters[j + 1] - d))
        total += best
    return total / len(digits)


def file_extension(path: str) -> str:
    last = path.rsplit("/", 1)[-1]
    m = _EXT_RE.search(last)
    return m.group(1).lower() if m and m.start() > 0 else ""


def char_counts(text: str) -> tuple[int, int, int]:
    """(letters, digits, special) where letters/digits are ASCII and special is
    any other non-whitespace character."""
    letters = digits = special = 0
    for c in text:
        if c.isascii() and c.isalpha():
            letters += 1
        elif c.isascii() and c.isdigit():
            digits += 1
        elif not c.isspace():
            special += 1
    return letters, digits, special


def extract_linguistic(u: ParsedUrl, raw: str, tld_table=None, anonymous_words=None) -> dict:
    """The forty linguistic slots. TLD and FileExtension come back as strings."""
    res = None
    if tld_table is None or anonymous_words is None:
        res = LexicalResources.default()
    tld_table = tld_table if tld_table is not None else res.tld_table
    anonymous_words = anonymous_words if anonymous_words is not None else res.anonymous_words

    url = raw.strip()
    low = url.lower()
    letters, digits, special = char_counts(url)
    upper = sum(1 for c in url if c.isascii() and c.isupper())
    lower = sum(1 for c in url if c.isascii() and c.islower())
    path, query = u.path, u.query or ""
    tld = u.tld or ""
    sub_labels = (u.subdomain or "").split(".") if u.subdomain else []

    f = {}
    f["URLLength"] = len(url)
    f["CheckIPAsHostName"] = int(u.is_ip_host)
    f["CheckEXE"] = int(".exe" in low)
    f["DigitAlphabetRatio"] = _ratio(digits, letters)
    f["SpecialcharAlphabetRatio"] = _ratio(special, letters)
    f["UppercaseLowercaseRatio"] = _ratio(upper, lower)
    f["DomainURLRatio"] = len(u.registered_domain) / len(url) if url else 0.0
    f["NumericCharCount"] = digits
    f["EnglishLetterCount"] = letters
    f["SpecialCharCount"] = special
    for name, ch in (("DotCount", "."), ("SemiColCount", ";"), ("UnderscoreCount", "_"),
                     ("QuesMarkCount", "?"), ("HashCharCount", "#"), ("EqualCount", "="),
                     ("PercentCharCount", "%"), ("AmpersandCount", "&"), ("DashCharCount", "-")):
        f[name] = url.count(ch)
    f["DelimiterCount"] = sum(1 for c in url if c in DELIMITERS)
    f["AtCharCount"] = url.count("@")
    f["TildeCharCount"] = url.count("~")
    f["DoubleSlashCount"] = path.count("//")
    f["IsHashed"] = int(bool(_HEX_TOKEN_RE.search(path)))
    f["TLD"] = tld
    f["DistDigitAlphabet"] = dist_digit_alphabet(url)
    f["HttpsInUrl"] = int("https" in low)
    f["FileExtension"] = file_extension(path)
    f["TLDInSubdomain"] = int(any(lab in tld_table for lab in sub_labels if lab != "www"))
    f["TLDInPath"] = int(any(m.group(1) in tld_table for m in _PATH_TLD_RE.finditer(path.lower())))
    f["HttpsInHostName"] = int("https" in u.host)
    f["HostNameLength"] = len(u.host)
    f["PathLength"] = len(path)
    f["QueryLength"] = len(query)
    f["DistWordBased"] = int(any(w in low for w in anonymous_words))
    # 1 when the URL carries no "www" at all
    f["URLWithoutwww"] = int("www" not in low)
    f["FTPUsed"] = int("ftp://" in low)
    f["JSUsed"] = int(".js" in low)
    f["FilesInURL"] = int(bool(file_extension(path)))
    f["CSSUsed"] = int(".css" in low)
    return f


def segment_words(text: str, dictionary: Mapping[str, frozenset[str]], min_len: int = 2) -> list[str]:
    """Split ``text`` into the fewest dictionary words; [] when impossible.

    Ties prefer the longest leading word, which keeps the result deterministic.
    """
    n = len(text)
    best: list[tuple[int, int] | None] = [None] * (n + 1)  # (word count, split point)
    best[n] = (0, n)
    for i in range(n - 1, -1, -1):
        for j in range(n, i + min_len - 1, -1):
            if best[j] is not None and text[i:j] in dictionary:
                cand = best[j][0] + 1
                if best[i] is None or cand < best[i][0]:
                    best[i] = (cand, j)
    if best[0] is None:
        return []
    words, i = [], 0
    while i < n:
        j = best[i][1]
        words.append(text[i:j])
        i = j
    return words


def classify_domain_word(domain: str, dictionary: Mapping[str, frozenset[str]]) -> tuple[int, int, int, int]:
    """Return (is_english, is_meaningful, is_pronounceable, is_random).

    Exactly one of the last three flags is set. Alphabetic runs (split on
    digits and hyphens) are segmented into dictionary words; any noun or
    pronoun makes the name meaningful, otherwise any verb or adjective makes it
    pronounceable, otherwise it is random.
    """
    if not dictionary:
        raise EmptyDictionary("domain dictionary is empty")
    domain = domain.strip().lower()
    if not domain:
        raise EmptyDomain("domain is empty")
    is_english = int(domain in dictionary)
    words: list[str] = []
    for chunk in re.split(r"[^a-z]+", domain):
        if chunk:
            words.extend(segment_words(chunk, dictionary))
    tags = set()
    for w in words:
        tags |= dictionary.get(w, frozenset())
    if tags & NOUN_LIKE:
        return is_english, 1, 0, 0
    if tags & VERB_LIKE:
        return is_english, 0, 1, 0
    return is_english, 0, 0, 1


def sensitive_and_suspicious(domain_and_path: str, sensitive_words, suspicious_domains,
                             registered_domain: str | None = None) -> tuple[int, int]:
    """Count sensitive-word hits (case-insensitive substring occurrences) and test
    the registered domain against the suspicious list."""
    if not sensitive_words:
        raise ValueError("sensitive word list is empty")
    low = domain_and_path.lower()
    hits = sum(low.count(w.lower()) for w in sensitive_words)
    if registered_domain is None:
        registered_domain = low.split("/", 1)[0]
    listed = int(registered_domain.lower() in suspicious_domains)
    return hits, listed


def extract_lexical(u: ParsedUrl, raw: str, resources_: LexicalResources | None = None) -> dict:
    """All 49 lexical slots in table order."""
    res = resources_ or LexicalResources.default()
    f = extract_linguistic(u, raw, res.tld_table, res.anonymous_words)
    label = u.domain if not u.is_ip_host else ""
    if label:
        eng, meaningful, pron, rand = classify_domain_word(label, res.dictionary)
    else:
        eng, meaningful, pron, rand = 0, 0, 0, 1
    f["IsDomainEnglishWord"] = eng
    f["IsDomainMeaningful"] = meaningful
    f["IsDomainPronounceable"] = pron
    f["IsDomainRandom"] = rand
    for name, model in zip(("Unigram", "Bigram", "Trigram"), res.ngram_models):
        f[name] = ngram_score(model, label)
    hits, listed = sensitive_and_suspicious(u.host + u.path, res.sensitive_words,
                                            res.suspicious_domains, u.registered_domain)
    f["SensitiveWordCount"] = hits
    f["InSuspiciousList"] = listed
    return f
