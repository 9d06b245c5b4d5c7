"""The 89-slot feature layout: 49 lexical slots followed by 40 web slots."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import SchemaMismatch

MISSING = -1.0


@dataclass(frozen=True)
class Slot:
    name: str
    group: str  # "lexical" or "web"
    subgroup: str
    encoding: str  # count | binary | ratio | float | categorical | ip | id | days
    missing_sentinel: bool = False


def _slots(group, subgroup, encoding, names, sentinel=False):
    return [Slot(n, group, subgroup, encoding, sentinel) for n in names.split()]


_LING = "linguistic"
LEXICAL_SLOTS: list[Slot] = [
    Slot("URLLength", "lexical", _LING, "count"),
    Slot("CheckIPAsHostName", "lexical", _LING, "binary"),
    Slot("CheckEXE", "lexical", _LING, "binary"),
    *_slots("lexical", _LING, "ratio",
            "DigitAlphabetRatio SpecialcharAlphabetRatio UppercaseLowercaseRatio DomainURLRatio"),
    *_slots("lexical", _LING, "count",
            "NumericCharCount EnglishLetterCount SpecialCharCount DotCount SemiColCount UnderscoreCount "
            "QuesMarkCount HashCharCount EqualCount PercentCharCount AmpersandCount DashCharCount "
            "DelimiterCount AtCharCount TildeCharCount DoubleSlashCount"),
    Slot("IsHashed", "lexical", _LING, "binary"),
    Slot("TLD", "lexical", _LING, "categorical"),
    Slot("DistDigitAlphabet", "lexical", _LING, "float"),
    Slot("HttpsInUrl", "lexical", _LING, "binary"),
    Slot("FileExtension", "lexical", _LING, "categorical"),
    *_slots("lexical", _LING, "binary", "TLDInSubdomain TLDInPath HttpsInHostName"),
    *_slots("lexical", _LING, "count", "HostNameLength PathLength QueryLength"),
    *_slots("lexical", _LING, "binary", "DistWordBased URLWithoutwww FTPUsed JSUsed FilesInURL CSSUsed"),
    *_slots("lexical", "human_engineered", "binary",
            "IsDomainEnglishWord IsDomainMeaningful IsDomainPronounceable IsDomainRandom"),
    *_slots("lexical", "human_engineered", "float", "Unigram Bigram Trigram"),
    Slot("SensitiveWordCount", "lexical", "human_engineered", "count"),
    Slot("InSuspiciousList", "lexical", "human_engineered", "binary"),
]

TYPOSQUAT_KINDS = (
    "hyphenation", "homoglyph", "vowel_swap", "bitsquatting", "insertion", "omission",
    "repetition", "replacement", "subdomain", "transposition", "addition",
)
TYPOSQUAT_SLOT_NAMES = (
    "Hyphenstring", "Homoglyph", "Vowel", "Bitsquatting", "InsertionString", "Omission",
    "Repeatition", "Replacement", "Subdomain", "Transposition", "AdditionString",
)

WEB_SLOTS: list[Slot] = [
    Slot("LevenshteinDistance", "web", "deep_web", "float", True),
    Slot("Entropy", "web", "deep_web", "float"),
    *[Slot(n, "web", "deep_web", "count", True) for n in TYPOSQUAT_SLOT_NAMES],
    Slot("GoogleSearchFeature", "web", "url_segmentation", "count", True),
    Slot("IPAddress", "web", "host", "ip", True),
    Slot("ASNNumber", "web", "host", "id", True),
    Slot("ASNCountryCode", "web", "host", "id", True),
    Slot("ASN_CIDR", "web", "host", "id", True),
    Slot("ASNPostalCode", "web", "host", "id", True),
    Slot("ASNCreationDate", "web", "host", "days", True),
    Slot("ASNUpdationDate", "web", "host", "days", True),
    Slot("DomainAgeInDays", "web", "host", "days", True),
    *_slots("web", "content", "count",
            "ImgCount TotalLinks NumParameters NumFragments BodyTagCount MetaTagCount DivTagCount", True),
    *_slots("web", "content", "binary",
            "FakeLinkInStatusBar RightClickDisabled PopUpWindow CheckMailto CheckFrametag TitleCheck", True),
    *_slots("web", "content", "count",
            "SourceEvalCount SourceEscapeCount SourceExecCount SourceSearchCount", True),
    Slot("ImageOnlyInForm", "web", "content", "binary", True),
]


@dataclass(frozen=True)
class FeatureSchema:
    slots: tuple[Slot, ...]

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.slots]

    def __len__(self) -> int:
        return len(self.slots)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.names).encode()).hexdigest()[:16]

    @property
    def sentinel_mask(self) -> np.ndarray:
        return np.array([s.missing_sentinel for s in self.slots])


SCHEMA = FeatureSchema(tuple(LEXICAL_SLOTS + WEB_SLOTS))
N_LEXICAL = len(LEXICAL_SLOTS)
N_WEB = len(WEB_SLOTS)
N_FEATURES = len(SCHEMA)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    schema: FeatureSchema = SCHEMA

    def __post_init__(self):
        if len(self.values) != len(self.schema):
            raise SchemaMismatch(f"{len(self.values)} values for a {len(self.schema)}-slot schema")

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.schema.index(name)])

    def __eq__(self, other) -> bool:
        return (isinstance(other, FeatureVector) and self.schema == other.schema
                and np.array_equal(self.values, other.values))

    def to_list(self) -> list[float]:
        return [float(v) for v in self.values]

    @classmethod
    def from_list(cls, values: Sequence[float], schema: FeatureSchema = SCHEMA) -> "FeatureVector":
        return cls(np.asarray(values, dtype=np.float64), schema)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.schema.names, self.to_list()))


def assemble_feature_vector(lex: dict, web: dict, encoder=None) -> FeatureVector:
    """Lay out lexical then web values in schema order.

    String-typed lexical slots (TLD, FileExtension) are mapped through
    ``encoder``; without one they must already be numeric.
    """
    if len(lex) != N_LEXICAL or len(web) != N_WEB:
        raise SchemaMismatch(f"expected {N_LEXICAL}+{N_WEB} slots, got {len(lex)}+{len(web)}")
    values = []
    for slot in LEXICAL_SLOTS:
        if slot.name not in lex:
            raise SchemaMismatch(f"missing lexical slot {slot.name}")
        v = lex[slot.name]
        if slot.encoding == "categorical" and isinstance(v, str):
            if encoder is None:
                raise SchemaMismatch(f"slot {slot.name} holds a string but no encoder was given")
            v = encoder.encode(slot.name, v)
        values.append(float(v))
    for slot in WEB_SLOTS:
        if slot.name not in web:
            raise SchemaMismatch(f"missing web slot {slot.name}")
        values.append(float(web[slot.name]))
    return FeatureVector(np.array(values, dtype=np.float64))


class CategoryEncoder:
    """Frequency-ranked ids for string-valued slots; unseen values map to 0."""

    SLOTS = ("TLD", "FileExtension")

    def __init__(self, vocab: dict[str, dict[str, int]] | None = None):
        self.vocab = vocab or {s: {} for s in self.SLOTS}

    @classmethod
    def fit(cls, records) -> "CategoryEncoder":
        """``records`` is an iterable of ``{slot_name: string}`` mappings."""
        counts = {s: {} for s in cls.SLOTS}
        for rec in records:
            for s in cls.SLOTS:
                v = rec.get(s, "")
                if v:
                    counts[s][v] = counts[s].get(v, 0) + 1
        vocab = {}
        for s, c in counts.items():
            ranked = sorted(c, key=lambda k: (-c[k], k))
            vocab[s] = {v: i + 1 for i, v in enumerate(ranked)}
        return cls(vocab)

    def encode(self, slot: str, value: str) -> int:
        return self.vocab.get(slot, {}).get(value, 0)

    def to_json(self) -> dict:
        return {"slots": {s: self.vocab.get(s, {}) for s in self.SLOTS}}

    @classmethod
    def from_json(cls, doc: dict) -> "CategoryEncoder":
        return cls({s: dict(v) for s, v in doc["slots"].items()})
