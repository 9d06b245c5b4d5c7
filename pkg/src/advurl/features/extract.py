"""Full 89-slot extraction of URLs and datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from ..dataset import LabeledDataset, Row
from ..url_model import parse_url
from .lexical import LexicalResources, extract_lexical
from .schema import SCHEMA, CategoryEncoder, FeatureVector, assemble_feature_vector
from .web import extract_web

CATEGORY_COLUMNS = tuple(f"cat_{s}" for s in CategoryEncoder.SLOTS)


@dataclass
class FeatureExtractor:
    providers: object
    today: str
    resources: LexicalResources = field(default_factory=LexicalResources.default)

    def extract_parts(self, raw: str) -> tuple[dict, dict]:
        u = parse_url(raw, self.resources.tld_table)
        lex = extract_lexical(u, raw, self.resources)
        web = extract_web(u, raw, self.providers, self.today, self.resources.suspicious_domains)
        return lex, web

    def extract(self, raw: str, encoder: CategoryEncoder | None = None) -> tuple[FeatureVector, dict]:
        """Vector plus the raw category strings. Without ``encoder`` categorical slots are 0."""
        lex, web = self.extract_parts(raw)
        cats = {s: lex[s] for s in CategoryEncoder.SLOTS}
        return assemble_feature_vector(lex, web, encoder or CategoryEncoder()), cats

    def featurize(self, d: LabeledDataset) -> tuple[LabeledDataset, CategoryEncoder]:
        """Extract every row; categorical slots use an encoder fitted on ``d`` itself."""
        parts = [self.extract(r.url) for r in d.rows]
        enc = CategoryEncoder.fit(c for _, c in parts)
        rows = tuple(replace(r, features=v.values, categories=c) for r, (v, c) in zip(d.rows, parts))
        return replace(d, rows=rows).with_encoding(enc), enc


def _fmt(x: float) -> str:
    return repr(float(x))


def write_features_csv(d: LabeledDataset, path) -> None:
    """``url,label``, the 89 slot columns, then the raw category strings."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["url", "label", *SCHEMA.names, *CATEGORY_COLUMNS])
        for r in d.rows:
            cats = r.categories or {}
            w.writerow([r.url, r.label, *(_fmt(x) for x in r.features),
                        *(cats.get(s, "") for s in CategoryEncoder.SLOTS)])


def read_features_csv(path, name: str | None = None) -> LabeledDataset:
    from pathlib import Path

    from ..errors import EmptyFile, MissingColumn

    p = Path(path)
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{p} is empty")
        missing = [c for c in ("url", "label", *SCHEMA.names) if c not in header]
        if missing:
            raise MissingColumn(f"{p} lacks columns {missing[:3]}")
        ix = [header.index(c) for c in SCHEMA.names]
        cat_ix = {s: header.index(f"cat_{s}") for s in CategoryEncoder.SLOTS if f"cat_{s}" in header}
        rows = []
        for rec in reader:
            feats = np.array([float(rec[i]) for i in ix], dtype=np.float64)
            cats = {s: rec[i] for s, i in cat_ix.items()} if cat_ix else None
            rows.append(Row(rec[header.index("url")], int(rec[header.index("label")]), feats, cats))
    default = p.parent.name if p.stem == "features" and p.parent.name else p.stem
    return LabeledDataset(tuple(rows), name or default, {"sources": [str(p)]})


def extract_urls(urls: Iterable[str], extractor: FeatureExtractor) -> list[FeatureVector]:
    return [extractor.extract(u)[0] for u in urls]
