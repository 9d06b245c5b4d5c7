"""Labeled URL datasets: ingestion, preprocessing, balancing, scaling, splits, profiling."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (EmptyFile, InsufficientRows, MissingColumn, NoFeatures, TooFewRows,
                     UnparsableUrl)
from .features.lexical import char_counts
from .features.schema import MISSING, N_FEATURES, SCHEMA, CategoryEncoder
from .url_model import parse_url

QUANTILE_METHOD = "linear"


@dataclass(frozen=True, eq=False)
class Row:
    url: str
    label: int
    features: Optional[np.ndarray] = None
    # raw strings behind the categorical slots, e.g. {"TLD": "com", "FileExtension": "php"}
    categories: Optional[dict] = None


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    rows: tuple[Row, ...]
    name: str = "dataset"
    provenance: dict = field(default_factory=dict)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=np.int64)

    @property
    def urls(self) -> list[str]:
        return [r.url for r in self.rows]

    @property
    def has_features(self) -> bool:
        return bool(self.rows) and all(r.features is not None for r in self.rows)

    def matrix(self) -> np.ndarray:
        if not self.has_features:
            raise NoFeatures(f"dataset {self.name!r} has rows without features")
        return np.vstack([r.features for r in self.rows]).astype(np.float64)

    def subset(self, indices: Iterable[int], name: str | None = None) -> "LabeledDataset":
        return replace(self, rows=tuple(self.rows[i] for i in indices), name=name or self.name)

    def class_counts(self) -> dict[int, int]:
        y = self.labels
        return {0: int((y == 0).sum()), 1: int((y == 1).sum())}

    def with_encoding(self, encoder: CategoryEncoder) -> "LabeledDataset":
        """Rewrite the categorical slots through ``encoder`` (train-split vocabulary)."""
        idx = {s: SCHEMA.index(s) for s in CategoryEncoder.SLOTS}
        rows = []
        for r in self.rows:
            if r.features is None or r.categories is None:
                rows.append(r)
                continue
            f = r.features.copy()
            for s, i in idx.items():
                f[i] = encoder.encode(s, r.categories.get(s, ""))
            rows.append(replace(r, features=f))
        return replace(self, rows=tuple(rows))


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def ingest_csv(path) -> LabeledDataset:
    """Load a ``url,label`` CSV. Malformed rows are counted in ``skipped``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise EmptyFile(f"{path} is empty")
    reader = csv.DictReader(io.StringIO(text))
    fields = [f.strip().lower() for f in (reader.fieldnames or [])]
    for col in ("url", "label"):
        if col not in fields:
            raise MissingColumn(f"{path} lacks a {col!r} column")
    reader.fieldnames = fields
    rows, skipped = [], 0
    for rec in reader:
        url = (rec.get("url") or "").strip()
        label = (rec.get("label") or "").strip()
        if label not in ("0", "1") or not url:
            skipped += 1
            continue
        try:
            parse_url(url)
        except UnparsableUrl:
            skipped += 1
            continue
        rows.append(Row(url, int(label)))
    return LabeledDataset(tuple(rows), path.stem, {"sources": [str(path)]}, skipped)


def write_csv(d: LabeledDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["url", "label"])
        for r in d.rows:
            w.writerow([r.url, r.label])


def hostname_of(url: str) -> str:
    try:
        return parse_url(url).host
    except UnparsableUrl:
        return ""


def preprocess(d: LabeledDataset, seed) -> LabeledDataset:
    """Drop empty URLs and repeated hostnames (first occurrence kept), then shuffle."""
    seen, keep = set(), []
    for r in d.rows:
        if not r.url.strip():
            continue
        host = hostname_of(r.url)
        if not host or host in seen:
            continue
        seen.add(host)
        keep.append(r)
    order = _rng(seed).permutation(len(keep))
    prov = dict(d.provenance, preprocess_seed=seed)
    return replace(d, rows=tuple(keep[i] for i in order), provenance=prov)


def merge_balanced(benign: LabeledDataset, malicious: LabeledDataset, seed,
                   name: str | None = None) -> LabeledDataset:
    """Equal class counts of ``min(|benign| // 2, |malicious|)``, sampled without replacement."""
    n = min(len(benign) // 2, len(malicious))
    if n <= 0:
        raise InsufficientRows(f"cannot balance {len(benign)} benign with {len(malicious)} malicious rows")
    rng = _rng(seed)
    b = rng.choice(len(benign), size=n, replace=False)
    m = rng.choice(len(malicious), size=n, replace=False)
    rows = [benign.rows[i] for i in sorted(b)] + [malicious.rows[i] for i in sorted(m)]
    order = rng.permutation(len(rows))
    prov = {"sources": [benign.provenance.get("sources", [benign.name]),
                        malicious.provenance.get("sources", [malicious.name])], "seed": seed}
    return LabeledDataset(tuple(rows[i] for i in order), name or f"{benign.name}+{malicious.name}", prov)


# -- robust scaling ----------------------------------------------------------


@dataclass(frozen=True)
class ScalerState:
    median: np.ndarray
    iqr: np.ndarray
    quantile_method: str = QUANTILE_METHOD

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        scale = np.where(self.iqr > 0, self.iqr, 1.0)
        shift = np.where(self.iqr > 0, self.median, 0.0)
        return (x - shift) / scale

    def to_json(self) -> dict:
        return {"median": self.median.tolist(), "iqr": self.iqr.tolist(),
                "quantile_method": self.quantile_method}

    @classmethod
    def from_json(cls, doc: dict) -> "ScalerState":
        return cls(np.array(doc["median"], dtype=np.float64), np.array(doc["iqr"], dtype=np.float64),
                   doc.get("quantile_method", QUANTILE_METHOD))


def fit_scaler_matrix(X: np.ndarray, sentinel_mask: np.ndarray | None = None) -> ScalerState:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise NoFeatures("scaler needs at least two feature rows")
    if sentinel_mask is None:
        sentinel_mask = np.zeros(X.shape[1], dtype=bool)
    med = np.zeros(X.shape[1])
    iqr = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        col = X[:, j]
        if sentinel_mask[j]:
            col = col[col != MISSING]
        if col.size == 0:
            continue
        q1, q2, q3 = np.quantile(col, [0.25, 0.5, 0.75], method=QUANTILE_METHOD)
        med[j], iqr[j] = q2, q3 - q1
    return ScalerState(med, iqr)


def fit_scaler(d: LabeledDataset) -> ScalerState:
    """Per-slot median and IQR; -1 sentinels are ignored on the web slots."""
    if not d.has_features or len(d) < 2:
        raise NoFeatures("scaler needs at least two featurized rows")
    X = d.matrix()
    mask = SCHEMA.sentinel_mask if X.shape[1] == N_FEATURES else None
    return fit_scaler_matrix(X, mask)


def apply_scaler(state: ScalerState, v) -> np.ndarray:
    return state.apply(getattr(v, "values", v))


def scale_dataset(state: ScalerState, d: LabeledDataset) -> LabeledDataset:
    return replace(d, rows=tuple(replace(r, features=state.apply(r.features)) for r in d.rows))


# -- splits -----------------------------------------------------------------


def split(d: LabeledDataset, train_fraction: float, seed) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified shuffle split."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    if len(d) < 2:
        raise TooFewRows("need at least two rows to split")
    rng = _rng(seed)
    y = d.labels
    train, test = [], []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        k = int(round(train_fraction * len(idx)))
        train.extend(idx[:k].tolist())
        test.extend(idx[k:].tolist())
    train.sort()
    test.sort()
    return d.subset(train, f"{d.name}:train"), d.subset(test, f"{d.name}:test")


def kfold_indices(labels: Sequence[int], k: int, seed) -> list[np.ndarray]:
    """Stratified folds: each class is dealt round-robin after a seeded shuffle,
    continuing where the previous class stopped so fold sizes differ by <= 1."""
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(y) < k:
        raise TooFewRows(f"{len(y)} rows cannot fill {k} folds")
    rng = _rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        for i in idx[rng.permutation(len(idx))]:
            folds[pos % k].append(int(i))
            pos += 1
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def kfold(d: LabeledDataset, k: int, seed) -> list[LabeledDataset]:
    return [d.subset(f, f"{d.name}:fold{i}") for i, f in enumerate(kfold_indices(d.labels, k, seed))]


# -- profiling --------------------------------------------------------------


def url_stats(url: str) -> dict:
    try:
        u = parse_url(url)
        path_len, ip = len(u.path), u.is_ip_host
    except UnparsableUrl:
        path_len, ip = 0, False
    text = url.strip()
    return {"length": len(text), "special": char_counts(text)[2], "path_length": path_len, "ip_host": ip}


def profile(d: LabeledDataset, bucket_width: int = 5) -> dict:
    """Per-class length/special-character/path statistics plus a length histogram."""
    if not d.rows:
        raise TooFewRows("cannot profile an empty dataset")
    stats = [url_stats(r.url) for r in d.rows]
    y = d.labels
    report = {"dataset": d.name, "rows": len(d), "classes": {}}
    max_len = max(s["length"] for s in stats)
    edges = np.arange(0, max_len + bucket_width + 1, bucket_width)
    hist = []
    for c, cname in ((0, "benign"), (1, "malicious")):
        sel = [s for s, lab in zip(stats, y) if lab == c]
        if not sel:
            continue
        lengths = np.array([s["length"] for s in sel])
        report["classes"][cname] = {
            "count": len(sel),
            "mean_length": float(lengths.mean()),
            "mean_special_chars": float(np.mean([s["special"] for s in sel])),
            "mean_path_length": float(np.mean([s["path_length"] for s in sel])),
            "ip_host_fraction": float(np.mean([s["ip_host"] for s in sel])),
        }
        counts, _ = np.histogram(lengths, bins=edges)
        for lo, hi, n in zip(edges[:-1], edges[1:], counts):
            hist.append({"class": cname, "bucket_lo": int(lo), "bucket_hi": int(hi), "count": int(n)})
    report["histogram"] = hist
    return report


def write_profile(report: dict, json_path, csv_path) -> None:
    doc = {k: v for k, v in report.items() if k != "histogram"}
    Path(json_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bucket_lo", "bucket_hi", "count", "class"])
        for h in report["histogram"]:
            w.writerow([h["bucket_lo"], h["bucket_hi"], h["count"], h["class"]])



def prepare_split(train: LabeledDataset, test: LabeledDataset, scale: bool = True):
    """Fit category encoding and the scaler on ``train`` only, then apply to both.

    Returns ``(X_train, y_train, X_test, y_test, scaler, encoder)``; ``scaler``
    is None when ``scale`` is false.
    """
    encoder = CategoryEncoder.fit(r.categories for r in train.rows if r.categories)
    train, test = train.with_encoding(encoder), test.with_encoding(encoder)
    Xtr = train.matrix()
    Xte = test.matrix() if len(test) else np.empty((0, Xtr.shape[1]))
    scaler = None
    if scale:
        mask = SCHEMA.sentinel_mask if Xtr.shape[1] == N_FEATURES else None
        scaler = fit_scaler_matrix(Xtr, mask)
        Xtr, Xte = scaler.apply(Xtr), scaler.apply(Xte)
    return Xtr, train.labels, Xte, test.labels, scaler, encoder


from .synth import synthesize_corpus, synthesize_fixtures  # noqa: E402,F401  (re-export)
