"""Character n-gram language model over domain labels."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from ..errors import EmptyCorpus

ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789-"
PAD = "^"


def _clean(text: str) -> str:
    return "".join(c for c in text.lower() if c in ALPHABET)


@dataclass(frozen=True)
class NgramModel:
    order: int
    counts: dict[str, int]
    total: int
    alphabet_size: int = len(ALPHABET)
    # how often each (order-1)-gram appears as a context
    context_counts: dict[str, int] = field(default_factory=dict, repr=False)

    def prob(self, context: str, char: str, smoothed: bool = True) -> float:
        ctx = context[-(self.order - 1):] if self.order > 1 else ""
        n = self.counts.get(ctx + char, 0)
        denom = self.context_counts.get(ctx, 0) if self.order > 1 else self.total
        if smoothed:
            return (n + 1) / (denom + self.alphabet_size)
        return n / denom if denom else 0.0

    @property
    def floor(self) -> float:
        return math.log(1.0 / self.alphabet_size)


def ngram_train(corpus: Iterable[str], order: int) -> NgramModel:
    """Count character n-grams, padding each word with ``order-1`` start markers."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    words = [_clean(w) for w in corpus]
    words = [w for w in words if w]
    if not words:
        raise EmptyCorpus("n-gram corpus is empty")
    grams: Counter[str] = Counter()
    contexts: Counter[str] = Counter()
    for w in words:
        padded = PAD * (order - 1) + w
        for i in range(order - 1, len(padded)):
            g = padded[i - order + 1: i + 1]
            grams[g] += 1
            if order > 1:
                contexts[g[:-1]] += 1
    return NgramModel(order, dict(grams), sum(grams.values()), len(ALPHABET), dict(contexts))


def ngram_score(model: NgramModel, domain: str) -> float:
    """Mean add-one-smoothed log-probability of the label's interior n-grams."""
    text = _clean(domain)
    n = model.order
    if len(text) < n:
        return model.floor
    logs = [math.log(model.prob(text[i - n + 1: i], text[i])) for i in range(n - 1, len(text))]
    return sum(logs) / len(logs)
