"""Tokenization, rule-based sentence segmentation, and the three
sentence-level similarity metrics (normalized edit, semantic cosine,
paraphrase probability) with pluggable remote backends.

Offline defaults: the semantic metric falls back to a lowercase
term-frequency cosine and the paraphrase metric to a fixed logistic over
that cosine, so the whole pipeline runs with zero network dependencies.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import httpx
import numpy as np

from .errors import ProviderFailure

try:  # pragma: no cover - exercised implicitly by every metric test
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

SIMILARITY_METRICS = ("edit", "semantic", "paraphrase")

# Alphanumeric runs, optionally containing internal apostrophes/hyphens.
# [^\W_] is "alphanumeric" (\w minus underscore).
_WORD_RE = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*", re.UNICODE)

_TERMINATORS = ".!?"
_OPENERS = "\"'“‘"
_ABBREVIATIONS = frozenset({"mr.", "mrs.", "dr.", "st.", "vs.", "e.g.", "i.e.", "etc."})


def tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def word_count(text: str) -> int:
    return len(_WORD_RE.findall(text))


@dataclass(frozen=True)
class Sentence:
    """A trimmed sentence and its code-point span in the source text."""

    text: str
    start: int
    end: int


def split_sentences(text: str) -> list[Sentence]:
    """Rule-based segmentation.

    A run of '.', '!', '?' ends a sentence when followed by whitespace and
    then an uppercase letter, opening quote or digit, or by (whitespace
    and) end-of-text. A single '.' closing a stoplisted abbreviation
    (Mr., Mrs., Dr., St., vs., e.g., i.e., etc.) never splits. Joining the
    trimmed spans with the whitespace between them reproduces the input.
    """
    n = len(text)
    boundaries = []
    i = 0
    while i < n:
        if text[i] not in _TERMINATORS:
            i += 1
            continue
        j = i + 1
        while j < n and text[j] in _TERMINATORS:
            j += 1
        k = j
        while k < n and text[k].isspace():
            k += 1
        is_boundary = k == n or (k > j and (text[k].isupper() or text[k].isdigit() or text[k] in _OPENERS))
        if is_boundary and j - i == 1 and text[i] == ".":
            w = i
            while w > 0 and not text[w - 1].isspace():
                w -= 1
            if text[w:j].lower() in _ABBREVIATIONS:
                is_boundary = False
        if is_boundary:
            boundaries.append(j)
        i = j
    if not boundaries or boundaries[-1] != n:
        boundaries.append(n)

    sentences = []
    prev = 0
    for b in boundaries:
        s, e = prev, b
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if e > s:
            sentences.append(Sentence(text=text[s:e], start=s, end=e))
        prev = b
    return sentences


# --- Normalized edit similarity ---------------------------------------------


def _levenshtein_py(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a):
        current = [i + 1]
        for j, cb in enumerate(b):
            current.append(
                min(previous[j + 1] + 1, current[j] + 1, previous[j] + (ca != cb))
            )
        previous = current
    return previous[-1]


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _levenshtein_jit(a, b):  # pragma: no cover - covered via levenshtein()
        n, m = a.size, b.size
        if n == 0:
            return m
        if m == 0:
            return n
        prev = np.arange(m + 1)
        cur = np.empty(m + 1, dtype=np.int64)
        for i in range(1, n + 1):
            cur[0] = i
            ai = a[i - 1]
            for j in range(1, m + 1):
                c = prev[j - 1] + (0 if ai == b[j - 1] else 1)
                d = prev[j] + 1
                e = cur[j - 1] + 1
                cur[j] = min(c, min(d, e))
            prev, cur = cur, prev
        return prev[m]

    def _codepoints(s: str):
        return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)

    def levenshtein(a: str, b: str) -> int:
        """Unit-cost Levenshtein distance over code points."""
        if not a or not b:
            return len(a) or len(b)
        return int(_levenshtein_jit(_codepoints(a), _codepoints(b)))

else:  # pragma: no cover

    def levenshtein(a: str, b: str) -> int:
        """Unit-cost Levenshtein distance over code points."""
        return _levenshtein_py(a, b)


def edit_similarity(a: str, b: str) -> float:
    """1 - Levenshtein(a, b)/max(|a|, |b|); 1.0 when both strings are empty."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


# --- Lexical and semantic cosine ---------------------------------------------


def lexical_cosine(a: str, b: str) -> float:
    """Cosine of lowercase term-frequency vectors; 0 when either side has
    no tokens."""
    ta = [t.lower() for t in tokens(a)]
    tb = [t.lower() for t in tokens(b)]
    if not ta or not tb:
        return 0.0
    ca: dict[str, int] = {}
    cb: dict[str, int] = {}
    for t in ta:
        ca[t] = ca.get(t, 0) + 1
    for t in tb:
        cb[t] = cb.get(t, 0) + 1
    dot = sum(ca[t] * cb[t] for t in ca if t in cb)
    # Integer norms keep exact cases exact: identical texts give 1.0 and a
    # sentence sharing m of k distinct unit-count tokens gives m/k.
    na2 = sum(v * v for v in ca.values())
    nb2 = sum(v * v for v in cb.values())
    return dot / math.sqrt(na2 * nb2)


class EmbeddingProvider(Protocol):
    """Deterministic text embedder; all vectors share one dimension."""

    def embed_many(self, texts: Sequence[str]) -> list[list[float]]: ...


class ParaphraseProvider(Protocol):
    """Scores sentence pairs with a paraphrase probability in [0, 1]."""

    def score_many(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


def _cosine(u: Sequence[float], v: Sequence[float]) -> float:
    ua = np.asarray(u, dtype=float)
    va = np.asarray(v, dtype=float)
    nu = float(np.linalg.norm(ua))
    nv = float(np.linalg.norm(va))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    if ua.shape == va.shape and bool(np.array_equal(ua, va)):
        return 1.0
    return min(max(float(ua @ va) / (nu * nv), 0.0), 1.0)


def semantic_similarity(provider: EmbeddingProvider, a: str, b: str) -> float:
    """Cosine of provider embeddings, clamped into [0, 1]."""
    va, vb = provider.embed_many([a, b])
    return _cosine(va, vb)


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


class LogisticParaphraseStub:
    """Offline paraphrase scorer: logistic(6*lexical_cosine - 3)."""

    def score_many(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [_logistic(6.0 * lexical_cosine(a, b) - 3.0) for a, b in pairs]


def paraphrase_score(provider: ParaphraseProvider, a: str, b: str) -> float:
    return provider.score_many([(a, b)])[0]


# --- Remote provider clients --------------------------------------------------

DEFAULT_PROVIDER_TIMEOUT_S = 30.0


class _RemoteJsonClient:
    def __init__(self, base_url: str, timeout_s: float, client: Optional[httpx.Client]):
        self._base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout_s)

    def _post(self, path: str, payload: dict) -> dict:
        url = self._base_url + path
        try:
            response = self._client.post(url, json=payload)
            response.raise_for_status()
            return response.json()
        except httpx.HTTPError as exc:
            raise ProviderFailure(f"POST {url} failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderFailure(f"POST {url} returned invalid JSON") from exc


class RemoteEmbeddingProvider(_RemoteJsonClient):
    """POST {base}/embed {"texts": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(
        self,
        base_url: str,
        timeout_s: float = DEFAULT_PROVIDER_TIMEOUT_S,
        client: Optional[httpx.Client] = None,
    ):
        super().__init__(base_url, timeout_s, client)

    def embed_many(self, texts: Sequence[str]) -> list[list[float]]:
        body = self._post("/embed", {"texts": list(texts)})
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderFailure("embedding response missing/mismatched 'vectors'")
        dims = {len(v) for v in vectors}
        if len(texts) > 0 and (len(dims) != 1 or 0 in dims):
            raise ProviderFailure("embedding vectors must share one positive dimension")
        return [[float(x) for x in v] for v in vectors]


class RemoteParaphraseProvider(_RemoteJsonClient):
    """POST {base}/paraphrase {"pairs": [[a, b], ...]} -> {"scores": [...]}."""

    def __init__(
        self,
        base_url: str,
        timeout_s: float = DEFAULT_PROVIDER_TIMEOUT_S,
        client: Optional[httpx.Client] = None,
    ):
        super().__init__(base_url, timeout_s, client)

    def score_many(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        body = self._post("/paraphrase", {"pairs": [[a, b] for a, b in pairs]})
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise ProviderFailure("paraphrase response missing/mismatched 'scores'")
        out = [float(s) for s in scores]
        if any(not 0.0 <= s <= 1.0 for s in out):
            raise ProviderFailure("paraphrase scores must lie in [0, 1]")
        return out


# --- Max-pooled pairwise influence -------------------------------------------


@dataclass
class MetricBackends:
    """Optional remote backends; None means the offline default."""

    embedding: Optional[EmbeddingProvider] = None
    paraphrase: Optional[ParaphraseProvider] = None


def max_pairwise_influence(
    metric: str,
    suggestion_sentences: Sequence[str],
    new_sentences: Sequence[str],
    backends: Optional[MetricBackends] = None,
) -> Optional[float]:
    """Maximum metric value over all |S| x |N| sentence pairs; None when
    either list is empty."""
    if metric not in SIMILARITY_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if not suggestion_sentences or not new_sentences:
        return None
    backends = backends or MetricBackends()

    if metric == "edit":
        return max(
            edit_similarity(s, t) for s in suggestion_sentences for t in new_sentences
        )

    if metric == "semantic":
        if backends.embedding is None:
            return max(
                lexical_cosine(s, t) for s in suggestion_sentences for t in new_sentences
            )
        texts = list(suggestion_sentences) + list(new_sentences)
        vectors = backends.embedding.embed_many(texts)
        sv = vectors[: len(suggestion_sentences)]
        nv = vectors[len(suggestion_sentences):]
        return max(_cosine(u, v) for u in sv for v in nv)

    provider = backends.paraphrase or LogisticParaphraseStub()
    pairs = [(s, t) for s in suggestion_sentences for t in new_sentences]
    return max(provider.score_many(pairs))
