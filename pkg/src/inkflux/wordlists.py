"""Deterministic nonsense-word vocabularies for generators and simulated
providers.

The three lists are built over pairwise-disjoint letter sets, so text typed
from one list shares no tokens (and almost no characters) with text built
from another. That property is what lets generated worlds plant exact
zero-overlap ground truth.
"""
from __future__ import annotations


def _syllables(consonants: str, vowels: str) -> list[str]:
    return [c + v for c in consonants for v in vowels]


def _words(consonants: str, vowels: str, count: int) -> tuple[str, ...]:
    syl = _syllables(consonants, vowels)
    n = len(syl)
    out: list[str] = []
    # (r, (q + r) mod n) enumerates all n*n pairs while varying both
    # syllables between consecutive words.
    for k in range(n * n):
        q, r = divmod(k, n)
        out.append(syl[r] + syl[(q + r) % n])
        if len(out) == count:
            break
    return tuple(out)


# Letters a-i: the "typed" voice of synthetic writers.
TYPED_WORDS = _words("bcdfg", "aei", 120)
# Letters n-v, o/u: the voice of generated suggestions.
SUGGESTION_WORDS = _words("nprstv", "ou", 120)
# Letters w-z: replacement tokens for paraphrase planting.
FRESH_WORDS = _words("wxz", "y", 9)
