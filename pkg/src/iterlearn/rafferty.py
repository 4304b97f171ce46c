"""Principles-and-parameters language model.

Hypothesis ``h_i`` (``i = 1..2**k``) is the language of words over
``{0, 1, ?}`` of length ``k`` with exactly ``m`` question marks whose
remaining characters spell the binary expansion of ``i - 1``. All languages
have ``C(k, m)`` equally likely sentences and the prior is uniform.
"""

from itertools import combinations, product
import math

import numpy as np

from .discrete import DiscreteModel
from .errors import ParameterError

__all__ = ["MAX_TABLE_CELLS", "rafferty_sentences", "rafferty_language", "rafferty_model"]

#: Largest dense likelihood table (s * n entries) that rafferty_model builds.
MAX_TABLE_CELLS = 5 * 10**7


def _check(k, m):
    if not (isinstance(k, int) and isinstance(m, int)):
        raise ParameterError("k and m must be integers")
    if not (0 <= m < k <= 20):
        raise ParameterError(f"need 0 <= m < k <= 20, got k={k}, m={m}")


def _bits(index, k):
    return format(index, f"0{k}b")


def rafferty_sentences(k, m):
    """All words with exactly ``m`` question marks, in a fixed order.

    Ordered by the tuple of ``?`` positions, then by the remaining bits.
    """
    _check(k, m)
    out = []
    for qpos in combinations(range(k), m):
        free = [p for p in range(k) if p not in qpos]
        for bits in product("01", repeat=k - m):
            word = ["?"] * k
            for p, b in zip(free, bits):
                word[p] = b
            out.append("".join(word))
    return out


def rafferty_language(k, m, i):
    """Sentences of hypothesis ``h_i`` (1-based), as a set of strings."""
    _check(k, m)
    if not (1 <= i <= 2**k):
        raise ParameterError(f"hypothesis index must lie in [1, {2**k}]")
    bits = _bits(i - 1, k)
    words = set()
    for qpos in combinations(range(k), m):
        words.add("".join("?" if p in qpos else bits[p] for p in range(k)))
    return words


def rafferty_model(k, m):
    """:class:`DiscreteModel` with ``n = 2**k`` hypotheses over ``C(k, m) 2**(k-m)`` sentences."""
    _check(k, m)
    n = 2**k
    s = math.comb(k, m) * 2 ** (k - m)
    if s * n > MAX_TABLE_CELLS:
        raise ParameterError(f"table would have {s * n} cells (> {MAX_TABLE_CELLS}); reduce k")
    sentences = rafferty_sentences(k, m)
    index = {w: r for r, w in enumerate(sentences)}
    L = np.zeros((s, n))
    weight = 1.0 / math.comb(k, m)
    for i in range(1, n + 1):
        for w in rafferty_language(k, m, i):
            L[index[w], i - 1] = weight
    names = [_bits(i, k) for i in range(n)]
    return DiscreteModel(L, np.full(n, 1.0 / n), names=names, sentences=sentences)
