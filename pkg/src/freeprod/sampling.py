"""Seeded random and exhaustive generation of words and elements."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .coeffs import EXACT, GaussRat
from .element import Element, FreeProduct


def letter_pool(family: FreeProduct, aid: str, label_cap: int = 2) -> list:
    t = family.tables[aid]
    if t.kind == "integer":
        return t.sample_labels(label_cap)
    return list(t.basis())


def random_word(family: FreeProduct, rng: np.random.Generator, length: int, label_cap: int = 2) -> tuple:
    ids = sorted(family.tables)
    word = []
    prev = None
    for _ in range(length):
        choices = [i for i in ids if i != prev]
        aid = choices[rng.integers(len(choices))]
        pool = letter_pool(family, aid, label_cap)
        word.append((aid, pool[rng.integers(len(pool))]))
        prev = aid
    return tuple(word)


def random_coeff(rng: np.random.Generator, mode: str, complex_coeffs: bool = True):
    if mode == EXACT:
        re = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
        im = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6))) if complex_coeffs else 0
        if not re and not im:
            re = Fraction(1)
        return GaussRat(re, im)
    re, im = rng.normal(), rng.normal() if complex_coeffs else 0.0
    return complex(re, im)


def random_element(family: FreeProduct, rng: np.random.Generator, max_level: int, n_terms: int,
                   mode: str | None = None, homogeneous: bool = False, label_cap: int = 2,
                   complex_coeffs: bool = True) -> Element:
    """Element with up to ``n_terms`` random words of level ``<= max_level``
    (exactly ``max_level`` when ``homogeneous``)."""
    mode = mode or family.mode
    terms = {}
    for _ in range(n_terms):
        level = max_level if homogeneous else int(rng.integers(0, max_level + 1))
        w = random_word(family, rng, level, label_cap)
        terms[w] = random_coeff(rng, mode, complex_coeffs)
    return Element(family, terms, mode)


def all_words(family: FreeProduct, max_length: int, label_cap: int = 2) -> list:
    """Every reduced word of length ``<= max_length`` (integer letters capped)."""
    ids = sorted(family.tables)
    pools = {aid: letter_pool(family, aid, label_cap) for aid in ids}
    out = [()]
    frontier = [()]
    for _ in range(max_length):
        nxt = []
        for w in frontier:
            for aid in ids:
                if w and w[-1][0] == aid:
                    continue
                for x in pools[aid]:
                    nxt.append(w + ((aid, x),))
        out.extend(nxt)
        frontier = nxt
    return out
