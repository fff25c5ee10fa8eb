"""Reduced words and sparse elements of the span of the free-product basis.

A reduced word is a tuple of letters ``(algebra_id, label)`` with adjacent
letters from different factors; the empty tuple is the unit.  An
:class:`Element` is a finite linear combination of reduced words, which are
orthonormal for the free-product trace.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .algebra import AlgebraTable
from .coeffs import EXACT, FLOAT, MODES, abs2, coerce, conj, format_coeff, is_zero

ONE = ()


class WordError(ValueError):
    """A letter sequence that is not a reduced word of the family."""


class ModeError(ValueError):
    pass


class ZeroElementError(ValueError):
    pass


class FreeProduct:
    """The family of factors ``(A_i, tau_i)`` over which elements live."""

    def __init__(self, tables, mode: str | None = None):
        self.tables: dict[str, AlgebraTable] = {}
        for t in tables:
            if t.algebra_id in self.tables:
                raise ValueError(f"duplicate algebra id {t.algebra_id!r}")
            self.tables[t.algebra_id] = t
        self.exact_capable = all(t.exact for t in self.tables.values())
        if mode is None:
            mode = EXACT if self.exact_capable else FLOAT
        self._check_mode(mode)
        self.mode = mode

    def __repr__(self):
        return f"FreeProduct({list(self.tables.values())!r}, mode={self.mode!r})"

    def _check_mode(self, mode):
        if mode not in MODES:
            raise ModeError(f"unknown mode {mode!r}")
        if mode == EXACT and not self.exact_capable:
            raise ModeError("exact mode needs every factor to have exact structure constants")

    def table(self, algebra_id) -> AlgebraTable:
        try:
            return self.tables[algebra_id]
        except KeyError:
            raise WordError(f"unknown algebra id {algebra_id!r}") from None

    def check_word(self, letters) -> tuple:
        word = tuple((str(aid), label) for aid, label in letters)
        for k, (aid, label) in enumerate(word):
            if not self.table(aid).has_label(label):
                raise WordError(f"{label!r} is not a basis letter of {aid!r}")
            if k and word[k - 1][0] == aid:
                raise WordError(f"adjacent letters {k - 1}, {k} both come from {aid!r}")
        return word

    def element(self, terms=None, mode: str | None = None) -> "Element":
        mode = mode or self.mode
        self._check_mode(mode)
        out = {}
        for word, c in (terms or {}).items():
            w = self.check_word(word)
            out[w] = out.get(w, 0) + coerce(c, mode)
        return Element(self, out, mode)

    def word(self, letters, coeff=1, mode: str | None = None) -> "Element":
        return self.element({tuple(letters): coeff}, mode)

    def letter(self, algebra_id, label, coeff=1, mode: str | None = None) -> "Element":
        return self.word([(algebra_id, label)], coeff, mode)

    def one(self, mode: str | None = None) -> "Element":
        return self.element({ONE: 1}, mode)

    def zero(self, mode: str | None = None) -> "Element":
        return self.element({}, mode)

    def group_word(self, text: str, coeff=1, mode: str | None = None) -> "Element":
        """Group element from text such as ``"a b^-1 a^2"`` (group factors only).

        The tokens are multiplied out, so ``"a a^-1"`` is the unit.
        """
        out = self.one(mode)
        for token in text.split():
            m = re.fullmatch(r"([^\s^]+)(?:\^(-?\d+))?", token)
            if not m:
                raise WordError(f"bad token {token!r}")
            aid, exp = m.group(1), int(m.group(2) or 1)
            t = self.table(aid)
            if t.kind == "integer":
                label = exp
            elif t.kind == "cyclic":
                label = exp % (len(t.labels) + 1)
            else:
                raise WordError(f"group_word supports integer and cyclic factors, not {aid!r}")
            if label:
                out = out * self.letter(aid, label, mode=mode)
        return out * coerce(coeff, out.mode)

    def from_literal(self, terms, mode: str | None = None) -> "Element":
        """Element from ``[{word: [[id, label], ...], re: .., im: ..}, ...]``."""
        mode = mode or self.mode
        out = {}
        for k, term in enumerate(terms):
            if "word" not in term:
                raise WordError(f"term {k} has no 'word'")
            letters = [(aid, self._label(aid, lab)) for aid, lab in term["word"]]
            re_, im_ = term.get("re", 0), term.get("im", 0)
            if mode == EXACT:
                c = coerce(re_, EXACT) + coerce(im_, EXACT) * coerce(1j, EXACT)
            else:
                c = coerce(re_, FLOAT) + 1j * coerce(im_, FLOAT)
            w = self.check_word(letters)
            out[w] = out.get(w, 0) + c
        self._check_mode(mode)
        return Element(self, out, mode)

    def _label(self, aid, label):
        t = self.table(aid)
        if isinstance(label, str) and not label.lstrip("-").isdigit():
            for k, name in getattr(t, "names", {}).items():
                if name == label:
                    return k
            raise WordError(f"unknown letter name {label!r} in {aid!r}")
        return int(label)


class Element:
    """Finite combination of reduced words; immutable."""

    __slots__ = ("family", "terms", "mode")

    def __init__(self, family: FreeProduct, terms: dict, mode: str):
        self.family = family
        self.mode = mode
        self.terms = {w: c for w, c in terms.items() if not is_zero(c, mode)}

    # -- protocol -----------------------------------------------------------

    def __repr__(self):
        if not self.terms:
            return "Element(0)"
        parts = []
        for w, c in self.items():
            name = "*".join(self.family.table(a).label_name(x) for a, x in w) or "1"
            parts.append(f"({c!r})·{name}")
        return "Element(" + " + ".join(parts) + ")"

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self.family is other.family and self.mode == other.mode and self.terms == other.terms

    __hash__ = None

    def items(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def support(self) -> list:
        return sorted(self.terms)

    def coeff(self, word):
        return self.terms.get(tuple(word), coerce(0, self.mode))

    def _same(self, other):
        if self.family is not other.family:
            raise ModeError("elements belong to different free products")
        if self.mode != other.mode:
            raise ModeError(f"mode mismatch: {self.mode} vs {other.mode}")

    def __add__(self, other):
        if not isinstance(other, Element):
            other = self.family.element({ONE: other}, self.mode)
        self._same(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return Element(self.family, out, self.mode)

    __radd__ = __add__

    def __neg__(self):
        return Element(self.family, {w: -c for w, c in self.terms.items()}, self.mode)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = coerce(c, self.mode)
        return Element(self.family, {w: c * x for w, x in self.terms.items()}, self.mode)

    def __mul__(self, other):
        if isinstance(other, Element):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, m: int):
        if m < 0:
            raise ValueError("negative powers are not defined")
        out, base = self.family.one(self.mode), self
        while m:
            if m & 1:
                out = out * base
            m >>= 1
            if m:
                base = base * base
        return out

    # -- derived quantities -------------------------------------------------

    def adjoint(self) -> "Element":
        return adjoint(self)

    @property
    def H(self):
        return adjoint(self)

    def norm2_sq(self):
        """Squared two-norm; exact rational in exact mode."""
        return sum((abs2(c) for c in self.terms.values()), 0)

    def norm2(self) -> float:
        return math.sqrt(float(self.norm2_sq()))

    def trace(self):
        return self.terms.get(ONE, coerce(0, self.mode))

    def levels(self) -> set:
        return {len(w) for w in self.terms}

    @property
    def max_level(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def is_homogeneous(self, k: int | None = None) -> bool:
        lv = self.levels()
        if not lv:
            return True
        return len(lv) == 1 and (k is None or lv == {k})

    def to_float(self) -> "Element":
        if self.mode == FLOAT:
            return self
        return Element(self.family, {w: complex(c) for w, c in self.terms.items()}, FLOAT)

    def to_literal(self) -> list:
        out = []
        for w, c in self.items():
            re_, im_ = format_coeff(c)
            out.append({"word": [[a, x] for a, x in w], "re": re_, "im": im_})
        return out


# -- core operations ---------------------------------------------------------


def word_product(family: FreeProduct, v: tuple, w: tuple) -> dict:
    """Expand ``v*w`` by contracting boundary letters from the same factor.

    Writing ``v = v'x`` and ``w = yw'`` with ``x, y`` in one factor,
    ``xy = <xy,1> 1 + sum_u <xy,u> u`` splits ``vw`` into reduced words
    ``v' u w'`` plus ``<xy,1> v'w'``, and the unit part is contracted again.
    """
    out: dict = {}
    scale = 1
    i, j = len(v), 0
    while True:
        if i == 0 or j == len(w) or v[i - 1][0] != w[j][0]:
            key = v[:i] + w[j:]
            out[key] = out.get(key, 0) + scale
            return out
        aid = v[i - 1][0]
        unit, rest = family.tables[aid].product(v[i - 1][1], w[j][1])
        head, tail = v[:i - 1], w[j + 1:]
        for u, c in rest.items():
            key = head + ((aid, u),) + tail
            out[key] = out.get(key, 0) + scale * c
        if not unit:
            return out
        scale = scale * unit
        i, j = i - 1, j + 1


def multiply(a: Element, b: Element) -> Element:
    a._same(b)
    fam = a.family
    out: dict = {}
    for v, cv in a.terms.items():
        for w, cw in b.terms.items():
            c = cv * cw
            for word, s in word_product(fam, v, w).items():
                out[word] = out.get(word, 0) + c * s
    return Element(fam, out, a.mode)


def word_adjoint(family: FreeProduct, w: tuple) -> dict:
    """``(x_1...x_n)* = x_n*...x_1*`` with each star expanded in its factor."""
    out = {ONE: 1}
    for aid, x in reversed(w):
        star = family.tables[aid].star(x)
        out = {word + ((aid, u),): c * s for word, c in out.items() for u, s in star.items()}
    return out


def adjoint(a: Element) -> Element:
    out: dict = {}
    for w, c in a.terms.items():
        cc = conj(c)
        for word, s in word_adjoint(a.family, w).items():
            out[word] = out.get(word, 0) + cc * s
    return Element(a.family, out, a.mode)


def inner_product(a: Element, b: Element):
    """``<a, b> = tau(b* a)``; the reduced words are orthonormal."""
    a._same(b)
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    total = coerce(0, a.mode)
    for w in small.terms:
        if w in big.terms:
            total = total + a.terms[w] * conj(b.terms[w])
    return total


def project_level(a: Element, n: int) -> Element:
    """Orthogonal projection onto the span of words of block length ``n``."""
    if n < 0:
        raise ValueError("level must be non-negative")
    return Element(a.family, {w: c for w, c in a.terms.items() if len(w) == n}, a.mode)


def unit_pairing(family: FreeProduct, v2: tuple, w2: tuple):
    """``tau(v2 w2)`` for two words of equal length ``q``.

    Only the full inward contraction can reach the unit, so the value is the
    product of ``<x y, 1>`` over the facing letter pairs, and zero as soon as
    one pair comes from different factors.
    """
    if len(v2) != len(w2):
        raise ValueError("unit pairing needs words of equal length")
    value = 1
    q = len(v2)
    for p in range(q):
        x, y = v2[q - 1 - p], w2[p]
        if x[0] != y[0]:
            return 0
        unit, _ = family.tables[x[0]].product(x[1], y[1])
        if not unit:
            return 0
        value = value * unit
    return value


def en_product_closed_form(family: FreeProduct, v, w, n: int, mode: str | None = None) -> Element:
    """``E_n(vw)`` for reduced words ``v, w`` from the case analysis on
    ``n`` relative to ``|k - l|`` and ``k + l``; no general multiplication."""
    v, w = family.check_word(v), family.check_word(w)
    mode = mode or family.mode
    k, l = len(v), len(w)
    if n < abs(k - l) or n > k + l:
        return family.zero(mode)
    if n == abs(k - l):
        q = min(k, l)
        v1, v2 = v[:k - q], v[k - q:]
        w2, w1 = w[:q], w[q:]
        return Element(family, {v1 + w1: coerce(unit_pairing(family, v2, w2), mode)}, mode)
    q = (k + l - n) // 2
    v1, x, v2 = v[:k - q - 1], v[k - q - 1], v[k - q:]
    w2, y, w1 = w[:q], w[q], w[q + 1:]
    pair = unit_pairing(family, v2, w2)
    if (k + l - n) % 2 == 0:
        if x[0] == y[0]:
            return family.zero(mode)
        return Element(family, {v1 + (x, y) + w1: coerce(pair, mode)}, mode)
    if x[0] != y[0]:
        return family.zero(mode)
    _, rest = family.tables[x[0]].product(x[1], y[1])
    terms = {v1 + ((x[0], u),) + w1: coerce(pair * c, mode) for u, c in rest.items()}
    return Element(family, terms, mode)


@dataclass(frozen=True)
class SupportProfile:
    """Letters used per factor, the support constant ``K(a)`` and the top level."""

    letters: dict
    k_squared: object
    max_level: int

    @property
    def k_constant(self) -> float:
        return math.sqrt(float(self.k_squared))


def support_profile(a: Element) -> SupportProfile:
    """``K(a) = max_i (sum_{x in F_i(a)} ||x||^2)^(1/2)``.

    An element supported on the unit alone has no letters; ``K`` is then
    taken to be 1.
    """
    if not a.terms:
        raise ZeroElementError("support profile of the zero element is undefined")
    letters: dict = {}
    for w in a.terms:
        for aid, x in w:
            letters.setdefault(aid, set()).add(x)
    letters = {aid: frozenset(xs) for aid, xs in letters.items()}
    if not letters:
        return SupportProfile({}, 1, a.max_level)
    sums = []
    for aid, xs in letters.items():
        t = a.family.tables[aid]
        sums.append(sum((t.letter_norm(x) ** 2 for x in sorted(xs)), 0))
    return SupportProfile(letters, max(sums), a.max_level)


def generator_length(a_or_word, family: FreeProduct | None = None) -> int:
    """Length of a word written in free generators and their inverses."""
    if isinstance(a_or_word, Element):
        family = a_or_word.family
        return max((generator_length(w, family) for w in a_or_word.terms), default=0)
    total = 0
    for aid, x in a_or_word:
        t = family.tables[aid]
        if t.kind != "integer":
            raise ValueError(f"{aid!r} is not a free-generator factor")
        total += t.generator_length(x)
    return total
