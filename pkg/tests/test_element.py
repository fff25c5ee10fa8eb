import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freeprod.algebra import build_group_algebra, matrix_algebra_onb
from freeprod.coeffs import EXACT, FLOAT, GaussRat
from freeprod.element import (FreeProduct, ModeError, WordError, ZeroElementError, en_product_closed_form,
                              generator_length, inner_product, multiply, project_level,
                              support_profile, unit_pairing)
from freeprod.sampling import all_words, random_element, random_word

from conftest import group_reduce, make_f2, make_m2z, make_z2z3, shape_violations

seeds = st.integers(0, 2 ** 32 - 1)
X, Y, Y2 = ("x", 1), ("y", 1), ("y", 2)


def test_f2_cancellation(f2):
    assert f2.letter("a", 1) * f2.letter("a", -1) == f2.one()


def test_z2z3_products(z2z3):
    xy = z2z3.word([X, Y])
    assert xy * z2z3.word([Y2, X]) == z2z3.one()
    assert xy * z2z3.word([Y, X]) == z2z3.word([X, Y2, X])


def test_words_must_alternate(z2z3):
    with pytest.raises(WordError):
        z2z3.word([Y, Y])
    with pytest.raises(WordError):
        z2z3.word([("q", 1)])
    with pytest.raises(WordError):
        z2z3.word([("y", 5)])


def test_mode_mismatch(f2):
    with pytest.raises(ModeError):
        f2.letter("a", 1, mode=EXACT) + f2.letter("a", 1, mode=FLOAT)


def test_group_word_text(f2):
    assert f2.group_word("a b^-1 b a^2") == f2.letter("a", 3)
    assert f2.group_word("a a^-1") == f2.one()


@pytest.mark.parametrize("maker", [make_f2, make_z2z3])
def test_multiply_matches_free_reduction(maker):
    fam = maker()
    orders = {aid: (0 if t.kind == "integer" else len(t.labels) + 1) for aid, t in fam.tables.items()}
    rng = np.random.default_rng(7)
    for _ in range(300):
        v = random_word(fam, rng, int(rng.integers(0, 5)))
        w = random_word(fam, rng, int(rng.integers(0, 5)))
        want = group_reduce(v + w, orders)
        assert (fam.word(v) * fam.word(w)).terms == {want: 1}


def test_adjoint_of_group_word(f2):
    assert f2.word([("a", 1), ("b", 1)]).adjoint() == f2.word([("b", -1), ("a", -1)])


def test_adjoint_in_m2_star_z(m2z):
    u_t = m2z.word([("M", 1), ("t", 1)])
    assert u_t.adjoint() == m2z.word([("t", -1), ("M", 1)])
    # uv is skew-adjoint: (uv)* = vu = -uv
    assert m2z.letter("M", 3).adjoint() == m2z.letter("M", 3, coeff=-1)


def test_inner_products(f2, z2z3):
    s = f2.letter("a", 1) + f2.letter("b", 1)
    assert inner_product(s, s) == 2
    assert s.norm2() == pytest.approx(math.sqrt(2))
    assert inner_product(f2.letter("a", 1), f2.letter("a", 2)) == 0
    prod = z2z3.word([X, Y]) * z2z3.word([Y2, X])
    assert prod.trace() == 1


def test_project_level_examples(f2, z2z3):
    a = f2.one() + f2.letter("a", 1)
    assert project_level(a, 0) == f2.one()
    assert project_level(a, 5) == f2.zero()
    prod = z2z3.word([X, Y]) * z2z3.word([Y2, X])
    assert project_level(prod, 0) == z2z3.one()


def test_closed_form_examples(z2z3):
    xy, y2x = (X, Y), (Y2, X)
    for n in range(6):
        got = en_product_closed_form(z2z3, xy, xy, n)
        assert got == (z2z3.word(xy + xy) if n == 4 else z2z3.zero())
    assert en_product_closed_form(z2z3, xy, y2x, 0) == z2z3.one()
    assert en_product_closed_form(z2z3, xy, y2x, 2) == z2z3.zero()
    assert unit_pairing(z2z3, xy, y2x) == 1
    assert unit_pairing(z2z3, xy, xy) == 0


def test_closed_form_empty_words(z2z3):
    w = (X, Y)
    assert en_product_closed_form(z2z3, (), w, 2) == z2z3.word(w)
    assert en_product_closed_form(z2z3, w, (), 2) == z2z3.word(w)
    assert en_product_closed_form(z2z3, (), (), 0) == z2z3.one()


def test_support_profile_examples(f2):
    p = support_profile(f2.letter("a", 1) + f2.letter("b", 1))
    assert p.letters == {"a": {1}, "b": {1}} and p.k_constant == 1
    p = support_profile(f2.letter("a", 1) + f2.letter("a", 2))
    assert p.k_squared == 2 and p.k_constant == pytest.approx(math.sqrt(2))
    w = f2.word([("a", 1), ("b", 2), ("a", -1)])
    assert support_profile(w).k_squared == 2
    assert support_profile(f2.one()).k_constant == 1
    with pytest.raises(ZeroElementError):
        support_profile(f2.zero())


def test_support_profile_uses_letter_norms():
    c2 = matrix_algebra_onb([1, 1], [1 / 3, 2 / 3], algebra_id="C")
    fam = FreeProduct([c2, build_group_algebra("integer", "t")])
    a = fam.word([("C", 1), ("t", 1)])
    assert support_profile(a).k_squared == pytest.approx(2)


def test_generator_length(f2):
    w = f2.word([("a", 2), ("b", -3)])
    assert generator_length(w) == 5
    assert w.max_level == 2


def test_literal_round_trip(f2):
    a = f2.element({(("a", 1),): GaussRat(Fraction(1, 3), 2), (): GaussRat(-1, 0)})
    assert f2.from_literal(a.to_literal()) == a
    named = make_z2z3().from_literal([{"word": [["y", "y^2"], ["x", "x"]], "re": "1/2"}])
    assert named.terms == {(Y2, X): Fraction(1, 2)}


def test_float_pruning(m2z):
    a = m2z.letter("t", 1, coeff=1e-16) + m2z.letter("t", 2, coeff=1.0)
    assert a.support() == [(("t", 2),)]


def _elem(fam, seed, level=3, terms=4):
    return random_element(fam, np.random.default_rng(seed), level, terms)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(["f2", "z2z3"]))
def test_exact_algebra_laws(seed, which):
    fam = make_f2() if which == "f2" else make_z2z3()
    a, b, c = (_elem(fam, seed + i) for i in range(3))
    assert (a * b) * c == a * (b * c)
    assert (a * b).adjoint() == b.adjoint() * a.adjoint()
    assert a.adjoint().adjoint() == a
    assert sum(project_level(a, n).norm2_sq() for n in range(a.max_level + 1)) == a.norm2_sq()
    assert inner_product(a, b) == (b.adjoint() * a).trace()


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_float_algebra_laws_m2z(seed):
    fam = make_m2z()
    a, b, c = (_elem(fam, seed + i, level=2, terms=3) for i in range(3))

    def close(p, q):
        d = p - q
        return max((abs(x) for x in d.terms.values()), default=0.0) <= 1e-12 * max(1.0, p.norm2())

    assert close((a * b) * c, a * (b * c))
    assert close((a * b).adjoint(), b.adjoint() * a.adjoint())
    assert close(a.adjoint().adjoint(), a)
    assert inner_product(a, b) == pytest.approx(complex((b.adjoint() * a).trace()), abs=1e-12)


def test_closed_form_agrees_on_short_words(z2z3):
    words = all_words(z2z3, 2)
    for v in words:
        for w in words:
            prod = multiply(z2z3.word(v), z2z3.word(w))
            for n in range(len(v) + len(w) + 1):
                assert en_product_closed_form(z2z3, v, w, n) == project_level(prod, n)


def test_shape_property_counterexample_to_literal_matching(z2z3):
    # collapses to the single letter y: only the unreduced reading fits
    v, w, z = (X, Y, X), (X,), (Y2, X, Y)
    prod = z2z3.word(v) * z2z3.word(w) * z2z3.word(z)
    assert prod == z2z3.letter("y", 1)
    assert shape_violations(z2z3, v, w, z) == []


def test_shape_check_rejects_foreign_words(z2z3):
    v, w, z = (X, Y, X, Y), (X,), (Y, X, Y2)
    assert shape_violations(z2z3, v, w, z) == []
    wrong = z2z3.word([Y2, X, Y, X])
    assert shape_violations(z2z3, v, w, z, product=wrong) == [(Y2, X, Y, X)]
