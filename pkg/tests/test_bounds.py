import math

import numpy as np
import pytest

from freeprod.bounds import (BoundError, PowerIdentityError, certified_radius, f2_word_bound,
                             haagerup_bound, haagerup_homogeneous_bound, level_norms, opnorm_lower,
                             radius_bound_term)
from freeprod.sampling import random_element
from freeprod.stable_rank import build_conjugators

SQ2 = math.sqrt(2)


def ab(f2):
    return f2.letter("a", 1) + f2.letter("b", 1)


def test_homogeneous_bound_examples(f2):
    assert haagerup_homogeneous_bound(f2.letter("a", 1)) == 3
    assert haagerup_homogeneous_bound(ab(f2)) == pytest.approx(3 * SQ2)
    assert haagerup_homogeneous_bound(f2.word([("a", 1), ("b", 1)])) == 5
    with pytest.raises(BoundError):
        haagerup_homogeneous_bound(f2.one() + f2.letter("a", 1))


def test_level_bound_examples(f2):
    assert haagerup_bound(f2.one()) == 1
    assert haagerup_bound(ab(f2)) == pytest.approx(3 ** 1.5 * SQ2)
    a = f2.one() + f2.letter("a", 1) + f2.word([("a", 1), ("b", 1)])
    assert haagerup_bound(a) == pytest.approx(5 ** 1.5 * math.sqrt(3))
    assert haagerup_bound(a) == pytest.approx(19.3649, abs=1e-4)
    with pytest.raises(BoundError):
        haagerup_bound(a, k=1)


def test_f2_bound_examples(f2, z2z3):
    assert f2_word_bound(f2.letter("a", 1)) == 8
    assert f2_word_bound(ab(f2)) == pytest.approx(8 * SQ2)
    z = f2.word([("a", 1), ("b", 1)]) + f2.word([("b", 1), ("a", 1)])
    assert f2_word_bound(z, N=2) == pytest.approx(18 * SQ2)
    with pytest.raises(BoundError):
        f2_word_bound(z, N=1)
    with pytest.raises(BoundError):
        f2_word_bound(z2z3.letter("x", 1))


def test_opnorm_lower_examples(f2):
    assert opnorm_lower(f2.letter("a", 1)) == pytest.approx(1)
    assert opnorm_lower(f2.zero()) == 0
    # two free Haar unitaries: the sum has norm 2
    low = opnorm_lower(ab(f2))
    high = opnorm_lower(ab(f2), level_cap=8, iterations=12)
    assert SQ2 < low <= high <= 2


def test_homogeneous_bound_is_sharper(f2):
    rng = np.random.default_rng(3)
    for k in range(1, 4):
        a = random_element(f2, rng, k, 4, homogeneous=True)
        assert haagerup_homogeneous_bound(a) <= haagerup_bound(a, k)


def test_level_norms_parseval(z2z3):
    a = random_element(z2z3, np.random.default_rng(1), 3, 6)
    assert sum(x * x for x in level_norms(a)) == pytest.approx(a.norm2() ** 2)


def test_radius_single_word(f2):
    a = f2.word([("a", 1), ("b", -1)])
    conj = build_conjugators(a)
    cert = certified_radius(a, conj.u, conj.v, 400)
    assert all(e.bound >= 1 for e in cert.trail)
    assert cert.trail[-1].bound < cert.trail[10].bound < cert.trail[0].bound
    assert cert.best_bound < 1.1


def test_radius_general_conjugators(f2):
    a = ab(f2)
    conj = build_conjugators(a, shortcut="never")
    cert = certified_radius(a, conj.u, conj.v, 10_000, target=1.1 * SQ2)
    assert cert.identity_verified
    assert cert.best_bound <= 1.1 * SQ2
    bounds = [e.bound for e in cert.trail]
    assert bounds[-1] < bounds[-2]
    x = conj.u * a * conj.v
    degree = a.max_level + 2 * max(conj.u.max_level, conj.v.max_level)
    assert x.max_level <= degree
    assert cert.trail[0].bound == pytest.approx(haagerup_bound(x, degree))


def test_radius_monotone_in_m_max(f2):
    a = ab(f2)
    conj = build_conjugators(a)
    best = [certified_radius(a, conj.u, conj.v, m).best_bound for m in (1, 5, 50, 500)]
    assert best == sorted(best, reverse=True)
    assert best[-1] >= a.norm2()


def test_radius_refused_without_identity(f2):
    a = f2.letter("a", 1) + f2.letter("a", -1)
    one = f2.one()
    with pytest.raises(PowerIdentityError):
        certified_radius(a, one, one, 10)
    cert = certified_radius(a, one, one, 20, fallback=True)
    assert not cert.identity_verified and len(cert.trail) == 8
    # r(a) = 2 for a = 2 cos on the circle
    assert all(e.bound >= 2 - 1e-12 for e in cert.trail)


def test_radius_zero_element(f2):
    with pytest.raises(BoundError):
        certified_radius(f2.zero(), f2.one(), f2.one(), 3)


def test_bound_term_log_space():
    assert radius_bound_term(1, 1.0, 5, 2.0) == pytest.approx(11 ** 1.5 * 2)
    assert radius_bound_term(10 ** 6, 2.0, 5, 1.0) == pytest.approx(1.0, abs=1e-4)


def test_certificate_serializes(f2):
    a = ab(f2)
    conj = build_conjugators(a)
    cert = certified_radius(a, conj.u, conj.v, 3)
    assert '"best_bound"' in cert.to_json()
    assert cert.to_dict()["verification"]["ok"]
