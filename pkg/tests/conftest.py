import pytest

from freeprod.algebra import build_group_algebra, matrix_algebra_onb
from freeprod.element import FreeProduct

U2 = [[[1, 0], [0, -1]]]
V2 = [[[0, 1], [1, 0]]]


def make_f2():
    return FreeProduct([build_group_algebra("integer", "a"), build_group_algebra("integer", "b")])


def make_z2z3():
    return FreeProduct([build_group_algebra("cyclic", "x", n=2), build_group_algebra("cyclic", "y", n=3)])


def make_m2z():
    m2 = matrix_algebra_onb([2], [1], seed=[U2, V2], algebra_id="M")
    return FreeProduct([m2, build_group_algebra("integer", "t")])


@pytest.fixture
def f2():
    return make_f2()


@pytest.fixture
def z2z3():
    return make_z2z3()


@pytest.fixture
def m2z():
    return make_m2z()


def group_reduce(letters, orders):
    """Free reduction of ``(factor, exponent)`` letters; ``orders[f]`` is the
    cyclic order or 0 for a free generator."""
    out = []
    for aid, e in letters:
        n = orders[aid]
        e = e % n if n else e
        if out and out[-1][0] == aid:
            prev = out.pop()[1]
            e = (prev + e) % n if n else prev + e
        if e:
            out.append((aid, e))
    return tuple(out)


def shape_violations(family, v, w, z, product=None):
    """Support words of ``vwz`` not of the prefix/suffix shape with ``r' >= r-s``
    and ``t' >= t-s``.

    A word passes when it starts with ``r - s`` letters of ``v`` and ends
    with ``t - s`` letters of ``z``, or when it already occurs in the reduced
    expansion of some ``v[:r'] z[-t':]`` (the unreduced words of the shape).
    """
    r, s, t = len(v), len(w), len(z)
    prod = product if product is not None else family.word(v) * family.word(w) * family.word(z)
    collapsed = set()
    for rp in range(r - s, r + 1):
        for tp in range(t - s, t + 1):
            collapsed |= set((family.word(v[:rp]) * family.word(z[t - tp:])).terms)
    bad = []
    for word in prod.terms:
        reduced_shape = word[:r - s] == v[:r - s] and (t - s == 0 or word[len(word) - (t - s):] == z[s:])
        if not (reduced_shape or word in collapsed):
            bad.append(word)
    return bad


ACCEPTANCE_LINES = []


def record(number, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
