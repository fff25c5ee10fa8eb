"""Operator-norm bounds from two-norms, and spectral-radius certificates.

Upper bounds are of Haagerup type: an element of level at most ``k`` has
operator norm at most ``(2k+1)^(3/2) K(a) ||a||_2``.  Combined with the
spectral-radius formula ``r(x) <= ||x^m||^(1/m)``, a sequence of finite-``m``
bounds on ``r(uav)`` follows once ``||(uav)^m||_2 = ||a||_2^m`` is known.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .coeffs import FLOAT
from .element import Element, generator_length, project_level, support_profile
from .sampling import random_element


class BoundError(ValueError):
    pass


class PowerIdentityError(RuntimeError):
    """The conjugated element does not have multiplicative power norms."""


def haagerup_homogeneous_bound(a: Element) -> float:
    """``(2k+1) K(a) ||a||_2`` for ``a`` supported on words of one length ``k``."""
    levels = a.levels()
    if len(levels) > 1:
        raise BoundError(f"element is not homogeneous: levels {sorted(levels)}")
    if not levels:
        return 0.0
    (k,) = levels
    return (2 * k + 1) * support_profile(a).k_constant * a.norm2()


def haagerup_bound(a: Element, k: int | None = None) -> float:
    """``(2k+1)^(3/2) K(a) ||a||_2`` for ``a`` of level at most ``k``."""
    if not a:
        return 0.0
    if k is None:
        k = a.max_level
    if k < a.max_level:
        raise BoundError(f"k = {k} is below the top level {a.max_level}")
    return (2 * k + 1) ** 1.5 * support_profile(a).k_constant * a.norm2()


def f2_word_bound(z: Element, N: int | None = None) -> float:
    """``2(N+1)^2 ||z||_2`` for free-group elements with word length ``<= N``.

    ``N`` counts generators and inverses, not blocks.
    """
    for t in z.family.tables.values():
        if t.kind != "integer":
            raise BoundError(f"{t.algebra_id!r} is not a free-generator factor")
    length = generator_length(z)
    if N is None:
        N = length
    if N < length:
        raise BoundError(f"N = {N} is below the longest word length {length}")
    return 2 * (N + 1) ** 2 * z.norm2()


def _truncate(b: Element, level_cap: int, max_terms: int) -> Element:
    terms = {w: c for w, c in b.terms.items() if len(w) <= level_cap}
    if len(terms) > max_terms:
        ranked = sorted(terms.items(), key=lambda kv: (-abs(kv[1]), kv[0]))[:max_terms]
        terms = dict(ranked)
    return Element(b.family, terms, b.mode)


def opnorm_lower(a: Element, trials: int = 4, seed: int = 0, level_cap: int = 4,
                 iterations: int = 6, max_terms: int = 2000) -> float:
    """Lower bound ``max ||ab||_2`` over unit vectors ``b`` of the two-norm.

    Each trial starts from a random ``b`` and follows a few truncated power
    steps ``b <- a*a b``; every iterate is a valid test vector.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a = a.to_float()
    if not a:
        return 0.0
    rng = np.random.default_rng(seed)
    aa = a.adjoint() * a
    best = 0.0
    for _ in range(trials):
        b = random_element(a.family, rng, level_cap, 6, mode=FLOAT)
        if not b:
            b = a.family.one(FLOAT)
        for step in range(iterations + 1):
            nb = b.norm2()
            if nb == 0:
                break
            b = b.scale(1 / nb)
            best = max(best, (a * b).norm2())
            if step < iterations:
                b = _truncate(aa * b, level_cap, max_terms)
    return best


# -- spectral radius certificates ------------------------------------------------


@dataclass
class TrailEntry:
    m: int
    degree_bound: int
    log_power_two_norm: float
    bound: float


@dataclass
class RadiusCertificate:
    """Finite-``m`` upper bounds on ``r(uav)``; every entry is a valid bound."""

    element: list
    conjugators: dict
    a_level: int
    conj_level: int
    two_norm: float
    k_squared: str
    k_constant: float
    trail: list
    identity_verified: bool
    verification: dict = field(default_factory=dict)
    f2_lengths: int | None = None

    @property
    def best(self) -> TrailEntry:
        return min(self.trail, key=lambda e: (e.bound, e.m))

    @property
    def best_bound(self) -> float:
        return self.best.bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["best_bound"] = self.best_bound
        d["best_m"] = self.best.m
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def radius_bound_term(m: int, k_constant: float, degree: int, two_norm: float) -> float:
    """``(K (2 m D + 1)^(3/2))^(1/m) ||a||_2`` computed in log space."""
    return math.exp((math.log(k_constant) + 1.5 * math.log(2 * m * degree + 1)) / m) * two_norm


def certified_radius(a: Element, u: Element, v: Element, m_max: int, verify_cap: int = 3,
                     target: float | None = None, fallback: bool = False) -> RadiusCertificate:
    """Certificate for ``r(uav)`` with trail entries ``m = 1..m_max``.

    The power-norm identity is checked for ``m <= verify_cap`` first and
    the closed form is used for every ``m``.  When the identity fails the
    certificate is refused, unless ``fallback`` asks for explicitly computed
    powers (``m <= 8``).  With ``target`` the trail stops at the first bound
    at or below it.
    """
    from .stable_rank import verify_power_identity

    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    if not a:
        raise BoundError("the zero element has radius 0; no certificate needed")
    k = a.max_level
    conj_level = max(u.max_level, v.max_level)
    degree = k + 2 * conj_level
    nrm = a.norm2()
    report = verify_power_identity(a, u, v, min(m_max, verify_cap))
    conjugators = {"u": u.to_literal(), "v": v.to_literal()}
    trail = []
    if report.ok:
        kc = math.sqrt(float(report.k_bound_squared))
        for m in range(1, m_max + 1):
            b = radius_bound_term(m, kc, degree, nrm)
            trail.append(TrailEntry(m, m * degree, m * math.log(nrm), b))
            if target is not None and b <= target:
                break
        k_sq = report.k_bound_squared
    elif fallback:
        x = u * a * v
        power = x
        k_sq = 0
        for m in range(1, min(m_max, 8) + 1):
            if m > 1:
                power = power * x
            prof = support_profile(power)
            k_sq = max(k_sq, prof.k_squared)
            pn = power.norm2()
            b = (prof.k_constant * (2 * m * degree + 1) ** 1.5 * pn) ** (1 / m)
            trail.append(TrailEntry(m, m * degree, math.log(pn), b))
            if target is not None and b <= target:
                break
        kc = math.sqrt(float(k_sq))
    else:
        raise PowerIdentityError(f"power-norm identity fails at m = {report.first_failure}")
    f2_len = None
    if all(t.kind == "integer" for t in a.family.tables.values()):
        f2_len = generator_length(u * a * v)
    return RadiusCertificate(
        element=a.to_literal(),
        conjugators=conjugators,
        a_level=k,
        conj_level=conj_level,
        two_norm=nrm,
        k_squared=str(k_sq),
        k_constant=kc,
        trail=trail,
        identity_verified=report.ok,
        verification=report.to_dict(),
        f2_lengths=f2_len,
    )


def level_norms(a: Element) -> list:
    """Two-norms of the level components ``E_n(a)``, ``n = 0..max_level``."""
    return [project_level(a, n).norm2() for n in range(a.max_level + 1)]
