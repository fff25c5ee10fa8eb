"""Conjugators with multiplicative power norms and distance-to-invertibles
certificates.

For unitaries ``u, v`` with ``||(uav)^m||_2 = ||a||_2^m`` for all ``m``, the
radius ``r(uav)`` is at most ``||a||_2``.  Since ``u(a - lam u* v*)v =
uav - lam`` the element ``a - lam u* v*`` is invertible once ``|lam| >
r(uav)``, and it lies at distance exactly ``|lam|`` from ``a``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .bounds import RadiusCertificate, certified_radius, radius_bound_term
from .coeffs import EXACT, coerce
from .element import ONE, Element, FreeProduct, support_profile


class TripleError(ValueError):
    pass


@dataclass(frozen=True)
class AvitzourTriple:
    """Unitary letters ``x`` of one factor and ``y, z`` of another, with
    ``tau(x) = tau(y) = tau(z) = tau(z* y) = 0``."""

    x: tuple
    y: tuple
    z: tuple

    def validate(self, family: FreeProduct) -> "AvitzourTriple":
        for name, (aid, label) in (("x", self.x), ("y", self.y), ("z", self.z)):
            t = family.table(aid)
            if not t.has_label(label):
                raise TripleError(f"{name} = {label!r} is not a letter of {aid!r}")
            if not t.is_unitary(label):
                raise TripleError(f"{name} = {label!r} is not unitary")
        if self.y[0] != self.z[0]:
            raise TripleError("y and z must come from the same factor")
        if self.x[0] == self.y[0]:
            raise TripleError("x must come from a different factor than y, z")
        y = family.word([self.y])
        z = family.word([self.z])
        overlap = (z.adjoint() * y).trace()
        if abs(complex(overlap)) > 1e-12:
            raise TripleError(f"tau(z* y) = {overlap} is not zero")
        return self


def find_triple(family: FreeProduct) -> AvitzourTriple:
    """First admissible triple in sorted factor/label order."""
    ids = sorted(family.tables)

    def unitary_letters(aid, cap):
        t = family.tables[aid]
        pool = t.sample_labels(cap) if t.kind == "integer" else t.basis()
        pool = sorted(pool, key=lambda n: (abs(n), n < 0)) if t.kind == "integer" else pool
        return [x for x in pool if t.is_unitary(x)]

    for i2 in ids:
        ys = unitary_letters(i2, 2)
        if len(ys) < 2:
            continue
        for i1 in ids:
            if i1 == i2:
                continue
            xs = unitary_letters(i1, 1)
            if xs:
                # y and z must be distinct basis letters; orthogonality is automatic
                return AvitzourTriple((i1, xs[0]), (i2, ys[0]), (i2, ys[1])).validate(family)
    raise TripleError("no factor pair carries one and two unitary basis letters")


@dataclass
class Conjugators:
    u: Element
    v: Element
    method: str
    k: int
    l: int
    m: int
    k_prime: int | None = None

    def describe(self) -> dict:
        return {"method": self.method, "k": self.k, "l": self.l, "m": self.m, "k_prime": self.k_prime,
                "u": self.u.to_literal(), "v": self.v.to_literal()}


def _free_group_shortcut(a: Element):
    """``u = a b^k', v = b^-k' a`` in a free group ``<a, b, ...>``, or None."""
    fam = a.family
    ids = sorted(fam.tables)
    if len(ids) < 2 or any(t.kind != "integer" for t in fam.tables.values()):
        return None
    ga, gb = ids[0], ids[1]
    if ONE in a.terms:
        return None
    top = max((abs(x) for w in a.terms for _, x in w), default=0)
    for kp in range(1, top + 2):
        bk = fam.letter(gb, kp, mode=a.mode)
        bki = fam.letter(gb, -kp, mode=a.mode)
        ok = True
        for w in a.terms:
            (conj_w,) = (bk * fam.word(w, mode=a.mode) * bki).terms
            if not conj_w or conj_w[0][0] != gb or conj_w[-1][0] != gb:
                ok = False
                break
        if ok:
            u = fam.word([(ga, 1), (gb, kp)], mode=a.mode)
            v = fam.word([(gb, -kp), (ga, 1)], mode=a.mode)
            return u, v, kp
    return None


def build_conjugators(a: Element, triple: AvitzourTriple | None = None,
                      shortcut: str = "auto") -> Conjugators:
    """Unitaries ``u = r u'``, ``v = (xz)^l`` with ``u' = (x y*)^l`` and
    ``r = (xy)(xz)^m(xy)``, using the smallest ``l >= (k+3)/2`` and
    ``m >= (2l+k+1)/2``.

    With ``shortcut="auto"`` pure free-group inputs use the shorter
    conjugators ``a b^k'`` and ``b^-k' a`` when every support word can be
    conjugated by ``b^k'`` to start and end in ``b^(+-1)``.
    """
    if not a:
        raise ValueError("conjugators for the zero element are undefined")
    k = a.max_level
    if shortcut not in ("auto", "never", "only"):
        raise ValueError(f"unknown shortcut option {shortcut!r}")
    if shortcut != "never":
        found = _free_group_shortcut(a)
        if found is not None:
            u, v, kp = found
            return Conjugators(u, v, "free-group", k, max(u.max_level, v.max_level), 0, kp)
        if shortcut == "only":
            raise TripleError("free-group shortcut does not apply to this element")
    fam = a.family
    triple = (triple or find_triple(fam)).validate(fam)
    x = fam.word([triple.x], mode=a.mode)
    y = fam.word([triple.y], mode=a.mode)
    z = fam.word([triple.z], mode=a.mode)
    l = math.ceil((k + 3) / 2)
    m = math.ceil((2 * l + k + 1) / 2)
    u_prime = (x * y.adjoint()) ** l
    v = (x * z) ** l
    r = (x * y) * (x * z) ** m * (x * y)
    return Conjugators(r * u_prime, v, "general", k, l, m)


@dataclass
class PowerCheck:
    m: int
    norm2_sq: str
    expected_norm2_sq: str
    support_size: int
    expected_support: int
    k_squared: str
    norm_ok: bool
    support_ok: bool
    k_ok: bool


@dataclass
class PowerIdentityReport:
    checks: list
    k_bound_squared: object
    first_failure: int | None

    @property
    def ok(self) -> bool:
        return self.first_failure is None

    @property
    def k_stable(self) -> bool:
        return all(c.k_ok for c in self.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "k_stable": self.k_stable, "first_failure": self.first_failure,
                "k_bound_squared": str(self.k_bound_squared),
                "checks": [asdict(c) for c in self.checks]}


def _same(lhs, rhs, mode) -> bool:
    if mode == EXACT:
        return lhs == rhs
    return math.isclose(float(lhs), float(rhs), rel_tol=1e-9, abs_tol=1e-12)


def verify_power_identity(a: Element, u: Element, v: Element, m_cap: int) -> PowerIdentityReport:
    """Compute ``(uav)^m`` for ``m <= m_cap`` and compare with
    ``||(uav)^m||_2^2 = (||a||_2^2)^m``, ``|supp (uav)^m| = |supp uav|^m`` and
    ``K((uav)^m) = K(uav)``.

    ``k_bound_squared`` is the largest ``K^2`` over the first two powers.
    Once the support is multiplicative, no letters beyond those of ``uav``
    and of its junctions (which already occur in ``(uav)^2``) can appear.
    """
    if m_cap < 1:
        raise ValueError("m_cap must be >= 1")
    x = u * a * v
    base_sq = a.norm2_sq()
    n_support = len(x)
    k1 = support_profile(x).k_squared
    k_bound = k1
    checks, failure = [], None
    power = None
    for m in range(1, max(m_cap, 2) + 1):
        power = x if power is None else power * x
        prof = support_profile(power)
        if m <= 2:
            k_bound = max(k_bound, prof.k_squared)
        if m > m_cap:
            break
        got, want = power.norm2_sq(), base_sq ** m
        c = PowerCheck(m, str(got), str(want), len(power), n_support ** m, str(prof.k_squared),
                       _same(got, want, a.mode), len(power) == n_support ** m,
                       _same(prof.k_squared, k1, a.mode))
        checks.append(c)
        if failure is None and not (c.norm_ok and c.support_ok):
            failure = m
    return PowerIdentityReport(checks, k_bound, failure)


@dataclass
class DistanceCertificate:
    """Witness ``z = a - lam u* v*`` for ``dist(a, GL) <= |lam|``."""

    element: list
    conjugators: dict
    radius: RadiusCertificate
    lam: str
    claimed_distance: float
    epsilon: float
    target: float
    target_reached: bool
    invertibility_margin: float
    difference_is_scaled_unitary: bool
    approximant: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.radius.trail[-1].m

    def to_dict(self) -> dict:
        d = asdict(self)
        d["radius"] = self.radius.to_dict()
        d["m"] = self.m
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def distance_certificate(a: Element, epsilon: float, triple: AvitzourTriple | None = None,
                         m_budget: int = 100_000, m_fixed: int | None = None,
                         shortcut: str = "auto", verify_cap: int = 3) -> DistanceCertificate:
    """Invertible approximant within ``||a||_2 + epsilon`` of ``a``.

    The radius trail runs until ``b_m <= ||a||_2 + epsilon/2`` (or exactly to
    ``m_fixed``); then ``|lam| = best bound + epsilon/2``.  Running out of
    budget still returns a certificate with the larger achieved bound and
    ``target_reached = False``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not a:
        raise ValueError("distance certificate for the zero element is undefined")
    conj = build_conjugators(a, triple, shortcut)
    u, v = conj.u, conj.v
    target = a.norm2() + epsilon / 2
    if m_fixed is not None:
        cert = certified_radius(a, u, v, m_fixed, verify_cap=verify_cap)
    else:
        cert = certified_radius(a, u, v, m_budget, verify_cap=verify_cap, target=target)
    best = cert.best_bound
    lam_f = best + epsilon / 2
    lam = coerce(Fraction(lam_f) if a.mode == EXACT else lam_f, a.mode)
    w = (v * u).adjoint()  # u* v*
    diff = w.scale(lam)
    approximant = a - diff
    gram = diff * diff.adjoint()
    expected = a.family.one(a.mode).scale(lam * lam.conjugate())
    if a.mode == EXACT:
        scaled_unitary = gram == expected
    else:
        d = gram - expected
        scaled_unitary = max((abs(c) for c in d.terms.values()), default=0.0) <= 1e-9 * max(1.0, lam_f ** 2)
    return DistanceCertificate(
        element=a.to_literal(),
        conjugators=conj.describe(),
        radius=cert,
        lam=str(Fraction(lam_f)) if a.mode == EXACT else repr(lam_f),
        claimed_distance=lam_f,
        epsilon=epsilon,
        target=target,
        target_reached=best <= target,
        invertibility_margin=lam_f - best,
        difference_is_scaled_unitary=scaled_unitary,
        approximant=approximant.to_literal(),
    )


def closed_form_trail(k_constant: float, degree: int, two_norm: float, m_max: int) -> list:
    """The bound sequence alone, without constructing any element."""
    return [radius_bound_term(m, k_constant, degree, two_norm) for m in range(1, m_max + 1)]
