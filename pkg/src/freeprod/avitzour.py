"""Trace-orthonormal unitaries in tracial algebras, and the obstructions.

Constructions: Haar unitaries from diffuse measures, root-of-unity and
zero-trace unitaries from projections, matrix pairs ``{1, u, v}``.
Obstructions: an atom of mass ``> 1/n`` forbids ``n`` orthonormal unitaries,
and on the four-point space with masses ``((1-b)/3, (1-b)/3, (1-b)/3, b)``
near ``b = 1/3`` no pair ``u, v`` with ``int u = int v = int u v-bar = 0``
exists.  The optimization-based checks produce evidence, not proofs.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, optimize

TWO_PI = 2 * math.pi


class MeasureError(ValueError):
    pass


class AtomError(MeasureError):
    """The measure has atoms, so no Haar unitary exists."""


class InfeasibleError(ValueError):
    pass


# -- measures ---------------------------------------------------------------


@dataclass
class DiscreteTracialSpace:
    """Probability measure: point masses plus intervals with polynomial densities.

    ``intervals`` holds ``(a, b, coeffs)`` with density
    ``sum_k coeffs[k] x^k`` on ``[a, b]``.
    """

    atoms: list = field(default_factory=list)
    intervals: list = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        self.atoms = [(p, float(m)) for p, m in self.atoms]
        self.intervals = [(float(a), float(b), np.asarray(c, dtype=float)) for a, b, c in self.intervals]
        if any(m < 0 for _, m in self.atoms):
            raise MeasureError("atom masses must be non-negative")
        for a, b, c in self.intervals:
            if not b > a:
                raise MeasureError(f"empty interval [{a}, {b}]")
            xs = np.linspace(a, b, 257)
            if (P.polyval(xs, c) < -1e-12).any():
                raise MeasureError(f"density is negative on [{a}, {b}]")
        if abs(self.total_mass() - 1) > 1e-12:
            raise MeasureError(f"total mass {self.total_mass()} != 1")

    @classmethod
    def from_spec(cls, spec: dict) -> "DiscreteTracialSpace":
        try:
            atoms = [(a["point"], a["mass"]) for a in spec.get("atoms", [])]
            intervals = [(i["interval"][0], i["interval"][1], i["density"]) for i in spec.get("intervals", [])]
        except (KeyError, IndexError, TypeError) as exc:
            raise MeasureError(f"malformed measure spec: {exc!r}") from None
        return cls(atoms, intervals, spec.get("name", ""))

    def to_spec(self) -> dict:
        return {
            "name": self.name,
            "atoms": [{"point": p, "mass": m} for p, m in self.atoms],
            "intervals": [{"interval": [a, b], "density": [float(x) for x in c]} for a, b, c in self.intervals],
        }

    @property
    def has_atoms(self) -> bool:
        return any(m > 0 for _, m in self.atoms)

    def interval_mass(self, index: int, lo: float, hi: float) -> float:
        a, b, c = self.intervals[index]
        lo, hi = max(lo, a), min(hi, b)
        if hi <= lo:
            return 0.0
        anti = P.polyint(c)
        return float(P.polyval(hi, anti) - P.polyval(lo, anti))

    def total_mass(self) -> float:
        return sum(m for _, m in self.atoms) + sum(self.interval_mass(i, a, b)
                                                   for i, (a, b, _) in enumerate(self.intervals))

    def integrate(self, func, points=None) -> complex:
        """``int func dmu`` by adaptive quadrature on the diffuse part."""
        total = sum(m * complex(func(p)) for p, m in self.atoms)
        for a, b, c in self.intervals:
            brk = [p for p in (points or []) if a < p < b] or None
            for part in (np.real, np.imag):
                val, _ = integrate.quad(lambda x: float(part(func(x))) * P.polyval(x, c), a, b,
                                        points=brk, limit=400, epsabs=1e-13, epsrel=1e-11)
                total += val if part is np.real else 1j * val
        return total


def shipped_measures() -> dict:
    """The diffuse example measures bundled with the package."""
    out = {}
    folder = resources.files("freeprod") / "data" / "measures"
    for entry in sorted(folder.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            spec = json.loads(entry.read_text())
            out[spec["name"]] = DiscreteTracialSpace.from_spec(spec)
    return out


# -- Haar unitaries -----------------------------------------------------------


@dataclass
class PhaseFunction:
    """``u(x) = exp(2 pi i h(x))``, or explicit unit-modulus point values."""

    h: object = None
    values: dict = field(default_factory=dict)
    breakpoints: list = field(default_factory=list)

    def __call__(self, x):
        if self.h is None:
            return self.values[x]
        return np.exp(1j * TWO_PI * self.h(x))

    def moment(self, measure: DiscreteTracialSpace, n: int) -> complex:
        """``tau(u^n)``."""
        if self.h is None:
            return sum(m * self.values[p] ** n for p, m in measure.atoms)
        return measure.integrate(lambda x: np.exp(1j * TWO_PI * n * self.h(x)), self.breakpoints)


def _monotone_pieces(f, a, b, grid):
    xs = np.linspace(a, b, grid)
    ys = np.array([f(x) for x in xs], dtype=float)
    d = np.sign(np.diff(ys))
    pieces, start = [], 0
    for i in range(1, len(d)):
        if d[i] != d[i - 1]:
            pieces.append((start, i))
            start = i
    pieces.append((start, len(d)))
    # move each turning point from the grid to the true local extremum
    cuts = [xs[0]]
    for s, _ in pieces[1:]:
        sign = 1.0 if d[s - 1] < 0 else -1.0
        res = optimize.minimize_scalar(lambda x: sign * f(x), bounds=(xs[s - 1], xs[s + 1]),
                                       method="bounded", options={"xatol": 1e-14})
        cuts.append(float(res.x))
    cuts.append(xs[-1])
    out = [(p, q, float(f(p)), float(f(q))) for p, q in zip(cuts[:-1], cuts[1:]) if q > p]
    return out, xs, ys


def haar_unitary_from_measure(measure: DiscreteTracialSpace, f=None, grid: int = 2049) -> PhaseFunction:
    """Unitary whose distribution under a diffuse measure is Haar measure.

    With ``g(t) = mu(f^{-1}([min f, t]))`` the function ``h = g o f`` pushes
    ``mu`` to Lebesgue measure on ``[0, 1]``, so ``u = exp(2 pi i h)`` has
    ``tau(u^n) = 0`` for ``n != 0``.  ``f`` must be continuous and
    piecewise monotone with no level set of positive mass.
    """
    if measure.has_atoms:
        raise AtomError("measure has atoms; a Haar unitary needs a diffuse measure")
    if f is None:
        f = lambda x: x  # noqa: E731
    pieces = []
    for idx, (a, b, _) in enumerate(measure.intervals):
        mono, xs, ys = _monotone_pieces(f, a, b, grid)
        scale = max(1.0, float(np.abs(ys).max()))
        for i in range(len(xs) - 1):
            if abs(ys[i + 1] - ys[i]) <= 1e-14 * scale and measure.interval_mass(idx, xs[i], xs[i + 1]) > 0:
                raise MeasureError(f"f is constant on [{xs[i]}, {xs[i + 1]}], a set of positive mass")
        for p, q, fp, fq in mono:
            pieces.append((idx, p, q, fp, fq))

    def g(t):
        total = 0.0
        for idx, p, q, fp, fq in pieces:
            lo_v, hi_v = min(fp, fq), max(fp, fq)
            if t >= hi_v:
                total += measure.interval_mass(idx, p, q)
            elif t > lo_v:
                root = optimize.brentq(lambda x: f(x) - t, p, q, xtol=1e-15)
                total += measure.interval_mass(idx, p, root) if fq > fp else measure.interval_mass(idx, root, q)
        return total

    def h(x):
        return g(f(x))

    return PhaseFunction(h=h, breakpoints=sorted({p for _, p, _, _, _ in pieces} | {q for _, _, q, _, _ in pieces}))


def haar_moments(u: PhaseFunction, measure: DiscreteTracialSpace, n_max: int = 8) -> dict:
    return {n: u.moment(measure, n) for n in range(-n_max, n_max + 1) if n}


# -- projections ------------------------------------------------------------


def root_of_unity_unitary(n: int, projection_traces=None, tol: float = 1e-12) -> list:
    """Coefficients ``(1, w, ..., w^(n-1))``, ``w = exp(2 pi i / n)``, of
    ``u = sum_k w^k p_(k+1)`` for ``n`` projections of trace ``1/n``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if projection_traces is not None:
        tr = [float(t) for t in projection_traces]
        if len(tr) != n or any(abs(t - 1 / n) > tol for t in tr):
            raise InfeasibleError(f"projection traces must all equal 1/{n}")
    return [np.exp(1j * TWO_PI * k / n) for k in range(n)]


def unitary_trace_powers(coeffs, traces) -> list:
    """``tau(u^j)`` for ``j = 1..len(coeffs)-1``."""
    c = np.asarray(coeffs)
    t = np.asarray(traces, dtype=float)
    return [complex(np.sum(t * c ** j)) for j in range(1, len(c))]


def cyclotomic_power_sums(n: int) -> list:
    """``sum_k w^(kj)`` for ``j = 1..n-1`` reduced exactly in ``Q(w)``.

    Each sum is the polynomial ``sum_k x^(kj mod n)`` taken modulo the
    ``n``-th cyclotomic polynomial; the returned remainders are all zero
    exactly when the moments vanish.
    """
    import sympy

    x = sympy.symbols("x")
    phi = sympy.Poly(sympy.cyclotomic_poly(n, x), x)
    out = []
    for j in range(1, n):
        s = sympy.Poly(sum(x ** ((k * j) % n) for k in range(n)), x)
        out.append(s.rem(phi))
    return out


@dataclass
class ZeroTraceUnitary:
    groups: list
    group_traces: tuple
    phases: tuple
    coefficients: list
    residual: float


def _merge_to_three(traces):
    groups = [[i] for i in range(len(traces))]
    mass = [t for t in traces]
    while len(groups) > 3:
        order = sorted(range(len(groups)), key=lambda i: (mass[i], groups[i]))
        i, j = sorted(order[:2])
        groups[i] = sorted(groups[i] + groups[j])
        mass[i] += mass[j]
        del groups[j], mass[j]
    order = sorted(range(len(groups)), key=lambda i: (-mass[i], groups[i]))
    return [groups[i] for i in order], [mass[i] for i in order]


def zero_trace_unitary(projection_traces, tol: float = 1e-12) -> ZeroTraceUnitary:
    """Unitary ``q1 + lam q2 + mu q3`` of trace zero from projections of
    trace at most 1/2.

    Merging the two smallest groups keeps every group at most 1/2 while more
    than three remain.  Then ``|t1 + lam t2| = t3`` is solved by the law of
    cosines, which is possible because ``t1 - t2 <= t3 <= t1 + t2``.
    """
    traces = [float(t) for t in projection_traces]
    if len(traces) < 2:
        raise InfeasibleError("need at least two projections")
    if any(t < 0 for t in traces) or abs(sum(traces) - 1) > 1e-12:
        raise InfeasibleError("traces must be non-negative and sum to 1")
    if max(traces) > 0.5 + tol:
        raise InfeasibleError("a projection has trace above 1/2; this construction does not apply")
    groups, mass = _merge_to_three(traces)
    while len(mass) < 3:
        groups.append([])
        mass.append(0.0)
    t1, t2, t3 = mass
    if t3 <= tol:
        lam, mu = -1.0 + 0j, 1.0 + 0j
    else:
        cos = (t3 * t3 - t1 * t1 - t2 * t2) / (2 * t1 * t2)
        lam = complex(np.exp(1j * math.acos(min(1.0, max(-1.0, cos)))))
        s = t1 + lam * t2
        mu = -s / abs(s) if abs(s) > 0 else 1.0 + 0j
    phases = (1.0 + 0j, lam, mu)
    coeffs = [0j] * len(traces)
    for g, ph in zip(groups, phases):
        for i in g:
            coeffs[i] = ph
    residual = abs(sum(c * t for c, t in zip(coeffs, traces)))
    return ZeroTraceUnitary(groups, (t1, t2, t3), phases, coeffs, residual)


# -- matrices ---------------------------------------------------------------


def matrix_avitzour_pair(n: int):
    """Unitaries ``u, v`` in ``M_n`` with ``{1, u, v}`` orthonormal for the
    normalized trace."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if n == 2:
        return np.diag([1.0 + 0j, -1.0]), np.array([[0, 1], [1, 0]], dtype=complex)
    u = np.diag(root_of_unity_unitary(n))
    v = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    return u, v


def orthonormality_residual(mats) -> float:
    """``max |<a_i, a_j> - delta_ij|`` with ``<a, b> = tr(b* a)/n``."""
    n = mats[0].shape[0]
    gram = np.array([[np.trace(b.conj().T @ a) / n for b in mats] for a in mats])
    return float(np.abs(gram - np.eye(len(mats))).max())


def unitarity_residual(m) -> float:
    n = m.shape[0]
    return float(max(np.abs(m @ m.conj().T - np.eye(n)).max(), np.abs(m.conj().T @ m - np.eye(n)).max()))


# -- obstructions -----------------------------------------------------------


@dataclass
class AtomVerdict:
    n: int
    atom_mass: float
    alpha: float
    min_eigenvalue: float
    closed_form: object
    feasible: bool


def atom_obstruction(n: int, atom_mass, tol: float = 1e-12) -> AtomVerdict:
    """Can ``n`` orthonormal unit-modulus functions live on a space with an
    atom of mass ``a``?

    Normalizing every function to 1 at the atom turns orthonormality into
    unit vectors with pairwise inner products ``-a/(1-a)``; their Gram
    matrix is positive semidefinite only if ``a <= 1/n``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < atom_mass < 1:
        raise ValueError("atom mass must lie in (0, 1)")
    alpha = atom_mass / (1 - atom_mass)
    gram = (1 + float(alpha)) * np.eye(n) - float(alpha) * np.ones((n, n))
    lo = float(np.linalg.eigvalsh(gram).min())
    closed = 1 - (n - 1) * alpha
    return AtomVerdict(n, float(atom_mass), float(alpha), lo, closed, lo >= -tol)


def atom_threshold(n: int, tol: float = 1e-13) -> float:
    """Bisection for the atom mass where the minimum eigenvalue changes sign."""
    lo, hi = 1e-9, 1 - 1e-9
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if atom_obstruction(n, mid, tol=0.0).min_eigenvalue >= 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@dataclass
class FourPointResult:
    beta: float
    residual: float
    angles: list
    restart: int
    restarts: int
    seed: int


def four_point_masses(beta: float) -> np.ndarray:
    return np.array([(1 - beta) / 3] * 3 + [beta])


def four_point_residual(angles, beta: float) -> float:
    """``|int u|^2 + |int v|^2 + |int u v-bar|^2`` with ``u(4) = v(4) = 1``."""
    w = four_point_masses(beta)
    u = np.exp(1j * np.r_[angles[:3], 0.0])
    v = np.exp(1j * np.r_[angles[3:6], 0.0])
    return float(abs(w @ u) ** 2 + abs(w @ v) ** 2 + abs(w @ (u * v.conj())) ** 2)


def four_point_infeasibility(beta: float, restarts: int = 200, seed: int = 0) -> FourPointResult:
    """Smallest residual found by multistart BFGS over the six free angles."""
    if not 0 <= beta <= 1 / 3 + 1e-15:
        raise ValueError("beta must lie in [0, 1/3]")
    rng = np.random.default_rng(seed)
    best, best_x, best_r = math.inf, None, -1
    for r in range(restarts):
        x0 = rng.uniform(0, TWO_PI, 6)
        res = optimize.minimize(four_point_residual, x0, args=(beta,), method="BFGS",
                                options={"gtol": 1e-14, "maxiter": 2000})
        if res.fun < best:
            best, best_x, best_r = float(res.fun), np.mod(res.x, TWO_PI), r
    return FourPointResult(float(beta), best, [float(t) for t in best_x], best_r, restarts, seed)


def window_excludes_zero_sum(lo: float, hi: float, terms: int = 3) -> bool:
    """True when ``terms`` reals with ``|t_j|`` in the open interval ``(lo, hi)``
    can never sum to 0.

    Checked by interval arithmetic over every sign pattern.
    """
    for signs in itertools.product((1, -1), repeat=terms):
        pos = sum(1 for s in signs if s > 0)
        neg = terms - pos
        smallest = pos * lo - neg * hi
        largest = pos * hi - neg * lo
        if smallest < 0 < largest:
            return False
    return True


@dataclass
class WindowScan:
    alpha: float
    beta: float
    gamma: float
    im_min: float
    im_max: float

    @property
    def inside(self) -> bool:
        return 2 / 3 < self.im_min and self.im_max < 4 / 3


def window_parameters(alpha: float):
    """``beta, gamma >= 0`` with ``alpha^2 - beta sqrt(1-alpha^2) = -alpha`` and
    ``alpha^2 + beta^2 + gamma^2 = 1``."""
    s = math.sqrt(1 - alpha * alpha)
    beta = (alpha * alpha + alpha) / s
    g2 = 1 - alpha * alpha - beta * beta
    if g2 < -1e-12:
        raise ValueError(f"alpha = {alpha} gives gamma^2 = {g2} < 0")
    return beta, math.sqrt(max(g2, 0.0))


def phase_window_scan(alpha: float, grid: int = 20000) -> WindowScan:
    """Range of ``|Im lam|`` over ``lam`` with ``|-alpha + sqrt(1-alpha^2) lam| = 1``
    and ``1 - sqrt3 gamma <= |-alpha - beta lam| <= 1 + sqrt3 gamma``.

    The first constraint is a circle, parametrized by angle; the feasible
    arcs come from a grid plus root-refined endpoints, so isolated feasible
    points (as at ``alpha = 1/2``) are found.
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    beta, gamma = window_parameters(alpha)
    s = math.sqrt(1 - alpha * alpha)
    lo_b, hi_b = 1 - math.sqrt(3) * gamma, 1 + math.sqrt(3) * gamma

    def lam(th):
        return (alpha + np.exp(1j * th)) / s

    def low(th):
        return abs(-alpha - beta * lam(th)) - lo_b

    def high(th):
        return hi_b - abs(-alpha - beta * lam(th))

    th = np.linspace(0, TWO_PI, grid + 1)
    cands = list(th) + [math.pi / 2, 3 * math.pi / 2, 0.0, math.pi]
    for fn in (low, high):
        vals = np.array([fn(t) for t in th])
        for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
            cands.append(optimize.brentq(fn, th[i], th[i + 1], xtol=1e-15))
    feas = [abs(lam(t).imag) for t in cands if low(t) >= -1e-12 and high(t) >= -1e-12]
    if not feas:
        raise InfeasibleError(f"no lam satisfies both constraints at alpha = {alpha}")
    return WindowScan(alpha, beta, gamma, float(min(feas)), float(max(feas)))


def estimate_alpha0(alphas=None, grid: int = 4000):
    """Empirical threshold: the grid point just above the largest ``alpha``
    whose window leaves ``(2/3, 4/3)``.  Returns ``(alpha0, largest_escape)``."""
    if alphas is None:
        alphas = np.linspace(0.40, 0.5, 201)
    escape = None
    for a in sorted(alphas):
        if not phase_window_scan(float(a), grid).inside:
            escape = float(a)
    above = [float(a) for a in sorted(alphas) if escape is None or a > escape]
    return (above[0] if above else None), escape


# -- the half-atom example -----------------------------------------------------


def _piecewise_linear_exp_integral(h):
    """``int_0^1 exp(2 pi i h(x)) dx`` for ``h`` linear between uniform knots."""
    h = np.asarray(h, dtype=float)
    dx = 1 / (len(h) - 1)
    z = 1j * TWO_PI * np.diff(h)
    safe = np.where(np.abs(z) > 1e-12, z, 1.0)
    ratio = np.where(np.abs(z) > 1e-12, np.expm1(z) / safe, 1.0)
    return complex(np.sum(dx * np.exp(1j * TWO_PI * h[:-1]) * ratio))


def half_atom_trace(h) -> complex:
    """``tau(u) = u(0)/2 + (1/2) int_0^1 u`` for ``mu = delta_0/2 + Lebesgue/2``."""
    return 0.5 * np.exp(1j * TWO_PI * h[0]) + 0.5 * _piecewise_linear_exp_integral(h)


def half_atom_trace_search(knots: int = 16, restarts: int = 40, seed: int = 0) -> float:
    """Smallest ``|tau(u)|`` found over phases piecewise linear on ``knots`` cells.

    Bounded search; refining the cells lets ``|tau(u)|`` approach 0 without
    reaching it.
    """
    rng = np.random.default_rng(seed)
    ramp = np.r_[0.0, np.full(knots, 0.5)]
    starts = [ramp] + [rng.uniform(-2, 2, knots + 1) for _ in range(restarts)]
    best = math.inf
    for x0 in starts:
        res = optimize.minimize(lambda h: abs(half_atom_trace(h)) ** 2, x0, method="BFGS")
        best = min(best, math.sqrt(max(res.fun, 0.0)))
    return best


def exact_fraction(x) -> Fraction:
    return Fraction(x).limit_denominator(10 ** 12)
