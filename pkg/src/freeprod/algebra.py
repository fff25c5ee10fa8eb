"""Factor algebras described by a standard orthonormal basis.

A factor is stored through its basis ``X° = X minus {1}`` of trace-zero
letters, the involution on letters and the structure constants
``x*y = <xy,1> 1 + sum_u <xy,u> u``.  Group algebras are exact (integer
structure constants); finite-dimensional algebras built by Gram-Schmidt are
complex floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .coeffs import PRUNE_TOL

INTEGER = "integer"
CYCLIC = "cyclic"
FINITE_GROUP = "finite_group"
FINITE_DIM = "finite_dim"
KINDS = (INTEGER, CYCLIC, FINITE_GROUP, FINITE_DIM)

DEFAULT_TOL = 1e-12


class AlgebraError(ValueError):
    """Invalid factor description."""


class TraceNotFaithfulError(AlgebraError):
    pass


class AlgebraTable:
    """Common interface for one free-product factor.

    Labels are integers naming the letters of ``X°``.  ``product`` returns
    the unit coefficient together with a dict of the remaining nonzero
    structure constants.
    """

    algebra_id: str
    kind: str
    exact: bool

    def has_label(self, x) -> bool:
        raise NotImplementedError

    def basis(self) -> tuple:
        """All letters of ``X°``; lazy tables raise ``AlgebraError``."""
        raise NotImplementedError

    def sample_labels(self, depth: int) -> list:
        raise NotImplementedError

    def product(self, x, y) -> tuple:
        raise NotImplementedError

    def star(self, x) -> dict:
        raise NotImplementedError

    def letter_norm(self, x):
        raise NotImplementedError

    def is_unitary(self, x) -> bool:
        raise NotImplementedError

    def label_name(self, x) -> str:
        return str(x)

    def to_spec(self) -> dict:
        raise NotImplementedError


class IntegerGroupTable(AlgebraTable):
    """C*(Z) with the infinite basis ``{lambda^n : n != 0}``.

    Label ``n`` stands for the ``n``-th power of the generator; nothing is
    tabulated.
    """

    kind = INTEGER
    exact = True

    def __init__(self, algebra_id: str):
        self.algebra_id = str(algebra_id)

    def __repr__(self):
        return f"IntegerGroupTable({self.algebra_id!r})"

    def has_label(self, x) -> bool:
        return isinstance(x, int) and not isinstance(x, bool) and x != 0

    def basis(self):
        raise AlgebraError(f"{self.algebra_id}: integer-kind basis is infinite")

    def sample_labels(self, depth: int) -> list:
        return [n for n in range(-depth, depth + 1) if n]

    def product(self, x, y):
        s = x + y
        if s == 0:
            return 1, {}
        return 0, {s: 1}

    def star(self, x):
        return {-x: 1}

    def letter_norm(self, x):
        return 1

    def is_unitary(self, x) -> bool:
        return True

    def generator_length(self, x) -> int:
        return abs(x)

    def label_name(self, x) -> str:
        return self.algebra_id if x == 1 else f"{self.algebra_id}^{x}"

    def to_spec(self) -> dict:
        return {"id": self.algebra_id, "kind": INTEGER}


@dataclass(eq=False)
class StructureTable(AlgebraTable):
    """A factor with finitely many letters and explicit structure constants."""

    algebra_id: str
    kind: str
    labels: tuple
    products: dict
    star_map: dict
    norms: dict
    unitary: frozenset
    exact: bool
    names: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.algebra_id = str(self.algebra_id)
        self._labels = frozenset(self.labels)

    def __repr__(self):
        return f"StructureTable({self.algebra_id!r}, kind={self.kind!r}, dim={len(self.labels) + 1})"

    def has_label(self, x) -> bool:
        return x in self._labels

    def basis(self):
        return self.labels

    def sample_labels(self, depth: int) -> list:
        return list(self.labels)

    def product(self, x, y):
        return self.products[x, y]

    def star(self, x):
        return self.star_map[x]

    def letter_norm(self, x):
        return self.norms[x]

    def is_unitary(self, x) -> bool:
        return x in self.unitary

    def label_name(self, x) -> str:
        return self.names.get(x, str(x))

    def to_spec(self) -> dict:
        if not self.spec:
            raise AlgebraError(f"{self.algebra_id}: table was not built from a spec payload")
        return dict(self.spec)


# -- group algebras ---------------------------------------------------------


def _check_group_table(table) -> int:
    """Return the index of the identity; raise on anything that is not a group."""
    n = len(table)
    if n < 2:
        raise AlgebraError("group table needs at least two elements")
    for row in table:
        if len(row) != n or any(not (0 <= g < n) for g in row):
            raise AlgebraError("group table must be square with entries in range")
    ident = [e for e in range(n) if all(table[e][g] == g and table[g][e] == g for g in range(n))]
    if not ident:
        raise AlgebraError("group table has no identity element")
    e = ident[0]
    for g in range(n):
        if not any(table[g][h] == e for h in range(n)):
            raise AlgebraError(f"element {g} has no inverse")
    for a, b, c in itertools.product(range(n), repeat=3):
        if table[table[a][b]][c] != table[a][table[b][c]]:
            raise AlgebraError(f"table is not associative at ({a}, {b}, {c})")
    return e


def _group_structure(algebra_id, kind, table, names, spec) -> StructureTable:
    e = _check_group_table(table)
    n = len(table)
    labels = tuple(g for g in range(n) if g != e)
    inverse = {g: next(h for h in range(n) if table[g][h] == e) for g in labels}
    products = {}
    for x in labels:
        for y in labels:
            z = table[x][y]
            products[x, y] = (1, {}) if z == e else (0, {z: 1})
    return StructureTable(
        algebra_id=algebra_id,
        kind=kind,
        labels=labels,
        products=products,
        star_map={g: {inverse[g]: 1} for g in labels},
        norms={g: 1 for g in labels},
        unitary=frozenset(labels),
        exact=True,
        names={g: names[g] for g in labels} if names else {},
        spec=spec,
    )


def build_group_algebra(kind: str, algebra_id: str = "G", n: int | None = None,
                        table=None, elements=None) -> AlgebraTable:
    """Group algebra factor: ``integer`` (C*(Z)), ``cyclic`` (Z_n) or
    ``finite_group`` from a multiplication table of element indices."""
    if kind == INTEGER:
        return IntegerGroupTable(algebra_id)
    if kind == CYCLIC:
        if n is None or int(n) < 2:
            raise AlgebraError("cyclic group needs n >= 2")
        n = int(n)
        cyc = [[(i + j) % n for j in range(n)] for i in range(n)]
        names = {g: f"{algebra_id}^{g}" if g > 1 else str(algebra_id) for g in range(1, n)}
        return _group_structure(algebra_id, CYCLIC, cyc, names, {"id": str(algebra_id), "kind": CYCLIC, "n": n})
    if kind == FINITE_GROUP:
        if table is None:
            raise AlgebraError("finite_group needs a multiplication table")
        if elements is not None:
            index = {name: i for i, name in enumerate(elements)}
            try:
                table = [[index[g] if not isinstance(g, int) else g for g in row] for row in table]
            except KeyError as exc:
                raise AlgebraError(f"unknown group element {exc.args[0]!r}") from None
        table = [list(map(int, row)) for row in table]
        names = {i: str(name) for i, name in enumerate(elements)} if elements else None
        spec = {"id": str(algebra_id), "kind": FINITE_GROUP, "table": table}
        if elements:
            spec["elements"] = [str(x) for x in elements]
        return _group_structure(algebra_id, FINITE_GROUP, table, names, spec)
    raise AlgebraError(f"unknown group kind {kind!r}")


# -- Gram-Schmidt for finite-dimensional algebras -----------------------------


def _prune(c):
    c = complex(c)
    re = c.real if abs(c.real) > PRUNE_TOL else 0.0
    im = c.imag if abs(c.imag) > PRUNE_TOL else 0.0
    return complex(re, im)


def gram_schmidt_onb(dimension: int, product, star, trace, seed_set, spanning=None,
                     algebra_id: str = "A", tol: float = DEFAULT_TOL) -> StructureTable:
    """Extend an orthonormal ``seed_set`` (first element the unit) to a
    standard orthonormal basis of a finite-dimensional tracial *-algebra.

    Elements are coordinate vectors in ``C^dimension``; ``product`` is
    bilinear, ``star`` antilinear, ``trace`` linear.  Candidates are added
    in the order: pairwise products of the current set, their adjoints, then
    the spanning vectors; this repeats until the set spans everything.
    """
    vec = lambda v: np.asarray(v, dtype=complex).reshape(dimension)  # noqa: E731
    inner = lambda a, b: complex(trace(product(star(b), a)))  # noqa: E731
    spanning = [vec(row) for row in (np.eye(dimension) if spanning is None else spanning)]

    gram = np.array([[inner(a, b) for b in spanning] for a in spanning])
    herm = (gram + gram.conj().T) / 2
    if np.linalg.eigvalsh(herm).min() <= tol or np.abs(gram - gram.conj().T).max() > 1e-9:
        raise TraceNotFaithfulError("trace not faithful: Gram matrix of the spanning set is singular")

    seed = [vec(s) for s in seed_set]
    if not seed:
        raise AlgebraError("seed set must contain the unit")
    unit = seed[0]
    for e in spanning:
        if np.abs(product(unit, e) - e).max() > 1e-9 or np.abs(product(e, unit) - e).max() > 1e-9:
            raise AlgebraError("first seed element is not the unit")
    g = np.array([[inner(a, b) for b in seed] for a in seed])
    if np.abs(g - np.eye(len(seed))).max() > 1e-9:
        raise AlgebraError("seed set is not orthonormal")

    basis = list(seed)

    def absorb(c):
        c = vec(c)
        for _ in range(2):
            for b in basis:
                c = c - inner(c, b) * b
        nrm = inner(c, c).real
        if nrm > 1e-18 and np.sqrt(nrm) > tol:
            basis.append(c / np.sqrt(nrm))
            return True
        return False

    while len(basis) < dimension:
        grown = False
        current = list(basis)
        for a, b in itertools.product(current, repeat=2):
            grown |= absorb(product(a, b))
        for a in current:
            grown |= absorb(star(a))
        for e in spanning:
            grown |= absorb(e)
        if not grown:
            break
    if len(basis) != dimension:
        raise AlgebraError(f"basis has {len(basis)} elements, expected {dimension}")

    labels = tuple(range(1, dimension))

    def expand(v):
        coeffs = [_prune(inner(v, b)) for b in basis]
        return coeffs[0], {j: c for j, c in zip(labels, coeffs[1:]) if c}

    products = {(x, y): expand(product(basis[x], basis[y])) for x in labels for y in labels}
    star_map = {x: expand(star(basis[x]))[1] for x in labels}
    norms, unitary = {}, set()
    for x in labels:
        left = np.array([[inner(product(basis[x], basis[j]), basis[i]) for j in range(dimension)]
                         for i in range(dimension)])
        norms[x] = float(np.linalg.norm(left, 2))
        xs = star(basis[x])
        if (np.abs(product(basis[x], xs) - unit).max() <= 1e-9
                and np.abs(product(xs, basis[x]) - unit).max() <= 1e-9):
            unitary.add(x)
    return StructureTable(
        algebra_id=algebra_id,
        kind=FINITE_DIM,
        labels=labels,
        products=products,
        star_map=star_map,
        norms=norms,
        unitary=frozenset(unitary),
        exact=False,
        vectors={j: basis[j] for j in range(dimension)},
    )


class BlockAlgebra:
    """Direct sum of matrix blocks ``M_n1 + ... + M_nr`` with trace weights.

    Supplies the vector-level ``product``/``star``/``trace`` callables used by
    :func:`gram_schmidt_onb`.
    """

    def __init__(self, blocks, weights):
        self.blocks = [int(b) for b in blocks]
        w = np.asarray(weights, dtype=float)
        if len(w) != len(self.blocks) or (w <= 0).any() or abs(w.sum() - 1) > 1e-12:
            raise AlgebraError("weights must be positive, one per block, summing to 1")
        self.weights = w
        self.offsets = np.cumsum([0] + [b * b for b in self.blocks])
        self.dimension = int(self.offsets[-1])

    def split(self, v):
        return [np.asarray(v[o:o + b * b]).reshape(b, b) for o, b in zip(self.offsets, self.blocks)]

    def join(self, mats):
        return np.concatenate([np.asarray(m, dtype=complex).reshape(-1) for m in mats])

    def product(self, a, b):
        return self.join([x @ y for x, y in zip(self.split(a), self.split(b))])

    def star(self, a):
        return self.join([x.conj().T for x in self.split(a)])

    def trace(self, a):
        return sum(w * np.trace(x) / n for w, x, n in zip(self.weights, self.split(a), self.blocks))

    def unit(self):
        return self.join([np.eye(b) for b in self.blocks])


def _parse_entry(x):
    if isinstance(x, (list, tuple)):
        return complex(float(x[0]), float(x[1]))
    return complex(x)


def matrix_algebra_onb(blocks, weights, seed=(), algebra_id: str = "A",
                       tol: float = DEFAULT_TOL) -> StructureTable:
    """Standard orthonormal basis of a block matrix algebra containing the
    unit and the given ``seed`` elements (each a list of block matrices)."""
    alg = BlockAlgebra(blocks, weights)
    seed_vecs = [alg.join([[[_parse_entry(e) for e in row] for row in m] for m in s]) for s in seed]
    if not seed_vecs or np.abs(seed_vecs[0] - alg.unit()).max() > 1e-12:
        seed_vecs.insert(0, alg.unit())
    table = gram_schmidt_onb(alg.dimension, alg.product, alg.star, alg.trace, seed_vecs,
                             algebra_id=algebra_id, tol=tol)
    table.spec = {
        "id": str(algebra_id),
        "kind": FINITE_DIM,
        "blocks": list(alg.blocks),
        "weights": [float(w) for w in alg.weights],
        "seed": [[[[e if isinstance(e, (int, float)) else [float(e[0]), float(e[1])] for e in row]
                   for row in m] for m in s] for s in seed],
    }
    table.block_algebra = alg
    return table


# -- validation --------------------------------------------------------------


@dataclass
class Violation:
    check: str
    detail: str
    magnitude: float


@dataclass
class ValidationReport:
    algebra_id: str
    checked_labels: int
    violations: list
    max_residual: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def checks_failed(self) -> set:
        return {v.check for v in self.violations}


def _add(acc: dict, coeffs: dict, scale):
    for k, c in coeffs.items():
        acc[k] = acc.get(k, 0) + scale * c


def _expand_product(t: AlgebraTable, a: dict, b: dict) -> dict:
    """Product of two combinations over ``{None: unit} | letters``."""
    out: dict = {}
    for x, cx in a.items():
        for y, cy in b.items():
            if x is None:
                _add(out, {y: 1}, cx * cy)
            elif y is None:
                _add(out, {x: 1}, cx * cy)
            else:
                unit, rest = t.product(x, y)
                _add(out, {None: unit}, cx * cy)
                _add(out, rest, cx * cy)
    return out


def _residual(got: dict, want: dict) -> float:
    keys = set(got) | set(want)
    return max((abs(complex(got.get(k, 0) - want.get(k, 0))) for k in keys), default=0.0)


def validate_table(t: AlgebraTable, sample_depth: int = 3, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check the orthonormal-basis axioms on letters up to ``sample_depth``."""
    labels = t.sample_labels(sample_depth)
    violations = []
    worst = 0.0

    def record(check, detail, mag):
        nonlocal worst
        worst = max(worst, mag)
        if mag > (0 if t.exact else tol):
            violations.append(Violation(check, detail, mag))

    for x in labels:
        star_x = t.star(x)
        bad = [u for u in star_x if not t.has_label(u)]
        if bad:
            record("star/unit closure", f"star({x}) uses unknown letters {bad}", 1.0)
            continue
        back: dict = {}
        for u, c in star_x.items():
            _add(back, t.star(u), c.conjugate() if hasattr(c, "conjugate") else c)
        record("star/unit closure", f"star(star({x})) != {x}", _residual(back, {x: 1}))
        xsx = _expand_product(t, star_x, {x: 1})
        record("star/unit closure", f"<{x}*{x}, 1> != 1", abs(complex(xsx.get(None, 0) - 1)))
        if t.is_unitary(x):
            record("unitarity", f"{x}*{x} != 1", _residual(xsx, {None: 1}))
            record("unitarity", f"{x}{x}* != 1", _residual(_expand_product(t, {x: 1}, star_x), {None: 1}))

    for x, y in itertools.product(labels, repeat=2):
        unit_xy, rest = t.product(x, y)
        bad = [u for u in rest if not t.has_label(u)]
        if bad:
            record("product closure", f"{x}*{y} uses unknown letters {bad}", 1.0)
        unit_yx, _ = t.product(y, x)
        record("trace property", f"tau({x}{y}) != tau({y}{x})", abs(complex(unit_xy - unit_yx)))
        if x != y:
            inner = _expand_product(t, t.star(y), {x: 1}).get(None, 0)
            record("orthonormality", f"<{x}, {y}> != 0", abs(complex(inner)))

    if len(labels) <= 16:
        for x, y, z in itertools.product(labels, repeat=3):
            left = _expand_product(t, _expand_product(t, {x: 1}, {y: 1}), {z: 1})
            right = _expand_product(t, {x: 1}, _expand_product(t, {y: 1}, {z: 1}))
            record("associativity", f"({x}{y}){z} != {x}({y}{z})", _residual(left, right))

    return ValidationReport(t.algebra_id, len(labels), violations, worst)


# -- spec files --------------------------------------------------------------


def table_from_spec(spec: dict) -> AlgebraTable:
    """Build a factor from its JSON-compatible description."""
    try:
        aid = str(spec["id"])
        kind = spec["kind"]
    except KeyError as exc:
        raise AlgebraError(f"algebra spec missing field {exc.args[0]!r}") from None
    if kind in (INTEGER, CYCLIC, FINITE_GROUP):
        return build_group_algebra(kind, aid, n=spec.get("n"), table=spec.get("table"),
                                   elements=spec.get("elements"))
    if kind == FINITE_DIM:
        for key in ("blocks", "weights"):
            if key not in spec:
                raise AlgebraError(f"{aid}: finite_dim spec missing {key!r}")
        return matrix_algebra_onb(spec["blocks"], spec["weights"], spec.get("seed", []), algebra_id=aid)
    raise AlgebraError(f"{aid}: unknown kind {kind!r}")

