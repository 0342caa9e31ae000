"""Finite-dimensional Kac algebras as structure-constant packages.

A :class:`KacAlgebra` stores eight structure tensors over a scalar backend:
multiplication, unit, comultiplication, counit, antipode, star (conjugate
linear), and the two idempotent integrals (Haar element h and dual integral
phi, normalised so h*h = h, phi*phi = phi, giving phi(h) = 1/dim).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .backend import ExactBackend, FloatBackend, vadd_into, vdot
from .errors import AxiomViolation, IntegralNotFound, InvalidGroupTable, ScalarParseError
from .cyclo import CycloScalar, parse_scalar, format_scalar
from .linalg import SparseTensor3, apply_matrix
from .backend import null_space_rows


@dataclass
class AxiomCheck:
    name: str
    ok: bool
    residual: float


@dataclass
class AxiomReport:
    subject: str
    checks: list[AxiomCheck] = field(default_factory=list)

    def record(self, name: str, ok: bool, residual: float = 0.0) -> None:
        self.checks.append(AxiomCheck(name, bool(ok), float(residual)))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.ok]

    def __str__(self):
        lines = [f"axiom report for {self.subject}:"]
        for c in self.checks:
            lines.append(f"  {'pass' if c.ok else 'FAIL'}  {c.name}  (residual {c.residual:.3g})")
        return "\n".join(lines)


class KacAlgebra:
    """Structure-constant package for a finite-dimensional Kac algebra."""

    def __init__(self, name: str, dim: int, backend, mult: SparseTensor3,
                 unit: dict, comult: SparseTensor3, counit: dict,
                 antipode: dict[int, dict], star: dict[int, dict],
                 generators: list[int] | None = None,
                 basis_labels: list[str] | None = None):
        self.name = name
        self.dim = dim
        self.backend = backend
        self.mult = mult
        self.unit = unit
        self.comult = comult
        self.counit = counit
        self.antipode = antipode
        self.star = star
        self.generators = generators
        self.basis_labels = basis_labels or [f"e{i}" for i in range(dim)]
        self.haar: dict | None = None
        self.phi: dict | None = None
        self.delta = backend.delta(dim)
        self._dual: KacAlgebra | None = None
        self._legs_cache: dict[tuple[int, int], dict] = {}

    # -- algebra protocol ----------------------------------------------------

    def mult_row(self, i: int, j: int) -> dict:
        return self.mult.row(i, j)

    def one(self) -> dict:
        return dict(self.unit)

    def generator_indices(self) -> list[int]:
        return list(self.generators) if self.generators else list(range(self.dim))

    # -- element operations ----------------------------------------------------

    def product(self, a: dict, b: dict) -> dict:
        out: dict = {}
        for i, ca in a.items():
            for j, cb in b.items():
                c = ca * cb
                if self.backend.is_zero(c):
                    continue
                vadd_into(out, self.mult.row(i, j), c, self.backend)
        return out

    def comult_row(self, i: int) -> dict:
        """Coproduct of e_i as {(j, k): scalar}."""
        return self.comult.row_pairs(i)

    def coproduct(self, vec: dict) -> dict:
        out: dict = {}
        for i, c in vec.items():
            for jk, v in self.comult_row(i).items():
                w = out.get(jk)
                w = c * v if w is None else w + c * v
                if self.backend.is_zero(w):
                    out.pop(jk, None)
                else:
                    out[jk] = w
        return out

    def counit_of(self, vec: dict):
        return vdot(self.counit, vec, self.backend)

    def antipode_vec(self, vec: dict) -> dict:
        return apply_matrix(self.antipode, vec, self.backend)

    def star_vec(self, vec: dict) -> dict:
        out: dict = {}
        for i, c in vec.items():
            vadd_into(out, self.star[i], self.backend.conj(c), self.backend)
        return out

    def pair(self, f: dict, x: dict):
        """Dual-basis pairing <f, x>."""
        return vdot(f, x, self.backend)

    def legs_basis(self, i: int, nlegs: int) -> dict:
        """Iterated coproduct of e_i with nlegs tensor legs, keyed by tuples."""
        if nlegs == 1:
            return {(i,): self.backend.one}
        key = (i, nlegs)
        cached = self._legs_cache.get(key)
        if cached is not None:
            return cached
        out: dict = {}
        for tail, c in self.legs_basis(i, nlegs - 1).items():
            for (a, b), v in self.comult_row(tail[0]).items():
                key2 = (a, b) + tail[1:]
                w = out.get(key2)
                w = c * v if w is None else w + c * v
                if self.backend.is_zero(w):
                    out.pop(key2, None)
                else:
                    out[key2] = w
        self._legs_cache[key] = out
        return out

    def legs(self, vec: dict, nlegs: int) -> dict:
        if nlegs == 0:
            raise ValueError("need at least one leg")
        out: dict = {}
        for i, c in vec.items():
            for t, v in self.legs_basis(i, nlegs).items():
                w = out.get(t)
                w = c * v if w is None else w + c * v
                if self.backend.is_zero(w):
                    out.pop(t, None)
                else:
                    out[t] = w
        return out

    def __repr__(self):
        return f"KacAlgebra({self.name!r}, dim={self.dim}, backend={self.backend.kind})"


# Pair-keyed rows for comultiplication tensors.
def _row_pairs(self: SparseTensor3, i: int) -> dict:
    cache = getattr(self, "_pair_cache", None)
    if cache is None:
        cache = {}
        self._pair_cache = cache
    out = cache.get(i)
    if out is None:
        out = {}
        d2 = self.dims[1]
        for (a, j), row in self._by_ij.items():
            if a == i:
                for k, v in row.items():
                    out[(j, k)] = v
        cache[i] = out
    return out


SparseTensor3.row_pairs = _row_pairs


def sweedler_delta_k(H: KacAlgebra, vec: dict, k: int) -> dict:
    """Iterated coproduct Delta_k (k = 0 is the identity), keyed by tuples."""
    return H.legs(vec, k + 1)


def verify_kac_axioms(H: KacAlgebra, check_integrals: bool = True) -> AxiomReport:
    """Exhaustive structural verification of the Kac axioms."""
    b = H.backend
    rep = AxiomReport(subject=H.name)
    dim = H.dim

    def resid(diff_iter):
        worst = 0.0
        ok = True
        for v in diff_iter:
            r = b.residual(v)
            if r:
                ok = False
                worst = max(worst, r)
        return ok, worst

    def vec_diffs(a: dict, c: dict):
        keys = set(a) | set(c)
        for k in keys:
            yield a.get(k, b.zero) - c.get(k, b.zero)

    # associativity and unit laws
    worst, ok = 0.0, True
    for i in range(dim):
        for j in range(dim):
            rij = H.mult.row(i, j)
            for k in range(dim):
                left: dict = {}
                for r, c in rij.items():
                    vadd_into(left, H.mult.row(r, k), c, b)
                right: dict = {}
                for r, c in H.mult.row(j, k).items():
                    vadd_into(right, H.mult.row(i, r), c, b)
                o, w = resid(vec_diffs(left, right))
                ok, worst = ok and o, max(worst, w)
    rep.record("associativity", ok, worst)

    ok, worst = True, 0.0
    for i in range(dim):
        e = {i: b.one}
        o1, w1 = resid(vec_diffs(H.product(H.one(), e), e))
        o2, w2 = resid(vec_diffs(H.product(e, H.one()), e))
        ok, worst = ok and o1 and o2, max(worst, w1, w2)
    rep.record("unit", ok, worst)

    # coassociativity and counit laws
    ok, worst = True, 0.0
    for i in range(dim):
        left: dict = {}
        for (a, c2), v in H.comult_row(i).items():
            for (x, y), w in H.comult_row(a).items():
                key = (x, y, c2)
                left[key] = left.get(key, b.zero) + v * w
        right: dict = {}
        for (a, c2), v in H.comult_row(i).items():
            for (x, y), w in H.comult_row(c2).items():
                key = (a, x, y)
                right[key] = right.get(key, b.zero) + v * w
        o, w = resid(vec_diffs(left, right))
        ok, worst = ok and o, max(worst, w)
    rep.record("coassociativity", ok, worst)

    ok, worst = True, 0.0
    for i in range(dim):
        lvec: dict = {}
        rvec: dict = {}
        for (a, c2), v in H.comult_row(i).items():
            lvec[c2] = lvec.get(c2, b.zero) + v * H.counit.get(a, b.zero)
            rvec[a] = rvec.get(a, b.zero) + v * H.counit.get(c2, b.zero)
        e = {i: b.one}
        o1, w1 = resid(vec_diffs(lvec, e))
        o2, w2 = resid(vec_diffs(rvec, e))
        ok, worst = ok and o1 and o2, max(worst, w1, w2)
    rep.record("counit", ok, worst)

    # Delta and counit are algebra maps
    ok, worst = True, 0.0
    for i in range(dim):
        for j in range(dim):
            lhs = H.coproduct(H.mult.row(i, j))
            rhs: dict = {}
            for (a1, a2), v in H.comult_row(i).items():
                for (b1, b2), w in H.comult_row(j).items():
                    c = v * w
                    for x, cx in H.mult.row(a1, b1).items():
                        for y, cy in H.mult.row(a2, b2).items():
                            key = (x, y)
                            rhs[key] = rhs.get(key, b.zero) + c * cx * cy
            o, w = resid(vec_diffs(lhs, rhs))
            ok, worst = ok and o, max(worst, w)
    o, w = resid(vec_diffs(H.coproduct(H.one()),
                           {(i, j): u * v for i, u in H.one().items()
                            for j, v in H.one().items()}))
    ok, worst = ok and o, max(worst, w)
    rep.record("comultiplication homomorphism", ok, worst)

    ok, worst = True, 0.0
    for i in range(dim):
        for j in range(dim):
            lhs = H.counit_of(H.mult.row(i, j))
            rhs = H.counit.get(i, b.zero) * H.counit.get(j, b.zero)
            o, w = resid([lhs - rhs])
            ok, worst = ok and o, max(worst, w)
    o, w = resid([H.counit_of(H.one()) - b.one])
    ok, worst = ok and o, max(worst, w)
    rep.record("counit homomorphism", ok, worst)

    # antipode axioms
    ok_l = ok_r = True
    worst_l = worst_r = 0.0
    for i in range(dim):
        target = {k: H.counit.get(i, b.zero) * v for k, v in H.one().items()}
        left: dict = {}
        right: dict = {}
        for (a, c2), v in H.comult_row(i).items():
            sa = H.antipode.get(a, {})
            for s, cs in sa.items():
                vadd_into(left, H.mult.row(s, c2), v * cs, b)
            sc = H.antipode.get(c2, {})
            for s, cs in sc.items():
                vadd_into(right, H.mult.row(a, s), v * cs, b)
        o, w = resid(vec_diffs(left, target))
        ok_l, worst_l = ok_l and o, max(worst_l, w)
        o, w = resid(vec_diffs(right, target))
        ok_r, worst_r = ok_r and o, max(worst_r, w)
    rep.record("antipode left", ok_l, worst_l)
    rep.record("antipode right", ok_r, worst_r)

    ok, worst = True, 0.0
    for i in range(dim):
        ss = H.antipode_vec(H.antipode.get(i, {}))
        o, w = resid(vec_diffs(ss, {i: b.one}))
        ok, worst = ok and o, max(worst, w)
    rep.record("antipode involutive", ok, worst)

    # star structure
    ok, worst = True, 0.0
    for i in range(dim):
        o, w = resid(vec_diffs(H.star_vec(H.star[i]), {i: b.one}))
        ok, worst = ok and o, max(worst, w)
    rep.record("star involutive", ok, worst)

    ok, worst = True, 0.0
    for i in range(dim):
        for j in range(dim):
            lhs = H.star_vec(H.mult.row(i, j))
            rhs = H.product(H.star[j], H.star[i])
            o, w = resid(vec_diffs(lhs, rhs))
            ok, worst = ok and o, max(worst, w)
    rep.record("star antiautomorphism", ok, worst)

    ok, worst = True, 0.0
    for i in range(dim):
        lhs = H.coproduct(H.star[i])
        rhs: dict = {}
        for (a, c2), v in H.comult_row(i).items():
            cv = b.conj(v)
            for x, cx in H.star[a].items():
                for y, cy in H.star[c2].items():
                    key = (x, y)
                    rhs[key] = rhs.get(key, b.zero) + cv * cx * cy
        o, w = resid(vec_diffs(lhs, rhs))
        ok, worst = ok and o, max(worst, w)
    rep.record("star comultiplication", ok, worst)

    ok, worst = True, 0.0
    for i in range(dim):
        lhs = H.star_vec(H.antipode_vec(H.star_vec(H.antipode.get(i, {}))))
        o, w = resid(vec_diffs(lhs, {i: b.one}))
        ok, worst = ok and o, max(worst, w)
    rep.record("star-antipode compatibility", ok, worst)

    if check_integrals and H.haar is not None:
        h = H.haar
        ok, worst = True, 0.0
        for i in range(dim):
            e = {i: b.one}
            target = {k: H.counit.get(i, b.zero) * v for k, v in h.items()}
            o1, w1 = resid(vec_diffs(H.product(e, h), target))
            o2, w2 = resid(vec_diffs(H.product(h, e), target))
            ok, worst = ok and o1 and o2, max(worst, w1, w2)
        rep.record("integral two-sided", ok, worst)
        o, w = resid(vec_diffs(H.product(h, h), h))
        rep.record("integral idempotent", o, w)
        o, w = resid(vec_diffs(H.star_vec(h), h))
        rep.record("integral self-adjoint", o, w)
        Hd = dual(H)
        phi = H.phi
        ok, worst = True, 0.0
        for i in range(dim):
            e = {i: b.one}
            target = {k: Hd.counit.get(i, b.zero) * v for k, v in phi.items()}
            o1, w1 = resid(vec_diffs(Hd.product(e, phi), target))
            o2, w2 = resid(vec_diffs(Hd.product(phi, e), target))
            ok, worst = ok and o1 and o2, max(worst, w1, w2)
        rep.record("dual integral two-sided", ok, worst)
        o, w = resid(vec_diffs(Hd.product(phi, phi), phi))
        rep.record("dual integral idempotent", o, w)
        val = H.pair(phi, h) - b.scalar(1) / b.scalar(dim)
        rep.record("phi(h) = 1/dim", b.is_zero(val), b.residual(val))
    return rep


def dual(H: KacAlgebra) -> KacAlgebra:
    """The dual Kac algebra on the dual basis, index order preserved."""
    if H._dual is not None:
        return H._dual
    b = H.backend
    dim = H.dim
    mult = SparseTensor3((dim, dim, dim))
    for k in range(dim):
        for (i, j), v in H.comult_row(k).items():
            mult.add(i, j, k, v)
    comult = SparseTensor3((dim, dim, dim))
    for i in range(dim):
        for j in range(dim):
            for k, v in H.mult.row(i, j).items():
                comult.add(k, i, j, v)
    unit = dict(H.counit)
    counit = dict(H.unit)
    antipode = {}
    for i in range(dim):
        col = {}
        for j in range(dim):
            v = H.antipode.get(j, {}).get(i)
            if v is not None:
                col[j] = v
        antipode[i] = col
    # star on the dual: f* = conj . f . S . *
    comp: dict[int, dict] = {}
    for j in range(dim):
        comp[j] = apply_matrix(H.antipode, H.star[j], b)
    star = {}
    for i in range(dim):
        col = {}
        for j in range(dim):
            v = comp[j].get(i)
            if v is not None:
                c = b.conj(v)
                if not b.is_zero(c):
                    col[j] = c
        star[i] = col
    Hd = KacAlgebra(
        name=H.name + "*", dim=dim, backend=b, mult=mult, unit=unit,
        comult=comult, counit=counit, antipode=antipode, star=star,
        generators=None,
        basis_labels=[lb + "^" for lb in H.basis_labels])
    Hd.delta = H.delta
    if H.phi is not None:
        Hd.haar = dict(H.phi)
    if H.haar is not None:
        Hd.phi = dict(H.haar)
    Hd._dual = H
    H._dual = Hd
    return Hd


def find_integrals(H: KacAlgebra) -> tuple[dict, dict]:
    """Solve the integral equations; normalise both integrals idempotent."""
    h = _solve_integral(H)
    Hd = dual(H)
    phi = _solve_integral(Hd)
    H.haar = h
    H.phi = phi
    Hd.haar = dict(phi)
    Hd.phi = dict(h)
    b = H.backend
    val = H.pair(phi, h) - b.scalar(1) / b.scalar(H.dim)
    if not b.is_zero(val):
        raise IntegralNotFound(f"phi(h) != 1/dim for {H.name}")
    return h, phi


def _solve_integral(H: KacAlgebra) -> dict:
    b = H.backend
    dim = H.dim
    rows: list[dict] = []
    for i in range(dim):
        eps_i = H.counit.get(i, b.zero)
        block: dict[int, dict] = {}
        for j in range(dim):
            col = dict(H.mult.row(i, j))
            w = col.get(j, b.zero) - eps_i
            if b.is_zero(w):
                col.pop(j, None)
            else:
                col[j] = w
            for k, v in col.items():
                block.setdefault(k, {})[j] = v
        rows.extend(r for r in block.values() if r)
    basis = null_space_rows(rows, dim, b)
    if len(basis) != 1:
        raise IntegralNotFound(
            f"integral space of {H.name} has dimension {len(basis)}")
    v = basis[0]
    sq = H.product(v, v)
    # sq must be a scalar multiple of v
    ref_idx = next(iter(v))
    gamma = sq.get(ref_idx, b.zero) / v[ref_idx]
    for k in set(v) | set(sq):
        diff = sq.get(k, b.zero) - gamma * v.get(k, b.zero)
        if not b.is_zero(diff):
            raise IntegralNotFound(f"integral of {H.name} is not normalisable")
    if b.is_zero(gamma):
        raise IntegralNotFound(f"integral of {H.name} squares to zero")
    inv = b.inv(gamma)
    return {k: inv * c for k, c in v.items()}


def fourier_matrix(H: KacAlgebra) -> tuple[dict[int, dict], dict[int, dict]]:
    """Fourier transform H -> H* as a column map, and its inverse."""
    b = H.backend
    if H.phi is None:
        find_integrals(H)
    Hd = dual(H)
    cop = Hd.coproduct(H.phi)
    cols: dict[int, dict] = {i: {} for i in range(H.dim)}
    for (i, k), v in cop.items():
        w = H.delta * v
        if not b.is_zero(w):
            cols[i][k] = w
    inv = _invert_colmap(cols, H.dim, b)
    return cols, inv


def _invert_colmap(cols: dict[int, dict], n: int, backend) -> dict[int, dict]:
    from .backend import solve_linear
    rows: list[dict] = [{} for _ in range(n)]
    for j, col in cols.items():
        for i, v in col.items():
            rows[i][j] = v
    out: dict[int, dict] = {}
    for k in range(n):
        rhs = [backend.one if i == k else backend.zero for i in range(n)]
        sol, null = solve_linear(rows, rhs, n, backend)
        if null:
            raise ValueError("column map not invertible")
        out[k] = sol
    return out


# --------------------------------------------------------------------------
# example algebras
# --------------------------------------------------------------------------

def _validate_group_table(table: list[list[int]]) -> tuple[int, list[int]]:
    n = len(table)
    for row in table:
        if len(row) != n or any(not (0 <= x < n) for x in row):
            raise InvalidGroupTable("table is not n x n over range(n)")
    for i in range(n):
        if sorted(table[i]) != list(range(n)) or sorted(r[i] for r in table) != list(range(n)):
            raise InvalidGroupTable("table rows/columns are not permutations")
    e = None
    for i in range(n):
        if all(table[i][j] == j for j in range(n)) and all(table[j][i] == j for j in range(n)):
            e = i
            break
    if e is None:
        raise InvalidGroupTable("no identity element")
    inv = [None] * n
    for i in range(n):
        for j in range(n):
            if table[i][j] == e and table[j][i] == e:
                inv[i] = j
                break
        if inv[i] is None:
            raise InvalidGroupTable(f"element {i} has no inverse")
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if table[table[i][j]][k] != table[i][table[j][k]]:
                    raise InvalidGroupTable("table is not associative")
    if e != 0:
        raise InvalidGroupTable("identity must be index 0")
    return e, inv


def _group_generators(table: list[list[int]]) -> list[int]:
    n = len(table)
    gens: list[int] = []
    closure = {0}
    for g in range(1, n):
        if g in closure:
            continue
        gens.append(g)
        frontier = set(closure) | {g}
        while True:
            new = {table[a][bb] for a in frontier for bb in frontier} | frontier
            if new == frontier:
                break
            frontier = new
        closure = frontier
        if len(closure) == n:
            break
    return gens


def required_conductor(dim: int) -> int:
    k, m = 1, dim
    d = 2
    while d * d <= m:
        while m % (d * d) == 0:
            m //= d * d
            k *= d
        d += 1
    return 1 if m == 1 else 4 * dim


def group_algebra(table: list[list[int]], backend=None, name: str = "G",
                  labels: list[str] | None = None) -> KacAlgebra:
    """Group algebra C[G] from a Cayley table (identity at index 0)."""
    _, inv = _validate_group_table(table)
    n = len(table)
    if backend is None:
        backend = ExactBackend(required_conductor(n))
    one = backend.one
    mult = SparseTensor3((n, n, n))
    comult = SparseTensor3((n, n, n))
    for i in range(n):
        comult.add(i, i, i, one)
        for j in range(n):
            mult.add(i, j, table[i][j], one)
    H = KacAlgebra(
        name=name, dim=n, backend=backend, mult=mult,
        unit={0: one}, comult=comult,
        counit={i: one for i in range(n)},
        antipode={i: {inv[i]: one} for i in range(n)},
        star={i: {inv[i]: one} for i in range(n)},
        generators=_group_generators(table),
        basis_labels=labels)
    find_integrals(H)
    return H


def function_algebra(table: list[list[int]], backend=None, name: str = "G") -> KacAlgebra:
    """Pointwise function algebra on a finite group (dual of C[G])."""
    H = group_algebra(table, backend=backend, name=name)
    return dual(H)


def cyclic_table(k: int) -> list[list[int]]:
    return [[(i + j) % k for j in range(k)] for i in range(k)]


def klein_table() -> list[list[int]]:
    return [[i ^ j for j in range(4)] for i in range(4)]


def symmetric_table(n: int = 3) -> list[list[int]]:
    perms = sorted(itertools.permutations(range(n)))
    idx = {p: i for i, p in enumerate(perms)}
    # ensure identity sits at index 0 (sorted order already does this)
    table = []
    for p in perms:
        row = []
        for q in perms:
            comp = tuple(p[q[x]] for x in range(n))
            row.append(idx[comp])
        table.append(row)
    return table


_BUILTIN_TABLES = {
    "Z2": lambda: cyclic_table(2),
    "Z3": lambda: cyclic_table(3),
    "Z4": lambda: cyclic_table(4),
    "Z2xZ2": klein_table,
    "S3": lambda: symmetric_table(3),
}


def builtin_algebra(name: str, backend=None) -> KacAlgebra:
    """Named example algebras: group:NAME or fn:NAME over the builtin groups."""
    kind, _, gname = name.partition(":")
    if not gname:
        kind, gname = "group", kind
    if gname not in _BUILTIN_TABLES:
        raise InvalidGroupTable(f"unknown builtin group {gname!r}")
    table = _BUILTIN_TABLES[gname]()
    if kind == "group":
        return group_algebra(table, backend=backend, name=gname)
    if kind == "fn":
        return function_algebra(table, backend=backend, name=gname)
    raise InvalidGroupTable(f"unknown algebra kind {kind!r}")


def to_float(H: KacAlgebra, tol: float = 1e-9) -> KacAlgebra:
    """Re-express an exact algebra over the float backend."""
    fb = FloatBackend(tol)

    def conv_vec(v):
        return {k: fb.scalar(x) for k, x in v.items()}

    def conv_tensor(t: SparseTensor3) -> SparseTensor3:
        out = SparseTensor3(t.dims)
        for i, j, k, v in t.entries():
            out.add(i, j, k, fb.scalar(v))
        return out

    Hf = KacAlgebra(
        name=H.name, dim=H.dim, backend=fb,
        mult=conv_tensor(H.mult), unit=conv_vec(H.unit),
        comult=conv_tensor(H.comult), counit=conv_vec(H.counit),
        antipode={i: conv_vec(c) for i, c in H.antipode.items()},
        star={i: conv_vec(c) for i, c in H.star.items()},
        generators=H.generators, basis_labels=H.basis_labels)
    if H.haar is not None:
        Hf.haar = conv_vec(H.haar)
    if H.phi is not None:
        Hf.phi = conv_vec(H.phi)
    return Hf


# --------------------------------------------------------------------------
# structure-constant files
# --------------------------------------------------------------------------

_FORMAT_LINE = "format: kacalgebra/1"


def save_algebra(H: KacAlgebra, path: str) -> None:
    if not isinstance(H.backend, ExactBackend):
        raise ValueError("only exact algebras can be saved")
    lines = [_FORMAT_LINE, f"name: {H.name}", f"dim: {H.dim}",
             f"conductor: {H.backend.conductor}",
             "basis_labels: " + " ".join(H.basis_labels)]

    def emit_vec(tag, vec):
        for i in sorted(vec):
            lines.append(f"{tag}: {i} {format_scalar(vec[i])}")

    emit_vec("unit", H.unit)
    emit_vec("counit", H.counit)
    for i, j, k, v in sorted(H.mult.entries(), key=lambda t: t[:3]):
        lines.append(f"mult: {i} {j} {k} {format_scalar(v)}")
    for i, j, k, v in sorted(H.comult.entries(), key=lambda t: t[:3]):
        lines.append(f"comult: {i} {j} {k} {format_scalar(v)}")
    for i in sorted(H.antipode):
        for j in sorted(H.antipode[i]):
            lines.append(f"antipode: {i} {j} {format_scalar(H.antipode[i][j])}")
    for i in sorted(H.star):
        for j in sorted(H.star[i]):
            lines.append(f"star: {i} {j} {format_scalar(H.star[i][j])}")
    if H.haar:
        emit_vec("haar", H.haar)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_algebra(path: str, backend=None) -> KacAlgebra:
    """Load a structure-constant file, verifying every Kac axiom."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0].strip() != _FORMAT_LINE:
        raise AxiomViolation("unrecognised structure-constant file header")
    fields: dict[str, list[str]] = {}
    for ln in lines[1:]:
        tag, _, rest = ln.partition(":")
        fields.setdefault(tag.strip(), []).append(rest.strip())

    def single(tag):
        vals = fields.get(tag)
        if not vals or len(vals) != 1:
            raise AxiomViolation(f"file needs exactly one {tag!r} line")
        return vals[0]

    name = single("name")
    dim = int(single("dim"))
    conductor = int(single("conductor"))
    if backend is None:
        backend = ExactBackend(math.lcm(conductor, required_conductor(dim)))

    def scal(text):
        s = parse_scalar(text, conductor)
        return backend.scalar(s)

    def vec_of(tag):
        out: dict = {}
        for entry in fields.get(tag, []):
            parts = entry.split(None, 1)
            if len(parts) != 2:
                raise AxiomViolation(f"malformed {tag} line: {entry!r}")
            i = int(parts[0])
            out[i] = scal(parts[1])
        return out

    def tensor_of(tag):
        t = SparseTensor3((dim, dim, dim))
        for entry in fields.get(tag, []):
            parts = entry.split(None, 3)
            if len(parts) != 4:
                raise AxiomViolation(f"malformed {tag} line: {entry!r}")
            t.add(int(parts[0]), int(parts[1]), int(parts[2]), scal(parts[3]))
        return t

    def colmap_of(tag):
        cols: dict[int, dict] = {i: {} for i in range(dim)}
        for entry in fields.get(tag, []):
            parts = entry.split(None, 2)
            if len(parts) != 3:
                raise AxiomViolation(f"malformed {tag} line: {entry!r}")
            cols[int(parts[0])][int(parts[1])] = scal(parts[2])
        return cols

    labels = single("basis_labels").split()
    if len(labels) != dim:
        raise AxiomViolation("basis_labels length mismatch")
    H = KacAlgebra(
        name=name, dim=dim, backend=backend,
        mult=tensor_of("mult"), unit=vec_of("unit"),
        comult=tensor_of("comult"), counit=vec_of("counit"),
        antipode=colmap_of("antipode"), star=colmap_of("star"),
        basis_labels=labels)
    report = verify_kac_axioms(H, check_integrals=False)
    if not report.ok:
        raise AxiomViolation(
            f"structure constants violate axioms: {', '.join(report.failures())}")
    find_integrals(H)
    if "haar" in fields:
        given = vec_of("haar")
        diff = dict(given)
        vadd_into(diff, H.haar, -backend.one, backend)
        if any(not backend.is_zero(v) for v in diff.values()):
            raise AxiomViolation("declared haar element differs from solved integral")
    full = verify_kac_axioms(H)
    if not full.ok:
        raise AxiomViolation(
            f"integral axioms fail: {', '.join(full.failures())}")
    return H
