"""Finite-dimensional algebra utilities: structure tensors, Bratteli data.

An "algebra" here is any object with attributes ``dim`` and ``backend`` and
methods ``mult_row(i, j) -> dict`` (sparse product of basis elements) and
``one() -> dict`` (unit coordinates).  Chains, Kac algebras, operator
algebras and subalgebra views all satisfy this informal protocol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import (
    ExactBackend,
    FloatBackend,
    null_space_rows,
    vadd_into,
    vec_to_dense,
    dense_to_vec,
)
from .errors import NotSemisimple, NotUnitalSubalgebra


class SparseTensor3:
    """Order-3 structure tensor with sparse (i, j, k) -> scalar entries."""

    def __init__(self, dims: tuple[int, int, int]):
        self.dims = dims
        self._by_ij: dict[tuple[int, int], dict] = {}

    def add(self, i: int, j: int, k: int, scalar) -> None:
        d1, d2, d3 = self.dims
        if not (0 <= i < d1 and 0 <= j < d2 and 0 <= k < d3):
            raise IndexError(f"tensor index {(i, j, k)} out of range {self.dims}")
        row = self._by_ij.setdefault((i, j), {})
        if k in row:
            raise ValueError(f"duplicate tensor key {(i, j, k)}")
        row[k] = scalar

    def set_row(self, i: int, j: int, row: dict) -> None:
        for k in row:
            if not 0 <= k < self.dims[2]:
                raise IndexError(f"tensor index {(i, j, k)} out of range")
        self._by_ij[(i, j)] = dict(row)

    def row(self, i: int, j: int) -> dict:
        return self._by_ij.get((i, j), {})

    def entries(self):
        for (i, j), row in self._by_ij.items():
            for k, v in row.items():
                yield i, j, k, v

    def nnz(self) -> int:
        return sum(len(r) for r in self._by_ij.values())


def apply_matrix(rows: dict[int, dict], vec: dict, backend) -> dict:
    """rows maps input index -> sparse output column; linear application."""
    out: dict = {}
    for j, c in vec.items():
        col = rows.get(j)
        if col:
            vadd_into(out, col, c, backend)
    return out


def algebra_product(alg, a: dict, b: dict) -> dict:
    out: dict = {}
    backend = alg.backend
    for i, ca in a.items():
        for j, cb in b.items():
            c = ca * cb
            if backend.is_zero(c):
                continue
            vadd_into(out, alg.mult_row(i, j), c, backend)
    return out


def regular_trace_weights(alg) -> list:
    """tr of left multiplication by each basis element (cached on the algebra)."""
    cache = getattr(alg, "_regular_trace_weights", None)
    if cache is not None:
        return cache
    weights = []
    for j in range(alg.dim):
        tot = alg.backend.zero
        for i in range(alg.dim):
            v = alg.mult_row(j, i).get(i)
            if v is not None:
                tot = tot + v
        weights.append(tot)
    alg._regular_trace_weights = weights
    return weights


def regular_trace(alg, vec: dict):
    """Trace of left multiplication by the element with coordinates vec."""
    shortcut = getattr(alg, "left_mult_trace", None)
    if shortcut is not None:
        return shortcut(vec)
    weights = regular_trace_weights(alg)
    tot = alg.backend.zero
    for j, c in vec.items():
        tot = tot + c * weights[j]
    return tot


class OperatorAlgebra:
    """Full matrix algebra M_k in the basis of matrix units, row-major."""

    def __init__(self, k: int, backend):
        self.k = k
        self.dim = k * k
        self.backend = backend

    def mult_row(self, i: int, j: int) -> dict:
        k = self.k
        r1, c1 = divmod(i, k)
        r2, c2 = divmod(j, k)
        if c1 != r2:
            return {}
        return {r1 * k + c2: self.backend.one}

    def one(self) -> dict:
        return {i * self.k + i: self.backend.one for i in range(self.k)}

    def star_vec(self, vec: dict) -> dict:
        k = self.k
        out = {}
        for idx, v in vec.items():
            r, c = divmod(idx, k)
            out[c * k + r] = self.backend.conj(v)
        return out

    def from_matrix(self, mat) -> dict:
        out = {}
        for r in range(self.k):
            for c in range(self.k):
                v = mat[r][c] if not isinstance(mat, np.ndarray) else mat[r, c]
                if not self.backend.is_zero(v):
                    out[r * self.k + c] = v
        return out

    def generator_indices(self):
        return list(range(self.dim))


class Expresser:
    """Express vectors in the coordinates of a fixed spanning list."""

    def __init__(self, vectors: list[dict], ncols: int, backend):
        self.vectors = vectors
        self.ncols = ncols
        self.backend = backend
        if isinstance(backend, ExactBackend):
            # RREF rows augmented with provenance over the input vectors
            self._rows: dict[int, tuple[dict, dict]] = {}
            for idx, v in enumerate(vectors):
                main, aug = self._reduce(v, {idx: backend.one})
                if not main:
                    raise ValueError("expresser given dependent vectors")
                piv = min(main)
                inv = backend.inv(main[piv])
                main = {c: inv * x for c, x in main.items()}
                aug = {c: inv * x for c, x in aug.items()}
                for pc, (pm, pa) in self._rows.items():
                    if piv in pm:
                        f = -pm[piv]
                        vadd_into(pm, main, f, backend)
                        vadd_into(pa, aug, f, backend)
                self._rows[piv] = (main, aug)
        else:
            from .backend import float_rref
            self._mat = np.vstack(
                [vec_to_dense(v, ncols) for v in vectors]) if vectors else np.zeros((0, ncols))
            reduced, pivots, trans = float_rref(self._mat, backend.tol)
            if len(pivots) != len(vectors):
                raise ValueError("expresser given dependent vectors")
            self._reduced = reduced
            self._pivots = pivots
            self._trans = trans

    def _reduce(self, vec: dict, aug: dict):
        main = dict(vec)
        aug = dict(aug)
        for c in list(main):
            if c in main and c in self._rows:
                pm, pa = self._rows[c]
                f = -main[c]
                vadd_into(main, pm, f, self.backend)
                vadd_into(aug, pa, f, self.backend)
        return main, aug

    def express(self, vec: dict, strict: bool = True) -> dict | None:
        """Coefficients over the spanning list, or None if vec is outside."""
        if isinstance(self.backend, ExactBackend):
            main, aug = self._reduce(vec, {})
            if main:
                if strict:
                    raise ValueError("vector outside subspace")
                return None
            return {k: -v for k, v in aug.items()}
        arr = vec_to_dense(vec, self.ncols)
        # coefficients over the reduced rows are read off the pivot columns
        c_red = arr[self._pivots]
        resid = arr - c_red @ self._reduced
        if np.linalg.norm(resid) > self.backend.tol * max(1.0, np.linalg.norm(arr)):
            if strict:
                raise ValueError("vector outside subspace")
            return None
        coeff = self._trans.T @ c_red
        return dense_to_vec(coeff, self.backend)

    def express_matrix(self, mat: np.ndarray, check: bool = True) -> np.ndarray:
        """Batched float expression: rows of mat -> rows of coefficients."""
        if isinstance(self.backend, ExactBackend):
            raise ValueError("express_matrix is float-only")
        c_red = mat[:, self._pivots]
        if check:
            resid = mat - c_red @ self._reduced
            scale = max(1.0, float(np.abs(mat).max(initial=0.0)))
            if np.abs(resid).max(initial=0.0) > 1e3 * self.backend.tol * scale:
                raise ValueError("matrix rows outside subspace")
        return c_red @ self._trans


class SubalgebraView:
    """A subspace of an ambient algebra, viewed as an algebra in its own basis."""

    def __init__(self, ambient, vectors: list[dict], check_closed: bool = True):
        self.ambient = ambient
        self.vectors = vectors
        self.dim = len(vectors)
        self.backend = ambient.backend
        self._express = Expresser(vectors, ambient.dim, self.backend)
        self._mult_cache: dict[tuple[int, int], dict] = {}
        self._check_closed = check_closed

    def lift(self, vec: dict) -> dict:
        out: dict = {}
        for i, c in vec.items():
            vadd_into(out, self.vectors[i], c, self.backend)
        return out

    def express(self, ambient_vec: dict, strict: bool = True) -> dict | None:
        return self._express.express(ambient_vec, strict=strict)

    def mult_row(self, i: int, j: int) -> dict:
        key = (i, j)
        row = self._mult_cache.get(key)
        if row is None:
            prod = algebra_product(self.ambient, self.vectors[i], self.vectors[j])
            coeffs = self._express.express(prod, strict=False)
            if coeffs is None:
                raise NotUnitalSubalgebra("subspace not closed under multiplication")
            row = coeffs
            self._mult_cache[key] = row
        return row

    def one(self) -> dict:
        coeffs = self._express.express(self.ambient.one(), strict=False)
        if coeffs is None:
            raise NotUnitalSubalgebra("ambient unit not in subspace")
        return coeffs

    def star_vec(self, vec: dict) -> dict:
        starred = self.ambient.star_vec(self.lift(vec))
        coeffs = self._express.express(starred, strict=False)
        if coeffs is None:
            raise NotUnitalSubalgebra("subspace not star-closed")
        return coeffs

    def trace_of(self, vec: dict):
        return self.ambient.trace_of(self.lift(vec))


@dataclass
class BratteliData:
    center_dim: int
    block_sizes: list[int] | None
    idempotents: list[dict] | None


def null_space(rows: list[dict], ncols: int, backend) -> list[dict]:
    """Basis of the kernel of the sparse matrix given row-wise."""
    return null_space_rows(rows, ncols, backend)


def commutator_rows(alg, constraint_vecs: list[dict]) -> list[dict]:
    """Rows of the stacked maps x -> c x - x c over the given constraints."""
    rows: list[dict] = []
    backend = alg.backend
    for c in constraint_vecs:
        block: dict[int, dict] = {}
        for j in range(alg.dim):
            left: dict = {}
            right: dict = {}
            for i, ci in c.items():
                vadd_into(left, alg.mult_row(i, j), ci, backend)
                vadd_into(right, alg.mult_row(j, i), ci, backend)
            for k, v in left.items():
                block.setdefault(k, {})[j] = v
            for k, v in right.items():
                row = block.setdefault(k, {})
                w = row.get(j)
                w = -v if w is None else w - v
                if backend.is_zero(w):
                    row.pop(j, None)
                else:
                    row[j] = w
        rows.extend(r for r in block.values() if r)
    return rows


def center_basis(alg, generators: list[dict] | None = None,
                 verify: bool = True) -> list[dict]:
    """Basis of the centre, solved against a generating set of the algebra.

    When a proper generating set is used, a residual pass re-checks the
    solution against a full set of verification vectors (defaulting to the
    whole basis, or whatever the algebra advertises as sufficient).
    """
    backend = alg.backend
    shortcut = generators is None
    if generators is None:
        gen_vecs = getattr(alg, "generator_vectors", None)
        if gen_vecs is not None:
            generators = gen_vecs()
        else:
            gen_idx = getattr(alg, "generator_indices",
                              lambda: list(range(alg.dim)))()
            generators = [{g: backend.one} for g in gen_idx]
            shortcut = len(gen_idx) < alg.dim
    rows = commutator_rows(alg, generators)
    basis = null_space_rows(rows, alg.dim, backend)
    if verify and shortcut:
        verif = getattr(alg, "verification_vectors", None)
        checks = verif() if verif is not None else [
            {i: backend.one} for i in range(alg.dim)]
        for z in basis:
            for c in checks:
                diff = algebra_product(alg, c, z)
                vadd_into(diff, algebra_product(alg, z, c), -backend.one, backend)
                if any(not backend.is_zero(v) for v in diff.values()):
                    raise ArithmeticError(
                        "generator shortcut missed a centre constraint")
    return basis


def check_semisimple(alg) -> None:
    """Raise NotSemisimple if the regular trace form is degenerate."""
    backend = alg.backend
    weights = regular_trace_weights(alg)
    rows = []
    for i in range(alg.dim):
        row = {}
        for j in range(alg.dim):
            tot = backend.zero
            for k, v in alg.mult_row(i, j).items():
                tot = tot + v * weights[k]
            if not backend.is_zero(tot):
                row[j] = tot
        rows.append(row)
    from .backend import rank_rows
    if rank_rows(rows, alg.dim, backend) < alg.dim:
        raise NotSemisimple("regular trace form is degenerate")


def block_decompose(alg, seed: int = 0, check: bool = True,
                    generators: list[dict] | None = None) -> BratteliData:
    """Centre dimension, block sizes and minimal central idempotents.

    On the exact backend only the centre dimension is computed (block
    extraction is a spectral task).  Block extraction uses seeded random
    central elements so reports are reproducible.
    """
    backend = alg.backend
    centre = center_basis(alg, generators=generators)
    cdim = len(centre)
    if isinstance(backend, ExactBackend):
        return BratteliData(center_dim=cdim, block_sizes=None, idempotents=None)
    if check:
        check_semisimple(alg)
    expr = Expresser(centre, alg.dim, backend)
    rng_seed = seed
    for attempt in range(16):
        rng = np.random.default_rng(rng_seed + attempt)
        coeffs = rng.normal(size=cdim)
        z: dict = {}
        for c, vec in zip(coeffs, centre):
            vadd_into(z, vec, complex(c), backend)
        # multiplication-by-z on the centre
        mat = np.zeros((cdim, cdim), dtype=complex)
        ok = True
        for j, vec in enumerate(centre):
            prod = algebra_product(alg, z, vec)
            col = expr.express(prod, strict=False)
            if col is None:
                raise NotSemisimple("centre is not closed under multiplication")
            for i, v in col.items():
                mat[i, j] = v
        evals = np.linalg.eigvals(mat)
        evals = np.sort_complex(evals)
        sep = min((abs(a - b) for a, b in zip(evals, evals[1:])), default=1.0)
        if cdim > 1 and sep < 1e-6:
            continue
        # Lagrange idempotents inside the commutative centre
        idems = []
        for lam in evals:
            p_amb = alg.one()
            for mu in evals:
                if mu == lam:
                    continue
                zmu = dict(z)
                vadd_into(zmu, alg.one(), -mu, backend)
                p_amb = algebra_product(alg, p_amb, zmu)
                p_amb = {k: v / (lam - mu) for k, v in p_amb.items()}
            idems.append(p_amb)
        sizes = []
        for p in idems:
            tr = regular_trace(alg, p)
            b = np.sqrt(max(complex(tr).real, 0.0))
            bi = int(round(b))
            if abs(b - bi) > 1e-6 or bi < 1:
                ok = False
                break
            sizes.append(bi)
        if not ok:
            continue
        if sum(b * b for b in sizes) != alg.dim:
            continue
        order = np.argsort(sizes, kind="stable")
        idems = [idems[int(i)] for i in order]
        sizes = sorted(sizes)
        return BratteliData(center_dim=cdim, block_sizes=sizes, idempotents=idems)
    raise NotSemisimple("block extraction failed to separate centre spectrum")


def inclusion_matrix(sub_vectors: list[dict], amb_alg, seed: int = 0,
                     sub_blocks: BratteliData | None = None,
                     amb_blocks: BratteliData | None = None) -> np.ndarray:
    """Bratteli inclusion matrix of a unital subalgebra inside amb_alg.

    Entry [a, b] is the multiplicity of sub-block a inside ambient block b,
    recovered from regular traces of products of minimal central idempotents.
    """
    backend = amb_alg.backend
    if not isinstance(backend, FloatBackend):
        raise ValueError("inclusion_matrix requires the float backend")
    view = SubalgebraView(amb_alg, sub_vectors)
    if view.express(amb_alg.one(), strict=False) is None:
        raise NotUnitalSubalgebra("ambient unit missing from subalgebra")
    if sub_blocks is None:
        sub_blocks = block_decompose(view, seed=seed)
    if amb_blocks is None:
        amb_blocks = block_decompose(amb_alg, seed=seed)
    a_sizes = sub_blocks.block_sizes
    b_sizes = amb_blocks.block_sizes
    mat = np.zeros((len(a_sizes), len(b_sizes)), dtype=int)
    for ai, p in enumerate(sub_blocks.idempotents):
        p_amb = view.lift(p)
        for bi, q in enumerate(amb_blocks.idempotents):
            prod = algebra_product(amb_alg, p_amb, q)
            tr = regular_trace(amb_alg, prod)
            lam = complex(tr).real / (a_sizes[ai] * b_sizes[bi])
            lam_i = int(round(lam))
            if abs(lam - lam_i) > 1e-6:
                raise NotSemisimple("non-integral inclusion multiplicity")
            mat[ai, bi] = lam_i
    return mat
