"""Scalar backends and sparse linear algebra.

Two backends share one structural code path: vectors are dicts mapping basis
index to a scalar, where a scalar is a :class:`~kachain.cyclo.CycloScalar`
(exact backend) or a Python complex (float backend, equality up to an
absolute tolerance).  Solvers dispatch per backend: sparse Gauss-Jordan over
the cyclotomic field, dense numpy SVD over floats.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .cyclo import CycloScalar, sqrt_integer_in_cyclotomic


class ExactBackend:
    kind = "exact"

    def __init__(self, conductor: int = 1):
        self.conductor = conductor

    def __repr__(self):
        return f"ExactBackend(conductor={self.conductor})"

    def scalar(self, v):
        if isinstance(v, CycloScalar):
            return v if v.conductor == self.conductor else v.embed(
                math.lcm(v.conductor, self.conductor))
        return CycloScalar.rational(Fraction(v), self.conductor)

    @property
    def one(self):
        return CycloScalar.rational(1, self.conductor)

    @property
    def zero(self):
        return CycloScalar(self.conductor)

    def is_zero(self, x) -> bool:
        return x.is_zero() if isinstance(x, CycloScalar) else x == 0

    def eq(self, a, b) -> bool:
        return self.is_zero(a - b)

    def conj(self, x):
        return x.conj()

    def inv(self, x):
        return x.inverse()

    def to_complex(self, x) -> complex:
        return x.to_complex()

    def residual(self, x) -> float:
        if self.is_zero(x):
            return 0.0
        return abs(self.to_complex(x))

    def delta(self, n: int):
        """sqrt(n), embedded in the session field."""
        s = sqrt_integer_in_cyclotomic(n)
        return self.scalar(s)

    def fmt(self, x) -> str:
        return str(x)


class FloatBackend:
    kind = "float"

    def __init__(self, tol: float = 1e-9):
        self.tol = tol

    def __repr__(self):
        return f"FloatBackend(tol={self.tol})"

    def scalar(self, v):
        if isinstance(v, CycloScalar):
            return v.to_complex()
        if isinstance(v, Fraction):
            return complex(v)
        return complex(v)

    one = 1 + 0j
    zero = 0j

    def is_zero(self, x) -> bool:
        return abs(x) <= self.tol

    def eq(self, a, b) -> bool:
        return abs(a - b) <= self.tol

    def conj(self, x):
        return complex(x).conjugate()

    def inv(self, x):
        return 1.0 / x

    def to_complex(self, x) -> complex:
        return complex(x)

    def residual(self, x) -> float:
        return 0.0 if self.is_zero(x) else abs(x)

    def delta(self, n: int):
        return complex(math.sqrt(n))

    def fmt(self, x) -> str:
        x = complex(x)
        if abs(x.imag) <= 1e-12:
            return f"{x.real:.12g}"
        return f"{x.real:.12g}{x.imag:+.12g}j"


Backend = ExactBackend | FloatBackend


# --------------------------------------------------------------------------
# sparse vector helpers
# --------------------------------------------------------------------------

def vadd_into(dst: dict, src: dict, coeff, backend) -> None:
    """dst += coeff * src, pruning zeros."""
    if backend.is_zero(coeff):
        return
    for k, v in src.items():
        w = dst.get(k)
        w = coeff * v if w is None else w + coeff * v
        if backend.is_zero(w):
            dst.pop(k, None)
        else:
            dst[k] = w


def vscale(vec: dict, coeff, backend) -> dict:
    if backend.is_zero(coeff):
        return {}
    return {k: coeff * v for k, v in vec.items()}


def vsub(a: dict, b: dict, backend) -> dict:
    out = dict(a)
    vadd_into(out, b, -backend.one, backend)
    return out


def vdot(a: dict, b: dict, backend):
    """Plain bilinear dot product (no conjugation)."""
    if len(b) < len(a):
        a, b = b, a
    tot = backend.zero
    for k, v in a.items():
        w = b.get(k)
        if w is not None:
            tot = tot + v * w
    return tot


def vconj(a: dict, backend) -> dict:
    return {k: backend.conj(v) for k, v in a.items()}


def vec_is_zero(a: dict, backend) -> bool:
    return all(backend.is_zero(v) for v in a.values())


def tensor_vec(a: dict, b: dict, dim_b: int, backend) -> dict:
    out = {}
    for i, u in a.items():
        for j, v in b.items():
            w = u * v
            if not backend.is_zero(w):
                out[i * dim_b + j] = w
    return out


def rows_to_dense(rows: list[dict], ncols: int) -> np.ndarray:
    mat = np.zeros((len(rows), ncols), dtype=complex)
    for i, row in enumerate(rows):
        for j, v in row.items():
            mat[i, j] = complex(v)
    return mat


def vec_to_dense(vec: dict, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    for j, v in vec.items():
        out[j] = complex(v)
    return out


def dense_to_vec(arr: np.ndarray, backend, tol: float | None = None) -> dict:
    tol = tol if tol is not None else getattr(backend, "tol", 0.0)
    return {int(j): complex(arr[j]) for j in np.flatnonzero(np.abs(arr) > tol)}


# --------------------------------------------------------------------------
# exact sparse Gauss-Jordan
# --------------------------------------------------------------------------

def _sparse_rref(rows: list[dict], backend, sentinel: int | None = None):
    """Full Gauss-Jordan on sparse rows, backend-generic.

    Returns (pivots, inconsistent) where pivots is a sorted list of
    (pivot_col, row_dict) with each row normalized and fully reduced.  If
    `sentinel` is given, that column is never chosen as pivot; a surviving
    row supported only on the sentinel marks an inconsistent system.  The
    exact backend pivots on the smallest column; the float backend pivots on
    the entry of largest magnitude for stability.
    """
    exact = isinstance(backend, ExactBackend)
    work = [dict(r) for r in rows if r]
    pivots: list[tuple[int, dict]] = []
    inconsistent = False
    while work:
        work.sort(key=len)
        row = work.pop(0)
        if not row:
            continue
        cols = [c for c in row if c != sentinel]
        if not cols:
            if any(not backend.is_zero(row[c]) for c in row):
                inconsistent = True
            continue
        if exact:
            col = min(cols)
        else:
            col = max(cols, key=lambda c: abs(row[c]))
            if backend.is_zero(row[col]):
                continue
        inv = backend.inv(row[col])
        row = {c: inv * v for c, v in row.items()}
        for _, prow in pivots:
            if col in prow:
                vadd_into(prow, row, -prow[col], backend)
        nxt = []
        for w in work:
            if col in w:
                vadd_into(w, row, -w[col], backend)
            if w:
                nxt.append(w)
        work = nxt
        pivots.append((col, row))
    pivots.sort(key=lambda t: t[0])
    return pivots, inconsistent


_exact_rref = _sparse_rref


def _rows_density(rows: list[dict], ncols: int) -> float:
    if not rows or not ncols:
        return 0.0
    nnz = sum(len(r) for r in rows)
    return nnz / (len(rows) * ncols)


def float_rref(mat: np.ndarray, tol: float):
    """Numerically thresholded reduced row echelon form.

    Returns (reduced_rows, pivot_columns, transform) with
    transform @ mat == reduced_rows (up to tolerance); rows of the reduced
    matrix carry an identity block on the pivot columns, which keeps bases
    of structured solution spaces sparse.
    """
    m, n = mat.shape
    work = mat.astype(complex).copy()
    trans = np.eye(m, dtype=complex)
    scale = max(np.abs(mat).max() if mat.size else 0.0, 1.0)
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        idx = int(np.argmax(np.abs(work[r:, c]))) + r
        if abs(work[idx, c]) <= tol * scale:
            continue
        if idx != r:
            work[[r, idx]] = work[[idx, r]]
            trans[[r, idx]] = trans[[idx, r]]
        pv = work[r, c]
        work[r] /= pv
        trans[r] /= pv
        col = work[:, c].copy()
        col[r] = 0.0
        mask = np.abs(col) > 0
        if mask.any():
            work[mask] -= np.outer(col[mask], work[r])
            trans[mask] -= np.outer(col[mask], trans[r])
        pivots.append(c)
        r += 1
    work[np.abs(work) <= tol * scale] = 0.0
    return work[: len(pivots)], pivots, trans[: len(pivots)]


def null_space_rows(rows: list[dict], ncols: int, backend) -> list[dict]:
    """Basis of {v : A v = 0} for A given as a list of sparse rows.

    Float-backend bases are RREF-sparsified so that structured solution
    spaces come back sparse rather than as dense orthonormal combinations.
    """
    sparse_ok = isinstance(backend, ExactBackend) or (
        ncols > 64 and _rows_density(rows, ncols) < 0.05)
    if sparse_ok:
        pivots, _ = _sparse_rref(rows, backend)
        pivcols = {c for c, _ in pivots}
        basis = []
        for f in range(ncols):
            if f in pivcols:
                continue
            vec = {f: backend.one}
            for c, row in pivots:
                if f in row and not backend.is_zero(row[f]):
                    vec[c] = -row[f]
            basis.append(vec)
        return basis
    mat = rows_to_dense(rows, ncols)
    if mat.shape[0] == 0:
        return [{j: 1 + 0j} for j in range(ncols)]
    _, s, vh = np.linalg.svd(mat)
    smax = s[0] if len(s) else 0.0
    cut = backend.tol * max(smax, 1.0)
    rank = int(np.sum(s > cut))
    null = vh[rank:]
    if null.shape[0] == 0:
        return []
    reduced, _, _ = float_rref(null, backend.tol)
    return [dense_to_vec(reduced[i], backend) for i in range(reduced.shape[0])]


def rank_rows(rows: list[dict], ncols: int, backend) -> int:
    if isinstance(backend, ExactBackend):
        pivots, _ = _exact_rref(rows, backend)
        return len(pivots)
    mat = rows_to_dense(rows, ncols)
    if mat.shape[0] == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    smax = s[0] if len(s) else 0.0
    return int(np.sum(s > backend.tol * max(smax, 1.0)))


def solve_linear(rows: list[dict], rhs: list, ncols: int, backend):
    """Solve A x = b.  Returns (particular_solution, nullspace_basis).

    Raises ValueError on an inconsistent system.  `rhs` is a list of scalars
    aligned with `rows`.
    """
    if isinstance(backend, ExactBackend):
        sentinel = ncols
        aug = []
        for row, b in zip(rows, rhs):
            r = dict(row)
            if not backend.is_zero(b):
                r[sentinel] = -b
            if r:
                aug.append(r)
        pivots, inconsistent = _exact_rref(aug, backend, sentinel=sentinel)
        if inconsistent:
            raise ValueError("inconsistent linear system")
        sol: dict = {}
        pivcols = set()
        for c, row in pivots:
            pivcols.add(c)
            b = row.get(sentinel)
            if b is not None:
                sol[c] = -b
        basis = []
        for f in range(ncols):
            if f in pivcols:
                continue
            vec = {f: backend.one}
            for c, row in pivots:
                if f in row:
                    vec[c] = -row[f]
            basis.append(vec)
        return sol, basis
    mat = rows_to_dense(rows, ncols)
    bvec = np.array([complex(b) for b in rhs])
    sol, *_ = np.linalg.lstsq(mat, bvec, rcond=None)
    if mat.shape[0] and np.linalg.norm(mat @ sol - bvec) > backend.tol * max(
            1.0, np.linalg.norm(bvec)) * max(1.0, np.linalg.norm(mat)):
        raise ValueError("inconsistent linear system")
    null = null_space_rows(rows, ncols, backend)
    return dense_to_vec(sol, backend), null


class SpanTracker:
    """Incremental row space: add vectors, query rank, membership, residual."""

    def __init__(self, ncols: int, backend):
        self.ncols = ncols
        self.backend = backend
        if isinstance(backend, ExactBackend):
            self._pivots: dict[int, dict] = {}
        else:
            self._buf = np.zeros((64, ncols), dtype=complex)
            self._n = 0

    @property
    def dim(self) -> int:
        if isinstance(self.backend, ExactBackend):
            return len(self._pivots)
        return self._n

    @property
    def _ortho_mat(self) -> np.ndarray:
        return self._buf[: self._n]

    def _reduce(self, vec: dict) -> dict:
        # stored pivot rows are fully inter-reduced, so one pass suffices
        out = dict(vec)
        for c in list(out):
            if c in out and c in self._pivots:
                vadd_into(out, self._pivots[c], -out[c], self.backend)
        return out

    def residual(self, vec: dict):
        """Component of vec outside the span (exact dict / float norm)."""
        if isinstance(self.backend, ExactBackend):
            return self._reduce(vec)
        arr = vec_to_dense(vec, self.ncols)
        Q = self._ortho_mat
        if self._n:
            arr = arr - Q.T @ (Q.conj() @ arr)
        return arr

    def contains(self, vec: dict) -> bool:
        if isinstance(self.backend, ExactBackend):
            return not self._reduce(vec)
        res = self.residual(vec)
        norm = np.linalg.norm(vec_to_dense(vec, self.ncols))
        return bool(np.linalg.norm(res) <= self.backend.tol * max(1.0, norm))

    def add(self, vec: dict) -> bool:
        """Insert vec; True if it enlarged the span."""
        if isinstance(self.backend, ExactBackend):
            red = self._reduce(vec)
            if not red:
                return False
            col = min(red)
            inv = self.backend.inv(red[col])
            red = {c: inv * v for c, v in red.items()}
            for pc, prow in self._pivots.items():
                if col in prow:
                    vadd_into(prow, red, -prow[col], self.backend)
            self._pivots[col] = red
            return True
        arr = vec_to_dense(vec, self.ncols)
        norm0 = np.linalg.norm(arr)
        if norm0 == 0:
            return False
        arr = self.residual(vec)
        # re-orthogonalise once for stability
        Q = self._ortho_mat
        if self._n:
            arr = arr - Q.T @ (Q.conj() @ arr)
        norm = np.linalg.norm(arr)
        if norm <= self.backend.tol * max(1.0, norm0):
            return False
        if self._n == self._buf.shape[0]:
            grown = np.zeros((2 * self._buf.shape[0], self.ncols), dtype=complex)
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        self._buf[self._n] = arr / norm
        self._n += 1
        return True

    def basis_vectors(self) -> list[dict]:
        if isinstance(self.backend, ExactBackend):
            return [dict(row) for _, row in sorted(self._pivots.items())]
        return [dense_to_vec(self._buf[i], self.backend) for i in range(self._n)]


def span_dim(vectors: list[dict], ncols: int, backend) -> int:
    tr = SpanTracker(ncols, backend)
    for v in vectors:
        tr.add(v)
    return tr.dim


def spans_equal(a: list[dict], b: list[dict], ncols: int, backend) -> bool:
    da = span_dim(a, ncols, backend)
    db = span_dim(b, ncols, backend)
    if da != db:
        return False
    return span_dim(a + b, ncols, backend) == da
