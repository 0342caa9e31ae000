"""Shared helpers for the test suite."""

from fractions import Fraction

import numpy as np

from kachain.backend import ExactBackend, vadd_into


def brute_null_space(rows, ncols):
    """Independent dense rational null-space oracle (plain Gauss-Jordan)."""
    mat = [[Fraction(0)] * ncols for _ in rows]
    for r, row in enumerate(rows):
        for c, v in row.items():
            mat[r][c] = Fraction(v) if not hasattr(v, "coeffs") else v.as_fraction()
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c]:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    basis = []
    pivset = set(pivots)
    for free in range(ncols):
        if free in pivset:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row_idx, c in enumerate(pivots):
            if mat[row_idx][free]:
                vec[c] = -mat[row_idx][free]
        basis.append(vec)
    return basis


def as_dense(vec, n):
    out = np.zeros(n, dtype=complex)
    for k, v in vec.items():
        out[k] = complex(v) if not hasattr(v, "to_complex") else v.to_complex()
    return out


def elements_equal(a, b, backend):
    diff = dict(a)
    vadd_into(diff, b, -backend.one, backend)
    return all(backend.is_zero(v) for v in diff.values())


def exact_backend(conductor=8):
    return ExactBackend(conductor)
