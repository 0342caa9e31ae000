"""Relative commutants, averaging descriptions, and basic constructions.

The central objects are the commutant subspaces of the chains: the space S
(commutant of the middle H in H* x| H x| H*), the tower Q^m_n cut out by
slot-embedded iterated coproducts, and their tilde counterparts.  Depth two
is certified by comparing the GNS basic construction of Q^m_1 in Q^m_2
against Q^m_3, in dimension and in Bratteli data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import (
    ExactBackend,
    FloatBackend,
    SpanTracker,
    null_space_rows,
    solve_linear,
    spans_equal,
    vadd_into,
)
from .chains import ChainAlgebra, chain_algebra, conditional_expectation_from_trace
from .double import s_parametrization
from .errors import (
    DegenerateTrace,
    DimensionBudgetExceeded,
    NonConvergentClosure,
    ParityMismatch,
    SpanMismatch,
)
from .hopf import KacAlgebra, dual
from .linalg import (
    BratteliData,
    Expresser,
    OperatorAlgebra,
    SubalgebraView,
    algebra_product,
    block_decompose,
    regular_trace,
)

DEFAULT_MAX_DIM = 16384


# --------------------------------------------------------------------------
# commutant solver
# --------------------------------------------------------------------------

def commutant_basis(ambient, constraints: list[dict],
                    within: list[dict] | None = None) -> list[dict]:
    """Basis of {X in span(within) : Xc = cX for all constraints c}.

    `within` defaults to the whole ambient algebra; vectors are returned in
    ambient coordinates (or `within` coordinates when that span is given).
    """
    b = ambient.backend
    if within is None:
        unknowns = [{i: b.one} for i in range(ambient.dim)]
    else:
        unknowns = within
    rows: list[dict] = []
    for c in constraints:
        block: dict[int, dict] = {}
        for t, w in enumerate(unknowns):
            diff = algebra_product(ambient, c, w)
            vadd_into(diff, algebra_product(ambient, w, c), -b.one, b)
            for k, v in diff.items():
                block.setdefault(k, {})[t] = v
        rows.extend(r for r in block.values() if r)
    return null_space_rows(rows, len(unknowns), b)


def _expand_in(unknowns: list[dict], coeffs: dict, backend) -> dict:
    out: dict = {}
    for t, c in coeffs.items():
        vadd_into(out, unknowns[t], c, backend)
    return out


def window_commutant(a: int, p: int, bb: int, H: KacAlgebra,
                     max_dim: int = DEFAULT_MAX_DIM):
    """Commutant of H_[a, p] inside H_[a, bb], returned with the ambient.

    The expected answer, the embedded sub-chain H_[p+2, bb], is compared as
    a span; a SpanMismatch means the finite-window commutant statement
    failed.
    """
    b = H.backend
    ambient = chain_algebra(a, bb, H, max_dim)
    sub = chain_algebra(a, p, H)
    constraints = [ambient.embed_element(sub, g) for g in sub.generator_vectors()]
    solved = commutant_basis(ambient, constraints)
    # residual pass over the whole sub-window basis
    for v in solved:
        for i in range(sub.dim):
            c = ambient.embed_element(sub, {i: b.one})
            diff = algebra_product(ambient, c, v)
            vadd_into(diff, algebra_product(ambient, v, c), -b.one, b)
            if any(not b.is_zero(x) for x in diff.values()):
                raise ArithmeticError("window commutant residual check failed")
    expected_chain = chain_algebra(p + 2, bb, H)
    expected = [ambient.embed_element(expected_chain, {i: b.one})
                for i in range(expected_chain.dim)]
    if not spans_equal(solved, expected, ambient.dim, b):
        raise SpanMismatch(
            f"commutant of window [{a},{p}] in [{a},{bb}] is not [{p + 2},{bb}]")
    return solved, ambient


# --------------------------------------------------------------------------
# the S space and the Q towers
# --------------------------------------------------------------------------

@dataclass
class SSpace:
    chain: ChainAlgebra
    solved: list[dict]
    parametrized: list[dict]

    @property
    def dim(self) -> int:
        return len(self.solved)


def s_space(H: KacAlgebra) -> SSpace:
    """Commutant of the middle H inside H* x| H x| H*, solved two ways.

    Raises SpanMismatch if the solved commutant differe from the span of the
    parametrised elements.
    """
    b = H.backend
    ch = chain_algebra(0, 2, H)
    constraints = [ch.slot_embed({1: {g: b.one}})
                   for g in H.generator_indices()]
    solved = commutant_basis(ch, constraints)
    _full_commutant_residual(ch, solved, [1], H, nlegs=1)
    cols = s_parametrization(H, ch)
    if not spans_equal(solved, cols, ch.dim, b):
        raise SpanMismatch("parametrised span differs from the solved commutant")
    return SSpace(chain=ch, solved=solved, parametrized=cols)


def _q_layout(m: int, level: int, H: KacAlgebra):
    """Window, constraint slots and padding needs of Q^m_level."""
    if m <= 2:
        raise ValueError("need m > 2")
    k = level // 2 if level % 2 == 0 else (level + 1) // 2
    if m % 2:
        lo, hi = 1, m * level - 1
        slots = [m * (2 * i - 1) for i in range(1, k + 1)]
    else:
        lo, hi = 0, m * level - 2
        slots = [m * (2 * i - 1) - 1 for i in range(1, k + 1)]
    pad_hi = max(hi, slots[-1])
    return lo, hi, slots, k, pad_hi


@dataclass
class QSpace:
    m: int
    level: int
    H: KacAlgebra
    ambient: ChainAlgebra
    work: ChainAlgebra
    constraint_slots: list[int]
    vectors: list[dict] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def embed_work(self, vec: dict) -> dict:
        if self.work is self.ambient:
            return vec
        return self.work.embed_element(self.ambient, vec)


def _q_constraints(chain: ChainAlgebra, slots: list[int], H: KacAlgebra,
                   nlegs: int, indices) -> list[dict]:
    out = []
    for g in indices:
        legs = H.legs_basis(g, nlegs)
        out.append(chain.embed_tensor(slots, legs))
    return out


def _full_commutant_residual(chain: ChainAlgebra, vectors: list[dict],
                             slots: list[int], H: KacAlgebra, nlegs: int,
                             embed=None) -> None:
    """Residual pass: solved vectors must commute with every basis constraint."""
    b = chain.backend
    constraints = _q_constraints(chain, slots, H, nlegs, range(H.dim))
    for v in vectors:
        w = embed(v) if embed is not None else v
        for c in constraints:
            diff = algebra_product(chain, c, w)
            vadd_into(diff, algebra_product(chain, w, c), -b.one, b)
            if any(not b.is_zero(x) for x in diff.values()):
                raise ArithmeticError("commutant residual check failed")


def q_space(m: int, level: int, H: KacAlgebra,
            max_dim: int = DEFAULT_MAX_DIM) -> QSpace:
    """The commutant-defined space Q^m_level inside its chain window."""
    cache = getattr(H, "_q_space_cache", None)
    if cache is None:
        cache = {}
        H._q_space_cache = cache
    if (m, level) in cache:
        return cache[(m, level)]
    qs = _q_space_solve(m, level, H, max_dim)
    cache[(m, level)] = qs
    return qs


def _q_space_solve(m: int, level: int, H: KacAlgebra,
                   max_dim: int) -> QSpace:
    lo, hi, slots, k, pad_hi = _q_layout(m, level, H)
    ambient = chain_algebra(lo, hi, H, max_dim)
    work = ambient if pad_hi == hi else chain_algebra(lo, pad_hi, H, max_dim)
    b = H.backend
    constraints = _q_constraints(work, slots, H, k, H.generator_indices())
    if work is ambient:
        unknowns = None
        vectors = commutant_basis(work, constraints)
    else:
        unknowns = [work.embed_element(ambient, {i: b.one})
                    for i in range(ambient.dim)]
        vectors = [
            coeff for coeff in commutant_basis(work, constraints, within=unknowns)]
    qs = QSpace(m=m, level=level, H=H, ambient=ambient, work=work,
                constraint_slots=slots, vectors=vectors)
    _full_commutant_residual(work, vectors, slots, H, k,
                             embed=qs.embed_work if work is not ambient else None)
    return qs


def q2_parametrized_basis(m: int, H: KacAlgebra,
                          max_dim: int = DEFAULT_MAX_DIM) -> list[dict]:
    """Q^m_2 built from the explicit parametrised form (middle S block
    framed by free chain windows)."""
    if m <= 2:
        raise ValueError("need m > 2")
    b = H.backend
    lo, hi, slots, _, _ = _q_layout(m, 2, H)
    ambient = chain_algebra(lo, hi, H)
    if ambient.dim * 1 > max_dim:
        raise DimensionBudgetExceeded(f"ambient dimension {ambient.dim}")
    c = slots[0]
    mid_slots = [c - 1, c, c + 1]
    scols = s_parametrization(H, chain_algebra(0, 2, H))
    sch = chain_algebra(0, 2, H)
    left_slots = [p for p in ambient.slots if p < c - 1]
    right_slots = [p for p in ambient.slots if p > c + 1]
    n = H.dim
    out: list[dict] = []
    for a_digits in _digit_tuples(n, len(left_slots)):
        for col in scols:
            mid_tensor = {sch.digits(idx): v for idx, v in col.items()}
            for b_digits in _digit_tuples(n, len(right_slots)):
                tensor: dict = {}
                for mid_key, v in mid_tensor.items():
                    tensor[a_digits + mid_key + b_digits] = v
                out.append(ambient.embed_tensor(
                    left_slots + mid_slots + right_slots, tensor))
    return out


def _digit_tuples(n: int, length: int):
    if length == 0:
        yield ()
        return
    for head in range(n):
        for tail in _digit_tuples(n, length - 1):
            yield (head,) + tail


def averaging_fixed_space(m: int, level: int, H: KacAlgebra,
                          max_dim: int = DEFAULT_MAX_DIM):
    """Image and fixed space of X -> Delta_(k-1)(h_1) X Delta_(k-1)(S h_2).

    Returns (fixed_vectors, report_dict); asserts the operator is idempotent
    and that the fixed space agrees with the solved commutant space.
    """
    lo, hi, slots, k, pad_hi = _q_layout(m, level, H)
    b = H.backend
    ambient = chain_algebra(lo, hi, H, max_dim)
    work = ambient if pad_hi == hi else chain_algebra(lo, pad_hi, H, max_dim)
    if H.haar is None:
        from .hopf import find_integrals
        find_integrals(H)
    # pairs Delta_{k-1}(h_1) (x) Delta_{k-1}(S h_2), slot-embedded
    conj_pairs = []
    for (h1, h2), v in H.legs(H.haar, 2).items():
        u = work.embed_tensor(slots, H.legs_basis(h1, k))
        sh2 = H.antipode.get(h2, {})
        w: dict = {}
        for d, c in sh2.items():
            for t, cv in H.legs_basis(d, k).items():
                w[t] = w.get(t, b.zero) + c * cv
        vvec = work.embed_tensor(slots, w)
        conj_pairs.append((u, vvec, v))

    def P(vec: dict) -> dict:
        out: dict = {}
        for u, vv, c in conj_pairs:
            term = algebra_product(work, algebra_product(work, u, vec), vv)
            vadd_into(out, term, c, b)
        return out

    cols = {}
    for i in range(work.dim):
        cols[i] = P({i: b.one})
    # idempotency as an operator identity
    for i in range(work.dim):
        again: dict = {}
        for jj, c in cols[i].items():
            vadd_into(again, cols[jj], c, b)
        diff = dict(again)
        vadd_into(diff, cols[i], -b.one, b)
        if any(not b.is_zero(v) for v in diff.values()):
            raise ArithmeticError("averaging operator is not idempotent")
    # fixed subspace of the (possibly padded) ambient image
    rows: dict[int, dict] = {}
    for t in range(ambient.dim):
        emb = work.embed_element(ambient, {t: b.one}) if work is not ambient \
            else {t: b.one}
        diff: dict = {}
        for jj, c in emb.items():
            vadd_into(diff, cols[jj], c, b)
        vadd_into(diff, emb, -b.one, b)
        for kk, v in diff.items():
            rows.setdefault(kk, {})[t] = v
    fixed = null_space_rows([r for r in rows.values() if r], ambient.dim, b)
    qs = q_space(m, level, H, max_dim=max_dim)
    if not spans_equal(fixed, qs.vectors, ambient.dim, b):
        raise SpanMismatch("averaging fixed space differs from the commutant space")
    # the unit is fixed
    one = ambient.one()
    emb_one = work.embed_element(ambient, one) if work is not ambient else one
    diff = P(emb_one)
    vadd_into(diff, emb_one, -b.one, b)
    if any(not b.is_zero(v) for v in diff.values()):
        raise ArithmeticError("averaging operator does not fix the unit")
    return fixed, {"dimension": len(fixed), "level": level}


def q12_space(m: int, H: KacAlgebra, max_dim: int = DEFAULT_MAX_DIM):
    """The level-2 sub-commutant carrying the second relative commutant of
    the smaller inclusion; equals a sub-chain window of dimension n^(m-2)."""
    if m <= 2:
        raise ValueError("need m > 2")
    b = H.backend
    lo, hi, slots, _, _ = _q_layout(m, 2, H)
    ambient = chain_algebra(lo, hi, H, max_dim)
    c = slots[0]
    wlo = c + 1
    window = chain_algebra(wlo, hi, H)
    unknowns = [ambient.embed_element(window, {i: b.one})
                for i in range(window.dim)]
    constraints = [ambient.slot_embed({c: {g: b.one}})
                   for g in H.generator_indices()]
    coeffs = commutant_basis(ambient, constraints, within=unknowns)
    vectors = [_expand_in(unknowns, cf, b) for cf in coeffs]
    # expected: the sub-chain one slot above the constraint
    sub = chain_algebra(c + 2, hi, H)
    expected = [ambient.embed_element(sub, {i: b.one}) for i in range(sub.dim)]
    if not spans_equal(vectors, expected, ambient.dim, b):
        raise SpanMismatch("level-2 sub-commutant is not the expected sub-chain")
    return vectors, sub, ambient


# --------------------------------------------------------------------------
# tilde spaces and their level embeddings
# --------------------------------------------------------------------------

def q_tilde_layout(m: int, k: int):
    if k % 2 == 0:
        j = k // 2
        lo, hi = m, (k + 1) * m - 2
        slots = [2 * i * m - 1 for i in range(1, j + 1)]
        legs = j
    else:
        j = (k + 1) // 2
        lo, hi = 0, k * m - 2
        slots = [2 * i * m - 1 for i in range(0, j)]
        legs = j
    pad_lo = min(lo, slots[0])
    return lo, hi, slots, legs, pad_lo


def q_tilde_space(m: int, k: int, H: KacAlgebra,
                  max_dim: int = DEFAULT_MAX_DIM):
    """The unflipped relative-commutant model at level k."""
    lo, hi, slots, legs, pad_lo = q_tilde_layout(m, k)
    b = H.backend
    ambient = chain_algebra(lo, hi, H, max_dim)
    work = ambient if pad_lo == lo else chain_algebra(pad_lo, hi, H, max_dim)
    constraints = _q_constraints(work, slots, H, legs, H.generator_indices())
    if work is ambient:
        vectors = commutant_basis(work, constraints)
    else:
        unknowns = [work.embed_element(ambient, {i: b.one})
                    for i in range(ambient.dim)]
        coeffs = commutant_basis(work, constraints, within=unknowns)
        vectors = coeffs
    return vectors, ambient, work


def embed_q_tilde(m: int, k: int, H: KacAlgebra, vec: dict,
                  max_dim: int = DEFAULT_MAX_DIM) -> dict:
    """The level embedding: unit padding on m fresh slots below the window."""
    lo_s, hi_s, *_ = q_tilde_layout(m, k)
    lo_t, hi_t, *_ = q_tilde_layout(m, k + 1)
    src = chain_algebra(lo_s, hi_s, H, max_dim)
    tgt = chain_algebra(lo_t, hi_t, H, max_dim)
    shift = hi_t - hi_s
    if shift % 2:
        raise ParityMismatch("level embedding shift must preserve parity")
    b = H.backend
    out: dict = {}
    for idx, c in vec.items():
        digs = src.digits(idx)
        placements = {p + shift: {d: b.one} for p, d in zip(src.slots, digs)}
        vadd_into(out, tgt.slot_embed(placements), c, b)
    return out


# --------------------------------------------------------------------------
# GNS basic construction
# --------------------------------------------------------------------------

@dataclass
class InclusionData:
    """A unital *-inclusion A inside B, with B's trace; coordinates of the
    A-spanning vectors are in B's basis."""
    algebra: object
    sub_vectors: list[dict]


@dataclass
class GnsResult:
    operators: OperatorAlgebra
    incl: InclusionData
    lam: list[dict]          # left-regular images of the B basis
    e: dict                  # projection onto the A subspace of L^2(B)
    span: SpanTracker | None
    expectation: object
    _dim: int = 0

    @property
    def dim(self) -> int:
        return self.span.dim if self.span is not None else self._dim

    def trace_of(self, op: dict):
        """Normalised operator trace on End(L^2(B))."""
        b = self.operators.backend
        k = self.operators.k
        tot = b.zero
        for idx, v in op.items():
            r, c = divmod(idx, k)
            if r == c:
                tot = tot + v
        return tot * b.scalar(1) / b.scalar(k)

    def lam_vec(self, vec: dict) -> dict:
        b = self.operators.backend
        out: dict = {}
        for i, c in vec.items():
            vadd_into(out, self.lam[i], c, b)
        return out


def gns_basic_construction(incl: InclusionData,
                           max_rounds: int = 8) -> GnsResult:
    """Represent B on L^2(B, tr), adjoin the projection onto A, close up.

    The span of lambda(B), e and lambda(B) e lambda(B) is always closed under
    multiplication once e lambda(b) e = lambda(E_A(b)) e holds; that identity
    is checked exactly, with an iterative closure fallback guarding against
    anything unexpected.
    """
    B = incl.algebra
    b = B.backend
    nB = B.dim
    ops = OperatorAlgebra(nB, b)

    lam = []
    for i in range(nB):
        col: dict = {}
        for j in range(nB):
            for r, v in B.mult_row(i, j).items():
                col[r * nB + j] = v
        lam.append(col)

    # Gram matrix of <x, y> = tr(x* y)
    gram_rows: list[dict] = []
    stars = [B.star_vec({i: b.one}) for i in range(nB)]
    for i in range(nB):
        row = {}
        for j in range(nB):
            val = B.trace_of(algebra_product(B, stars[i], {j: b.one}))
            if not b.is_zero(val):
                row[j] = val
        gram_rows.append(row)

    # orthogonal projection onto span(A): P = V (V^H G V)^(-1) V^H G
    V = incl.sub_vectors
    na = len(V)
    vhgv_rows: list[dict] = []
    for i in range(na):
        row = {}
        for j in range(na):
            tot = b.zero
            for r, vr in V[i].items():
                for c, vc in V[j].items():
                    g = gram_rows[r].get(c)
                    if g is not None:
                        tot = tot + b.conj(vr) * vc * g
            if not b.is_zero(tot):
                row[j] = tot
        vhgv_rows.append(row)
    inv_cols = []
    for k in range(na):
        rhs = [b.one if i == k else b.zero for i in range(na)]
        sol, null = solve_linear(vhgv_rows, rhs, na, b)
        if null:
            raise DegenerateTrace("trace form degenerate on the subalgebra")
        inv_cols.append(sol)

    e: dict = {}
    for j in range(nB):
        gj = {r: gram_rows[r].get(j) for r in range(nB)
              if gram_rows[r].get(j) is not None}
        # w = V^H G e_j
        w = {}
        for i in range(na):
            tot = b.zero
            for r, vr in V[i].items():
                g = gj.get(r)
                if g is not None:
                    tot = tot + b.conj(vr) * g
            if not b.is_zero(tot):
                w[i] = tot
        # c = K^{-1} w ; col_j = V c
        cvec: dict = {}
        for i, val in w.items():
            vadd_into(cvec, inv_cols[i], val, b)
        for i, val in cvec.items():
            for r, vr in V[i].items():
                key = r * nB + j
                cur = e.get(key, b.zero) + val * vr
                if b.is_zero(cur):
                    e.pop(key, None)
                else:
                    e[key] = cur

    expectation = conditional_expectation_from_trace(B, V)

    lam_e = [ops_mult(ops, col, e, b) for col in lam]
    e_lam = [ops_mult(ops, e, col, b) for col in lam]
    candidates = lam + [e] + lam_e + e_lam
    for i in range(nB):
        for col in e_lam:
            candidates.append(ops_mult(ops, lam_e[i], col, b))
    # certificate: e lambda(b) e = lambda(E_A(b)) e for every basis b; with
    # it, products of the candidate span reduce back into the span
    certified = True
    for i in range(nB):
        lhs = ops_mult(ops, e, lam_e[i], b)
        evec = expectation.apply({i: b.one})
        rhs: dict = {}
        for j, c in evec.items():
            vadd_into(rhs, lam_e[j], c, b)
        diff = dict(lhs)
        vadd_into(diff, rhs, -b.one, b)
        if any(not b.is_zero(v) for v in diff.values()):
            certified = False
            break
    span = None
    if isinstance(b, ExactBackend):
        span = SpanTracker(nB * nB, b)
        for col in candidates:
            span.add(col)
        dim = span.dim
    else:
        dim = _float_span_rank(candidates, nB * nB, b)
    if not certified:
        if span is None:
            raise NonConvergentClosure(
                "float closure certificate failed; cannot iterate densely")
        gens = lam + [e]
        for _ in range(max_rounds):
            grew = False
            basis_now = span.basis_vectors()
            for g in gens:
                for s in basis_now:
                    if span.add(ops_mult(ops, g, s, b)):
                        grew = True
            if not grew:
                break
            if span.dim > nB * nB:
                raise NonConvergentClosure("span exceeded End(L^2(B))")
        else:
            raise NonConvergentClosure("closure did not stabilise")
        dim = span.dim
    return GnsResult(operators=ops, incl=incl, lam=lam, e=e, span=span,
                     expectation=expectation, _dim=dim)


def _float_span_rank(vectors: list[dict], ncols: int, backend) -> int:
    import scipy.linalg
    mat = np.zeros((ncols, len(vectors)), dtype=complex)
    for j, vec in enumerate(vectors):
        for k, v in vec.items():
            mat[k, j] = complex(v)
    _, r, _ = scipy.linalg.qr(mat, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        return 0
    return int((diag > backend.tol * max(diag[0], 1.0)).sum())


def ops_mult(ops: OperatorAlgebra, a: dict, c: dict, backend) -> dict:
    """Sparse matrix product in the flattened operator coordinates."""
    k = ops.k
    by_row: dict[int, dict] = {}
    for idx, v in c.items():
        r, cc = divmod(idx, k)
        by_row.setdefault(r, {})[cc] = v
    out: dict = {}
    for idx, v in a.items():
        r, m = divmod(idx, k)
        row = by_row.get(m)
        if not row:
            continue
        for cc, w in row.items():
            key = r * k + cc
            cur = out.get(key, backend.zero) + v * w
            if backend.is_zero(cur):
                out.pop(key, None)
            else:
                out[key] = cur
    return out


# --------------------------------------------------------------------------
# verification of basic constructions and Markov traces
# --------------------------------------------------------------------------

@dataclass
class BasicConstructionReport:
    jones_projection: dict
    condition_i: bool
    condition_ii: bool
    condition_iii: bool
    markov_modulus: object | None = None
    markov_ok: bool | None = None
    bratteli_match: bool | None = None

    @property
    def ok(self) -> bool:
        conds = [self.condition_i, self.condition_ii, self.condition_iii]
        if self.markov_ok is not None:
            conds.append(self.markov_ok)
        if self.bratteli_match is not None:
            conds.append(self.bratteli_match)
        return all(conds)


def verify_basic_construction(C, a_vectors: list[dict], b_vectors: list[dict],
                              f: dict) -> BasicConstructionReport:
    """Check the three defining conditions of a basic construction inside C.

    a_vectors and b_vectors span A inside B inside C (coordinates of C); f is
    a projection of C.  The trace used for the conditional expectation is the
    restriction of C's trace to B.
    """
    b = C.backend
    # f is a projection
    ff = algebra_product(C, f, f)
    diff = dict(ff)
    vadd_into(diff, f, -b.one, b)
    proj_ok = all(b.is_zero(v) for v in diff.values())
    star_diff = dict(C.star_vec(f))
    vadd_into(star_diff, f, -b.one, b)
    proj_ok = proj_ok and all(b.is_zero(v) for v in star_diff.values())

    # (i) commutes with A; a -> a f injective
    cond_i = proj_ok
    for a in a_vectors:
        diff = algebra_product(C, f, a)
        vadd_into(diff, algebra_product(C, a, f), -b.one, b)
        if any(not b.is_zero(v) for v in diff.values()):
            cond_i = False
            break
    if cond_i:
        tr = SpanTracker(C.dim, b)
        for a in a_vectors:
            tr.add(algebra_product(C, a, f))
        cond_i = tr.dim == len(a_vectors)

    # (ii) f b f = E_A(b) f on a basis of B
    bview = SubalgebraView(C, b_vectors)
    a_in_b = [bview.express(a) for a in a_vectors]
    E = conditional_expectation_from_trace(bview, a_in_b)
    cond_ii = True
    for bb in b_vectors:
        lhs = algebra_product(C, algebra_product(C, f, bb), f)
        e_of_b = bview.lift(E.apply(bview.express(bb)))
        rhs = algebra_product(C, e_of_b, f)
        diff = dict(lhs)
        vadd_into(diff, rhs, -b.one, b)
        if any(not b.is_zero(v) for v in diff.values()):
            cond_ii = False
            break

    # (iii) B f B spans C
    tr = SpanTracker(C.dim, b)
    for bb in b_vectors:
        bf = algebra_product(C, bb, f)
        for bb2 in b_vectors:
            tr.add(algebra_product(C, bf, bb2))
    cond_iii = tr.dim == C.dim
    return BasicConstructionReport(jones_projection=f, condition_i=cond_i,
                                   condition_ii=cond_ii, condition_iii=cond_iii)


def quasi_basis(B, a_vectors: list[dict]) -> list[tuple[dict, dict]]:
    """Pairs (u_t, v_t) in B with sum_t u_t E_A(v_t x) = x for all x."""
    b = B.backend
    E = conditional_expectation_from_trace(B, a_vectors)
    nB = B.dim
    e_cols = []
    for j in range(nB):
        e_cols.append(E.apply({j: b.one}))
    # unknowns c_{ij} over pairs; equations: sum_ij c_ij b_i E(b_j x) = x
    rows: dict[tuple[int, int], dict] = {}
    for x in range(nB):
        target: dict = {}
        for i in range(nB):
            for j in range(nB):
                prod_jx = B.mult_row(j, x)
                acted: dict = {}
                for r, c in prod_jx.items():
                    vadd_into(acted, e_cols[r], c, b)
                col: dict = {}
                for r, c in acted.items():
                    vadd_into(col, B.mult_row(i, r), c, b)
                for k, v in col.items():
                    rows.setdefault((x, k), {})[i * nB + j] = v
    row_list = []
    rhs = []
    for (x, k), row in sorted(rows.items()):
        row_list.append(row)
        rhs.append(b.one if x == k else b.zero)
    # ensure rows for absent (x, k) identity entries
    present = {key for key in rows}
    for x in range(nB):
        if (x, x) not in present:
            row_list.append({})
            rhs.append(b.one)
    sol, _ = solve_linear(row_list, rhs, nB * nB, b)
    pairs = []
    for key, c in sol.items():
        i, j = divmod(key, nB)
        if not b.is_zero(c):
            pairs.append(({i: c}, {j: b.one}))
    return pairs


def transported_jones_projection(C, a_vectors: list[dict],
                                 b_vectors: list[dict], modulus) -> dict:
    """Recover the implementing projection inside a concrete realisation C.

    Solves the linear conditions: commutation with A, trace-expectation
    E_B(f) = modulus^{-1} 1, and the quasi-basis identity
    sum_t u_t f v_t = 1; the solution must be unique.
    """
    b = C.backend
    nC = C.dim
    rows: list[dict] = []
    rhs: list = []
    # commutation with A
    for a in a_vectors:
        block: dict[int, dict] = {}
        for t in range(nC):
            diff = algebra_product(C, a, {t: b.one})
            diff = {k: v for k, v in diff.items()}
            minus = algebra_product(C, {t: b.one}, a)
            vadd_into(diff, minus, -b.one, b)
            for k, v in diff.items():
                block.setdefault(k, {})[t] = v
        for k in sorted(block):
            rows.append(block[k])
            rhs.append(b.zero)
    # E_B(f) = modulus^{-1} 1  <=>  tr(b_i* f) = modulus^{-1} tr(b_i*) for all i
    inv_mod = b.inv(b.scalar(modulus))
    for bb in b_vectors:
        sb = C.star_vec(bb)
        row = {}
        for t in range(nC):
            val = C.trace_of(algebra_product(C, sb, {t: b.one}))
            if not b.is_zero(val):
                row[t] = val
        rows.append(row)
        rhs.append(inv_mod * C.trace_of(sb))
    # quasi-basis identity
    bview = SubalgebraView(C, b_vectors)
    a_in_b = [bview.express(a) for a in a_vectors]
    pairs = quasi_basis(bview, a_in_b)
    block: dict[int, dict] = {}
    for t in range(nC):
        tot: dict = {}
        for u, v in pairs:
            lift_u = bview.lift(u)
            lift_v = bview.lift(v)
            term = algebra_product(C, algebra_product(C, lift_u, {t: b.one}), lift_v)
            vadd_into(tot, term, b.one, b)
        for k, val in tot.items():
            block.setdefault(k, {})[t] = val
    one = C.one()
    keys = set(block) | set(one)
    for k in sorted(keys):
        rows.append(block.get(k, {}))
        rhs.append(one.get(k, b.zero))
    sol, null = solve_linear(rows, rhs, nC, b)
    if null:
        raise SpanMismatch("implementing projection is not pinned down linearly")
    return sol


def markov_check_gns(gns: GnsResult, modulus) -> bool:
    """tr_C(lambda(X) e) = modulus^{-1} tr_B(X) over the B basis, with tr_C
    the normalised operator trace on the basic construction."""
    B = gns.incl.algebra
    b = B.backend
    inv_mod = b.inv(b.scalar(modulus))
    for i in range(B.dim):
        lhs = gns.trace_of(ops_mult(gns.operators, gns.lam[i], gns.e, b))
        rhs = inv_mod * B.trace_of({i: b.one})
        if not b.is_zero(lhs - rhs):
            return False
    return True


def markov_check_concrete(C, b_vectors: list[dict], f: dict, modulus,
                          b_trace=None) -> bool:
    """tr_C(X f) = modulus^{-1} tr_B(X) over a spanning set of B inside C."""
    b = C.backend
    inv_mod = b.inv(b.scalar(modulus))
    for bb in b_vectors:
        lhs = C.trace_of(algebra_product(C, bb, f))
        rhs = inv_mod * (C.trace_of(bb) if b_trace is None else b_trace(bb))
        if not b.is_zero(lhs - rhs):
            return False
    return True


# --------------------------------------------------------------------------
# depth two
# --------------------------------------------------------------------------

@dataclass
class DepthTwoReport:
    dims: dict
    depth_one_excluded: bool
    gns_dim_matches: bool
    blocks_c: list[int] | None = None
    blocks_q3: list[int] | None = None
    inclusion_match: bool | None = None
    markov_ok: bool | None = None

    @property
    def ok(self) -> bool:
        conds = [self.depth_one_excluded, self.gns_dim_matches]
        if self.blocks_c is not None:
            conds.append(self.blocks_c == self.blocks_q3)
        if self.inclusion_match is not None:
            conds.append(self.inclusion_match)
        if self.markov_ok is not None:
            conds.append(self.markov_ok)
        return all(conds)


def q_tower(m: int, H: KacAlgebra, top_level: int = 3,
            max_dim: int = DEFAULT_MAX_DIM):
    """Q^m_1 .. Q^m_top_level realised inside the top ambient window.

    Lower levels embed by unit padding on the fresh top slots; membership of
    each level in the next is asserted.
    """
    b = H.backend
    spaces = [q_space(m, lv, H, max_dim=max_dim)
              for lv in range(1, top_level + 1)]
    top = spaces[-1].ambient
    embedded = []
    for qs in spaces:
        vecs = [top.embed_element(qs.ambient, v) if qs.ambient is not top else v
                for v in qs.vectors]
        embedded.append(vecs)
    for lower, upper in zip(embedded, embedded[1:]):
        tr = SpanTracker(top.dim, b)
        for v in upper:
            tr.add(v)
        for v in lower:
            if not tr.contains(v):
                raise SpanMismatch("tower levels do not nest")
    return spaces, embedded, top


def gns_for_q_tower(m: int, H: KacAlgebra, max_dim: int = DEFAULT_MAX_DIM,
                    q1: QSpace | None = None, q2: QSpace | None = None):
    """GNS basic construction of Q^m_1 inside Q^m_2 with the chain trace."""
    if q1 is None:
        q1 = q_space(m, 1, H, max_dim=max_dim)
    if q2 is None:
        q2 = q_space(m, 2, H, max_dim=max_dim)
    amb2 = q2.ambient
    q2view = SubalgebraView(amb2, q2.vectors)
    q1_in_amb2 = [amb2.embed_element(q1.ambient, v) for v in q1.vectors]
    a_in_b = [q2view.express(v) for v in q1_in_amb2]
    incl = InclusionData(algebra=q2view, sub_vectors=a_in_b)
    return gns_basic_construction(incl), q1, q2, q2view


def _gns_block_data(gns: GnsResult, seed: int = 0):
    """Blocks of the basic construction via the right action of A.

    The commutant of lambda(B) and e on L^2(B) is the right action of A;
    once dim C equals the commutant dimension, the blocks of C are the
    isotypic multiplicities of that action.
    """
    B = gns.incl.algebra
    b = B.backend
    nB = B.dim
    A_view = SubalgebraView(B, gns.incl.sub_vectors)
    A_view.trace_of = lambda vec: B.trace_of(A_view.lift(vec))
    a_blocks = block_decompose(A_view, seed=seed)
    rho = []
    for p in a_blocks.idempotents:
        p_in_b = A_view.lift(p)
        col: dict = {}
        for j in range(nB):
            img = algebra_product(B, {j: b.one}, p_in_b)
            for r, v in img.items():
                col[r * nB + j] = v
        rho.append(col)
    ks = []
    for p_op, asize in zip(rho, a_blocks.block_sizes):
        mat = np.zeros((nB, nB), dtype=complex)
        for idx, v in p_op.items():
            r, c = divmod(idx, nB)
            mat[r, c] = complex(v)
        rank = int(round(np.trace(mat).real))
        sv = np.linalg.svd(mat, compute_uv=False)
        rank_sv = int((sv > 1e-8 * max(sv[0], 1.0)).sum())
        if rank != rank_sv:
            rank = rank_sv
        if rank % asize:
            raise ArithmeticError("isotypic rank is not a multiple of the block size")
        ks.append(rank // asize)
    total = sum(k * k for k in ks)
    return a_blocks, rho, ks, total


def depth_two_check(m: int, H: KacAlgebra, seed: int = 0,
                    with_blocks: bool = True,
                    max_dim: int = DEFAULT_MAX_DIM) -> DepthTwoReport:
    """Full depth-2 certification for the level tower at m.

    Exact steps: dimensions, nesting, GNS dimension match, depth-1 exclusion.
    Float steps (with_blocks): block multisets of the basic construction and
    of Q^m_3 agree, and the two inclusion matrices of Q^m_2 agree up to block
    permutation.
    """
    b = H.backend
    spaces, _, _ = q_tower(m, H, 3, max_dim=max_dim)
    q1, q2, q3 = spaces
    gns, q1, q2, q2view = gns_for_q_tower(m, H, max_dim=max_dim, q1=q1, q2=q2)
    dims = {"q1": q1.dim, "q2": q2.dim, "q3": q3.dim, "gns": gns.dim}
    depth_one_excluded = q2.dim != q1.dim ** 2
    gns_dim_matches = gns.dim == q3.dim
    report = DepthTwoReport(dims=dims, depth_one_excluded=depth_one_excluded,
                            gns_dim_matches=gns_dim_matches)
    report.markov_ok = markov_check_gns(gns, b.scalar(H.dim) ** m)
    if not with_blocks:
        return report

    if isinstance(b, ExactBackend):
        from .hopf import to_float
        Hf = to_float(H)
        return _depth_two_blocks(m, Hf, report, seed=seed, max_dim=max_dim)
    return _depth_two_blocks(m, H, report, seed=seed, max_dim=max_dim,
                             prebuilt=(gns, q1, q2, q2view, q3))


def _rand_sparse_combos(dim: int, rng, count: int, support: int = 3):
    out = []
    for _ in range(count):
        vec: dict = {}
        for _ in range(support):
            idx = int(rng.integers(dim))
            coeff = complex(rng.normal(), rng.normal())
            vec[idx] = vec.get(idx, 0j) + coeff
        out.append(vec)
    return out


def _left_mult_matrix(view, vec: dict) -> np.ndarray:
    """Matrix of left multiplication by a (sparse) view element, batched."""
    from .backend import vec_to_dense
    amb = view.ambient
    d = view.dim
    lifted = view.lift(vec)
    prods = np.zeros((d, amb.dim), dtype=complex)
    for j in range(d):
        prod = algebra_product(amb, lifted, view.vectors[j])
        for k, v in prod.items():
            prods[j, k] = complex(v)
    coeffs = view._express.express_matrix(prods)
    return coeffs.T


def _batched_mult_matrices(view, x: dict):
    """Dense coefficient matrices of left and right multiplication by x."""
    from .backend import vec_to_dense
    amb = view.ambient
    d = view.dim
    lifted = view.lift(x)
    left = np.zeros((d, amb.dim), dtype=complex)
    right = np.zeros((d, amb.dim), dtype=complex)
    for j in range(d):
        for k, v in algebra_product(amb, lifted, view.vectors[j]).items():
            left[j, k] = complex(v)
        for k, v in algebra_product(amb, view.vectors[j], lifted).items():
            right[j, k] = complex(v)
    L = view._express.express_matrix(left).T
    R = view._express.express_matrix(right).T
    return L, R


def _certified_centre(view, seed: int):
    """Centre of a subalgebra view against random generators, certified by
    a full commutation residual pass over every view basis vector."""
    b = view.backend
    rng = np.random.default_rng(seed)
    stacked: list[np.ndarray] = []
    for attempt in range(6):
        for _ in range(2):
            coeffs = rng.normal(size=view.dim)
            x = {i: complex(c) for i, c in enumerate(coeffs)}
            L, R = _batched_mult_matrices(view, x)
            stacked.append(L - R)
        mat = np.vstack(stacked)
        _, s, vh = np.linalg.svd(mat, full_matrices=False)
        smax = s[0] if len(s) else 0.0
        rank = int((s > b.tol * max(smax, 1.0)).sum())
        null = vh[rank:]
        if null.shape[0] == 0:
            return []
        from .backend import float_rref, dense_to_vec
        reduced, _, _ = float_rref(null, b.tol)
        centre = [dense_to_vec(reduced[i], b) for i in range(reduced.shape[0])]
        ok = True
        for z in centre:
            zl = view.lift(z)
            for vj in view.vectors:
                diff = algebra_product(view.ambient, zl, vj)
                vadd_into(diff, algebra_product(view.ambient, vj, zl),
                          -b.one, b)
                if any(not b.is_zero(v) for v in diff.values()):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return centre
    raise ArithmeticError("could not certify the centre of the view")


def spectral_blocks(view, seed: int):
    """Block sizes and spectral projectors of a multimatrix subalgebra view.

    A random central element acts on the left regular representation with
    one eigenvalue per block, of multiplicity (block size)^2; the spectral
    projectors are the left-multiplication matrices of the minimal central
    idempotents.
    """
    centre = _certified_centre(view, seed)
    cdim = len(centre)
    d = view.dim
    rng = np.random.default_rng(seed + 101)
    for attempt in range(8):
        coeffs = rng.normal(size=cdim)
        z: dict = {}
        for c, vec in zip(coeffs, centre):
            vadd_into(z, vec, complex(c), view.backend)
        Lz = _left_mult_matrix(view, z)
        evals, evecs = np.linalg.eig(Lz)
        order = np.lexsort((evals.imag.round(6), evals.real.round(6)))
        evals = evals[order]
        evecs = evecs[:, order]
        groups: list[list[int]] = [[0]]
        for i in range(1, d):
            if abs(evals[i] - evals[groups[-1][0]]) < 1e-6:
                groups[-1].append(i)
            else:
                groups.append([i])
        if len(groups) != cdim:
            continue
        sizes = []
        ok = True
        for g in groups:
            s = np.sqrt(len(g))
            si = int(round(s))
            if abs(s - si) > 1e-9:
                ok = False
                break
            sizes.append(si)
        if not ok or sum(s * s for s in sizes) != d:
            continue
        vinv = np.linalg.inv(evecs)
        projectors = [evecs[:, g] @ vinv[g, :] for g in groups]
        order2 = np.argsort(sizes, kind="stable")
        sizes = [sizes[i] for i in order2]
        projectors = [projectors[i] for i in order2]
        return sizes, projectors
    raise ArithmeticError("could not separate the centre spectrum")


def _depth_two_blocks(m: int, H: KacAlgebra, report: DepthTwoReport,
                      seed: int, max_dim: int,
                      prebuilt=None) -> DepthTwoReport:
    b = H.backend
    if prebuilt is not None:
        gns, q1, q2, q2view, q3 = prebuilt
    else:
        gns, q1, q2, q2view = gns_for_q_tower(m, H, max_dim=max_dim)
        q3 = q_space(m, 3, H, max_dim=max_dim)
    amb3 = q3.ambient
    # blocks of the basic construction, through the right A-action
    a_blocks, rho, ks, commutant_dim = _gns_block_data(gns, seed=seed)
    if commutant_dim != gns.dim:
        raise ArithmeticError("basic construction is smaller than the A-commutant")
    blocks_c = sorted(ks)

    # blocks of Q^m_3 from the spectrum of a random central multiplier
    q3view = SubalgebraView(amb3, q3.vectors)
    q3_sizes, q3_projs = spectral_blocks(q3view, seed)
    report.blocks_c = blocks_c
    report.blocks_q3 = sorted(q3_sizes)

    # inclusion matrices of Q^m_2 on both sides, rows aligned through the
    # same block decomposition of Q^m_2
    q2_blocks = block_decompose(q2view, seed=seed)
    q2_in_amb3 = [amb3.embed_element(q2.ambient, v) for v in q2.vectors]
    mat_q3 = np.zeros((len(q2_blocks.block_sizes), len(q3_sizes)), dtype=int)
    for ai, p in enumerate(q2_blocks.idempotents):
        amb_vec: dict = {}
        for i, c in p.items():
            vadd_into(amb_vec, q2_in_amb3[i], c, b)
        p_in_q3 = q3view.express(amb_vec)
        Lp = _left_mult_matrix(q3view, p_in_q3)
        for bi, P in enumerate(q3_projs):
            tr = np.trace(Lp @ P).real
            lam = tr / (q2_blocks.block_sizes[ai] * q3_sizes[bi])
            lam_i = int(round(lam))
            if abs(lam - lam_i) > 1e-6:
                raise ArithmeticError("non-integral inclusion multiplicity")
            mat_q3[ai, bi] = lam_i
    # side 2: inside the basic construction, via matrix traces against rho
    nB = q2view.dim
    mat_c = np.zeros((len(q2_blocks.block_sizes), len(ks)), dtype=int)
    for ai, p in enumerate(q2_blocks.idempotents):
        lam_p = gns.lam_vec(p)
        for bi, (p_rho, asize) in enumerate(zip(rho, a_blocks.block_sizes)):
            prod = ops_mult(gns.operators, lam_p, p_rho, b)
            tr = b.zero
            for idx, v in prod.items():
                r, c = divmod(idx, nB)
                if r == c:
                    tr = tr + v
            lam = complex(b.to_complex(tr)).real / (
                q2_blocks.block_sizes[ai] * asize)
            lam_i = int(round(lam))
            if abs(lam - lam_i) > 1e-6:
                raise ArithmeticError("non-integral inclusion multiplicity")
            mat_c[ai, bi] = lam_i
    report.inclusion_match = _columns_match(mat_q3, q3_sizes, mat_c, ks)
    return report


def _columns_match(mat_a: np.ndarray, sizes_a: list[int],
                   mat_b: np.ndarray, sizes_b: list[int]) -> bool:
    """Equality of inclusion matrices up to a permutation of the columns."""
    cols_a = sorted((sizes_a[j], tuple(int(x) for x in mat_a[:, j]))
                    for j in range(mat_a.shape[1]))
    cols_b = sorted((sizes_b[j], tuple(int(x) for x in mat_b[:, j]))
                    for j in range(mat_b.shape[1]))
    return cols_a == cols_b
