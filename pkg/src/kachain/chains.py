"""Crossed products and the alternating chains H_[i,j].

Slot p of a chain carries the base Kac algebra when p is odd and its dual
when p is even (the parity convention is absolute, negative slots included).
Multiplication is realised recursively through smash products, with each
chain caching basis-pair products lazily; over group algebras these products
are monomial, which keeps every solve downstream sparse.
"""

from __future__ import annotations

from .backend import vadd_into, vdot
from .errors import ActionAxiomViolation, DegenerateTrace, DimensionBudgetExceeded, ParityMismatch
from .hopf import AxiomReport, KacAlgebra, dual, find_integrals
from .linalg import algebra_product


class TrivialAlgebra:
    """The scalars, as the empty chain."""

    def __init__(self, backend):
        self.dim = 1
        self.backend = backend

    def mult_row(self, i, j):
        return {0: self.backend.one}

    def one(self):
        return {0: self.backend.one}

    def star_vec(self, vec):
        return {k: self.backend.conj(v) for k, v in vec.items()}

    def trace_of(self, vec):
        return vec.get(0, self.backend.zero)


def dual_action(H: KacAlgebra):
    """The natural action of K* on K (f . x = f(x_2) x_1), as row maps.

    Works for any Kac algebra K; the actor is dual(K) with the canonical
    identification of the bidual.  Returns (actor, target, rows) where
    rows(i, j) is the sparse image of actor basis i applied to target basis j.
    """
    actor = dual(H)

    def rows(i: int, j: int) -> dict:
        out: dict = {}
        for (a, b), v in H.comult_row(j).items():
            if b == i:
                w = out.get(a)
                w = v if w is None else w + v
                if H.backend.is_zero(w):
                    out.pop(a, None)
                else:
                    out[a] = w
        return out

    return actor, H, rows


def apply_action(rows, actor_vec: dict, target_vec: dict, backend) -> dict:
    out: dict = {}
    for i, ci in actor_vec.items():
        for j, cj in target_vec.items():
            c = ci * cj
            if backend.is_zero(c):
                continue
            vadd_into(out, rows(i, j), c, backend)
    return out


def verify_action(actor: KacAlgebra, target, rows, report_name="action") -> AxiomReport:
    """Module-algebra axioms, checked exhaustively over the bases."""
    b = actor.backend
    rep = AxiomReport(subject=report_name)

    def diff_resid(a: dict, c: dict):
        worst, ok = 0.0, True
        for k in set(a) | set(c):
            r = b.residual(a.get(k, b.zero) - c.get(k, b.zero))
            if r:
                ok = False
                worst = max(worst, r)
        return ok, worst

    ok, worst = True, 0.0
    for j in range(target.dim):
        got = apply_action(rows, actor.one(), {j: b.one}, b)
        o, w = diff_resid(got, {j: b.one})
        ok, worst = ok and o, max(worst, w)
    rep.record("unit acts trivially", ok, worst)

    ok, worst = True, 0.0
    t_one = target.one()
    for i in range(actor.dim):
        got = apply_action(rows, {i: b.one}, t_one, b)
        eps = actor.counit.get(i, b.zero)
        o, w = diff_resid(got, {k: eps * v for k, v in t_one.items()})
        ok, worst = ok and o, max(worst, w)
    rep.record("counit on target unit", ok, worst)

    ok, worst = True, 0.0
    for i in range(actor.dim):
        for i2 in range(actor.dim):
            prod = actor.mult_row(i, i2)
            for j in range(target.dim):
                via_prod = apply_action(rows, prod, {j: b.one}, b)
                nested = apply_action(rows, {i: b.one},
                                      apply_action(rows, {i2: b.one}, {j: b.one}, b), b)
                o, w = diff_resid(via_prod, nested)
                ok, worst = ok and o, max(worst, w)
    rep.record("action associativity", ok, worst)

    ok, worst = True, 0.0
    for i in range(actor.dim):
        legs = actor.legs_basis(i, 2)
        for j in range(target.dim):
            for j2 in range(target.dim):
                lhs = apply_action(rows, {i: b.one}, target.mult_row(j, j2), b)
                rhs: dict = {}
                for (a1, a2), v in legs.items():
                    p1 = rows(a1, j)
                    p2 = rows(a2, j2)
                    for x, cx in p1.items():
                        for y, cy in p2.items():
                            vadd_into(rhs, target.mult_row(x, y), v * cx * cy, b)
                o, w = diff_resid(lhs, rhs)
                ok, worst = ok and o, max(worst, w)
    rep.record("module-algebra law", ok, worst)
    return rep


class SmashAlgebra:
    """Crossed product A x| K for a Kac algebra K acting on an algebra A."""

    def __init__(self, A, K: KacAlgebra, rows, verify: bool = False):
        self.A = A
        self.K = K
        self.rows = rows
        self.dim = A.dim * K.dim
        self.backend = K.backend
        self._mult_cache: dict[tuple[int, int], dict] = {}
        self._star_cache: dict[int, dict] = {}
        if verify:
            rep = verify_action(K, A, rows)
            if not rep.ok:
                raise ActionAxiomViolation(str(rep))

    def split(self, idx: int) -> tuple[int, int]:
        return divmod(idx, self.K.dim)

    def join(self, a: int, x: int) -> int:
        return a * self.K.dim + x

    def mult_row(self, i: int, j: int) -> dict:
        key = (i, j)
        out = self._mult_cache.get(key)
        if out is not None:
            return out
        b = self.backend
        a, x = self.split(i)
        c, y = self.split(j)
        out = {}
        for (x1, x2), v in self.K.comult_row(x).items():
            acted = self.rows(x1, c)
            if not acted:
                continue
            tops = self.K.mult_row(x2, y)
            if not tops:
                continue
            for c2, w in acted.items():
                lefts = self.A.mult_row(a, c2)
                for r, cr in lefts.items():
                    base = v * w * cr
                    if b.is_zero(base):
                        continue
                    for t, ct in tops.items():
                        k = self.join(r, t)
                        cur = out.get(k)
                        cur = base * ct if cur is None else cur + base * ct
                        if b.is_zero(cur):
                            out.pop(k, None)
                        else:
                            out[k] = cur
        self._mult_cache[key] = out
        return out

    def tensor_elem(self, avec: dict, kvec: dict) -> dict:
        b = self.backend
        out = {}
        for a, va in avec.items():
            for x, vx in kvec.items():
                v = va * vx
                if not b.is_zero(v):
                    out[self.join(a, x)] = v
        return out

    def one(self) -> dict:
        return self.tensor_elem(self.A.one(), self.K.one())

    def star_row(self, idx: int) -> dict:
        out = self._star_cache.get(idx)
        if out is not None:
            return out
        b = self.backend
        a, x = self.split(idx)
        sa = self.A.star_vec({a: b.one})
        out = {}
        for sx, cx in self.K.star[x].items():
            for (s1, s2), v in self.K.comult_row(sx).items():
                acted = apply_action(self.rows, {s1: b.one}, sa, b)
                for r, cr in acted.items():
                    k = self.join(r, s2)
                    cur = out.get(k)
                    add = cx * v * cr
                    cur = add if cur is None else cur + add
                    if b.is_zero(cur):
                        out.pop(k, None)
                    else:
                        out[k] = cur
        self._star_cache[idx] = out
        return out

    def star_vec(self, vec: dict) -> dict:
        b = self.backend
        out: dict = {}
        for idx, c in vec.items():
            vadd_into(out, self.star_row(idx), b.conj(c), b)
        return out


def smash_product(A, K: KacAlgebra, rows, verify: bool = True) -> SmashAlgebra:
    """Spec-level crossed product constructor with action verification."""
    return SmashAlgebra(A, K, rows, verify=verify)


class ChainAlgebra:
    """The iterated crossed product H_[lo, hi] under the parity convention."""

    def __init__(self, lo: int, hi: int, H: KacAlgebra, _impl=None):
        self.lo = lo
        self.hi = hi
        self.H = H
        self.Hd = dual(H)
        self.backend = H.backend
        if H.haar is None:
            find_integrals(H)
        self.slots = list(range(lo, hi + 1))
        self.nslots = max(0, hi - lo + 1)
        self.n = H.dim
        self.dim = self.n ** self.nslots
        self._impl = _impl if _impl is not None else self._build()
        self._trace_weights = [self._slot_trace_weight(p) for p in self.slots]
        self._flip_cache: dict = {}

    # -- construction --------------------------------------------------------

    def slot_algebra(self, p: int) -> KacAlgebra:
        return self.H if p % 2 else self.Hd

    def _build(self):
        if self.nslots == 0:
            return TrivialAlgebra(self.backend)
        if self.nslots == 1:
            return self.slot_algebra(self.lo)
        prefix = chain_algebra(self.lo, self.hi - 1, self.H)
        top = self.slot_algebra(self.hi)
        under = self.slot_algebra(self.hi - 1)
        _, _, base_rows = dual_action(under)
        under_dim = under.dim

        def rows(i: int, j: int) -> dict:
            rest, last = divmod(j, under_dim)
            out = {}
            for t, v in base_rows(i, last).items():
                out[rest * under_dim + t] = v
            return out

        return SmashAlgebra(prefix, top, rows)

    def _slot_trace_weight(self, p: int) -> list:
        b = self.backend
        if p % 2:
            phi = self.H.phi
            return [phi.get(i, b.zero) for i in range(self.n)]
        h = self.H.haar
        return [h.get(i, b.zero) for i in range(self.n)]

    # -- index utilities -----------------------------------------------------

    def digits(self, idx: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.nslots):
            idx, d = divmod(idx, self.n)
            out.append(d)
        return tuple(reversed(out))

    def index(self, digits) -> int:
        idx = 0
        for d in digits:
            idx = idx * self.n + d
        return idx

    def slot_pos(self, p: int) -> int:
        if not self.lo <= p <= self.hi:
            raise IndexError(f"slot {p} outside window [{self.lo}, {self.hi}]")
        return p - self.lo

    # -- algebra protocol ----------------------------------------------------

    def mult_row(self, i: int, j: int) -> dict:
        return self._impl.mult_row(i, j)

    def one(self) -> dict:
        return self._impl.one()

    def product(self, a: dict, b: dict) -> dict:
        return algebra_product(self, a, b)

    def star_vec(self, vec: dict) -> dict:
        return self._impl.star_vec(vec)

    def generator_vectors(self) -> list[dict]:
        gens: list[dict] = []
        for p in self.slots:
            alg = self.slot_algebra(p)
            for g in alg.generator_indices():
                gens.append(self.slot_embed({p: {g: self.backend.one}}))
        return gens

    def verification_vectors(self) -> list[dict]:
        out: list[dict] = []
        for p in self.slots:
            alg = self.slot_algebra(p)
            for d in range(alg.dim):
                out.append(self.slot_embed({p: {d: self.backend.one}}))
        return out

    # -- chain trace -----------------------------------------------------------

    def trace_of(self, vec: dict):
        b = self.backend
        tot = b.zero
        for idx, c in vec.items():
            w = c
            for pos, d in enumerate(self.digits(idx)):
                w = w * self._trace_weights[pos][d]
                if b.is_zero(w):
                    break
            else:
                tot = tot + w
            continue
        return tot

    # -- embeddings ------------------------------------------------------------

    def unit_slot_vector(self, p: int) -> dict:
        return self.slot_algebra(p).one()

    def slot_embed(self, placements: dict[int, dict]) -> dict:
        """Element with the given per-slot vectors, units elsewhere."""
        b = self.backend
        out = {(): b.one}
        for p in self.slots:
            vec = placements.get(p, self.unit_slot_vector(p))
            nxt = {}
            for key, c in out.items():
                for d, v in vec.items():
                    w = c * v
                    if not b.is_zero(w):
                        nxt[key + (d,)] = w
            out = nxt
        return {self.index(k): v for k, v in out.items()}

    def embed_tensor(self, slots: list[int], tensor: dict) -> dict:
        """Place a tensor keyed by digit tuples over the named slots."""
        b = self.backend
        out: dict = {}
        for key, c in tensor.items():
            placements = {p: {d: b.one} for p, d in zip(slots, key)}
            piece = self.slot_embed(placements)
            vadd_into(out, piece, c, b)
        return out

    def embed_element(self, sub: "ChainAlgebra", vec: dict) -> dict:
        """Natural inclusion of a sub-window element, units elsewhere."""
        if sub.lo < self.lo or sub.hi > self.hi:
            raise IndexError("sub-window not contained in chain")
        b = self.backend
        out: dict = {}
        for idx, c in vec.items():
            digs = sub.digits(idx)
            placements = {p: {d: b.one} for p, d in zip(sub.slots, digs)}
            vadd_into(out, self.slot_embed(placements), c, b)
        return out

    def restrict_to(self, sub: "ChainAlgebra", vec: dict, strict: bool = True) -> dict | None:
        """Inverse of embed_element on its image.

        Reads coefficients at one canonical combination of padding digits and
        certifies the answer by re-embedding.
        """
        b = self.backend
        canon: dict[int, tuple[int, object]] = {}
        for p in self.slots:
            if not sub.lo <= p <= sub.hi:
                unit_vec = self.unit_slot_vector(p)
                d0 = min(k for k, v in unit_vec.items() if not b.is_zero(v))
                canon[self.slot_pos(p)] = (d0, unit_vec[d0])
        out: dict = {}
        for idx, c in vec.items():
            digs = self.digits(idx)
            skip = False
            weight = b.one
            for pos, (d0, w0) in canon.items():
                if digs[pos] != d0:
                    skip = True
                    break
                weight = weight * w0
            if skip:
                continue
            sub_digs = tuple(digs[self.slot_pos(p)] for p in sub.slots)
            val = out.get(sub.index(sub_digs), b.zero) + c / weight
            out[sub.index(sub_digs)] = val
        out = {k: v for k, v in out.items() if not b.is_zero(v)}
        check = self.embed_element(sub, out)
        diff = dict(check)
        vadd_into(diff, vec, -b.one, b)
        if any(not b.is_zero(v) for v in diff.values()):
            if strict:
                raise ValueError("vector is not in the embedded sub-window")
            return None
        return out


def chain_algebra(lo: int, hi: int, H: KacAlgebra,
                  max_dim: int | None = None) -> ChainAlgebra:
    """H_[lo, hi]; the empty window (lo > hi) is the scalars."""
    if max_dim is not None and hi >= lo and H.dim ** (hi - lo + 1) > max_dim:
        raise DimensionBudgetExceeded(
            f"chain [{lo},{hi}] has dimension {H.dim ** (hi - lo + 1)} > budget {max_dim}")
    cache = getattr(H, "_chain_cache", None)
    if cache is None:
        cache = {}
        H._chain_cache = cache
    key = (lo, hi)
    if key not in cache:
        cache[key] = ChainAlgebra(lo, hi, H)
    return cache[key]


def chain_trace(chain: ChainAlgebra, vec: dict):
    return chain.trace_of(vec)


def regular_trace(alg, vec: dict, check_chain_identity: bool = True):
    """Trace of left multiplication; for chains also asserts the identity
    tr_L = (dim H)^k * chain trace."""
    from .linalg import regular_trace as _reg
    val = _reg(alg, vec)
    if check_chain_identity and isinstance(alg, ChainAlgebra):
        b = alg.backend
        scale = b.scalar(alg.n ** alg.nslots)
        diff = val - scale * alg.trace_of(vec)
        if not b.is_zero(diff):
            raise ArithmeticError(
                "regular trace does not match the scaled chain trace")
    return val


def flip_prime(src: ChainAlgebra, vec: dict, dst: ChainAlgebra) -> dict:
    """Reverse the slots onto dst's window and apply the antipode slot-wise.

    Requires equal window lengths and matching parity of src.hi with dst.lo.
    The result multiplies anti-homomorphically and intertwines the stars.
    """
    if src.nslots != dst.nslots:
        raise ParityMismatch("windows of different length")
    if src.nslots and (src.hi - dst.lo) % 2:
        raise ParityMismatch("window parities incompatible with the flip")
    b = src.backend
    out: dict = {}
    for idx, c in vec.items():
        digs = src.digits(idx)
        placements = {}
        for p, d in zip(src.slots, digs):
            q = dst.lo + (src.hi - p)
            placements[q] = src.slot_algebra(p).antipode.get(d, {})
        piece = dst.slot_embed(placements)
        vadd_into(out, piece, c, b)
    return out


class TensorPairAlgebra:
    """Componentwise product algebra A (x) B of two chains."""

    def __init__(self, A, B):
        self.A = A
        self.B = B
        self.dim = A.dim * B.dim
        self.backend = A.backend

    def split(self, idx):
        return divmod(idx, self.B.dim)

    def join(self, a, bb):
        return a * self.B.dim + bb

    def mult_row(self, i, j):
        a1, b1 = self.split(i)
        a2, b2 = self.split(j)
        out = {}
        backend = self.backend
        ra = self.A.mult_row(a1, a2)
        rb = self.B.mult_row(b1, b2)
        for x, cx in ra.items():
            for y, cy in rb.items():
                v = cx * cy
                if not backend.is_zero(v):
                    out[self.join(x, y)] = v
        return out

    def one(self):
        out = {}
        for a, va in self.A.one().items():
            for bb, vb in self.B.one().items():
                out[self.join(a, bb)] = va * vb
        return out

    def star_vec(self, vec):
        b = self.backend
        out: dict = {}
        for idx, c in vec.items():
            a, bb = self.split(idx)
            sa = self.A.star_vec({a: b.one})
            sb = self.B.star_vec({bb: b.one})
            cc = b.conj(c)
            for x, cx in sa.items():
                for y, cy in sb.items():
                    k = self.join(x, y)
                    cur = out.get(k, b.zero) + cc * cx * cy
                    if b.is_zero(cur):
                        out.pop(k, None)
                    else:
                        out[k] = cur
        return out

    def trace_of(self, vec):
        b = self.backend
        tot = b.zero
        for idx, c in vec.items():
            a, bb = self.split(idx)
            tot = tot + c * self.A.trace_of({a: b.one}) * self.B.trace_of({bb: b.one})
        return tot

    def tensor(self, avec: dict, bvec: dict) -> dict:
        b = self.backend
        out = {}
        for a, va in avec.items():
            for bb, vb in bvec.items():
                v = va * vb
                if not b.is_zero(v):
                    out[self.join(a, bb)] = v
        return out


class PsiEmbedding:
    """The split-slot embedding of H_[-l, p+s] into H_[-l,-1] (x) H_[p, 3p+s].

    The slot -1 entry is coproduct-split: its first leg stays at slot -1,
    its second leg lands at slot 2p-1 of the right factor, with unit padding
    on slots p..2p-2 and the original slots 0..p+s shifted up by 2p.
    """

    def __init__(self, l: int, s: int, p: int, H: KacAlgebra,
                 max_dim: int | None = None):
        if l < 1 or p < 1 or s < 0:
            raise ValueError("need l, p >= 1 and s >= 0")
        self.l, self.s, self.p = l, s, p
        self.H = H
        self.source = chain_algebra(-l, p + s, H, max_dim)
        self.left = chain_algebra(-l, -1, H, max_dim)
        self.right = chain_algebra(p, 3 * p + s, H, max_dim)
        self.target = TensorPairAlgebra(self.left, self.right)

    def apply(self, vec: dict) -> dict:
        b = self.H.backend
        src = self.source
        out: dict = {}
        pos_minus1 = src.slot_pos(-1)
        for idx, c in vec.items():
            digs = src.digits(idx)
            d = digs[pos_minus1]
            legs = self.H.comult_row(d)
            left_placements = {q: {digs[src.slot_pos(q)]: b.one}
                               for q in range(-self.l, -1)}
            right_placements_base = {
                2 * self.p + q: {digs[src.slot_pos(q)]: b.one}
                for q in range(0, self.p + self.s + 1)}
            for (d1, d2), v in legs.items():
                lvec = self.left.slot_embed({**left_placements, -1: {d1: b.one}})
                rvec = self.right.slot_embed(
                    {**right_placements_base, 2 * self.p - 1: {d2: b.one}})
                piece = self.target.tensor(lvec, rvec)
                vadd_into(out, piece, c * v, b)
        return out


def psi_embedding(l: int, s: int, p: int, H: KacAlgebra,
                  max_dim: int | None = None) -> PsiEmbedding:
    return PsiEmbedding(l, s, p, H, max_dim=max_dim)


class ConditionalExpectation:
    """Trace-orthogonal projection of an algebra onto a spanned subspace."""

    def __init__(self, alg, vectors: list[dict]):
        self.alg = alg
        self.vectors = vectors
        b = alg.backend
        self.backend = b
        nsub = len(vectors)
        gram_rows: list[dict] = []
        for jj in range(nsub):
            starred = alg.star_vec(vectors[jj])
            row = {}
            for kk in range(nsub):
                prod = algebra_product(alg, starred, vectors[kk])
                val = alg.trace_of(prod)
                if not b.is_zero(val):
                    row[kk] = val
            gram_rows.append(row)
        from .backend import solve_linear
        self._gram_rows = gram_rows
        self._nsub = nsub
        # invert the Gram matrix column by column
        self._inv_cols: list[dict] = []
        for k in range(nsub):
            rhs = [b.one if i == k else b.zero for i in range(nsub)]
            try:
                sol, null = solve_linear(gram_rows, rhs, nsub, b)
            except ValueError as exc:
                raise DegenerateTrace(str(exc)) from exc
            if null:
                raise DegenerateTrace("trace Gram matrix is singular")
            self._inv_cols.append(sol)

    def coefficients(self, vec: dict) -> dict:
        b = self.backend
        rhs = []
        for jj in range(self._nsub):
            starred = self.alg.star_vec(self.vectors[jj])
            prod = algebra_product(self.alg, starred, vec)
            rhs.append(self.alg.trace_of(prod))
        coeffs: dict = {}
        for jj, val in enumerate(rhs):
            if b.is_zero(val):
                continue
            vadd_into(coeffs, self._inv_cols[jj], val, b)
        return coeffs

    def apply(self, vec: dict) -> dict:
        b = self.backend
        out: dict = {}
        for k, c in self.coefficients(vec).items():
            vadd_into(out, self.vectors[k], c, b)
        return out


def conditional_expectation_from_trace(alg, vectors: list[dict]) -> ConditionalExpectation:
    return ConditionalExpectation(alg, vectors)
