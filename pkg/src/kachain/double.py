"""Quantum doubles and the Kac structure on the middle commutant.

Four related structures are built here, all as `KacAlgebra` packages:

* ``drinfeld_double(H)``       -- D(H) on H* (x) H
* ``double_dual(H)``           -- D(H)* on H* (x) H (explicit formulas)
* ``transported_double_dual``  -- the same algebra moved onto H* (x) H*
  through Id (x) F^{-1}
* ``s_commutant_kac(H)``       -- the Kac algebra carried by the commutant
  of the middle copy of H inside H* x| H x| H*, with opposite product,
  realised on the parameter space H* (x) H* and kept consistent with its
  ambient chain realisation.

The isomorphism checks between them are exhaustive tensor comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backend import vadd_into
from .chains import chain_algebra
from .errors import SpanMismatch
from .hopf import AxiomReport, KacAlgebra, dual, find_integrals, fourier_matrix
from .linalg import Expresser, SparseTensor3, algebra_product, apply_matrix


def _pair_index(n: int, i: int, j: int) -> int:
    return i * n + j


def _build_kac(name, n2, backend, mult, unit, comult, counit, antipode, star,
               variant) -> KacAlgebra:
    K = KacAlgebra(name=name, dim=n2, backend=backend, mult=mult, unit=unit,
                   comult=comult, counit=counit, antipode=antipode, star=star)
    K.variant = variant
    find_integrals(K)
    return K


def drinfeld_double(H: KacAlgebra) -> KacAlgebra:
    """D(H) on H* (x) H with the twisted multiplication."""
    b = H.backend
    Hd = dual(H)
    n = H.dim
    n2 = n * n
    mult = SparseTensor3((n2, n2, n2))
    for i in range(n):          # f
        for j in range(n):      # x
            xlegs = H.legs_basis(j, 3)
            for k in range(n):  # g
                glegs = Hd.legs_basis(k, 3)
                for ll in range(n):  # y
                    row: dict = {}
                    for (x1, x2, x3), vx in xlegs.items():
                        sx3 = H.antipode.get(x3, {})
                        for (g1, g2, g3), vg in glegs.items():
                            if g1 != x1:
                                continue
                            ev2 = sx3.get(g3)
                            if ev2 is None:
                                continue
                            c = vx * vg * ev2
                            if b.is_zero(c):
                                continue
                            fs = Hd.mult_row(i, g2)
                            ys = H.mult_row(ll, x2)
                            for a, ca in fs.items():
                                for d, cd in ys.items():
                                    key = _pair_index(n, a, d)
                                    cur = row.get(key, b.zero) + c * ca * cd
                                    if b.is_zero(cur):
                                        row.pop(key, None)
                                    else:
                                        row[key] = cur
                    if row:
                        mult.set_row(_pair_index(n, i, j), _pair_index(n, k, ll), row)
    comult = SparseTensor3((n2, n2, n2))
    for i in range(n):
        for j in range(n):
            row: dict[tuple[int, int], object] = {}
            for (f1, f2), vf in Hd.legs_basis(i, 2).items():
                for (x1, x2), vx in H.legs_basis(j, 2).items():
                    key = (_pair_index(n, f2, x2), _pair_index(n, f1, x1))
                    cur = row.get(key, b.zero) + vf * vx
                    if b.is_zero(cur):
                        row.pop(key, None)
                    else:
                        row[key] = cur
            for (a, c), v in row.items():
                comult.add(_pair_index(n, i, j), a, c, v)
    unit = {}
    for i, u in H.counit.items():
        for j, v in H.unit.items():
            unit[_pair_index(n, i, j)] = u * v
    counit = {}
    for i in range(n):
        for j in range(n):
            val = H.unit.get(i, b.zero) * H.counit.get(j, b.zero)
            if not b.is_zero(val):
                counit[_pair_index(n, i, j)] = val
    antipode: dict[int, dict] = {}
    for i in range(n):
        flegs = Hd.legs_basis(i, 3)
        for j in range(n):
            xlegs = H.legs_basis(j, 3)
            col: dict = {}
            for (f1, f2, f3), vf in flegs.items():
                for (x1, x2, x3), vx in xlegs.items():
                    sx1 = H.antipode.get(x1, {})
                    # f_1(S x_1)
                    val1 = sx1.get(f1)
                    if val1 is None:
                        continue
                    # f_3(x_3)
                    if f3 != x3:
                        continue
                    c = vf * vx * val1
                    if b.is_zero(c):
                        continue
                    for a, ca in Hd.antipode.get(f2, {}).items():
                        for d, cd in H.antipode.get(x2, {}).items():
                            key = _pair_index(n, a, d)
                            cur = col.get(key, b.zero) + c * ca * cd
                            if b.is_zero(cur):
                                col.pop(key, None)
                            else:
                                col[key] = cur
            antipode[_pair_index(n, i, j)] = col
    D = KacAlgebra(name=f"D({H.name})", dim=n2, backend=b, mult=mult, unit=unit,
                   comult=comult, counit=counit, antipode=antipode,
                   star={i: {} for i in range(n2)})
    # star: (f (x) x)* = (eps (x) x*) (f* (x) 1)
    star = {}
    for i in range(n):
        fstar = Hd.star[i]
        for j in range(n):
            xstar = H.star[j]
            left = {}
            for a, va in H.counit.items():
                for d, vd in xstar.items():
                    left[_pair_index(n, a, d)] = va * vd
            right = {}
            for a, va in fstar.items():
                for d, vd in H.unit.items():
                    right[_pair_index(n, a, d)] = va * vd
            star[_pair_index(n, i, j)] = D.product(left, right)
    D.star = star
    D.variant = "double"
    find_integrals(D)
    return D


def pairing_value_index(n: int, u: int, a: int):
    """Canonical pairing <f_i (x) x_j, g_k (x) y_l> = delta_jk delta_il."""
    i, j = divmod(u, n)
    k, ll = divmod(a, n)
    return (j == k) and (i == ll)


def pair_elements(n: int, u: dict, a: dict, backend):
    tot = backend.zero
    for uu, cu in u.items():
        i, j = divmod(uu, n)
        ca = a.get(_pair_index(n, j, i))
        if ca is not None:
            tot = tot + cu * ca
    return tot


def double_dual(H: KacAlgebra) -> KacAlgebra:
    """D(H)* on H* (x) H: opposite-tensor-opposite product, integral-twisted
    coproduct and antipode."""
    b = H.backend
    Hd = dual(H)
    n = H.dim
    n2 = n * n
    if H.phi is None:
        find_integrals(H)
    phi = H.phi
    h = H.haar
    delta2 = H.delta * H.delta

    mult = SparseTensor3((n2, n2, n2))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                gf = Hd.mult_row(k, i)
                for ll in range(n):
                    yx = H.mult_row(ll, j)
                    row = {}
                    for a, ca in gf.items():
                        for d, cd in yx.items():
                            row[_pair_index(n, a, d)] = ca * cd
                    if row:
                        mult.set_row(_pair_index(n, i, j), _pair_index(n, k, ll), row)

    # Delta(f (x) x) = delta^2 phi_2(x_2) phi_4(S h_2)
    #                  (phi_1 f_2 S phi_3 (x) x_1) (x) (f_1 (x) h_1)
    comult = SparseTensor3((n2, n2, n2))
    phi_legs = Hd.legs(phi, 4)
    h_legs = H.legs(h, 2)
    for i in range(n):
        flegs = Hd.legs_basis(i, 2)
        for j in range(n):
            xlegs = H.legs_basis(j, 2)
            acc: dict[tuple[int, int], object] = {}
            for (p1, p2, p3, p4), vp in phi_legs.items():
                for (h1, h2), vh in h_legs.items():
                    sh2 = H.antipode.get(h2, {})
                    ev_h = sh2.get(p4)
                    if ev_h is None:
                        continue
                    base0 = vp * vh * ev_h * delta2
                    if b.is_zero(base0):
                        continue
                    for (x1, x2), vx in xlegs.items():
                        if x2 != p2:
                            continue
                        base1 = base0 * vx
                        for (f1, f2), vf in flegs.items():
                            base = base1 * vf
                            if b.is_zero(base):
                                continue
                            mid = Hd.product(Hd.product({p1: b.one}, {f2: b.one}),
                                             Hd.antipode.get(p3, {}))
                            for a, ca in mid.items():
                                key = (_pair_index(n, a, x1), _pair_index(n, f1, h1))
                                cur = acc.get(key, b.zero) + base * ca
                                if b.is_zero(cur):
                                    acc.pop(key, None)
                                else:
                                    acc[key] = cur
            for (a, c), v in acc.items():
                comult.add(_pair_index(n, i, j), a, c, v)

    # S(f (x) x) = delta^2 phi_4(x) phi_2(h_2) (phi_1 S f S phi_3 (x) h_1)
    antipode: dict[int, dict] = {}
    for i in range(n):
        sf = Hd.antipode.get(i, {})
        for j in range(n):
            col: dict = {}
            for (p1, p2, p3, p4), vp in phi_legs.items():
                if p4 != j:
                    continue
                for (h1, h2), vh in h_legs.items():
                    evh = vh if p2 == h2 else None
                    if evh is None:
                        continue
                    base = vp * evh * delta2
                    if b.is_zero(base):
                        continue
                    mid = Hd.product(Hd.product({p1: b.one}, sf),
                                     Hd.antipode.get(p3, {}))
                    for a, ca in mid.items():
                        key = _pair_index(n, a, h1)
                        cur = col.get(key, b.zero) + base * ca
                        if b.is_zero(cur):
                            col.pop(key, None)
                        else:
                            col[key] = cur
            antipode[_pair_index(n, i, j)] = col

    unit = {}
    for i, u in H.counit.items():
        for j, v in H.unit.items():
            unit[_pair_index(n, i, j)] = u * v
    counit = {}
    for i in range(n):
        for j in range(n):
            val = H.unit.get(i, b.zero) * H.counit.get(j, b.zero)
            if not b.is_zero(val):
                counit[_pair_index(n, i, j)] = val

    # star through the canonical pairing with D(H)
    D = drinfeld_double(H)
    star: dict[int, dict] = {}
    for i in range(n):
        for j in range(n):
            col: dict = {}
            for k in range(n):
                for ll in range(n):
                    img = D.antipode_vec(D.star[_pair_index(n, k, ll)])
                    val = img.get(_pair_index(n, j, i))
                    if val is not None and not b.is_zero(val):
                        col[_pair_index(n, ll, k)] = b.conj(val)
            star[_pair_index(n, i, j)] = col

    Dd = _build_kac(f"D({H.name})*", n2, b, mult, unit, comult, counit,
                    antipode, star, "double-dual")
    Dd._paired_double = D
    return Dd


def transported_double_dual(H: KacAlgebra) -> KacAlgebra:
    """The Kac structure on H* (x) H* carrying D(H)* through Id (x) F^{-1}."""
    b = H.backend
    Hd = dual(H)
    n = H.dim
    n2 = n * n
    if H.phi is None:
        find_integrals(H)
    phi, h = H.phi, H.haar
    delta = H.delta

    # mult: (g (x) f)(k (x) p) = delta (S f_2 p)(h) (k g (x) f_1)
    mult = SparseTensor3((n2, n2, n2))
    for f in range(n):
        flegs = Hd.legs_basis(f, 2)
        for g in range(n):
            for k in range(n):
                kg = Hd.mult_row(k, g)
                for p in range(n):
                    row: dict = {}
                    for (f1, f2), vf in flegs.items():
                        sf2p = Hd.product(Hd.antipode.get(f2, {}), {p: b.one})
                        ev = b.zero
                        for a, ca in sf2p.items():
                            hv = h.get(a)
                            if hv is not None:
                                ev = ev + ca * hv
                        c = delta * vf * ev
                        if b.is_zero(c):
                            continue
                        for a, ca in kg.items():
                            key = _pair_index(n, a, f1)
                            cur = row.get(key, b.zero) + c * ca
                            if b.is_zero(cur):
                                row.pop(key, None)
                            else:
                                row[key] = cur
                    if row:
                        mult.set_row(_pair_index(n, g, f), _pair_index(n, k, p), row)

    # Delta(g (x) f) = delta (phi_1 g_2 S phi_3 (x) f S phi_2) (x) (g_1 (x) phi_4)
    comult = SparseTensor3((n2, n2, n2))
    phi_legs = Hd.legs(phi, 4)
    for g in range(n):
        glegs = Hd.legs_basis(g, 2)
        for f in range(n):
            acc: dict[tuple[int, int], object] = {}
            for (p1, p2, p3, p4), vp in phi_legs.items():
                sp2 = Hd.antipode.get(p2, {})
                sp3 = Hd.antipode.get(p3, {})
                fsp2 = Hd.product({f: b.one}, sp2)
                for (g1, g2), vg in glegs.items():
                    left1 = Hd.product(Hd.product({p1: b.one}, {g2: b.one}), sp3)
                    c = delta * vp * vg
                    if b.is_zero(c):
                        continue
                    for a, ca in left1.items():
                        for d, cd in fsp2.items():
                            key = (_pair_index(n, a, d), _pair_index(n, g1, p4))
                            cur = acc.get(key, b.zero) + c * ca * cd
                            if b.is_zero(cur):
                                acc.pop(key, None)
                            else:
                                acc[key] = cur
            for (a, c), v in acc.items():
                comult.add(_pair_index(n, g, f), a, c, v)

    # S(g (x) f) = f_1 S g S f_3 (x) S f_2
    antipode: dict[int, dict] = {}
    for g in range(n):
        sg = Hd.antipode.get(g, {})
        for f in range(n):
            col: dict = {}
            for (f1, f2, f3), vf in Hd.legs_basis(f, 3).items():
                first = Hd.product(Hd.product({f1: b.one}, sg),
                                   Hd.antipode.get(f3, {}))
                for a, ca in first.items():
                    for d, cd in Hd.antipode.get(f2, {}).items():
                        key = _pair_index(n, a, d)
                        cur = col.get(key, b.zero) + vf * ca * cd
                        if b.is_zero(cur):
                            col.pop(key, None)
                        else:
                            col[key] = cur
            antipode[_pair_index(n, g, f)] = col

    # counit(g (x) f) = delta f(h) g(1)
    counit = {}
    for g in range(n):
        g1 = H.unit.get(g, b.zero)
        for f in range(n):
            val = delta * h.get(f, b.zero) * g1
            if not b.is_zero(val):
                counit[_pair_index(n, g, f)] = val

    # unit and star are transported through T = Id (x) F^{-1}
    F, Finv = fourier_matrix(H)
    Dd = double_dual(H)

    def T(vec: dict) -> dict:
        out: dict = {}
        for idx, c in vec.items():
            g, f = divmod(idx, n)
            img = apply_matrix(Finv, {f: b.one}, b)
            for x, cx in img.items():
                key = _pair_index(n, g, x)
                cur = out.get(key, b.zero) + c * cx
                if b.is_zero(cur):
                    out.pop(key, None)
                else:
                    out[key] = cur
        return out

    def Tinv(vec: dict) -> dict:
        out: dict = {}
        for idx, c in vec.items():
            g, x = divmod(idx, n)
            img = apply_matrix(F, {x: b.one}, b)
            for f, cf in img.items():
                key = _pair_index(n, g, f)
                cur = out.get(key, b.zero) + c * cf
                if b.is_zero(cur):
                    out.pop(key, None)
                else:
                    out[key] = cur
        return out

    unit = Tinv(Dd.one())
    star = {}
    for idx in range(n2):
        star[idx] = Tinv(Dd.star_vec(T({idx: b.one})))

    K = _build_kac(f"D({H.name})*~", n2, b, mult, unit, comult, counit,
                   antipode, star, "double-dual-on-functions")
    K._transport_T = T
    K._transport_Tinv = Tinv
    K._double_dual = Dd
    return K


def opposite_algebra(K: KacAlgebra) -> KacAlgebra:
    """Same coalgebra with reversed multiplication (antipode unchanged: S^2 = id)."""
    mult = SparseTensor3(K.mult.dims)
    for i, j, k, v in K.mult.entries():
        mult.add(j, i, k, v)
    Kop = KacAlgebra(name=K.name + "^op", dim=K.dim, backend=K.backend,
                     mult=mult, unit=dict(K.unit), comult=K.comult,
                     counit=dict(K.counit), antipode=K.antipode, star=K.star,
                     basis_labels=K.basis_labels)
    Kop.delta = K.delta
    if K.haar is not None:
        Kop.haar = dict(K.haar)
        Kop.phi = dict(K.phi)
    return Kop


def s_parametrization(H: KacAlgebra, chain=None) -> list[dict]:
    """Chain elements f_1 S k_3 S f_3 x| F^{-1}(f_2 k_2) x| S k_1 over all
    dual-basis pairs (f, k), as vectors in H_[0,2]; index is f * dim + k."""
    b = H.backend
    Hd = dual(H)
    n = H.dim
    ch = chain if chain is not None else chain_algebra(0, 2, H)
    _, Finv = fourier_matrix(H)
    cols: list[dict] = []
    for f in range(n):
        flegs = Hd.legs_basis(f, 3)
        for k in range(n):
            klegs = Hd.legs_basis(k, 3)
            vec: dict = {}
            for (f1, f2, f3), vf in flegs.items():
                sf3 = Hd.antipode.get(f3, {})
                for (k1, k2, k3), vk in klegs.items():
                    c = vf * vk
                    if b.is_zero(c):
                        continue
                    slot0 = Hd.product(Hd.product({f1: b.one},
                                                  Hd.antipode.get(k3, {})), sf3)
                    if not slot0:
                        continue
                    mid_f = Hd.mult_row(f2, k2)
                    slot1: dict = {}
                    for a, ca in mid_f.items():
                        vadd_into(slot1, apply_matrix(Finv, {a: b.one}, b), ca, b)
                    if not slot1:
                        continue
                    slot2 = Hd.antipode.get(k1, {})
                    piece = ch.slot_embed({0: slot0, 1: slot1, 2: slot2})
                    vadd_into(vec, piece, c, b)
            cols.append(vec)
    return cols


@dataclass
class StarQ2:
    """The middle-commutant Kac algebra, on parameter coordinates (f, k)."""
    kac: KacAlgebra
    chain: object
    columns: list[dict]
    expresser: Expresser

    def to_chain(self, vec: dict) -> dict:
        out: dict = {}
        b = self.kac.backend
        for idx, c in vec.items():
            vadd_into(out, self.columns[idx], c, b)
        return out

    def from_chain(self, vec: dict, strict: bool = True) -> dict | None:
        return self.expresser.express(vec, strict=strict)


def s_commutant_kac(H: KacAlgebra) -> StarQ2:
    """Kac algebra on the commutant of the middle H in H* x| H x| H*.

    Multiplication is the opposite of the chain product, pulled back through
    the parametrisation; comultiplication and counit follow the explicit
    structure formulas; antipode and star are pulled back from the chain.
    """
    b = H.backend
    Hd = dual(H)
    n = H.dim
    n2 = n * n
    ch = chain_algebra(0, 2, H)
    cols = s_parametrization(H, ch)
    expr = Expresser(cols, ch.dim, b)
    if H.phi is None:
        find_integrals(H)
    phi, h = H.phi, H.haar
    delta = H.delta

    mult = SparseTensor3((n2, n2, n2))
    for i in range(n2):
        for j in range(n2):
            prod = algebra_product(ch, cols[j], cols[i])  # opposite product
            row = expr.express(prod, strict=False)
            if row is None:
                raise SpanMismatch(
                    "parametrised commutant is not closed under the chain product")
            mult.set_row(i, j, row)

    # Delta(X_{f,k}) = delta X_{f S phi_2, phi_1 k_2 S phi_3} (x) X_{phi_4, k_1}
    comult = SparseTensor3((n2, n2, n2))
    phi_legs = Hd.legs(phi, 4)
    for f in range(n):
        flegs = Hd.legs_basis(f, 1)
        for k in range(n):
            acc: dict[tuple[int, int], object] = {}
            for (p1, p2, p3, p4), vp in phi_legs.items():
                fsp2 = Hd.product({f: b.one}, Hd.antipode.get(p2, {}))
                sp3 = Hd.antipode.get(p3, {})
                for (k1, k2), vk in Hd.legs_basis(k, 2).items():
                    mid = Hd.product(Hd.product({p1: b.one}, {k2: b.one}), sp3)
                    c = delta * vp * vk
                    if b.is_zero(c):
                        continue
                    for a, ca in fsp2.items():
                        for d, cd in mid.items():
                            key = (_pair_index(n, a, d), _pair_index(n, p4, k1))
                            cur = acc.get(key, b.zero) + c * ca * cd
                            if b.is_zero(cur):
                                acc.pop(key, None)
                            else:
                                acc[key] = cur
            for (a, c), v in acc.items():
                comult.add(_pair_index(n, f, k), a, c, v)

    counit = {}
    for f in range(n):
        hf = h.get(f, b.zero)
        for k in range(n):
            val = delta * hf * H.unit.get(k, b.zero)
            if not b.is_zero(val):
                counit[_pair_index(n, f, k)] = val

    unit = expr.express(ch.one())

    antipode = {}
    star = {}
    for idx in range(n2):
        amb = cols[idx]
        s_amb = _s_q2_antipode_ambient(H, ch, idx, n)
        antipode[idx] = expr.express(s_amb)
        star[idx] = expr.express(ch.star_vec(amb))

    K = KacAlgebra(name=f"*Q2({H.name})", dim=n2, backend=b, mult=mult,
                   unit=unit, comult=comult, counit=counit,
                   antipode=antipode, star=star)
    K.variant = "middle-commutant"
    find_integrals(K)
    return StarQ2(kac=K, chain=ch, columns=cols, expresser=expr)


def _s_q2_antipode_ambient(H: KacAlgebra, ch, idx: int, n: int) -> dict:
    """S(X_{f,k}) = k_1 x| F^{-1} S(f_2 k_2) x| S(f_1 S k_3 S f_3), in the chain."""
    b = H.backend
    Hd = dual(H)
    _, Finv = fourier_matrix(H)
    f, k = divmod(idx, n)
    out: dict = {}
    for (f1, f2, f3), vf in Hd.legs_basis(f, 3).items():
        for (k1, k2, k3), vk in Hd.legs_basis(k, 3).items():
            c = vf * vk
            if b.is_zero(c):
                continue
            slot0 = {k1: b.one}
            mid = Hd.antipode_vec(Hd.mult_row(f2, k2))
            slot1: dict = {}
            for a, ca in mid.items():
                vadd_into(slot1, apply_matrix(Finv, {a: b.one}, b), ca, b)
            last = Hd.antipode_vec(
                Hd.product(Hd.product({f1: b.one}, Hd.antipode.get(k3, {})),
                           Hd.antipode.get(f3, {})))
            piece = ch.slot_embed({0: slot0, 1: slot1, 2: last})
            vadd_into(out, piece, c, b)
    return out


def transport_report(H: KacAlgebra) -> AxiomReport:
    """Id (x) F^{-1} intertwines the function-space model with D(H)*."""
    K = transported_double_dual(H)
    Dd = K._double_dual
    T, Tinv = K._transport_T, K._transport_Tinv
    b = K.backend
    rep = AxiomReport(subject=f"transport {K.name}")

    def close(a: dict, c: dict):
        worst, ok = 0.0, True
        for kk in set(a) | set(c):
            r = b.residual(a.get(kk, b.zero) - c.get(kk, b.zero))
            if r:
                ok = False
                worst = max(worst, r)
        return ok, worst

    ok, worst = True, 0.0
    for i in range(K.dim):
        for j in range(K.dim):
            lhs = T(K.mult_row(i, j))
            rhs = Dd.product(T({i: b.one}), T({j: b.one}))
            o, w = close(lhs, rhs)
            ok, worst = ok and o, max(worst, w)
    rep.record("multiplication transported", ok, worst)

    o, w = close(T(K.one()), Dd.one())
    rep.record("unit transported", o, w)

    ok, worst = True, 0.0
    for i in range(K.dim):
        lhs = {}
        for (a, c), v in K.comult_row(i).items():
            ta, tc = T({a: b.one}), T({c: b.one})
            for x, cx in ta.items():
                for y, cy in tc.items():
                    key = (x, y)
                    lhs[key] = lhs.get(key, b.zero) + v * cx * cy
        rhs = Dd.coproduct(T({i: b.one}))
        o, w = close(lhs, rhs)
        ok, worst = ok and o, max(worst, w)
    rep.record("comultiplication transported", ok, worst)

    ok, worst = True, 0.0
    for i in range(K.dim):
        lhs = K.counit_of({i: b.one})
        rhs = Dd.counit_of(T({i: b.one}))
        r = b.residual(lhs - rhs)
        ok, worst = ok and not r, max(worst, r)
    rep.record("counit transported", ok, worst)

    ok, worst = True, 0.0
    for i in range(K.dim):
        lhs = T(K.antipode_vec({i: b.one}))
        rhs = Dd.antipode_vec(T({i: b.one}))
        o, w = close(lhs, rhs)
        ok, worst = ok and o, max(worst, w)
    rep.record("antipode transported", ok, worst)

    ok, worst = True, 0.0
    for i in range(K.dim):
        lhs = T(K.star_vec({i: b.one}))
        rhs = Dd.star_vec(T({i: b.one}))
        o, w = close(lhs, rhs)
        ok, worst = ok and o, max(worst, w)
    rep.record("star transported", ok, worst)
    return rep


def nu_iso_check(H: KacAlgebra, star_q2: StarQ2 | None = None,
                 dr: KacAlgebra | None = None) -> AxiomReport:
    """The swap (g, f) -> (f, g) is a Kac isomorphism from the opposite of
    the function-space double dual onto the middle-commutant algebra."""
    if star_q2 is None:
        star_q2 = s_commutant_kac(H)
    if dr is None:
        dr = transported_double_dual(H)
    src = opposite_algebra(dr)
    dst = star_q2.kac
    n = H.dim
    b = H.backend

    def nu(vec: dict) -> dict:
        out = {}
        for idx, c in vec.items():
            g, f = divmod(idx, n)
            out[_pair_index(n, f, g)] = c
        return out

    rep = AxiomReport(subject=f"nu: {src.name} -> {dst.name}")

    def close(a: dict, c: dict):
        worst, ok = 0.0, True
        for kk in set(a) | set(c):
            r = b.residual(a.get(kk, b.zero) - c.get(kk, b.zero))
            if r:
                ok = False
                worst = max(worst, r)
        return ok, worst

    o, w = close(nu(src.one()), dst.one())
    rep.record("unit", o, w)

    ok, worst = True, 0.0
    for i in range(src.dim):
        for j in range(src.dim):
            lhs = nu(src.mult_row(i, j))
            rhs = dst.product(nu({i: b.one}), nu({j: b.one}))
            o, w = close(lhs, rhs)
            ok, worst = ok and o, max(worst, w)
    rep.record("multiplication", ok, worst)

    ok, worst = True, 0.0
    for i in range(src.dim):
        lhs = {}
        for (a, c), v in src.comult_row(i).items():
            na, nc = nu({a: b.one}), nu({c: b.one})
            for x, cx in na.items():
                for y, cy in nc.items():
                    key = (x, y)
                    lhs[key] = lhs.get(key, b.zero) + v * cx * cy
        rhs = dst.coproduct(nu({i: b.one}))
        o, w = close(lhs, rhs)
        ok, worst = ok and o, max(worst, w)
    rep.record("comultiplication", ok, worst)

    ok, worst = True, 0.0
    for i in range(src.dim):
        r = b.residual(src.counit_of({i: b.one}) - dst.counit_of(nu({i: b.one})))
        ok, worst = ok and not r, max(worst, r)
    rep.record("counit", ok, worst)

    ok, worst = True, 0.0
    for i in range(src.dim):
        o, w = close(nu(src.antipode_vec({i: b.one})),
                     dst.antipode_vec(nu({i: b.one})))
        ok, worst = ok and o, max(worst, w)
    rep.record("antipode", ok, worst)

    ok, worst = True, 0.0
    for i in range(src.dim):
        o, w = close(nu(src.star_vec({i: b.one})), dst.star_vec(nu({i: b.one})))
        ok, worst = ok and o, max(worst, w)
    rep.record("star", ok, worst)
    return rep
