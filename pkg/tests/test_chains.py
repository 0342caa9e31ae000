"""Crossed products, chains, traces, flips, split embeddings."""

import itertools

import pytest

from kachain.backend import vadd_into
from kachain.chains import (
    TensorPairAlgebra,
    chain_algebra,
    chain_trace,
    conditional_expectation_from_trace,
    dual_action,
    flip_prime,
    psi_embedding,
    regular_trace,
    smash_product,
    verify_action,
)
from kachain.errors import ParityMismatch
from kachain.hopf import builtin_algebra, dual
from kachain.linalg import algebra_product
from util import elements_equal


@pytest.fixture(scope="module")
def Z2():
    return builtin_algebra("Z2")


@pytest.fixture(scope="module")
def Z3():
    return builtin_algebra("Z3")


def test_dual_action_axioms(Z2, Z3):
    for H in (Z2, Z3):
        actor, target, rows = dual_action(H)
        rep = verify_action(actor, target, rows)
        assert rep.ok, str(rep)


def test_dual_action_values(Z2):
    b = Z2.backend
    actor, target, rows = dual_action(Z2)
    # eps . x = x: eps has coordinates (1, 1) in the dual basis
    from kachain.chains import apply_action
    eps = actor.one()
    assert apply_action(rows, eps, {1: b.one}, b) == {1: b.one}
    # p_0 . g_1 = 0 and p_1 . g_1 = g_1
    assert rows(0, 1) == {}
    assert rows(1, 1) == {1: b.one}
    # f . 1 = f(1) 1
    assert rows(1, 0) == {}
    assert rows(0, 0) == {0: b.one}


def test_smash_product_values(Z2):
    b = Z2.backend
    Hd = dual(Z2)
    actor, target, rows = dual_action(Hd)   # H acting on H*
    assert actor is Z2
    A = smash_product(Hd, Z2, rows)
    # (a x| 1)(b x| 1) = ab x| 1
    for a in range(2):
        for c in range(2):
            got = A.mult_row(A.join(a, 0), A.join(c, 0))
            want = {A.join(k, 0): v for k, v in Hd.mult_row(a, c).items()}
            assert got == want
    # group-like: (1 x| x)(1 x| y) = 1 x| xy, with 1_{H*} = eps = p_0 + p_1
    one_a = Hd.one()
    lhs = algebra_product(A, A.tensor_elem(one_a, {1: b.one}),
                          A.tensor_elem(one_a, {1: b.one}))
    assert elements_equal(lhs, A.tensor_elem(one_a, {0: b.one}), b)
    # (p_0 x| g_1)(p_1 x| g_0) = p_0 x| g_1
    got = A.mult_row(A.join(0, 1), A.join(1, 0))
    assert got == {A.join(0, 1): b.one}


def test_chain_dimensions(Z2):
    assert chain_algebra(1, 0, Z2).dim == 1
    assert chain_algebra(1, 2, Z2).dim == 4
    assert chain_algebra(0, 2, Z2).dim == 8
    assert chain_algebra(-2, 2, Z2).dim == 32


def test_chain_associativity_spot_checks(Z2):
    ch = chain_algebra(0, 2, Z2)
    b = ch.backend
    import random
    rng = random.Random(7)
    for _ in range(60):
        i, j, k = (rng.randrange(ch.dim) for _ in range(3))
        left = algebra_product(ch, ch.mult_row(i, j), {k: b.one})
        right = algebra_product(ch, {i: b.one}, ch.mult_row(j, k))
        assert elements_equal(left, right, b)
    one = ch.one()
    for i in range(ch.dim):
        assert elements_equal(algebra_product(ch, one, {i: b.one}), {i: b.one}, b)
        assert elements_equal(algebra_product(ch, {i: b.one}, one), {i: b.one}, b)


def test_chain_trace_values(Z2):
    ch = chain_algebra(1, 2, Z2)
    b = ch.backend
    assert chain_trace(ch, ch.one()) == b.one
    # tr(x x| f) = phi(x) f(h) over the tensor basis
    for x in range(2):
        for f in range(2):
            idx = ch.index((x, f))
            want = Z2.phi.get(x, b.zero) * Z2.haar.get(f, b.zero)
            assert chain_trace(ch, {idx: b.one}) == want


def test_chain_trace_is_tracial(Z2):
    ch = chain_algebra(1, 2, Z2)
    b = ch.backend
    for i in range(ch.dim):
        for j in range(ch.dim):
            lhs = ch.trace_of(ch.mult_row(i, j))
            rhs = ch.trace_of(ch.mult_row(j, i))
            assert b.is_zero(lhs - rhs)


def test_chain_trace_faithful_positive(Z2):
    ch = chain_algebra(1, 2, Z2)
    b = ch.backend
    import numpy as np
    gram = np.zeros((ch.dim, ch.dim), dtype=complex)
    for i in range(ch.dim):
        si = ch.star_vec({i: b.one})
        for j in range(ch.dim):
            val = ch.trace_of(algebra_product(ch, si, {j: b.one}))
            gram[i, j] = b.to_complex(val)
    evals = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
    assert evals.min() > 1e-12


def test_star_involutive_and_antimultiplicative(Z2):
    ch = chain_algebra(0, 2, Z2)
    b = ch.backend
    for i in range(ch.dim):
        assert elements_equal(ch.star_vec(ch.star_vec({i: b.one})), {i: b.one}, b)
    for i in range(6):
        for j in range(6):
            lhs = ch.star_vec(ch.mult_row(i, j))
            rhs = algebra_product(ch, ch.star_vec({j: b.one}), ch.star_vec({i: b.one}))
            assert elements_equal(lhs, rhs, b)


def test_flip_prime(Z2):
    src = chain_algebra(1, 2, Z2)
    dst = chain_algebra(0, 1, Z2)
    b = src.backend
    assert elements_equal(flip_prime(src, src.one(), dst), dst.one(), b)
    # x x| f -> Sf x| Sx
    for x in range(2):
        for f in range(2):
            got = flip_prime(src, {src.index((x, f)): b.one}, dst)
            want_digits = (f, x)  # Z2 antipode is the identity permutation here
            sf = dual(Z2).antipode[f]
            sx = Z2.antipode[x]
            want = {}
            for a, va in sf.items():
                for c, vc in sx.items():
                    want[dst.index((a, c))] = va * vc
            assert elements_equal(got, want, b)
    # anti-multiplicativity over every basis pair
    for i in range(src.dim):
        for j in range(src.dim):
            lhs = flip_prime(src, src.mult_row(i, j), dst)
            rhs = algebra_product(dst, flip_prime(src, {j: b.one}, dst),
                                  flip_prime(src, {i: b.one}, dst))
            assert elements_equal(lhs, rhs, b)
    # star compatibility
    for i in range(src.dim):
        lhs = flip_prime(src, src.star_vec({i: b.one}), dst)
        rhs = dst.star_vec(flip_prime(src, {i: b.one}, dst))
        assert elements_equal(lhs, rhs, b)


def test_flip_parity_guard(Z2):
    src = chain_algebra(1, 2, Z2)
    with pytest.raises(ParityMismatch):
        flip_prime(src, src.one(), chain_algebra(1, 2, Z2))


def test_regular_trace(Z2):
    # regular trace of 1 in A(H)_k is n^k
    for k in (1, 2, 3):
        ch = chain_algebra(1, k, Z2)
        assert regular_trace(ch, ch.one()) == Z2.backend.scalar(2 ** k)
    # on C[Z2] itself, the nontrivial group element has regular trace 0
    assert regular_trace(Z2, {1: Z2.backend.one},
                         check_chain_identity=False) == Z2.backend.zero
    # scaled-chain-trace identity over every basis element of A(H)_3
    ch = chain_algebra(1, 3, Z2)
    b = ch.backend
    for i in range(ch.dim):
        lhs = regular_trace(ch, {i: b.one})  # raises if the identity fails
        assert lhs == b.scalar(8) * ch.trace_of({i: b.one})


def test_slot_embed(Z2):
    ch = chain_algebra(1, 3, Z2)
    b = ch.backend
    assert elements_equal(ch.slot_embed({}), ch.one(), b)
    emb = chain_algebra(1, 2, Z2)
    # embedding of a sub-window is multiplicative
    sub = chain_algebra(1, 2, Z2)
    for i in range(sub.dim):
        for j in range(sub.dim):
            lhs = ch.embed_element(sub, sub.mult_row(i, j))
            rhs = algebra_product(ch, ch.embed_element(sub, {i: b.one}),
                                  ch.embed_element(sub, {j: b.one}))
            assert elements_equal(lhs, rhs, b)
    # embed Delta(x) into slots {1, 3} equals the product of the two
    # single-slot embeddings of the legs
    for x in range(2):
        legs = Z2.comult_row(x)
        emb2 = ch.embed_tensor([1, 3], {k: v for k, v in legs.items()})
        direct = {}
        for (x1, x2), v in legs.items():
            p = algebra_product(ch, ch.slot_embed({1: {x1: b.one}}),
                                ch.slot_embed({3: {x2: b.one}}))
            vadd_into(direct, p, v, b)
        assert elements_equal(emb2, direct, b)


def test_restrict_inverts_embed(Z2):
    ch = chain_algebra(0, 3, Z2)
    sub = chain_algebra(1, 2, Z2)
    b = ch.backend
    for i in range(sub.dim):
        emb = ch.embed_element(sub, {i: b.one})
        back = ch.restrict_to(sub, emb)
        assert elements_equal(back, {i: b.one}, b)


def test_psi_embedding_is_homomorphism(Z2):
    psi = psi_embedding(1, 0, 1, Z2)
    b = Z2.backend
    src = psi.source
    assert elements_equal(psi.apply(src.one()), psi.target.one(), b)
    for i in range(src.dim):
        for j in range(src.dim):
            lhs = psi.apply(src.mult_row(i, j))
            rhs = algebra_product(psi.target, psi.apply({i: b.one}), psi.apply({j: b.one}))
            assert elements_equal(lhs, rhs, b)
    # unital *-homomorphism
    for i in range(src.dim):
        lhs = psi.apply(src.star_vec({i: b.one}))
        rhs = psi.target.star_vec(psi.apply({i: b.one}))
        assert elements_equal(lhs, rhs, b)


def test_psi_trace_compatibility(Z2):
    for (l, s, p) in [(1, 0, 1), (1, 1, 1), (2, 0, 1), (1, 0, 2)]:
        psi = psi_embedding(l, s, p, Z2)
        b = Z2.backend
        src = psi.source
        for i in range(src.dim):
            lhs = psi.target.trace_of(psi.apply({i: b.one}))
            rhs = src.trace_of({i: b.one})
            assert b.is_zero(lhs - rhs), (l, s, p, i)


def test_psi_of_unit_slot_minus_one(Z2):
    # when the slot -1 entry is the unit, the split legs are 1 (x) 1
    psi = psi_embedding(1, 0, 1, Z2)
    b = Z2.backend
    src = psi.source
    vec = src.slot_embed({0: {1: b.one}})  # unit at slot -1 and 1
    img = psi.apply(vec)
    want = psi.target.tensor(psi.left.one(),
                             psi.right.slot_embed({2: {1: b.one}}))
    assert elements_equal(img, want, b)


def test_conditional_expectation_basics(Z2):
    ch = chain_algebra(1, 2, Z2)
    b = ch.backend
    # onto the scalars: E(x) = tr(x) 1
    E = conditional_expectation_from_trace(ch, [ch.one()])
    for i in range(ch.dim):
        got = E.apply({i: b.one})
        want = {k: ch.trace_of({i: b.one}) * v for k, v in ch.one().items()}
        assert elements_equal(got, want, b)
    # onto a unital subalgebra: fixes the subalgebra, preserves the trace,
    # and is a bimodule map
    sub = chain_algebra(1, 1, Z2)
    vectors = [ch.embed_element(sub, {i: b.one}) for i in range(sub.dim)]
    E2 = conditional_expectation_from_trace(ch, vectors)
    for v in vectors:
        assert elements_equal(E2.apply(v), v, b)
    for i in range(ch.dim):
        x = {i: b.one}
        assert b.is_zero(ch.trace_of(E2.apply(x)) - ch.trace_of(x))
        for a in vectors:
            for c in vectors:
                lhs = E2.apply(algebra_product(ch, algebra_product(ch, a, x), c))
                rhs = algebra_product(ch, algebra_product(ch, a, E2.apply(x)), c)
                assert elements_equal(lhs, rhs, b)


def test_tensor_pair_algebra(Z2):
    A = chain_algebra(-1, -1, Z2)
    B = chain_algebra(1, 3, Z2)
    P = TensorPairAlgebra(A, B)
    b = P.backend
    assert P.dim == 16
    one = P.one()
    for i in range(P.dim):
        assert elements_equal(algebra_product(P, one, {i: b.one}), {i: b.one}, b)
    # traces multiply
    for i in range(A.dim):
        for j in range(B.dim):
            idx = P.join(i, j)
            want = A.trace_of({i: b.one}) * B.trace_of({j: b.one})
            assert b.is_zero(P.trace_of({idx: b.one}) - want)
