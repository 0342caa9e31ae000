"""Commutant solvers, Q towers, basic constructions, depth two."""

import pytest

from kachain.backend import SpanTracker, spans_equal, vadd_into
from kachain.chains import chain_algebra, psi_embedding, conditional_expectation_from_trace
from kachain.commutants import (
    InclusionData,
    averaging_fixed_space,
    commutant_basis,
    depth_two_check,
    embed_q_tilde,
    gns_basic_construction,
    gns_for_q_tower,
    markov_check_concrete,
    markov_check_gns,
    ops_mult,
    q12_space,
    q2_parametrized_basis,
    q_space,
    q_tilde_space,
    q_tower,
    s_space,
    transported_jones_projection,
    verify_basic_construction,
    window_commutant,
)
from kachain.hopf import builtin_algebra, to_float
from kachain.linalg import OperatorAlgebra, SubalgebraView, algebra_product
from util import elements_equal


@pytest.fixture(scope="module")
def Z2():
    return builtin_algebra("Z2")


@pytest.fixture(scope="module")
def Z3():
    return builtin_algebra("Z3")


def test_commutant_with_unit_constraint_is_everything(Z2):
    ch = chain_algebra(1, 2, Z2)
    basis = commutant_basis(ch, [ch.one()])
    assert len(basis) == ch.dim


def test_window_commutants(Z2):
    # all windows of length <= 5 inside [0, 4] and [1, 5]
    for (a, bb) in [(0, 3), (0, 4), (1, 4), (1, 5), (-1, 3)]:
        for p in range(a + 1, bb - 1):
            window_commutant(a, p, bb, Z2)


def test_double_commutant_recovers_window(Z2):
    a, p, bb = 0, 1, 4
    ch = chain_algebra(a, bb, Z2)
    b = Z2.backend
    solved, _ = window_commutant(a, p, bb, Z2)
    second = commutant_basis(ch, solved)
    sub = chain_algebra(a, p, Z2)
    expected = [ch.embed_element(sub, {i: b.one}) for i in range(sub.dim)]
    assert spans_equal(second, expected, ch.dim, b)


def test_s_space_dimensions(Z2, Z3):
    assert s_space(Z2).dim == 4
    assert s_space(Z3).dim == 9


def test_q_dimension_table(Z2, Z3):
    for H in (Z2, Z3):
        n = H.dim
        for m in (3, 4):
            assert q_space(m, 1, H).dim == n ** (m - 2)
            assert q_space(m, 2, H).dim == n ** (2 * (m - 1))


def test_q1_is_subchain(Z2):
    # level-1 space equals the window one slot short of the constraint
    q1 = q_space(3, 1, Z2)
    b = Z2.backend
    sub = chain_algebra(1, 1, Z2)
    expected = [q1.ambient.embed_element(sub, {i: b.one}) for i in range(sub.dim)]
    assert spans_equal(q1.vectors, expected, q1.ambient.dim, b)


def test_q2_parametrized_equals_solved(Z2):
    q2 = q_space(3, 2, Z2)
    cols = q2_parametrized_basis(3, Z2)
    assert spans_equal(q2.vectors, cols, q2.ambient.dim, Z2.backend)


def test_averaging_operator(Z2):
    for level in (1, 2, 3):
        fixed, info = averaging_fixed_space(3, level, Z2)
        assert info["dimension"] == q_space(3, level, Z2).dim


def test_q12(Z2, Z3):
    for H, m in [(Z2, 3), (Z2, 4), (Z3, 3)]:
        vectors, sub, ambient = q12_space(m, H)
        assert len(vectors) == H.dim ** (m - 2)
        # contains the unit
        tr = SpanTracker(ambient.dim, H.backend)
        for v in vectors:
            tr.add(v)
        assert tr.contains(ambient.one())
        # sits inside the level-2 space
        q2 = q_space(m, 2, H)
        tr2 = SpanTracker(ambient.dim, H.backend)
        for v in q2.vectors:
            tr2.add(v)
        for v in vectors:
            assert tr2.contains(v)


def test_q_tilde_embedding(Z2):
    b = Z2.backend
    v1, amb1, _ = q_tilde_space(3, 1, Z2)
    assert len(v1) == 2
    v2, amb2, _ = q_tilde_space(3, 2, Z2)
    # embedding is unital and multiplicative on the level-1 space
    one_img = embed_q_tilde(3, 1, Z2, amb1.one())
    assert elements_equal(one_img, amb2.one(), b)
    view = SubalgebraView(amb1, v1)
    for i in range(len(v1)):
        for j in range(len(v1)):
            prod = algebra_product(amb1, v1[i], v1[j])
            lhs = embed_q_tilde(3, 1, Z2, prod)
            rhs = algebra_product(amb2, embed_q_tilde(3, 1, Z2, v1[i]),
                                  embed_q_tilde(3, 1, Z2, v1[j]))
            assert elements_equal(lhs, rhs, b)
    # image lies in the level-2 space
    tr = SpanTracker(amb2.dim, b)
    for v in v2:
        tr.add(v)
    for v in v1:
        assert tr.contains(embed_q_tilde(3, 1, Z2, v))


def test_gns_trivial_inclusion(Z2):
    # A = B: e is the identity and the construction returns B itself
    ch = chain_algebra(1, 2, Z2)
    b = Z2.backend
    vectors = [{i: b.one} for i in range(ch.dim)]
    gns = gns_basic_construction(InclusionData(algebra=ch, sub_vectors=vectors))
    ident = gns.operators.one()
    assert elements_equal(gns.e, ident, b)
    assert gns.dim == ch.dim


def test_gns_scalars_in_m2(Z2):
    # C inside M_2 gives the full 16-dimensional algebra End(M_2)
    b = Z2.backend
    m2 = OperatorAlgebra(2, b)
    m2.trace_of = lambda vec: sum(
        (v for idx, v in vec.items() if idx % 3 == 0), b.zero) / b.scalar(2)
    incl = InclusionData(algebra=m2, sub_vectors=[m2.one()])
    gns = gns_basic_construction(incl)
    assert gns.dim == 16
    # e is the rank-one projection onto the normalised identity
    assert markov_check_gns(gns, 4)


def test_gns_q_tower_m3(Z2):
    gns, q1, q2, q2view = gns_for_q_tower(3, Z2)
    q3 = q_space(3, 3, Z2)
    assert gns.dim == q3.dim == 128
    # Jones relations inside the abstract construction
    b = Z2.backend
    e = gns.e
    assert elements_equal(ops_mult(gns.operators, e, e, b), e, b)
    # e implements the conditional expectation: e lam(b) e = lam(E(b)) e
    for i in range(q2view.dim):
        lhs = ops_mult(gns.operators, e,
                       ops_mult(gns.operators, gns.lam[i], e, b), b)
        evec = gns.expectation.apply({i: b.one})
        rhs = {}
        for j, c in evec.items():
            vadd_into(rhs, ops_mult(gns.operators, gns.lam[j], e, b), c, b)
        assert elements_equal(lhs, rhs, b)


def test_markov_q_tower(Z2):
    gns, *_ = gns_for_q_tower(3, Z2)
    assert markov_check_gns(gns, 8)          # modulus n^m
    assert not markov_check_gns(gns, 4)      # negative control


def test_verify_basic_construction_trivial(Z2):
    ch = chain_algebra(1, 2, Z2)
    b = Z2.backend
    vectors = [{i: b.one} for i in range(ch.dim)]
    rep = verify_basic_construction(ch, vectors, vectors, ch.one())
    assert rep.ok


def test_psi_triple_is_basic_construction(Z2):
    # the split-embedding triple at (l, s, p) = (1, 0, 1), with the
    # implementing projection recovered from the trace data
    b = Z2.backend
    psi = psi_embedding(1, 0, 1, Z2)
    big = chain_algebra(-1, 3, Z2)
    # embed the middle algebra into the big chain
    left, right = psi.left, psi.right
    b_vectors = []
    for i in range(left.dim):
        for j in range(right.dim):
            vec = algebra_product(
                big,
                big.embed_element(left, {i: b.one}),
                big.embed_element(right, {j: b.one}))
            b_vectors.append(vec)
    a_vectors = []
    for i in range(psi.source.dim):
        img = psi.apply({i: b.one})
        amb: dict = {}
        for idx, c in img.items():
            li, ri = psi.target.split(idx)
            piece = algebra_product(
                big,
                big.embed_element(left, {li: b.one}),
                big.embed_element(right, {ri: b.one}))
            vadd_into(amb, piece, c, b)
        a_vectors.append(amb)
    f = transported_jones_projection(big, a_vectors, b_vectors, modulus=4)
    rep = verify_basic_construction(big, a_vectors, b_vectors, f)
    assert rep.condition_i and rep.condition_ii and rep.condition_iii
    assert markov_check_concrete(big, b_vectors, f, 4)


def test_depth_two_m3_exact(Z2):
    rep = depth_two_check(3, Z2, seed=3)
    assert rep.dims == {"q1": 2, "q2": 16, "q3": 128, "gns": 128}
    assert rep.depth_one_excluded and rep.gns_dim_matches
    assert rep.blocks_c == rep.blocks_q3 == [8, 8]
    assert rep.inclusion_match and rep.markov_ok
    assert rep.ok


@pytest.mark.slow
def test_depth_two_m4_float(Z2):
    rep = depth_two_check(4, to_float(Z2), seed=3)
    assert rep.dims == {"q1": 4, "q2": 64, "q3": 1024, "gns": 1024}
    assert rep.blocks_c == rep.blocks_q3 == [32]
    assert rep.ok
