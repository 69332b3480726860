from itertools import permutations, product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgauss.qfock import (
    FockSpace,
    ResourceGuardError,
    annihilation,
    compress,
    conditional_expectation,
    contraction_by_dilation,
    creation,
    dict_field,
    dict_norm_sq,
    dilation,
    field,
    field_moment,
    flip,
    gram,
    moment_combinatorial,
    number_projection,
    number_semigroup,
    reversal,
    rotation_dilation,
    second_quantize_contraction,
    second_quantize_orthogonal,
    vacuum_trace,
    word_q_inner,
)


def my_gram(n, d, q):
    """Direct permutation sum, with inversions counted here."""
    words = list(product(range(d), repeat=n))
    out = np.zeros((len(words), len(words)))
    for p in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
        for a, u in enumerate(words):
            for b, v in enumerate(words):
                if all(u[p[i]] == v[i] for i in range(n)):
                    out[a, b] += q**inv
    return out


def random_orthogonal(rng, d):
    qm, r = np.linalg.qr(rng.normal(size=(d, d)))
    return qm * np.sign(np.diag(r))


def test_basis_sizes():
    s = FockSpace(3, 3, 0.2)
    assert s.sizes == [1, 3, 9, 27]
    assert s.size == 40
    assert s.degree_slice(2) == slice(4, 13)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=4))
def test_index_roundtrip(word):
    s = FockSpace(3, 4, 0.0)
    assert s.word(s.index(tuple(word))) == tuple(word)


def test_creation_and_truncation():
    s = FockSpace(2, 2, 0.4)
    e0, e1 = np.eye(2)
    v = creation(s, e0) @ s.basis_vector((1,))
    assert np.array_equal(v, s.basis_vector((0, 1)))
    assert not np.any(creation(s, e1) @ s.basis_vector((0, 0)))


def test_annihilation_weights():
    q = 0.3
    s = FockSpace(2, 3, q)
    e0 = np.eye(2)[0]
    v = annihilation(s, e0) @ s.basis_vector((1, 0, 0))
    want = q * s.basis_vector((1, 0)) + q**2 * s.basis_vector((1, 0))
    assert np.allclose(v, want)


@pytest.mark.parametrize("q", [0.3, -0.7, 0.0, 0.95])
@pytest.mark.parametrize("d,n", [(2, 3), (2, 4), (3, 3)])
def test_gram_matches_permutation_sum(q, d, n):
    assert np.allclose(gram(n, d, q), my_gram(n, d, q), atol=1e-12)


@pytest.mark.parametrize("q", [0.9, -0.9])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_gram_positive(q, d):
    s = FockSpace(d, 5, q)
    for n in range(6):
        assert np.linalg.eigvalsh(s.gram(n)).min() >= -1e-12


def test_gram_degenerate_at_minus_one_limit():
    # antisymmetric words survive only without repeated letters
    s = FockSpace(2, 3, -1.0 + 1e-9)
    assert np.linalg.eigvalsh(s.gram(3)).max() < 1e-6


@pytest.mark.parametrize("q", [0.7, -0.7])
def test_q_commutation(q):
    s = FockSpace(3, 4, q)
    rng = np.random.default_rng(1)
    for i, j in product(range(3), repeat=2):
        f, g = np.eye(3)[i], np.eye(3)[j]
        op = annihilation(s, f) @ creation(s, g) - (creation(s, g) @ annihilation(s, f)) * q
        xi = rng.normal(size=s.size)
        xi[s.degree_slice(4)] = 0
        assert np.abs(op @ xi - (i == j) * xi).max() <= 1e-12


@pytest.mark.parametrize("q", [0.5, -0.4])
def test_creation_adjoint_is_annihilation(q):
    s = FockSpace(2, 3, q)
    h = np.array([0.6, -1.1])
    assert creation(s, h).adjoint_defect(annihilation(s, h)) < 1e-12
    assert np.abs((creation(s, h).adjoint().mat - annihilation(s, h).mat)).max() < 1e-10


def test_complex_field_adjoint_conjugates():
    s = FockSpace(2, 3, 0.3)
    h = np.array([1 + 2j, -0.5j])
    assert field(s, h).adjoint_defect(field(s, h.conj())) < 1e-12
    assert field(s, h.real).is_self_adjoint()


@pytest.mark.parametrize("q", [-0.5, 0.0, 0.5])
def test_moments_match_pairings(q):
    s = FockSpace(2, 3, q)
    basis = np.eye(2)
    for m in range(1, 7):
        for w in product(range(2), repeat=m):
            hs = [basis[i] for i in w]
            assert abs(field_moment(s, hs) - moment_combinatorial(hs, q)) <= 1e-10


def test_catalan_and_fourth_moment():
    h = np.array([1.0])
    for k, cat in zip(range(1, 5), [1, 2, 5, 14]):
        s = FockSpace(1, k, 0.0)
        assert vacuum_trace(field(s, h) ** (2 * k)) == pytest.approx(cat, abs=1e-10)
    for q in (-0.3, 0.5):
        s = FockSpace(1, 3, q)
        assert vacuum_trace(field(s, h) ** 4) == pytest.approx(2 + q, abs=1e-10)
        assert vacuum_trace(field(s, h) ** 6) == pytest.approx(5 + 6 * q + 3 * q**2 + q**3, abs=1e-10)


def test_nonorthogonal_pair_moment():
    h, k = np.array([1.0, 0.0]), np.array([0.6, 0.8])
    s = FockSpace(2, 2, 0.4)
    # nested and adjacent pairings give (h,k)^2 each, the crossing one q (h,h)(k,k)
    want = 0.6 * 0.6 + 1 * 1 * 0.4 + 0.6 * 0.6
    assert field_moment(s, [h, k, h, k]) == pytest.approx(want)


def test_bad_q_rejected():
    with pytest.raises(ValueError):
        FockSpace(2, 2, 1.5)


def test_size_guard():
    with pytest.raises(ResourceGuardError):
        FockSpace(4, 6, 0.1, max_size=1000)


def test_functoriality():
    rng = np.random.default_rng(7)
    s = FockSpace(3, 3, 0.6)
    for _ in range(20):
        o1, o2 = random_orthogonal(rng, 3), random_orthogonal(rng, 3)
        lhs = second_quantize_orthogonal(s, o1 @ o2).mat
        rhs = second_quantize_orthogonal(s, o1).mat @ second_quantize_orthogonal(s, o2).mat
        assert abs(lhs - rhs).max() <= 1e-10


def test_second_quantization_is_q_unitary():
    rng = np.random.default_rng(3)
    s = FockSpace(2, 3, -0.5)
    o = random_orthogonal(rng, 2)
    U = second_quantize_orthogonal(s, o)
    assert U.adjoint_defect(second_quantize_orthogonal(s, o.T)) < 1e-12


def test_second_quantization_intertwines_fields():
    rng = np.random.default_rng(4)
    s = FockSpace(2, 3, 0.3)
    o = random_orthogonal(rng, 2)
    h = rng.normal(size=2)
    U = second_quantize_orthogonal(s, o)
    lhs = U @ field(s, h) @ second_quantize_orthogonal(s, o.T)
    # exact on degrees below the top, where truncation does not bite
    top = s.degree_slice(3)
    diff = (lhs.mat - field(s, o @ h).mat).toarray()
    diff[:, top] = 0
    diff[top, :] = 0
    assert np.abs(diff).max() < 1e-12


def test_rejects_non_orthogonal():
    s = FockSpace(2, 2, 0.0)
    with pytest.raises(ValueError):
        second_quantize_orthogonal(s, np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        second_quantize_contraction(s, 2 * np.eye(2))


@pytest.mark.parametrize("t", [0.05, 0.5, 1.3, 4.0])
def test_semigroup_factorizes_through_rotation(t):
    small = FockSpace(2, 3, 0.4)
    big = FockSpace(4, 3, 0.4)
    theta = np.arccos(np.exp(-t))
    lhs = compress(rotation_dilation(big, theta), small)
    assert abs(lhs.mat - number_semigroup(small, t).mat).max() <= 1e-10


def test_flip_fixes_rotation_sign():
    big = FockSpace(2, 2, 0.1)
    a = rotation_dilation(big, 0.7).mat
    b = rotation_dilation(big, -0.7).mat
    f = flip(big).mat
    assert abs(f @ a @ f - b).max() < 1e-14


def test_dilation_is_orthogonal_and_compresses():
    rng = np.random.default_rng(5)
    v = rng.normal(size=(2, 2))
    v /= 1.3 * np.linalg.norm(v, 2)
    o = dilation(v)
    assert np.allclose(o @ o.T, np.eye(4))
    s = FockSpace(2, 3, 0.2)
    assert abs(contraction_by_dilation(s, v).mat - second_quantize_contraction(s, v).mat).max() < 1e-10


def test_conditional_expectation_properties():
    s = FockSpace(3, 3, 0.5)
    P = np.diag([1.0, 1.0, 0.0])
    E = conditional_expectation(s, P)
    assert abs(E.mat @ E.mat - E.mat).max() < 1e-14
    assert E.is_self_adjoint()
    assert E.mat @ s.vacuum() @ s.vacuum() == 1.0


def test_number_projections_sum_to_identity():
    s = FockSpace(2, 3, 0.0)
    total = sum((number_projection(s, n).mat for n in range(4)), start=0 * s.identity().mat)
    assert abs(total - s.identity().mat).max() == 0


def test_reversal_is_involution_and_q_unitary():
    s = FockSpace(2, 3, 0.45)
    J = s.operator(reversal(s))
    assert abs((J @ J).mat - s.identity().mat).max() == 0
    assert J.adjoint_defect(J) < 1e-12


def test_dict_vectors_match_matrices():
    q = 0.35
    s = FockSpace(2, 4, q)
    vec = {(): 1.0}
    dense = s.vacuum()
    for letter in (0, 1, 1, 0):
        vec = dict_field(vec, letter, q)
        dense = field(s, np.eye(2)[letter]) @ dense
    back = np.zeros(s.size)
    for w, c in vec.items():
        back[s.index(w)] += c
    assert np.allclose(back, dense)
    assert dict_norm_sq(vec, q) == pytest.approx(s.norm(dense) ** 2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=0, max_size=4), st.floats(-0.9, 0.9))
def test_word_inner_matches_gram(word, q):
    n = len(word)
    s = FockSpace(2, n, q)
    G = s.gram(n)
    i = s.index(tuple(word)) - s.offsets[n]
    for j, other in enumerate(s.letters(n)):
        assert word_q_inner(tuple(word), tuple(int(x) for x in other), q) == pytest.approx(G[i, j], abs=1e-12)
