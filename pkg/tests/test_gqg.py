import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgauss.gqg import (
    CrossedProductModel,
    FiniteGroup,
    GroupAction,
    GroupError,
    RelationError,
    builtin_group,
    c0_element,
    centrality_defect,
    commutator_extraction,
    commutator_subgroup,
    covariance_defect,
    factorized_semigroup,
    free_moment_nc,
    load_group,
    natural_action,
    noncrossing_by_erasure,
    polar_covariance,
    real_basis,
    regular_action,
    right_multiplication_defect,
    spectral_gap,
    symmetric3,
    trivial_action,
    word_vector,
)
from qgauss.partitions import enumerate_noncrossing_pair_partitions
from qgauss.qfock import ResourceGuardError

S3 = symmetric3()
T12, T13 = S3.index("213"), S3.index("321")


@pytest.fixture(scope="module")
def conj_model():
    return CrossedProductModel(natural_action(S3), "conjugation", kdim=2, cutoff=2, q=0.3)


@pytest.fixture(scope="module")
def triv_model():
    return CrossedProductModel(natural_action(S3), "trivial", kdim=2, cutoff=2, q=-0.4)


# -- groups ---------------------------------------------------------------

@pytest.mark.parametrize("name,order,comm", [("S3", 6, 3), ("D4", 8, 2), ("Z2xZ2", 4, 1), ("Z5", 5, 1)])
def test_builtin_groups(name, order, comm):
    G = builtin_group(name)
    assert G.order == order
    assert len(commutator_subgroup(G)) == comm


def test_s3_commutator_subgroup_is_a3():
    A3 = {S3.index(x) for x in ("123", "231", "312")}
    assert commutator_subgroup(S3) == A3


def test_group_table_validation():
    with pytest.raises(GroupError):
        FiniteGroup(np.array([[0, 1], [1, 1]]))
    with pytest.raises(GroupError):
        FiniteGroup(np.array([[1, 0], [0, 1]]) * 0)  # no identity
    bad = np.array([[0, 1, 2], [1, 0, 2], [2, 2, 0]])  # not a group: 1*2 = 2 = 0*2
    with pytest.raises(GroupError):
        FiniteGroup(bad)


def test_action_validation():
    with pytest.raises(GroupError):
        GroupAction(builtin_group("Z2xZ2"), np.array([[0, 1], [1, 0], [0, 1], [0, 1]]))


def test_load_group_from_json(tmp_path):
    path = tmp_path / "z3.json"
    spec = {"order": 3, "mul": [[0, 1, 2], [1, 2, 0], [2, 0, 1]], "labels": ["e", "r", "rr"],
            "action": [[0, 1, 2], [1, 2, 0], [2, 0, 1]]}
    path.write_text(json.dumps(spec))
    act = load_group(str(path))
    assert act.group.order == 3 and act.npoints == 3
    assert act.group.labels[act.group.inv[1]] == "rr"
    with pytest.raises(GroupError):
        load_group({"order": 2, "mul": [[0, 1, 2], [1, 2, 0], [2, 0, 1]]})


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5), st.integers(0, 5), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_action_is_homomorphism(g, h, a):
    act = natural_action(S3)
    a = np.array(a)
    assert np.array_equal(act.act(S3.prod(g, h), a), act.act(g, act.act(h, a)))


# -- model ----------------------------------------------------------------

def test_real_basis_is_unitary():
    B = real_basis(S3)
    assert np.allclose(B.conj().T @ B, np.eye(6))


def test_unitaries_form_a_representation(conj_model):
    m = conj_model
    for g, h in itertools.product(range(6), repeat=2):
        assert abs(m.u(g) @ m.u(h) - m.u(S3.prod(g, h))).max() < 1e-14


def test_u_implements_action(conj_model):
    m = conj_model
    a = np.array([0.5, -1.0, 2.0])
    for g in range(6):
        lhs = m.u(g) @ m.multiplier(a) @ m.u(int(S3.inv[g]))
        assert abs(lhs - m.multiplier(m.action.act(g, a))).max() < 1e-14


@pytest.mark.parametrize("fixture", ["conj_model", "triv_model"])
def test_covariance(fixture, request):
    m = request.getfixturevalue(fixture)
    for g, k in itertools.product(range(6), range(2)):
        assert covariance_defect(m, g, k) <= 1e-12


def test_conjugation_adjoint(conj_model):
    m = conj_model
    for g in range(6):
        assert m.adjoint_defect(m.generator(g), m.generator(int(S3.inv[g]))) <= 1e-12


def test_trivial_rep_identity_generator(triv_model):
    m = triv_model
    e = S3.identity
    assert abs(m.generator(e, 1) - m.fock_field(m.delta_vector(e, 1))).max() == 0


def test_semigroup_on_generators(conj_model):
    m = conj_model
    t = 0.8
    v = m.generator(T12, 0) @ m.cyclic_vector()
    assert np.allclose(m.semigroup(t) @ v, np.exp(-t) * v)


@pytest.mark.parametrize("fixture", ["conj_model", "triv_model"])
def test_semigroup_factorization(fixture, request):
    m = request.getfixturevalue(fixture)
    for t in (0.1, 1.0, 3.0):
        assert abs(factorized_semigroup(m, t) - m.semigroup(t)).max() <= 1e-10


def test_conditional_expectation_preserves_trace(conj_model):
    m = conj_model
    rng = np.random.default_rng(0)
    a = [rng.normal(size=3) for _ in range(2)]
    x = m.generator(T12, 0) @ m.multiplier(a[0]) @ m.generator(T12, 0) @ m.multiplier(a[1])
    ea = m.conditional_expectation_A(x)
    omega = m.cyclic_vector()
    tau_x = np.vdot(omega, m.gram_apply(x @ omega))
    assert np.mean(ea) == pytest.approx(tau_x)
    # E_A commutes with the semigroup
    assert np.allclose(m.conditional_expectation_A(m.semigroup(0.4) @ x), ea)


@pytest.mark.parametrize("q", [0.3, -0.5])
def test_label_constraint(q):
    m = CrossedProductModel(natural_action(S3), "conjugation", kdim=1, cutoff=4, q=q)
    rng = np.random.default_rng(5)
    for gs in itertools.product(range(6), repeat=3):
        coeffs = [rng.normal(size=3) for _ in gs]
        assert m.label_violations(word_vector(m, list(gs), None, coeffs)) == []


def test_commutator_extraction_s3():
    m = CrossedProductModel(trivial_action(S3), "trivial", kdim=2, cutoff=4, q=0.3)
    op, expected = commutator_extraction(m, T12, T13, 0, 1)
    assert abs(op - expected).max() <= 1e-10
    assert S3.commutator(T12, T13) != S3.identity
    assert abs(op - 0.3 * m.u(S3.identity)).max() > 0.1


def test_commutator_extraction_abelian_and_free():
    Z = builtin_group("Z2xZ2")
    m = CrossedProductModel(trivial_action(Z), "trivial", kdim=2, cutoff=4, q=0.6)
    op, _ = commutator_extraction(m, 1, 2, 0, 1)
    assert abs(op - 0.6 * m.u(Z.identity)).max() < 1e-10
    m0 = CrossedProductModel(trivial_action(S3), "trivial", kdim=2, cutoff=4, q=0.0)
    op0, _ = commutator_extraction(m0, T12, T13, 0, 1)
    assert op0.nnz == 0 or abs(op0).max() == 0


def test_commutator_extraction_preconditions():
    m = CrossedProductModel(trivial_action(S3), "trivial", kdim=2, cutoff=4, q=0.3)
    with pytest.raises(RelationError):
        commutator_extraction(m, T12, T13, 0, 0)
    mc = CrossedProductModel(natural_action(S3), "trivial", kdim=2, cutoff=4, q=0.3, max_coords=10**6)
    with pytest.raises(RelationError):
        commutator_extraction(mc, T12, T13, 0, 1)


def test_c0_elements_commute_with_A(conj_model):
    m = conj_model
    x = c0_element(m, [T12, T12], [0, 1])
    assert centrality_defect(m, x) <= 1e-10
    assert abs(c0_element(m, []) - m.u(S3.identity)).max() == 0
    with pytest.raises(RelationError):
        c0_element(m, [T12, T13, T12, T13])  # product is a 3-cycle, not e


def test_plain_generator_does_not_commute(conj_model):
    m = conj_model
    assert centrality_defect(m, m.generator(T12, 0)) > 0.1


def test_polar_covariance():
    m = CrossedProductModel(natural_action(S3), "conjugation", kdim=1, cutoff=1, q=0.3)
    _, _, report = polar_covariance(m, T12)
    assert report["pass"], report
    assert report["reconstruction"] < 1e-10


def test_erasure_matches_noncrossing():
    for m in (0, 2, 4, 6, 8):
        got = {p.blocks for p in noncrossing_by_erasure(m)}
        assert got == {p.blocks for p in enumerate_noncrossing_pair_partitions(m)}


@pytest.fixture(scope="module")
def free_model():
    return CrossedProductModel(natural_action(S3), "trivial", kdim=1, cutoff=2, q=0.0)


def test_free_rule_examples(free_model):
    m = free_model
    one = np.ones(3)
    assert np.allclose(free_moment_nc(m, [T12, T12]), one)
    assert np.allclose(free_moment_nc(m, [T12]), 0)
    assert np.allclose(free_moment_nc(m, [T12, T13]), 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=4), st.integers(0, 2**31))
def test_free_rule_matches_matrix_model(free_model, gs, seed):
    m = free_model
    rng = np.random.default_rng(seed)
    coeffs = [rng.normal(size=3) for _ in gs]
    v = word_vector(m, gs, None, coeffs)
    ea = np.sqrt(3) * v.reshape(m.nx, m.nf, m.ng)[:, 0, S3.identity]
    assert np.abs(ea - free_moment_nc(m, gs, None, coeffs)).max() <= 1e-10


def test_free_rule_domain(triv_model):
    with pytest.raises(RelationError):
        free_moment_nc(triv_model, [T12, T12])


def test_model_guard():
    with pytest.raises(ResourceGuardError):
        CrossedProductModel(regular_action(S3), "trivial", kdim=2, cutoff=4, q=0.1, max_coords=50_000)


# -- spectral gap ---------------------------------------------------------

def test_gap_normalization_and_right_multiplication():
    rep = spectral_gap(2, 0.3, cutoff=2)
    assert max(abs(t) for t in rep.trace_x) < 1e-12
    assert right_multiplication_defect(2, 0.3) < 1e-12


def test_single_generator_gap_closes():
    # x_g Omega is orthogonal to Omega and commutes with x_g
    assert abs(spectral_gap(1, 0.0, cutoff=3).lam_min) < 1e-9


@pytest.mark.parametrize("q", [0.0, 0.3])
def test_gap_positive_and_growing(q):
    lam2 = spectral_gap(2, q, cutoff=2).lam_min
    lam3 = spectral_gap(3, q, cutoff=2).lam_min
    assert 0 < lam2 < lam3
