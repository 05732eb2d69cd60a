import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beliefcontrol.generators import GraphSpec, random_desired, random_topology, random_weights
from beliefcontrol.limits import StateSpace, compute_W, limiting_beliefs
from beliefcontrol.network import NetworkTopology, build_C
from beliefcontrol.tsr import (InfeasibleDesign, check_attainable, compute_V, design_TSR, solution_family,
                               uniform_precheck)

from cases import desired, network
from oracles import column_feasible

UNIFORM = np.array([[0.2] * 3, [0.8] * 3])


@pytest.fixture(scope="module")
def ex1():
    return network("eight_agent_uniform.json")


@pytest.fixture(scope="module")
def ex2():
    return network("eight_agent_partial.json")


def test_V_nonuniform(ex1):
    V = compute_V([[0.8, 0.7, 0.75], [0.2, 0.3, 0.25]], ex1.A.T_RR)
    np.testing.assert_allclose(V[:, 0], [0.495, 0.105], atol=1e-12)
    np.testing.assert_allclose(V[:, 1], [0.17, 0.13], atol=1e-12)
    # each column of V sums to one minus the receiving weight of that agent
    np.testing.assert_allclose(V.sum(axis=0), 1 - ex1.A.T_RR.sum(axis=0), atol=1e-12)


def test_V_uniform_is_scaled_target(ex1):
    V = compute_V(UNIFORM, ex1.A.T_RR)
    np.testing.assert_allclose(V[:, 0], 0.6 * UNIFORM[:, 0], atol=1e-12)


def test_V_without_receiving_weights():
    Q = np.array([[0.3, 0.9], [0.7, 0.1]])
    np.testing.assert_array_equal(compute_V(Q, np.zeros((2, 2))), Q)


def test_dispersed_target_is_not_attainable(ex1):
    Q = desired("eight_agent_dispersed_q.csv", ex1)
    report = check_attainable(compute_V(Q, ex1.A.T_RR), build_C(ex1.topology), agent_ids=ex1.topology.receiving_ids)
    assert not report.attainable
    (v,) = report.violations
    assert (v.agent, v.subnet, v.kind) == (7, 1, "negative")
    assert v.value == pytest.approx(-0.14, abs=1e-12)


def test_partial_target_is_attainable(ex2):
    Q = desired("eight_agent_partial_q.csv", ex2)
    V = compute_V(Q, ex2.A.T_RR)
    np.testing.assert_allclose(V[:, 2], [0.3, 0.0], atol=1e-12)
    assert check_attainable(V, build_C(ex2.topology)).attainable


def test_V_equal_to_C_is_attainable():
    C = np.array([[1, 0, 1], [0, 1, 1]])
    assert check_attainable(C.astype(float), C).attainable


def test_every_violation_kind_is_reported():
    V = np.array([[-0.1, 0.0, 0.2], [0.3, 0.2, 0.0]])
    C = np.array([[1, 1, 0], [1, 1, 1]])
    kinds = {(v.agent, v.subnet): v.kind for v in check_attainable(V, C).violations}
    assert kinds == {(1, 1): "negative", (2, 1): "zero-required-positive",
                     (3, 1): "positive-required-zero", (3, 2): "zero-required-positive"}


def test_family_of_agent6(ex1):
    V = compute_V(UNIFORM, ex1.A.T_RR)
    fam = solution_family(6, V, ex1.topology)
    np.testing.assert_allclose(fam.base, [0.06, 0.06, 0.48], atol=1e-12)
    assert fam.sending_ids == (2, 3, 4)
    assert fam.free_dimension == 1
    # y = (2a, 0, 0) shifts the subnet-1 pair by +-a; the edge of the admissible range is a = 0.06
    np.testing.assert_allclose(fam.instantiate([0.12, 0, 0]), [0.12, 0.0, 0.48], atol=1e-12)
    with pytest.raises(ValueError):
        fam.instantiate([0.13, 0, 0])


def test_family_of_agent7_has_no_freedom(ex1):
    fam = solution_family(7, compute_V(UNIFORM, ex1.A.T_RR), ex1.topology)
    np.testing.assert_allclose(fam.base, [0.06, 0.24], atol=1e-12)
    np.testing.assert_allclose(fam.projector, 0, atol=1e-15)
    np.testing.assert_allclose(fam.instantiate([5.0, -3.0]), fam.base)


def test_family_rejects_infeasible_column(ex1):
    Q = desired("eight_agent_dispersed_q.csv", ex1)
    with pytest.raises(InfeasibleDesign, match="sub-network 1"):
        solution_family(7, compute_V(Q, ex1.A.T_RR), ex1.topology)


def test_design_uniform_default(ex1):
    T_SR = design_TSR(UNIFORM, ex1.A.T_RR, ex1.topology)
    np.testing.assert_allclose(T_SR, ex1.A.T_SR, atol=1e-15)


def test_design_uniform_shifted_split(ex1):
    # the family member with alpha_6 = 0.04
    T_SR = design_TSR(UNIFORM, ex1.A.T_RR, ex1.topology, {6: [0.08, 0, 0]})
    np.testing.assert_allclose(T_SR[:, 0], [0, 0.1, 0.02, 0.48, 0], atol=1e-12)
    T_SR = design_TSR(UNIFORM, ex1.A.T_RR, ex1.topology, {6: {2: 0.1}})
    np.testing.assert_allclose(T_SR[:, 0], [0, 0.1, 0.02, 0.48, 0], atol=1e-12)


def test_design_partial(ex2):
    Q = desired("eight_agent_partial_q.csv", ex2)
    T_SR = design_TSR(Q, ex2.A.T_RR, ex2.topology)
    np.testing.assert_allclose(T_SR[:, 2], [0.15, 0.15, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(T_SR, ex2.A.T_SR, atol=1e-12)


def test_design_raises_with_all_violations(ex1):
    Q = np.array([[0.8, 0.2, 0.9], [0.2, 0.8, 0.1]])
    with pytest.raises(InfeasibleDesign) as err:
        design_TSR(Q, ex1.A.T_RR, ex1.topology)
    assert {(v.agent, v.subnet) for v in err.value.violations} == {(7, 1), (8, 2)}


def test_single_agent_subnets_get_V_directly():
    edges = [(1, 1), (2, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4), (4, 3), (3, 3), (4, 4)]
    top = NetworkTopology.from_edges((1, 1), (2,), edges)
    Q = np.array([[0.4, 0.6], [0.6, 0.4]])
    T_RR = np.array([[0.2, 0.1], [0.3, 0.4]])
    np.testing.assert_allclose(design_TSR(Q, T_RR, top), compute_V(Q, T_RR), atol=1e-15)


def test_uniform_precheck(ex1, ex2):
    assert set(uniform_precheck(ex1.topology).values()) == {"all"}
    assert uniform_precheck(ex2.topology)[8] == "partial"
    isolated = network("joint_isolated.json").topology
    assert uniform_precheck(isolated)[8] == "none"


def test_desired_beliefs_must_be_stochastic(ex1):
    with pytest.raises(ValueError):
        design_TSR([[0.5] * 3, [0.4] * 3], ex1.A.T_RR, ex1.topology)


def _attainability_instance(rng):
    top = random_topology(rng, GraphSpec(max_sending=3, max_receiving=2, max_size=2, p_cross=0.5))
    while top.n_receiving > 4:
        top = random_topology(rng, GraphSpec(max_sending=3, max_receiving=2, max_size=2, p_cross=0.5))
    A = random_weights(rng, top)
    if rng.random() < 0.5:
        Q = compute_W(A.T_SR, A.T_RR, top.sending_sizes).block_sums()
    else:
        Q = random_desired(rng, top.S, top.n_receiving)
    return top, A, Q


def test_attainability_matches_lp_oracle():
    rng = np.random.default_rng(20240101)
    agree = {True: 0, False: 0}
    for _ in range(150):
        top, A, Q = _attainability_instance(rng)
        V = compute_V(Q, A.T_RR)
        report = check_attainable(V, build_C(top))
        oracle = all(column_feasible(Q, A.T_RR, top.adjacency, top.sending_sizes, c)
                     for c in range(top.n_receiving))
        assert report.attainable == oracle
        agree[oracle] += 1
    assert agree[True] >= 20 and agree[False] >= 20


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_design_round_trip(seed):
    rng = np.random.default_rng(seed)
    top = random_topology(rng)
    A = random_weights(rng, top)
    Q = compute_W(A.T_SR, A.T_RR, top.sending_sizes).block_sums()
    T_SR = design_TSR(Q, A.T_RR, top)
    assert T_SR.min() >= 0
    assert not np.any(T_SR[~top.adjacency[: top.n_sending, top.n_sending:]])
    from beliefcontrol.network import build_E
    np.testing.assert_allclose(build_E(top) @ T_SR, compute_V(Q, A.T_RR), atol=1e-10)
    np.testing.assert_allclose(T_SR.sum(axis=0) + A.T_RR.sum(axis=0), 1.0, atol=1e-10)
    states = StateSpace.for_topology(top)
    table = limiting_beliefs(compute_W(T_SR, A.T_RR, top.sending_sizes), states, top)
    np.testing.assert_allclose(table[:, list(states.sending_states)].T, Q, atol=1e-8)


def test_family_soundness_random_draws():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(20):
        top = random_topology(rng, GraphSpec(max_size=3, p_cross=0.7))
        A = random_weights(rng, top)
        Q = compute_W(A.T_SR, A.T_RR, top.sending_sizes).block_sums()
        V = compute_V(Q, A.T_RR)
        for k in top.receiving_ids:
            fam = solution_family(k, V, top)
            if fam.base.size == 0:
                continue
            E_k = np.zeros((top.S, fam.base.size))
            for j, s in enumerate(fam.sending_subnet):
                E_k[s - 1, j] = 1
            v = V[:, k - top.n_sending - 1]
            for _ in range(100):
                y = rng.normal(scale=0.5, size=fam.base.size)
                t = fam.base + fam.projector @ y
                if t.min() >= 0:
                    out = fam.instantiate(y)
                    assert out.min() >= 0
                    np.testing.assert_allclose(E_k @ out, v, atol=1e-10)
                    checked += 1
                elif t.min() < -1e-9:
                    with pytest.raises(ValueError):
                        fam.instantiate(y)
    assert checked > 100
