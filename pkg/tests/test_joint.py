import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beliefcontrol.generators import GraphSpec, full_cross_topology, random_desired, random_topology
from beliefcontrol.joint import (Case, CaseInfeasible, EpsilonPolicy, JointColumnProblem, Status, build_problem,
                                 case1_bound, classify_agent, design_case1, design_case2, design_case3, joint_design,
                                 solve_constrained_ls)
from beliefcontrol.limits import full_desired_beliefs, fixed_point_residual
from beliefcontrol.network import CombinationMatrix, build_C

from cases import ISOLATED_STACKED, JOINT_OVERRIDES, JOINT_STACKED, network
from oracles import rr_feasible

Q_JOINT = np.array([[0.2, 0.3, 0.5], [0.8, 0.7, 0.5]])


@pytest.fixture(scope="module")
def partial():
    return network("joint_partial.json").topology


@pytest.fixture(scope="module")
def isolated():
    return network("joint_isolated.json").topology


def reduced(q, Q_k, receiving_ids=None, sending_subnets=(), S=None, eps=0.0):
    S = S or len(q)
    Q_k = np.asarray(Q_k, float).reshape(S, -1)
    rr = receiving_ids or tuple(range(100, 100 + Q_k.shape[1]))
    sub = tuple(sending_subnets)
    E_k = np.zeros((len(set(sub)), len(sub)))
    return JointColumnProblem(agent=99, E_k=E_k, Q_k=Q_k, q=np.asarray(q, float), sending_ids=tuple(range(1, len(sub) + 1)),
                              sending_subnet=sub, connected=tuple(sorted(set(sub))), receiving_ids=rr, S=S, eps=eps)


def fig7_problem(eps=0.0):
    return reduced([0.1, 0.45, 0.45], np.array([[0.2, 0.1], [0.5, 0.4], [0.3, 0.5]]), sending_subnets=(1,), eps=eps)


def test_classification(partial, isolated):
    C = build_C(partial)
    assert classify_agent(6, C, partial) is Case.ALL
    assert classify_agent(8, C, partial) is Case.SOME
    assert classify_agent(8, build_C(isolated), isolated) is Case.NONE
    assert classify_agent(1, [[0], [0]]) is Case.NONE


def test_case1_bound_and_weights(partial):
    problem = build_problem(6, Q_JOINT, partial)
    assert case1_bound(problem) == 0.25
    t_sr, t_rr = design_case1(problem.with_eps(0.1), sr_weights={1: 0.1})
    np.testing.assert_allclose(t_rr, [0.1, 0.1])
    np.testing.assert_allclose(t_sr, [0.1, 0.02, 0.68], atol=1e-12)


def test_case1_agent7(partial):
    problem = build_problem(7, Q_JOINT, partial)
    t_sr, t_rr = design_case1(problem, rr_weights={6: 0.2, 8: 0.1})
    np.testing.assert_allclose(t_sr, [0.21, 0.49], atol=1e-12)


def test_case1_without_receiving_neighbours():
    problem = reduced([0.3, 0.7], np.zeros((2, 0)), sending_subnets=(1, 1, 2))
    t_sr, t_rr = design_case1(problem)
    assert t_rr.size == 0
    np.testing.assert_allclose(t_sr, [0.15, 0.15, 0.7])


def test_case1_boundary_failure():
    problem = reduced([0.0, 1.0], [[0.2], [0.8]], sending_subnets=(1, 2), eps=0.01)
    with pytest.raises(CaseInfeasible) as err:
        design_case1(problem)
    assert err.value.certificate["kind"] == "case1-boundary"


def test_case2_fig7_is_certified_infeasible():
    with pytest.raises(CaseInfeasible) as err:
        design_case2(fig7_problem())
    cert = err.value.certificate
    assert cert["kind"] == "square-equalities"
    np.testing.assert_allclose(cert["t_rr"], [0.3462, 0.6923], atol=5e-4)
    row = cert["rows"][0]
    assert row["kind"] == "inequality" and not row["satisfied"]
    assert row["lhs"] == pytest.approx(0.1385, abs=5e-4)
    assert not rr_feasible(fig7_problem(), 0.0)


def test_case2_agent8(partial):
    problem = build_problem(8, Q_JOINT, partial).with_eps(0.01)
    t_sr, t_rr = design_case2(problem)
    np.testing.assert_allclose(t_rr, [0.25, 0.25, 0.25], atol=1e-12)
    np.testing.assert_allclose(t_sr, [0.25], atol=1e-12)
    # the least-squares route finds an exact design too
    assert solve_constrained_ls(problem).residual <= 1e-12


def test_case2_without_equality_rows_matches_case1(partial):
    problem = build_problem(6, Q_JOINT, partial).with_eps(0.1)
    a = design_case1(problem, sr_weights={1: 0.1})
    b = design_case2(problem, sr_weights={1: 0.1})
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, atol=1e-12)


def test_case3_examples(isolated):
    problem = build_problem(8, Q_JOINT, isolated).with_eps(0.01)
    with pytest.raises(CaseInfeasible) as err:
        design_case3(problem)
    cert = err.value.certificate
    assert cert["kind"] == "hull"
    assert 0.2 <= cert["max_violation"]["closest"] <= 0.3
    assert not rr_feasible(problem, 0.01)

    single = reduced([0.4, 0.6], [[0.4], [0.6]])
    np.testing.assert_allclose(design_case3(single), [1.0])


def test_case3_target_on_a_neighbour():
    cols = np.array([[0.5, 0.3, 0.7], [0.5, 0.7, 0.3]])
    eps = 0.05
    t = design_case3(reduced(cols[:, 0], cols, eps=eps))
    # direct substitution: (1 - 2 eps, eps, eps) reproduces the first column
    np.testing.assert_allclose(cols @ t, cols[:, 0], atol=1e-10)
    assert t.min() >= eps - 1e-12 and t.sum() == pytest.approx(1.0)


def test_ls_fallback_isolated(isolated):
    problem = build_problem(8, Q_JOINT, isolated).with_eps(0.01)
    sol = solve_constrained_ls(problem)
    np.testing.assert_allclose(sol.t, [0.01, 0.99], atol=1e-6)
    assert sol.residual > 0


def test_joint_design_partial_example(partial):
    out = joint_design(Q_JOINT, partial, EpsilonPolicy(per_agent={6: 0.1, 7: 0.1}), overrides=JOINT_OVERRIDES)
    assert out.all_exact
    np.testing.assert_allclose(np.vstack([out.T_SR, out.T_RR]), JOINT_STACKED, atol=1e-12)
    np.testing.assert_allclose(out.predicted, Q_JOINT, atol=1e-8)
    assert out.columns[0].bound == 0.25


def test_joint_design_isolated_example(isolated):
    out = joint_design(Q_JOINT, isolated, EpsilonPolicy(per_agent={6: 0.1, 7: 0.1, 8: 0.01}),
                       overrides=JOINT_OVERRIDES)
    locals_ = {c.agent: c.local_status for c in out.columns}
    assert locals_ == {6: Status.EXACT, 7: Status.EXACT, 8: Status.APPROXIMATE}
    assert all(c.status is Status.APPROXIMATE for c in out.columns)
    np.testing.assert_allclose(np.vstack([out.T_SR, out.T_RR]), ISOLATED_STACKED, atol=1e-6)
    np.testing.assert_allclose(out.predicted[0], [0.174, 0.272, 0.271], atol=1e-3)


def test_joint_design_strict_mode(isolated):
    out = joint_design(Q_JOINT, isolated, fallback_ls=False)
    assert not out.solved and out.predicted is None
    assert out.columns[2].status is Status.INFEASIBLE
    assert out.to_dict()["per_agent"][2]["residual"] is None


def test_empty_polytope_is_a_hard_failure(partial):
    out = joint_design(Q_JOINT, partial, EpsilonPolicy(per_agent={8: 0.5}))
    assert out.columns[2].status is Status.INFEASIBLE
    assert "polytope" in out.columns[2].certificate


def test_point_mass_targets():
    rng = np.random.default_rng(0)
    top = full_cross_topology(rng, S=2, R=1)
    Q = np.zeros((2, top.n_receiving))
    Q[0] = 1.0
    out = joint_design(Q, top)
    assert out.all_exact
    np.testing.assert_allclose(out.predicted, Q, atol=1e-8)


def _check_fixed_point(out, Q, top):
    T_SS = np.eye(top.n_sending)
    A = CombinationMatrix.from_blocks(T_SS, out.T_SR, out.T_RR)
    return fixed_point_residual(A, full_desired_beliefs(Q, top))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_case1_totality(seed):
    rng = np.random.default_rng(seed)
    top = full_cross_topology(rng, GraphSpec(max_sending=3, max_receiving=2, max_size=3))
    Q = random_desired(rng, top.S, top.n_receiving)
    out = joint_design(Q, top)
    assert out.all_exact
    assert all(c.case is Case.ALL for c in out.columns)
    np.testing.assert_allclose(out.T_SR.sum(axis=0) + out.T_RR.sum(axis=0), 1.0, atol=1e-10)
    assert _check_fixed_point(out, Q, top) <= 1e-10
    np.testing.assert_allclose(out.predicted, Q, atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_qp_dominance_and_consistency(seed):
    rng = np.random.default_rng(seed)
    top = random_topology(rng)
    Q = random_desired(rng, top.S, top.n_receiving)
    out = joint_design(Q, top)
    for col, c in zip(range(top.n_receiving), out.columns):
        problem = build_problem(c.agent, Q, top).with_eps(c.eps)
        if c.status is Status.INFEASIBLE:
            continue
        if problem.lower_bounds().sum() > 1:
            continue
        ls = solve_constrained_ls(problem)
        assert ls.residual <= c.residual + 1e-12
        if c.local_status is Status.EXACT:
            assert ls.residual <= 1e-10
    if out.all_exact:
        np.testing.assert_allclose(out.predicted, Q, atol=1e-8)


def test_infeasible_certificates_agree_with_lp():
    rng = np.random.default_rng(11)
    seen = 0
    for _ in range(300):
        top = random_topology(rng)
        Q = random_desired(rng, top.S, top.n_receiving)
        for k in top.receiving_ids:
            problem = build_problem(k, Q, top).with_eps(0.01)
            if problem.case is Case.ALL or problem.lower_bounds().sum() > 1:
                continue
            design = design_case2 if problem.case is Case.SOME else design_case3
            try:
                design(problem)
                feasible = True
            except CaseInfeasible:
                feasible = False
            assert feasible == rr_feasible(problem, 0.01), (k, Q)
            seen += 1
    assert seen >= 50


def test_self_listening_agent_is_flagged():
    from beliefcontrol.network import NetworkTopology
    # agent 3 hears sending sub-network 2 only, and its only receiving neighbour is itself:
    # the equality row forces self-weight 1, which cuts it off from every sending agent
    top = NetworkTopology.from_edges((1, 1), (1,), [(1, 1), (2, 2), (2, 3), (3, 3)])
    out = joint_design([[0.4], [0.6]], top)
    (c,) = out.columns
    assert c.status is Status.INFEASIBLE
    assert c.certificate["kind"] == "no-sending-influence"
    assert out.predicted is None
