"""Recompute the worked eight-agent examples and report each quantity against its reference value."""
import argparse

import numpy as np

from beliefcontrol.bundled import data_path
from beliefcontrol.io import load_network, read_desired
from beliefcontrol.joint import EpsilonPolicy, build_problem, case1_bound, joint_design
from beliefcontrol.limits import compute_W
from beliefcontrol.network import build_C
from beliefcontrol.tsr import check_attainable, compute_V, design_TSR

Q_JOINT = np.array([[0.2, 0.3, 0.5], [0.8, 0.7, 0.5]])
OVERRIDES = {6: {"rr": {7: 0.1, 8: 0.1}, "sr": {1: 0.1}}, 7: {"rr": {6: 0.2, 8: 0.1}}}


def show(label, got, expected):
    got, expected = np.asarray(got, float), np.asarray(expected, float)
    dev = float(np.abs(got - expected).max())
    print(f"  {label:<34} {np.array2string(got.ravel(), precision=5):<40} |dev| {dev:.2e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.parse_args(argv)
    ex1 = load_network(data_path("eight_agent_uniform.json"))
    top1 = ex1.topology
    print("uniform targets")
    Q = read_desired(data_path("eight_agent_uniform_q.csv"), top1)
    T_SR = design_TSR(Q, ex1.A.T_RR, top1)
    show("T_SR column 6", T_SR[:, 0], [0, 0.06, 0.06, 0.48, 0])
    W = compute_W(T_SR, ex1.A.T_RR, top1.sending_sizes)
    show("block sums", W.block_sums(), Q)

    print("non-uniform targets")
    V = compute_V(read_desired(data_path("eight_agent_nonuniform_q.csv"), top1), ex1.A.T_RR)
    show("v_6", V[:, 0], [0.495, 0.105])
    show("v_7", V[:, 1], [0.17, 0.13])
    show("v_8 (reference value)", V[:, 2], [0.305, 0.195])
    disp = check_attainable(compute_V(read_desired(data_path("eight_agent_dispersed_q.csv"), top1), ex1.A.T_RR),
                            build_C(top1), agent_ids=top1.receiving_ids)
    for v in disp.violations:
        print(f"  dispersed: agent {v.agent} subnet {v.subnet} {v.kind} {v.value:.12g}")

    ex2 = load_network(data_path("eight_agent_partial.json"))
    print("partial connectivity")
    Q = read_desired(data_path("eight_agent_partial_q.csv"), ex2.topology)
    T_SR = design_TSR(Q, ex2.A.T_RR, ex2.topology)
    show("limits", compute_W(T_SR, ex2.A.T_RR, (3, 2)).block_sums(), Q)

    print("joint design")
    top = load_network(data_path("joint_partial.json")).topology
    print(f"  case-1 bound of agent 6: {case1_bound(build_problem(6, Q_JOINT, top))}")
    out = joint_design(Q_JOINT, top, EpsilonPolicy(per_agent={6: 0.1, 7: 0.1}), overrides=OVERRIDES)
    show("predicted limits", out.predicted, Q_JOINT)
    iso = load_network(data_path("joint_isolated.json")).topology
    out = joint_design(Q_JOINT, iso, EpsilonPolicy(per_agent={6: 0.1, 7: 0.1, 8: 0.01}), overrides=OVERRIDES)
    show("agent 8 least-squares weights", out.columns[2].t_rr, [0.01, 0.99])
    show("predicted limits (isolated)", out.predicted[0], [0.174, 0.272, 0.271])


if __name__ == "__main__":
    main()
