"""Regenerate the bundled example networks under src/beliefcontrol/data.

Matrices are entered by hand; the only computed artefact is the
sending-to-receiving block of the 23-agent network, which is designed here
with the default equal split.
"""
import argparse
import csv
import json
from pathlib import Path

import numpy as np

from beliefcontrol.network import NetworkTopology
from beliefcontrol.tsr import design_TSR

OUT = Path(__file__).resolve().parents[1] / "src" / "beliefcontrol" / "data"

T_SS_8 = [[.2, .2, .8, 0, 0], [.5, .4, .1, 0, 0], [.3, .4, .1, 0, 0], [0, 0, 0, .4, .3], [0, 0, 0, .6, .7]]

# columns 6-8 of the eight-agent networks, rows are agents 1..8
UNIFORM_RECV = [[0, 0, .08], [.06, 0, 0], [.06, .06, 0], [.48, 0, .32], [0, .24, 0],
                [.2, .3, .2], [.1, .2, .3], [.1, .2, .1]]
PARTIAL_RECV = [[0, 0, .15], [.245, 0, .15], [.245, .16, 0], [.11, 0, 0], [0, .14, 0],
                [.2, .3, .1], [.1, .2, .6], [.1, .2, 0]]
JOINT_RECV = [[.1, 0, 0], [0, .21, 0], [.02, 0, .25], [.68, .49, 0], [0, 0, 0],
              [0, .2, .25], [.1, 0, .25], [.1, .1, .25]]
ISOLATED_RECV = [[.1, 0, 0], [0, .21, 0], [.02, 0, 0], [.68, .49, 0], [0, 0, 0],
                 [0, .2, .01], [.1, 0, .99], [.1, .1, 0]]
# edge patterns of the joint-design networks (weights to be designed)
JOINT_EDGES = {6: [1, 3, 4, 7, 8], 7: [2, 4, 6, 8], 8: [3, 6, 7, 8]}
ISOLATED_EDGES = {6: [1, 3, 4, 7, 8], 7: [2, 4, 6, 8], 8: [6, 7]}

A1 = [[0, .3, 0, 0, 0, 0, 0, .3], [.4, 0, .3, 0, 0, 0, 0, 0], [0, .7, 0, .5, .25, 0, 0, 0],
      [0, 0, .4, 0, 0, .3, 0, 0], [0, 0, .3, 0, 0, .1, .2, .45], [0, 0, 0, .5, .25, 0, .1, 0],
      [0, 0, 0, 0, .3, .6, 0, .25], [.6, 0, 0, 0, .2, 0, .7, 0]]
A2 = [[0, .35, 0, .3, 0, 0, 0, .25], [.1, .25, .5, 0, 0, 0, 0, 0], [0, .4, 0, 0, .8, 0, 0, 0],
      [.1, 0, 0, 0, .1, 0, .6, 0], [0, 0, .5, .3, 0, .45, 0, 0], [0, 0, 0, 0, .1, 0, .3, 0],
      [0, 0, 0, .4, 0, .55, 0, .75], [.8, 0, 0, 0, 0, 0, .1, 0]]
T_RR_23 = [[0, .1, .25, .25, 0, 0, 0], [.3, 0, .25, .25, .3, 0, 0], [.3, .1, 0, 0, .3, .5, 0],
           [.3, .1, 0, 0, .3, 0, .5], [0, .1, .25, .25, 0, 0, 0], [0, 0, .25, 0, 0, 0, .5],
           [0, 0, 0, .25, 0, .5, 0]]
Q1 = [[.55, .5, .5, .5, .45, .5, .5], [.45, .5, .5, .5, .55, .5, .5]]
# sending neighbours chosen for the receiving agents that need outside weight
SENDERS_23 = {17: [3, 5], 18: [1, 7, 10, 14], 21: [12, 16]}

L_R = ["5/8 3/4 1/6 7/8 2/3 1/3 1/4"] * 3
L_1 = ["5/8 3/4 1/6 1/2 1/3 1/5 4/5 1/2", "5/8 3/4 1/6 2/3 1/2 1/5 2/3 1/2", "1/4 3/4 1/3 1/2 1/4 1/5 4/5 1/3"]
L_2 = ["7/8 5/8 1/4 1/2 1/2 1/2 6/7 1/4", "7/8 2/3 5/8 1/3 1/2 1/2 8/9 1/4", "1/3 2/3 5/8 1/4 1/2 1/5 8/9 1/4"]

STATES3 = ["theta1", "theta2", "theta3"]


def weights_dict(A):
    A = np.asarray(A, dtype=float)
    return {f"{l + 1},{k + 1}": float(A[l, k]) for l, k in np.argwhere(A != 0)}


def eight_agent(recv):
    A = np.zeros((8, 8))
    A[:5, :5] = T_SS_8
    A[:, 5:] = recv
    return A


def network(ssizes, rsizes, A=None, edges=None, rstate=3):
    out = {
        "states": STATES3,
        "sending_subnets": [{"size": n, "true_state": i + 1} for i, n in enumerate(ssizes)],
        "receiving_subnets": [{"size": n, "true_state": rstate} for n in rsizes],
    }
    if edges is None:
        edges = [[int(l) + 1, int(k) + 1] for l, k in np.argwhere(np.asarray(A) != 0)]
    out["edges"] = sorted(edges)
    if A is not None:
        out["weights"] = weights_dict(A)
    return out


def write_csv(path, rows, header=None):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for r in rows:
            w.writerow(r)


def q_rows(Q, ids):
    return [[f"theta{s + 1}", *(repr(float(x)) for x in row)] for s, row in enumerate(Q)], ["row", *ids]


def write_q(out, name, Q, ids):
    rows, header = q_rows(Q, ids)
    write_csv(out / name, rows, header)


def joint_network(pattern):
    edges = [[int(l) + 1, int(k) + 1] for l, k in np.argwhere(np.asarray(T_SS_8) != 0)]
    for k, src in pattern.items():
        edges += [[s, k] for s in src]
    return network((3, 2), (3,), None, edges)


def coin_23():
    ns = 16
    T_SS = np.zeros((ns, ns))
    T_SS[:8, :8], T_SS[8:, 8:] = A1, A2
    adj = np.zeros((23, 23), dtype=bool)
    adj[:ns, :ns] = T_SS > 0
    adj[ns:, ns:] = np.asarray(T_RR_23) > 0
    for k, src in SENDERS_23.items():
        adj[np.array(src) - 1, k - 1] = True
    top = NetworkTopology((8, 8), (7,), adj, receiving_states=(2,))
    T_SR = design_TSR(Q1, T_RR_23, top)
    A = np.block([[T_SS, T_SR], [np.zeros((7, ns)), np.asarray(T_RR_23)]])
    return network((8, 8), (7,), A), T_SR


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args(argv)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    ids8 = [6, 7, 8]
    nets = {
        "eight_agent_uniform.json": network((3, 2), (3,), eight_agent(UNIFORM_RECV)),
        "eight_agent_partial.json": network((3, 2), (3,), eight_agent(PARTIAL_RECV)),
        "joint_partial.json": joint_network(JOINT_EDGES),
        "joint_isolated.json": joint_network(ISOLATED_EDGES),
        "joint_partial_solution.json": network((3, 2), (3,), eight_agent(JOINT_RECV)),
        "joint_isolated_solution.json": network((3, 2), (3,), eight_agent(ISOLATED_RECV)),
    }
    nets["coin_23.json"], tsr_23 = coin_23()
    for name, data in nets.items():
        (out / name).write_text(json.dumps(data, indent=1) + "\n")
    write_q(out, "eight_agent_uniform_q.csv", [[.2] * 3, [.8] * 3], ids8)
    write_q(out, "eight_agent_nonuniform_q.csv", [[.8, .7, .75], [.2, .3, .25]], ids8)
    write_q(out, "eight_agent_dispersed_q.csv", [[.8, .2, .3], [.2, .8, .7]], ids8)
    write_q(out, "eight_agent_partial_q.csv", [[.8, .7, .8], [.2, .3, .2]], ids8)
    write_q(out, "joint_q.csv", [[.2, .3, .5], [.8, .7, .5]], ids8)
    write_q(out, "coin_23_q.csv", Q1, list(range(17, 24)))
    write_csv(out / "coin_23_tsr.csv",
              [[k, *(repr(float(x)) for x in row)] for k, row in zip(range(1, 17), tsr_23)],
              ["row", *range(17, 24)])
    write_csv(out / "coin_23_trr.csv",
              [[k, *(repr(float(x)) for x in row)] for k, row in zip(range(17, 24), T_RR_23)],
              ["row", *range(17, 24)])
    (out / "joint_overrides.json").write_text(json.dumps(
        {"6": {"rr": {"7": 0.1, "8": 0.1}, "sr": {"1": 0.1}}, "7": {"rr": {"6": 0.2, "8": 0.1}}}, indent=1) + "\n")
    for name, rows, ids in (("coin_23_lik_s1.csv", L_1, range(1, 9)), ("coin_23_lik_s2.csv", L_2, range(9, 17)),
                            ("coin_23_lik_r.csv", L_R, range(17, 24))):
        write_csv(out / name, [[STATES3[s], *r.split()] for s, r in enumerate(rows)], ["row", *ids])
    print(f"wrote {len(list(out.iterdir()))} files to {out}")


if __name__ == "__main__":
    main()
