"""Design T_SR for the 23-agent coin network and simulate the diffusion rule.

Writes the trace, the designed T_SR and a summary JSON to --out, and prints
the distance of the receiving agents' beliefs from their targets.
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

from beliefcontrol.bundled import data_path
from beliefcontrol.io import load_network, read_desired, read_likelihoods, read_matrix, write_matrix, write_trace
from beliefcontrol.sim import SimConfig, empirical_limit, run_seeds
from beliefcontrol.tsr import design_TSR


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iters", type=int, default=7000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    ap.add_argument("--stride", type=int, default=10)
    ap.add_argument("--window", type=int, default=500, help="stored snapshots averaged at the end")
    ap.add_argument("--out", type=Path, default=Path("coin23_out"))
    args = ap.parse_args(argv)

    spec = load_network(data_path("coin_23.json"))
    top = spec.topology
    Q1 = read_desired(data_path("coin_23_q.csv"), top)
    T_RR = read_matrix(data_path("coin_23_trr.csv"))[0]
    T_SR = design_TSR(Q1, T_RR, top)
    A = spec.A.with_blocks(T_SR=T_SR, T_RR=T_RR)
    lik = read_likelihoods([data_path(f"coin_23_lik_{p}.csv") for p in ("s1", "s2", "r")], spec)

    config = SimConfig(iterations=args.iters, trace_stride=args.stride)
    start = time.perf_counter()
    traces = run_seeds(A, lik, spec.states, config, args.seeds)
    elapsed = time.perf_counter() - start

    args.out.mkdir(parents=True, exist_ok=True)
    write_matrix(args.out / "T_SR.csv", T_SR, top.sending_ids, top.receiving_ids)
    runs = []
    for seed, trace in zip(args.seeds, traces):
        write_trace(args.out / f"trace_seed{seed}.csv", trace)
        final = trace.final[top.n_sending:, :2].T
        tail = empirical_limit(trace, min(args.window, len(trace.iterations)))[top.n_sending:, :2].T
        runs.append({"seed": seed, "final_max_dev": float(np.abs(final - Q1).max()),
                     "tail_max_dev": float(np.abs(tail - Q1).max()),
                     "final": final.tolist()})
        print(f"seed {seed}: max |final - Q1| = {runs[-1]['final_max_dev']:.3e}, "
              f"tail mean {runs[-1]['tail_max_dev']:.3e}")
    summary = {"iterations": args.iters, "seconds": elapsed, "target": Q1.tolist(), "runs": runs}
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{len(args.seeds)} run(s) in {elapsed:.2f} s, output in {args.out}")


if __name__ == "__main__":
    main()
