"""File formats: network JSON, matrix CSV, likelihood CSV, trace CSV, run manifests.

All agent and state indices in files are 1-based. Floats are written with
``repr`` so a round trip is exact.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .limits import StateSpace
from .network import CombinationMatrix, NetworkTopology
from .sim import LikelihoodModel, Trace

VERSION = "0.1.0"


class InputError(ValueError):
    """Unreadable or ill-formed input file."""


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    topology: NetworkTopology
    states: StateSpace
    A: CombinationMatrix | None = None

    @property
    def T_RR(self) -> np.ndarray | None:
        return None if self.A is None else np.array(self.A.T_RR)


def _num(x) -> float:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a number: {x!r}") from exc
    raise InputError(f"not a number: {x!r}")


def _sizes(entries, what: str):
    if not isinstance(entries, list):
        raise InputError(f"'{what}' must be a list")
    sizes, truths = [], []
    for i, e in enumerate(entries, 1):
        if not isinstance(e, dict) or not isinstance(e.get("size"), int) or e["size"] < 1:
            raise InputError(f"{what}[{i}] needs a positive integer 'size'")
        sizes.append(e["size"])
        t = e.get("true_state")
        if t is not None and (not isinstance(t, int) or t < 1):
            raise InputError(f"{what}[{i}].true_state must be a 1-based state index")
        truths.append(None if t is None else t - 1)
    return sizes, truths


def network_from_dict(data: dict) -> NetworkSpec:
    if not isinstance(data, dict):
        raise InputError("network file must hold a JSON object")
    ssizes, struths = _sizes(data.get("sending_subnets"), "sending_subnets")
    rsizes, rtruths = _sizes(data.get("receiving_subnets", []), "receiving_subnets")
    if not ssizes:
        raise InputError("at least one sending sub-network is required")
    if any(t is None for t in struths):
        struths = list(range(len(ssizes)))
    n = sum(ssizes) + sum(rsizes)
    weights = data.get("weights")
    matrix = None
    if isinstance(weights, list):
        try:
            matrix = np.array([[_num(x) for x in row] for row in weights], dtype=float)
        except TypeError as exc:
            raise InputError("weights matrix must be a list of rows") from exc
        if matrix.shape != (n, n):
            raise InputError(f"weights matrix must be {n}x{n}, got {matrix.shape}")
    elif isinstance(weights, dict):
        matrix = np.zeros((n, n))
        for key, w in weights.items():
            try:
                src, dst = (int(p) for p in str(key).split(","))
            except ValueError as exc:
                raise InputError(f"weight key {key!r} is not 'from,to'") from exc
            if not (1 <= src <= n and 1 <= dst <= n):
                raise InputError(f"weight key {key!r} outside agents 1..{n}")
            matrix[src - 1, dst - 1] = _num(w)
    elif weights is not None:
        raise InputError("'weights' must be an object or a matrix")
    edges = data.get("edges")
    if edges is None:
        if matrix is None:
            raise InputError("either 'edges' or a weight matrix is required")
        edges = [(int(l) + 1, int(k) + 1) for l, k in np.argwhere(matrix != 0)]
    if not isinstance(edges, list) or not all(
            isinstance(e, (list, tuple)) and len(e) == 2 and all(isinstance(x, int) for x in e) for e in edges):
        raise InputError("'edges' must be a list of [from, to] integer pairs")
    try:
        top = NetworkTopology.from_edges(ssizes, rsizes, [tuple(e) for e in edges],
                                         sending_states=tuple(struths), receiving_states=tuple(rtruths))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    labels = data.get("states")
    try:
        states = StateSpace.for_topology(top, labels)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    A = None if matrix is None else CombinationMatrix(matrix, top.n_sending)
    return NetworkSpec(top, states, A)


def load_network(path) -> NetworkSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        raise InputError(f"{path} is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return network_from_dict(data)


def network_to_dict(spec: NetworkSpec) -> dict:
    top = spec.topology
    out = {
        "states": list(spec.states.labels),
        "sending_subnets": [{"size": n, "true_state": s + 1} for n, s in zip(top.sending_sizes, top.sending_states)],
        "receiving_subnets": [
            {"size": n} if s is None else {"size": n, "true_state": s + 1}
            for n, s in zip(top.receiving_sizes, top.receiving_states)
        ],
        "edges": [[int(l) + 1, int(k) + 1] for l, k in np.argwhere(top.adjacency)],
    }
    if spec.A is not None:
        out["weights"] = {f"{l + 1},{k + 1}": float(spec.A.entries[l, k])
                          for l, k in np.argwhere(spec.A.entries != 0)}
    return out


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def read_matrix(path) -> tuple[np.ndarray, list[str] | None, list[str] | None]:
    """Matrix CSV with an optional ``row,<col ids>`` header and leading row labels."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path} is empty")
    col_ids = None

    def numeric(c):
        try:
            _num(c)
            return True
        except InputError:
            return False

    if not all(numeric(c) for c in rows[0][1:]) or not numeric(rows[0][0]):
        col_ids = [c.strip() for c in rows[0][1:]]
        rows = rows[1:]
    row_ids = None
    if col_ids is not None:
        row_ids = [r[0].strip() for r in rows]
        body = [r[1:] for r in rows]
    else:
        body = rows
    try:
        M = np.array([[_num(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: ragged or non-numeric rows") from exc
    if M.ndim != 2 or (col_ids is not None and M.shape[1] != len(col_ids)):
        raise InputError(f"{path}: ragged rows")
    return M, row_ids, col_ids


def write_matrix(path, M, row_ids: Sequence, col_ids: Sequence) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", *col_ids])
        for rid, row in zip(row_ids, M):
            w.writerow([rid, *(repr(float(x)) for x in row)])


def read_desired(path, topology: NetworkTopology, tol: float = 1e-12) -> np.ndarray:
    """Desired beliefs ``S x N_gR``; rejects wrong shapes and non-stochastic columns."""
    Q, _, _ = read_matrix(path)
    if Q.shape != (topology.S, topology.n_receiving):
        raise InputError(f"Q must be {topology.S}x{topology.n_receiving}, got {Q.shape[0]}x{Q.shape[1]}")
    if np.any(Q < -tol):
        raise InputError("Q has negative entries")
    bad = np.flatnonzero(np.abs(Q.sum(axis=0) - 1.0) > tol)
    if bad.size:
        raise InputError(f"columns {[topology.receiving_ids[i] for i in bad]} of Q do not sum to one")
    return Q


def read_block(path, shape: tuple[int, int], what: str) -> np.ndarray:
    M, _, _ = read_matrix(path)
    if M.shape != shape:
        raise InputError(f"{what} must be {shape[0]}x{shape[1]}, got {M.shape[0]}x{M.shape[1]}")
    return M


def read_likelihoods(paths: Sequence, spec: NetworkSpec) -> LikelihoodModel:
    """Head-probability tables (rows = states, columns = agents) for binary signals.

    Either one file per sub-network in sub-network order or a single file
    covering every agent.
    """
    top = spec.topology
    blocks = [read_matrix(p)[0] for p in paths]
    if not blocks:
        raise InputError("no likelihood files given")
    table = np.hstack(blocks) if all(b.shape[0] == blocks[0].shape[0] for b in blocks) else None
    if table is None or table.shape[1] != top.N:
        widths = [b.shape[1] for b in blocks]
        raise InputError(f"likelihood files cover {widths} agents; expected {top.N} in total")
    if table.shape[0] != spec.states.size:
        raise InputError(f"likelihood tables have {table.shape[0]} states, the network has {spec.states.size}")
    truths = top.agent_true_states()
    if any(t is None for t in truths):
        missing = [r + top.S + 1 for r, t in enumerate(top.receiving_states) if t is None]
        raise InputError(f"receiving sub-networks {missing} need a true_state to simulate")
    try:
        return LikelihoodModel.binary(table.T, truths)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def write_trace(path, trace: Trace) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "agent", "state", "belief"])
        for it, k, s, b in trace.rows():
            w.writerow([it, k, s, repr(b)])


def read_trace(path) -> list[tuple[int, int, str, float]]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        next(r)
        return [(int(a), int(b), c, float(d)) for a, b, c, d in r]


@dataclass
class RunManifest:
    command: str
    inputs: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    version: str = VERSION

    def to_dict(self) -> dict:
        return asdict(self)
