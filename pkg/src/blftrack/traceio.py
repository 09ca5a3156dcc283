"""Trace CSV emission and parsing.

The column set is a stable contract for the two-link reference model
(n=2 joints, p=5 parameters).  Values carry 9 significant digits, which
is enough to detect nondeterminism while keeping files diff-able.
"""

import numpy as np

from .errors import TraceParseError
from .simulator import Trace

HEADER = ("t,q1,q2,qd1,qd2,e1,e2,ef1,ef2,eta1,eta2,"
          "tau1,tau2,tau1_raw,tau2_raw,th1,th2,th3,th4,th5,V")
N_COLS = 21


def format_trace(trace: Trace) -> str:
    """Render a trace as CSV text (header line first, newline-terminated)."""
    cols = _columns(trace)
    lines = [HEADER]
    for row in range(cols.shape[0]):
        lines.append(",".join(f"{v:.9g}" for v in cols[row]))
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(trace))


def read_trace(path: str) -> Trace:
    """Parse a trace CSV back into a Trace (ke is not stored and stays None)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise TraceParseError(f"cannot read trace {path!r}: {exc}") from exc
    if not lines or lines[0] != HEADER:
        raise TraceParseError(f"{path}: bad or missing header")
    data = np.empty((len(lines) - 1, N_COLS))
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != N_COLS:
            raise TraceParseError(f"{path}: line {i}: expected {N_COLS} columns, got {len(parts)}")
        try:
            data[i - 2] = [float(p) for p in parts]
        except ValueError as exc:
            raise TraceParseError(f"{path}: line {i}: {exc}") from exc
    if data.shape[0] == 0:
        raise TraceParseError(f"{path}: no records")
    t = data[:, 0]
    if np.any(np.diff(t) <= 0):
        raise TraceParseError(f"{path}: time column is not strictly increasing")
    return Trace(
        t=t,
        q=data[:, 1:3],
        q_des=data[:, 3:5],
        e=data[:, 5:7],
        e_f=data[:, 7:9],
        eta=data[:, 9:11],
        tau=data[:, 11:13],
        tau_raw=data[:, 13:15],
        theta_hat=data[:, 15:20],
        V=data[:, 20],
    )


def _columns(trace: Trace) -> np.ndarray:
    if trace.q.shape[1] != 2 or trace.theta_hat.shape[1] != 5:
        raise ValueError("trace CSV schema is fixed to 2 joints and 5 parameters")
    return np.column_stack([
        trace.t, trace.q, trace.q_des, trace.e, trace.e_f, trace.eta,
        trace.tau, trace.tau_raw, trace.theta_hat, trace.V,
    ])
