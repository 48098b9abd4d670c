"""Assemble dense transition matrices from kernel rows for exact checks."""
import numpy as np


def assemble(states, row_fn):
    index = {s: k for k, s in enumerate(states)}
    K = np.zeros((len(states), len(states)))
    for s in states:
        for t, p in row_fn(s).items():
            K[index[s], index[t]] += p
    return K


def balance_error(pi, K):
    """Largest detailed-balance violation and largest stationarity residual."""
    flow = pi[:, None] * K
    return float(np.max(np.abs(flow - flow.T))), float(np.max(np.abs(pi @ K - pi)))


def mix(*weighted_rows):
    def row(s):
        out = {}
        for w, fn in weighted_rows:
            for t, p in fn(s).items():
                out[t] = out.get(t, 0.0) + w * p
        return out
    return row
