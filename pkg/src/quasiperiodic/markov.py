"""Markov-chain reading of an FSM neuron.

If every input event is independently 1 with probability ``p``, the FSM
becomes a Markov chain with the same graph: 1-edges carry ``p`` and
0-edges carry ``1 - p``.  The stationary probability mass on 1-output
states predicts the neuron's activation.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix, identity
from scipy.sparse.csgraph import connected_components

from .fsm import FsmSpec

__all__ = [
    "MarkovChain",
    "MarkovChainError",
    "ActivationCurve",
    "to_markov_chain",
    "stationary",
    "activation",
    "activation_curve",
    "counter_activation",
]

DIRECT_SOLVE_LIMIT = 1000


class MarkovChainError(RuntimeError):
    """Stationary distribution is not unique or could not be computed."""


@dataclass(frozen=True)
class MarkovChain:
    matrix: np.ndarray
    output_bit: np.ndarray
    p: float
    initial_state: int = 0

    @property
    def state_count(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ActivationCurve:
    p: np.ndarray
    q: np.ndarray

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("p,q\n")
        for p, q in zip(self.p.tolist(), self.q.tolist()):
            out.write(f"{p:.17g},{q:.17g}\n")
        return out.getvalue()


def to_markov_chain(fsm: FsmSpec, p: float) -> MarkovChain:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"input probability must lie in [0, 1], got {p}")
    if set(fsm.input_alphabet) != {0, 1}:
        raise ValueError("Markov interpretation needs a binary input alphabet")
    tab = fsm.table()
    n = fsm.state_count
    P = np.zeros((n, n))
    rows = np.arange(n)
    np.add.at(P, (rows, tab[:, fsm.symbol_index(1)]), p)
    np.add.at(P, (rows, tab[:, fsm.symbol_index(0)]), 1.0 - p)
    return MarkovChain(P, np.asarray(fsm.output_bit, dtype=np.int8), float(p), fsm.initial_state)


def _deterministic_limit(chain: MarkovChain) -> np.ndarray:
    # p in {0, 1}: follow the forced path from the initial state and spread
    # mass uniformly over the cycle it ends in
    nxt = chain.matrix.argmax(axis=1)
    seen = {}
    s = chain.initial_state
    while s not in seen:
        seen[s] = len(seen)
        s = int(nxt[s])
    cycle = [t for t, i in seen.items() if i >= seen[s]]
    pi = np.zeros(chain.state_count)
    pi[cycle] = 1.0 / len(cycle)
    return pi


def _closed_class(P: np.ndarray) -> np.ndarray:
    graph = csr_matrix(P > 0)
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    if n_comp == 1:
        return np.arange(P.shape[0])
    closed = []
    for c in range(n_comp):
        members = labels == c
        if P[np.ix_(members, ~members)].sum() == 0:
            closed.append(np.flatnonzero(members))
    if len(closed) != 1:
        raise MarkovChainError(f"chain has {len(closed)} closed classes; stationary law is not unique")
    return closed[0]


def _power_iteration(P, tol=1e-13, max_iter=1_000_000):
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    # lazy chain: same fixed point, aperiodic
    LT = (0.5 * (csr_matrix(P) + identity(n, format="csr"))).T.tocsr()
    for _ in range(max_iter):
        new = LT @ pi
        if np.abs(new - pi).max() < tol:
            return new / new.sum()
        pi = new
    raise MarkovChainError("power iteration did not converge")


def stationary(chain: MarkovChain) -> np.ndarray:
    """Stationary distribution ``pi`` with ``pi @ P == pi`` and ``sum(pi) == 1``."""
    P = chain.matrix
    if chain.p in (0.0, 1.0):
        return _deterministic_limit(chain)
    support = _closed_class(P)
    sub = P[np.ix_(support, support)]
    m = support.size
    if m <= DIRECT_SOLVE_LIMIT:
        A = sub.T - np.eye(m)
        A[-1, :] = 1.0
        b = np.zeros(m)
        b[-1] = 1.0
        sol = np.linalg.solve(A, b)
    else:
        sol = _power_iteration(sub)
    sol = np.clip(sol, 0.0, None)
    sol /= sol.sum()
    pi = np.zeros(P.shape[0])
    pi[support] = sol
    if np.abs(pi @ P - pi).max() > 1e-9:
        raise MarkovChainError("stationary solve did not converge")
    return pi


def activation(fsm: FsmSpec, p: float) -> float:
    """Predicted probability that the neuron emits a 1 event."""
    chain = to_markov_chain(fsm, p)
    return float(stationary(chain) @ chain.output_bit)


def activation_curve(fsm: FsmSpec, p_grid: Sequence[float]) -> ActivationCurve:
    p = np.asarray(p_grid, dtype=float)
    return ActivationCurve(p, np.array([activation(fsm, x) for x in p]))


def counter_activation(depth: int, p):
    """Closed form ``r**d / (1 + r**d)`` with ``r = p / (1 - p)`` for counter FSMs."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        z = depth * (np.log(p) - np.log1p(-p))
    return 1.0 / (1.0 + np.exp(-z))
