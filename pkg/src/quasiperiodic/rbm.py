"""Restricted Boltzmann machines: exact law, Gibbs baseline, and event-network compiler.

Configurations ``[v, h]`` are packed into integers: visible unit ``i`` is
bit ``i`` and hidden unit ``j`` is bit ``nv + j``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import logsumexp

from . import _kernel
from .engine import Network, NeuronInstance, OscillatorSpec, Trace, draw_frequencies, draw_phases
from .fsm import constant_fsm, counter_fsm

__all__ = [
    "RbmModel",
    "ConfigDistribution",
    "SampleRecord",
    "CompiledRbm",
    "energy",
    "exact_distribution",
    "gibbs_sample",
    "compile_network",
    "record_samples",
    "kl_divergence",
    "kl_curve",
    "random_model",
    "effective_temperature",
    "paper_example_model",
]

ENUMERATION_CAP = 24


@dataclass(frozen=True)
class RbmModel:
    """Integer-weighted RBM.  ``weights`` is ``(nv, nh)``."""

    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.weights))
        vb = np.asarray(self.visible_bias).reshape(-1)
        hb = np.asarray(self.hidden_bias).reshape(-1)
        if W.shape != (vb.size, hb.size):
            raise ValueError(f"weights {W.shape} do not match biases ({vb.size}, {hb.size})")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        for name, arr in (("weights", W), ("visible_bias", vb), ("hidden_bias", hb)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def nv(self) -> int:
        return self.weights.shape[0]

    @property
    def nh(self) -> int:
        return self.weights.shape[1]

    def with_temperature(self, temperature: float) -> "RbmModel":
        return RbmModel(self.weights, self.visible_bias, self.hidden_bias, temperature)

    def to_dict(self) -> dict:
        return {
            "visible": self.nv,
            "hidden": self.nh,
            "weights": self.weights.tolist(),
            "visible_bias": self.visible_bias.tolist(),
            "hidden_bias": self.hidden_bias.tolist(),
            "temperature": self.temperature,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "RbmModel":
        model = cls(
            np.array(doc["weights"]).reshape(doc["visible"], doc["hidden"]),
            np.array(doc["visible_bias"]),
            np.array(doc["hidden_bias"]),
            float(doc.get("temperature", 1.0)),
        )
        return model


def paper_example_model() -> RbmModel:
    """Two visible, two hidden units with the worked-example weights."""
    return RbmModel(np.array([[2, -2], [-1, 0]]), np.array([0, 0]), np.array([-1, 2]))


def random_model(nv: int, nh: int, rng: np.random.Generator, low: int = -3, high: int = 3,
                 temperature: float = 1.0) -> RbmModel:
    """Weights and biases i.i.d. uniform on the integers ``low .. high``."""
    W = rng.integers(low, high + 1, size=(nv, nh))
    vb = rng.integers(low, high + 1, size=nv)
    hb = rng.integers(low, high + 1, size=nh)
    return RbmModel(W, vb, hb, temperature)


def energy(model: RbmModel, v, h) -> float:
    v = np.asarray(v)
    h = np.asarray(h)
    if v.shape != (model.nv,) or h.shape != (model.nh,):
        raise ValueError(f"expected v of length {model.nv} and h of length {model.nh}")
    return float(-(model.visible_bias @ v) - (model.hidden_bias @ h) - v @ model.weights @ h)


def _bit_table(n: int) -> np.ndarray:
    return ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.float64)


@dataclass(frozen=True)
class ConfigDistribution:
    probs: np.ndarray
    log_z: float
    nv: int
    nh: int

    def config(self, index: int) -> np.ndarray:
        return (int(index) >> np.arange(self.nv + self.nh)) & 1


def exact_distribution(model: RbmModel, cap: int = ENUMERATION_CAP) -> ConfigDistribution:
    """Enumerate all ``2**(nv + nh)`` configurations."""
    nv, nh = model.nv, model.nh
    if nv + nh > cap:
        raise ValueError(f"{nv + nh} units exceeds the enumeration cap of {cap}")
    V = _bit_table(nv)
    H = _bit_table(nh)
    W = model.weights.astype(float)
    # rows: hidden configuration, columns: visible configuration
    neg_e = (
        (H @ model.hidden_bias.astype(float))[:, None]
        + (V @ model.visible_bias.astype(float))[None, :]
        + H @ (W.T @ V.T)
    )
    logp = (neg_e / model.temperature).ravel()
    log_z = float(logsumexp(logp))
    probs = np.exp(logp - log_z)
    return ConfigDistribution(probs, log_z, nv, nh)


@dataclass
class SampleRecord:
    """Packed configurations and the time (or sweep index) of each sample."""

    indices: np.ndarray
    times: np.ndarray
    nv: int
    nh: int

    def __len__(self):
        return self.indices.size

    def configs(self) -> np.ndarray:
        return ((self.indices[:, None] >> np.arange(self.nv + self.nh)) & 1).astype(np.int8)

    def head(self, n: int) -> "SampleRecord":
        return SampleRecord(self.indices[:n], self.times[:n], self.nv, self.nh)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("index,time,config-bits\n")
        width = self.nv + self.nh
        for i, (c, t) in enumerate(zip(self.indices.tolist(), self.times.tolist())):
            bits = "".join(str((c >> k) & 1) for k in range(width))
            out.write(f"{i},{t:.17g},{bits}\n")
        return out.getvalue()


def gibbs_sample(model: RbmModel, n_sweeps: int, seed=0, burn_in: int = 0,
                 block: int = 1 << 16) -> SampleRecord:
    """Block Gibbs chain started from all zeros; one sample per full sweep."""
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be positive")
    rng = np.random.default_rng(seed)
    W = model.weights.astype(np.float64)
    vb = model.visible_bias.astype(np.float64)
    hb = model.hidden_bias.astype(np.float64)
    v = np.zeros(model.nv, dtype=np.int8)
    h = np.zeros(model.nh, dtype=np.int8)
    total = n_sweeps + burn_in
    out = np.empty(total, dtype=np.int64)
    for start in range(0, total, block):
        stop = min(start + block, total)
        u = rng.random((stop - start, model.nv + model.nh))
        _kernel.gibbs_sweeps(W, vb, hb, float(model.temperature), v, h, u, out[start:stop])
    return SampleRecord(out[burn_in:], np.arange(burn_in, total, dtype=np.float64),
                        model.nv, model.nh)


@dataclass(frozen=True)
class CompiledRbm:
    """Event network realising an RBM, plus the id layout of its units."""

    network: Network
    model: RbmModel
    streams: int
    depth: int
    visible_ids: tuple[int, ...]
    hidden_ids: tuple[int, ...]
    bias_ids: tuple[int, int]
    fan_in_streams: dict = field(default_factory=dict)

    @property
    def unit_ids(self) -> tuple[int, ...]:
        return self.visible_ids + self.hidden_ids

    def reference_temperature(self, unit: str = "hidden") -> float:
        ids = self.hidden_ids if unit == "hidden" else self.visible_ids
        return effective_temperature(self.fan_in_streams[ids[0]], self.depth)


def effective_temperature(n_streams: int, depth: int) -> float:
    """Temperature whose logistic matches the counter's slope: ``N / (4 d)``."""
    return n_streams / (4.0 * depth)


def _connect(wiring, src, tgt, weight, K, order0=None, order1=None):
    # order0/order1 rank the streams for the 0- and 1-event split
    half = K // 2
    r0 = np.arange(K) if order0 is None else order0
    r1 = np.arange(K) if order1 is None else order1
    for s in range(K):
        # 0 events: half to each port
        wiring.setdefault((src, s, 0), []).append((tgt, 0 if r0[s] < half else 1))
        # 1 events: half + weight to the 1 port
        wiring.setdefault((src, s, 1), []).append((tgt, 1 if r1[s] < half + weight else 0))


def compile_network(model: RbmModel, streams: int = 4, *, depth: int = 3,
                    frequencies=None, phases=None, rng: np.random.Generator | None = None,
                    freq_range=(40.0, 50.0), mode: str = "periodic",
                    shuffle: bool = True) -> CompiledRbm:
    """Wire an integer RBM as a quasi-periodic event network.

    Layout: visible units ``0 .. nv-1``, hidden units ``nv .. nv+nh-1``, then
    the always-1 bias neuron feeding hidden units and the one feeding
    visible units.  Every unit has ``streams`` oscillators; frequencies and
    phases are drawn from ``rng`` unless given as ``(n_neurons, streams)``
    arrays.

    Only the number of streams routed to each port is fixed by the weight.
    With ``shuffle`` each source-target pair picks its streams by a random
    permutation drawn after the phases; otherwise streams ``0 .. K/2-1`` (plus
    ``w`` more for 1 events) go to the 1 port for every pair.  Fixed
    choices give targets with equal weights identical input sequences, so
    their counters lock together.
    """
    K = int(streams)
    if K < 2 or K % 2:
        raise ValueError(f"streams per neuron must be a positive even number, got {K}")
    limit = K // 2
    for name, arr in (("weight", model.weights), ("visible bias", model.visible_bias),
                      ("hidden bias", model.hidden_bias)):
        if arr.size and np.abs(arr).max() > limit:
            raise ValueError(f"{name} magnitude {np.abs(arr).max()} exceeds K/2 = {limit}")
    nv, nh = model.nv, model.nh
    n = nv + nh + 2
    if frequencies is None or phases is None:
        if rng is None:
            rng = np.random.default_rng(0)
        if frequencies is None:
            frequencies = draw_frequencies(rng, n * K, freq_range).reshape(n, K)
        if phases is None:
            phases = draw_phases(rng, n * K).reshape(n, K)
    frequencies = np.asarray(frequencies, dtype=float).reshape(n, K)
    phases = np.asarray(phases, dtype=float).reshape(n, K)

    unit = counter_fsm(depth)
    one = constant_fsm(1)
    visible = tuple(range(nv))
    hidden = tuple(range(nv, nv + nh))
    hbias_id, vbias_id = nv + nh, nv + nh + 1
    neurons = []
    for i in range(n):
        oscs = tuple(OscillatorSpec(float(frequencies[i, s]), float(phases[i, s]), mode) for s in range(K))
        neurons.append(NeuronInstance(i, unit if i < nv + nh else one, oscs))

    if shuffle and rng is None:
        rng = np.random.default_rng(0)

    def connect(src, tgt, w):
        orders = (rng.permutation(K), rng.permutation(K)) if shuffle else (None, None)
        _connect(wiring, src, tgt, w, K, *orders)

    wiring: dict = {}
    for i in range(nv):
        for j in range(nh):
            w = int(model.weights[i, j])
            connect(visible[i], hidden[j], w)
            connect(hidden[j], visible[i], w)
    for j in range(nh):
        connect(hbias_id, hidden[j], int(model.hidden_bias[j]))
    for i in range(nv):
        connect(vbias_id, visible[i], int(model.visible_bias[i]))

    fan_in = {u: K * (nv + 1) for u in hidden}
    fan_in.update({u: K * (nh + 1) for u in visible})
    return CompiledRbm(Network(neurons, wiring), model, K, depth, visible, hidden,
                       (hbias_id, vbias_id), fan_in)


def record_samples(trace: Trace, compiled: CompiledRbm) -> SampleRecord:
    """Snapshot ``[v, h]`` each time every unit oscillator has fired since the last snapshot.

    The state of a unit is its most recently emitted bit (0 before its first
    event).  Bias neurons do not gate sampling.
    """
    n_neurons = len(compiled.network.neurons)
    unit_slot = np.full(n_neurons, -1, dtype=np.int64)
    unit_slot[list(compiled.unit_ids)] = np.arange(len(compiled.unit_ids))
    K = compiled.streams
    osc_slot = np.zeros((n_neurons, K), dtype=np.int64)
    for pos, u in enumerate(compiled.unit_ids):
        osc_slot[u] = pos * K + np.arange(K)
    n_osc = len(compiled.unit_ids) * K
    cap = max(1, len(trace) // n_osc + 1)
    out_idx = np.empty(cap, dtype=np.int64)
    out_t = np.empty(cap)
    m = _kernel.collect_samples(trace.source, trace.stream.astype(np.int64), trace.bit, trace.time,
                                unit_slot, osc_slot, n_osc, out_idx, out_t)
    return SampleRecord(out_idx[:m].copy(), out_t[:m].copy(), compiled.model.nv, compiled.model.nh)


def _counts(record, size):
    return np.bincount(record.indices, minlength=size)


def kl_divergence(empirical: SampleRecord, exact: ConfigDistribution) -> float:
    """``KL(empirical || exact)`` in nats."""
    n = len(empirical)
    if n == 0:
        raise ValueError("empty sample record")
    return _kl_from_counts(_counts(empirical, exact.probs.size), n, exact.probs)


def _kl_from_counts(counts, n, probs):
    nz = counts > 0
    q = counts[nz] / n
    return float(max(0.0, np.sum(q * (np.log(q) - np.log(probs[nz])))))


def kl_curve(record: SampleRecord, exact: ConfigDistribution, checkpoints) -> np.ndarray:
    """KL of the first ``n`` samples for each ``n`` in ``checkpoints`` (ascending)."""
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    if np.any(np.diff(checkpoints) <= 0) or checkpoints[0] < 1 or checkpoints[-1] > len(record):
        raise ValueError("checkpoints must be ascending and within the record")
    counts = np.zeros(exact.probs.size, dtype=np.int64)
    out = np.empty(checkpoints.size)
    done = 0
    for i, n in enumerate(checkpoints):
        counts += np.bincount(record.indices[done:n], minlength=counts.size)
        done = int(n)
        out[i] = _kl_from_counts(counts, done, exact.probs)
    return out
