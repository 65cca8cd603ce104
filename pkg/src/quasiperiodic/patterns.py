"""Competitive pattern units driven by a binary input layer.

Ten pattern units each listen to a 100-unit input layer through binary
weights.  A 1 event from any pattern unit gates all pattern units off; the
``clk`` unit's events gate them back on in state 0.  Each clk interval thus
produces at most one winner, and the win frequencies are compared with
``m_i / sum_j m_j`` where ``m_i`` is the fraction of inputs matching
pattern ``i``'s weights.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .engine import SHUTDOWN, WAKE, Network, NeuronInstance, OscillatorSpec, draw_phases, run
from .fsm import constant_fsm, counter_fsm

__all__ = [
    "PatternNetworkSpec",
    "PatternResult",
    "match_scores",
    "predict_win_probabilities",
    "build_pattern_network",
    "make_spec",
    "pattern_frequencies",
    "run_experiment",
    "count_wins",
]

CROSSED = "crossed"
# relative half-width of the "equal" frequency band
SPREAD = 0.01
TO_IN0 = "to_in0"


@dataclass(frozen=True)
class PatternNetworkSpec:
    """Weights ``(n_patterns, n_inputs)``, input state ``z`` and all frequencies.

    ``weight0`` selects how a weight-0 connection routes events: ``"crossed"``
    sends the input's 0 events to ``in1`` and its 1 events to ``in0`` (so
    ``in1`` counts matches); ``"to_in0"`` sends both to ``in0``.
    """

    weights: np.ndarray
    z: np.ndarray
    input_freqs: np.ndarray
    pattern_freqs: np.ndarray
    clk_freq: float = 45.0
    depth: int = 1
    weight0: str = CROSSED

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=np.int8)
        z = np.asarray(self.z, dtype=np.int8).reshape(-1)
        if W.ndim != 2 or W.shape[1] != z.size:
            raise ValueError(f"weights {W.shape} incompatible with {z.size} inputs")
        if not np.isin(W, (0, 1)).all() or not np.isin(z, (0, 1)).all():
            raise ValueError("weights and input state must be binary")
        fi = np.asarray(self.input_freqs, dtype=float).reshape(-1)
        fp = np.asarray(self.pattern_freqs, dtype=float).reshape(-1)
        if fi.size != z.size or fp.size != W.shape[0]:
            raise ValueError("one frequency per input unit and per pattern unit is required")
        if self.weight0 not in (CROSSED, TO_IN0):
            raise ValueError(f"unknown weight-0 routing {self.weight0!r}")
        for name, val in (("weights", W), ("z", z), ("input_freqs", fi), ("pattern_freqs", fp)):
            object.__setattr__(self, name, val)

    @property
    def n_inputs(self) -> int:
        return self.z.size

    @property
    def n_patterns(self) -> int:
        return self.weights.shape[0]

    @property
    def pattern_ids(self) -> range:
        return range(self.n_inputs, self.n_inputs + self.n_patterns)

    @property
    def clk_id(self) -> int:
        return self.n_inputs + self.n_patterns

    def with_input(self, z) -> "PatternNetworkSpec":
        return PatternNetworkSpec(self.weights, z, self.input_freqs, self.pattern_freqs,
                                  self.clk_freq, self.depth, self.weight0)


def match_scores(spec: PatternNetworkSpec) -> np.ndarray:
    """Fraction of entries where ``w_i`` equals ``z``."""
    return (spec.weights == spec.z[None, :]).mean(axis=1)


def predict_win_probabilities(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    total = m.sum()
    if not total > 0:
        raise ValueError("match scores sum to zero")
    return m / total


def pattern_frequencies(regime: str, rng: np.random.Generator, n_inputs: int, n_patterns: int,
                        freq_range=(40.0, 50.0), spread: float = SPREAD):
    """Draw ``(input_freqs, pattern_freqs)``.

    ``"equal"`` draws every unit independently within ``spread`` (relative)
    of the centre of ``freq_range``; ``"uniform"`` draws from the whole
    range.  Independent draws keep the frequencies incommensurable: exactly
    equal pattern-unit frequencies freeze their phase order.
    """
    lo, hi = freq_range
    if regime == "equal":
        centre = 0.5 * (lo + hi)
        lo, hi = centre * (1 - spread), centre * (1 + spread)
    elif regime != "uniform":
        raise ValueError(f"unknown frequency regime {regime!r}")
    f = rng.uniform(lo, hi, size=n_inputs + n_patterns)
    return f[:n_inputs], f[n_inputs:]


def make_spec(rng: np.random.Generator, n_inputs: int = 100, n_patterns: int = 10,
              regime: str = "equal", clk_freq: float = 45.0, depth: int = 1,
              freq_range=(40.0, 50.0), weight0: str = CROSSED) -> PatternNetworkSpec:
    """Fair-coin weights and input state, frequencies per ``regime``."""
    W = rng.integers(0, 2, size=(n_patterns, n_inputs))
    z = rng.integers(0, 2, size=n_inputs)
    fi, fp = pattern_frequencies(regime, rng, n_inputs, n_patterns, freq_range)
    return PatternNetworkSpec(W, z, fi, fp, clk_freq, depth, weight0)


def build_pattern_network(spec: PatternNetworkSpec, phases=None,
                          rng: np.random.Generator | None = None) -> Network:
    """Inputs ``0..n_inputs-1``, pattern units next, clk last; one oscillator each."""
    n_in, n_pat = spec.n_inputs, spec.n_patterns
    n = n_in + n_pat + 1
    if phases is None:
        phases = draw_phases(rng if rng is not None else np.random.default_rng(0), n)
    phases = np.asarray(phases, dtype=float)
    freqs = np.concatenate([spec.input_freqs, spec.pattern_freqs, [spec.clk_freq]])
    inputs = [constant_fsm(0), constant_fsm(1)]
    unit = counter_fsm(spec.depth)
    clk = constant_fsm(0)

    neurons = []
    for i in range(n):
        osc = (OscillatorSpec(float(freqs[i]), float(phases[i])),)
        if i < n_in:
            fsm = inputs[spec.z[i]]
        elif i < n_in + n_pat:
            fsm = unit
        else:
            fsm = clk
        neurons.append(NeuronInstance(i, fsm, osc))

    wiring: dict = {}
    for j in range(n_in):
        for p in range(n_pat):
            tgt = n_in + p
            if spec.weights[p, j]:
                route = {0: 0, 1: 1}
            elif spec.weight0 == CROSSED:
                route = {0: 1, 1: 0}
            else:
                route = {0: 0, 1: 0}
            for bit in (0, 1):
                wiring.setdefault((j, 0, bit), []).append((tgt, route[bit]))

    pattern_ids = list(spec.pattern_ids)
    controls = {(p, 0, 1): [(q, SHUTDOWN) for q in pattern_ids] for p in pattern_ids}
    for bit in (0, 1):
        controls[(spec.clk_id, 0, bit)] = [(q, WAKE) for q in pattern_ids]
    return Network(neurons, wiring, controls)


def count_wins(trace, spec: PatternNetworkSpec) -> tuple[np.ndarray, int]:
    """Wins per pattern unit over complete clk intervals, and the interval count."""
    is_clk = trace.source == spec.clk_id
    clk_pos = np.flatnonzero(is_clk)
    if clk_pos.size < 2:
        return np.zeros(spec.n_patterns, dtype=np.int64), 0
    window = slice(clk_pos[0], clk_pos[-1])
    src = trace.source[window]
    bit = trace.bit[window]
    wins = (bit == 1) & (src >= spec.n_inputs) & (src < spec.clk_id)
    counts = np.bincount(src[wins] - spec.n_inputs, minlength=spec.n_patterns)
    return counts.astype(np.int64), int(clk_pos.size - 1)


@dataclass
class PatternResult:
    observed: np.ndarray
    predicted: np.ndarray
    match: np.ndarray
    inputs: np.ndarray
    cycles: int
    pattern_freqs: np.ndarray = field(default_factory=lambda: np.empty(0))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("input_pattern_id,unit_id,observed,predicted\n")
        for k in range(self.observed.shape[0]):
            for u in range(self.observed.shape[1]):
                out.write(f"{k},{u},{self.observed[k, u]:.17g},{self.predicted[k, u]:.17g}\n")
        return out.getvalue()


def run_experiment(spec: PatternNetworkSpec, n_input_patterns: int = 100,
                   events_per_pattern: int = 10_000, seed=0) -> PatternResult:
    """Apply random input patterns and measure win frequencies per clk interval.

    ``events_per_pattern`` is the number of complete clk intervals per input
    pattern.  ``spec.z`` is ignored; inputs and phases come from ``seed``.
    """
    if n_input_patterns < 1 or events_per_pattern < 1:
        raise ValueError("pattern and cycle counts must be positive")
    rng = np.random.default_rng(seed)
    record = [*spec.pattern_ids, spec.clk_id]
    observed = np.empty((n_input_patterns, spec.n_patterns))
    predicted = np.empty_like(observed)
    match = np.empty_like(observed)
    inputs = np.empty((n_input_patterns, spec.n_inputs), dtype=np.int8)
    for k in range(n_input_patterns):
        trial = spec.with_input(rng.integers(0, 2, size=spec.n_inputs))
        net = build_pattern_network(trial, rng=rng)
        trace = run(net, events=events_per_pattern + 1, events_of=trial.clk_id, record=record)
        wins, cycles = count_wins(trace, trial)
        observed[k] = wins / cycles
        match[k] = match_scores(trial)
        predicted[k] = predict_win_probabilities(match[k])
        inputs[k] = trial.z
    return PatternResult(observed, predicted, match, inputs, events_per_pattern, spec.pattern_freqs)
