"""Figure-level experiments as pure functions of their parameters and seed.

Every random draw comes from ``np.random.default_rng([seed, tag, ...])`` so
each piece of an experiment can be regenerated on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import markov, patterns, rbm, stats
from .engine import Network, NeuronInstance, OscillatorSpec, draw_frequencies, draw_phases, run
from .fsm import constant_fsm, counter_fsm

__all__ = [
    "fan_in_network",
    "draw_fan_in",
    "activation_trial",
    "activation_experiment",
    "correlation_experiment",
    "autocorrelation_depth_sweep",
    "rbm_experiment",
    "patterns_experiment",
    "log_checkpoints",
]

MODES = ("periodic", "poisson", "stationary")

_ACT, _CORR, _RBM, _PAT = 1, 2, 3, 4


def fan_in_network(depth: int, n_sources: int, n_ones: int, frequencies, phases,
                   n_targets: int = 1, mode: str = "periodic") -> Network:
    """``n_sources`` constant sources (the first ``n_ones`` emit 1) feeding counter targets.

    Sources have ids ``0 .. n_sources-1``; targets follow.  ``frequencies``
    and ``phases`` hold one value per neuron.
    """
    if not 0 <= n_ones <= n_sources:
        raise ValueError("n_ones must lie in [0, n_sources]")
    n = n_sources + n_targets
    frequencies = np.asarray(frequencies, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if frequencies.size != n or phases.size != n:
        raise ValueError(f"need {n} frequencies and phases")
    zero, one, target = constant_fsm(0), constant_fsm(1), counter_fsm(depth)
    neurons = [
        NeuronInstance(i, one if i < n_ones else zero, (OscillatorSpec(frequencies[i], phases[i], mode),))
        for i in range(n_sources)
    ]
    targets = range(n_sources, n)
    neurons += [NeuronInstance(t, target, (OscillatorSpec(frequencies[t], phases[t], mode),)) for t in targets]
    wiring = {(i, 0, b): [(t, b) for t in targets] for i in range(n_sources) for b in (0, 1)}
    return Network(neurons, wiring)


def draw_fan_in(seed, tag, trial, n: int, freq_range=(40.0, 50.0), frequencies=None):
    """Frequencies and phases for ``n`` neurons; explicit ``frequencies`` skip the draw."""
    rng = np.random.default_rng([seed, tag, trial])
    f = draw_frequencies(rng, n, freq_range)
    if frequencies is not None:
        f = np.asarray(frequencies, dtype=float)
        if f.shape != (n,):
            raise ValueError(f"need exactly {n} frequencies, got {f.size}")
    return f, draw_phases(rng, n)


def activation_trial(depth, n_ones, n_sources, events, frequencies, phases, mode="periodic", seed=0) -> float:
    """Fraction of 1 events of the target after ``events`` target events."""
    net = fan_in_network(depth, n_sources, n_ones, frequencies, phases, mode=mode)
    trace = run(net, events=events, events_of=n_sources, record=[n_sources], seed=seed)
    return stats.empirical_activation(trace.bit)


@dataclass
class ActivationResult:
    depth: int
    n_sources: int
    p: np.ndarray
    mean: dict
    std: dict
    trials: dict
    frequencies: list = field(default_factory=list)


def activation_experiment(depth=3, grid=None, modes=MODES, trials=5, events=150_000,
                          n_sources=100, freq_range=(40.0, 50.0), seed=0,
                          frequencies=None) -> ActivationResult:
    """Activation versus ``x/N`` for each mode; mean and std over trials.

    Trial ``k`` draws one set of frequencies and phases, shared by every
    grid point and by both simulated modes.  Grid values are rounded to the
    nearest achievable ``x/N``.
    """
    if grid is None:
        grid = np.linspace(0.0, 1.0, 21)
    x = np.rint(np.asarray(grid, dtype=float) * n_sources).astype(int)
    if np.any(x < 0) or np.any(x > n_sources):
        raise ValueError("grid values must lie in [0, 1]")
    if depth < 1 or trials < 1:
        raise ValueError("depth and trials must be positive")
    p = x / n_sources
    draws = [draw_fan_in(seed, _ACT, k, n_sources + 1, freq_range, frequencies) for k in range(trials)]
    mean, std, per_trial = {}, {}, {}
    for mode in modes:
        if mode == "stationary":
            q = markov.activation_curve(counter_fsm(depth), p).q
            vals = q[:, None]
        elif mode in ("periodic", "poisson"):
            vals = np.array([
                [activation_trial(depth, xi, n_sources, events, f, ph, mode, seed=[seed, _ACT, k, int(xi)])
                 for k, (f, ph) in enumerate(draws)]
                for xi in x
            ])
        else:
            raise ValueError(f"unknown mode {mode!r}")
        mean[mode] = vals.mean(axis=1)
        std[mode] = vals.std(axis=1)
        per_trial[mode] = vals
    return ActivationResult(depth, n_sources, p, mean, std, per_trial, [f.tolist() for f, _ in draws])


@dataclass
class CorrelationResult:
    auto: dict
    cross: dict
    frequencies: list


def _two_target_run(depth, n_sources, events, frequencies, phases, mode, seed):
    net = fan_in_network(depth, n_sources, n_sources // 2, frequencies, phases, n_targets=2, mode=mode)
    t0, t1 = n_sources, n_sources + 1
    trace = run(net, events=events, events_of=t0, record=[t0, t1], seed=seed)
    return trace.sequence(t0), trace.sequence(t1)


def correlation_experiment(depth=3, n_sources=100, events=150_000, max_lag=100,
                           modes=("periodic", "poisson"), freq_range=(40.0, 50.0), seed=0,
                           trial=0, frequencies=None) -> CorrelationResult:
    """Auto-correlation of one target and cross-correlation of two, at ``x/N = 0.5``."""
    f, ph = draw_fan_in(seed, _CORR, trial, n_sources + 2, freq_range, frequencies)
    auto, cross = {}, {}
    for mode in modes:
        a, b = _two_target_run(depth, n_sources, events, f, ph, mode, [seed, _CORR, trial])
        auto[mode] = stats.autocorrelation(a, max_lag)
        cross[mode] = stats.crosscorrelation(a, b, max_lag)
    return CorrelationResult(auto, cross, f.tolist())


def autocorrelation_depth_sweep(depths=(1, 3, 5), trials=5, n_sources=100, events=150_000,
                                max_lag=50, mode="periodic", freq_range=(40.0, 50.0), seed=0,
                                frequencies=None):
    """Mean ``|r|`` over lags ``1..max_lag``, array of shape ``(len(depths), trials)``.

    All depths in a trial share the same frequencies and phases.
    """
    out = np.empty((len(depths), trials))
    for k in range(trials):
        f, ph = draw_fan_in(seed, _CORR, 1000 + k, n_sources + 1, freq_range, frequencies)
        for i, d in enumerate(depths):
            net = fan_in_network(d, n_sources, n_sources // 2, f, ph, mode=mode)
            trace = run(net, events=events, events_of=n_sources, record=[n_sources],
                        seed=[seed, _CORR, 1000 + k])
            r = stats.autocorrelation(trace.bit, max_lag).r
            out[i, k] = np.abs(r[1:]).mean()
    return out


def log_checkpoints(n: int, start: int = 100, per_decade: int = 4) -> np.ndarray:
    if n < start:
        return np.array([n])
    k = int(np.floor(np.log10(n / start) * per_decade + 1e-9))
    pts = np.unique(np.rint(start * 10 ** (np.arange(k + 1) / per_decade)).astype(np.int64))
    return pts if pts[-1] == n else np.append(pts, n)


@dataclass
class RbmRepeat:
    model: rbm.RbmModel
    temperature: float
    checkpoints: np.ndarray
    kl_gibbs: np.ndarray
    kl_network: np.ndarray
    frequencies: list


def _network_samples(compiled: rbm.CompiledRbm, n_samples: int, seed):
    # every unit oscillator fires within its own period after a snapshot,
    # so n slowest periods always produce n snapshots
    f_min = min(o.frequency for u in compiled.unit_ids for o in compiled.network.neurons[u].oscillators)
    trace = run(compiled.network, duration=n_samples / f_min, record=compiled.unit_ids, seed=seed)
    record = rbm.record_samples(trace, compiled)
    return record.head(n_samples)


def rbm_experiment(nv=10, nh=10, streams=6, depth=3, samples=100_000, repeats=4,
                   weight_range=(-3, 3), temperature=None, model=None,
                   freq_range=(40.0, 50.0), seed=0, checkpoints=None, mode="periodic",
                   burn_in=0) -> list[RbmRepeat]:
    """KL-versus-samples curves of the Gibbs chain and the compiled network.

    ``temperature=None`` compares against ``N / (4 d)`` for the compiled
    fan-in ``N``.  A fixed ``model`` is reused for every repeat; otherwise each
    repeat draws its own random model.
    """
    if checkpoints is None:
        checkpoints = log_checkpoints(samples)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    out = []
    for r in range(repeats):
        rng = np.random.default_rng([seed, _RBM, r])
        m = model if model is not None else rbm.random_model(nv, nh, rng, *weight_range)
        compiled = rbm.compile_network(m, streams, depth=depth, rng=rng, freq_range=freq_range, mode=mode)
        if temperature is None:
            t_h, t_v = compiled.reference_temperature("hidden"), compiled.reference_temperature("visible")
            if t_h != t_v:
                raise ValueError("visible and hidden fan-in differ; pass an explicit temperature")
            T = t_h
        else:
            T = float(temperature)
        ref = m.with_temperature(T)
        exact = rbm.exact_distribution(ref)
        gibbs = rbm.gibbs_sample(ref, samples, seed=[seed, _RBM, r], burn_in=burn_in)
        network = _network_samples(compiled, samples, [seed, _RBM, r])
        freqs = [[o.frequency for o in nr.oscillators] for nr in compiled.network.neurons]
        out.append(RbmRepeat(ref, T, checkpoints, rbm.kl_curve(gibbs, exact, checkpoints),
                             rbm.kl_curve(network, exact, checkpoints), freqs))
    return out


def patterns_experiment(regime="equal", n_inputs=100, n_patterns=10, n_input_patterns=100,
                        cycles=10_000, clk_freq=45.0, depth=1, freq_range=(40.0, 50.0),
                        weight0=patterns.CROSSED, seed=0) -> patterns.PatternResult:
    rng = np.random.default_rng([seed, _PAT])
    spec = patterns.make_spec(rng, n_inputs, n_patterns, regime, clk_freq, depth, freq_range, weight0)
    return patterns.run_experiment(spec, n_input_patterns, cycles, seed=[seed, _PAT, 1])
