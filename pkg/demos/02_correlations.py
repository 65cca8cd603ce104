"""
How random is a quasi-periodic neuron?
======================================

The sources are deterministic oscillators with incommensurable frequencies.
The output bit sequence of a target still decorrelates quickly, and two
targets sharing all inputs stay only weakly correlated.  Poisson clocks give
the baseline.
"""

from quasiperiodic.experiments import autocorrelation_depth_sweep, correlation_experiment

res = correlation_experiment(depth=3, events=30_000, max_lag=10, seed=1)
for mode in ("periodic", "poisson"):
    auto, cross = res.auto[mode], res.cross[mode]
    print(f"{mode:9s} auto r(1..3) = {auto.r[1:4].round(3)}  band = {auto.band:.3f}")
    print(f"{mode:9s} max |cross r| = {abs(cross.r).max():.3f}")

# deeper counters remember more of their past
sweep = autocorrelation_depth_sweep(depths=(1, 3, 5), trials=2, events=30_000, max_lag=20)
for d, row in zip((1, 3, 5), sweep):
    print(f"depth {d}: mean |r| over lags 1..20 = {row.mean():.4f}")
