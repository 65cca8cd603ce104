"""
Competing pattern units
=======================

Ten units compare a binary input against their weights.  The first unit to
emit a 1 silences the rest until the next clk event, so each clk interval
has one winner.  A unit wins in proportion to its match score.
"""

import numpy as np

from quasiperiodic.experiments import patterns_experiment

res = patterns_experiment(regime="equal", n_input_patterns=5, cycles=20_000, seed=2)
obs, pred = res.observed.ravel(), res.predicted.ravel()
print("correlation observed vs predicted:", np.corrcoef(obs, pred)[0, 1].round(3))
print("first input pattern")
print("  match    ", res.match[0].round(2))
print("  predicted", res.predicted[0].round(3))
print("  observed ", res.observed[0].round(3))
