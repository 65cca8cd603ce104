"""
Sampling an RBM with an event network
=====================================

Each unit is a depth-3 counter.  A weight w from one unit to another is
realised by routing K streams of the source: 0 events split evenly between
the target's ports, 1 events send ``K/2 + w`` streams to the 1 port.  At the
effective temperature ``N / (4 d)`` the network's snapshots approximate the
Boltzmann distribution.
"""

import numpy as np

from quasiperiodic import rbm
from quasiperiodic.experiments import rbm_experiment

model = rbm.random_model(3, 3, np.random.default_rng(5), -2, 2)
print("weights\n", model.weights)

runs = rbm_experiment(model=model, streams=6, samples=20_000, repeats=1,
                      checkpoints=[200, 2_000, 20_000], seed=3)
r = runs[0]
print("temperature", r.temperature)
for n, g, k in zip(r.checkpoints, r.kl_gibbs, r.kl_network):
    print(f"{n:6d} samples: KL gibbs {g:.4f}  network {k:.4f}")

# The Gibbs curve keeps falling; the network curve levels off.  Units that
# share a source see the same events, which leaves a small correlation the
# Boltzmann distribution does not have.
