"""
A counter neuron driven by constant sources
===========================================

A depth-d counter steps up on a 1 and down on a 0, and emits 1 from its top
half.  Fed by many sources of which a fraction p emit 1, its output looks
like a coin with bias ``r**d / (1 + r**d)``, where ``r = p / (1 - p)``.
"""

import numpy as np

from quasiperiodic import counter_fsm
from quasiperiodic import markov
from quasiperiodic.experiments import draw_fan_in, fan_in_network
from quasiperiodic.engine import run

fsm = counter_fsm(3)
print(fsm.state_count, "states, outputs", fsm.output_bit)

# the Markov chain view: one input symbol per step, 1 with probability p
p = np.array([0.3, 0.5, 0.6, 0.7])
print("closed form :", np.round(markov.counter_activation(3, p), 4))
print("stationary  :", np.round(markov.activation_curve(fsm, p).q, 4))

# now the real thing: 100 oscillating sources, 60 of which emit 1
n = 100
freqs, phases = draw_fan_in(seed=0, tag=0, trial=0, n=n + 1)
net = fan_in_network(3, n, 60, freqs, phases)
trace = run(net, events=20_000, events_of=n, record=[n])
print("simulated at p=0.6:", trace.bit.mean().round(4))
