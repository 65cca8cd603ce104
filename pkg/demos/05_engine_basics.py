"""
The event engine by hand
========================

Two constant sources drive one counter.  Events are ordered by time, then
neuron id, then stream, so every run is reproducible.
"""

from quasiperiodic import Network, NeuronInstance, OscillatorSpec, constant_fsm, counter_fsm, run
from quasiperiodic.engine import Simulation

one, zero, target = constant_fsm(1), constant_fsm(0), counter_fsm(2)
neurons = [
    NeuronInstance(0, one, (OscillatorSpec(6.0, 1.0),)),
    NeuronInstance(1, zero, (OscillatorSpec(2.0, 0.5),)),
    NeuronInstance(2, target, (OscillatorSpec(5.0, 0.2),)),
]
wiring = {(0, 0, 1): [(2, 1)], (1, 0, 0): [(2, 0)]}
net = Network(neurons, wiring)

trace = run(net, duration=1.0)
print(trace.to_csv())

# the slow reference loop agrees event for event
sim = Simulation(net)
ref = [sim.step() for _ in range(len(trace.time))]
print("reference matches:", [(e.time, e.source, e.bit) for e in ref]
      == list(zip(trace.time.tolist(), trace.source.tolist(), trace.bit.tolist())))
