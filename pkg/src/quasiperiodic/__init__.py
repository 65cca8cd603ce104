"""Quasi-periodic event-driven FSM neurons and their stochastic interpretation."""

from .fsm import FsmSpec, constant_fsm, counter_fsm
from .engine import Network, NeuronInstance, OscillatorSpec, Trace, run

__version__ = "0.1.0"

__all__ = [
    "FsmSpec",
    "constant_fsm",
    "counter_fsm",
    "Network",
    "NeuronInstance",
    "OscillatorSpec",
    "Trace",
    "run",
]
