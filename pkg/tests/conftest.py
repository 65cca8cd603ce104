import numpy as np
import pytest

from quasiperiodic.engine import Network, NeuronInstance, OscillatorSpec, draw_phases
from quasiperiodic.fsm import constant_fsm, counter_fsm


def random_network(seed, n=6, streams=2, mode="periodic", controls=False):
    """Small mixed network of constant sources and counters with random wiring."""
    rng = np.random.default_rng(seed)
    neurons = []
    for i in range(n):
        fsm = constant_fsm(int(rng.integers(2))) if i < 2 else counter_fsm(int(rng.integers(1, 4)))
        oscs = tuple(
            OscillatorSpec(float(rng.uniform(40, 50)), float(p), mode)
            for p in draw_phases(rng, streams)
        )
        neurons.append(NeuronInstance(i, fsm, oscs))
    wiring = {}
    for src in range(n):
        for s in range(streams):
            for b in (0, 1):
                tgts = rng.choice(np.arange(2, n), size=2, replace=False)
                wiring[(src, s, b)] = [(int(t), int(rng.integers(2))) for t in tgts]
    ctl = {}
    if controls:
        ctl[(n - 1, 0, 1)] = [(2, "shutdown"), (3, "shutdown")]
        ctl[(0, 0, 0)] = [(2, "wake")]
        ctl[(0, 0, 1)] = [(2, "wake")]
        ctl[(1, 1, 0)] = [(3, "wake")]
        ctl[(1, 1, 1)] = [(3, "wake")]
    return Network(neurons, wiring, ctl)


@pytest.fixture
def small_network():
    return random_network(0)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abcdh")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
