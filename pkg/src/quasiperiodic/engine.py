"""Deterministic discrete-event simulation of FSM neurons.

Every neuron owns one or more oscillators.  When an oscillator fires, the
neuron emits an event whose bit is read from its FSM's current state; the
event is delivered to every wired ``(target, input symbol)`` and each target
FSM transitions immediately.  Events are processed in ``(time, neuron id,
stream)`` order, so a run is a pure function of ``(network, stop, seed)``.

Two implementations share the same oscillator clocks:

* :class:`Simulation` -- a plain ``heapq`` event loop with an explicit
  :meth:`Simulation.step`.  Slow, and kept as the readable reference.
* :func:`run` -- the same loop compiled with numba.  Used for experiments;
  the test-suite checks that both produce identical traces.
"""

from __future__ import annotations

import heapq
import io
from dataclasses import dataclass, field, replace
from math import isfinite
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import _kernel
from .fsm import FsmError, FsmSpec, validate as validate_fsm

__all__ = [
    "OscillatorSpec",
    "Event",
    "NeuronInstance",
    "Network",
    "NetworkError",
    "Trace",
    "BitSequence",
    "Simulation",
    "next_event_time",
    "draw_frequencies",
    "draw_phases",
    "run",
    "run_reference",
    "SHUTDOWN",
    "WAKE",
]

SHUTDOWN = "shutdown"
WAKE = "wake"
_ACTIONS = {SHUTDOWN: _kernel.SHUTDOWN, WAKE: _kernel.WAKE}

PERIODIC = "periodic"
POISSON = "poisson"

# Poisson firing times are drawn in fixed-size blocks so results never
# depend on how the run is chunked.
_POISSON_BLOCK = 4096


class NetworkError(ValueError):
    """Raised for networks that fail validation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class OscillatorSpec:
    frequency: float
    initial_phase: float = 1.0
    mode: str = PERIODIC

    def __post_init__(self):
        if not (self.frequency > 0 and isfinite(self.frequency)):
            raise ValueError(f"oscillator frequency must be positive, got {self.frequency}")
        if not 0.0 < self.initial_phase <= 1.0:
            raise ValueError(f"initial phase must lie in (0, 1], got {self.initial_phase}")
        if self.mode not in (PERIODIC, POISSON):
            raise ValueError(f"unknown oscillator mode {self.mode!r}")


class Event(NamedTuple):
    time: float
    source: int
    stream: int
    bit: int


def next_event_time(osc: OscillatorSpec, k: int, rng: np.random.Generator | None = None) -> float:
    """Time of firing ``k`` (0-based) of ``osc``.

    Periodic oscillators use the closed form ``(initial_phase + k) / frequency``.
    Poisson oscillators return the running sum of ``k + 1`` exponential gaps
    drawn from ``rng``; pass a freshly seeded generator for reproducibility.
    """
    if k < 0:
        raise ValueError("event index must be non-negative")
    if osc.mode == PERIODIC:
        return (osc.initial_phase + k) / osc.frequency
    if rng is None:
        raise ValueError("poisson oscillators need a random generator")
    gaps = rng.exponential(1.0 / osc.frequency, size=k + 1)
    return float(np.cumsum(gaps)[-1])


class _PoissonClock:
    """Lazily extended firing times of one Poisson oscillator."""

    def __init__(self, frequency: float, rng: np.random.Generator):
        self.scale = 1.0 / frequency
        self.rng = rng
        self.base = 0
        self.block = np.empty(0)
        self.last = 0.0

    def advance(self):
        """Replace the buffer with the next block of firing times."""
        self.base += self.block.size
        gaps = self.rng.exponential(self.scale, size=_POISSON_BLOCK)
        self.block = np.cumsum(np.concatenate(([self.last], gaps)))[1:]
        self.last = float(self.block[-1])

    def time(self, k: int) -> float:
        if k < self.base:
            raise IndexError("poisson clock cannot rewind")
        while k >= self.base + self.block.size:
            self.advance()
        return float(self.block[k - self.base])


@dataclass(frozen=True)
class NeuronInstance:
    id: int
    fsm: FsmSpec
    oscillators: tuple[OscillatorSpec, ...]
    state: int | None = None
    active: bool = True

    def __post_init__(self):
        object.__setattr__(self, "oscillators", tuple(self.oscillators))
        if self.state is None:
            object.__setattr__(self, "state", self.fsm.initial_state)


WiringKey = tuple[int, int, int]


@dataclass(frozen=True)
class Network:
    """Neurons plus static wiring.

    ``wiring[(source, stream, bit)]`` lists ``(target, input symbol)`` pairs
    receiving that event.  ``controls`` has the same keys and lists
    ``(target, action)`` pairs where action is ``"shutdown"`` (gate the
    target's output) or ``"wake"`` (ungate it and reset it to its FSM's
    initial state).  Neuron ids must be ``0 .. n-1`` in list order.
    """

    neurons: tuple[NeuronInstance, ...]
    wiring: Mapping[WiringKey, tuple[tuple[int, int], ...]] = field(default_factory=dict)
    controls: Mapping[WiringKey, tuple[tuple[int, str], ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "neurons", tuple(self.neurons))
        object.__setattr__(
            self, "wiring", {tuple(k): tuple(tuple(t) for t in v) for k, v in self.wiring.items()}
        )
        object.__setattr__(
            self, "controls", {tuple(k): tuple(tuple(t) for t in v) for k, v in self.controls.items()}
        )

    def __hash__(self):
        return id(self)

    @property
    def n_oscillators(self) -> int:
        return sum(len(n.oscillators) for n in self.neurons)

    def validate(self) -> list[str]:
        errors = []
        checked = {}
        n = len(self.neurons)
        for pos, neuron in enumerate(self.neurons):
            if neuron.id != pos:
                errors.append(f"neuron at position {pos} has id {neuron.id}")
            key = id(neuron.fsm)
            if key not in checked:
                checked[key] = validate_fsm(neuron.fsm)
                errors.extend(f"neuron {neuron.id} fsm: {e}" for e in checked[key])
            if not 0 <= neuron.state < neuron.fsm.state_count:
                errors.append(f"neuron {neuron.id} state {neuron.state} invalid")
        for table, what in ((self.wiring, "wiring"), (self.controls, "control")):
            for (src, stream, bit), targets in table.items():
                if not 0 <= src < n:
                    errors.append(f"{what} source {src} does not exist")
                    continue
                if not 0 <= stream < len(self.neurons[src].oscillators):
                    errors.append(f"{what} ({src}, {stream}, {bit}): no such stream")
                if bit not in (0, 1):
                    errors.append(f"{what} ({src}, {stream}, {bit}): bit must be 0 or 1")
                for tgt, arg in targets:
                    if not 0 <= tgt < n:
                        errors.append(f"{what} ({src}, {stream}, {bit}) -> missing target {tgt}")
                    elif what == "wiring" and arg not in self.neurons[tgt].fsm.input_alphabet:
                        errors.append(
                            f"wiring ({src}, {stream}, {bit}) -> {tgt}: symbol {arg} "
                            "not in target alphabet"
                        )
                    elif what == "control" and arg not in _ACTIONS:
                        errors.append(f"control ({src}, {stream}, {bit}) -> {tgt}: bad action {arg!r}")
        return errors

    def check(self):
        errors = self.validate()
        if errors:
            raise NetworkError(errors)

    def with_oscillators(self, mode: str) -> "Network":
        """Copy with every oscillator switched to ``mode``."""
        neurons = [
            replace(nr, oscillators=tuple(replace(o, mode=mode) for o in nr.oscillators))
            for nr in self.neurons
        ]
        return Network(neurons, self.wiring, self.controls)

    def to_dict(self) -> dict:
        fsms = {}
        names = {}
        for nr in self.neurons:
            if id(nr.fsm) not in names:
                name = nr.fsm.name
                while name in fsms:
                    name += "_"
                names[id(nr.fsm)] = name
                fsms[name] = nr.fsm.to_dict()
        return {
            "fsms": fsms,
            "neurons": [
                {
                    "id": nr.id,
                    "fsm": names[id(nr.fsm)],
                    "state": nr.state,
                    "active": nr.active,
                    "oscillators": [
                        {"frequency": o.frequency, "initial_phase": o.initial_phase, "mode": o.mode}
                        for o in nr.oscillators
                    ],
                }
                for nr in self.neurons
            ],
            "wiring": [[*k, t, s] for k in sorted(self.wiring) for t, s in self.wiring[k]],
            "controls": [[*k, t, a] for k in sorted(self.controls) for t, a in self.controls[k]],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Network":
        fsms = {name: FsmSpec.from_dict(d) for name, d in doc["fsms"].items()}
        neurons = [
            NeuronInstance(
                id=int(d["id"]),
                fsm=fsms[d["fsm"]],
                oscillators=tuple(OscillatorSpec(**o) for o in d["oscillators"]),
                state=d.get("state"),
                active=bool(d.get("active", True)),
            )
            for d in doc["neurons"]
        ]
        wiring: dict = {}
        for src, stream, bit, tgt, sym in doc.get("wiring", []):
            wiring.setdefault((src, stream, bit), []).append((tgt, sym))
        controls: dict = {}
        for src, stream, bit, tgt, act in doc.get("controls", []):
            controls.setdefault((src, stream, bit), []).append((tgt, act))
        return cls(neurons, wiring, controls)


class BitSequence(NamedTuple):
    times: np.ndarray
    bits: np.ndarray


@dataclass
class Trace:
    """Processed events of the recorded neurons, in processing order.

    ``counts`` holds the number of emitted events of *every* neuron, recorded
    or not; ``final_state`` is the FSM state of each neuron at the end.
    """

    time: np.ndarray
    source: np.ndarray
    stream: np.ndarray
    bit: np.ndarray
    counts: np.ndarray
    final_state: np.ndarray
    end_time: float

    def __len__(self):
        return self.time.size

    def events(self) -> list[Event]:
        return [
            Event(float(t), int(s), int(k), int(b))
            for t, s, k, b in zip(self.time, self.source, self.stream, self.bit)
        ]

    def sequence(self, neuron: int) -> BitSequence:
        """Chronological ``(time, bit)`` sequence of one neuron."""
        mask = self.source == neuron
        return BitSequence(self.time[mask], self.bit[mask].astype(np.int8))

    def to_csv(self, fh=None) -> str | None:
        """Write ``time,source,stream,bit`` with 17 significant digits."""
        out = io.StringIO() if fh is None else fh
        out.write("time,source,stream,bit\n")
        for t, s, k, b in zip(self.time.tolist(), self.source.tolist(), self.stream.tolist(), self.bit.tolist()):
            out.write(f"{t:.17g},{s},{k},{b}\n")
        return out.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, text: str) -> "Trace":
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        time = np.array([float(r[0]) for r in rows])
        source = np.array([int(r[1]) for r in rows], dtype=np.int32)
        n = int(source.max()) + 1 if rows else 0
        return cls(
            time=time,
            source=source,
            stream=np.array([int(r[2]) for r in rows], dtype=np.int16),
            bit=np.array([int(r[3]) for r in rows], dtype=np.int8),
            counts=np.bincount(source, minlength=n).astype(np.int64),
            final_state=np.full(n, -1, dtype=np.int32),
            end_time=float(time[-1]) if rows else 0.0,
        )


def draw_frequencies(rng: np.random.Generator, n: int, freq_range=(40.0, 50.0)) -> np.ndarray:
    lo, hi = freq_range
    if not 0 < lo <= hi:
        raise ValueError(f"bad frequency range {freq_range}")
    return rng.uniform(lo, hi, size=n)


def draw_phases(rng: np.random.Generator, n: int) -> np.ndarray:
    # uniform on (0, 1]
    return 1.0 - rng.random(n)


def _oscillator_rngs(seed, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _resolve_stop(duration, events, events_of, n_neurons):
    if (duration is None) == (events is None):
        raise ValueError("give exactly one of duration= or events=")
    if duration is not None:
        if not duration > 0:
            raise ValueError("duration must be positive")
        return float(duration), -1, np.iinfo(np.int64).max
    if events < 1:
        raise ValueError("event budget must be positive")
    if events_of is not None and not 0 <= events_of < n_neurons:
        raise ValueError(f"events_of={events_of} is not a neuron")
    return np.inf, -1 if events_of is None else int(events_of), int(events)


class Simulation:
    """Reference event loop with an explicit priority queue.

    The queue holds one pending firing ``(time, source, stream, k)`` per
    oscillator.  :meth:`step` processes exactly one emitted event.
    """

    def __init__(self, network: Network, seed=0):
        network.check()
        self.network = network
        self.state = [nr.state for nr in network.neurons]
        self.active = [nr.active for nr in network.neurons]
        self.counts = [0] * len(network.neurons)
        self.queue: list[tuple[float, int, int, int]] = []
        self._clocks = {}
        rngs = iter(_oscillator_rngs(seed, network.n_oscillators))
        for nr in network.neurons:
            for s, osc in enumerate(nr.oscillators):
                rng = next(rngs)
                if osc.mode == POISSON:
                    self._clocks[nr.id, s] = _PoissonClock(osc.frequency, rng)
                heapq.heappush(self.queue, (self._time(nr.id, s, 0), nr.id, s, 0))

    def _time(self, src, stream, k):
        clock = self._clocks.get((src, stream))
        if clock is not None:
            return clock.time(k)
        return next_event_time(self.network.neurons[src].oscillators[stream], k)

    def peek_time(self) -> float:
        return self.queue[0][0] if self.queue else np.inf

    def step(self, until: float = np.inf) -> Event | None:
        """Process the next emitted event; ``None`` if none occurs by ``until``."""
        net = self.network
        while self.queue and self.queue[0][0] <= until:
            t, src, stream, k = heapq.heappop(self.queue)
            heapq.heappush(self.queue, (self._time(src, stream, k + 1), src, stream, k + 1))
            if not self.active[src]:
                continue
            bit = net.neurons[src].fsm.output(self.state[src])
            self.counts[src] += 1
            for tgt, sym in net.wiring.get((src, stream, bit), ()):
                self.state[tgt] = net.neurons[tgt].fsm.next_state(self.state[tgt], sym)
            for tgt, action in net.controls.get((src, stream, bit), ()):
                if action == SHUTDOWN:
                    self.active[tgt] = False
                else:
                    self.active[tgt] = True
                    self.state[tgt] = net.neurons[tgt].fsm.initial_state
            return Event(t, src, stream, bit)
        return None


def run_reference(network: Network, *, duration=None, events=None, events_of=None, seed=0, record=None) -> Trace:
    """Same contract as :func:`run`, using :class:`Simulation`."""
    t_stop, count_neuron, remaining = _resolve_stop(duration, events, events_of, len(network.neurons))
    sim = Simulation(network, seed)
    keep = None if record is None else set(record)
    out = []
    last = 0.0
    while True:
        ev = sim.step(until=t_stop)
        if ev is None:
            break
        last = ev.time
        if keep is None or ev.source in keep:
            out.append(ev)
        if count_neuron < 0 or ev.source == count_neuron:
            remaining -= 1
            if remaining <= 0:
                break
    arr = np.array([tuple(e) for e in out], dtype=float).reshape(-1, 4)
    return Trace(
        time=arr[:, 0].copy(),
        source=arr[:, 1].astype(np.int32),
        stream=arr[:, 2].astype(np.int16),
        bit=arr[:, 3].astype(np.int8),
        counts=np.array(sim.counts, dtype=np.int64),
        final_state=np.array(sim.state, dtype=np.int32),
        end_time=t_stop if isfinite(t_stop) else last,
    )


class _Compiled:
    """Flat arrays describing a network for the compiled event loop."""

    def __init__(self, network: Network):
        network.check()
        neurons = network.neurons
        fsm_ids: dict[int, int] = {}
        fsms: list[FsmSpec] = []
        for nr in neurons:
            if id(nr.fsm) not in fsm_ids:
                fsm_ids[id(nr.fsm)] = len(fsms)
                fsms.append(nr.fsm)
        n_states = max(f.state_count for f in fsms)
        n_sym = max(len(f.input_alphabet) for f in fsms)
        self.trans = np.zeros((len(fsms), n_states, n_sym), dtype=np.int32)
        self.outmap = np.zeros((len(fsms), n_states), dtype=np.int8)
        for i, f in enumerate(fsms):
            self.trans[i, : f.state_count, : len(f.input_alphabet)] = f.table()
            self.outmap[i, : f.state_count] = f.output_bit
        self.fsm_of = np.array([fsm_ids[id(nr.fsm)] for nr in neurons], dtype=np.int32)
        self.state0 = np.array([nr.state for nr in neurons], dtype=np.int32)
        self.init_state = np.array([nr.fsm.initial_state for nr in neurons], dtype=np.int32)
        self.active0 = np.array([nr.active for nr in neurons], dtype=np.uint8)

        owner, stream, freq, phase, poisson = [], [], [], [], []
        self.osc_index = {}
        for nr in neurons:
            for s, osc in enumerate(nr.oscillators):
                self.osc_index[nr.id, s] = len(owner)
                owner.append(nr.id)
                stream.append(s)
                freq.append(osc.frequency)
                phase.append(osc.initial_phase)
                poisson.append(osc.mode == POISSON)
        self.osc_owner = np.array(owner, dtype=np.int32)
        self.osc_stream = np.array(stream, dtype=np.int32)
        self.osc_freq = np.array(freq, dtype=np.float64)
        self.osc_phase = np.array(phase, dtype=np.float64)
        self.osc_poisson = np.array(poisson, dtype=np.uint8)
        n_osc = len(owner)

        def csr(table, encode):
            rows = [[] for _ in range(2 * n_osc)]
            for (src, s, bit), targets in table.items():
                rows[2 * self.osc_index[src, s] + bit].extend(targets)
            ptr = np.zeros(2 * n_osc + 1, dtype=np.int64)
            ptr[1:] = np.cumsum([len(r) for r in rows])
            tgt = np.array([t for r in rows for t, _ in r], dtype=np.int32)
            arg = np.array([encode(t, a) for r in rows for t, a in r], dtype=np.int32)
            return ptr, tgt, arg

        self.w_ptr, self.w_tgt, self.w_sym = csr(
            network.wiring, lambda t, sym: neurons[t].fsm.symbol_index(sym)
        )
        self.c_ptr, self.c_tgt, self.c_act = csr(network.controls, lambda t, a: _ACTIONS[a])


def run(
    network: Network,
    *,
    duration: float | None = None,
    events: int | None = None,
    events_of: int | None = None,
    seed=0,
    record: Iterable[int] | None = None,
    buffer_size: int = 1 << 20,
) -> Trace:
    """Simulate ``network`` and return the trace of the recorded neurons.

    Stop after ``duration`` seconds (events at exactly ``duration`` are
    included) or after ``events`` emitted events -- counted over all neurons,
    or only those of neuron ``events_of``.  ``seed`` drives Poisson
    oscillators only; periodic networks ignore it.  ``record`` restricts the
    stored events to the given neurons (default: all).
    """
    t_stop, count_neuron, budget = _resolve_stop(duration, events, events_of, len(network.neurons))
    c = _Compiled(network)
    n = len(network.neurons)
    n_osc = c.osc_owner.size

    rec_mask = np.ones(n, dtype=np.uint8)
    if record is not None:
        rec_mask[:] = 0
        for i in record:
            rec_mask[i] = 1

    clocks: dict[int, _PoissonClock] = {}
    has_poisson = bool(c.osc_poisson.any())
    pbuf = np.zeros((n_osc if has_poisson else 1, _POISSON_BLOCK if has_poisson else 1))
    pbase = np.zeros(max(n_osc, 1), dtype=np.int64)
    if has_poisson:
        for o, rng in enumerate(_oscillator_rngs(seed, n_osc)):
            if c.osc_poisson[o]:
                clk = _PoissonClock(c.osc_freq[o], rng)
                clk.advance()
                clocks[o] = clk
                pbuf[o] = clk.block

    state = c.state0.copy()
    active = c.active0.copy()
    counts = np.zeros(n, dtype=np.int64)
    osc_k = np.zeros(n_osc, dtype=np.int64)
    q_cap = 1 << max(1, int(n_osc).bit_length())
    q_t = np.empty(q_cap)
    q_o = np.empty(q_cap, dtype=np.int32)
    size = 0
    for o in range(n_osc):
        t0 = _kernel.osc_time(o, 0, c.osc_freq, c.osc_phase, c.osc_poisson, pbuf, pbase)
        size = _kernel.queue_insert(q_t, q_o, 0, size, t0, o)
    q_state = np.array([0, size], dtype=np.int64)
    remaining = np.array([budget], dtype=np.int64)

    cap = int(buffer_size)
    out_t = np.empty(cap)
    out_src = np.empty(cap, dtype=np.int32)
    out_stream = np.empty(cap, dtype=np.int16)
    out_bit = np.empty(cap, dtype=np.int8)
    n_out = np.zeros(1, dtype=np.int64)
    aux = np.zeros(2, dtype=np.int64)
    tnow = np.zeros(1)
    chunks = []
    push_first = -1
    while True:
        code = _kernel.run_events(
            state, active, c.fsm_of, c.init_state, c.trans, c.outmap,
            c.osc_owner, c.osc_stream, c.osc_freq, c.osc_phase, c.osc_poisson, osc_k, pbuf, pbase,
            q_t, q_o, q_state,
            c.w_ptr, c.w_tgt, c.w_sym, c.c_ptr, c.c_tgt, c.c_act,
            rec_mask, counts,
            t_stop, count_neuron, remaining,
            out_t, out_src, out_stream, out_bit, n_out,
            push_first, aux, tnow,
        )
        push_first = -1
        m = int(n_out[0])
        if code == _kernel.BUFFER_FULL or code == _kernel.DONE:
            chunks.append((out_t[:m].copy(), out_src[:m].copy(), out_stream[:m].copy(), out_bit[:m].copy()))
            n_out[0] = 0
            if code == _kernel.DONE:
                break
        elif code == _kernel.NEED_POISSON:
            o = int(aux[0])
            if aux[1]:
                chunks.append((out_t[:m].copy(), out_src[:m].copy(), out_stream[:m].copy(), out_bit[:m].copy()))
                break
            clk = clocks[o]
            clk.advance()
            pbuf[o] = clk.block
            pbase[o] = clk.base
            push_first = o

    time = np.concatenate([ch[0] for ch in chunks])
    return Trace(
        time=time,
        source=np.concatenate([ch[1] for ch in chunks]),
        stream=np.concatenate([ch[2] for ch in chunks]),
        bit=np.concatenate([ch[3] for ch in chunks]),
        counts=counts,
        final_state=state,
        end_time=t_stop if isfinite(t_stop) else float(tnow[0]),
    )
