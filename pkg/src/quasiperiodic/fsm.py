"""Finite state machines that drive event-routing neurons.

States are integers ``0 .. state_count - 1``.  A neuron whose FSM is in
state ``s`` routes each event of its internal oscillator to output port
``output_bit[s]``; input events move the FSM along ``transitions``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "FsmSpec",
    "FsmError",
    "counter_fsm",
    "constant_fsm",
    "transition",
    "output_bit",
    "validate",
]


class FsmError(ValueError):
    """Raised when an FSM fails validation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class FsmSpec:
    """Transition graph over input symbols plus a state -> output-bit map.

    ``transitions`` maps ``(state, symbol)`` to the next state.  Nothing is
    checked at construction time so that malformed machines can be handed
    to :func:`validate`; the engine refuses to run unvalidated machines.
    """

    state_count: int
    transitions: Mapping[tuple[int, int], int]
    output_bit: tuple[int, ...]
    initial_state: int = 0
    input_alphabet: tuple[int, ...] = (0, 1)
    name: str = "fsm"
    _table: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "transitions", dict(self.transitions))
        object.__setattr__(self, "output_bit", tuple(int(b) for b in self.output_bit))
        object.__setattr__(self, "input_alphabet", tuple(self.input_alphabet))

    def next_state(self, state: int, symbol: int) -> int:
        return self.transitions[(state, symbol)]

    def output(self, state: int) -> int:
        return self.output_bit[state]

    def symbol_index(self, symbol: int) -> int:
        return self.input_alphabet.index(symbol)

    def table(self) -> np.ndarray:
        """Dense ``(state_count, len(alphabet))`` int array of next states."""
        if self._table is None:
            errors = validate(self)
            if errors:
                raise FsmError(errors)
            tab = np.empty((self.state_count, len(self.input_alphabet)), dtype=np.int32)
            for s in range(self.state_count):
                for j, sym in enumerate(self.input_alphabet):
                    tab[s, j] = self.transitions[(s, sym)]
            tab.setflags(write=False)
            object.__setattr__(self, "_table", tab)
        return self._table

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "states": self.state_count,
            "alphabet": list(self.input_alphabet),
            "transitions": [
                [s, sym, self.transitions[(s, sym)]]
                for s in range(self.state_count)
                for sym in self.input_alphabet
                if (s, sym) in self.transitions
            ],
            "output": list(self.output_bit),
            "initial": self.initial_state,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FsmSpec":
        return cls(
            state_count=int(doc["states"]),
            transitions={(int(s), int(a)): int(t) for s, a, t in doc["transitions"]},
            output_bit=tuple(doc["output"]),
            initial_state=int(doc.get("initial", 0)),
            input_alphabet=tuple(int(a) for a in doc.get("alphabet", (0, 1))),
            name=str(doc.get("name", "fsm")),
        )


def transition(fsm: FsmSpec, state: int, symbol: int) -> int:
    return fsm.next_state(state, symbol)


def output_bit(fsm: FsmSpec, state: int) -> int:
    return fsm.output(state)


def validate(fsm: FsmSpec) -> list[str]:
    """Return a list of violated invariants; an empty list means valid."""
    errors = []
    n = fsm.state_count
    if n < 1:
        return [f"state_count must be positive, got {n}"]
    if len(set(fsm.input_alphabet)) != len(fsm.input_alphabet) or not fsm.input_alphabet:
        errors.append(f"input alphabet must be non-empty and distinct: {fsm.input_alphabet}")
    if not 0 <= fsm.initial_state < n:
        errors.append(f"initial state {fsm.initial_state} out of range")
    if len(fsm.output_bit) != n:
        errors.append(f"output map has {len(fsm.output_bit)} entries for {n} states")
    for s, b in enumerate(fsm.output_bit):
        if b not in (0, 1):
            errors.append(f"output of state {s} is {b}, expected 0 or 1")
    for (s, sym), t in fsm.transitions.items():
        if not 0 <= s < n:
            errors.append(f"transition from unknown state {s}")
        if sym not in fsm.input_alphabet:
            errors.append(f"transition ({s}, {sym}) uses symbol outside alphabet")
        if not 0 <= t < n:
            errors.append(f"transition ({s}, {sym}) -> unknown state {t}")
    for s in range(n):
        for sym in fsm.input_alphabet:
            if (s, sym) not in fsm.transitions:
                errors.append(f"missing transition for (state={s}, symbol={sym})")
    if errors:
        return errors

    seen = {fsm.initial_state}
    todo = deque(seen)
    while todo:
        s = todo.popleft()
        for sym in fsm.input_alphabet:
            t = fsm.transitions[(s, sym)]
            if t not in seen:
                seen.add(t)
                todo.append(t)
    for s in range(n):
        if s not in seen:
            errors.append(f"state {s} unreachable from initial state {fsm.initial_state}")
    return errors


def counter_fsm(depth: int) -> FsmSpec:
    """Saturating up/down counter with ``2 * depth`` states.

    Input 1 counts up, input 0 counts down, both saturating.  The upper
    ``depth`` states emit 1.  ``depth=1`` is the two-state neuron whose
    value is simply the last input it received.
    """
    if depth < 1:
        raise ValueError(f"counter depth must be >= 1, got {depth}")
    n = 2 * depth
    trans = {}
    for s in range(n):
        trans[(s, 1)] = min(s + 1, n - 1)
        trans[(s, 0)] = max(s - 1, 0)
    out = tuple(int(s >= depth) for s in range(n))
    return FsmSpec(n, trans, out, initial_state=0, name=f"counter{depth}")


def constant_fsm(bit: int) -> FsmSpec:
    """Single-state machine that always emits ``bit`` (source and bias units)."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    return FsmSpec(1, {(0, 0): 0, (0, 1): 0}, (bit,), name=f"const{bit}")
