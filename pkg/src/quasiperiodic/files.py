"""JSON documents for networks, FSMs and RBM models, and small file helpers.

Network document::

    {"fsms": {name: fsm-doc, ...},
     "neurons": [{"id": 0, "fsm": name, "state": 0, "active": true,
                  "oscillators": [{"frequency": 45.0, "initial_phase": 1.0,
                                   "mode": "periodic"}]}, ...],
     "wiring":   [[source, stream, bit, target, symbol], ...],
     "controls": [[source, stream, bit, target, "shutdown" | "wake"], ...]}

FSM document::

    {"name": "counter3", "states": 6, "alphabet": [0, 1],
     "transitions": [[state, symbol, next_state], ...],
     "output": [0, 0, 0, 1, 1, 1], "initial": 0}

RBM document::

    {"visible": 2, "hidden": 2, "weights": [[2, -2], [-1, 0]],
     "visible_bias": [0, 0], "hidden_bias": [-1, 2], "temperature": 1.0}
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .engine import Network
from .fsm import FsmSpec
from .rbm import RbmModel

__all__ = [
    "dump_json",
    "load_network",
    "save_network",
    "load_fsm",
    "save_fsm",
    "load_model",
    "save_model",
    "write_text",
    "sha256",
]


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_network(path) -> Network:
    return Network.from_dict(_load(path))


def save_network(network: Network, path) -> Path:
    return write_text(path, dump_json(network.to_dict()))


def load_fsm(path) -> FsmSpec:
    return FsmSpec.from_dict(_load(path))


def save_fsm(fsm: FsmSpec, path) -> Path:
    return write_text(path, dump_json(fsm.to_dict()))


def load_model(path) -> RbmModel:
    return RbmModel.from_dict(_load(path))


def save_model(model: RbmModel, path) -> Path:
    return write_text(path, dump_json(model.to_dict()))
