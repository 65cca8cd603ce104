"""Command-line experiment runner.

Each subcommand resolves an :class:`ExperimentConfig` from defaults, an
optional JSON ``--config`` file and command-line flags (in that order of
precedence), validates it, runs, and writes CSV results plus
``config.json`` (the resolved config and drawn frequencies) and
``manifest.json`` (file names and SHA-256 digests) into ``--out``.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import experiments, markov, patterns, rbm
from .engine import POISSON, PERIODIC
from .files import dump_json, load_model, sha256, write_text
from .fsm import counter_fsm

__all__ = ["ExperimentConfig", "ConfigError", "main", "run_command"]

COMMANDS = ("activation", "correlations", "rbm", "patterns")
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str = "activation"
    seed: int = 0
    out: str = "results"
    freq_range: tuple = (40.0, 50.0)
    frequencies: list | None = None
    depth: int = 3
    depths: list | None = None
    n_sources: int = 100
    trials: int = 5
    events: int = 150_000
    grid: list | None = None
    mode: str | None = None
    max_lag: int = 100
    streams: int = 6
    temperature: float | None = None
    visible: int = 10
    hidden: int = 10
    weight_range: tuple = (-3, 3)
    model: str | None = None
    samples: int = 100_000
    repeats: int = 4
    burn_in: int = 0
    regime: str = "equal"
    n_patterns: int = 10
    n_inputs: int = 100
    n_input_patterns: int = 100
    cycles: int = 10_000
    clk_freq: float = 45.0
    weight0: str = patterns.CROSSED

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["freq_range"] = list(self.freq_range)
        d["weight_range"] = list(self.weight_range)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        # a written config.json also carries the drawn values
        unknown = set(doc) - names - {"drawn"}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**{k: v for k, v in doc.items() if k in names})

    def validate(self) -> "ExperimentConfig":
        """Check every field and return a normalised copy."""
        c = dataclasses.replace(self)
        err = []
        if c.experiment not in COMMANDS:
            err.append(f"unknown experiment {c.experiment!r}")
        try:
            lo, hi = (float(x) for x in c.freq_range)
            c.freq_range = (lo, hi)
            if not 0 < lo <= hi:
                err.append("freq_range must satisfy 0 < lo <= hi")
        except (TypeError, ValueError):
            err.append("freq_range must be two numbers")
        for name in ("depth", "n_sources", "trials", "events", "max_lag", "streams", "visible",
                     "hidden", "samples", "repeats", "n_patterns", "n_inputs",
                     "n_input_patterns", "cycles"):
            v = getattr(c, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                err.append(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(c.seed, int) or c.seed < 0:
            err.append("seed must be a non-negative integer")
        if not isinstance(c.burn_in, int) or c.burn_in < 0:
            err.append("burn_in must be a non-negative integer")
        if c.depths is not None:
            if not c.depths or any(not isinstance(d, int) or d < 1 for d in c.depths):
                err.append("depths must be a list of positive integers")
        if c.grid is not None:
            c.grid = [float(g) for g in c.grid]
            if not c.grid or any(not 0.0 <= g <= 1.0 for g in c.grid):
                err.append("grid values must lie in [0, 1]")
        modes = {"activation": experiments.MODES, "correlations": (PERIODIC, POISSON),
                 "rbm": (PERIODIC, POISSON), "patterns": (PERIODIC,)}.get(c.experiment, ())
        if c.mode is not None and c.mode not in modes:
            err.append(f"mode {c.mode!r} not available for {c.experiment}; choose from {list(modes)}")
        if c.temperature is not None and not float(c.temperature) > 0:
            err.append("temperature must be positive")
        if c.frequencies is not None:
            c.frequencies = [float(f) for f in c.frequencies]
            if any(not f > 0 for f in c.frequencies):
                err.append("frequencies must be positive")
            need = {"activation": c.n_sources + 1, "correlations": c.n_sources + 2}.get(c.experiment)
            if need is None:
                err.append(f"explicit frequencies are not supported for {c.experiment}")
            elif len(c.frequencies) != need:
                err.append(f"{c.experiment} needs {need} frequencies, got {len(c.frequencies)}")
        if c.experiment == "correlations" and c.max_lag >= c.events:
            err.append("max_lag must be smaller than events")
        if c.experiment == "rbm":
            if c.streams % 2:
                err.append("streams must be even")
            lo, hi = c.weight_range
            if int(lo) != lo or int(hi) != hi or lo > hi:
                err.append("weight_range must be two integers lo <= hi")
            elif c.model is None and max(abs(lo), abs(hi)) > c.streams // 2:
                err.append(f"weights in [{lo}, {hi}] need streams >= {2 * max(abs(lo), abs(hi))}")
            c.weight_range = (int(lo), int(hi))
            nv, nh = c.visible, c.hidden
            if c.model is not None:
                try:
                    m = load_model(c.model)
                except (OSError, ValueError, KeyError, TypeError) as exc:
                    err.append(f"cannot load model {c.model!r}: {exc}")
                else:
                    if m.nv + m.nh > rbm.ENUMERATION_CAP:
                        err.append(f"model has {m.nv + m.nh} units; enumeration cap is {rbm.ENUMERATION_CAP}")
                    biggest = max(np.abs(a).max(initial=0) for a in (m.weights, m.visible_bias, m.hidden_bias))
                    if biggest > c.streams // 2:
                        err.append(f"model weights need more than {c.streams} streams")
                    nv, nh = m.nv, m.nh
            elif c.visible + c.hidden > rbm.ENUMERATION_CAP:
                err.append(f"model has {c.visible + c.hidden} units; enumeration cap is {rbm.ENUMERATION_CAP}")
            if c.temperature is None and nv != nh:
                # each layer would see its own N / (4 d)
                err.append("visible and hidden layers differ in size; pass --temperature")
        if c.experiment == "patterns":
            if c.regime not in ("equal", "uniform"):
                err.append(f"unknown regime {c.regime!r}")
            if c.weight0 not in (patterns.CROSSED, patterns.TO_IN0):
                err.append(f"unknown weight0 routing {c.weight0!r}")
            if not float(c.clk_freq) > 0:
                err.append("clk_freq must be positive")
        if err:
            raise ConfigError("; ".join(err))
        return c


def _curve_csv(n, kl) -> str:
    rows = [f"{int(a)},{b:.17g}" for a, b in zip(n, kl)]
    return "n_samples,kl_nats\n" + "\n".join(rows) + "\n"


def _activation(c: ExperimentConfig):
    modes = (c.mode,) if c.mode else experiments.MODES
    res = experiments.activation_experiment(
        c.depth, c.grid, modes, c.trials, c.events, c.n_sources, c.freq_range, c.seed, c.frequencies)
    files = {}
    for mode in modes:
        if mode == "stationary":
            files["stationary.csv"] = markov.activation_curve(counter_fsm(c.depth), res.p).to_csv()
            continue
        rows = [f"{p:.17g},{m:.17g},{s:.17g}" for p, m, s in zip(res.p, res.mean[mode], res.std[mode])]
        files[f"activation_{mode}.csv"] = "p,mean,std\n" + "\n".join(rows) + "\n"
    return files, {"frequencies": res.frequencies}


def _correlations(c: ExperimentConfig):
    modes = (c.mode,) if c.mode else (PERIODIC, POISSON)
    res = experiments.correlation_experiment(c.depth, c.n_sources, c.events, c.max_lag, modes,
                                             c.freq_range, c.seed, frequencies=c.frequencies)
    files = {}
    for mode in modes:
        files[f"auto_{mode}.csv"] = res.auto[mode].to_csv()
        files[f"cross_{mode}.csv"] = res.cross[mode].to_csv()
    drawn = {"frequencies": res.frequencies}
    if c.depths:
        lag = min(50, c.max_lag)
        f = None if c.frequencies is None else c.frequencies[: c.n_sources + 1]
        sweep = experiments.autocorrelation_depth_sweep(
            tuple(c.depths), c.trials, c.n_sources, c.events, lag, modes[0], c.freq_range, c.seed, f)
        rows = [f"{d},{k},{sweep[i, k]:.17g}" for i, d in enumerate(c.depths) for k in range(c.trials)]
        files["autocorr_depth_sweep.csv"] = "depth,trial,mean_abs_r\n" + "\n".join(rows) + "\n"
    return files, drawn


def _rbm(c: ExperimentConfig):
    model = load_model(c.model) if c.model else None
    reps = experiments.rbm_experiment(
        c.visible, c.hidden, c.streams, c.depth, c.samples, c.repeats, c.weight_range,
        c.temperature, model, c.freq_range, c.seed, mode=c.mode or PERIODIC, burn_in=c.burn_in)
    files, drawn = {}, []
    for k, r in enumerate(reps):
        files[f"kl_gibbs_{k}.csv"] = _curve_csv(r.checkpoints, r.kl_gibbs)
        files[f"kl_network_{k}.csv"] = _curve_csv(r.checkpoints, r.kl_network)
        drawn.append({"model": r.model.to_dict(), "temperature": r.temperature,
                      "frequencies": r.frequencies})
    return files, {"repeats": drawn}


def _patterns(c: ExperimentConfig):
    res = experiments.patterns_experiment(c.regime, c.n_inputs, c.n_patterns, c.n_input_patterns,
                                          c.cycles, c.clk_freq, c.depth, c.freq_range, c.weight0, c.seed)
    return {"patterns.csv": res.to_csv()}, {"pattern_freqs": res.pattern_freqs.tolist()}


_RUNNERS = {"activation": _activation, "correlations": _correlations, "rbm": _rbm, "patterns": _patterns}


def run_command(config: ExperimentConfig) -> dict:
    """Validate, run and write results; returns the manifest."""
    c = config.validate()
    files, drawn = _RUNNERS[c.experiment](c)
    out = Path(c.out)
    manifest = {"experiment": c.experiment, "files": {}}
    for name, text in sorted(files.items()):
        manifest["files"][name] = sha256(write_text(out / name, text))
    snapshot = c.to_dict()
    snapshot["drawn"] = drawn
    manifest["files"]["config.json"] = sha256(write_text(out / "config.json", dump_json(snapshot)))
    write_text(out / "manifest.json", dump_json(manifest))
    return manifest


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _pair(kind):
    def parse(text):
        parts = text.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
        return tuple(kind(p) for p in parts)
    return parse


def _list(kind):
    def parse(text):
        return [kind(p) for p in text.split(",") if p.strip()]
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quasiperiodic", description="Quasi-periodic event network experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--depth", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--events", type=int)
    common.add_argument("--freq-range", type=_pair(float), dest="freq_range", metavar="LO,HI")
    common.add_argument("--mode", choices=experiments.MODES)
    common.add_argument("--streams", type=int)
    common.add_argument("--temperature", type=float)

    p = sub.add_parser("activation", parents=[common], help="activation versus x/N")
    p.add_argument("--n-sources", type=int, dest="n_sources")
    p.add_argument("--grid", type=_list(float), metavar="P,P,...")
    p.add_argument("--frequencies", type=_list(float), metavar="F,F,...")

    p = sub.add_parser("correlations", parents=[common], help="auto- and cross-correlations")
    p.add_argument("--n-sources", type=int, dest="n_sources")
    p.add_argument("--max-lag", type=int, dest="max_lag")
    p.add_argument("--depths", type=_list(int), metavar="D,D,...", help="also run a depth sweep")
    p.add_argument("--frequencies", type=_list(float), metavar="F,F,...")

    p = sub.add_parser("rbm", parents=[common], help="RBM sampling KL curves")
    p.add_argument("--visible", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--weight-range", type=_pair(int), dest="weight_range", metavar="LO,HI")
    p.add_argument("--model", help="RBM model JSON file")
    p.add_argument("--samples", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--burn-in", type=int, dest="burn_in")

    p = sub.add_parser("patterns", parents=[common], help="pattern-unit competition")
    p.add_argument("--regime", choices=("equal", "uniform"))
    p.add_argument("--n-inputs", type=int, dest="n_inputs")
    p.add_argument("--n-patterns", type=int, dest="n_patterns")
    p.add_argument("--input-patterns", type=int, dest="n_input_patterns")
    p.add_argument("--cycles", type=int)
    p.add_argument("--clk-freq", type=float, dest="clk_freq")
    p.add_argument("--weight0", choices=(patterns.CROSSED, patterns.TO_IN0))
    return parser


_DEFAULTS = {"patterns": {"depth": 1}}


def resolve_config(argv) -> ExperimentConfig:
    args = vars(build_parser().parse_args(argv))
    doc = dict(_DEFAULTS.get(args["experiment"], {}))
    if args.get("config"):
        try:
            with open(args["config"], encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        if loaded.get("experiment", args["experiment"]) != args["experiment"]:
            raise ConfigError(f"config is for {loaded['experiment']!r}, not {args['experiment']!r}")
        doc.update(loaded)
    doc.update({k: v for k, v in args.items() if v is not None and k != "config"})
    return ExperimentConfig.from_dict(doc)


def main(argv=None) -> int:
    try:
        config = resolve_config(sys.argv[1:] if argv is None else argv).validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        manifest = run_command(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name in manifest["files"]:
        print(Path(config.out) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
