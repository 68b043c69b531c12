"""Command-line entry point.

One subcommand per experiment.  A JSON config file may supply any
parameter; command-line flags win over the file.  Results are written as
a single result.json (full resolved config echoed back, no timestamps,
atomic write) plus CSV streams where the experiment produces them.
Exit codes: 0 success, 1 config error, 2 invariant or acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import aqm
from aqm import experiments, interferometer, two_slit
from aqm.errors import ConfigError, ModelViolationError
from aqm.serialize import write_json_atomic

_COMMON_KEYS = {"experiment", "seed", "n_events", "out"}
_ALLOWED_KEYS = {
    "two-slit": _COMMON_KEYS | {"preset", "n_sites", "slit_a", "slit_b"},
    "delayed-choice": _COMMON_KEYS | {"m4", "p", "write_events"},
    "postulates": _COMMON_KEYS | {"dim", "trials"},
    "khinchin": _COMMON_KEYS | {"n_seeds", "n_small", "n_big", "dim"},
}

_DEFAULTS = {
    "seed": 0,
    "n_events": 100_000,
    "out": "results",
    "preset": "symmetric64",
    "n_sites": None,
    "slit_a": None,
    "slit_b": None,
    "m4": "present",
    "p": 0.5,
    "write_events": False,
    "dim": 8,
    "trials": 100,
    "n_seeds": 50,
    "n_small": 10_000,
    "n_big": 1_000_000,
}


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return data


def resolve_config(experiment: str, file_config: dict, flags: dict) -> dict:
    """Merge defaults, config file, and flags; reject unknown keys."""
    allowed = _ALLOWED_KEYS[experiment]
    unknown = set(file_config) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {sorted(unknown)}")
    if file_config.get("experiment", experiment) != experiment:
        raise ConfigError(
            f"config file is for experiment {file_config['experiment']!r}, "
            f"but {experiment!r} was requested"
        )
    config = {k: _DEFAULTS[k] for k in allowed if k != "experiment"}
    config.update({k: v for k, v in file_config.items() if k != "experiment"})
    config.update({k: v for k, v in flags.items() if v is not None})
    config["experiment"] = experiment
    _validate(experiment, config)
    return config


def _validate(experiment: str, config: dict) -> None:
    if not isinstance(config["seed"], int) or config["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if not isinstance(config["n_events"], int) or config["n_events"] < 1:
        raise ConfigError("n_events must be a positive integer")
    if experiment == "two-slit":
        custom = [config["n_sites"], config["slit_a"], config["slit_b"]]
        if any(v is not None for v in custom) and not all(v is not None for v in custom):
            raise ConfigError("custom geometry needs n_sites, slit_a, and slit_b")
    if experiment == "delayed-choice":
        if config["m4"] not in {"present", "absent", "delayed-random", "delayed-alternating"}:
            raise ConfigError(f"unknown m4 policy {config['m4']!r}")
        if not 0.0 <= config["p"] <= 1.0:
            raise ConfigError("p must lie in [0, 1]")


def _geometry(config: dict) -> two_slit.SlitGeometry:
    if config["n_sites"] is not None:
        return two_slit.SlitGeometry(
            grid_size=config["n_sites"],
            slit_a=frozenset(config["slit_a"]),
            slit_b=frozenset(config["slit_b"]),
        )
    if config["preset"] != "symmetric64":
        raise ConfigError(f"unknown preset {config['preset']!r}")
    return experiments.symmetric64_geometry()


def _write_pattern_csv(path, probs, histogram) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "prob", "count"])
        for k, (p, c) in enumerate(zip(probs, histogram)):
            writer.writerow([k, repr(p), c])


def _run_two_slit(config: dict, out_dir: str) -> dict:
    geom = _geometry(config)
    result = experiments.two_slit_experiment(
        geom, n_events=config["n_events"], seed=config["seed"]
    )
    _write_pattern_csv(
        os.path.join(out_dir, "pattern.csv"), result["pattern"], result["histogram"]
    )
    return result


def _run_delayed_choice(config: dict, out_dir: str) -> dict:
    result = experiments.delayed_choice_experiment(
        config["m4"], n_events=config["n_events"], seed=config["seed"], p=config["p"]
    )
    if config["write_events"]:
        policy = experiments.make_policy(config["m4"], p=config["p"], seed=config["seed"])
        events = interferometer.run_events(policy, config["n_events"], config["seed"])
        interferometer.write_events_csv(events, os.path.join(out_dir, "events.csv"))
    return result


def _run_postulates(config: dict, out_dir: str) -> dict:
    return experiments.postulate_suite(
        dim=config["dim"], trials=config["trials"], seed=config["seed"]
    )


def _run_khinchin(config: dict, out_dir: str) -> dict:
    return experiments.khinchin_experiment(
        n_seeds=config["n_seeds"],
        n_small=config["n_small"],
        n_big=config["n_big"],
        dim=config["dim"],
        seed=config["seed"],
    )


_RUNNERS = {
    "two-slit": _run_two_slit,
    "delayed-choice": _run_delayed_choice,
    "postulates": _run_postulates,
    "khinchin": _run_khinchin,
}


def run(config: dict) -> int:
    """Execute one experiment and write result.json; returns the exit code."""
    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    try:
        result = _RUNNERS[config["experiment"]](config, out_dir)
    except ModelViolationError as exc:
        write_json_atomic(
            os.path.join(out_dir, "result.json"),
            {"version": aqm.__version__, "config": config, "error": str(exc)},
        )
        print(f"model violation: {exc}", file=sys.stderr)
        return 2
    payload = {"version": aqm.__version__, "config": config, "result": result}
    write_json_atomic(os.path.join(out_dir, "result.json"), payload)
    return 0 if result.get("passed", True) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aqm", description="Contextual quantum mechanics experiment runner"
    )
    sub = parser.add_subparsers(dest="experiment", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n", type=int, default=None, dest="n_events")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("two-slit", help="two-slit scattering experiment")
    common(p)
    p.add_argument("--preset", default=None, choices=["symmetric64"])
    p.add_argument("--n-sites", type=int, default=None, dest="n_sites")
    p.add_argument("--slit-a", default=None, dest="slit_a",
                   help="comma-separated site indices")
    p.add_argument("--slit-b", default=None, dest="slit_b")

    p = sub.add_parser("delayed-choice", help="delayed-choice interferometer")
    common(p)
    p.add_argument("--m4", default=None,
                   choices=["present", "absent", "delayed-random", "delayed-alternating"])
    p.add_argument("--p", type=float, default=None,
                   help="insertion probability for delayed-random")
    p.add_argument("--write-events", action="store_true", default=None,
                   dest="write_events")

    p = sub.add_parser("postulates", help="postulate verification suite")
    common(p)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("khinchin", help="Monte Carlo convergence-rate check")
    common(p)
    p.add_argument("--n-seeds", type=int, default=None, dest="n_seeds")
    p.add_argument("--n-small", type=int, default=None, dest="n_small")
    p.add_argument("--n-big", type=int, default=None, dest="n_big")
    p.add_argument("--dim", type=int, default=None)

    return parser


def _parse_sites(value):
    if value is None or not isinstance(value, str):
        return value
    try:
        return [int(s) for s in value.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad site list {value!r}") from exc


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    experiment = args.pop("experiment")
    config_path = args.pop("config", None)
    try:
        for key in ("slit_a", "slit_b"):
            if key in args:
                args[key] = _parse_sites(args[key])
        file_config = _load_config_file(config_path) if config_path else {}
        config = resolve_config(experiment, file_config, args)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
