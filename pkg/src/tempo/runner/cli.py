"""
Command line interface.

    tempo run --scenario benchmark --out results [--config cfg.json] [--seed 1]
    tempo list-scenarios
    tempo compare --configs a.json b.json --out results

A config file is a JSON object with the keys of the scenario's config
(``compare`` configs also carry a ``"scenario"`` key). The seed is taken
from ``--seed``, else the ``TEMPO_SEED`` environment variable, else the
config, else 0.
"""

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from tempo.errors import TempoError
from tempo.runner.metrics import _fmt
from tempo.runner.scenarios import SCENARIOS, from_dict


class CLIError(Exception):
    pass


def load_config(path):

    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise CLIError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise CLIError(f"malformed config {path}: {e}") from e
    if not isinstance(data, dict):
        raise CLIError(f"config {path} must contain a JSON object")
    return data


def resolve_seed(flag, data):

    if flag is not None:
        return flag
    env = os.environ.get("TEMPO_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise CLIError(f"TEMPO_SEED must be an integer, got {env!r}") from e
    return int(data.get("seed", 0))


def run_scenario(scenario, data, seed):

    if scenario not in SCENARIOS:
        raise CLIError(f"unknown scenario {scenario!r}, choose from {', '.join(SCENARIOS)}")
    cls, fn = SCENARIOS[scenario]
    cfg = from_dict(cls, dict(data, seed=seed))
    return fn(cfg)


def output_dir(path):

    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CLIError(f"cannot create output directory {out}: {e}") from e
    if not os.access(out, os.W_OK):
        raise CLIError(f"output directory {out} is not writable")
    return out


def cmd_run(args):

    data = load_config(args.config)
    data.pop("scenario", None)
    seed = resolve_seed(args.seed, data)
    out = output_dir(args.out)

    start = time.perf_counter()
    traces = run_scenario(args.scenario, data, seed)
    for variant, trace in traces.items():
        path = out / f"{args.scenario}_{variant}.csv"
        trace.to_csv(path)
        print(path)
    print(f"{args.scenario}: {time.perf_counter() - start:.2f} s", file=sys.stderr)


def cmd_list(args):

    for name in SCENARIOS:
        print(name)


def cmd_compare(args):

    out = output_dir(args.out)
    rows, names = [], set()

    for path in args.configs:
        data = load_config(path)
        scenario = data.pop("scenario", None)
        if scenario is None:
            raise CLIError(f"config {path} lacks a 'scenario' key")
        name = Path(path).stem
        if name in names:
            raise CLIError(f"duplicate config name {name!r}")
        names.add(name)

        start = time.perf_counter()
        traces = run_scenario(scenario, data, resolve_seed(args.seed, data))
        print(f"{name} ({scenario}): {time.perf_counter() - start:.2f} s", file=sys.stderr)

        for variant, tr in traces.items():
            for k in range(len(tr)):
                rows.append([name, variant, str(k), _fmt(tr.times[k]), _fmt(tr.tracking_error[k]),
                             _fmt(tr.fixed_point_residual[k]), _fmt(tr.regret[k])])

    path = out / "compare.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "variant", "step", "time", "tracking_error", "fixed_point_residual", "regret"])
        w.writerows(rows)
    print(path)


def build_parser():

    parser = argparse.ArgumentParser(prog="tempo", description="Online time-varying optimization experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write one CSV trace per variant")
    p.add_argument("--scenario", required=True, help="scenario id, see list-scenarios")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="random seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("list-scenarios", help="print the available scenarios")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("compare", help="run several configs into one combined CSV")
    p.add_argument("--configs", nargs="+", required=True, help="JSON config files with a 'scenario' key")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="random seed for all the runs")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None):

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CLIError, TempoError) as e:
        print(f"tempo: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
