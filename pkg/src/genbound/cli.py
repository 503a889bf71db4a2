"""``genbound`` command line: ``genbound run <config>`` and ``genbound plot <csv> --kind <k> --out <file>``.

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .config import ConfigError, load_config
from .experiments import ExperimentError, run_all, write_outputs
from .plots import KINDS, SchemaError, plot

log = logging.getLogger("genbound")

AUTO_PLOTS = {
    "gap_sweep": ["gap_vs_n", "bound_vs_empirical"],
    "rademacher": ["complexity_vs_n"],
}


def run(config_path: str) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"genbound: invalid config {config_path}: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        results = run_all(cfg)
        paths = write_outputs(cfg, results, time.perf_counter() - t0)
        for kind in AUTO_PLOTS.get(cfg.experiment, []):
            plot(paths["results"], kind, cfg.output_dir / f"{kind}.svg")
    except (ExperimentError, SchemaError, OSError) as exc:
        print(f"genbound: run failed: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %d rows to %s", len(results), paths["results"])
    return 0


def plot_cmd(csv_path: str, kind: str, out: str) -> int:
    try:
        plot(csv_path, kind, out)
    except SchemaError as exc:
        print(f"genbound: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"genbound: cannot plot {csv_path}: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="genbound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_plot = sub.add_parser("plot", help="render a figure from a results CSV")
    p_plot.add_argument("csv")
    p_plot.add_argument("--kind", required=True, choices=sorted(KINDS))
    p_plot.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "run":
        return run(args.config)
    return plot_cmd(args.csv, args.kind, args.out)


if __name__ == "__main__":
    sys.exit(main())
