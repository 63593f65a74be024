"""Command-line interface.

Subcommands: sample, train, evaluate, boundary, compare, slice, report,
simulate. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import boundary as bnd
from . import campaign, gpc, scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_DATA_ERRORS = (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError)
_NUMERICAL_ERRORS = (
    scenario.NonTermination,
    gpc.SingleClassError,
    gpc.NotPositiveDefiniteError,
    gpc.NoConvergenceError,
    bnd.EmptyInputError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="perfbound", description=__doc__)
    parser.add_argument("--config", type=Path, help="campaign config JSON")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", type=Path, help="output directory (default: out)")
    parser.add_argument("--threads", type=int, help="worker threads for labeling")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="generate and label the configured datasets")
    p.add_argument("names", nargs="*", help="dataset names (default: all configured)")

    p = sub.add_parser("train", help="split a dataset, tune, fit, save the model")
    p.add_argument("dataset", type=Path, help="labeled dataset CSV")
    p.add_argument("--restarts", type=int, help="hyperparameter restarts")
    p.add_argument("--max-nm-iter", type=int, help="Nelder-Mead iteration cap")

    p = sub.add_parser("evaluate", help="score a model on a labeled test CSV")
    p.add_argument("model", type=Path)
    p.add_argument("test", type=Path)

    p = sub.add_parser("boundary", help="extract the p=0.5 boundary point cloud")
    p.add_argument("model", type=Path)
    p.add_argument("--resolution", type=int, nargs=3, metavar=("NX", "NY", "NZ"))

    p = sub.add_parser("compare", help="Hausdorff distance between two boundary CSVs")
    p.add_argument("boundary_a", type=Path)
    p.add_argument("boundary_b", type=Path)

    p = sub.add_parser("slice", help="confidence slice CSV + SVG at a fixed dimension")
    p.add_argument("model", type=Path)
    p.add_argument("--dim", type=int, help="fixed dimension index (default 2: aperture)")
    p.add_argument("--value", type=float, help="fixed value (default 17.5)")
    p.add_argument("--band", type=float, help="overlay band half-width (default 1.5)")
    p.add_argument("--data", type=Path, help="labeled CSV for the overlay points")

    sub.add_parser("report", help="full campaign: sample/train/evaluate/compare")

    p = sub.add_parser("simulate", help="single scenario debug run")
    p.add_argument("speed_ego", type=float)
    p.add_argument("speed_target", type=float)
    p.add_argument("aperture_angle", type=float)
    p.add_argument("--physics", type=Path, help="physics config file (JSON or key=value)")
    return parser


def _load_config(args) -> campaign.CampaignConfig:
    if args.config is not None:
        cfg = campaign.CampaignConfig.from_file(
            args.config, out_dir=args.out, master_seed=args.seed, threads=args.threads
        )
    else:
        cfg = campaign.CampaignConfig()
        overrides = {}
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if overrides:
            from dataclasses import replace

            cfg = replace(cfg, **overrides)
    return cfg


def _run(args) -> int:
    cfg = _load_config(args)
    if args.command == "sample":
        targets = args.names or None
        if targets:
            for name in targets:
                try:
                    cfg.dataset(name)
                except KeyError:
                    known = ", ".join(ds.name for ds in cfg.datasets)
                    print(
                        f"perfbound sample: unknown dataset {name!r} (known: {known})",
                        file=sys.stderr,
                    )
                    return EXIT_USAGE
        written = campaign.cmd_sample(cfg, targets)
        for path in written:
            print(path)
        return EXIT_OK

    if args.command == "train":
        from dataclasses import replace

        overrides = {}
        if args.restarts is not None:
            overrides["restarts"] = args.restarts
        if args.max_nm_iter is not None:
            overrides["max_nm_iter"] = args.max_nm_iter
        if overrides:
            cfg = replace(cfg, **overrides)
        model_path, model = campaign.cmd_train(cfg, args.dataset)
        print(model_path)
        print(f"log_marginal: {model.log_marginal!r}")
        return EXIT_OK

    if args.command == "evaluate":
        result = campaign.cmd_evaluate(args.model, args.test)
        print(json.dumps(result, indent=2, sort_keys=True))
        return EXIT_OK

    if args.command == "boundary":
        if args.resolution is not None:
            from dataclasses import replace

            cfg = replace(cfg, grid_resolution=tuple(args.resolution))
        out_csv, n_points = campaign.cmd_boundary(cfg, args.model)
        print(out_csv)
        if n_points == 0:
            print("empty boundary: the model predicts a single class everywhere",
                  file=sys.stderr)
        else:
            print(f"boundary points: {n_points}")
        return EXIT_OK

    if args.command == "compare":
        result = campaign.cmd_compare(cfg, args.boundary_a, args.boundary_b)
        print(json.dumps(result, indent=2, sort_keys=True))
        return EXIT_OK

    if args.command == "slice":
        csv_path, svg_path = campaign.cmd_slice(
            cfg, args.model, dim=args.dim, value=args.value, band=args.band,
            data_csv=args.data,
        )
        print(csv_path)
        print(svg_path)
        return EXIT_OK

    if args.command == "report":
        report_path = campaign.cmd_report(cfg)
        print(report_path)
        return EXIT_OK

    if args.command == "simulate":
        physics = (
            scenario.PhysicsConfig.from_file(args.physics)
            if args.physics
            else cfg.physics
        )
        params = scenario.ScenarioParams(
            args.speed_ego, args.speed_target, args.aperture_angle
        )
        print(json.dumps(campaign.cmd_simulate(params, physics), indent=2,
                         sort_keys=True))
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"perfbound: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _DATA_ERRORS as exc:
        print(f"perfbound: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
