"""Command-line entry points for the benchmark drivers and diagnostics."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .adjoint_bvp import DiffusionModel, run_bvp_benchmark
from .design import assemble_gradient_enhanced, coherence_params
from .harness import (
    ExperimentConfig,
    run_mic_sweep,
    run_recovery_benchmark,
    run_rmse_benchmark,
)
from .pce import PceBasis
from .polynomials import Measure
from .sampling import sample

_EXPERIMENT_KINDS = {
    "mic-sweep": ("mic-sweep",),
    "recover": ("recovery-vs-N", "recovery-vs-s"),
    "rmse": ("rmse",),
}


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker thread count")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def _load_config(args, command: str) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        data = json.loads(args.config.read_text())
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
    allowed = _EXPERIMENT_KINDS[command]
    data.setdefault("kind", allowed[0])
    if data["kind"] not in allowed:
        raise ValueError(
            f"config kind {data['kind']!r} does not belong to the {command} command"
        )
    if args.seed is not None:
        data["seed"] = args.seed
    return ExperimentConfig.from_dict(data)


def _emit(table, out_dir: Path, stem: str, fmt: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{fmt}"
    table.write(path, fmt)
    print(f"wrote {path}")
    return path


def _run_experiment(args, command: str) -> int:
    config = _load_config(args, command)
    if command == "mic-sweep":
        table = run_mic_sweep(config, threads=args.threads)
    elif command == "recover":
        table = run_recovery_benchmark(config, threads=args.threads)
    else:
        table = run_rmse_benchmark(config, threads=args.threads, target=args.target)
    _emit(table, args.out, command.replace("-", "_"), args.format)
    return 0


def _run_bvp(args) -> int:
    model = DiffusionModel(dim=args.d, cells=args.cells, qoi=args.qoi)
    grid = tuple(int(n) for n in args.n_grid.split(","))
    modes = tuple(args.mode.split(","))
    table = run_bvp_benchmark(
        model, args.n, grid, modes=modes, seed=args.seed,
        trials=args.trials, threads=args.threads,
    )
    _emit(table, args.out, "bvp", args.format)
    return 0


def _run_diagnose(args) -> int:
    measure = Measure.parse(args.measure)
    basis = PceBasis.from_measure(measure, args.dim, args.degree)
    batch = sample(
        Measure.gaussian() if measure.kind == "gaussian" else Measure.chebyshev(),
        args.dim, args.samples, args.seed,
    )
    design = assemble_gradient_enhanced(
        basis, batch, np.zeros(args.samples),
        np.zeros((args.samples, args.dim)), tuple(range(args.dim)),
    )
    report = coherence_params(design, grid_points=args.grid_points)
    print(f"measure             {measure.label}")
    print(f"dim                 {args.dim}")
    print(f"degree              {args.degree}")
    print(f"terms               {basis.size}")
    print(f"samples             {args.samples}")
    print(f"mic                 {report.mic:.6g}")
    print(f"value_coherence     {report.value_coherence:.6g}")
    print(f"stacked_coherence   {report.stacked_coherence:.6g}")
    print(f"coherence_bound     {report.coherence_bound:.6g}")
    print(f"bound_growth        {report.bound_growth:.6g}")
    print(f"stacked_bound       {report.stacked_bound:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradpce",
        description="Gradient-enhanced l1 recovery of sparse polynomial expansions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for command in ("mic-sweep", "recover", "rmse"):
        p = sub.add_parser(command, help=f"run the {command} benchmark")
        _add_common_flags(p)
        if command == "rmse":
            p.add_argument("--target", choices=("f1", "f2", "f3"),
                           help="override the configured target function")

    bvp = sub.add_parser("bvp", help="diffusion-problem surrogate benchmark")
    bvp.add_argument("--d", type=int, default=2, help="number of random parameters")
    bvp.add_argument("--n", type=int, default=4, help="total polynomial degree")
    bvp.add_argument("--N-grid", dest="n_grid", default="10,20,40",
                     help="comma-separated sample counts")
    bvp.add_argument("--mode", default="standard,gradient-enhanced",
                     help="comma-separated benchmark modes")
    bvp.add_argument("--cells", type=int, default=256, help="mesh cell count")
    bvp.add_argument("--qoi", choices=("average", "midpoint"), default="average")
    bvp.add_argument("--trials", type=int, default=1)
    bvp.add_argument("--seed", type=int, default=0)
    bvp.add_argument("--out", type=Path, default=Path("."))
    bvp.add_argument("--threads", type=int, default=1)
    bvp.add_argument("--format", choices=("csv", "json"), default="csv")

    diagnose = sub.add_parser("diagnose", help="print coherence diagnostics")
    diagnose.add_argument("--measure", default="legendre")
    diagnose.add_argument("--dim", type=int, default=2)
    diagnose.add_argument("--degree", type=int, default=10)
    diagnose.add_argument("--samples", type=int, default=50)
    diagnose.add_argument("--seed", type=int, default=0)
    diagnose.add_argument("--grid-points", dest="grid_points", type=int, default=None,
                          help="also scan a tensor grid with this many points per axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in _EXPERIMENT_KINDS:
            return _run_experiment(args, args.command)
        if args.command == "bvp":
            return _run_bvp(args)
        return _run_diagnose(args)
    except (ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
