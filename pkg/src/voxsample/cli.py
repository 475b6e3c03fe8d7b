"""Command line front end: sample, fit, segment, eval, phantom, bench.

Exit codes: 0 success, 1 runtime failure (I/O, data), 2 usage error (bad
flags or parameter values). Human-readable results go to standard output,
warnings and errors to standard error, and every run prints the effective
seed so it can be reproduced.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bound_lab import BoundExperimentConfig, error_scaling_experiment, generate_phantom, scaling_table
from .clustering import FitConfig, write_model
from .errors import (
    InvalidFractions,
    InvalidK,
    InvalidM,
    InvalidStrategy,
    InvalidThreshold,
    VoxsampleError,
)
from .metrics import build_contingency, fowlkes_mallows, nmi_mean
from .sampler import read_sample, write_sample
from .segmentation import (
    DEFAULT_SEED,
    _FITTERS,
    PipelineConfig,
    report_kv,
    report_text,
    run_pipeline,
)
from .stratification import parse_strategy, stratified_sample
from .volume_io import DEFAULT_CHUNK_LEN, open_volume, stream_raw_chunks, write_label_volume

_USAGE_ERRORS = (InvalidStrategy, InvalidK, InvalidM, InvalidThreshold, InvalidFractions, ValueError)


def _seed_arg(text: str):
    # "random" means: pick fresh entropy, but still print it for replays.
    if text == "random":
        return None
    return int(text)


def _resolve_seed(args) -> int:
    seed = getattr(args, "seed", DEFAULT_SEED)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (1 << 63))
    print(f"seed {seed}")
    return seed


def _resolve_strategy(args) -> str:
    spec = args.strategy
    if ":" not in spec and spec != "simple":
        if args.strata is None:
            raise InvalidStrategy(f"strategy {spec!r} needs an inline :K or --strata")
        return f"{spec}:{args.strata}"
    if args.strata is not None:
        raise InvalidStrategy("--strata conflicts with a strategy that already fixes K")
    return spec


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed_arg, default=DEFAULT_SEED,
                   help="integer seed, or 'random' (default: fixed constant)")


def _add_strategy(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", default="simple",
                   help="simple | linear:K | exp:K | mixed:Ke,Kl,t (or bare kind with --strata)")
    p.add_argument("--strata", type=int, default=None,
                   help="stratum count K when --strategy names only the kind")


def _add_size(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--size", type=int, default=None, help="absolute sample size M")
    group.add_argument("--percent", type=float, default=None,
                       help="sample size as a percentage of the voxel count")


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=sorted(_FITTERS), default="gmm")
    p.add_argument("--clusters", type=int, required=True, help="number of clusters K")
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=None,
                   help="mini-batch size (minibatch model only)")


def _add_chunk(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chunk-len", type=int, default=DEFAULT_CHUNK_LEN,
                   help="values per streamed chunk")


def _resolve_m(args, voxel_count: int) -> int:
    if args.size is not None:
        return args.size
    return math.ceil(voxel_count * args.percent / 100.0)


def cmd_sample(args) -> int:
    strat = parse_strategy(_resolve_strategy(args))
    seed = _resolve_seed(args)
    handle = open_volume(args.volume)
    m = _resolve_m(args, handle.voxel_count)
    sample = stratified_sample(handle, strat, m, seed,
                               min_one=args.min_one, chunk_len=args.chunk_len)
    if sample.allocation is not None:
        for j in sample.allocation.warnings:
            population = int(sample.allocation.counts[j])
            print(f"warning: stratum {j} has population {population} "
                  "but zero allocated samples", file=sys.stderr)
    write_sample(sample, args.out)
    print(f"wrote {sample.size} values to {args.out}")
    return 0


def cmd_fit(args) -> int:
    seed = _resolve_seed(args)
    sample = read_sample(args.sample)
    cfg = FitConfig(k=args.clusters, seed=seed, max_iter=args.max_iter,
                    tol=args.tol, restarts=args.restarts, batch_size=args.batch_size)
    model = _FITTERS[args.model](sample, cfg)
    write_model(model, args.out)
    print(f"fit {args.model} with {args.clusters} clusters "
          f"on {sample.size} values, wrote {args.out}")
    return 0


def cmd_segment(args) -> int:
    strategy = _resolve_strategy(args)
    seed = _resolve_seed(args)
    fit_cfg = FitConfig(k=args.clusters, seed=seed, max_iter=args.max_iter,
                        tol=args.tol, restarts=args.restarts, batch_size=args.batch_size)
    cfg = PipelineConfig(fit=fit_cfg, strategy=strategy, size=args.size,
                         percent=args.percent, model=args.model, seed=seed,
                         min_one=args.min_one, chunk_len=args.chunk_len,
                         threads=args.threads)
    handle = open_volume(args.volume)
    report = run_pipeline(handle, cfg, args.out)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(report_kv(report) if args.kv else report_text(report))
    print(f"wrote labels to {args.out}")
    return 0


def cmd_eval(args) -> int:
    _resolve_seed(args)
    a = open_volume(args.labels_a)
    b = open_volume(args.labels_b)
    table = build_contingency(stream_raw_chunks(a, args.chunk_len),
                              stream_raw_chunks(b, args.chunk_len))
    print(f"fm {fowlkes_mallows(table):.6f}")
    print(f"nmi {nmi_mean(table):.6f}")
    return 0


def _parse_materials(text: str):
    materials = []
    for part in text.split(","):
        fields = part.split(":")
        if len(fields) != 3:
            raise ValueError(f"material must be mean:sd:fraction, got {part!r}")
        materials.append((float(fields[0]), float(fields[1]), float(fields[2])))
    return materials


def cmd_phantom(args) -> int:
    seed = _resolve_seed(args)
    materials = _parse_materials(args.materials)
    phantom = generate_phantom(tuple(args.dims), materials, seed, args.out,
                               element_type=args.element_type)
    print(f"wrote {phantom.handle.voxel_count} voxels to {args.out}")
    if args.truth_out:
        write_label_volume(phantom.dims, phantom.labels, args.truth_out)
        print(f"wrote ground-truth labels to {args.truth_out}")
    return 0


def cmd_bench(args) -> int:
    strat = parse_strategy(_resolve_strategy(args))
    seed = _resolve_seed(args)
    sizes = tuple(int(s) for s in args.sizes.split(","))
    cfg = BoundExperimentConfig(sizes=sizes, seeds_per_size=args.seeds,
                                grid_size=args.grid, delta=args.delta, base_seed=seed)
    handle = open_volume(args.volume)
    rows = error_scaling_experiment(handle, strat, cfg)
    print(scaling_table(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxsample",
        description="Streaming stratified sampling and sample-based segmentation "
                    "of large raw grayscale volumes.",
    )
    parser.add_argument("--version", action="version", version=f"voxsample {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a (stratified) sample from a volume")
    p.add_argument("volume", help="volume data file or its .meta sidecar")
    _add_strategy(p)
    _add_size(p)
    _add_seed(p)
    _add_chunk(p)
    p.add_argument("--min-one", action="store_true",
                   help="give every nonempty stratum at least one sample")
    p.add_argument("--out", required=True, help="output sample file")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a clustering model to a sample file")
    p.add_argument("sample", help="sample file written by the sample command")
    _add_fit_flags(p)
    _add_seed(p)
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("segment", help="sample, fit and label every voxel")
    p.add_argument("volume", help="volume data file or its .meta sidecar")
    _add_strategy(p)
    _add_size(p)
    _add_fit_flags(p)
    _add_seed(p)
    _add_chunk(p)
    p.add_argument("--min-one", action="store_true",
                   help="give every nonempty stratum at least one sample")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads for the classify pass (1 = sequential)")
    p.add_argument("--kv", action="store_true",
                   help="print the report as machine-readable key-value lines")
    p.add_argument("--out", required=True, help="output label volume")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="compare two label volumes")
    p.add_argument("labels_a")
    p.add_argument("labels_b")
    _add_seed(p)
    _add_chunk(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("phantom", help="generate a synthetic labeled volume")
    p.add_argument("--dims", type=int, nargs=3, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--materials", required=True,
                   help="comma list of mean:sd:fraction triples")
    p.add_argument("--element-type", choices=("u8", "u16", "f32"), default="u16")
    _add_seed(p)
    p.add_argument("--out", required=True, help="output volume file")
    p.add_argument("--truth-out", default=None, help="optional ground-truth label volume")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("bench", help="measure sampling error decay over sample sizes")
    p.add_argument("volume", help="volume data file or its .meta sidecar")
    _add_strategy(p)
    p.add_argument("--sizes", required=True, help="comma list of sample sizes, ascending")
    p.add_argument("--seeds", type=int, default=50, help="seeds per size (>= 30)")
    p.add_argument("--grid", type=int, default=16, help="interval-family grid cells")
    p.add_argument("--delta", type=float, default=0.05,
                   help="nominal confidence parameter, reported only")
    _add_seed(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (VoxsampleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
