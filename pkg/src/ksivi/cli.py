"""Command-line entry points.

Subcommands: ``train``, ``sample-ground-truth``, ``evaluate``, ``diagnose``,
``make-blr-data``, plus preset inspection helpers.  Heavy numerical imports
happen inside the command handlers so the thread-count pin below can take
effect before the BLAS runtime loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path


def _pin_threads(n: int) -> None:
    if n and n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _load_flat_config(args) -> dict:
    from .configio import ConfigError, load_config_file
    from .presets import get_preset

    if args.preset and args.config:
        raise ConfigError("config", "give either a config file or --preset, not both")
    if args.preset:
        flat = get_preset(args.preset)
    elif args.config:
        flat = load_config_file(args.config)
    else:
        raise ConfigError("config", "need a config file or --preset")
    if getattr(args, "seed", None) is not None:
        flat["run.seed"] = args.seed
        for derived in ("init.seed", "train.seed", "eval.seed", "sampler.seed"):
            flat.pop(derived, None)
    return flat


def _prepare(args):
    from .configio import ExperimentConfig, build_target, validate_against_target

    flat = _load_flat_config(args)
    config = ExperimentConfig.from_flat(flat)
    threads = args.threads if args.threads is not None else config.threads
    _pin_threads(threads)
    out_dir = Path(args.out) if args.out else Path("runs") / config.name
    out_dir.mkdir(parents=True, exist_ok=True)
    data_dir = Path(args.data_dir) if args.data_dir else out_dir
    target = build_target(config, data_dir)
    validate_against_target(config, target)
    return config, target, out_dir


def _base_manifest(config, started, finished):
    from .runio import build_identifier

    return {
        "experiment": config.name,
        "config": config.resolved_flat(),
        "master_seed": config.master_seed,
        "build": build_identifier(),
        "wallclock_seconds": finished - started,
        "argv": sys.argv[1:],
    }


def cmd_train(args) -> int:
    import numpy as np

    from .configio import format_config
    from .family import siv_init, siv_sample_batch
    from .nets import NetArch
    from .runio import save_checkpoint, write_manifest, write_samples_csv, write_trace_csv
    from .train import train

    config, target, out_dir = _prepare(args)
    init = siv_init(NetArch(config.widths), config.init_seed, config.rho_init)
    started = time.perf_counter()
    params, trace = train(config.train, target, init)
    finished = time.perf_counter()

    eval_rng = np.random.default_rng(config.eval_seed)
    samples = siv_sample_batch(params, config.eval_sample_size, eval_rng).x

    (out_dir / "config.txt").write_text(format_config(config.resolved_flat()))
    write_trace_csv(out_dir / "trace.csv", trace, include_wallclock=config.trace_wallclock)
    save_checkpoint(out_dir / "checkpoint.json", params)
    write_samples_csv(out_dir / "samples.csv", samples)

    manifest = _base_manifest(config, started, finished)
    train_seconds = finished - started
    manifest["training"] = {
        "iterations": config.train.iterations,
        "seconds": train_seconds,
        "seconds_per_10k_iterations": (
            train_seconds * 10_000 / config.train.iterations if config.train.iterations else 0.0
        ),
        "final_ksd2": trace.ksd2[-1] if len(trace) else None,
    }
    manifest["files"] = ["config.txt", "trace.csv", "checkpoint.json", "samples.csv"]
    write_manifest(out_dir / "manifest.json", manifest)
    print(f"trained {config.name}: {config.train.iterations} iterations in {train_seconds:.1f}s")
    print(f"artifacts in {out_dir}")
    return 0


def cmd_ground_truth(args) -> int:
    from .configio import format_config
    from .runio import write_manifest, write_samples_csv
    from .samplers import SamplerConfig, mala_run, sgld_run

    config, target, out_dir = _prepare(args)
    s = config.sampler
    sampler_config = SamplerConfig(
        n_particles=s["n_particles"],
        n_steps=s["n_steps"],
        step_size=s["step_size"],
        burn_in=s["burn_in"],
        thin=s["thin"],
        seed=s["seed"],
    )
    runner = mala_run if s["algorithm"] == "mala" else sgld_run
    started = time.perf_counter()
    run = runner(target, sampler_config)
    finished = time.perf_counter()

    write_samples_csv(out_dir / "ground_truth.csv", run.states)
    (out_dir / "config.txt").write_text(format_config(config.resolved_flat()))
    manifest = _base_manifest(config, started, finished)
    manifest["sampler"] = {
        "algorithm": s["algorithm"],
        "n_particles": s["n_particles"],
        "n_steps": s["n_steps"],
        "step_size": s["step_size"],
        "acceptance_rate": run.acceptance_rate,
    }
    manifest["files"] = ["config.txt", "ground_truth.csv"]
    write_manifest(out_dir / "manifest.json", manifest)
    extra = f", acceptance {run.acceptance_rate:.3f}" if run.acceptance_rate is not None else ""
    print(f"sampled {s['n_particles']} particles x {s['n_steps']} steps{extra}")
    print(f"artifacts in {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    import numpy as np

    from .kernels import KernelSpec, median_bandwidth
    from .metrics import corr_pairs, kl_knn, mmd2_ustat, sliced_wd, upper_triangle
    from .runio import read_samples_csv

    X = read_samples_csv(args.samples_a)
    Y = read_samples_csv(args.samples_b)
    if X.shape[1] != Y.shape[1]:
        print(
            f"error: sample dimensions differ ({X.shape[1]} vs {Y.shape[1]})",
            file=sys.stderr,
        )
        return 2
    requested = [m.strip() for m in args.metrics.split(",") if m.strip()]
    record = {
        "samples": {
            "a": {"path": str(args.samples_a), "count": int(X.shape[0])},
            "b": {"path": str(args.samples_b), "count": int(Y.shape[0])},
            "dim": int(X.shape[1]),
        },
        "seed": args.seed,
        "metrics": {},
    }
    for name in requested:
        if name == "sliced_wd":
            record["metrics"]["sliced_wd"] = {
                "value": sliced_wd(X, Y, n_proj=args.n_proj, seed=args.seed),
                "n_proj": args.n_proj,
            }
        elif name == "kl_knn":
            rng = np.random.default_rng(args.seed)
            halves = rng.permutation(Y.shape[0])
            mid = Y.shape[0] // 2
            floor = abs(kl_knn(Y[halves[:mid]], Y[halves[mid:]], k=args.kl_k))
            record["metrics"]["kl_knn"] = {
                "value": kl_knn(X, Y, k=args.kl_k),
                "k": args.kl_k,
                "noise_floor": floor,
            }
        elif name == "mmd2":
            h = args.bandwidth if args.bandwidth else median_bandwidth(np.concatenate([X, Y]))
            spec = KernelSpec(args.kernel_family, bandwidth=h, offset=args.offset)
            record["metrics"]["mmd2"] = {
                "value": mmd2_ustat(X, Y, spec),
                "kernel": args.kernel_family,
                "bandwidth": h,
            }
        elif name == "corr":
            diff = upper_triangle(corr_pairs(X)) - upper_triangle(corr_pairs(Y))
            record["metrics"]["corr"] = {
                "rmse": float(np.sqrt((diff**2).mean())),
                "max_abs_diff": float(np.abs(diff).max()),
            }
        else:
            print(f"error: unknown metric {name!r}", file=sys.stderr)
            return 2
    rendered = json.dumps(record, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(rendered + "\n")
    print(rendered)
    return 0


def cmd_diagnose(args) -> int:
    import numpy as np

    from .runio import load_checkpoint
    from .train import smoothness_diagnostic

    try:
        params = load_checkpoint(args.checkpoint)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    record = smoothness_diagnostic(params, args.probes, np.random.default_rng(args.seed))
    record["checkpoint"] = str(args.checkpoint)
    record["seed"] = args.seed
    rendered = json.dumps(record, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(rendered + "\n")
    print(rendered)
    return 0


def cmd_make_blr_data(args) -> int:
    from .targets import make_waveform_dataset, save_blr_dataset

    features, labels = make_waveform_dataset(n_rows=args.rows, seed=args.seed)
    save_blr_dataset(args.out_path, features, labels)
    print(f"wrote {args.rows} rows x 21 features to {args.out_path}")
    return 0


def cmd_show_preset(args) -> int:
    from .configio import format_config
    from .presets import get_preset

    try:
        print(format_config(get_preset(args.name)), end="")
    except KeyError as err:
        print(f"error: {err.args[0]}", file=sys.stderr)
        return 2
    return 0


def cmd_list_presets(_args) -> int:
    from .presets import PRESET_NAMES

    for name in PRESET_NAMES:
        print(name)
    return 0


def _add_run_arguments(parser):
    parser.add_argument("config", nargs="?", help="experiment config file")
    parser.add_argument("--preset", help="use a shipped preset instead of a file")
    parser.add_argument("--out", help="output directory (default runs/<experiment>)")
    parser.add_argument("--data-dir", help="directory for data files (default: output dir)")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--threads", type=int, help="pin BLAS thread count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksivi",
        description="Train semi-implicit variational approximations by kernel "
        "Stein discrepancy descent, sample ground truth, and evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training experiment")
    _add_run_arguments(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample-ground-truth", help="run the configured Langevin sampler")
    _add_run_arguments(p)
    p.set_defaults(func=cmd_ground_truth)

    p = sub.add_parser("evaluate", help="compare two sample CSVs")
    p.add_argument("samples_a")
    p.add_argument("samples_b")
    p.add_argument("--metrics", default="sliced_wd,kl_knn,mmd2,corr")
    p.add_argument("--n-proj", type=int, default=128)
    p.add_argument("--kl-k", type=int, default=1)
    p.add_argument("--kernel-family", default="rbf")
    p.add_argument("--bandwidth", type=float, default=0.0, help="0 = median heuristic")
    p.add_argument("--offset", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the JSON record here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("diagnose", help="network smoothness probe on a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--probes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("make-blr-data", help="write a synthetic waveform-style dataset")
    p.add_argument("out_path")
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_blr_data)

    p = sub.add_parser("show-preset", help="print a preset config")
    p.add_argument("name")
    p.set_defaults(func=cmd_show_preset)

    p = sub.add_parser("list-presets", help="list preset names")
    p.set_defaults(func=cmd_list_presets)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None):
        _pin_threads(args.threads)
    from .configio import ConfigError
    from .samplers import SamplerDivergence
    from .train import TrainingDivergence

    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (TrainingDivergence, SamplerDivergence) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
