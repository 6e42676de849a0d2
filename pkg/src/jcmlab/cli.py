"""Command-line front end.

Subcommands:
  train     train one system from a config file; writes checkpoint + loss trace
  eval      evaluate a saved checkpoint on a test set; prints one metrics row
  sweep     train/evaluate a (method, snr, seed) grid; writes a metrics CSV
  verify    run the self-check suites; nonzero exit on any failure
  gen-data  write a synthetic dataset (train + test manifests)

Exit codes: 0 success, 1 suite or evaluation failure, 2 config error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .datasets import generate_synthetic, save_dataset
from .errors import ConfigError, JcmError
from .experiments import (
    format_metrics_csv,
    format_trace_csv,
    load_experiment_config,
    run_sweep,
    system_from_blob,
    train_point,
)
from .metrics import MetricsRecord, evaluate_system
from .training import load_checkpoint, save_checkpoint
from .verification import run_all

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _write_text(path, text) -> None:
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise IOError(f"cannot write {path}: {e}") from e


def cmd_train(args) -> int:
    cfg = load_experiment_config(args.config, seed_override=args.seed, out_override=args.out)
    if len(cfg.methods) != 1 or len(cfg.snrs) != 1 or len(cfg.seeds) != 1:
        raise ConfigError("train expects exactly one method, one snr_db, and one seed")
    out_dir = cfg.out or "."
    train_ds, _ = cfg.data.load()
    system, ckpt, trace = train_point(cfg, cfg.methods[0], cfg.snrs[0], cfg.seeds[0], train_ds)
    ckpt_path = os.path.join(out_dir, "model.ckpt")
    trace_path = os.path.join(out_dir, "loss_trace.csv")
    try:
        os.makedirs(out_dir, exist_ok=True)
        save_checkpoint(ckpt, ckpt_path)
    except OSError as e:
        raise IOError(f"cannot write checkpoint {ckpt_path}: {e}") from e
    _write_text(trace_path, format_trace_csv(trace))
    print(f"checkpoint: {ckpt_path}")
    print(f"loss trace: {trace_path}")
    if trace:
        print(f"final loss: {trace[-1].total:.6g} (ce {trace[-1].ce:.6g}, mse {trace[-1].mse:.6g})")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_experiment_config(args.config, seed_override=args.seed, out_override=args.out)
    if not cfg.checkpoint:
        raise ConfigError("eval needs a checkpoint=PATH key in the config")
    if len(cfg.snrs) != 1:
        raise ConfigError("eval expects exactly one snr_db")
    try:
        ckpt = load_checkpoint(cfg.checkpoint)
    except OSError as e:
        raise IOError(f"cannot read checkpoint {cfg.checkpoint}: {e}") from e
    system = system_from_blob(ckpt.config)
    system.load_state_arrays(ckpt.tensors)
    _, test_ds = cfg.data.load()
    snr_db = cfg.snrs[0]
    seed = cfg.seeds[0]
    acc, ps = evaluate_system(system, test_ds, snr_db, seed, batch_size=cfg.eval_batch)
    record = MetricsRecord(
        method=ckpt.config.get("method", "jcm"),
        snr_db=snr_db,
        n=int(ckpt.config.get("n", "0")),
        seed=seed,
        accuracy=acc,
        psnr_db=ps.db,
        psnr_capped=ps.capped,
    )
    csv_text = format_metrics_csv([record])
    if cfg.out:
        _write_text(cfg.out, csv_text)
    sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_experiment_config(args.config, seed_override=args.seed, out_override=args.out)
    records = run_sweep(cfg, jobs=args.jobs)
    csv_text = format_metrics_csv(records)
    if cfg.out:
        _write_text(cfg.out, csv_text)
        print(f"wrote {len(records)} rows to {cfg.out}")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = tuple(args.suites) if args.suites else ("bounds", "gradients", "sampler", "normalization")
    try:
        results = run_all(seed=args.seed if args.seed is not None else 0, suites=suites)
    except KeyError as e:
        raise ConfigError(str(e)) from e
    for r in results:
        print(r.report())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED suites: {', '.join(failed)}")
        return EXIT_FAIL
    print(f"all {len(results)} suites passed")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    cfg = load_experiment_config(args.config, seed_override=args.seed, out_override=args.out)
    if cfg.data.kind != "synthetic":
        raise ConfigError("gen-data needs synthetic data keys (classes, dim, per_class, ...)")
    out_dir = cfg.out or "."
    d = cfg.data
    train_ds = generate_synthetic(d.classes, d.dim, d.per_class, d.noise_std, d.data_seed, "train")
    test_ds = generate_synthetic(d.classes, d.dim, d.per_class_test, d.noise_std, d.data_seed, "test")
    try:
        os.makedirs(out_dir, exist_ok=True)
        train_path = save_dataset(train_ds, out_dir, "train")
        test_path = save_dataset(test_ds, out_dir, "test")
    except OSError as e:
        raise IOError(f"cannot write dataset under {out_dir}: {e}") from e
    print(f"train manifest: {train_path} ({train_ds.count} samples)")
    print(f"test manifest:  {test_path} ({test_ds.count} samples)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jcmlab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="flat key=value config file")
        p.add_argument("--out", default=None, help="output path (overrides the config's out key)")
        p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")
        p.add_argument("--seed", type=int, default=None, help="seed override")

    common(sub.add_parser("train", help="train one system"))
    common(sub.add_parser("eval", help="evaluate a checkpoint"))
    common(sub.add_parser("sweep", help="train/evaluate a grid, emit metrics CSV"))
    p_verify = sub.add_parser("verify", help="run self-check suites")
    p_verify.add_argument("suites", nargs="*",
                          help="subset of: bounds gradients sampler normalization (default all)")
    p_verify.add_argument("--seed", type=int, default=None)
    common(sub.add_parser("gen-data", help="write a synthetic dataset"))
    return parser


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "gen-data": cmd_gen_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad flags, which matches the config-error code
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except JcmError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
