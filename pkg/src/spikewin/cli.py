"""Command-line harness for reproducible runs.

Subcommands:

* ``train``         train on the configured dataset, writing metrics.csv,
                    timings.csv, checkpoints, an error-curve figure and the
                    resolved config into the run directory.
* ``eval``          score a saved checkpoint on the configured test set.
* ``trace``         dump V/P traces, spike events and trace figures for the
                    output layer over one inference phase, at both a 1 ms
                    and a 0.01 ms Euler step.
* ``compare-rules`` train twice with identical settings except the pairing
                    rule (pre-windowed vs all-pairs) and summarize both.
* ``synth-data``    write a procedural digit corpus in MNIST IDX format for
                    machines without the official files.

Every command is deterministic under a fixed resolved config; the config in
force is echoed to the run directory as config_resolved.txt.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import reports, synthdata
from .config import RunConfig
from .dynamics import SimulationDivergedError, TraceRecorder
from .mnist import Dataset, load_mnist_dir
from .trainer import evaluate, run_sample_inference, train_epochs
from .weights import WeightStore


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value config file")
    p.add_argument("--seed", type=int, help="RNG seed")
    p.add_argument("--data-dir", dest="data_dir", help="directory with IDX files")
    p.add_argument("--out", help="run output directory (default: runs/<stamp>-seed<seed>)")
    p.add_argument("--classes", help="comma-separated class subset, e.g. 0,1")
    p.add_argument("--train-cap", dest="train_cap", type=int, help="max training samples")
    p.add_argument("--test-cap", dest="test_cap", type=int, help="max test samples")
    p.add_argument("--epochs", type=int)
    p.add_argument("--alpha", type=float, help="learning rate")
    p.add_argument("--beta", type=float, help="target nudging strength")
    p.add_argument("--rule", choices=["windowed", "allpairs"], help="spike pairing rule")
    p.add_argument("--kernel", choices=["sin", "exp"], help="plasticity kernel")
    p.add_argument("--dt", type=float, help="Euler step in ms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikewin", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, extra in (
        ("train", ()),
        ("eval", ("checkpoint",)),
        ("trace", ("checkpoint", "sample_index")),
        ("compare-rules", ()),
    ):
        p = sub.add_parser(name)
        _add_common_flags(p)
        if "checkpoint" in extra:
            p.add_argument("--checkpoint", type=Path, required=True, help="weights file")
        if "sample_index" in extra:
            p.add_argument("--sample-index", dest="sample_index", type=int, default=0,
                           help="index into the configured test set")

    p = sub.add_parser("synth-data")
    p.add_argument("--out", required=True, help="directory for the IDX files")
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", default=None, help="comma-separated digits to generate")
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = cfgmod.load_config_file(args.config) if args.config else {}
    overrides = {}
    for key in ("seed", "data_dir", "out", "train_cap", "test_cap", "epochs",
                "alpha", "beta", "rule", "kernel", "dt"):
        overrides[key] = getattr(args, key, None)
    if getattr(args, "classes", None) is not None:
        overrides["classes"] = cfgmod.parse_value("classes", args.classes)
    return cfgmod.resolve(file_values, overrides)


def _load_datasets(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    data_dir = cfg.resolved_data_dir()
    train = load_mnist_dir(
        data_dir, train=True, class_filter=cfg.classes, cap=cfg.train_cap,
        seed=cfg.seed, images_name=cfg.train_images, labels_name=cfg.train_labels,
    )
    test = load_mnist_dir(
        data_dir, train=False, class_filter=cfg.classes, cap=cfg.test_cap,
        seed=cfg.seed + 1, images_name=cfg.test_images, labels_name=cfg.test_labels,
    )
    return train, test


def _run_dir(cfg: RunConfig) -> Path:
    if cfg.out:
        path = Path(cfg.out)
    else:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        path = Path("runs") / f"{stamp}-seed{cfg.seed}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo_config(cfg: RunConfig, out_dir: Path) -> None:
    (out_dir / "config_resolved.txt").write_text(cfgmod.render(cfg))


def _train_meta(cfg: RunConfig) -> dict[str, str]:
    tau = cfg.tau_w if cfg.kernel == "sin" else cfg.tau_m
    return {
        "kernel": cfg.kernel,
        "kernel_tau": repr(float(tau)),
        "rule": cfg.rule,
        "window_ms": repr(float(cfg.window)),
        "seed": str(cfg.seed),
    }


def _run_training(cfg: RunConfig, train_set: Dataset, test_set: Dataset,
                  out_dir: Path, tag: str = ""):
    params = cfg.to_params()
    topology = cfg.topology()
    train_cfg = cfg.to_train_config()
    weights = WeightStore.init_random(
        topology, cfg.seed, w_init_max=cfg.w_init_max, w_init_scale=cfg.w_init_scale
    )
    suffix = f"_{tag}" if tag else ""

    def on_eval(metric, current_weights):
        current_weights.save(
            out_dir / f"checkpoint{suffix}_epoch{metric.epoch:03d}.txt", _train_meta(cfg)
        )
        print(
            f"epoch {metric.epoch:3d}{' ' + tag if tag else ''}: "
            f"train_error={metric.train_error:.4f} test_error={metric.test_error:.4f} "
            f"mean_output_spikes={metric.mean_output_spikes:.2f}"
        )

    weights, metrics = train_epochs(
        weights, train_set, test_set, train_cfg, params, topology, on_eval=on_eval
    )
    reports.write_metrics_csv(out_dir / f"metrics{suffix}.csv", metrics)
    reports.write_timings_csv(out_dir / f"timings{suffix}.csv", metrics)
    weights.save(out_dir / f"weights{suffix}_final.txt", _train_meta(cfg))
    return weights, metrics


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    train_set, test_set = _load_datasets(cfg)
    out_dir = _run_dir(cfg)
    _echo_config(cfg, out_dir)
    _, metrics = _run_training(cfg, train_set, test_set, out_dir)
    reports.plot_error_curves(out_dir / "error_curve.png", {cfg.rule: metrics},
                              f"training ({cfg.rule} rule)")
    final = metrics[-1]
    print(f"done: train_error={final.train_error:.4f} test_error={final.test_error:.4f} "
          f"outputs in {out_dir}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    weights, _ = WeightStore.load(args.checkpoint)
    if weights.topology.layer_sizes != cfg.topology().layer_sizes:
        print(
            f"error: checkpoint topology {weights.topology.layer_sizes} does not match "
            f"configured {cfg.topology().layer_sizes}",
            file=sys.stderr,
        )
        return 2
    _, test_set = _load_datasets(cfg)
    error = evaluate(weights, cfg.to_params(), weights.topology, test_set, cfg.to_train_config())
    print(f"test_error={error:.6f} over {len(test_set)} samples")
    if cfg.out:
        out_dir = _run_dir(cfg)
        _echo_config(cfg, out_dir)
        reports.write_eval_csv(out_dir / "eval.csv", str(args.checkpoint),
                               len(test_set), error)
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    weights, _ = WeightStore.load(args.checkpoint)
    topology = weights.topology
    _, test_set = _load_datasets(cfg)
    if not 0 <= args.sample_index < len(test_set):
        print(f"error: sample index {args.sample_index} outside 0..{len(test_set) - 1}",
              file=sys.stderr)
        return 2
    sample = test_set[args.sample_index]
    out_dir = _run_dir(cfg)
    _echo_config(cfg, out_dir)

    out_ids = np.arange(topology.n_total)[topology.layer_slice("output")]
    for dt in (1.0, 0.01):
        params = replace(cfg.to_params(), dt=dt)
        trace = TraceRecorder(out_ids)
        record, predicted = run_sample_inference(
            weights, params, topology, sample.pixels, cfg.t0, trace=trace
        )
        tag = f"dt{dt:g}ms"
        offset = int(out_ids[0])
        reports.write_trace_csv(out_dir / f"trace_{tag}.csv", trace, "output", offset)
        reports.write_spike_csv(out_dir / f"spikes_{tag}.csv", record, out_ids, offset)
        reports.plot_traces(
            out_dir / f"trace_{tag}_V.png", out_dir / f"trace_{tag}_P.png",
            trace, f"(output layer, dt={dt:g} ms)",
        )
        counts = record.counts(-np.inf, 0.0)[topology.layer_slice("output")]
        print(f"dt={dt:g} ms: predicted={predicted} label={sample.label} "
              f"output_counts={counts.tolist()}")
    return 0


def cmd_compare_rules(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    train_set, test_set = _load_datasets(cfg)
    out_dir = _run_dir(cfg)
    _echo_config(cfg, out_dir)

    curves = {}
    for rule in ("windowed", "allpairs"):
        rule_cfg = replace(cfg, rule=rule)
        _, metrics = _run_training(rule_cfg, train_set, test_set, out_dir, tag=rule)
        curves[rule] = metrics

    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rule", "final_train_error", "final_test_error"])
        for rule, metrics in curves.items():
            writer.writerow([rule, f"{metrics[-1].train_error:.6f}",
                             f"{metrics[-1].test_error:.6f}"])
    reports.plot_error_curves(out_dir / "rules_error.png", curves,
                              "pre-windowed vs all-pairs pairing")
    print(
        "final train error: windowed={:.4f} allpairs={:.4f}".format(
            curves["windowed"][-1].train_error, curves["allpairs"][-1].train_error
        )
    )
    return 0


def cmd_synth_data(args: argparse.Namespace) -> int:
    classes = tuple(range(10))
    if args.classes:
        classes = cfgmod.parse_value("classes", args.classes)
    out = synthdata.write_corpus(args.out, args.n_train, args.n_test, args.seed, classes)
    print(f"wrote synthetic corpus ({args.n_train} train / {args.n_test} test, "
          f"classes {','.join(map(str, classes))}) to {out}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "trace": cmd_trace,
    "compare-rules": cmd_compare_rules,
    "synth-data": cmd_synth_data,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, ValueError, SimulationDivergedError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())
