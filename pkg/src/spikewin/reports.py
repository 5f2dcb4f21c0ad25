"""CSV tables and matplotlib figures emitted next to each other by the CLI."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import SpikeRecord, TraceRecorder
from .trainer import EpochMetrics


def write_metrics_csv(path: Path, metrics: list[EpochMetrics]) -> None:
    # Wall time deliberately goes to timings.csv so this file is identical
    # across reruns of the same config.
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_error", "test_error", "mean_output_spikes"])
        for m in metrics:
            writer.writerow(
                [m.epoch, f"{m.train_error:.6f}", f"{m.test_error:.6f}",
                 f"{m.mean_output_spikes:.4f}"]
            )


def write_timings_csv(path: Path, metrics: list[EpochMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "seconds"])
        for m in metrics:
            writer.writerow([m.epoch, f"{m.seconds:.3f}"])


def write_eval_csv(path: Path, checkpoint: str, n_samples: int, error: float) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["checkpoint", "n_samples", "test_error"])
        writer.writerow([checkpoint, n_samples, f"{error:.6f}"])


def write_trace_csv(path: Path, trace: TraceRecorder, layer: str,
                    id_offset: int = 0) -> None:
    """One row per (time, neuron): time_ms, neuron_id, layer, V_mV, P.

    ``id_offset`` converts global neuron ids into layer-local ones.
    """
    t, v, p = trace.as_arrays()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_ms", "neuron_id", "layer", "V_mV", "P"])
        for row, t_ms in enumerate(t):
            for col, neuron in enumerate(trace.neuron_ids):
                writer.writerow(
                    [f"{t_ms:g}", int(neuron) - id_offset, layer,
                     f"{v[row, col]:.6f}", f"{p[row, col]:.8f}"]
                )


def write_spike_csv(path: Path, record: SpikeRecord, neuron_ids: np.ndarray,
                    id_offset: int = 0) -> None:
    wanted = set(int(n) for n in neuron_ids)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_ms", "neuron_id"])
        for idx, fired in record.events:
            for neuron in fired:
                if int(neuron) in wanted:
                    writer.writerow([f"{idx * record.dt:g}", int(neuron) - id_offset])


def plot_error_curves(path: Path, curves: dict[str, list[EpochMetrics]], title: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, metrics in curves.items():
        epochs = [m.epoch for m in metrics]
        ax.plot(epochs, [m.train_error for m in metrics], marker="o",
                label=f"{label} train")
        ax.plot(epochs, [m.test_error for m in metrics], marker="s",
                linestyle="--", label=f"{label} test")
    ax.set_xlabel("epoch")
    ax.set_ylabel("error rate")
    ax.set_ylim(bottom=0)
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_traces(v_path: Path, p_path: Path, trace: TraceRecorder, title_suffix: str) -> None:
    """Stacked per-neuron traces of membrane potential and input summation."""
    t, v, p = trace.as_arrays()
    n = len(trace.neuron_ids)
    for path, data, ylab, title in (
        (v_path, v, "V (mV)", f"membrane potential {title_suffix}"),
        (p_path, p, "P", f"input summation {title_suffix}"),
    ):
        fig, axes = plt.subplots(n, 1, figsize=(7, 1.1 * n), sharex=True)
        axes = np.atleast_1d(axes)
        for row, ax in enumerate(axes):
            ax.plot(t, data[:, row], linewidth=0.7)
            ax.set_ylabel(str(row), rotation=0, labelpad=12, fontsize=8)
            ax.tick_params(labelsize=7)
        axes[-1].set_xlabel("time (ms)")
        axes[0].set_title(title)
        fig.supylabel(ylab)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
