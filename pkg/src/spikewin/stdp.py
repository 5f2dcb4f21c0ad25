"""STDP kernels and pairing rules over recorded spike trains.

A kernel maps the post-minus-pre spike time difference to a weight
increment and is antisymmetric: f(-dt) = -f(dt), f(0) = 0. Two pairing
rules turn a pair of spike trains into a synaptic delta:

* all-pairs: every (post, pre) combination contributes, which makes the
  deltas of a reciprocal synapse pair cancel exactly,
* pre-windowed: only presynaptic spikes inside [0, T] contribute, while
  postsynaptic spikes count from the whole record. The asymmetry means a
  postsynaptic rate change at the phase boundary survives in the delta
  instead of cancelling, which is what carries the supervised signal.

``accumulate`` evaluates the chosen rule for every synapse of every
connection block. Spike times sit on the simulation grid, so the event sum
is computed exactly as (binned post) @ kernel-lag matrix @ (binned pre)^T,
which is just a reordering of the same finite sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SpikeRecord
from .params import Topology, block_key
from .weights import WeightStore


@dataclass(frozen=True)
class ExponentialKernel:
    """exp(-dt/tau) potentiation for post-after-pre, mirrored for the reverse."""

    tau: float = 20.0

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def __call__(self, delta_t):
        delta_t = np.asarray(delta_t, dtype=np.float64)
        return np.sign(delta_t) * np.exp(-np.abs(delta_t) / self.tau)


@dataclass(frozen=True)
class SinusoidalKernel:
    """sin(pi * dt / tau) inside [-tau, tau], zero outside."""

    tau: float = 20.0

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def __call__(self, delta_t):
        delta_t = np.asarray(delta_t, dtype=np.float64)
        inside = np.abs(delta_t) <= self.tau
        return np.where(inside, np.sin(np.pi * delta_t / self.tau), 0.0)


Kernel = ExponentialKernel | SinusoidalKernel


@dataclass(frozen=True)
class AllPairs:
    pass


@dataclass(frozen=True)
class PreWindowed:
    window_ms: float = 100.0

    def __post_init__(self) -> None:
        if self.window_ms <= 0:
            raise ValueError("window_ms must be positive")


PairingRule = AllPairs | PreWindowed


def kernel_eval(kernel: Kernel, delta_t: float) -> float:
    """Kernel value at delta_t = t_post - t_pre (positive = potentiation)."""
    return float(kernel(delta_t))


def delta_all_pairs(pre_train: np.ndarray, post_train: np.ndarray, kernel: Kernel) -> float:
    """Sum of kernel values over every (post, pre) spike pair."""
    pre = np.asarray(pre_train, dtype=np.float64)
    post = np.asarray(post_train, dtype=np.float64)
    if pre.size == 0 or post.size == 0:
        return 0.0
    return float(kernel(post[:, None] - pre[None, :]).sum())


def delta_windowed(
    pre_train: np.ndarray,
    post_train: np.ndarray,
    kernel: Kernel,
    window_ms: float,
) -> float:
    """All-pairs sum restricted to presynaptic spikes inside [0, window_ms].

    Postsynaptic spikes are unrestricted; for a finite-support kernel only
    those within the support of some in-window pre spike matter anyway.
    """
    pre = np.asarray(pre_train, dtype=np.float64)
    pre = pre[(pre >= 0.0) & (pre <= window_ms)]
    return delta_all_pairs(pre, post_train, kernel)


def _lag_chunks(kernel: Kernel, post_idx: np.ndarray, pre_idx: np.ndarray, dt: float,
                chunk: int = 2048):
    """Kernel values for every (post bin, pre bin) index pair, in column chunks.

    Chunking bounds peak memory when the grid is fine (small dt); at the
    default 1 ms step everything fits in one chunk.
    """
    for start in range(0, pre_idx.size, chunk):
        cols = pre_idx[start : start + chunk]
        yield start, kernel((post_idx[:, None] - cols[None, :]) * dt)


def accumulate(
    record: SpikeRecord,
    topology: Topology,
    rule: PairingRule,
    kernel: Kernel,
) -> dict[str, np.ndarray]:
    """Per-block synaptic deltas for every directed synapse in the record.

    Returns matrices shaped like the corresponding weight blocks; entries
    stay zero wherever no spike pair contributed.
    """
    lo, hi = record.extent
    dt = record.dt

    if isinstance(rule, PreWindowed):
        w_idx = round(rule.window_ms / dt)
        pre_lo, pre_hi = 0, min(w_idx, hi)
        if isinstance(kernel, SinusoidalKernel):
            margin = int(np.ceil(kernel.tau / dt))
            post_lo = max(lo, pre_lo - margin)
            post_hi = min(hi, pre_hi + margin)
        else:
            post_lo, post_hi = lo, hi
    else:
        pre_lo, pre_hi = lo, hi
        post_lo, post_hi = lo, hi

    deltas = {
        block_key(src, tgt): np.zeros(topology.block_shape(src, tgt))
        for src, tgt in topology.blocks
    }
    if pre_hi < pre_lo or post_hi < post_lo or not record.events:
        return deltas

    span_lo = min(pre_lo, post_lo)
    bins = record.binned(span_lo, max(pre_hi, post_hi))
    pre_bins = bins[:, pre_lo - span_lo : pre_hi - span_lo + 1]
    post_bins = bins[:, post_lo - span_lo : post_hi - span_lo + 1]

    # Neurons without a single spike in range contribute nothing, so the
    # matrix products only run over the active rows of each layer.
    active: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}
    for layer in {name for pair in topology.blocks for name in pair}:
        sl = topology.layer_slice(layer)
        pre = pre_bins[sl]
        post = post_bins[sl]
        pre_rows = np.flatnonzero(pre.any(axis=1))
        post_rows = np.flatnonzero(post.any(axis=1))
        active[layer] = (pre_rows, pre[pre_rows], post_rows, post[post_rows])

    for col, lags in _lag_chunks(
        kernel,
        np.arange(post_lo, post_hi + 1),
        np.arange(pre_lo, pre_hi + 1),
        dt,
    ):
        for src, tgt in topology.blocks:
            pre_rows, pre, _, _ = active[src]
            _, _, post_rows, post = active[tgt]
            if pre_rows.size and post_rows.size:
                part = (post @ lags) @ pre[:, col : col + lags.shape[1]].T
                deltas[block_key(src, tgt)][np.ix_(post_rows, pre_rows)] += part
    return deltas


def apply_delta(
    weights: WeightStore,
    delta: dict[str, np.ndarray],
    alpha: float,
    clamp_nonneg: bool = False,
) -> WeightStore:
    """New weight store with W + alpha * delta per block."""
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    blocks = {}
    for key, w in weights.blocks.items():
        d = delta[key]
        if d.shape != w.shape:
            raise ValueError(f"delta block {key} has shape {d.shape}, expected {w.shape}")
        out = w + alpha * d
        if clamp_nonneg:
            np.clip(out, 0.0, None, out=out)
        blocks[key] = out
    return WeightStore(weights.topology, blocks)
