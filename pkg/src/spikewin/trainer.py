"""Two-phase per-sample training loop, evaluation and epoch orchestration.

Each training sample is simulated from a freshly initialized state: an
inference phase over [-t0, 0] with free dynamics (whose output spike
counts give the prediction), then a learning phase over [0, T + tau]
during which output neurons are nudged toward the one-hot target. The
pairing rule is evaluated once over the merged spike record and applied
with the learning rate alpha. Everything is deterministic given the seed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import PhaseKind, SpikeRecord, init_state, predict, run_phase
from .mnist import Dataset, Sample
from .params import NetworkParams, Topology
from .stdp import (
    AllPairs,
    ExponentialKernel,
    Kernel,
    PairingRule,
    PreWindowed,
    SinusoidalKernel,
    accumulate,
    apply_delta,
)
from .weights import WeightStore


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    alpha: float = 1e-3
    t0_ms: float = 100.0
    window_ms: float = 100.0
    kernel: str = "sin"
    tau_w: float = 20.0
    tau_m: float = 20.0
    rule: str = "windowed"
    # "post_minus_pre" potentiates synapses whose postsynaptic spike follows
    # the presynaptic one; "pre_minus_post" flips every update's sign.
    sign_convention: str = "post_minus_pre"
    seed: int = 0
    eval_every: int = 1
    clamp_weights_nonneg: bool = False
    # Start each simulation with seeded random membrane phases instead of a
    # uniform resting potential (see dynamics.init_state).
    jitter_init: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.alpha < 0 or not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite and non-negative")
        if self.t0_ms <= 0 or self.window_ms <= 0:
            raise ValueError("phase durations must be positive")
        if self.kernel not in ("sin", "exp"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.rule not in ("windowed", "allpairs"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.sign_convention not in ("post_minus_pre", "pre_minus_post"):
            raise ValueError(f"unknown sign convention {self.sign_convention!r}")
        if self.eval_every < 1:
            raise ValueError("eval_every must be at least 1")

    def make_kernel(self) -> Kernel:
        if self.kernel == "sin":
            return SinusoidalKernel(self.tau_w)
        return ExponentialKernel(self.tau_m)

    def make_rule(self) -> PairingRule:
        if self.rule == "windowed":
            return PreWindowed(self.window_ms)
        return AllPairs()

    @property
    def learn_ms(self) -> float:
        # The learning phase runs past the pairing window by one kernel
        # width so late in-window pre spikes see their full post context.
        margin = self.tau_w if self.kernel == "sin" else self.tau_m
        return self.window_ms + margin

    @property
    def signed_alpha(self) -> float:
        return self.alpha if self.sign_convention == "post_minus_pre" else -self.alpha

    def phase_rng(self) -> np.random.Generator | None:
        """Generator for the initial membrane phases, fixed per config."""
        if not self.jitter_init:
            return None
        return np.random.default_rng(np.random.SeedSequence([_PHASE_STREAM, self.seed]))


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_error: float
    test_error: float
    mean_output_spikes: float
    seconds: float


# Distinguishes the membrane-phase random stream from the shuffle stream.
_PHASE_STREAM = 0x9E3779B9


def encode_target(label: int, n_classes: int) -> np.ndarray:
    """One-hot target vector."""
    if not 0 <= label < n_classes:
        raise ValueError(f"label {label} outside 0..{n_classes - 1}")
    v_y = np.zeros(n_classes, dtype=np.float64)
    v_y[label] = 1.0
    return v_y


def run_sample_inference(
    weights: WeightStore,
    params: NetworkParams,
    topology: Topology,
    pixels: np.ndarray,
    t0_ms: float,
    trace=None,
    phase_rng: np.random.Generator | None = None,
) -> tuple[SpikeRecord, int]:
    """Fresh-state inference phase; returns the record and the prediction."""
    state = init_state(topology, params, phase_rng)
    _, record = run_phase(
        state, weights, params, topology, pixels, None,
        PhaseKind.INFERENCE, t0_ms, trace=trace,
    )
    return record, predict(record, topology)


def train_sample(
    weights: WeightStore,
    params: NetworkParams,
    topology: Topology,
    sample: Sample,
    config: TrainConfig,
) -> tuple[WeightStore, int]:
    """One inference + learning pass; returns updated weights and prediction."""
    state = init_state(topology, params, config.phase_rng())
    v_y = encode_target(sample.label, topology.size("output"))
    _, record = run_phase(
        state, weights, params, topology, sample.pixels, None,
        PhaseKind.INFERENCE, config.t0_ms,
    )
    predicted = predict(record, topology)
    run_phase(
        state, weights, params, topology, sample.pixels, v_y,
        PhaseKind.LEARNING, config.learn_ms, record=record,
    )
    if config.alpha == 0.0:
        return weights, predicted
    delta = accumulate(record, topology, config.make_rule(), config.make_kernel())
    new_weights = apply_delta(weights, delta, config.signed_alpha,
                              clamp_nonneg=config.clamp_weights_nonneg)
    return new_weights, predicted


def evaluate(
    weights: WeightStore,
    params: NetworkParams,
    topology: Topology,
    dataset: Dataset,
    config: TrainConfig,
) -> float:
    """Error rate over the dataset using inference phases only."""
    return evaluate_detailed(weights, params, topology, dataset, config)[0]


def evaluate_detailed(
    weights: WeightStore,
    params: NetworkParams,
    topology: Topology,
    dataset: Dataset,
    config: TrainConfig,
) -> tuple[float, float]:
    """(error rate, mean output-layer spikes per sample) over the dataset."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    wrong = 0
    total_spikes = 0
    out_sl = topology.layer_slice("output")
    for i in range(len(dataset)):
        sample = dataset[i]
        record, predicted = run_sample_inference(
            weights, params, topology, sample.pixels, config.t0_ms,
            phase_rng=config.phase_rng(),
        )
        wrong += int(predicted != sample.label)
        total_spikes += int(record.counts(-np.inf, 0.0)[out_sl].sum())
    return wrong / len(dataset), total_spikes / len(dataset)


def train_epochs(
    weights: WeightStore,
    train_set: Dataset,
    test_set: Dataset,
    config: TrainConfig,
    params: NetworkParams,
    topology: Topology,
    on_eval: Callable[[EpochMetrics, WeightStore], None] | None = None,
) -> tuple[WeightStore, list[EpochMetrics]]:
    """Shuffled per-sample training with periodic train/test evaluation.

    The shuffle of epoch e uses seed + e, so the full metric stream is a
    pure function of the config and datasets. ``on_eval`` fires after each
    evaluated epoch (every ``eval_every`` epochs and on the final one).
    """
    metrics: list[EpochMetrics] = []
    t_start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = np.random.default_rng(config.seed + epoch).permutation(len(train_set))
        for i in order:
            weights, _ = train_sample(weights, params, topology, train_set[int(i)], config)
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            train_error = evaluate(weights, params, topology, train_set, config)
            test_error, mean_spikes = evaluate_detailed(
                weights, params, topology, test_set, config
            )
            entry = EpochMetrics(
                epoch=epoch,
                train_error=train_error,
                test_error=test_error,
                mean_output_spikes=mean_spikes,
                seconds=time.perf_counter() - t_start,
            )
            metrics.append(entry)
            if on_eval is not None:
                on_eval(entry, weights)
    return weights, metrics
