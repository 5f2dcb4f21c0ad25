"""Three-layer LIF spiking network trained by window-gated STDP."""

from .params import NetworkParams, Topology
from .dynamics import (
    NeuronState,
    PhaseKind,
    SimulationDivergedError,
    SpikeRecord,
    TraceRecorder,
    init_state,
    predict,
    run_phase,
    step,
)
from .stdp import (
    AllPairs,
    ExponentialKernel,
    PreWindowed,
    SinusoidalKernel,
    accumulate,
    apply_delta,
    delta_all_pairs,
    delta_windowed,
    kernel_eval,
)
from .weights import WeightStore
from .trainer import (
    EpochMetrics,
    TrainConfig,
    encode_target,
    evaluate,
    train_epochs,
    train_sample,
)
from .mnist import Dataset, Sample, build_dataset, load_mnist_dir

__all__ = [
    "AllPairs",
    "Dataset",
    "EpochMetrics",
    "ExponentialKernel",
    "NetworkParams",
    "NeuronState",
    "PhaseKind",
    "PreWindowed",
    "Sample",
    "SimulationDivergedError",
    "SinusoidalKernel",
    "SpikeRecord",
    "Topology",
    "TraceRecorder",
    "TrainConfig",
    "WeightStore",
    "accumulate",
    "apply_delta",
    "build_dataset",
    "delta_all_pairs",
    "delta_windowed",
    "encode_target",
    "evaluate",
    "init_state",
    "kernel_eval",
    "load_mnist_dir",
    "predict",
    "run_phase",
    "step",
    "train_epochs",
    "train_sample",
]
