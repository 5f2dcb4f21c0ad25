"""Clock-driven Euler simulation of the three-layer LIF network.

Each neuron carries a membrane potential V (mV) and an input summation P
(dimensionless). One Euler step of size dt:

* hidden/output P decays with tau_p and jumps by the synaptic weight for
  every presynaptic spike from the previous step; output P is additionally
  nudged toward p0 * v_y during the learning phase; the result is clamped
  to [p_min, p_max],
* input P is overwritten with p0 * v_x (pixel clamping),
* V integrates -V + e_leak - r_m * P * (V - e_syn) for every neuron,
* any V at or above v_th emits a spike and resets to v_reset.

Spike times live on the integer step grid: index 0 is the first learning
phase step, so inference-phase spikes carry negative indices and times in
ms are index * dt. Spikes emitted at step k reach postsynaptic P at k + 1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .params import NetworkParams, Topology
from .weights import WeightStore


class SimulationDivergedError(RuntimeError):
    """Raised when a state variable stops being finite."""


class PhaseKind(enum.Enum):
    INFERENCE = "inference"
    LEARNING = "learning"


_EMPTY = np.empty(0, dtype=np.intp)


@dataclass
class NeuronState:
    """Mutable per-neuron state: V, P, and last step's spike set."""

    v: np.ndarray
    p: np.ndarray
    last_fired: np.ndarray = field(default_factory=lambda: _EMPTY.copy())


def init_state(
    topology: Topology,
    params: NetworkParams,
    phase_rng: np.random.Generator | None = None,
) -> NeuronState:
    """Fresh resting state: every V at e_leak, every P at zero.

    With ``phase_rng``, membrane potentials start uniformly spread over
    [v_reset, v_th) instead. Identical deterministic neurons otherwise fire
    in permanent lockstep volleys, and the resulting comb-shaped spike
    correlations swamp the plasticity signal; random initial phases break
    the lockstep while keeping runs reproducible under a fixed seed.
    """
    n = topology.n_total
    if phase_rng is None:
        v = np.full(n, params.e_leak, dtype=np.float64)
    else:
        v = params.v_reset + (params.v_th - params.v_reset) * phase_rng.random(n)
    return NeuronState(v=v, p=np.zeros(n, dtype=np.float64))


class SpikeRecord:
    """Spike events for all neurons over both phases, on the step grid.

    Events are appended in step order as (grid index, fired neuron ids).
    ``cover`` widens the known simulated extent so that downstream code can
    distinguish "no spikes here" from "never simulated".
    """

    def __init__(self, n_neurons: int, dt: float):
        self.n_neurons = n_neurons
        self.dt = dt
        self.events: list[tuple[int, np.ndarray]] = []
        self.lo_idx: int | None = None
        self.hi_idx: int | None = None

    def append(self, grid_idx: int, fired: np.ndarray) -> None:
        if fired.size:
            self.events.append((grid_idx, fired))

    def cover(self, lo_idx: int, hi_idx: int) -> None:
        self.lo_idx = lo_idx if self.lo_idx is None else min(self.lo_idx, lo_idx)
        self.hi_idx = hi_idx if self.hi_idx is None else max(self.hi_idx, hi_idx)

    @property
    def extent(self) -> tuple[int, int]:
        if self.lo_idx is None or self.hi_idx is None:
            raise ValueError("record covers no simulated steps")
        return self.lo_idx, self.hi_idx

    def times(self, neuron: int) -> np.ndarray:
        """Spike times of one neuron in ms, strictly increasing."""
        out = [idx * self.dt for idx, fired in self.events if neuron in fired]
        return np.asarray(out, dtype=np.float64)

    def split_index(self, neuron: int) -> int:
        """Number of inference-phase spikes (times < 0) for the neuron."""
        return int(sum(1 for idx, fired in self.events if idx < 0 and neuron in fired))

    def counts(self, lo_ms: float, hi_ms: float) -> np.ndarray:
        """Per-neuron spike counts with time in [lo_ms, hi_ms)."""
        out = np.zeros(self.n_neurons, dtype=np.int64)
        for idx, fired in self.events:
            t = idx * self.dt
            if lo_ms <= t < hi_ms:
                out[fired] += 1
        return out

    def binned(self, lo_idx: int, hi_idx: int) -> np.ndarray:
        """Dense 0/1 matrix (n_neurons, hi_idx - lo_idx + 1) of spikes."""
        out = np.zeros((self.n_neurons, hi_idx - lo_idx + 1), dtype=np.float64)
        for idx, fired in self.events:
            if lo_idx <= idx <= hi_idx:
                out[fired, idx - lo_idx] = 1.0
        return out


class TraceRecorder:
    """Collects per-step V and P samples for a fixed set of neurons."""

    def __init__(self, neuron_ids: np.ndarray):
        self.neuron_ids = np.asarray(neuron_ids, dtype=np.intp)
        self.t_ms: list[float] = []
        self.v: list[np.ndarray] = []
        self.p: list[np.ndarray] = []

    def capture(self, t_ms: float, v: np.ndarray, p: np.ndarray) -> None:
        self.t_ms.append(t_ms)
        self.v.append(v[self.neuron_ids].copy())
        self.p.append(p[self.neuron_ids].copy())

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.asarray(self.t_ms),
            np.asarray(self.v),
            np.asarray(self.p),
        )


class _PhaseContext:
    """Everything constant over one phase, hoisted out of the step loop."""

    __slots__ = (
        "learning", "coef_p", "coef_v", "jump", "p_in", "p0_vy", "nudge_coef",
        "layer_bounds", "block_ops", "in_sl", "rest_sl", "out_sl",
        "e_leak", "e_syn", "r_m", "ext", "v_th", "v_reset", "p_min", "p_max",
    )

    def __init__(
        self,
        weights: WeightStore,
        params: NetworkParams,
        topology: Topology,
        v_x: np.ndarray,
        v_y: np.ndarray | None,
        learning: bool,
    ):
        n_in = topology.size("input")
        n_hid = topology.size("hidden")
        self.learning = learning
        self.coef_p = params.dt / params.tau_p
        self.coef_v = params.dt / params.tau_v
        self.jump = params.spike_jump_scale
        self.p_in = params.p0 * np.asarray(v_x, dtype=np.float64)
        self.p0_vy = None if v_y is None else params.p0 * np.asarray(v_y, dtype=np.float64)
        self.nudge_coef = self.coef_p * params.beta
        self.layer_bounds = np.array([n_in, n_in + n_hid], dtype=np.intp)
        offsets = {"input": 0, "hidden": n_in, "output": n_in + n_hid}
        segment = {"input": 0, "hidden": 1, "output": 2}
        self.block_ops = [
            (segment[src], offsets[src], weights.src_major(src, tgt), topology.layer_slice(tgt))
            for src, tgt in topology.blocks
        ]
        self.in_sl = topology.layer_slice("input")
        self.rest_sl = slice(n_in, topology.n_total)
        self.out_sl = topology.layer_slice("output")
        self.e_leak = params.e_leak
        self.e_syn = params.e_syn
        self.r_m = params.r_m
        self.ext = params.r_mem * params.i_ext
        self.v_th = params.v_th
        self.v_reset = params.v_reset
        self.p_min = params.p_min
        self.p_max = params.p_max


def _advance(state: NeuronState, ctx: _PhaseContext) -> np.ndarray:
    """One Euler step against a prepared context. Mutates the state."""
    v, p = state.v, state.p
    fired_prev = state.last_fired

    rest = p[ctx.rest_sl]
    rest += ctx.coef_p * (-rest)
    if fired_prev.size:
        b0, b1 = fired_prev.searchsorted(ctx.layer_bounds)
        segments = (fired_prev[:b0], fired_prev[b0:b1], fired_prev[b1:])
        for seg_idx, offset, w_src, tgt_sl in ctx.block_ops:
            f = segments[seg_idx]
            if f.size:
                drive = w_src[f - offset if offset else f].sum(axis=0)
                if ctx.jump != 1.0:
                    drive *= ctx.jump
                p[tgt_sl] += drive
    if ctx.learning:
        p_out = p[ctx.out_sl]
        p_out += ctx.nudge_coef * (ctx.p0_vy - p_out)
    rest.clip(ctx.p_min, ctx.p_max, out=rest)
    p[ctx.in_sl] = ctx.p_in

    grad = ctx.e_leak - v
    grad -= ctx.r_m * (p * v if ctx.e_syn == 0.0 else p * (v - ctx.e_syn))
    if ctx.ext != 0.0:
        grad += ctx.ext
    v += ctx.coef_v * grad

    if not np.isfinite(v.sum()):
        bad = int(np.flatnonzero(~np.isfinite(v))[0])
        raise SimulationDivergedError(f"non-finite membrane potential at neuron {bad}")

    fired = (v >= ctx.v_th).nonzero()[0]
    if fired.size:
        v[fired] = ctx.v_reset
    state.last_fired = fired
    return fired


def step(
    state: NeuronState,
    weights: WeightStore,
    params: NetworkParams,
    topology: Topology,
    v_x: np.ndarray,
    v_y: np.ndarray | None = None,
    phase: PhaseKind = PhaseKind.INFERENCE,
    fired_prev: np.ndarray | None = None,
) -> np.ndarray:
    """Advance the network one Euler step in place; return fired neuron ids.

    ``fired_prev`` defaults to the spike set stored on the state by the
    previous call, which keeps spike propagation continuous across phases.
    """
    learning = phase is PhaseKind.LEARNING
    if learning and v_y is None:
        raise ValueError("learning phase requires a target signal")
    if fired_prev is not None:
        state.last_fired = np.asarray(fired_prev, dtype=np.intp)
    ctx = _PhaseContext(weights, params, topology, v_x, v_y, learning)
    return _advance(state, ctx)


def _steps_for(duration_ms: float, dt: float) -> int:
    n = duration_ms / dt
    n_round = round(n)
    if duration_ms <= 0 or n_round == 0 or abs(n - n_round) > 1e-6 * max(n_round, 1):
        raise ValueError(f"duration {duration_ms} ms is not a positive multiple of dt={dt}")
    return int(n_round)


def run_phase(
    state: NeuronState,
    weights: WeightStore,
    params: NetworkParams,
    topology: Topology,
    v_x: np.ndarray,
    v_y: np.ndarray | None,
    phase: PhaseKind,
    duration_ms: float,
    record: SpikeRecord | None = None,
    trace: TraceRecorder | None = None,
) -> tuple[NeuronState, SpikeRecord]:
    """Run one phase of ``duration_ms`` and record every spike.

    Inference steps map to grid indices [-n, -1] (times [-duration, -dt])
    and learning steps to [0, n-1], so a single record accumulated across
    both phases carries inference spikes at negative times.
    """
    v_x = np.asarray(v_x, dtype=np.float64)
    if v_x.shape != (topology.size("input"),):
        raise ValueError("v_x must have one entry per input neuron")
    if v_x.size and (v_x.min() < 0.0 or v_x.max() > 1.0):
        raise ValueError("v_x entries must lie in [0, 1]")
    learning = phase is PhaseKind.LEARNING
    if learning:
        if v_y is None:
            raise ValueError("learning phase requires a target signal")
        v_y = np.asarray(v_y, dtype=np.float64)
        if v_y.shape != (topology.size("output"),):
            raise ValueError("v_y must have one entry per output neuron")

    n_steps = _steps_for(duration_ms, params.dt)
    offset = -n_steps if phase is PhaseKind.INFERENCE else 0
    if record is None:
        record = SpikeRecord(topology.n_total, params.dt)
    record.cover(offset, offset + n_steps - 1)

    ctx = _PhaseContext(weights, params, topology, v_x, v_y, learning)
    events = record.events
    for k in range(n_steps):
        try:
            fired = _advance(state, ctx)
        except SimulationDivergedError as err:
            raise SimulationDivergedError(
                f"{err} (t = {(offset + k) * params.dt:g} ms)"
            ) from None
        if fired.size:
            events.append((offset + k, fired))
        if trace is not None:
            trace.capture((offset + k) * params.dt, state.v, state.p)
    return state, record


def predict(record: SpikeRecord, topology: Topology,
            window_ms: tuple[float, float] | None = None) -> int:
    """Class index with the most output spikes in the inference window.

    Ties resolve to the lowest index, so an all-silent record yields 0.
    """
    if window_ms is None:
        window_ms = (-np.inf, 0.0)
    counts = record.counts(*window_ms)[topology.layer_slice("output")]
    return int(np.argmax(counts))
