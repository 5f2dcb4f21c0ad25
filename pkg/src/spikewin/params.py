"""Physical constants and network topology for the LIF simulator."""
from __future__ import annotations

from dataclasses import dataclass

LAYER_NAMES = ("input", "hidden", "output")

# Directed connection blocks. Input clamping makes hidden->input synapses
# inert, so that block is omitted.
DEFAULT_BLOCKS = (
    ("input", "hidden"),
    ("hidden", "output"),
    ("output", "hidden"),
)


def block_key(src: str, tgt: str) -> str:
    return f"{src}->{tgt}"


@dataclass(frozen=True)
class NetworkParams:
    """Simulation constants shared by every neuron.

    Potentials are in mV, time constants and the Euler step in ms. ``p0``
    converts normalized pixel intensities into input-summation units, and
    ``beta`` sets how hard output neurons are pulled toward the target
    signal during the learning phase.
    """

    tau_v: float = 20.0
    tau_p: float = 10.0
    e_leak: float = -70.0
    e_syn: float = 0.0
    v_th: float = -54.0
    v_reset: float = -80.0
    r_m: float = 3.0
    p0: float = 0.4
    beta: float = 2.0
    p_min: float = 0.0
    p_max: float = 0.3
    dt: float = 1.0
    # "unit": a presynaptic spike bumps P by the synaptic weight itself;
    # "delta": by weight / tau_p (the strict reading of the impulse term).
    spike_jump: str = "unit"
    # External current drive, kept for completeness but zero by default.
    r_mem: float = 0.0
    i_ext: float = 0.0

    def __post_init__(self) -> None:
        if self.tau_v <= 0 or self.tau_p <= 0:
            raise ValueError("time constants must be positive")
        if self.v_reset >= self.v_th:
            raise ValueError("v_reset must lie below v_th")
        if self.p_min > self.p_max:
            raise ValueError("p_min must not exceed p_max")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.spike_jump not in ("unit", "delta"):
            raise ValueError(f"unknown spike_jump {self.spike_jump!r}")

    @property
    def spike_jump_scale(self) -> float:
        return 1.0 if self.spike_jump == "unit" else 1.0 / self.tau_p


@dataclass(frozen=True)
class Topology:
    """Layer sizes plus the directed connection blocks between them."""

    layer_sizes: tuple[int, int, int]
    blocks: tuple[tuple[str, str], ...] = DEFAULT_BLOCKS

    def __post_init__(self) -> None:
        if len(self.layer_sizes) != 3 or any(n <= 0 for n in self.layer_sizes):
            raise ValueError("layer_sizes must be three positive counts")
        for src, tgt in self.blocks:
            if src not in LAYER_NAMES or tgt not in LAYER_NAMES:
                raise ValueError(f"unknown layer in block {src}->{tgt}")
            if src == tgt:
                raise ValueError("self-connected blocks are not supported")

    @property
    def n_total(self) -> int:
        return sum(self.layer_sizes)

    def size(self, layer: str) -> int:
        return self.layer_sizes[LAYER_NAMES.index(layer)]

    def layer_slice(self, layer: str) -> slice:
        i = LAYER_NAMES.index(layer)
        start = sum(self.layer_sizes[:i])
        return slice(start, start + self.layer_sizes[i])

    def block_shape(self, src: str, tgt: str) -> tuple[int, int]:
        # Target-major: one row per postsynaptic neuron.
        return (self.size(tgt), self.size(src))
