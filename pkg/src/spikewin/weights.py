"""Directed synaptic weights per connection block, plus text persistence.

Blocks are stored target-major: ``blocks["input->hidden"][i, j]`` is the
weight of the synapse from input neuron j onto hidden neuron i. The two
directions between hidden and output are independent matrices.

File format (version 1): a single header line

    spikewin-weights v1 layers=784,200,10 blocks=input->hidden;... [k=v ...]

followed by one line per block holding the row-major weights as decimal
literals. Values are written with shortest round-trip repr, so a load
after save reproduces every float64 bit-exactly.
"""
from __future__ import annotations

import numpy as np

from .params import Topology, block_key

FORMAT_MAGIC = "spikewin-weights"
FORMAT_VERSION = "v1"


class WeightStore:
    """Dense per-block weight matrices keyed by "src->tgt"."""

    def __init__(self, topology: Topology, blocks: dict[str, np.ndarray]):
        for src, tgt in topology.blocks:
            key = block_key(src, tgt)
            if key not in blocks:
                raise ValueError(f"missing weight block {key}")
            want = topology.block_shape(src, tgt)
            if blocks[key].shape != want:
                raise ValueError(f"block {key} has shape {blocks[key].shape}, expected {want}")
        self.topology = topology
        self.blocks = {k: np.asarray(m, dtype=np.float64) for k, m in blocks.items()}
        self._src_major: dict[str, np.ndarray] = {}

    # Initial weight ceilings per block, calibrated so that every layer
    # fires at moderate rates before training: strong enough to spike,
    # far from the input-summation clamp. The feedback block stays small
    # so nudged output activity cannot blow up the hidden layer.
    DEFAULT_INIT_MAX = {
        "input->hidden": 5e-3,
        "hidden->output": 4e-3,
        "output->hidden": 2e-3,
    }

    @classmethod
    def init_random(
        cls,
        topology: Topology,
        seed: int,
        w_init_max: float | None = None,
        w_init_scale: float = 1.0,
    ) -> "WeightStore":
        """Uniform random weights in [0, w_max) per block.

        ``w_max`` is ``w_init_scale`` times the block's calibrated default
        ceiling, or a flat ``w_init_max`` for every block when given.
        """
        rng = np.random.default_rng(seed)
        blocks = {}
        for src, tgt in topology.blocks:
            key = block_key(src, tgt)
            shape = topology.block_shape(src, tgt)
            w_max = w_init_max if w_init_max is not None else (
                w_init_scale * cls.DEFAULT_INIT_MAX.get(key, 5e-3)
            )
            blocks[key] = rng.uniform(0.0, w_max, size=shape)
        return cls(topology, blocks)

    def src_major(self, src: str, tgt: str) -> np.ndarray:
        """Cached (n_src, n_tgt) transpose for fast row gathering.

        Blocks are treated as read-only once built; mutate via copy() and a
        new store instead of writing through this view.
        """
        key = block_key(src, tgt)
        cached = self._src_major.get(key)
        if cached is None:
            cached = np.ascontiguousarray(self.blocks[key].T)
            self._src_major[key] = cached
        return cached

    def copy(self) -> "WeightStore":
        return WeightStore(self.topology, {k: m.copy() for k, m in self.blocks.items()})

    def equals(self, other: "WeightStore") -> bool:
        return all(np.array_equal(self.blocks[k], other.blocks[k]) for k in self.blocks)

    def save(self, path, meta: dict[str, str] | None = None) -> None:
        topo = self.topology
        tokens = [
            FORMAT_MAGIC,
            FORMAT_VERSION,
            "layers=" + ",".join(str(n) for n in topo.layer_sizes),
            "blocks=" + ";".join(block_key(s, t) for s, t in topo.blocks),
        ]
        for k in sorted(meta or {}):
            val = str((meta or {})[k])
            if " " in k or " " in val:
                raise ValueError("metadata keys and values must not contain spaces")
            tokens.append(f"{k}={val}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(" ".join(tokens) + "\n")
            for src, tgt in topo.blocks:
                m = self.blocks[block_key(src, tgt)]
                fh.write(" ".join(map(repr, m.ravel().tolist())) + "\n")

    @classmethod
    def load(cls, path) -> tuple["WeightStore", dict[str, str]]:
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().split()
            if header[:2] != [FORMAT_MAGIC, FORMAT_VERSION]:
                raise ValueError(f"{path}: not a {FORMAT_MAGIC} {FORMAT_VERSION} file")
            meta: dict[str, str] = {}
            for token in header[2:]:
                k, _, v = token.partition("=")
                meta[k] = v
            try:
                layer_sizes = tuple(int(n) for n in meta.pop("layers").split(","))
                raw_blocks = meta.pop("blocks").split(";")
            except KeyError as err:
                raise ValueError(f"{path}: header is missing {err}") from None
            block_pairs = []
            for raw in raw_blocks:
                src, sep, tgt = raw.partition("->")
                if not sep:
                    raise ValueError(f"{path}: malformed block name {raw!r}")
                block_pairs.append((src, tgt))
            topology = Topology(layer_sizes, tuple(block_pairs))

            blocks = {}
            for src, tgt in topology.blocks:
                shape = topology.block_shape(src, tgt)
                line = fh.readline()
                if not line:
                    raise ValueError(f"{path}: truncated before block {block_key(src, tgt)}")
                values = np.array(line.split(), dtype=np.float64)
                if values.size != shape[0] * shape[1]:
                    raise ValueError(
                        f"{path}: block {block_key(src, tgt)} holds {values.size} "
                        f"values, expected {shape[0] * shape[1]}"
                    )
                blocks[block_key(src, tgt)] = values.reshape(shape)
        return cls(topology, blocks), meta
