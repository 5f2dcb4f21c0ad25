import numpy as np
import pytest

from spikewin import NetworkParams, SpikeRecord, Topology, WeightStore


@pytest.fixture
def small_topology():
    return Topology((6, 4, 3))


@pytest.fixture
def params():
    return NetworkParams()


@pytest.fixture
def small_weights(small_topology):
    return WeightStore.init_random(small_topology, seed=7)


def make_record(n_neurons, dt, spikes, lo_idx, hi_idx):
    """Build a SpikeRecord from {neuron: [grid indices]}."""
    record = SpikeRecord(n_neurons, dt)
    by_step: dict[int, list[int]] = {}
    for neuron, idxs in spikes.items():
        for idx in idxs:
            by_step.setdefault(int(idx), []).append(neuron)
    for idx in sorted(by_step):
        record.append(idx, np.asarray(sorted(by_step[idx]), dtype=np.intp))
    record.cover(lo_idx, hi_idx)
    return record
