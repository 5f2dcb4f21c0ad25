import math

import numpy as np
import pytest

from spikewin import (
    NetworkParams,
    PhaseKind,
    SimulationDivergedError,
    SpikeRecord,
    Topology,
    WeightStore,
    init_state,
    predict,
    run_phase,
    step,
)

from conftest import make_record


def zero_weights(topology):
    return WeightStore.init_random(topology, seed=0, w_init_max=0.0)


class TestInitState:
    def test_resting_values(self):
        topo = Topology((784, 200, 10))
        state = init_state(topo, NetworkParams())
        assert state.v.shape == (994,)
        assert np.all(state.v == -70.0)
        assert np.all(state.p == 0.0)

    def test_deterministic(self):
        topo = Topology((5, 4, 3))
        params = NetworkParams()
        a, b = init_state(topo, params), init_state(topo, params)
        np.testing.assert_array_equal(a.v, b.v)
        np.testing.assert_array_equal(a.p, b.p)

    def test_phase_jitter_reproducible_and_bounded(self):
        topo = Topology((5, 4, 3))
        params = NetworkParams()
        a = init_state(topo, params, np.random.default_rng(3))
        b = init_state(topo, params, np.random.default_rng(3))
        np.testing.assert_array_equal(a.v, b.v)
        assert np.all((a.v >= params.v_reset) & (a.v < params.v_th))


class TestStep:
    def test_threshold_fires_and_resets(self, small_topology, params, small_weights):
        # Still at or above v_th after the Euler update -> spike and reset.
        state = init_state(small_topology, params)
        state.v[3] = -50.0
        fired = step(state, small_weights, params, small_topology, np.zeros(6))
        assert 3 in fired
        assert state.v[3] == -80.0

    def test_threshold_is_inclusive(self, small_topology, small_weights):
        # Replicate the update arithmetic so the landing value is bit-exact,
        # then set v_th to exactly that value: the comparison is >=.
        v0 = np.float64(-50.0)
        landing = v0 + (1.0 / 20.0) * (np.float64(-70.0) - v0)
        params = NetworkParams(v_th=float(landing))
        state = init_state(small_topology, params)
        state.v[3] = v0
        fired = step(state, small_weights, params, small_topology, np.zeros(6))
        assert 3 in fired
        assert state.v[3] == -80.0

    def test_spike_jump_unit_convention(self):
        topo = Topology((1, 1, 1))
        w = zero_weights(topo)
        w.blocks["input->hidden"][0, 0] = 0.04
        params = NetworkParams()
        state = init_state(topo, params)
        step(state, w, params, topo, np.zeros(1), fired_prev=np.array([0]))
        assert state.p[1] == pytest.approx(0.04, abs=1e-15)

    def test_spike_jump_delta_convention(self):
        topo = Topology((1, 1, 1))
        w = zero_weights(topo)
        w.blocks["input->hidden"][0, 0] = 0.04
        params = NetworkParams(spike_jump="delta")
        state = init_state(topo, params)
        step(state, w, params, topo, np.zeros(1), fired_prev=np.array([0]))
        assert state.p[1] == pytest.approx(0.004, abs=1e-15)

    def test_input_clamp_overrides_decay(self, params):
        topo = Topology((2, 1, 1))
        state = init_state(topo, params)
        v_x = np.array([0.25, 1.0])
        for _ in range(7):
            step(state, zero_weights(topo), params, topo, v_x)
        np.testing.assert_allclose(state.p[:2], params.p0 * v_x, atol=1e-15)

    def test_learning_nudge_moves_output_toward_target(self, params):
        topo = Topology((1, 1, 2))
        state = init_state(topo, params)
        v_y = np.array([1.0, 0.0])
        state.p[2:] = 0.1
        step(state, zero_weights(topo), params, topo, np.zeros(1),
             v_y=v_y, phase=PhaseKind.LEARNING)
        coef = params.dt / params.tau_p
        decayed = 0.1 - coef * 0.1
        want_hi = decayed + coef * params.beta * (params.p0 - decayed)
        want_lo = decayed + coef * params.beta * (0.0 - decayed)
        assert state.p[2] == pytest.approx(want_hi, abs=1e-15)
        assert state.p[3] == pytest.approx(want_lo, abs=1e-15)

    def test_learning_requires_target(self, small_topology, params, small_weights):
        state = init_state(small_topology, params)
        with pytest.raises(ValueError):
            step(state, small_weights, params, small_topology, np.zeros(6),
                 phase=PhaseKind.LEARNING)

    def test_divergence_detected(self, small_topology, params, small_weights):
        state = init_state(small_topology, params)
        state.v[2] = np.nan
        with pytest.raises(SimulationDivergedError, match="neuron 2"):
            step(state, small_weights, params, small_topology, np.zeros(6))


class TestDecayAccuracy:
    def run_decay(self, dt, t_total=100.0, v0=-60.0):
        topo = Topology((1, 1, 1))
        params = NetworkParams(dt=dt)
        w = zero_weights(topo)
        state = init_state(topo, params)
        state.v[:] = v0
        worst = 0.0
        for k in range(int(round(t_total / dt))):
            step(state, w, params, topo, np.zeros(1))
            t = (k + 1) * dt
            exact = -70.0 + (v0 + 70.0) * math.exp(-t / 20.0)
            worst = max(worst, abs(state.v[1] - exact))
        return worst

    def test_twenty_ms_point(self):
        topo = Topology((1, 1, 1))
        params = NetworkParams(dt=0.01)
        state = init_state(topo, params)
        state.v[:] = -60.0
        w = zero_weights(topo)
        for _ in range(2000):
            step(state, w, params, topo, np.zeros(1))
        assert abs(state.v[1] - (-70.0 + 10.0 * math.exp(-1.0))) < 0.01

    def test_first_order_error_scaling(self):
        err_fine = self.run_decay(0.01)
        err_coarse = self.run_decay(0.1)
        assert err_fine < 0.01
        assert 8.0 < err_coarse / err_fine < 12.0


class TestSteadyState:
    def test_subthreshold_drive_never_fires(self):
        # r_m * P = 0.29 keeps the fixed point e_leak / (1 + r_m P) below v_th.
        params = NetworkParams(r_m=2.9, p0=0.1)
        topo = Topology((1, 1, 1))
        state = init_state(topo, params)
        w = zero_weights(topo)
        _, record = run_phase(state, w, params, topo, np.ones(1), None,
                              PhaseKind.INFERENCE, 2000.0)
        assert record.counts(-np.inf, 0.0)[0] == 0
        assert state.v[0] == pytest.approx(-70.0 / 1.29, abs=1e-3)

    def test_suprathreshold_drive_fires(self):
        params = NetworkParams(r_m=3.2, p0=0.1)
        topo = Topology((1, 1, 1))
        state = init_state(topo, params)
        w = zero_weights(topo)
        _, record = run_phase(state, w, params, topo, np.ones(1), None,
                              PhaseKind.INFERENCE, 2000.0)
        assert record.counts(-np.inf, 0.0)[0] > 10


class TestInvariants:
    def test_clamp_and_reset_invariants(self, params):
        topo = Topology((10, 6, 4))
        rng = np.random.default_rng(11)
        w = WeightStore.init_random(topo, seed=3, w_init_max=0.2)
        state = init_state(topo, params, np.random.default_rng(1))
        v_x = rng.uniform(0, 1, 10)
        n_in = 10
        for _ in range(300):
            step(state, w, params, topo, v_x)
            rest = state.p[n_in:]
            assert rest.min() >= params.p_min and rest.max() <= params.p_max
            np.testing.assert_allclose(state.p[:n_in], params.p0 * v_x, atol=1e-15)
            assert state.v.max() < params.v_th

    def test_monotone_drive_subthreshold(self):
        # Larger clamped P depolarizes more at every step while below threshold.
        params = NetworkParams(r_m=2.0, p0=0.1)
        topo = Topology((3, 1, 1))
        w = zero_weights(topo)
        state = init_state(topo, params)
        v_x = np.array([0.2, 0.5, 0.9])
        for _ in range(500):
            step(state, w, params, topo, v_x)
            assert state.v[0] <= state.v[1] <= state.v[2]

    def test_spike_count_nondecreasing_in_drive(self, params):
        topo = Topology((4, 1, 1))
        w = zero_weights(topo)
        state = init_state(topo, params)
        v_x = np.array([0.2, 0.45, 0.7, 1.0])
        _, record = run_phase(state, w, params, topo, v_x, None,
                              PhaseKind.INFERENCE, 1000.0)
        counts = record.counts(-np.inf, 0.0)[:4]
        assert np.all(np.diff(counts) >= 0)

    def test_zero_input_never_fires(self, params):
        topo = Topology((2, 1, 1))
        state = init_state(topo, params)
        _, record = run_phase(state, zero_weights(topo), params, topo,
                              np.zeros(2), None, PhaseKind.INFERENCE, 500.0)
        assert not record.events
        np.testing.assert_allclose(state.v, params.e_leak, atol=1e-6)


class TestRunPhase:
    def test_single_quiet_step_yields_empty_fragment(self, small_topology, params, small_weights):
        state = init_state(small_topology, params)
        _, record = run_phase(state, small_weights, params, small_topology,
                              np.zeros(6), None, PhaseKind.INFERENCE, params.dt)
        assert record.events == []
        assert record.extent == (-1, -1)

    def test_grid_mapping_by_phase(self, params):
        topo = Topology((1, 1, 1))
        state = init_state(topo, params)
        state.v[0] = 1000.0  # fires on the first step
        w = zero_weights(topo)
        _, rec = run_phase(state, w, params, topo, np.zeros(1), None,
                           PhaseKind.INFERENCE, 10.0)
        assert rec.events[0][0] == -10
        state = init_state(topo, params)
        state.v[0] = 1000.0
        _, rec = run_phase(state, w, params, topo, np.zeros(1),
                           np.zeros(1), PhaseKind.LEARNING, 10.0)
        assert rec.events[0][0] == 0

    def test_duration_validation(self, small_topology, params, small_weights):
        state = init_state(small_topology, params)
        for bad in (0.0, -5.0, 2.5 * params.dt):
            with pytest.raises(ValueError):
                run_phase(state, small_weights, params, small_topology,
                          np.zeros(6), None, PhaseKind.INFERENCE, bad)

    def test_input_validation(self, small_topology, params, small_weights):
        state = init_state(small_topology, params)
        with pytest.raises(ValueError):
            run_phase(state, small_weights, params, small_topology,
                      np.full(6, 1.5), None, PhaseKind.INFERENCE, 10.0)
        with pytest.raises(ValueError):
            run_phase(state, small_weights, params, small_topology,
                      np.zeros(3), None, PhaseKind.INFERENCE, 10.0)

    def test_determinism_bit_identical(self, params):
        topo = Topology((8, 5, 3))
        w = WeightStore.init_random(topo, seed=5, w_init_max=0.03)
        v_x = np.random.default_rng(2).uniform(0, 1, 8)

        def run():
            state = init_state(topo, params, np.random.default_rng(9))
            _, rec = run_phase(state, w, params, topo, v_x, None,
                               PhaseKind.INFERENCE, 400.0)
            return [(idx, fired.tolist()) for idx, fired in rec.events]

        assert run() == run()

    def test_phase_equivalence_with_zero_beta(self):
        # With beta = 0 the learning-phase dynamics equal inference dynamics.
        params = NetworkParams(beta=0.0)
        topo = Topology((8, 5, 3))
        w = WeightStore.init_random(topo, seed=6, w_init_max=0.03)
        v_x = np.random.default_rng(4).uniform(0, 1, 8)
        state_a = init_state(topo, params, np.random.default_rng(1))
        _, rec_a = run_phase(state_a, w, params, topo, v_x, None,
                             PhaseKind.INFERENCE, 200.0)
        state_b = init_state(topo, params, np.random.default_rng(1))
        _, rec_b = run_phase(state_b, w, params, topo, v_x, np.ones(3),
                             PhaseKind.LEARNING, 200.0)
        shifted = [(idx + 200, fired.tolist()) for idx, fired in rec_a.events]
        assert shifted == [(idx, fired.tolist()) for idx, fired in rec_b.events]

    def test_spikes_propagate_across_phase_boundary(self, params):
        # A spike on the last inference step drives P on the first learning step.
        topo = Topology((1, 1, 1))
        w = zero_weights(topo)
        w.blocks["input->hidden"][0, 0] = 0.05
        state = init_state(topo, params)
        state.v[0] = 1000.0  # guaranteed to fire immediately
        run_phase(state, w, params, topo, np.zeros(1), None,
                  PhaseKind.INFERENCE, params.dt)
        assert state.last_fired.tolist() == [0]
        run_phase(state, w, params, topo, np.zeros(1), np.zeros(1),
                  PhaseKind.LEARNING, params.dt)
        assert state.p[1] == pytest.approx(0.05, abs=1e-15)


class TestSpikeRecord:
    def test_times_and_split(self):
        rec = make_record(3, 0.5, {0: [-4, -1, 2], 1: [3]}, -10, 9)
        np.testing.assert_allclose(rec.times(0), [-2.0, -0.5, 1.0])
        assert rec.split_index(0) == 2
        assert rec.split_index(1) == 0

    def test_counts_window(self):
        rec = make_record(2, 1.0, {0: [-5, -1, 0, 3], 1: [-2]}, -10, 9)
        np.testing.assert_array_equal(rec.counts(-np.inf, 0.0), [2, 1])
        np.testing.assert_array_equal(rec.counts(0.0, 10.0), [2, 0])

    def test_binned(self):
        rec = make_record(2, 1.0, {0: [-1, 1], 1: [0]}, -2, 2)
        got = rec.binned(-1, 1)
        np.testing.assert_array_equal(got, [[1, 0, 1], [0, 1, 0]])

    def test_strictly_increasing_times(self):
        rec = make_record(2, 1.0, {0: [-3, -1, 4], 1: [0, 2]}, -5, 5)
        for neuron in range(2):
            t = rec.times(neuron)
            assert np.all(np.diff(t) >= 1.0)


class TestPredict:
    topo = Topology((1, 1, 10))

    def record_with_output_counts(self, counts):
        spikes = {}
        for local, n in enumerate(counts):
            spikes[2 + local] = list(range(-n, 0))
        return make_record(12, 1.0, spikes, -300, -1)

    def test_figure_scenario(self):
        rec = self.record_with_output_counts([0, 0, 0, 0, 0, 0, 0, 0, 7, 0])
        assert predict(rec, self.topo) == 8

    def test_all_silent_ties_to_zero(self):
        rec = self.record_with_output_counts([0] * 10)
        assert predict(rec, self.topo) == 0

    def test_strict_argmax(self):
        rec = self.record_with_output_counts([3, 5, 3, 0, 0, 0, 0, 0, 0, 0])
        assert predict(rec, self.topo) == 1

    def test_learning_spikes_ignored(self):
        rec = self.record_with_output_counts([2, 0, 0, 0, 0, 0, 0, 0, 0, 0])
        rec.cover(-300, 100)
        for idx in range(0, 50):
            rec.append(idx, np.array([5]))  # output neuron 3, learning phase
        assert predict(rec, self.topo) == 0
