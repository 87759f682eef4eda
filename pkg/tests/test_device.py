from fractions import Fraction

import numpy as np
import pytest

from qverify.benchmarks import demo_circuit
from qverify.circuits import (
    LayeredCircuit,
    choi_state,
    compose_unitary,
    identity_circuit,
    random_circuit,
)
from qverify.core import PauliBasis
from qverify.device import (
    Device,
    DeviceProfile,
    NoiseConfig,
    ShotRequest,
    TimeLedger,
    blank_request,
    device_time_for_learning,
)
from qverify.errors import InvalidRequest
from qverify.gates import builtin_gate, standard_gate_set
from qverify.circuits import Layer


def single_h_device(t=Fraction(1)):
    layer = Layer(((0,),), (builtin_gate("H"),))
    circuit = LayeredCircuit(1, (layer,))
    return Device(DeviceProfile(1, 1, t, circuit))


def demo_device(depth=3, noise=None, t=Fraction(1)):
    c = demo_circuit(depth)
    return Device(DeviceProfile(2, c.depth, t, c), noise), c


class TestExecuteShot:
    def test_h_layer_z_basis_is_unbiased(self):
        dev = single_h_device()
        rng = np.random.default_rng(0)
        outs = [dev.execute_shot(blank_request(1, PauliBasis(("Z",)), k=1), rng)[0] for _ in range(2000)]
        frac = sum(1 for o in outs if o.values[0] == 1) / len(outs)
        assert 0.44 < frac < 0.56

    def test_interrupt_at_zero_is_identity_run(self):
        dev = single_h_device()
        rng = np.random.default_rng(1)
        for _ in range(50):
            out, _ = dev.execute_shot(blank_request(1, PauliBasis(("Z",)), k=0), rng)
            assert out.values == (1,)

    def test_ledger_delta_counts_prefix_plus_hidden(self):
        dev, c = demo_device(3)  # six strict layers
        prefix = random_circuit(2, 2, standard_gate_set(), 5)
        req = ShotRequest(((), ()), prefix, 3, PauliBasis(("Z", "Z")))
        _, delta = dev.execute_shot(req, np.random.default_rng(2))
        assert delta == 5 * dev.t
        assert dev.ledger.total_time == 5

    def test_undo_layer_costs_one_unit(self):
        dev, _ = demo_device(1)
        undo = Layer(((0, 1),), (builtin_gate("CNOT"),))
        req = ShotRequest(((), ()), identity_circuit(2), 1, PauliBasis(("Z", "Z")), undo=undo)
        _, delta = dev.execute_shot(req, np.random.default_rng(3))
        assert delta == 2 * dev.t

    def test_request_validation(self):
        dev, _ = demo_device(1)
        with pytest.raises(InvalidRequest):
            dev.execute_shot(blank_request(2, PauliBasis(("Z", "Z")), k=99), 0)
        with pytest.raises(InvalidRequest):
            dev.execute_shot(blank_request(2, PauliBasis(("Z",)), k=0), 0)
        with pytest.raises(InvalidRequest):
            ShotRequest((("Q",), ()), identity_circuit(2), 0, PauliBasis(("Z", "Z")))
        with pytest.raises(InvalidRequest):
            ShotRequest((("H", "X"), ()), identity_circuit(2), 0, PauliBasis(("Z", "Z")))

    def test_seed_determinism(self):
        dev1, _ = demo_device(2)
        dev2, _ = demo_device(2)
        reqs = [blank_request(2, PauliBasis(("X", "Z")), k=2) for _ in range(64)]
        a = [o.values for o in dev1.execute_batch(reqs, np.random.default_rng(7))]
        b = [o.values for o in dev2.execute_batch(reqs, np.random.default_rng(7))]
        assert a == b


class TestBlackBox:
    def test_public_surface_hides_the_circuit(self):
        dev, _ = demo_device(1)
        public = [name for name in dir(dev) if not name.startswith("_")]
        assert "hidden_circuit" not in public
        assert all("hidden" not in name for name in public)
        assert {"n", "d", "t", "ledger", "execute_shot", "execute_batch"} <= set(public)


class TestDeviceTime:
    def test_small_cases(self):
        t = Fraction(1)
        assert device_time_for_learning(1, t, 1) == 1
        assert device_time_for_learning(3, t, 1) == 9
        assert device_time_for_learning(5, t, 100) == 2500

    def test_fractional_t_is_exact(self):
        t = Fraction(3, 7)
        assert device_time_for_learning(4, t, 10) == Fraction(480, 7)

    def test_ledger_merge(self):
        a = TimeLedger(Fraction(1))
        a.add_shots(3, 5)
        b = TimeLedger(Fraction(1))
        b.add_shots(2, 4)
        merged = a + b
        assert merged.layer_count == 3 * 5 + 2 * 4
        assert merged.per_shot_layers == {3: 5, 2: 4}
        with pytest.raises(InvalidRequest):
            a + TimeLedger(Fraction(2))


class TestOutcomeDistributions:
    def test_noiseless_outcomes_match_exact_distribution(self):
        dev, c = demo_device(1)
        shots = 100_000
        for axes in ("ZZ", "XY"):
            basis = PauliBasis.from_string(axes)
            req = blank_request(2, basis, k=2)
            exact = dev.exact_outcome_distribution(req)
            outs = dev.execute_batch([req] * shots, np.random.default_rng(11))
            freq = {}
            for o in outs:
                freq[o.values] = freq.get(o.values, 0) + 1 / shots
            tv = 0.5 * sum(abs(freq.get(key, 0.0) - p) for key, p in exact.items())
            assert tv < 0.02

    def test_exact_distribution_matches_composed_circuit(self):
        dev, c = demo_device(2)
        basis = PauliBasis.from_string("XZ")
        got = dev.exact_outcome_distribution(blank_request(2, basis, k=3))
        from qverify.core import StateVec, exact_pauli_distribution

        u = compose_unitary(c, 3)
        want = exact_pauli_distribution(StateVec(2, u[:, 0]), basis)
        for key, p in want.items():
            assert abs(got[key] - p) < 1e-12

    def test_ideal_choi_state_composes_prefix(self):
        dev, c = demo_device(1)
        prefix = LayeredCircuit(2, (c.layers[0],)).inverse()
        omega = dev.ideal_choi_state(prefix, 2)
        expect = choi_state(compose_unitary(c, 2) @ compose_unitary(prefix), 2)
        assert np.allclose(omega.amplitudes, expect.amplitudes)


class TestNoise:
    def test_depolarizing_changes_statistics(self):
        clean, c = demo_device(1)
        noisy = Device(DeviceProfile(2, c.depth, Fraction(1), c), NoiseConfig(depolarizing_p=0.4))
        req = blank_request(2, PauliBasis(("Z", "Z")), k=2)
        rng = np.random.default_rng(13)
        shots = 6000
        # layer outputs a Bell state: ZZ parity is +1 without noise
        outs = noisy.execute_batch([req] * shots, rng)
        mismatched = sum(1 for o in outs if o.values[0] != o.values[1]) / shots
        assert mismatched > 0.1

    def test_noise_config_validation(self):
        with pytest.raises(InvalidRequest):
            NoiseConfig(depolarizing_p=1.5)
        with pytest.raises(InvalidRequest):
            NoiseConfig(rdm_gamma=9)

    def test_reconstruction_degrades_monotonically(self):
        """Median reconstruction fidelity over seeds is non-increasing in p."""
        from qverify.reconstruction import learn_multi
        from qverify.gates import standard_gate_set

        c = demo_circuit(1)
        true_u = compose_unitary(c)
        gs = standard_gate_set()
        medians = []
        estimate_scores = []
        for p in (0.0, 0.001, 0.01, 0.05):
            fids = []
            dists = []
            for seed in range(10):
                dev = Device(
                    DeviceProfile(2, c.depth, Fraction(1), c),
                    NoiseConfig(depolarizing_p=p),
                )
                rng = np.random.default_rng(500 + seed)
                rep = learn_multi(dev, shots=1024, gs=gs, eps=0.22, rng=rng, mode="hardware")
                rec_u = compose_unitary(rep.circuit)
                fids.append(abs(np.trace(true_u.conj().T @ rec_u) / 4) ** 2)
                dists.append(np.mean([r.distances["0"] + r.distances["1"] for r in rep.per_layer]) / 2)
            medians.append(float(np.median(fids)))
            estimate_scores.append(float(np.median(dists)))
        for lo, hi in zip(medians[1:], medians[:-1]):
            assert lo <= hi + 1e-9
        # the tomographic estimates themselves must be visibly worse at p=0.05
        assert estimate_scores[-1] > estimate_scores[0] + 0.01
