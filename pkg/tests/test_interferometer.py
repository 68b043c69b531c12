import numpy as np
import pytest

from aqm.interferometer import (
    AFTER_M1,
    DETECTOR_A,
    DETECTOR_B,
    Always,
    ChoicePolicy,
    DelayedAlternating,
    DelayedRandom,
    DeviceConfig,
    PhotonEvent,
    equivalence_report,
    particle_run,
    run_events,
    summarize_events,
    wave_probabilities,
    write_events_csv,
)
from aqm.rng import event_stream


class TestDeviceConfig:
    def test_default_is_unitary(self):
        DeviceConfig(m4_present=True)

    def test_rejects_non_unitary_ratio(self):
        with pytest.raises(ValueError):
            DeviceConfig(m4_present=True, transmit=0.9, reflect=0.9)

    def test_general_ratio_accepted(self):
        theta = 0.3
        DeviceConfig(m4_present=False, transmit=np.cos(theta), reflect=1j * np.sin(theta))


class TestWaveProbabilities:
    def test_mirror_absent_splits_evenly(self):
        p_da, p_db = wave_probabilities(DeviceConfig(m4_present=False))
        assert p_da == pytest.approx(0.5, abs=1e-12)
        assert p_db == pytest.approx(0.5, abs=1e-12)

    def test_mirror_present_is_dark_at_da(self):
        p_da, p_db = wave_probabilities(DeviceConfig(m4_present=True))
        assert p_da == pytest.approx(0.0, abs=1e-12)
        assert p_db == pytest.approx(1.0, abs=1e-12)

    def test_pi_phase_on_path_a_flips_the_fringe(self):
        # oracle: redo the amplitude sum by hand; the extra pi phase turns
        # the constructive port destructive and vice versa
        p_da, p_db = wave_probabilities(DeviceConfig(m4_present=True), phase_a=np.pi)
        assert p_da == pytest.approx(1.0, abs=1e-12)
        assert p_db == pytest.approx(0.0, abs=1e-12)

    def test_unitarity_for_random_ratios(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            theta = rng.uniform(0, np.pi / 2)
            cfg = DeviceConfig(
                m4_present=bool(rng.integers(2)),
                transmit=np.cos(theta),
                reflect=1j * np.sin(theta),
            )
            phase = rng.uniform(0, 2 * np.pi)
            p_da, p_db = wave_probabilities(cfg, phase_a=phase)
            assert p_da + p_db == pytest.approx(1.0, abs=1e-12)


class TestParticleRun:
    def test_mirror_absent_frequency(self):
        events = run_events(Always(False), 100_000, seed=1)
        freq = sum(e.detector == DETECTOR_A for e in events) / len(events)
        assert abs(freq - 0.5) <= 0.005

    def test_mirror_present_always_db(self):
        events = run_events(Always(True), 20_000, seed=2)
        assert all(e.detector == DETECTOR_B for e in events)

    def test_kernel_locality_when_absent(self):
        for e in run_events(Always(False), 5000, seed=3):
            expect = DETECTOR_A if e.kernel_path == "A" else DETECTOR_B
            assert e.detector == expect

    def test_delayed_random_sub_ensembles(self):
        events = run_events(DelayedRandom(0.5, seed=4), 100_000, seed=4)
        present = [e for e in events if e.m4_at_arrival]
        absent = [e for e in events if not e.m4_at_arrival]
        assert all(e.detector == DETECTOR_B for e in present)
        freq = sum(e.detector == DETECTOR_A for e in absent) / len(absent)
        assert abs(freq - 0.5) <= 0.008

    def test_batch_matches_single_event_runs(self):
        policy = DelayedRandom(0.5, seed=9)
        batch = run_events(policy, 200, seed=9)
        for i in range(200):
            single = particle_run(policy, i, event_stream(9, i), seed=9)
            assert single == batch[i]


class TestDelayedChoiceIndifference:
    def test_policies_agreeing_after_m1_replay_identically(self):
        class EarlyDecider(ChoicePolicy):
            # announces the opposite before the photon passes M1, then
            # settles on "present" in flight
            def decide(self, event_index, phase):
                return phase == AFTER_M1

            def decide_batch(self, n):
                return np.full(n, True)

        a = run_events(Always(True), 10_000, seed=6)
        b = run_events(EarlyDecider(), 10_000, seed=6)
        assert a == b

    def test_alternating_policy_partitions_exactly(self):
        events = run_events(DelayedAlternating(), 1000, seed=7)
        for e in events:
            assert e.m4_at_arrival == (e.index % 2 == 1)


class TestEquivalenceReport:
    def test_always_present_is_exact(self):
        report = equivalence_report(Always(True), 10_000, seed=8)
        assert report.max_deviation <= 1e-12
        assert report.passed

    def test_always_absent_within_binomial_bound(self):
        report = equivalence_report(Always(False), 100_000, seed=9)
        assert report.max_deviation <= 0.0063
        assert report.passed

    def test_leaky_particle_model_fails(self):
        # adversarial model: kernel path leaks into the mirror-present
        # outcome, so the D_B port is no longer certain
        events = [
            PhotonEvent(
                index=i,
                kernel_path="A" if i % 2 else "B",
                m4_at_arrival=True,
                detector=DETECTOR_A if i % 2 else DETECTOR_B,
                seed=0,
            )
            for i in range(10_000)
        ]
        report = summarize_events(events)
        assert not report.passed

    def test_rejects_tiny_runs(self):
        with pytest.raises(ValueError):
            equivalence_report(Always(True), 10, seed=0)


def test_events_csv(tmp_path):
    events = run_events(DelayedAlternating(), 4, seed=3)
    path = tmp_path / "events.csv"
    write_events_csv(events, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "event,seed,kernel_path,m4,detector"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "3" and first[3] == "0"
