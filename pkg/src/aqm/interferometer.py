"""Delayed-choice Mach-Zehnder interferometer.

Two interchangeable models of the same device.  The wave model propagates
a unit amplitude through the mirror network: reflection at any mirror
advances the phase by pi/2 (a factor i), transmission leaves it
unchanged.  The particle model localizes the photon kernel on one path at
the first half-silvered mirror; when the output mirror is present the
detector is resampled from the wave distribution independently of the
kernel's path (the dark-field steering rule), and when it is absent the
kernel's geometric path fixes the detector.  The output mirror may be
inserted or removed after the photon has passed the first mirror; only
the configuration at arrival matters.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from aqm.rng import LANE_POLICY, event_stream, event_uniforms

BEFORE_M1 = "before-m1"
AFTER_M1 = "after-m1"

DETECTOR_A = "DA"
DETECTOR_B = "DB"


@dataclass(frozen=True)
class DeviceConfig:
    """Output-mirror presence and the half-silvered amplitude ratio."""

    m4_present: bool
    transmit: complex = 1 / np.sqrt(2)
    reflect: complex = 1j / np.sqrt(2)

    def __post_init__(self):
        m = self.splitter
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > 1e-12:
            raise ValueError("splitter amplitudes are not unitary")

    @property
    def splitter(self) -> np.ndarray:
        t, r = complex(self.transmit), complex(self.reflect)
        return np.array([[t, r], [r, t]])


def wave_probabilities(config: DeviceConfig, phase_a: float = 0.0):
    """Detector probabilities of the wave model.

    `phase_a` is a test knob adding an extra phase on path A between the
    mirrors.  With the default 50/50 ratio: mirror absent -> (0.5, 0.5),
    mirror present -> (0, 1).
    """
    amp = config.splitter @ np.array([1.0, 0.0])  # (path A, path B) after M1
    amp = 1j * amp  # full mirrors M2, M3: one reflection on each path
    amp[0] *= np.exp(1j * phase_a)
    if config.m4_present:
        amp = config.splitter @ amp
    p = np.abs(amp) ** 2
    return float(p[0]), float(p[1])


@lru_cache(maxsize=None)
def _steering_prob(transmit: complex, reflect: complex) -> float:
    """Detector-B probability of the wave model with the mirror present."""
    return wave_probabilities(DeviceConfig(True, transmit, reflect))[1]


class ChoicePolicy:
    """Rule fixing output-mirror presence per event and phase of flight."""

    def decide(self, event_index: int, phase: str) -> bool:
        raise NotImplementedError

    def decide_batch(self, n: int) -> np.ndarray:
        """Vectorized after-M1 decisions for events 0..n-1."""
        return np.array([self.decide(i, AFTER_M1) for i in range(n)], dtype=bool)


@dataclass(frozen=True)
class Always(ChoicePolicy):
    """Mirror fixed present or absent for every event."""

    present: bool

    def decide(self, event_index: int, phase: str) -> bool:
        return self.present

    def decide_batch(self, n: int) -> np.ndarray:
        return np.full(n, self.present, dtype=bool)


@dataclass(frozen=True)
class DelayedRandom(ChoicePolicy):
    """Insert the mirror with probability p, decided per event in flight.

    Decisions come from a dedicated counter stream, so they are
    reproducible and do not disturb the photon's own randomness.
    """

    p: float = 0.5
    seed: int = 0

    def decide(self, event_index: int, phase: str) -> bool:
        u = event_stream(self.seed, event_index, lane=LANE_POLICY).random()
        return bool(u < self.p)

    def decide_batch(self, n: int) -> np.ndarray:
        return event_uniforms(self.seed, n, lane=LANE_POLICY)[:, 0] < self.p


@dataclass(frozen=True)
class DelayedAlternating(ChoicePolicy):
    """Mirror present on odd events, absent on even ones, decided in flight."""

    def decide(self, event_index: int, phase: str) -> bool:
        return event_index % 2 == 1

    def decide_batch(self, n: int) -> np.ndarray:
        return np.arange(n) % 2 == 1


@dataclass(frozen=True)
class PhotonEvent:
    index: int
    kernel_path: str  # "A" or "B"
    m4_at_arrival: bool
    detector: str  # DETECTOR_A or DETECTOR_B
    seed: int


def particle_run(
    policy: ChoicePolicy,
    event_index: int,
    rng: np.random.Generator,
    config: DeviceConfig | None = None,
    seed: int = 0,
) -> PhotonEvent:
    """One photon through the particle model.

    The kernel picks a path at M1 with the splitter's intensity ratio.
    The policy is consulted only after the photon has passed M1; nothing
    decided earlier can influence the outcome.  With the mirror present
    the detector is drawn from the wave distribution regardless of the
    kernel's path; with it absent, path A lands on detector A and path B
    on detector B.
    """
    base = config or DeviceConfig(m4_present=False)
    kernel_path = "A" if rng.random() < abs(base.transmit) ** 2 else "B"
    m4 = bool(policy.decide(event_index, AFTER_M1))
    if m4:
        p_db = _steering_prob(complex(base.transmit), complex(base.reflect))
        detector = DETECTOR_B if rng.random() < p_db else DETECTOR_A
    else:
        detector = DETECTOR_A if kernel_path == "A" else DETECTOR_B
    return PhotonEvent(
        index=event_index,
        kernel_path=kernel_path,
        m4_at_arrival=m4,
        detector=detector,
        seed=seed,
    )


def run_events(
    policy: ChoicePolicy,
    n: int,
    seed: int,
    config: DeviceConfig | None = None,
) -> list:
    """n independent photons, one counter-addressed stream per event.

    Vectorized over events; bit-identical to calling particle_run with
    event_stream(seed, i) for each event in turn.
    """
    base = config or DeviceConfig(m4_present=False)
    u = event_uniforms(seed, n)
    paths = np.where(u[:, 0] < abs(base.transmit) ** 2, "A", "B")
    m4 = policy.decide_batch(n)
    p_db = _steering_prob(complex(base.transmit), complex(base.reflect))
    steered = np.where(u[:, 1] < p_db, DETECTOR_B, DETECTOR_A)
    geometric = np.where(paths == "A", DETECTOR_A, DETECTOR_B)
    detectors = np.where(m4, steered, geometric)
    return [
        PhotonEvent(
            index=i,
            kernel_path=str(paths[i]),
            m4_at_arrival=bool(m4[i]),
            detector=str(detectors[i]),
            seed=seed,
        )
        for i in range(n)
    ]


@dataclass(frozen=True)
class SubEnsembleStats:
    m4_present: bool
    n_events: int
    freq_da: float
    freq_db: float
    expected_da: float
    expected_db: float
    deviation: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class EquivalenceReport:
    sub_ensembles: tuple
    max_deviation: float
    passed: bool


def summarize_events(events, config: DeviceConfig | None = None) -> EquivalenceReport:
    """Compare particle-model detector frequencies against the wave model.

    Per mirror sub-ensemble: deviation of the empirical detector
    frequencies from the wave probabilities, passed at a 4-sigma binomial
    tolerance (exact agreement required for deterministic outcomes).
    """
    base = config or DeviceConfig(m4_present=False)
    stats = []
    for m4 in (False, True):
        sub = [e for e in events if e.m4_at_arrival == m4]
        if not sub:
            continue
        cfg = DeviceConfig(m4, base.transmit, base.reflect)
        p_da, p_db = wave_probabilities(cfg)
        n = len(sub)
        f_da = sum(e.detector == DETECTOR_A for e in sub) / n
        f_db = 1.0 - f_da
        dev = max(abs(f_da - p_da), abs(f_db - p_db))
        # floor covers float noise in the wave probabilities when the
        # outcome is deterministic (binomial tolerance would be zero)
        tol = max(4.0 * np.sqrt(p_da * p_db / n), 1e-12)
        stats.append(
            SubEnsembleStats(
                m4_present=m4,
                n_events=n,
                freq_da=f_da,
                freq_db=f_db,
                expected_da=p_da,
                expected_db=p_db,
                deviation=float(dev),
                tolerance=float(tol),
                passed=bool(dev <= tol),
            )
        )
    max_dev = max((s.deviation for s in stats), default=0.0)
    return EquivalenceReport(
        sub_ensembles=tuple(stats),
        max_deviation=max_dev,
        passed=all(s.passed for s in stats),
    )


def equivalence_report(
    policy: ChoicePolicy,
    n: int,
    seed: int,
    config: DeviceConfig | None = None,
) -> EquivalenceReport:
    """Run n photons under the policy and compare against the wave model."""
    if n < 1000:
        raise ValueError("need at least 1000 events for a meaningful comparison")
    return summarize_events(run_events(policy, n, seed, config=config), config=config)


def write_events_csv(events, path) -> None:
    """Export photon events with columns event,seed,kernel_path,m4,detector."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event", "seed", "kernel_path", "m4", "detector"])
        for e in events:
            writer.writerow([e.index, e.seed, e.kernel_path, int(e.m4_at_arrival), e.detector])
