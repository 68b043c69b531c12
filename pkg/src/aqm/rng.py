"""Counter-based random streams.

Every stochastic routine in the package draws from a Philox counter-based
generator keyed by the user seed.  Independent trials get disjoint streams
addressed by (seed, stream index), so replay is exact and the result of a
trial does not depend on how many other trials ran before it.
"""

from __future__ import annotations

import numpy as np

# Disjoint key offsets for logically separate consumers of the same user
# seed (e.g. the delayed-choice policy must not share a stream with the
# photon events it controls).
LANE_EVENTS = 0
LANE_POLICY = 0x9E3779B97F4A7C15


def _key(seed: int, lane: int) -> int:
    return (int(seed) ^ lane) & ((1 << 128) - 1)


def stream(seed: int, index: int = 0, lane: int = LANE_EVENTS) -> np.random.Generator:
    """Return the long-lived generator for stream `index` of the given seed.

    Each stream owns 2**128 Philox blocks, so streams never overlap.
    """
    if index < 0:
        raise ValueError(f"stream index must be non-negative, got {index}")
    return np.random.Generator(np.random.Philox(key=_key(seed, lane), counter=index << 128))


# A single-shot event owns one Philox block: four uniform doubles.
DRAWS_PER_EVENT = 4


def event_stream(seed: int, index: int, lane: int = LANE_EVENTS) -> np.random.Generator:
    """Generator for one event; may draw at most DRAWS_PER_EVENT doubles."""
    if index < 0:
        raise ValueError(f"event index must be non-negative, got {index}")
    return np.random.Generator(np.random.Philox(key=_key(seed, lane), counter=index))


def event_uniforms(seed: int, n_events: int, lane: int = LANE_EVENTS) -> np.ndarray:
    """Uniforms for events 0..n_events-1 as an (n_events, 4) array.

    Row i reproduces exactly the first four draws of event_stream(seed, i),
    so batched and one-event-at-a-time execution give identical results.
    """
    gen = np.random.Generator(np.random.Philox(key=_key(seed, lane), counter=0))
    return gen.random(DRAWS_PER_EVENT * n_events).reshape(n_events, DRAWS_PER_EVENT)
