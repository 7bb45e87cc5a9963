"""Named, counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, stream id)``, so adding
draws to one stream (say, feedback noise) never shifts another (channel
draws), and runs with different seeds never share state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STREAM_IDS = {
    "channel": 0,
    "noise": 1,
    "oracle": 2,
    "init": 3,
    "pairs": 4,
    "diagnostics": 5,
}


def stream(seed: int, name: str) -> np.random.Generator:
    if name not in STREAM_IDS:
        raise KeyError(f"unknown stream {name!r}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAM_IDS[name],))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class Streams:
    """The two streams a learner consumes during a run."""

    channel: np.random.Generator
    noise: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> Streams:
        return cls(channel=stream(seed, "channel"), noise=stream(seed, "noise"))
