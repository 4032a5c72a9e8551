"""Reproducible uniform sources.

Replications get their own substream keyed by (seed, index) through a
counter-based generator (Philox), so results do not depend on how many
uniforms other replications consume or on evaluation order.  That matters
because gamma sampling uses rejection and burns a variable number of
uniforms per draw.
"""

from __future__ import annotations

import numpy as np

__all__ = ["BufferedUniforms", "ScriptedStream", "mix_seed", "substream"]

_MASK64 = (1 << 64) - 1


class BufferedUniforms:
    """Scalar ``random()`` view over a numpy Generator, block-buffered.

    Produces exactly the generator's uniform sequence, just fetched in
    blocks to keep per-draw overhead low.
    """

    __slots__ = ("_gen", "_block", "_buf", "_pos")

    def __init__(self, generator: np.random.Generator, block: int = 256):
        self._gen = generator
        self._block = int(block)
        self._buf = np.empty(0)
        self._pos = 0

    def random(self) -> float:
        if self._pos >= self._buf.shape[0]:
            self._buf = self._gen.random(self._block)
            self._pos = 0
        value = self._buf[self._pos]
        self._pos += 1
        return float(value)


class ScriptedStream:
    """Replays a fixed uniform sequence; raises once exhausted.

    Intended for tests that force specific outcomes.
    """

    def __init__(self, values):
        self._values = [float(v) for v in values]
        for v in self._values:
            if not 0.0 <= v < 1.0:
                raise ValueError(f"scripted uniforms must lie in [0, 1), got {v!r}")
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._values):
            raise RuntimeError("scripted stream exhausted")
        value = self._values[self._pos]
        self._pos += 1
        return value

    @property
    def consumed(self) -> int:
        return self._pos


def substream(seed: int, index: int) -> BufferedUniforms:
    """Uniform source for replication ``index`` under ``seed``.

    The Philox key is the 128-bit concatenation of seed and index, so the
    (seed, index) -> stream map is fixed regardless of parallelism.
    """
    key = ((int(seed) & _MASK64) << 64) | (int(index) & _MASK64)
    return BufferedUniforms(np.random.Generator(np.random.Philox(key=key)))


def mix_seed(seed: int, salt: int) -> int:
    """Derive a decorrelated 64-bit seed (splitmix64 finalizer).

    Used by sweep drivers when common random numbers are disabled.
    """
    z = (int(seed) + 0x9E3779B97F4A7C15 * (int(salt) + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
