"""Named, position-addressed random streams derived from one master seed.

Each subsystem (channel noise, fades, ...) draws from its own stream, so
enabling or disabling one impairment never shifts another's draws.  A stream is
an append-only sequence: draw ``i`` is a fixed function of ``(seed, name, i)``,
which lets state objects carry a plain integer cursor and stay immutable.
"""

from __future__ import annotations

import zlib

import numpy as np

_BLOCK = 4096


class RngStream:
    """Deterministic sequences of standard normals and uniforms for one name."""

    __slots__ = ("seed", "name", "_normal_gen", "_uniform_gen", "_normals", "_uniforms")

    def __init__(self, seed: int, name: str):
        self.seed = int(seed)
        self.name = name
        key = zlib.crc32(name.encode("utf-8"))
        seq = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, key])
        normal_seq, uniform_seq = seq.spawn(2)
        self._normal_gen = np.random.Generator(np.random.PCG64(normal_seq))
        self._uniform_gen = np.random.Generator(np.random.PCG64(uniform_seq))
        self._normals: list[float] = []
        self._uniforms: list[float] = []

    def normal(self, i: int) -> float:
        while i >= len(self._normals):
            self._normals.extend(self._normal_gen.standard_normal(_BLOCK).tolist())
        return self._normals[i]

    def uniform(self, i: int) -> float:
        while i >= len(self._uniforms):
            self._uniforms.extend(self._uniform_gen.random(_BLOCK).tolist())
        return self._uniforms[i]

    def __repr__(self):
        return f"RngStream(seed={self.seed}, name={self.name!r})"
