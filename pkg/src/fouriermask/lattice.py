"""Integer frequency lattice for the 2D Fourier mapping."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


def coefficient_count(f: int) -> int:
    """Number of lattice entries for maximum frequency ``f``."""
    if f < 0:
        raise ValueError(f"f must be non-negative, got {f}")
    return (f + 1) * (2 * f + 1) - f


@dataclass(frozen=True)
class FrequencyLattice:
    """Half-plane set of harmonic pairs ``(u, v)`` with ``max(|u|, |v|) <= f``.

    ``entries`` is a read-only ``(c, 2)`` int array in canonical order:
    ``u`` ascending; for ``u == 0`` ``v`` runs ``0..f``, otherwise ``-f..f``.
    ``u`` pairs with the row coordinate, ``v`` with the column coordinate.
    """

    f: int
    entries: np.ndarray

    @property
    def c(self) -> int:
        return int(self.entries.shape[0])

    @property
    def bands(self) -> np.ndarray:
        """Frequency band ``max(|u|, |v|)`` of every entry."""
        return np.abs(self.entries).max(axis=1)

    def __len__(self) -> int:
        return self.c

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrequencyLattice):
            return NotImplemented
        return self.f == other.f and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.f, self.entries.tobytes()))

    def index_of(self, u: int, v: int) -> int:
        hits = np.flatnonzero((self.entries[:, 0] == u) & (self.entries[:, 1] == v))
        if hits.size == 0:
            raise KeyError((u, v))
        return int(hits[0])

    def to_dict(self) -> dict:
        return {"f": self.f, "entries": self.entries.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "FrequencyLattice":
        lattice = build_lattice(int(data["f"]))
        entries = np.asarray(data["entries"], dtype=np.int64).reshape(-1, 2)
        if not np.array_equal(entries, lattice.entries):
            raise ValueError("lattice entries are not in canonical order for f")
        return lattice


_CACHE: dict[int, FrequencyLattice] = {}


def build_lattice(f: int) -> FrequencyLattice:
    """Enumerate the lattice for maximum frequency ``f`` in canonical order."""
    f = int(f)
    if f < 0:
        raise ValueError(f"f must be non-negative, got {f}")
    cached = _CACHE.get(f)
    if cached is not None:
        return cached
    rows = [(0, v) for v in range(0, f + 1)]
    rows += [(u, v) for u in range(1, f + 1) for v in range(-f, f + 1)]
    entries = np.array(rows, dtype=np.int64).reshape(-1, 2)
    entries.setflags(write=False)
    lattice = FrequencyLattice(f=f, entries=entries)
    _CACHE[f] = lattice
    return lattice
