"""Seedable, splittable draw streams and categorical sampling.

The generator is a fixed implementation constant: numpy's PCG64 (period
2^128), keyed by ``SeedSequence(seed, spawn_key=(stream_id,))``. Distinct
stream ids under one seed give statistically independent streams, which is
how per-trial and per-session streams are derived from a master seed.

Only ``Generator.random()`` is consumed (the fixed 53-bit-per-double
conversion); unit selection is done here with a cumulative-mass table and
binary search, so draw sequences do not depend on numpy's higher-level
sampling methods. One uniform is consumed per draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import DatasetError, Domain, Region

__all__ = [
    "RNG_ALGORITHM",
    "RandomStream",
    "SampleDraw",
    "sample_proportional",
    "sample_uniform",
    "sample_from_weights",
]

RNG_ALGORITHM = "pcg64"


@dataclass
class RandomStream:
    """One consumable stream of randomness, addressed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0
    _generator: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def generator(self) -> np.random.Generator:
        if self._generator is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
            self._generator = np.random.Generator(np.random.PCG64(seq))
        return self._generator

    def uniforms(self, n: int) -> np.ndarray:
        return self.generator().random(n)

    def get_state(self) -> dict:
        """JSON-serializable generator state, for session persistence."""
        state = self.generator().bit_generator.state
        return {
            "algorithm": RNG_ALGORITHM,
            "seed": self.seed,
            "stream_id": self.stream_id,
            "state": state["state"]["state"],
            "inc": state["state"]["inc"],
            "has_uint32": state["has_uint32"],
            "uinteger": state["uinteger"],
        }

    def set_state(self, saved: dict) -> None:
        if saved.get("algorithm") != RNG_ALGORITHM:
            raise DatasetError(f"unsupported rng algorithm {saved.get('algorithm')!r}")
        gen = self.generator()
        gen.bit_generator.state = {
            "bit_generator": "PCG64",
            "state": {"state": int(saved["state"]), "inc": int(saved["inc"])},
            "has_uint32": int(saved["has_uint32"]),
            "uinteger": int(saved["uinteger"]),
        }

    def metadata(self) -> dict:
        return {"algorithm": RNG_ALGORITHM, "seed": self.seed, "stream_id": self.stream_id}


@dataclass(frozen=True)
class SampleDraw:
    """An i.i.d. with-replacement batch of unit ids.

    ``source`` is the scope the batch was drawn from (a region name, or
    None for the whole domain); ``kind`` records the proposal family so
    estimators can reject draws of the wrong provenance. ``distinct`` is
    the deduplicated id set: repeats cost nothing to label but every
    occurrence still enters estimator averages.
    """

    ids: tuple[str, ...]
    source: str | None
    kind: str
    n: int
    distinct: frozenset[str]

    def __post_init__(self):
        if self.n != len(self.ids):
            raise DatasetError("draw size does not match the id list")
        if self.distinct != frozenset(self.ids):
            raise DatasetError("distinct set does not match the draws")

    @classmethod
    def build(cls, ids: Sequence[str], source: str | None, kind: str) -> "SampleDraw":
        ids = tuple(ids)
        return cls(ids=ids, source=source, kind=kind, n=len(ids), distinct=frozenset(ids))


def _scope_positions(domain: Domain, scope: Region | None) -> np.ndarray:
    if scope is None:
        return np.arange(len(domain), dtype=np.intp)
    return scope.member_indices(domain)


def _categorical(stream: RandomStream, masses: np.ndarray, n: int) -> np.ndarray:
    """Indices into ``masses`` drawn proportionally, one uniform per draw."""
    if n < 1:
        raise DatasetError("batch size must be >= 1")
    if masses.size == 0:
        raise DatasetError("cannot sample from an empty scope")
    if not np.all(np.isfinite(masses)) or masses.min() < 0:
        raise DatasetError("sampling masses must be finite and >= 0")
    cum = np.cumsum(masses)
    total = cum[-1]
    if total <= 0:
        raise DatasetError("sampling masses sum to zero")
    u = stream.uniforms(n)
    idx = np.searchsorted(cum, u * total, side="right")
    return np.minimum(idx, masses.size - 1)


def sample_proportional(domain: Domain, scope: Region | None, n: int,
                        stream: RandomStream) -> SampleDraw:
    """Draw n units from the scope with probability proportional to g."""
    pos = _scope_positions(domain, scope)
    picked = pos[_categorical(stream, domain.g[pos], n)]
    ids = [domain.ids[p] for p in picked]
    return SampleDraw.build(ids, scope.name if scope else None, "proportional")


def sample_uniform(domain: Domain, scope: Region | None, n: int,
                   stream: RandomStream) -> SampleDraw:
    """Draw n units from the scope uniformly at random."""
    pos = _scope_positions(domain, scope)
    if n < 1:
        raise DatasetError("batch size must be >= 1")
    u = stream.uniforms(n)
    picked = pos[np.minimum((u * pos.size).astype(np.intp), pos.size - 1)]
    ids = [domain.ids[p] for p in picked]
    return SampleDraw.build(ids, scope.name if scope else None, "uniform")


def sample_from_weights(domain: Domain, scope: Region | None, weights: Sequence[float],
                        n: int, stream: RandomStream) -> SampleDraw:
    """Draw n units proportionally to caller-supplied per-scope weights.

    ``weights`` aligns with the scope's members in domain order (or the
    whole domain when scope is None). Used for proposals that are not the
    detector, e.g. covariate-based ones.
    """
    pos = _scope_positions(domain, scope)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (pos.size,):
        raise DatasetError("weight vector length must match the scope size")
    picked = pos[_categorical(stream, w, n)]
    ids = [domain.ids[p] for p in picked]
    return SampleDraw.build(ids, scope.name if scope else None, "custom")
