"""Core domain types: GPS fixes, POI alphabets, and symbol sequences.

All types are immutable after construction and therefore safe to share
across workers without synchronization.  POI identifiers are dense
integers starting at 0 so that downstream counting (mutual information,
match scans, transition tables) can be array-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class MobmetaError(Exception):
    """Base class for errors raised by this package."""


class DataError(MobmetaError):
    """Invalid or inconsistent input data (CLI exit code 3)."""


class IngestError(DataError):
    """Parse failure while reading an external file."""


class InfeasiblePlanError(MobmetaError):
    """A validation plan cannot be realized on the given data (exit code 4)."""


@dataclass(frozen=True)
class GeoPoint:
    """A single GPS fix: WGS-84 coordinates plus a UTC timestamp in seconds."""

    lat: float
    lon: float
    t: int

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise DataError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise DataError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class RawTrajectory:
    """Time-ordered GPS fixes of one user.

    Timestamps must be strictly ascending; equal-timestamp fixes are a
    dedup concern of the ingest layer and are rejected here.
    """

    user_id: str
    points: tuple[GeoPoint, ...]

    def __post_init__(self):
        if not self.points:
            raise DataError(f"trajectory of user {self.user_id!r} has no points")
        object.__setattr__(self, "points", tuple(self.points))
        ts = [p.t for p in self.points]
        for i in range(1, len(ts)):
            if ts[i] <= ts[i - 1]:
                raise DataError(
                    f"user {self.user_id!r}: timestamps not strictly ascending "
                    f"at index {i} ({ts[i - 1]} -> {ts[i]})"
                )

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class PoiRecord:
    """One entry of a POI alphabet: dense id, centroid, optional label."""

    poi_id: int
    lat: float
    lon: float
    label: Optional[str] = None

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise DataError(f"POI {self.poi_id}: latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise DataError(f"POI {self.poi_id}: longitude {self.lon} out of range")


@dataclass(frozen=True)
class PoiAlphabet:
    """Indexed set of POIs; ids are dense integers 0..size-1.

    ``separator_id`` (= size) is reserved for joining user streams and is
    never a member of the alphabet.
    """

    entries: tuple[PoiRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.poi_id for e in self.entries]
        if ids != list(range(len(ids))):
            raise DataError("POI ids must be dense integers 0..n-1 in order")

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def separator_id(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, poi_id: int) -> bool:
        return 0 <= poi_id < len(self.entries)


def collapse_self_transitions(symbols: Sequence[int]) -> list[int]:
    """Drop repeats of the immediately preceding symbol (keep the first).

    The prediction task is defined over sequences with self-transitions
    eliminated, so the collapse happens once, at construction time.
    """
    out: list[int] = []
    for s in symbols:
        if not out or out[-1] != s:
            out.append(s)
    return out


@dataclass(frozen=True)
class PoiSequence:
    """Time-ordered POI visits of one user, self-transitions eliminated.

    ``symbols`` is a tuple of ``(poi_id, t)`` pairs with strictly ascending
    timestamps and no two consecutive equal poi_ids.  Use
    :meth:`from_visits` to build one from raw visit data; by default runs
    of the same POI are collapsed to their first visit, with
    ``collapse=False`` they are rejected instead.
    """

    user_id: str
    symbols: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(tuple(s) for s in self.symbols))
        if not self.symbols:
            raise DataError(f"user {self.user_id!r}: empty symbol sequence")
        prev_id, prev_t = self.symbols[0]
        for poi_id, t in self.symbols[1:]:
            if t <= prev_t:
                raise DataError(
                    f"user {self.user_id!r}: timestamps not strictly ascending "
                    f"({prev_t} -> {t})"
                )
            if poi_id == prev_id:
                raise DataError(
                    f"user {self.user_id!r}: self-transition {poi_id} -> {poi_id}"
                )
            prev_id, prev_t = poi_id, t

    @classmethod
    def from_visits(
        cls,
        user_id: str,
        visits: Iterable[tuple[int, int]],
        collapse: bool = True,
    ) -> "PoiSequence":
        """Build a sequence from (poi_id, t) visits.

        With ``collapse=True`` consecutive repeats keep the first visit's
        timestamp; with ``collapse=False`` a repeat raises DataError.
        """
        visits = list(visits)
        if not collapse:
            return cls(user_id, tuple(visits))
        kept: list[tuple[int, int]] = []
        for poi_id, t in visits:
            if not kept or kept[-1][0] != poi_id:
                kept.append((poi_id, t))
        return cls(user_id, tuple(kept))

    def poi_ids(self) -> np.ndarray:
        """Symbol stream as an int64 array (timestamps stripped)."""
        return np.asarray([s[0] for s in self.symbols], dtype=np.int64)

    def timestamps(self) -> np.ndarray:
        return np.asarray([s[1] for s in self.symbols], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class Dataset:
    """A named collection of POI sequences over one shared alphabet."""

    name: str
    alphabet: PoiAlphabet
    sequences: tuple[PoiSequence, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise DataError("dataset name must be nonempty")
        object.__setattr__(self, "sequences", tuple(self.sequences))
        n = self.alphabet.size
        for seq in self.sequences:
            for poi_id, _ in seq.symbols:
                if not 0 <= poi_id < n:
                    raise DataError(
                        f"user {seq.user_id!r}: poi_id {poi_id} not in alphabet "
                        f"of size {n}"
                    )

    @property
    def n_users(self) -> int:
        return len(self.sequences)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.alphabet == other.alphabet
            and self.sequences == other.sequences
            and self.provenance == other.provenance
        )


def concat_user_streams(
    sequences: Sequence[PoiSequence],
    separator_policy: str = "none",
    separator_id: Optional[int] = None,
) -> np.ndarray:
    """Flatten per-user symbol streams into one dataset-level stream.

    With ``unique_separator`` a reserved symbol sits between users so that
    cross-user n-grams can never form; the separator must lie outside the
    POI alphabet (``PoiAlphabet.separator_id`` by convention) and defaults
    to max(symbol)+1 when not given.  With ``none`` the streams abut.

    Returns an int64 array in user order.
    """
    if separator_policy not in ("none", "unique_separator"):
        raise ValueError(f"unknown separator_policy {separator_policy!r}")
    if not sequences:
        raise DataError("empty dataset")
    streams = [seq.poi_ids() for seq in sequences]
    if separator_policy == "none":
        return np.concatenate(streams)
    top = int(max(int(s.max()) for s in streams))
    if separator_id is None:
        separator_id = top + 1
    elif separator_id <= top:
        raise DataError(
            f"separator {separator_id} collides with symbols up to {top}"
        )
    sep = np.asarray([separator_id], dtype=np.int64)
    parts = []
    for i, s in enumerate(streams):
        if i > 0:
            parts.append(sep)
        parts.append(s)
    return np.concatenate(parts)
