"""Staypoint detection and POI clustering: RawTrajectory -> PoiSequence."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    DataError,
    Dataset,
    PoiAlphabet,
    PoiRecord,
    PoiSequence,
    RawTrajectory,
)

EARTH_RADIUS_M = 6371008.8


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a sphere of radius 6371008.8 m."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


@dataclass(frozen=True)
class ExtractionParams:
    stay_radius_m: float = 200.0
    stay_min_duration_s: float = 1200.0
    cluster_merge_radius_m: float = 250.0
    min_visits: int = 2

    def __post_init__(self):
        for name in ("stay_radius_m", "stay_min_duration_s",
                     "cluster_merge_radius_m"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive")
        if self.min_visits <= 0:
            raise DataError("min_visits must be positive")
        if self.cluster_merge_radius_m < self.stay_radius_m:
            warnings.warn(
                "cluster_merge_radius_m < stay_radius_m: adjacent staypoints "
                "of one dwell may land in separate POIs",
                stacklevel=2,
            )


@dataclass(frozen=True)
class Staypoint:
    """A dwell episode: centroid of its fixes plus arrival/departure times."""

    user_id: str
    lat: float
    lon: float
    arrival: int
    departure: int


def detect_staypoints(
    traj: RawTrajectory, p: ExtractionParams
) -> list[Staypoint]:
    """Greedy forward scan for dwell windows.

    A window [i..j] qualifies while every fix lies within stay_radius of
    the running window centroid; it is closed at the first violating fix.
    Windows lasting at least stay_min_duration are emitted and the scan
    resumes after them, so emitted windows never overlap.
    """
    pts = traj.points
    n = len(pts)
    out: list[Staypoint] = []
    i = 0
    while i < n:
        lat_sum, lon_sum = pts[i].lat, pts[i].lon
        j = i
        while j + 1 < n:
            cand_lat = (lat_sum + pts[j + 1].lat) / (j + 2 - i)
            cand_lon = (lon_sum + pts[j + 1].lon) / (j + 2 - i)
            if all(
                haversine_m(pts[m].lat, pts[m].lon, cand_lat, cand_lon)
                <= p.stay_radius_m
                for m in range(i, j + 2)
            ):
                lat_sum += pts[j + 1].lat
                lon_sum += pts[j + 1].lon
                j += 1
            else:
                break
        if pts[j].t - pts[i].t >= p.stay_min_duration_s:
            out.append(
                Staypoint(
                    traj.user_id,
                    lat_sum / (j + 1 - i),
                    lon_sum / (j + 1 - i),
                    pts[i].t,
                    pts[j].t,
                )
            )
            i = j + 1
        else:
            i += 1
    return out


def build_alphabet(
    staypoints: Sequence[Staypoint], p: ExtractionParams
) -> tuple[PoiAlphabet, list[Optional[int]]]:
    """Cluster staypoints into POIs; returns alphabet and per-staypoint ids.

    Processing order is sorted by (arrival, user_id, lat, lon) so the
    greedy result is deterministic.  Each staypoint joins the nearest
    existing cluster whose running-mean centroid is within
    cluster_merge_radius (ties to the older cluster), else founds a new
    one.  Clusters with fewer than min_visits members are dropped; their
    staypoints get assignment None.  Surviving clusters are renumbered
    densely in founding order.
    """
    if not staypoints:
        raise DataError("no staypoints to cluster")
    order = sorted(
        range(len(staypoints)),
        key=lambda idx: (
            staypoints[idx].arrival,
            staypoints[idx].user_id,
            staypoints[idx].lat,
            staypoints[idx].lon,
        ),
    )
    centroids: list[tuple[float, float]] = []
    members: list[list[int]] = []
    cluster_of = [0] * len(staypoints)
    for idx in order:
        sp = staypoints[idx]
        best = -1
        best_dist = p.cluster_merge_radius_m
        for c, (clat, clon) in enumerate(centroids):
            dist = haversine_m(sp.lat, sp.lon, clat, clon)
            if dist <= best_dist and (best == -1 or dist < best_dist):
                best, best_dist = c, dist
        if best == -1:
            centroids.append((sp.lat, sp.lon))
            members.append([idx])
            cluster_of[idx] = len(centroids) - 1
        else:
            members[best].append(idx)
            k = len(members[best])
            clat, clon = centroids[best]
            centroids[best] = (
                clat + (sp.lat - clat) / k,
                clon + (sp.lon - clon) / k,
            )
            cluster_of[idx] = best
    poi_of_cluster: dict[int, int] = {}
    entries = []
    for c in range(len(centroids)):
        if len(members[c]) >= p.min_visits:
            poi_of_cluster[c] = len(entries)
            lat, lon = centroids[c]
            entries.append(PoiRecord(len(entries), lat, lon, None))
    if not entries:
        raise DataError("no POIs survive min_visits")
    assignments: list[Optional[int]] = [
        poi_of_cluster.get(cluster_of[i]) for i in range(len(staypoints))
    ]
    return PoiAlphabet(tuple(entries)), assignments


def to_poi_sequence(
    user_id: str,
    staypoints: Sequence[Staypoint],
    assignments: Sequence[Optional[int]],
) -> Optional[PoiSequence]:
    """Order one user's assigned staypoints by arrival into a PoiSequence.

    Discarded staypoints (assignment None) are skipped; consecutive
    duplicates collapse to the first arrival.  Returns None if nothing
    survives.
    """
    visits = sorted(
        (sp.arrival, pid)
        for sp, pid in zip(staypoints, assignments)
        if pid is not None
    )
    if not visits:
        return None
    return PoiSequence.from_visits(
        user_id, [(pid, t) for t, pid in visits], collapse=True
    )


def extract_dataset(
    trajs: Sequence[RawTrajectory],
    params: ExtractionParams,
    name: str,
) -> Dataset:
    """Full extraction: staypoints per user, one shared alphabet, sequences.

    Users whose sequence collapses below 2 symbols are excluded from the
    dataset and listed in provenance["excluded_short_users"]; raw fix
    counts are recorded for the length-vs-symbols report distinction.
    """
    all_sps: list[Staypoint] = []
    spans: dict[str, tuple[int, int]] = {}
    for traj in trajs:
        sps = detect_staypoints(traj, params)
        spans[traj.user_id] = (len(all_sps), len(all_sps) + len(sps))
        all_sps.extend(sps)
    if not all_sps:
        raise DataError("no staypoints detected in any trajectory")
    alphabet, assignments = build_alphabet(all_sps, params)
    sequences = []
    excluded: list[str] = []
    for traj in trajs:
        lo, hi = spans[traj.user_id]
        seq = to_poi_sequence(
            traj.user_id, all_sps[lo:hi], assignments[lo:hi]
        )
        if seq is None or len(seq) < 2:
            excluded.append(traj.user_id)
            continue
        sequences.append(seq)
    if not sequences:
        raise DataError("all users collapsed to short sequences")
    return Dataset(
        name=name,
        alphabet=alphabet,
        sequences=tuple(sequences),
        provenance={
            "source": "extract",
            "extraction_params": {
                "stay_radius_m": params.stay_radius_m,
                "stay_min_duration_s": params.stay_min_duration_s,
                "cluster_merge_radius_m": params.cluster_merge_radius_m,
                "min_visits": params.min_visits,
            },
            "raw_fix_count": sum(len(t) for t in trajs),
            "excluded_short_users": excluded,
        },
    )
