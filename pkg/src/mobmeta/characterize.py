"""Dataset characterization: per-user entropy/predictability plus
dataset-level dependence structure folded into one report object.

Scope conventions: entropy and predictability are computed per user and
averaged; the MI decay curve runs over the separator-joined dataset
stream so cross-user n-grams never form.  Both scopes can be flipped via
CharacterizeParams for diagnostics.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DataError, Dataset, concat_user_streams
from .entropy import fano_predictability, lz_entropy_rate
from .metrics import MiDecay, mi_decay_curve, pmi_from_counts, _pair_counts

SECONDS_PER_MONTH = 2629800  # Julian year / 12


@dataclass(frozen=True)
class CharacterizeParams:
    d_max: int = 100
    eps_fit: float = 1e-3
    eps_depth: float = 0.1
    pmi_top_k: int = 10
    fano_global_n: bool = False  # per-user distinct POIs by default
    entropy_scope: str = "per_user"  # or "dataset"
    mi_scope: str = "dataset"  # or "per_user"
    threads: int = 1

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        if self.entropy_scope not in ("per_user", "dataset"):
            raise ValueError(f"unknown entropy_scope {self.entropy_scope!r}")
        if self.mi_scope not in ("dataset", "per_user"):
            raise ValueError(f"unknown mi_scope {self.mi_scope!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class UserStats:
    user_id: str
    n_symbols: int
    n_pois: int
    entropy_bits: float
    predictability: float


@dataclass(frozen=True)
class MetaAttributeReport:
    dataset_name: str
    n_users: int
    span_months: float
    raw_fix_count: Optional[int]
    symbol_count_total: int
    symbol_count_avg: float
    n_pois: int
    pois_per_user_mean: float
    entropy_bits_mean: float
    predictability_mean: float
    per_user: tuple[UserStats, ...]
    mi_curve: tuple[tuple[int, float], ...]
    ldd_exponent_alpha: Optional[float]
    ldd_fit_rmse: Optional[float]
    ldd_depth: Optional[int]
    pmi_top: tuple[tuple[tuple[int, int, int], float], ...]
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "n_users": self.n_users,
            "span_months": self.span_months,
            "raw_fix_count": self.raw_fix_count,
            "symbol_count": {
                "total": self.symbol_count_total,
                "avg_per_user": self.symbol_count_avg,
            },
            "n_pois": self.n_pois,
            "pois_per_user_mean": self.pois_per_user_mean,
            "entropy_bits": {
                "mean": self.entropy_bits_mean,
                "per_user": [u.entropy_bits for u in self.per_user],
            },
            "predictability": {
                "mean": self.predictability_mean,
                "per_user": [u.predictability for u in self.per_user],
            },
            "per_user": [
                {
                    "user_id": u.user_id,
                    "n_symbols": u.n_symbols,
                    "n_pois": u.n_pois,
                    "entropy_bits": u.entropy_bits,
                    "predictability": u.predictability,
                }
                for u in self.per_user
            ],
            "mi_curve": [[d, i] for d, i in self.mi_curve],
            "ldd_exponent_alpha": self.ldd_exponent_alpha,
            "ldd_fit_rmse": self.ldd_fit_rmse,
            "ldd_depth": self.ldd_depth,
            "pmi_top": [
                {"poi_a": a, "poi_b": b, "d": d, "pmi_bits": v}
                for (a, b, d), v in self.pmi_top
            ],
            "warnings": list(self.warnings),
        }


def report_from_dict(obj: dict) -> MetaAttributeReport:
    """Inverse of MetaAttributeReport.to_dict, for CLI round trips."""
    try:
        per_user = tuple(
            UserStats(
                u["user_id"], u["n_symbols"], u["n_pois"],
                u["entropy_bits"], u["predictability"],
            )
            for u in obj["per_user"]
        )
        return MetaAttributeReport(
            dataset_name=obj["dataset_name"],
            n_users=obj["n_users"],
            span_months=obj["span_months"],
            raw_fix_count=obj.get("raw_fix_count"),
            symbol_count_total=obj["symbol_count"]["total"],
            symbol_count_avg=obj["symbol_count"]["avg_per_user"],
            n_pois=obj["n_pois"],
            pois_per_user_mean=obj["pois_per_user_mean"],
            entropy_bits_mean=obj["entropy_bits"]["mean"],
            predictability_mean=obj["predictability"]["mean"],
            per_user=per_user,
            mi_curve=tuple((int(d), float(i)) for d, i in obj["mi_curve"]),
            ldd_exponent_alpha=obj.get("ldd_exponent_alpha"),
            ldd_fit_rmse=obj.get("ldd_fit_rmse"),
            ldd_depth=obj.get("ldd_depth"),
            pmi_top=tuple(
                ((e["poi_a"], e["poi_b"], e["d"]), e["pmi_bits"])
                for e in obj.get("pmi_top", [])
            ),
            warnings=tuple(obj.get("warnings", [])),
        )
    except (KeyError, TypeError) as e:
        raise DataError(f"malformed characterization report: {e}") from e


def _user_stats(
    seq, fano_n_global: Optional[int]
) -> UserStats:
    ids = seq.poi_ids()
    distinct = int(np.unique(ids).shape[0])
    s = lz_entropy_rate(ids)
    n_for_fano = fano_n_global if fano_n_global is not None else distinct
    if n_for_fano < 2:
        pi = 1.0
    else:
        pi = fano_predictability(s, n_for_fano)
    return UserStats(seq.user_id, int(ids.shape[0]), distinct, s, pi)


def _top_pmi(
    stream: np.ndarray, d: int, separator_id: int, top_k: int
) -> list[tuple[tuple[int, int, int], float]]:
    """Highest finite PMI pairs at distance d, ties by (a, b)."""
    joint, left, right, n = _pair_counts(stream, d, separator_id)
    scored = [
        ((a, b, d), pmi_from_counts(n, left[a], right[b], c))
        for (a, b), c in joint.items()
    ]
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:top_k]


def characterize(
    ds: Dataset, params: CharacterizeParams = CharacterizeParams()
) -> MetaAttributeReport:
    """Full meta-attribute report; deterministic for fixed inputs.

    Sequences too short for the entropy estimator (< 2 symbols) are
    skipped with a warning; at least one usable sequence is required.
    MI distances are capped to enforce d_max < stream_length / 10.
    """
    notes: list[str] = []
    usable = [s for s in ds.sequences if len(s) >= 2]
    skipped = [s.user_id for s in ds.sequences if len(s) < 2]
    if skipped:
        notes.append(f"skipped short sequences: {', '.join(skipped)}")
    if not usable:
        raise DataError("no sequence has the >= 2 symbols needed")

    fano_n = ds.alphabet.size if params.fano_global_n else None
    if params.threads > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            stats = list(pool.map(lambda s: _user_stats(s, fano_n), usable))
    else:
        stats = [_user_stats(s, fano_n) for s in usable]

    if params.entropy_scope == "dataset":
        joined = concat_user_streams(
            usable, "unique_separator", ds.alphabet.separator_id
        )
        entropy_mean = lz_entropy_rate(joined)
        # the joined stream's effective alphabet includes the separator
        n_eff = ds.alphabet.size + (1 if len(usable) > 1 else 0)
        predictability_mean = (
            fano_predictability(entropy_mean, n_eff) if n_eff >= 2 else 1.0
        )
        notes.append("entropy_scope=dataset: separator-joined stream estimate")
    else:
        entropy_mean = float(np.mean([u.entropy_bits for u in stats]))
        predictability_mean = float(np.mean([u.predictability for u in stats]))

    sep = ds.alphabet.separator_id
    stream = concat_user_streams(usable, "unique_separator", sep)
    d_cap = (stream.shape[0] - 1) // 10
    d_max = min(params.d_max, d_cap)
    decay: Optional[MiDecay] = None
    if d_max >= 1:
        if params.mi_scope == "per_user":
            decay = _per_user_decay(usable, d_max, params, notes)
        else:
            decay = mi_decay_curve(
                stream, d_max, params.eps_fit, params.eps_depth, sep
            )
        if d_max < params.d_max:
            notes.append(
                f"d_max capped to {d_max} (stream length {stream.shape[0]})"
            )
    else:
        notes.append("dataset too short for any MI distance")

    curve = tuple(
        (d, max(i, 0.0)) for d, i in (decay.curve if decay else ())
    )
    if decay and decay.alpha is None:
        notes.append("no measurable dependence above eps_fit")

    pmi_top = []
    if stream.shape[0] >= 3:
        try:
            pmi_top = _top_pmi(stream, 1, sep, params.pmi_top_k)
        except DataError as e:
            notes.append(f"pmi unavailable: {e}")

    ts = np.concatenate([s.timestamps() for s in usable])
    span = float((int(ts.max()) - int(ts.min())) / SECONDS_PER_MONTH)
    n_symbols = [u.n_symbols for u in stats]
    raw_fixes = ds.provenance.get("raw_fix_count")
    return MetaAttributeReport(
        dataset_name=ds.name,
        n_users=len(stats),
        span_months=span,
        raw_fix_count=int(raw_fixes) if raw_fixes is not None else None,
        symbol_count_total=int(np.sum(n_symbols)),
        symbol_count_avg=float(np.mean(n_symbols)),
        n_pois=ds.alphabet.size,
        pois_per_user_mean=float(np.mean([u.n_pois for u in stats])),
        entropy_bits_mean=float(entropy_mean),
        predictability_mean=float(predictability_mean),
        per_user=tuple(stats),
        mi_curve=curve,
        ldd_exponent_alpha=decay.alpha if decay else None,
        ldd_fit_rmse=decay.fit_rmse if decay else None,
        ldd_depth=decay.ldd_depth if decay else None,
        pmi_top=tuple(pmi_top),
        warnings=tuple(notes),
    )


def _per_user_decay(
    usable, d_max: int, params: CharacterizeParams, notes: list[str]
) -> MiDecay:
    """Average per-user MI curves; users too short for a distance drop out."""
    from .metrics import mutual_information_at_distance, fit_power_law

    curve = []
    for d in range(1, d_max + 1):
        vals = []
        for seq in usable:
            ids = seq.poi_ids()
            if ids.shape[0] > d + 1:
                vals.append(mutual_information_at_distance(ids, d))
        if not vals:
            break
        curve.append((d, float(np.mean(vals))))
    fit_pts = [(d, i) for d, i in curve if i > params.eps_fit]
    alpha = rmse = None
    if len(fit_pts) >= 2:
        alpha, rmse = fit_power_law(
            [d for d, _ in fit_pts], [i for _, i in fit_pts]
        )
    depths = [d for d, i in curve if i >= params.eps_depth]
    notes.append("mi_scope=per_user: averaged per-user curves")
    return MiDecay(
        curve=tuple(curve),
        alpha=alpha,
        fit_rmse=rmse,
        ldd_depth=max(depths) if depths else None,
        eps_fit=params.eps_fit,
        eps_depth=params.eps_depth,
    )


def per_user_attribute_matrix(
    report: MetaAttributeReport,
) -> tuple[list[str], np.ndarray]:
    """Attribute rows (n_symbols, n_pois, entropy, predictability) x users."""
    names = ["n_symbols", "n_pois", "entropy_bits", "predictability"]
    m = np.asarray(
        [
            [float(u.n_symbols) for u in report.per_user],
            [float(u.n_pois) for u in report.per_user],
            [u.entropy_bits for u in report.per_user],
            [u.predictability for u in report.per_user],
        ]
    )
    return names, m
