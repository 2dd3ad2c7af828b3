"""Split schemes and the evaluation harness: accuracy and bits/symbol
under teacher forcing.

The time-ordered family (rolling, block_rolling, window10_cumulative)
is structurally leakage-free: every fold satisfies max(train index) <
min(test index), asserted at construction.  The conventional schemes
(holdout, kfold, leave_one_out, bootstrap) are retained on purpose for
the sensitivity demonstration and always tagged leaky=True in outputs;
the tag marks them as outside the certified time-ordered family, not a
claim that each individual fold mixes time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DataError, Dataset, InfeasiblePlanError
from .predictors import ExternalModel, PredictorSpec, ProtocolError, train
from .rng import SplitMix64

LEAKY_SCHEMES = frozenset({"holdout", "kfold", "leave_one_out", "bootstrap"})
TIME_ORDERED_SCHEMES = frozenset(
    {"rolling", "block_rolling", "window10_cumulative"}
)
_ALL_SCHEMES = LEAKY_SCHEMES | TIME_ORDERED_SCHEMES


@dataclass(frozen=True)
class ValidationPlan:
    """One split scheme with its parameters.

    k and p configure the block schemes (rolling ignores p and expands);
    split is the holdout train fraction; iterations drives bootstrap;
    shuffled applies to kfold.  per_user=False evaluates one stream made
    by abutting all users (cross-user transitions become artifacts, which
    is occasionally the point).  external_context_window caps how much
    revealed history is shipped to external predictors per prediction.
    """

    scheme: str
    split: float = 0.8
    k: int = 10
    p: int = 1
    iterations: int = 20
    shuffled: bool = True
    per_user: bool = True
    seed: int = 0
    external_context_window: int = 64

    def __post_init__(self):
        if self.scheme not in _ALL_SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.split < 1.0:
            raise ValueError(f"split must be in (0,1), got {self.split}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if not 1 <= self.p < self.k:
            raise ValueError(f"need 1 <= p < k, got p={self.p}, k={self.k}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.external_context_window < 1:
            raise ValueError("external_context_window must be >= 1")

    @property
    def leaky(self) -> bool:
        return self.scheme in LEAKY_SCHEMES

    @property
    def label(self) -> str:
        if self.scheme == "holdout":
            return f"holdout:split={self.split:g}"
        if self.scheme == "kfold":
            return f"kfold:k={self.k},shuffled={str(self.shuffled).lower()}"
        if self.scheme == "bootstrap":
            return f"bootstrap:iterations={self.iterations}"
        if self.scheme == "rolling":
            return f"rolling:k={self.k}"
        if self.scheme == "block_rolling":
            return f"block_rolling:k={self.k},p={self.p}"
        return self.scheme


@dataclass(frozen=True)
class Fold:
    index: int
    train_idx: np.ndarray
    test_idx: np.ndarray
    leaky: bool


def _block_bounds(n: int, k: int) -> list[tuple[int, int]]:
    """k blocks of n//k symbols; the remainder goes to the last block."""
    b = n // k
    if b < 2:
        raise InfeasiblePlanError(
            f"blocks need >= 2 symbols: n={n} gives block size {b} at k={k}"
        )
    return [(j * b, (j + 1) * b if j < k - 1 else n) for j in range(k)]


def make_folds(plan: ValidationPlan, n: int) -> list[Fold]:
    """Fold index sets for a sequence of length n.

    Raises InfeasiblePlanError when the scheme cannot be realized.
    """
    if n < 2:
        raise InfeasiblePlanError(f"need at least 2 symbols, got {n}")
    scheme = plan.scheme
    folds: list[Fold] = []
    if scheme == "holdout":
        m = int(plan.split * n)
        if m < 1 or m >= n:
            raise InfeasiblePlanError(
                f"holdout split {plan.split} leaves no train or no test at n={n}"
            )
        folds.append(Fold(0, np.arange(m), np.arange(m, n), True))
    elif scheme == "kfold":
        if plan.k > n:
            raise InfeasiblePlanError(f"kfold k={plan.k} exceeds n={n}")
        order = list(range(n))
        if plan.shuffled:
            SplitMix64(plan.seed).shuffle(order)
        order = np.asarray(order, dtype=np.int64)
        for f in range(plan.k):
            lo, hi = f * n // plan.k, (f + 1) * n // plan.k
            test = np.sort(order[lo:hi])
            mask = np.ones(n, dtype=bool)
            mask[test] = False
            folds.append(Fold(f, np.flatnonzero(mask), test, True))
    elif scheme == "leave_one_out":
        for i in range(n):
            train_idx = np.concatenate([np.arange(i), np.arange(i + 1, n)])
            folds.append(Fold(i, train_idx, np.asarray([i]), True))
    elif scheme == "bootstrap":
        rng = SplitMix64(plan.seed)
        for it in range(plan.iterations):
            draws = np.sort(
                np.asarray([rng.randint(n) for _ in range(n)], dtype=np.int64)
            )
            oob = np.setdiff1d(np.arange(n), draws)
            if oob.size == 0:
                continue
            folds.append(Fold(it, draws, oob, True))
        if not folds:
            raise InfeasiblePlanError(
                "bootstrap produced no out-of-bag test symbols"
            )
    else:
        k = 10 if scheme == "window10_cumulative" else plan.k
        blocks = _block_bounds(n, k)
        if scheme == "block_rolling":
            for i in range(k - plan.p):
                t_lo, t_hi = blocks[i + plan.p]
                folds.append(
                    Fold(
                        i,
                        np.arange(blocks[i][0], blocks[i + plan.p - 1][1]),
                        np.arange(t_lo, t_hi),
                        False,
                    )
                )
        else:  # rolling / window10_cumulative: expanding train
            for i in range(k - 1):
                t_lo, t_hi = blocks[i + 1]
                folds.append(
                    Fold(i, np.arange(0, blocks[i][1]), np.arange(t_lo, t_hi),
                         False)
                )
    for fold in folds:
        if not fold.leaky:
            assert int(fold.train_idx.max()) < int(fold.test_idx.min())
    return folds


@dataclass(frozen=True)
class FoldResult:
    user_id: str
    fold_index: int
    train_lo: int
    train_hi: int
    test_lo: int
    test_hi: int
    n_correct: int
    n_predictions: int
    accuracy: float
    bits_per_symbol: Optional[float]
    leaky: bool


@dataclass(frozen=True)
class EvaluationResult:
    plan_label: str
    model_label: str
    fold_results: tuple[FoldResult, ...]
    excluded_users: tuple[str, ...]
    accuracy_user_mean: float
    accuracy_weighted: float
    bits_user_mean: Optional[float]
    bits_weighted: Optional[float]
    n_predictions: int
    leaky: bool

    def fold_curve(self) -> list[tuple[int, float]]:
        """Mean accuracy per fold index across users (for drift plots)."""
        by_fold: dict[int, list[float]] = {}
        for r in self.fold_results:
            by_fold.setdefault(r.fold_index, []).append(r.accuracy)
        return [
            (f, float(np.mean(accs))) for f, accs in sorted(by_fold.items())
        ]

    def to_dict(self) -> dict:
        return {
            "plan": self.plan_label,
            "model": self.model_label,
            "leaky": self.leaky,
            "accuracy_user_mean": self.accuracy_user_mean,
            "accuracy_weighted": self.accuracy_weighted,
            "bits_user_mean": self.bits_user_mean,
            "bits_weighted": self.bits_weighted,
            "n_predictions": self.n_predictions,
            "excluded_users": list(self.excluded_users),
            "fold_curve": [[f, a] for f, a in self.fold_curve()],
            "folds": [
                {
                    "user_id": r.user_id,
                    "fold": r.fold_index,
                    "train_lo": r.train_lo,
                    "train_hi": r.train_hi,
                    "test_lo": r.test_lo,
                    "test_hi": r.test_hi,
                    "n_correct": r.n_correct,
                    "n_predictions": r.n_predictions,
                    "accuracy": r.accuracy,
                    "bits_per_symbol": r.bits_per_symbol,
                    "leaky": r.leaky,
                }
                for r in self.fold_results
            ],
        }


def _context_need(spec: PredictorSpec, plan: ValidationPlan) -> int:
    if spec.kind == "markov_k":
        return spec.k
    if spec.kind == "mmc":
        return 1
    if spec.kind == "external":
        return plan.external_context_window
    return 0


def _eval_stream(
    user_id: str,
    symbols: np.ndarray,
    timestamps: np.ndarray,
    spec: PredictorSpec,
    plan: ValidationPlan,
    folds: list[Fold],
    alphabet_size: int,
) -> list[FoldResult]:
    need = _context_need(spec, plan)
    results = []
    for fold in folds:
        model = train(
            spec,
            symbols[fold.train_idx],
            alphabet_size,
            timestamps[fold.train_idx],
        )
        is_external = isinstance(model, ExternalModel)
        try:
            mask = np.zeros(symbols.shape[0], dtype=bool)
            mask[fold.train_idx] = True
            floor = int(min(fold.train_idx.min(), fold.test_idx.min()))
            n_correct = 0
            bits_terms: list[float] = []
            has_bits = True
            for t in fold.test_idx.tolist():
                ctx: list[int] = []
                ctx_ts: list[int] = []
                j = t - 1
                while j >= floor and len(ctx) < need:
                    if mask[j]:
                        ctx.append(int(symbols[j]))
                        ctx_ts.append(int(timestamps[j]))
                    j -= 1
                ctx.reverse()
                ctx_ts.reverse()
                if is_external:
                    pred, dist = model.predict(ctx, ctx_ts)
                else:
                    pred, dist = model.predict(ctx)
                truth = int(symbols[t])
                n_correct += pred == truth
                if dist is None:
                    has_bits = False
                else:
                    p = float(dist[truth])
                    bits_terms.append(-math.log2(p) if p > 0.0 else math.inf)
                mask[t] = True
            n_pred = int(fold.test_idx.shape[0])
            results.append(
                FoldResult(
                    user_id=user_id,
                    fold_index=fold.index,
                    train_lo=int(fold.train_idx.min()),
                    train_hi=int(fold.train_idx.max()) + 1,
                    test_lo=int(fold.test_idx.min()),
                    test_hi=int(fold.test_idx.max()) + 1,
                    n_correct=int(n_correct),
                    n_predictions=n_pred,
                    accuracy=n_correct / n_pred,
                    bits_per_symbol=(
                        math.fsum(bits_terms) / n_pred if has_bits else None
                    ),
                    leaky=fold.leaky,
                )
            )
        finally:
            if is_external:
                model.close()
    return results


def evaluate(
    ds: Dataset, spec: PredictorSpec, plan: ValidationPlan
) -> EvaluationResult:
    """Train/test a predictor under a plan; teacher-forced test contexts.

    Test contexts walk backward from each test position over indices that
    are in the fold's train set or already-revealed test prefix; for
    time-ordered schemes that is exactly the window [train_lo, t).  Users
    the plan cannot split are excluded with a warning.
    """
    streams: list[tuple[str, np.ndarray, np.ndarray]] = []
    if plan.per_user:
        for seq in ds.sequences:
            streams.append((seq.user_id, seq.poi_ids(), seq.timestamps()))
    else:
        ids = np.concatenate([s.poi_ids() for s in ds.sequences])
        ts = np.concatenate([s.timestamps() for s in ds.sequences])
        streams.append(("__all__", ids, ts))
    all_results: list[FoldResult] = []
    per_user_acc: list[float] = []
    per_user_bits: list[float] = []
    excluded: list[str] = []
    n_infeasible = 0
    for user_id, symbols, timestamps in streams:
        try:
            folds = make_folds(plan, symbols.shape[0])
            results = _eval_stream(
                user_id, symbols, timestamps, spec, plan, folds,
                ds.alphabet.size,
            )
        except ProtocolError:
            raise
        except (InfeasiblePlanError, DataError) as e:
            warnings.warn(f"excluding user {user_id!r}: {e}", stacklevel=2)
            excluded.append(user_id)
            n_infeasible += isinstance(e, InfeasiblePlanError)
            continue
        all_results.extend(results)
        per_user_acc.append(float(np.mean([r.accuracy for r in results])))
        fold_bits = [r.bits_per_symbol for r in results]
        if all(b is not None for b in fold_bits):
            per_user_bits.append(float(np.mean(fold_bits)))
    total_pred = sum(r.n_predictions for r in all_results)
    if total_pred == 0:
        if n_infeasible == len(streams):
            raise InfeasiblePlanError(
                f"plan {plan.label} is infeasible for every stream "
                f"({', '.join(excluded)})"
            )
        raise DataError(
            "zero test predictions overall"
            + (f" (excluded users: {', '.join(excluded)})" if excluded else "")
        )
    total_correct = sum(r.n_correct for r in all_results)
    have_bits = len(per_user_bits) == len(per_user_acc)
    bits_weighted = None
    if have_bits:
        bits_weighted = (
            math.fsum(
                r.bits_per_symbol * r.n_predictions for r in all_results
            )
            / total_pred
        )
    return EvaluationResult(
        plan_label=plan.label,
        model_label=spec.label,
        fold_results=tuple(all_results),
        excluded_users=tuple(excluded),
        accuracy_user_mean=float(np.mean(per_user_acc)),
        accuracy_weighted=total_correct / total_pred,
        bits_user_mean=float(np.mean(per_user_bits)) if have_bits else None,
        bits_weighted=bits_weighted,
        n_predictions=total_pred,
        leaky=plan.leaky,
    )


def compression_ratio(
    ds: Dataset, spec: PredictorSpec, plan: ValidationPlan
) -> Optional[float]:
    """Prediction-weighted bits/symbol, or None for argmax-only models."""
    return evaluate(ds, spec, plan).bits_weighted


@dataclass(frozen=True)
class SensitivityRow:
    scheme: str
    params: str
    accuracy_user_mean: float
    accuracy_weighted: float
    leaky: bool


def validation_sensitivity(
    ds: Dataset, spec: PredictorSpec, plans: Sequence[ValidationPlan]
) -> list[SensitivityRow]:
    """Aggregate accuracy per scheme cell, for the instability table."""
    if len(plans) < 2:
        raise ValueError("sensitivity needs at least 2 schemes to compare")
    rows = []
    for plan in plans:
        res = evaluate(ds, spec, plan)
        scheme, _, params = plan.label.partition(":")
        rows.append(
            SensitivityRow(
                scheme=scheme,
                params=params,
                accuracy_user_mean=res.accuracy_user_mean,
                accuracy_weighted=res.accuracy_weighted,
                leaky=res.leaky,
            )
        )
    return rows


def default_sensitivity_plans(
    per_user: bool = True, seed: int = 0
) -> list[ValidationPlan]:
    """The conventional grid: holdout 80/70/60 and k-fold 3/5/10."""
    plans = [
        ValidationPlan("holdout", split=s, per_user=per_user, seed=seed)
        for s in (0.8, 0.7, 0.6)
    ]
    plans += [
        ValidationPlan("kfold", k=k, shuffled=True, per_user=per_user,
                       seed=seed)
        for k in (3, 5, 10)
    ]
    return plans
