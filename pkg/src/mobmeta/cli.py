"""Command-line interface: ingest, extract-poi, synth, characterize,
validate, sensitivity, recommend, and report bundling.

Exit codes: 0 success, 2 usage error, 3 data error, 4 infeasible plan.
Every command writes exactly one run_manifest.json beside its outputs,
recording the command line, config and dataset hashes (over canonical
serializations), tool version, wall time, and output paths.  Defaults
for --seed, --threads, and --out come from MOBMETA_SEED,
MOBMETA_THREADS, and MOBMETA_OUT.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import shlex
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .characterize import (
    CharacterizeParams,
    characterize,
    per_user_attribute_matrix,
    report_from_dict,
)
from .core import DataError, Dataset, InfeasiblePlanError, concat_user_streams
from .ingest import (
    IngestConfig,
    dataset_digest,
    load_dataset,
    load_raw,
    load_symbols_jsonl,
    parse_raw_with_report,
    save_dataset,
    save_raw,
)
from .jsonutil import (
    canonical_dumps,
    read_json,
    sha256_file,
    write_canonical_json,
)
from .metrics import attribute_correlations, match_structure
from .poi import ExtractionParams, extract_dataset
from .predictors import PredictorSpec
from .report import (
    bundle_report,
    stats_table,
    write_corr_matrix_csv,
    write_folds_csv,
    write_match_structure_csv,
    write_mi_curve_csv,
    write_sensitivity_csv,
)
from .selector import load_rules, recommend
from .synth import generate, spec_from_dict, spec_to_dict, SourceSpec
from .validation import (
    ValidationPlan,
    default_sensitivity_plans,
    evaluate,
    validation_sensitivity,
)


class UsageError(Exception):
    """Bad arguments detected after argparse; exits 2 like argparse."""


def _env_int(name: str, fallback: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


def _default_out(cmd_default: str | None) -> str | None:
    return os.environ.get("MOBMETA_OUT") or cmd_default


def write_manifest(
    anchor: Path,
    argv: list[str],
    config: dict,
    dataset_hash: str | None,
    outputs: list[Path],
    t0: float,
) -> Path:
    """One run_manifest.json next to (or inside) the command's output."""
    directory = anchor if anchor.is_dir() else anchor.parent
    directory.mkdir(parents=True, exist_ok=True)
    config_hash = (
        "sha256:"
        + hashlib.sha256(canonical_dumps(config).encode("utf-8")).hexdigest()
    )
    path = directory / "run_manifest.json"
    write_canonical_json(
        path,
        {
            "command_line": argv,
            "config_hash": config_hash,
            "dataset_hash": dataset_hash,
            "tool_version": __version__,
            "wall_time_s": round(time.monotonic() - t0, 6),
            "outputs": sorted(str(p) for p in outputs),
        },
    )
    return path


def parse_cols(text: str) -> dict:
    """"user=0,lat=1,lon=2,t=3" -> column_map dict."""
    out = {}
    try:
        for part in text.split(","):
            key, _, idx = part.partition("=")
            out[key.strip()] = int(idx)
    except ValueError:
        raise UsageError(f"bad --cols value {text!r}") from None
    return out


def parse_model_arg(
    text: str, external_cmd: str | None = None
) -> PredictorSpec:
    """markov:K | mmc[:M] | top_frequency | random_uniform | external."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "markov":
            return PredictorSpec(kind="markov_k", k=int(arg or 1))
        if kind == "mmc":
            return PredictorSpec(kind="mmc", top_m=int(arg or 10))
        if kind == "top_frequency":
            return PredictorSpec(kind="top_frequency")
        if kind == "random_uniform":
            return PredictorSpec(kind="random_uniform")
        if kind == "external":
            if not external_cmd:
                raise UsageError("external model needs --external-cmd")
            return PredictorSpec(
                kind="external", command=tuple(shlex.split(external_cmd))
            )
    except ValueError as e:
        raise UsageError(f"bad model {text!r}: {e}") from None
    raise UsageError(f"unknown model {text!r}")


_SCHEME_KEYS = {
    "split": float,
    "k": int,
    "p": int,
    "iterations": int,
    "shuffled": lambda v: v.lower() in ("1", "true", "yes"),
}


def parse_scheme_arg(
    text: str, seed: int, per_user: bool, context_window: int
) -> ValidationPlan:
    """"block_rolling:k=10,p=1" -> ValidationPlan."""
    name, _, params = text.partition(":")
    kwargs: dict = {}
    if params:
        for part in params.split(","):
            key, eq, value = part.partition("=")
            if not eq or key not in _SCHEME_KEYS:
                raise UsageError(f"bad scheme parameter {part!r} in {text!r}")
            try:
                kwargs[key] = _SCHEME_KEYS[key](value)
            except ValueError:
                raise UsageError(
                    f"bad value for {key!r} in scheme {text!r}"
                ) from None
    try:
        return ValidationPlan(
            scheme=name,
            per_user=per_user,
            seed=seed,
            external_context_window=context_window,
            **kwargs,
        )
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad scheme {text!r}: {e}") from None


def _spec_from_args(args) -> SourceSpec:
    if args.spec:
        return spec_from_dict(read_json(args.spec))
    common = {
        "n_symbols": args.n,
        "n_users": args.users,
        "seed": args.seed,
    }
    try:
        if args.kind == "iid":
            if args.dist:
                dist = tuple(float(p) for p in args.dist.split(","))
            else:
                m = args.alphabet_size
                dist = tuple(1.0 / m for _ in range(m))
            return SourceSpec(kind="iid", dist=dist, **common)
        if args.kind == "periodic":
            if not args.pattern:
                raise UsageError("--kind periodic needs --pattern")
            pattern = tuple(int(p) for p in args.pattern.split(","))
            return SourceSpec(kind="periodic", pattern=pattern, **common)
        if args.kind == "markov_order_k":
            if not args.transition:
                raise UsageError("--kind markov_order_k needs --transition")
            import numpy as np

            return SourceSpec(
                kind="markov_order_k",
                transition=np.asarray(read_json(args.transition)),
                **common,
            )
        if args.kind == "copy_with_gap":
            return SourceSpec(
                kind="copy_with_gap", gap=args.k, eps=args.eps, **common
            )
        if args.kind == "regime_switch":
            if not (args.spec_a and args.spec_b):
                raise UsageError(
                    "--kind regime_switch needs --spec-a and --spec-b"
                )
            return SourceSpec(
                kind="regime_switch",
                spec_a=spec_from_dict(read_json(args.spec_a)),
                spec_b=spec_from_dict(read_json(args.spec_b)),
                switch_fraction=args.switch_fraction,
                **common,
            )
    except ValueError as e:
        raise UsageError(f"bad source spec: {e}") from None
    raise UsageError(f"unknown source kind {args.kind!r}")


def _require_out(args, what: str) -> Path:
    if not args.out:
        raise UsageError(f"--out is required ({what})")
    return Path(args.out)


def cmd_ingest(args, argv, t0) -> int:
    out_dir = _require_out(args, "dataset directory")
    cfg = IngestConfig(
        format=args.format,
        column_map=parse_cols(args.cols),
        timezone_policy=args.tz_policy,
        tz_offset_seconds=args.tz_offset,
        dedup_policy=args.dedup,
    )
    name = args.name or Path(args.input).stem
    config = {
        "format": cfg.format,
        "column_map": cfg.column_map,
        "timezone_policy": cfg.timezone_policy,
        "tz_offset_seconds": cfg.tz_offset_seconds,
        "dedup_policy": cfg.dedup_policy,
        "name": name,
    }
    if args.format == "symbols_jsonl":
        ds = load_symbols_jsonl(args.input, name=name)
        save_dataset(ds, out_dir)
        outputs = [out_dir / f for f in
                   ("alphabet.json", "sequences.jsonl", "meta.json")]
        write_manifest(out_dir, argv, config, dataset_digest(ds), outputs, t0)
        print(
            f"ingested {ds.n_users} users, {ds.alphabet.size} POIs -> {out_dir}"
        )
        return 0
    trajs, rep = parse_raw_with_report(args.input, cfg)
    save_raw(
        trajs, out_dir, name,
        provenance={"format": cfg.format, "source_path": Path(args.input).name},
    )
    write_canonical_json(
        out_dir / "ingest_report.json",
        {
            "rows_read": rep.rows_read,
            "points_kept": rep.points_kept,
            "rejects": [[line, reason] for line, reason in rep.rejects],
        },
    )
    outputs = [out_dir / f for f in
               ("raw.jsonl", "meta.json", "ingest_report.json")]
    write_manifest(
        out_dir, argv, config,
        "sha256:" + sha256_file(out_dir / "raw.jsonl"), outputs, t0,
    )
    print(
        f"ingested {rep.points_kept} points from {rep.rows_read} rows "
        f"({len(rep.rejects)} rejected) for {len(trajs)} users -> {out_dir}"
    )
    return 0


def cmd_extract_poi(args, argv, t0) -> int:
    out_dir = _require_out(args, "dataset directory")
    trajs = load_raw(args.raw_dir)
    try:
        params = ExtractionParams(
            stay_radius_m=args.stay_radius,
            stay_min_duration_s=args.stay_min,
            cluster_merge_radius_m=args.merge_radius,
            min_visits=args.min_visits,
        )
    except DataError as e:
        raise UsageError(str(e)) from None
    name = args.name or Path(args.raw_dir).name
    ds = extract_dataset(trajs, params, name)
    save_dataset(ds, out_dir)
    outputs = [out_dir / f for f in
               ("alphabet.json", "sequences.jsonl", "meta.json")]
    config = {
        "stay_radius_m": params.stay_radius_m,
        "stay_min_duration_s": params.stay_min_duration_s,
        "cluster_merge_radius_m": params.cluster_merge_radius_m,
        "min_visits": params.min_visits,
        "name": name,
    }
    write_manifest(out_dir, argv, config, dataset_digest(ds), outputs, t0)
    excluded = ds.provenance.get("excluded_short_users", [])
    print(
        f"extracted {ds.alphabet.size} POIs, {ds.n_users} users "
        f"({len(excluded)} excluded as too short) -> {out_dir}"
    )
    return 0


def cmd_synth(args, argv, t0) -> int:
    out_dir = _require_out(args, "dataset directory")
    spec = _spec_from_args(args)
    ds, ground_truth = generate(spec)
    save_dataset(ds, out_dir)
    write_canonical_json(out_dir / "ground_truth.json", ground_truth)
    outputs = [out_dir / f for f in
               ("alphabet.json", "sequences.jsonl", "meta.json",
                "ground_truth.json")]
    write_manifest(
        out_dir, argv, spec_to_dict(spec), dataset_digest(ds), outputs, t0
    )
    print(
        f"generated {spec.kind}: {ds.n_users} users, "
        f"alphabet {ds.alphabet.size} -> {out_dir}"
    )
    return 0


def cmd_characterize(args, argv, t0) -> int:
    ds = load_dataset(args.dataset_dir)
    try:
        params = CharacterizeParams(
            d_max=args.dmax,
            eps_fit=args.eps_fit,
            eps_depth=args.eps_depth,
            pmi_top_k=args.pmi_top_k,
            fano_global_n=args.fano_global_n,
            entropy_scope=args.entropy_scope,
            mi_scope=args.mi_scope,
            threads=args.threads,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    report = characterize(ds, params)
    out = Path(args.out or "report.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_canonical_json(out, report.to_dict())
    outputs = [out]

    mi_path = out.parent / "mi_curve.csv"
    write_mi_curve_csv(mi_path, report.mi_curve)
    outputs.append(mi_path)

    stream = concat_user_streams(
        ds.sequences,
        separator_policy="unique_separator" if ds.n_users > 1 else "none",
        separator_id=ds.alphabet.separator_id,
    )
    triples = match_structure(
        stream, separator_id=ds.alphabet.separator_id
    )
    ms_path = out.parent / "match_structure.csv"
    write_match_structure_csv(ms_path, triples)
    outputs.append(ms_path)

    corr_path = out.parent / "corr_matrix.csv"
    if report.n_users >= 3:
        names, matrix = per_user_attribute_matrix(report)
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                kept, corr = attribute_correlations(names, matrix)
        except DataError as e:
            # identical users leave nothing to correlate; not fatal here
            corr_path.write_text("attribute\n", encoding="utf-8")
            print(
                f"warning: {e}, correlation matrix skipped", file=sys.stderr
            )
        else:
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            write_corr_matrix_csv(corr_path, kept, corr)
    else:
        corr_path.write_text("attribute\n", encoding="utf-8")
        print(
            "warning: < 3 users, correlation matrix skipped", file=sys.stderr
        )
    outputs.append(corr_path)

    config = {
        "d_max": params.d_max,
        "eps_fit": params.eps_fit,
        "eps_depth": params.eps_depth,
        "pmi_top_k": params.pmi_top_k,
        "fano_global_n": params.fano_global_n,
        "entropy_scope": params.entropy_scope,
        "mi_scope": params.mi_scope,
    }
    write_manifest(out, argv, config, dataset_digest(ds), outputs, t0)
    print(
        f"{report.dataset_name}: {report.n_users} users, "
        f"{report.n_pois} POIs, entropy {report.entropy_bits_mean:.3f} bits, "
        f"predictability {report.predictability_mean:.4f} -> {out}"
    )
    for note in report.warnings:
        print(f"note: {note}", file=sys.stderr)
    return 0


def cmd_validate(args, argv, t0) -> int:
    ds = load_dataset(args.dataset_dir)
    spec = parse_model_arg(args.model, args.external_cmd)
    plan = parse_scheme_arg(
        args.scheme, args.seed, not args.concat_users, args.context_window
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = evaluate(ds, spec, plan)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(args.out or "folds.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_folds_csv(out, result.fold_results)
    results_path = out.parent / "results.json"
    write_canonical_json(results_path, result.to_dict())
    config = {
        "model": args.model,
        "scheme": args.scheme,
        "per_user": plan.per_user,
        "seed": args.seed,
        "context_window": args.context_window,
    }
    write_manifest(
        out, argv, config, dataset_digest(ds), [out, results_path], t0
    )
    bits = (
        f"{result.bits_weighted:.4f}"
        if result.bits_weighted is not None else "n/a"
    )
    print(
        f"{result.model_label} under {result.plan_label} "
        f"({'leaky' if result.leaky else 'leakage-free'}): "
        f"accuracy user-mean {result.accuracy_user_mean:.4f}, "
        f"weighted {result.accuracy_weighted:.4f}, bits/symbol {bits}, "
        f"{result.n_predictions} predictions -> {out}"
    )
    return 0


def cmd_sensitivity(args, argv, t0) -> int:
    ds = load_dataset(args.dataset_dir)
    spec = parse_model_arg(args.model, args.external_cmd)
    if args.schemes:
        plans = [
            parse_scheme_arg(
                s.strip(), args.seed, not args.concat_users,
                args.context_window,
            )
            for s in args.schemes.split(";")
        ]
    else:
        plans = default_sensitivity_plans(
            per_user=not args.concat_users, seed=args.seed
        )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = validation_sensitivity(ds, spec, plans)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(args.out or "table.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sensitivity_csv(out, rows)
    rows_json = out.parent / "sensitivity.json"
    write_canonical_json(
        rows_json,
        {
            "model": spec.label,
            "rows": [
                {
                    "scheme": r.scheme,
                    "params": r.params,
                    "accuracy_user_mean": r.accuracy_user_mean,
                    "accuracy_weighted": r.accuracy_weighted,
                    "leaky": r.leaky,
                }
                for r in rows
            ],
        },
    )
    config = {"model": args.model, "schemes": args.schemes, "seed": args.seed}
    write_manifest(
        out, argv, config, dataset_digest(ds), [out, rows_json], t0
    )
    spread = max(r.accuracy_user_mean for r in rows) - min(
        r.accuracy_user_mean for r in rows
    )
    for r in rows:
        tag = "leaky" if r.leaky else "ok"
        print(
            f"{r.scheme:>10} {r.params:<24} "
            f"acc {r.accuracy_user_mean:.4f} ({tag})"
        )
    print(f"spread across schemes: {spread:.4f} -> {out}")
    return 0


def cmd_recommend(args, argv, t0) -> int:
    report = report_from_dict(read_json(args.report))
    rules = load_rules(args.rules) if args.rules else None
    rec = recommend(report, rules)
    out = Path(args.out or "recommendation.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_canonical_json(out, rec.to_dict())
    config = {"report": str(args.report), "rules": args.rules}
    write_manifest(
        out, argv, config, "sha256:" + sha256_file(args.report), [out], t0
    )
    print(f"verdict: {rec.verdict}  (rule {rec.fired_rule}: {rec.rationale})")
    for entry in rec.trace:
        conds = (
            ", ".join(
                f"{k}={c['value']:.4g} vs {c['threshold']:g} "
                f"[{'Y' if c['satisfied'] else 'n'}]"
                for k, c in entry["conditions"].items()
            )
            or "always"
        )
        mark = "*" if entry["fired"] else " "
        print(f" {mark} {entry['rule']}: {conds} -> "
              f"{entry['verdict_if_matched']}")
    return 0


def cmd_report(args, argv, t0) -> int:
    out_dir = _require_out(args, "report directory")
    ds = load_dataset(args.dataset_dir)
    summary = bundle_report(
        ds,
        out_dir,
        characterization_path=args.characterization,
        validation_paths=args.validation or (),
        recommendation_path=args.recommendation,
        sensitivity_path=args.sensitivity,
    )
    outputs = sorted(
        p for p in out_dir.iterdir() if p.name != "run_manifest.json"
    )
    config = {
        "characterization": str(args.characterization),
        "validation": [str(p) for p in (args.validation or [])],
        "recommendation": args.recommendation,
        "sensitivity": args.sensitivity,
    }
    write_manifest(out_dir, argv, config, dataset_digest(ds), outputs, t0)
    print(stats_table([summary["dataset"]]), end="")
    print(f"report bundle -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=_env_int("MOBMETA_SEED", 0),
        help="RNG seed (MOBMETA_SEED)",
    )
    common.add_argument(
        "--threads", type=int,
        default=_env_int("MOBMETA_THREADS", os.cpu_count() or 1),
        help="worker cap (MOBMETA_THREADS)",
    )
    common.add_argument(
        "--out", default=_default_out(None),
        help="output file or directory (MOBMETA_OUT)",
    )

    ap = argparse.ArgumentParser(
        prog="mobmeta",
        description="POI-sequence dataset characterization, model "
        "recommendation, and leakage-free predictor validation",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="parse raw trajectories or symbol streams")
    p.add_argument("input")
    p.add_argument("--format", default="csv_gps",
                   choices=["csv_gps", "plt_geolife_like", "symbols_jsonl"])
    p.add_argument("--cols", default="user=0,lat=1,lon=2,t=3")
    p.add_argument("--tz-policy", default="assume_utc",
                   choices=["assume_utc", "offset_seconds"])
    p.add_argument("--tz-offset", type=int, default=0)
    p.add_argument("--dedup", default="drop_equal_timestamp",
                   choices=["drop_equal_timestamp", "error"])
    p.add_argument("--name", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract-poi", parents=[common],
                       help="staypoints -> POI alphabet -> sequences")
    p.add_argument("raw_dir")
    p.add_argument("--stay-radius", type=float, default=200.0)
    p.add_argument("--stay-min", type=float, default=1200.0)
    p.add_argument("--merge-radius", type=float, default=250.0)
    p.add_argument("--min-visits", type=int, default=2)
    p.add_argument("--name", default=None)
    p.set_defaults(func=cmd_extract_poi)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic dataset with ground truth")
    p.add_argument("--kind", default="iid",
                   choices=["iid", "periodic", "markov_order_k",
                            "copy_with_gap", "regime_switch"])
    p.add_argument("--n", type=int, default=10000,
                   help="symbols per user before collapse")
    p.add_argument("--users", type=int, default=1)
    p.add_argument("--alphabet-size", type=int, default=4)
    p.add_argument("--dist", default=None, help="iid probabilities, comma-separated")
    p.add_argument("--pattern", default=None, help="periodic symbols, comma-separated")
    p.add_argument("--transition", default=None,
                   help="JSON file with the transition table")
    p.add_argument("--k", type=int, default=1, help="copy_with_gap gap")
    p.add_argument("--eps", type=float, default=0.0, help="copy noise")
    p.add_argument("--spec-a", default=None, help="regime A spec JSON file")
    p.add_argument("--spec-b", default=None, help="regime B spec JSON file")
    p.add_argument("--switch-fraction", type=float, default=0.5)
    p.add_argument("--spec", default=None,
                   help="full source spec JSON file (overrides other flags)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("characterize", parents=[common],
                       help="meta-attribute report plus plot CSVs")
    p.add_argument("dataset_dir")
    p.add_argument("--dmax", type=int, default=100)
    p.add_argument("--eps-fit", type=float, default=1e-3)
    p.add_argument("--eps-depth", type=float, default=0.1)
    p.add_argument("--pmi-top-k", type=int, default=10)
    p.add_argument("--fano-global-n", action="store_true")
    p.add_argument("--entropy-scope", default="per_user",
                   choices=["per_user", "dataset"])
    p.add_argument("--mi-scope", default="dataset",
                   choices=["dataset", "per_user"])
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("validate", parents=[common],
                       help="evaluate one predictor under one split scheme")
    p.add_argument("dataset_dir")
    p.add_argument("--model", required=True,
                   help="markov:K | mmc[:M] | top_frequency | "
                        "random_uniform | external")
    p.add_argument("--scheme", required=True,
                   help="e.g. block_rolling:k=10,p=1 or holdout:split=0.8")
    p.add_argument("--external-cmd", default=None,
                   help="command line for --model external")
    p.add_argument("--concat-users", action="store_true",
                   help="evaluate one abutted stream instead of per user")
    p.add_argument("--context-window", type=int, default=64,
                   help="history cap shipped to external predictors")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sensitivity", parents=[common],
                       help="accuracy instability across split schemes")
    p.add_argument("dataset_dir")
    p.add_argument("--model", required=True)
    p.add_argument("--schemes", default=None,
                   help="semicolon-separated scheme specs; default grid "
                        "holdout .8/.7/.6 + kfold 3/5/10")
    p.add_argument("--external-cmd", default=None)
    p.add_argument("--concat-users", action="store_true")
    p.add_argument("--context-window", type=int, default=64)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("recommend", parents=[common],
                       help="threshold rules -> model-class verdict")
    p.add_argument("report", help="characterization report.json")
    p.add_argument("--rules", default=None, help="rules JSON file")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("report", parents=[common],
                       help="bundle component outputs into one directory")
    p.add_argument("dataset_dir")
    p.add_argument("--characterization", required=True)
    p.add_argument("--validation", nargs="*", default=None,
                   help="results.json files from validate runs")
    p.add_argument("--recommendation", default=None)
    p.add_argument("--sensitivity", default=None,
                   help="sensitivity.json from a sensitivity run")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, ["mobmeta"] + argv, time.monotonic())
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except InfeasiblePlanError as e:
        print(f"infeasible plan: {e}", file=sys.stderr)
        return 4
    except (DataError, OSError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
