"""Command-line pipeline: ingest -> featurize -> (denoise) -> evaluate, plus synth.

Every stage reads and writes plain files, so runs can be resumed, diffed
and cached; with a fixed seed repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from . import denoise as denoise_mod
from . import evaluate as evaluate_mod
from . import ingest as ingest_mod
from . import synthgen as synthgen_mod
from . import trajfeat as trajfeat_mod

logger = logging.getLogger("trajmode")

DATA_DIR_ENV = "TRAJMODE_DATA_DIR"


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fail(stage: str, exc: Exception) -> int:
    print(f"error [{stage}]: {exc}", file=sys.stderr)
    return 1


def cmd_ingest(args: argparse.Namespace) -> int:
    if not args.data_dir:
        return _fail(
            "ingest",
            ValueError(f"no data directory given and {DATA_DIR_ENV} is not set"),
        )
    try:
        samples = ingest_mod.load_geolife(
            args.data_dir, min_points=args.min_points, strict=args.strict
        )
        if not samples:
            raise ValueError(f"no usable trajectory samples under {args.data_dir}")
        n = ingest_mod.write_samples(samples, args.out)
    except (ValueError, OSError) as exc:
        return _fail("ingest", exc)
    counts = Counter(s.mode for s in samples)
    for mode in sorted(counts):
        print(f"{mode}: {counts[mode]}")
    print(f"total: {n} samples -> {args.out}")
    return 0


def cmd_featurize(args: argparse.Namespace) -> int:
    try:
        samples = ingest_mod.read_samples(args.archive)
        if not samples:
            raise ValueError(f"{args.archive} holds no samples")
        matrix = trajfeat_mod.featurize_samples(
            samples,
            wrap_bearing_diff=args.wrap_bearing_diff,
            percentile_method=args.percentile_method,
        )
        n = trajfeat_mod.write_feature_csv(matrix, args.out)
    except (ValueError, OSError) as exc:
        return _fail("featurize", exc)
    print(f"featurized {n} samples -> {args.out}")
    return 0


def cmd_denoise(args: argparse.Namespace) -> int:
    try:
        matrix = trajfeat_mod.read_feature_csv(args.features)
        if len(matrix) == 0:
            raise ValueError(f"{args.features} holds no rows")
        mask = denoise_mod.noise_mask_for(
            matrix, threshold=args.threshold, per_mode=args.per_mode
        )
        kept, removed = denoise_mod.apply_mask(matrix, mask)
        trajfeat_mod.write_feature_csv(kept, args.out)
        sidecar_path = args.sidecar or f"{args.out}.mask.json"
        _write_json(denoise_mod.mask_sidecar(mask, removed, len(matrix)), sidecar_path)
    except (ValueError, OSError) as exc:
        return _fail("denoise", exc)
    print(f"kept {len(kept)} of {len(matrix)} rows -> {args.out}")
    print(f"mask details -> {sidecar_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        if args.subset_file:
            raw = json.loads(Path(args.subset_file).read_text())
            subset = evaluate_mod.ClassSubsetConfig(
                name=raw.get("name", Path(args.subset_file).stem),
                merges=raw.get("merges", {}),
                keep=tuple(raw["keep"]),
                drop_others=raw.get("drop_others", True),
            )
        else:
            subset = evaluate_mod.get_subset(args.subset)
        names = tuple(n.strip() for n in args.classifiers.split(",") if n.strip())
        if not names:
            raise ValueError("no classifiers requested")
        if args.denoise:
            mode = evaluate_mod.CLEAN
        elif args.no_denoise:
            mode = evaluate_mod.WITH_NOISE
        else:
            mode = "both"
        matrix = trajfeat_mod.read_feature_csv(args.features)
        report = evaluate_mod.evaluate_matrix(
            matrix,
            subset,
            names,
            mode=mode,
            seed=args.seed,
            k=args.k,
            threshold=args.threshold,
            stratify=not args.no_stratify,
            fit_on_all=args.fit_on_all,
            per_mode_mask=args.per_mode_mask,
            jobs=args.jobs,
        )
        _write_json(report.to_dict(), args.out)
        if args.table:
            rows = evaluate_mod.report_table_rows(report)
            with open(args.table, "w", encoding="utf-8", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
                writer.writeheader()
                writer.writerows(rows)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        return _fail("evaluate", exc)
    print(evaluate_mod.format_report(report))
    print(f"report -> {args.out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        if args.profiles:
            records = json.loads(Path(args.profiles).read_text())
            profiles = synthgen_mod.profiles_from_dicts(records)
        else:
            profiles = synthgen_mod.DEFAULT_PROFILES
        samples = synthgen_mod.generate(profiles, seed=args.seed)
        corrupted_refs = []
        if args.corrupt > 0.0:
            samples, corrupted_refs = synthgen_mod.corrupt(
                samples, args.corrupt, seed=args.seed
            )
        ingest_mod.write_samples(samples, args.out)
        if args.corrupt > 0.0:
            _write_json(
                {
                    "fraction": args.corrupt,
                    "seed": args.seed,
                    "corrupted": [list(r) for r in corrupted_refs],
                },
                f"{args.out}.corrupted.json",
            )
        if args.emit_plt:
            synthgen_mod.write_geolife_tree(samples, args.emit_plt)
    except (ValueError, OSError, TypeError, json.JSONDecodeError) as exc:
        return _fail("synth", exc)
    counts = Counter(s.mode for s in samples)
    for mode in sorted(counts):
        print(f"{mode}: {counts[mode]}")
    print(f"total: {len(samples)} samples -> {args.out}")
    if args.corrupt > 0.0:
        print(f"corrupted {len(corrupted_refs)} samples (refs -> {args.out}.corrupted.json)")
    if args.emit_plt:
        print(f"point-log tree -> {args.emit_plt}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajmode",
        description="Transportation-mode classification pipeline for GPS trajectory logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a trajectory directory tree into a sample archive")
    p.add_argument(
        "data_dir",
        nargs="?",
        default=os.environ.get(DATA_DIR_ENV),
        help=f"directory holding Data/<user>/ (default: ${DATA_DIR_ENV})",
    )
    p.add_argument("-o", "--out", required=True, help="output sample archive (JSON lines)")
    p.add_argument("--min-points", type=int, default=10, help="minimum points per sample")
    p.add_argument(
        "--strict",
        action="store_true",
        help="abort on the first malformed record instead of skipping it",
    )
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="turn a sample archive into the feature CSV")
    p.add_argument("archive", help="sample archive from the ingest or synth stage")
    p.add_argument("-o", "--out", required=True, help="output feature CSV")
    p.add_argument(
        "--wrap-bearing-diff",
        action="store_true",
        help="wrap bearing differences into [-180, 180) before the rate division",
    )
    p.add_argument(
        "--percentile-method",
        choices=("linear", "nearest_rank"),
        default="linear",
        help="percentile convention for the summary statistics",
    )
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("denoise", help="drop rows flagged by the median-deviation mask")
    p.add_argument("features", help="feature CSV")
    p.add_argument("-o", "--out", required=True, help="output feature CSV without flagged rows")
    p.add_argument("--threshold", type=float, default=denoise_mod.DEFAULT_THRESHOLD)
    p.add_argument(
        "--per-mode",
        action="store_true",
        help="fit the mask within each mode instead of pooling all rows",
    )
    p.add_argument("--sidecar", help="where to write the mask summary JSON (default: OUT.mask.json)")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("evaluate", help="cross-validated classification experiment")
    p.add_argument("features", help="feature CSV")
    p.add_argument("-o", "--out", required=True, help="output report JSON")
    p.add_argument(
        "--subset",
        default="all11",
        help="class subset preset: " + ", ".join(sorted(evaluate_mod.SUBSET_PRESETS)),
    )
    p.add_argument("--subset-file", help="JSON file with a custom subset config")
    p.add_argument(
        "--classifiers",
        default=",".join(evaluate_mod.DEFAULT_CLASSIFIER_NAMES),
        help="comma-separated classifier names (dt, rf, gnb)",
    )
    flag = p.add_mutually_exclusive_group()
    flag.add_argument("--denoise", action="store_true", help="masked pipeline only")
    flag.add_argument("--no-denoise", action="store_true", help="raw pipeline only")
    flag.add_argument(
        "--both",
        action="store_true",
        help="raw and masked pipelines with paired t statistics (default)",
    )
    p.add_argument("--k", type=int, default=10, help="number of folds")
    p.add_argument("--seed", type=int, required=True, help="fold and classifier seed")
    p.add_argument("--threshold", type=float, default=denoise_mod.DEFAULT_THRESHOLD)
    p.add_argument("--fit-on-all", action="store_true", help="fit scaling once on all rows")
    p.add_argument("--no-stratify", action="store_true", help="plain shuffled folds")
    p.add_argument("--per-mode-mask", action="store_true", help="fit the mask within each mode")
    p.add_argument("--jobs", type=int, default=1, help="max parallel fold workers")
    p.add_argument("--table", help="also write the summary table as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic sample archive")
    p.add_argument("-o", "--out", required=True, help="output sample archive (JSON lines)")
    p.add_argument("--seed", type=int, required=True, help="generator seed")
    p.add_argument("--profiles", help="JSON file with a list of mode profiles")
    p.add_argument(
        "--corrupt",
        type=float,
        default=0.0,
        help="fraction of samples to corrupt with teleported points",
    )
    p.add_argument("--emit-plt", help="also write the samples as a point-log directory tree")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
