"""Command-line driver for the embedding-space analysis pipeline.

Verbs: pool, reduce, diagnose, cluster, explain, booster, sweep, serve.
Exit code 0 on success; validation failures exit 2 with a machine-readable
JSON error on stderr.  Identical inputs and seed produce byte-identical
output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import explain, pipeline, tensor_io
from .errors import DimensionMismatchError, VerseError
from .tensor_io import EmbeddingMatrix


def _config_args(parser: argparse.ArgumentParser, *names: str) -> None:
    parser.add_argument("--config", help="flat JSON config file", default=None)
    table = {
        "seed": dict(type=int, help="master RNG seed (default: $VERSE_SEED or 0)"),
        "d": dict(type=int, help="reduced-space dimension (default 2)"),
        "k_min": dict(type=int, flag="--k-min", help="smallest cluster count to try"),
        "k_max": dict(type=int, flag="--k-max", help="largest cluster count to try"),
        "trust_k": dict(type=int, flag="--trust-k", help="neighborhood size for reduction quality"),
        "threshold": dict(type=float, help="feasibility silhouette threshold"),
        "delta": dict(type=float, help="low-cluster margin below the global mean"),
        "min_size": dict(type=int, flag="--min-size", help="smallest flaggable cluster"),
        "top_n": dict(type=int, flag="--top-n", help="attributions per booster spec"),
    }
    for name in names:
        spec = table[name]
        flag = spec.pop("flag", f"--{name}")
        parser.add_argument(flag, dest=name, default=None, **spec)


def _overrides(args: argparse.Namespace, *names: str) -> dict:
    return {name: getattr(args, name) for name in names}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verse",
        description="Reduce, diagnose, and explain visual embedding spaces.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("pool", help="average patch grids into one embedding per image")
    p.add_argument("--in", dest="inp", required=True, help="VPGR patch-grid file")
    p.add_argument("--out", required=True, help="VEMB output file")

    p = sub.add_parser("reduce", help="fit the reduced space and its quality metrics")
    p.add_argument("--emb", required=True, help="VEMB embedding file")
    p.add_argument("--out", required=True, help="space JSON output")
    _config_args(p, "d", "trust_k")

    p = sub.add_parser("diagnose", help="full feasibility report from embeddings")
    p.add_argument("--emb", required=True)
    p.add_argument("--out", required=True, help="report JSON output")
    _config_args(p, "seed", "d", "k_min", "k_max", "trust_k", "threshold")

    p = sub.add_parser("cluster", help="cluster a reduced space")
    p.add_argument("--in", dest="inp", required=True, help="space JSON from `reduce`")
    p.add_argument("--out", required=True, help="analysis JSON output")
    _config_args(p, "seed", "k_min", "k_max", "threshold")

    p = sub.add_parser("explain", help="join records, flag clusters, rank attributions")
    p.add_argument("--in", dest="inp", required=True, help="analysis JSON from `cluster`")
    p.add_argument("--meta", required=True, help="metadata CSV")
    p.add_argument("--scores", required=True, help="scores CSV (sample_id,f1)")
    p.add_argument("--out", required=True, help="session JSON output")
    _config_args(p, "delta", "min_size")

    p = sub.add_parser("booster", help="booster specs for every flagged cluster")
    p.add_argument("--session", required=True, help="session JSON from `explain`")
    p.add_argument("--catalog", default=None, help="catalog CSV/JSONL to match")
    p.add_argument("--out", required=True, help="booster JSON output")
    _config_args(p, "top_n")

    p = sub.add_parser("sweep", help="region × run score comparison")
    p.add_argument("--session", required=True, help="session JSON from `explain`")
    p.add_argument("--runs", required=True, help="comma-separated score CSVs")
    p.add_argument("--baseline", required=True, help="label of the baseline run")
    p.add_argument("--out", required=True, help="sweep JSON output")

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")

    return parser


def cmd_pool(args) -> int:
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for grid in tensor_io.read_patch_grids(args.inp):
        pooled = tensor_io.pool_patch_grid(grid)
        if rows and pooled.shape[0] != rows[0].shape[0]:
            raise DimensionMismatchError(
                f"grid {grid.sample_id!r} has dimension {pooled.shape[0]}, "
                f"expected {rows[0].shape[0]}"
            )
        ids.append(grid.sample_id)
        rows.append(pooled)
    if not rows:
        raise VerseError(f"{args.inp}: no patch grids")
    matrix = EmbeddingMatrix(ids=tuple(ids), data=np.stack(rows).astype(np.float32))
    tensor_io.write_embeddings(matrix, args.out)
    return 0


def cmd_reduce(args) -> int:
    config = pipeline.load_config(args.config, _overrides(args, "d", "trust_k"))
    matrix = tensor_io.read_embeddings(args.emb)
    from .reduction import pca_fit, reduction_quality

    space = pca_fit(matrix, config.d)
    quality = reduction_quality(matrix, space, config.trust_k)
    pipeline.dump_json(pipeline.space_doc(space, quality), args.out)
    return 0


def cmd_diagnose(args) -> int:
    config = pipeline.load_config(
        args.config,
        _overrides(args, "seed", "d", "k_min", "k_max", "trust_k", "threshold"),
    )
    matrix = tensor_io.read_embeddings(args.emb)
    result = pipeline.analyze_embeddings(matrix, config)
    pipeline.dump_json(result.report, args.out)
    print(pipeline.render_report_row(result.report))
    return 0


def cmd_cluster(args) -> int:
    from . import clustering

    config = pipeline.load_config(
        args.config, _overrides(args, "seed", "k_min", "k_max", "threshold")
    )
    space, quality = pipeline.space_from_doc(pipeline.load_json(args.inp), args.inp)
    _, model = clustering.select_k(
        space.coords, config.k_candidates(space.n), config.seed
    )
    diagnostics = clustering.cluster_diagnostics(space.coords, model)
    verdict = clustering.feasibility_verdict(
        diagnostics.mean_silhouette, config.threshold
    )
    result = pipeline.AnalysisResult(
        ids=space.source_ids,
        space=space,
        quality=quality,
        model=model,
        diagnostics=diagnostics,
        verdict=verdict,
        config=config,
    )
    pipeline.dump_json(pipeline.analysis_doc(result), args.out)
    return 0


def cmd_explain(args) -> int:
    import dataclasses

    result = pipeline.analysis_from_doc(pipeline.load_json(args.inp), args.inp)
    # the analysis document carries the upstream config; this stage may adjust
    # the flagging knobs on top of it
    values = pipeline.config_doc(result.config)
    if args.config:
        values.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for name, value in _overrides(args, "delta", "min_size").items():
        if value is not None:
            values[name] = value
    config = pipeline.RunConfig(**values)
    records = tensor_io.read_records(args.meta, args.scores)
    session = pipeline.build_session_from_analysis(result, records, config)
    result = dataclasses.replace(result, config=config)
    pipeline.dump_json(pipeline.session_doc(session, result), args.out)
    return 0


def cmd_booster(args) -> int:
    session, result = pipeline.session_from_doc(
        pipeline.load_json(args.session), args.session
    )
    top_n = args.top_n if args.top_n is not None else result.config.top_n
    catalog = tensor_io.read_catalog(args.catalog) if args.catalog else None
    specs = []
    for cluster_id in session.flagged:
        spec = explain.compose_booster(session, cluster_id, top_n)
        if catalog is not None:
            spec = explain.match_booster(spec, catalog)
        specs.append(pipeline.booster_doc(spec))
    doc = {
        "schema_version": pipeline.SCHEMA_VERSION,
        "kind": "booster_set",
        "specs": specs,
    }
    pipeline.dump_json(doc, args.out)
    return 0


def cmd_sweep(args) -> int:
    session, _ = pipeline.session_from_doc(
        pipeline.load_json(args.session), args.session
    )
    runs = []
    for path in args.runs.split(","):
        path = path.strip()
        runs.append((Path(path).stem, tensor_io.read_scores(path)))
    report = explain.sweep_report(runs, session, args.baseline)
    pipeline.dump_json(pipeline.sweep_doc(report), args.out)
    for region in report.regions:
        rendered = ", ".join(
            f"{label}={explain.render_delta(report.deltas[region][label])}"
            for label in report.labels
            if label != report.baseline
        )
        print(f"{region}: {rendered}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "pool": cmd_pool,
    "reduce": cmd_reduce,
    "diagnose": cmd_diagnose,
    "cluster": cmd_cluster,
    "explain": cmd_explain,
    "booster": cmd_booster,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except VerseError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "invalid_input", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
