"""Command-line interface.

Subcommands: extract-info, embed, detect, seed-probe, serve, export.
Exit codes: 0 success, 2 input/parameter error, 3 numeric error, 4 I/O
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baselines import TsneConfig
from .errors import EmbedcureError, ParameterError
from .features import load_features, load_manifest, trivial_manifest
from .layout import UmapConfig
from .seedprobe import ProbeConfig, run_seed_probe
from . import runs


def _add_embed_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["umap", "tsne", "pca"], default="umap")
    p.add_argument("--k", type=int, default=15, help="nearest-neighbor count")
    p.add_argument("--min-dist", type=float, default=0.1)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--negative-sample-rate", type=int, default=5)
    p.add_argument("--init", choices=["spectral", "random", "pca"], default="spectral")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--exaggeration", type=float, default=1.0,
                   help="t-SNE main-phase exaggeration factor")


def _umap_config(args) -> UmapConfig:
    return UmapConfig(
        k=args.k, min_dist=args.min_dist, spread=args.spread,
        n_epochs=args.epochs, learning_rate=args.learning_rate,
        negative_sample_rate=args.negative_sample_rate, init=args.init,
        rng_seed=args.seed,
    )


def _tsne_config(args) -> TsneConfig:
    return TsneConfig(perplexity=args.perplexity,
                      main_exaggeration=args.exaggeration, rng_seed=args.seed)


def cmd_extract_info(args) -> int:
    m = load_features(args.features)
    info = {"n_samples": m.n_samples, "n_dims": m.n_dims,
            "first_ids": list(m.ids[:5])}
    print(json.dumps(info, indent=2))
    return 0


def cmd_embed(args) -> int:
    record, run_dir = runs.run_embed(
        args.features, args.manifest, args.run_root, method=args.method,
        umap_cfg=_umap_config(args) if args.method == "umap" else None,
        tsne_cfg=_tsne_config(args) if args.method == "tsne" else None,
    )
    print(json.dumps({"run_id": record.run_id, "run_dir": str(run_dir)}))
    return 0


def cmd_detect(args) -> int:
    if args.eps is not None and args.eps <= 0:
        raise ParameterError("--eps must be positive")
    if args.min_pts < 2:
        raise ParameterError("--min-pts must be >= 2")
    report = runs.run_detect(args.run_dir, eps=args.eps, min_pts=args.min_pts,
                             main_fraction=args.main_fraction)
    header = f"{'id':>4} {'size':>6} {'kind':>10} {'view':>12} {'patient':>12}"
    print(header)
    for c in report.clusters:
        view = f"{c.dominant_view[0]}:{c.dominant_view[1]:.2f}"
        patient = f"{c.dominant_patient[0]}:{c.dominant_patient[1]:.2f}"
        print(f"{c.id:>4} {c.size:>6} {c.kind:>10} {view:>12} {patient:>12}")
    return 0


def cmd_seed_probe(args) -> int:
    target = load_features(args.target_features)
    tmani = (load_manifest(args.target_manifest) if args.target_manifest
             else trivial_manifest(target.ids, source="target"))
    seeds = load_features(args.seed_features)
    smani = (load_manifest(args.seed_manifest) if args.seed_manifest
             else trivial_manifest(seeds.ids, source="seeds"))
    cfg = _umap_config(args)
    probe = ProbeConfig(k_vote=args.k_vote, vote_threshold=args.vote_threshold,
                        seed_label=args.seed_label)
    result = run_seed_probe(target, tmani, seeds, smani, cfg, probe,
                            run_dir=args.run_dir)
    print(result.to_json())
    return 0


def cmd_serve(args) -> int:
    import socket
    import uvicorn

    from .service import create_app

    app = create_app(args.run_root)
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.bind((args.host, args.port))
        probe.close()
    except OSError as exc:
        print(f"port {args.port} unavailable: {exc}", file=sys.stderr)
        return 4
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export(args) -> int:
    rows = runs.export_outliers(args.run_dir)
    out = sys.stdout if args.out is None else open(args.out, "w")
    try:
        for row in rows:
            out.write(json.dumps(row) + "\n")
    finally:
        if args.out is not None:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedcure",
        description="Embedding-based dataset curation: embed, detect satellite "
                    "clusters, probe for mislabels, serve the curation API.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-info", help="describe a feature file")
    p.add_argument("--features", required=True)
    p.set_defaults(fn=cmd_extract_info)

    p = sub.add_parser("embed", help="embed a feature file into 2-D")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--run-root", default="runs")
    _add_embed_options(p)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("detect", help="cluster an embedding and classify clusters")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--main-fraction", type=float, default=0.05)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("seed-probe", help="seed-and-re-embed mislabel search")
    p.add_argument("--target-features", required=True)
    p.add_argument("--target-manifest", default=None)
    p.add_argument("--seed-features", required=True)
    p.add_argument("--seed-manifest", default=None)
    p.add_argument("--seed-label", default="seed")
    p.add_argument("--k-vote", type=int, default=10)
    p.add_argument("--vote-threshold", type=float, default=0.5)
    p.add_argument("--run-dir", default=None)
    _add_embed_options(p)
    p.set_defaults(fn=cmd_seed_probe)

    p = sub.add_parser("serve", help="run the curation HTTP service")
    p.add_argument("--run-root", default="runs")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8337)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("export", help="export the flagged-outlier manifest")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except EmbedcureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
