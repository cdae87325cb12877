"""Command-line interface: corpus management, analysis passes, queries, serving."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dsp
from .errors import AvpError
from .events import EventQuery
from .fingerprint import match_all, match_pair
from .service import ApiConfig, Platform, load_config, serve


def _platform(args) -> Platform:
    return Platform(ApiConfig(corpus_root=args.root))


def _parse_kv(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"expected k=v, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k] = v
    return out


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")


def cmd_ingest(args):
    platform = _platform(args)
    meta = _parse_kv(args.meta)
    for path in args.paths:
        asset = platform.ingest_and_index(path, meta)
        _emit(asset.to_dict())


def cmd_assets(args):
    platform = _platform(args)
    _emit([a.to_dict() for a in platform.catalog.list_assets(_parse_kv(args.filter) or None)])


def cmd_spectro(args):
    platform = _platform(args)
    pcm = platform.catalog.get_audio(args.asset)
    spec = dsp.stft(pcm.samples)
    dsp.save_spectrogram(spec, args.out)
    print(f"{args.out}: {spec.n_frames} frames x {spec.n_bins} bins")


def cmd_fingerprint(args):
    platform = _platform(args)
    if args.reindex:
        platform.fp_index.remove_asset(args.asset)
    platform.index_asset(args.asset)
    platform.save_indexes()
    print(f"{args.asset}: {platform.fp_index.hash_count(args.asset)} hashes")


def cmd_match(args):
    platform = _platform(args)
    _emit(match_pair(platform.fp_index, args.asset_a, args.asset_b, platform.match_cfg).to_dict())


def cmd_match_all(args):
    platform = _platform(args)
    _emit([r.to_dict() for r in match_all(platform.fp_index, args.asset, platform.match_cfg)])


def cmd_features(args):
    platform = _platform(args)
    platform.index_asset(args.asset)
    platform.features.freeze_stats()
    platform.save_indexes()
    print(f"{args.asset}: {platform.features.n_segments(args.asset)} segments")


def cmd_similar(args):
    platform = _platform(args)
    if args.segment is None:
        ranked = platform.features.similar_assets(args.asset, args.k)
        _emit([{"asset_id": a, "best_distance": d} for a, d in ranked])
    else:
        hits = platform.features.knn(args.asset, args.segment, args.k)
        _emit([h.to_dict() for h in hits])


def cmd_load_artifacts(args):
    platform = _platform(args)
    _emit(platform.events.load_artifacts(args.dir))


def cmd_query(args):
    platform = _platform(args)
    platform.events.load_artifacts(platform.artifact_dir)
    clauses = []
    for spec_str in args.label:
        label, _, conf = spec_str.partition(":")
        clauses.append((label, float(conf) if conf else 0.0))
    q = EventQuery(clauses=clauses, combine="OR" if args.use_or else "AND")
    results = platform.events.query(q)
    _emit(
        [
            {"asset_id": r.asset_id, "rank_score": r.rank_score, "n_events": len(r.events)}
            for r in results
        ]
    )


def cmd_quickdetect(args):
    from . import quickdetect

    platform = _platform(args)
    pcm = platform.catalog.get_audio(args.asset)
    for doc in (quickdetect.detect_impulses(pcm), quickdetect.detect_sustained(pcm)):
        path = quickdetect.write_artifact(doc, args.out)
        print(f"{path} ({len(doc['events'])} events)")


def cmd_serve(args):
    config_path = args.config or os.environ.get("AVP_CONFIG")
    if not config_path:
        raise SystemExit("serve needs --config or AVP_CONFIG")
    serve(load_config(config_path))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avp", description="audio-visual evidence platform")
    parser.add_argument("--root", default=os.environ.get("AVP_ROOT", "./corpus"),
                        help="corpus root directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest media files into the corpus")
    p.add_argument("paths", nargs="+")
    p.add_argument("--meta", action="append", metavar="K=V")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("assets", help="list catalog assets")
    p.add_argument("--filter", action="append", metavar="K=V")
    p.set_defaults(func=cmd_assets)

    p = sub.add_parser("spectro", help="dump an asset spectrogram")
    p.add_argument("asset")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectro)

    p = sub.add_parser("fingerprint", help="fingerprint an asset")
    p.add_argument("asset")
    p.add_argument("--reindex", action="store_true")
    p.set_defaults(func=cmd_fingerprint)

    p = sub.add_parser("match", help="match two assets")
    p.add_argument("asset_a")
    p.add_argument("asset_b")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("match-all", help="match an asset against the corpus")
    p.add_argument("asset")
    p.set_defaults(func=cmd_match_all)

    p = sub.add_parser("features", help="extract segment features for an asset")
    p.add_argument("asset")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("similar", help="similarity search")
    p.add_argument("asset")
    p.add_argument("--segment", type=int)
    p.add_argument("-k", type=int, default=10)
    p.set_defaults(func=cmd_similar)

    p = sub.add_parser("load-artifacts", help="load detection artifacts from a directory")
    p.add_argument("dir")
    p.set_defaults(func=cmd_load_artifacts)

    p = sub.add_parser("query", help="query the event index")
    p.add_argument("--label", action="append", required=True, metavar="LABEL[:MINCONF]")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--and", dest="use_or", action="store_false")
    group.add_argument("--or", dest="use_or", action="store_true")
    p.set_defaults(func=cmd_query, use_or=False)

    p = sub.add_parser("quickdetect", help="run heuristic detectors on an asset")
    p.add_argument("asset")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quickdetect)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except AvpError as exc:
        print(f"error: {exc.code}: {exc.detail}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
