"""Command-line interface.

Exit codes: 0 success, 1 runtime/numeric failure, 2 usage or input-parse
error. All outputs use fixed float formats and fixed orderings, so a given
configuration and input always produce byte-identical results. The env var
TONELAB_THREADS caps internal worker threads.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import __version__
from . import cluster as clustering
from . import dialect as dialectmod
from . import learn
from . import pitch as pitchmod
from . import tones
from .errors import InputError, ToneLabError


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _add_f0_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("F0 extraction")
    group.add_argument("--fmin", type=float, default=pitchmod.F0_FLOOR_HZ,
                       help="lowest admissible F0 in Hz (default %(default)s)")
    group.add_argument("--fmax", type=float, default=pitchmod.F0_CEIL_HZ,
                       help="highest admissible F0 in Hz (default %(default)s)")
    group.add_argument("--frame-ms", type=float, default=pitchmod.DEFAULT_FRAME_MS,
                       help="analysis frame length in ms (default %(default)s)")
    group.add_argument("--hop-ms", type=float, default=pitchmod.DEFAULT_HOP_MS,
                       help="hop between frames in ms (default %(default)s)")
    group.add_argument("--yin-threshold", type=float, default=pitchmod.DEFAULT_YIN_THRESHOLD,
                       help="voicing dip threshold (default %(default)s)")


def _f0_options(args: argparse.Namespace) -> dict:
    return {
        "fmin": args.fmin,
        "fmax": args.fmax,
        "frame_ms": args.frame_ms,
        "hop_ms": args.hop_ms,
        "threshold": args.yin_threshold,
    }


def _read_token_file(path: str) -> list[tones.Transcription]:
    if not os.path.exists(path):
        raise InputError(f"token file not found: {path}")
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            token = line.strip()
            if not token:
                continue
            try:
                out.append(tones.parse_transcription(token))
            except InputError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise InputError(f"token file {path} contains no tokens")
    return out


def _cmd_dist(args: argparse.Namespace) -> int:
    if args.matrix:
        _emit(tones.tone_distance_database().to_csv(), args.out)
        return 0
    if args.tokens_file:
        matrix = tones.build_distance_matrix(_read_token_file(args.tokens_file))
        _emit(matrix.to_csv(), args.out)
        return 0
    if len(args.tokens) != 2:
        raise InputError("provide two transcription tokens, --tokens-file, or --matrix")
    l1 = tones.parse_transcription(args.tokens[0])
    l2 = tones.parse_transcription(args.tokens[1])
    _emit(f"{tones.tone_distance(l1, l2):.6f}\n", args.out)
    return 0


def _cmd_variance(args: argparse.Namespace) -> int:
    l1 = tones.parse_transcription(args.token1)
    l2 = tones.parse_transcription(args.token2)
    sys.stdout.write(f"{tones.variance_metric(l1, l2):.4f}\n")
    return 0


def _cmd_transcribe(args: argparse.Namespace) -> int:
    clip = pitchmod.read_wav(args.wav)
    track = pitchmod.extract_f0(clip, **_f0_options(args))
    if args.f0_csv:
        track.to_csv(args.f0_csv)
    if args.method == "f0":
        triple = pitchmod.f0_baseline_triple(track)
    else:
        if not args.model:
            raise InputError("--model is required with --method model")
        model = learn.LinearToneModel.load(args.model)
        feature = pitchmod.contour_feature(track, k=model.n_features)
        triple = learn.embed(model, feature)
    result = learn.decode_transcription(triple, args.beta)
    if args.json:
        payload = {
            "beta": args.beta,
            "linearity_margin": round(learn.linearity_margin(triple), 6),
            "method": args.method,
            "transcription": result.token,
            "triple": [round(v, 6) for v in triple],
        }
        sys.stdout.write(_json_text(payload))
    else:
        sys.stdout.write(result.token + "\n")
    return 0


def _read_training_manifest(path: str) -> list[tuple[str, tones.Transcription]]:
    if not os.path.exists(path):
        raise InputError(f"manifest not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows:
        raise InputError(f"empty manifest: {path}")
    header = tuple(cell.strip() for cell in rows[0])
    if header != ("wav_path", "transcription"):
        raise InputError(
            f"{path}: expected header ['wav_path', 'transcription'], got {list(header)}"
        )
    base = os.path.dirname(os.path.abspath(path))
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 columns")
        wav_path, token = (cell.strip() for cell in row)
        try:
            label = tones.parse_transcription(token)
        except InputError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if not os.path.isabs(wav_path):
            wav_path = os.path.join(base, wav_path)
        out.append((wav_path, label))
    if not out:
        raise InputError(f"manifest {path} lists no clips")
    return out


def _cmd_train(args: argparse.Namespace) -> int:
    manifest = _read_training_manifest(args.data)
    f0_options = _f0_options(args)
    data = []
    for wav_path, label in manifest:
        clip = pitchmod.read_wav(wav_path)
        track = pitchmod.extract_f0(clip, **f0_options)
        data.append((pitchmod.contour_feature(track, k=args.feature_points), label))
    model = learn.train_tone_model(
        data, lr=args.lr, epochs=args.epochs, seed=args.seed, l2=args.l2
    )
    model.save(args.out)
    hits = sum(
        1 for (feature, label) in data
        if learn.decode_transcription(learn.embed(model, feature), args.beta) == label
    )
    summary = {
        "clips": len(data),
        "epochs": args.epochs,
        "final_loss": round(model.loss_history[-1], 6) if model.loss_history else None,
        "initial_loss": round(model.loss_history[0], 6) if model.loss_history else None,
        "model": args.out,
        "seed": args.seed,
        "train_accuracy": round(hits / len(data), 6),
    }
    sys.stdout.write(_json_text(summary))
    return 0


def _collect_wavs(args: argparse.Namespace) -> list[str]:
    paths = list(args.wavs)
    if args.wav_list:
        if not os.path.exists(args.wav_list):
            raise InputError(f"wav list not found: {args.wav_list}")
        base = os.path.dirname(os.path.abspath(args.wav_list))
        with open(args.wav_list, "r", encoding="utf-8") as fh:
            for line in fh:
                p = line.strip()
                if not p:
                    continue
                paths.append(p if os.path.isabs(p) else os.path.join(base, p))
    if not paths:
        raise InputError("no WAV files given (pass paths or --wav-list)")
    return paths


def _cmd_cluster_tones(args: argparse.Namespace) -> int:
    paths = _collect_wavs(args)
    model = learn.LinearToneModel.load(args.model)
    clips = [pitchmod.read_wav(p) for p in paths]
    result = dialectmod.tone_clustering_pipeline(
        clips, model, eps=args.eps, min_samples=args.min_samples,
        beta=args.beta, **_f0_options(args),
    )
    names = [os.path.basename(p) for p in paths]
    payload = {
        "categories": [
            {"cluster": cid, "representative": rep.token,
             "size": sum(1 for l in result.assignment.labels if l == cid)}
            for cid, rep in result.categories
        ],
        "eps": args.eps,
        "min_samples": args.min_samples,
        "n_categories": result.n_categories,
        "noise": [names[i] for i in result.noise],
    }
    sys.stdout.write(_json_text(payload))
    if args.out_csv:
        result.assignment.to_csv(names, args.out_csv)
    return 0


def _cmd_dialect_cluster(args: argparse.Namespace) -> int:
    corpus = dialectmod.load_corpus(args.corpus, args.gold)
    report = dialectmod.dialect_cluster_pipeline(corpus, metric=args.metric,
                                                 linkage=args.linkage)
    sys.stdout.write(_json_text(report))
    if args.out_csv:
        linkage_names = sorted(report["linkages"])
        lines = ["region," + ",".join(linkage_names)]
        for region in corpus.region_ids:
            row = [str(report["linkages"][name]["labels"][region]) for name in linkage_names]
            lines.append(region + "," + ",".join(row))
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _cmd_dialect_mds(args: argparse.Namespace) -> int:
    corpus = dialectmod.load_corpus(args.corpus)
    if args.dims == 1:
        embedding = dialectmod.dialect_variance_map(corpus, metric=args.metric)
        text = clustering.mds_to_csv(embedding.region_ids, embedding.coords[:, None])
    else:
        matrix, _ = dialectmod.region_distance_matrix(corpus, metric=args.metric)
        coords = clustering.classical_mds(matrix, dims=args.dims)
        text = clustering.mds_to_csv(matrix.labels, coords)
    _emit(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tonelab",
        description="Tone transcription distances, automatic transcription, "
                    "and cross-dialect tone analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="distance between tone transcriptions")
    p.add_argument("tokens", nargs="*", help="two transcription tokens, e.g. 41 312")
    p.add_argument("--tokens-file", help="file with one transcription token per line")
    p.add_argument("--matrix", action="store_true",
                   help="write the precomputed all-transcriptions distance matrix")
    p.add_argument("-o", "--out", help="write output to this file instead of stdout")
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("variance", help="relative-pitch variance between two transcriptions")
    p.add_argument("token1")
    p.add_argument("token2")
    p.set_defaults(func=_cmd_variance)

    p = sub.add_parser("transcribe", help="transcribe a single-syllable WAV file")
    p.add_argument("wav")
    p.add_argument("--method", choices=("f0", "model"), default="f0")
    p.add_argument("--model", help="model JSON file (required for --method model)")
    p.add_argument("--beta", type=float, default=learn.DEFAULT_BETA,
                   help="linearity threshold for the decoder (default %(default)s)")
    p.add_argument("--json", action="store_true",
                   help="print JSON with the pitch triple and linearity margin")
    p.add_argument("--f0-csv", help="also write the F0 track to this CSV file")
    _add_f0_options(p)
    p.set_defaults(func=_cmd_transcribe)

    p = sub.add_parser("train", help="train a contour-to-transcription model")
    p.add_argument("--data", required=True,
                   help="TSV manifest with header: wav_path, transcription")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--lr", type=float, default=0.002)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=learn.DEFAULT_BETA,
                   help="decoder threshold used for the training-accuracy report")
    p.add_argument("--feature-points", type=int, default=pitchmod.DEFAULT_FEATURE_POINTS,
                   help="contour feature length K (default %(default)s)")
    _add_f0_options(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("cluster-tones", help="discover tone categories from WAV clips")
    p.add_argument("wavs", nargs="*", help="WAV files")
    p.add_argument("--wav-list", help="file with one WAV path per line")
    p.add_argument("--model", required=True)
    p.add_argument("--eps", type=float, default=0.6)
    p.add_argument("--min-samples", type=int, default=4)
    p.add_argument("--beta", type=float, default=learn.DEFAULT_BETA)
    p.add_argument("--out-csv", help="write per-clip cluster labels to this CSV")
    _add_f0_options(p)
    p.set_defaults(func=_cmd_cluster_tones)

    p = sub.add_parser("dialect-cluster", help="cluster dialect regions from a corpus")
    p.add_argument("--corpus", required=True,
                   help="TSV with header: region, word_id, transcription")
    p.add_argument("--gold", help="TSV with header: region, gold_label")
    p.add_argument("--metric", choices=dialectmod.METRICS, default="tone2vec")
    p.add_argument("--linkage", default="mv",
                   choices=(*clustering.LINKAGES, "all"))
    p.add_argument("--out-csv", help="write region labels to this CSV")
    p.set_defaults(func=_cmd_dialect_cluster)

    p = sub.add_parser("dialect-mds", help="embed dialect regions on a variance scale")
    p.add_argument("--corpus", required=True)
    p.add_argument("--metric", choices=dialectmod.METRICS, default="tone2vec")
    p.add_argument("--dims", type=int, choices=(1, 2), default=1)
    p.add_argument("-o", "--out", help="write CSV to this file instead of stdout")
    p.set_defaults(func=_cmd_dialect_mds)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"tonelab: error: {exc}", file=sys.stderr)
        return 2
    except ToneLabError as exc:
        print(f"tonelab: failure: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())
