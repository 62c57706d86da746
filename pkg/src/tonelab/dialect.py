"""Corpus ingestion and the cross-dialect analysis pipelines."""
from __future__ import annotations

import csv
import os
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import cluster as clustering
from . import learn
from . import pitch as pitchmod
from .cluster import ClusterAssignment, LINKAGES, NOISE
from .errors import CorpusError, InputError
from .tones import (
    DistanceMatrix,
    Transcription,
    categorical_distance,
    parse_transcription,
    tone_distance,
)

METRICS = ("tone2vec", "categorical")

_CORPUS_HEADER = ("region", "word_id", "transcription")
_GOLD_HEADER = ("region", "gold_label")


@dataclass(frozen=True)
class RegionLexicon:
    """One dialect region's transcriptions for a survey word list."""

    region_id: str
    entries: dict[str, Transcription]

    def __post_init__(self) -> None:
        if not self.entries:
            raise CorpusError(f"region {self.region_id!r} has no entries")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class DialectCorpus:
    regions: tuple[RegionLexicon, ...]
    gold_cluster: dict[str, int] | None = None

    def __post_init__(self) -> None:
        if self.gold_cluster is not None:
            missing = [r.region_id for r in self.regions if r.region_id not in self.gold_cluster]
            if missing:
                raise CorpusError(f"gold labels missing for regions: {missing}")

    @property
    def region_ids(self) -> tuple[str, ...]:
        return tuple(r.region_id for r in self.regions)

    def gold_labels(self) -> list[int] | None:
        if self.gold_cluster is None:
            return None
        return [self.gold_cluster[r] for r in self.region_ids]


def _read_tsv(path: str | os.PathLike, expected_header: tuple[str, ...]):
    if not os.path.exists(path):
        raise CorpusError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows:
        raise CorpusError(f"empty file: {path}")
    header = tuple(cell.strip() for cell in rows[0])
    if header != expected_header:
        raise CorpusError(
            f"{path}: expected header {list(expected_header)}, got {list(header)}"
        )
    if len(rows) == 1:
        raise CorpusError(f"{path}: no data rows")
    return rows[1:]


def load_corpus(path: str | os.PathLike,
                gold_path: str | os.PathLike | None = None) -> DialectCorpus:
    """Load a TSV corpus (region, word_id, transcription) and optional gold labels.

    Rows with invalid transcription tokens are rejected with their line number;
    duplicate (region, word_id) pairs are an error.
    """
    rows = _read_tsv(path, _CORPUS_HEADER)
    lexicons: dict[str, dict[str, Transcription]] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise CorpusError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        region, word_id, token = (cell.strip() for cell in row)
        if not region or not word_id:
            raise CorpusError(f"{path}:{lineno}: empty region or word_id")
        try:
            t = parse_transcription(token)
        except InputError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
        entries = lexicons.setdefault(region, {})
        if word_id in entries:
            raise CorpusError(f"{path}:{lineno}: duplicate entry ({region}, {word_id})")
        entries[word_id] = t

    gold = None
    if gold_path is not None:
        gold = {}
        for lineno, row in enumerate(_read_tsv(gold_path, _GOLD_HEADER), start=2):
            if len(row) != 2:
                raise CorpusError(f"{gold_path}:{lineno}: expected 2 columns")
            region, label = (cell.strip() for cell in row)
            if label not in ("0", "1"):
                raise CorpusError(f"{gold_path}:{lineno}: gold label must be 0 or 1, got {label!r}")
            if region in gold:
                raise CorpusError(f"{gold_path}:{lineno}: duplicate gold region {region!r}")
            gold[region] = int(label)

    regions = tuple(RegionLexicon(rid, entries) for rid, entries in lexicons.items())
    return DialectCorpus(regions, gold)


def _metric_fn(metric: str) -> Callable[[Transcription, Transcription], float]:
    if metric == "tone2vec":
        return tone_distance
    if metric == "categorical":
        return categorical_distance
    raise InputError(f"unknown metric {metric!r}; choose one of {METRICS}")


def region_distance(a: RegionLexicon, b: RegionLexicon, metric: str = "tone2vec") -> float:
    """Mean transcription distance over the word ids shared by two regions."""
    fn = _metric_fn(metric)
    shared = sorted(a.entries.keys() & b.entries.keys())
    if not shared:
        raise CorpusError(
            f"regions {a.region_id!r} and {b.region_id!r} share no word ids"
        )
    return sum(fn(a.entries[w], b.entries[w]) for w in shared) / len(shared)


def region_distance_matrix(corpus: DialectCorpus, metric: str = "tone2vec"
                           ) -> tuple[DistanceMatrix, list[str]]:
    """Pairwise region distances plus warnings for skipped unshared words."""
    regions = corpus.regions
    if len(regions) < 2:
        raise InputError("pairwise analysis needs at least 2 regions")
    n = len(regions)
    values = np.zeros((n, n))
    warnings = []
    for i in range(n):
        for j in range(i + 1, n):
            a, b = regions[i], regions[j]
            d = region_distance(a, b, metric)
            values[i, j] = values[j, i] = d
            skipped = len(a.entries.keys() ^ b.entries.keys())
            if skipped:
                warnings.append(
                    f"{a.region_id}/{b.region_id}: skipped {skipped} unshared word(s)"
                )
    return DistanceMatrix(corpus.region_ids, values), warnings


def dialect_cluster_pipeline(corpus: DialectCorpus, metric: str = "tone2vec",
                             linkage: str = "mv") -> dict:
    """Cluster regions into two groups and score against gold labels if present.

    ``linkage="all"`` runs all seven linkage methods and reports each.
    Returns a JSON-ready dict: metric, k, per-linkage labels and accuracy,
    and coverage warnings.
    """
    if len(corpus.regions) < 3:
        raise InputError("dialect clustering needs at least 3 regions")
    names = LINKAGES if linkage == "all" else (linkage,)
    for name in names:
        if name not in LINKAGES:
            raise InputError(f"unknown linkage {name!r}; choose one of {LINKAGES} or 'all'")
    matrix, warnings = region_distance_matrix(corpus, metric)
    gold = corpus.gold_labels()

    results = {}
    for name in names:
        dendrogram = clustering.hierarchical_cluster(matrix, name)
        assignment = clustering.cut_tree(dendrogram, 2)
        accuracy = None
        if gold is not None:
            accuracy = clustering.two_cluster_accuracy(assignment, gold)
        results[name] = {
            "labels": dict(zip(corpus.region_ids, assignment.labels)),
            "accuracy": accuracy,
        }
    return {
        "metric": metric,
        "k": 2,
        "linkages": results,
        "coverage_warnings": warnings,
    }


@dataclass(frozen=True)
class Embedding1D:
    """One MDS coordinate per region; defined up to sign and translation."""

    region_ids: tuple[str, ...]
    coords: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.coords, dtype=float).reshape(-1)
        object.__setattr__(self, "coords", arr)
        if len(arr) != len(self.region_ids):
            raise InputError("coordinate count does not match region count")
        if not np.all(np.isfinite(arr)):
            raise InputError("embedding coordinates must be finite")


def dialect_variance_map(corpus: DialectCorpus, metric: str = "tone2vec") -> Embedding1D:
    """1-D MDS embedding of the region distance matrix."""
    matrix, _ = region_distance_matrix(corpus, metric)
    coords = clustering.classical_mds(matrix, dims=1)
    return Embedding1D(corpus.region_ids, coords[:, 0])


@dataclass(frozen=True)
class ToneClusteringResult:
    """Discovered tone categories for a set of single-syllable clips."""

    assignment: ClusterAssignment
    decoded: tuple[Transcription, ...]
    categories: tuple[tuple[int, Transcription], ...]  # (cluster id, representative)
    noise: tuple[int, ...]

    @property
    def n_categories(self) -> int:
        return len(self.categories)


def _modal_transcription(candidates: Sequence[Transcription]) -> Transcription:
    counts = Counter(t.digits for t in candidates)
    best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Transcription(best[0])


def tone_clustering_pipeline(
    clips: Sequence[pitchmod.AudioClip],
    model: learn.LinearToneModel,
    eps: float = 0.6,
    min_samples: int = 4,
    *,
    beta: float = learn.DEFAULT_BETA,
    **f0_options,
) -> ToneClusteringResult:
    """Discover a dialect's tone categories from raw clips.

    Each clip is embedded as a pitch triple, the triples are density-
    clustered, and each cluster is named by the modal decoded transcription
    of its members (ties resolve to the smallest transcription). An all-noise
    result reports zero categories, not an error; in particular, fewer than
    min_samples clips are all noise.
    """
    if len(clips) == 0:
        raise InputError("tone clustering needs at least one clip")
    triples = []
    decoded = []
    for clip in clips:
        track = pitchmod.extract_f0(clip, **f0_options)
        feature = pitchmod.contour_feature(track, k=model.n_features)
        z = learn.embed(model, feature)
        triples.append(z)
        decoded.append(learn.decode_transcription(z, beta))

    assignment = clustering.dbscan(np.array(triples), eps, min_samples)
    categories = []
    for cid in sorted(set(assignment.labels) - {NOISE}):
        members = [decoded[i] for i, l in enumerate(assignment.labels) if l == cid]
        categories.append((cid, _modal_transcription(members)))
    noise = tuple(i for i, l in enumerate(assignment.labels) if l == NOISE)
    return ToneClusteringResult(assignment, tuple(decoded), tuple(categories), noise)
