"""Identity-retrieval evaluation at desk scale.

A dataset is a table of feature rows labelled with an identity, a camera,
and a split tag (train / query / gallery).  Retrieval ranks the gallery
by Euclidean distance to each query; scoring follows the usual
cross-camera protocol: gallery rows sharing BOTH the query's identity and
its camera are junk and dropped from that query's list, rank-r accuracy
is the fraction of queries whose first correct match appears within the
top r, and average precision is the mean of the precisions measured at
each correct hit.

The synthetic generator stands in for a real camera network: every
identity gets a latent center, every camera a shared affine distortion,
and samples are distorted centers plus isotropic noise.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, ValidationError
from .linalg import as_matrix, pairwise_sq_dist

SPLIT_TRAIN = "train"
SPLIT_QUERY = "query"
SPLIT_GALLERY = "gallery"
SPLITS = (SPLIT_TRAIN, SPLIT_QUERY, SPLIT_GALLERY)


@dataclass
class RetrievalDataset:
    """Labelled feature rows partitioned into train / query / gallery."""

    features: np.ndarray  # (n, d) float64
    ids: np.ndarray       # (n,) int64 identity labels
    cameras: np.ndarray   # (n,) int64 camera labels
    split: np.ndarray     # (n,) unicode, each one of SPLITS

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def _mask(self, tag: str) -> np.ndarray:
        return self.split == tag

    @property
    def train_features(self) -> np.ndarray:
        return self.features[self._mask(SPLIT_TRAIN)]

    @property
    def train_ids(self) -> np.ndarray:
        return self.ids[self._mask(SPLIT_TRAIN)]

    @property
    def query_features(self) -> np.ndarray:
        return self.features[self._mask(SPLIT_QUERY)]

    @property
    def query_ids(self) -> np.ndarray:
        return self.ids[self._mask(SPLIT_QUERY)]

    @property
    def query_cameras(self) -> np.ndarray:
        return self.cameras[self._mask(SPLIT_QUERY)]

    @property
    def gallery_features(self) -> np.ndarray:
        return self.features[self._mask(SPLIT_GALLERY)]

    @property
    def gallery_ids(self) -> np.ndarray:
        return self.ids[self._mask(SPLIT_GALLERY)]

    @property
    def gallery_cameras(self) -> np.ndarray:
        return self.cameras[self._mask(SPLIT_GALLERY)]

    def validate(self) -> "RetrievalDataset":
        """Check structural invariants; raises ValidationError on the first
        violation.  Every query identity must appear in the gallery under
        at least one different camera, otherwise it could never be matched
        after junk filtering."""
        self.features = as_matrix(self.features, "features")
        n = self.features.shape[0]
        for name, arr in (("ids", self.ids), ("cameras", self.cameras), ("split", self.split)):
            if np.asarray(arr).shape != (n,):
                raise ValidationError(f"{name} must have one entry per row, got {np.asarray(arr).shape}")
        bad = set(np.unique(self.split)) - set(SPLITS)
        if bad:
            raise ValidationError(f"unknown split tags {sorted(bad)}; expected one of {SPLITS}")
        g_ids, g_cams = self.gallery_ids, self.gallery_cameras
        for qid, qcam in zip(self.query_ids, self.query_cameras):
            if not np.any((g_ids == qid) & (g_cams != qcam)):
                raise ValidationError(
                    f"query identity {qid} (camera {qcam}) has no gallery sample under a different camera"
                )
        return self


@dataclass
class RankingReport:
    """Aggregate retrieval quality: the cumulative matching curve indexed
    by rank (1-based; entry r-1 is the rank-r accuracy), the mean average
    precision, per-query APs, and how many queries were dropped for having
    no valid positive."""

    cmc: np.ndarray
    map: float
    per_query_ap: np.ndarray
    excluded_queries: int = 0


def generate_synthetic(
    identities: int = 32,
    cameras: int = 4,
    samples_per_id_camera: int = 6,
    dim: int = 16,
    noise: float = 0.45,
    camera_scale: float = 0.5,
    seed: int = 0,
) -> RetrievalDataset:
    """Deterministic synthetic identity-retrieval benchmark.

    Each identity gets a latent center inside a random subspace of
    dimension ``dim // 2`` (at least 1), with per-axis standard deviations
    decaying geometrically (factor 0.75) and rescaled so the total center
    variance is ``dim``.  The decaying spectrum mirrors real descriptor
    statistics: a few strong identity attributes plus progressively
    subtler ones, shared by training and test identities alike.

    Camera c maps a center x to
    ``x @ (I + camera_scale * G_c / sqrt(dim)) + camera_scale * t_c``
    with G_c, t_c standard normal, shared by every identity seen by that
    camera; each sample then adds isotropic noise of the given scale.

    Half of the identities (rounded down) become the training split; for
    each remaining identity the first sample under every camera is a
    query and the rest are gallery, which guarantees every query has a
    cross-camera positive.
    """
    if identities < 2:
        raise ValidationError(f"need at least 2 identities, got {identities}")
    if cameras < 2:
        raise ValidationError(f"need at least 2 cameras, got {cameras}")
    if samples_per_id_camera < 2:
        raise ValidationError(
            "need at least 2 samples per identity-camera cell; with 1 the gallery "
            "would hold no cross-camera positives for any query"
        )
    if dim < 1:
        raise ValidationError(f"feature dimension must be >= 1, got {dim}")
    if noise < 0 or camera_scale < 0:
        raise ValidationError("noise and camera_scale must be non-negative")

    rng = np.random.default_rng(seed)
    rank = max(1, dim // 2)
    basis = np.linalg.qr(rng.normal(size=(dim, rank)))[0].T
    axis_sd = 0.75 ** np.arange(rank)
    latents = rng.normal(size=(identities, rank)) * axis_sd
    centers = latents @ basis * (np.sqrt(dim) / np.sqrt((axis_sd**2).sum()))
    cam_mats = np.eye(dim) + rng.normal(size=(cameras, dim, dim)) * (camera_scale / np.sqrt(dim))
    cam_shifts = rng.normal(size=(cameras, dim)) * camera_scale
    eps = rng.normal(size=(identities, cameras, samples_per_id_camera, dim)) * noise
    order = rng.permutation(identities)
    train_ids = set(order[: identities // 2].tolist())

    rows, ids, cams, split = [], [], [], []
    for i in range(identities):
        for c in range(cameras):
            base = centers[i] @ cam_mats[c] + cam_shifts[c]
            for s in range(samples_per_id_camera):
                rows.append(base + eps[i, c, s])
                ids.append(i)
                cams.append(c)
                if i in train_ids:
                    split.append(SPLIT_TRAIN)
                else:
                    split.append(SPLIT_QUERY if s == 0 else SPLIT_GALLERY)

    dataset = RetrievalDataset(
        features=np.asarray(rows, dtype=np.float64),
        ids=np.asarray(ids, dtype=np.int64),
        cameras=np.asarray(cams, dtype=np.int64),
        split=np.asarray(split),
    )
    return dataset.validate()


def rank_gallery(query_feats, gallery_feats) -> np.ndarray:
    """Per-query gallery indices in ascending Euclidean distance, ties
    broken by gallery index so the ordering is deterministic."""
    q = as_matrix(query_feats, "query_feats")
    g = as_matrix(gallery_feats, "gallery_feats")
    if q.shape[1] != g.shape[1]:
        raise ValidationError(f"feature dimensions differ: query {q.shape[1]} vs gallery {g.shape[1]}")
    return np.argsort(pairwise_sq_dist(q, g), axis=1, kind="stable")


def evaluate(dataset: RetrievalDataset, ranked) -> RankingReport:
    """Score ranked gallery lists against the dataset's labels.

    Junk rule: gallery rows with the query's identity AND the query's
    camera are removed from that query's list before scoring.  Queries
    left without a single positive are excluded (warning + count); they
    contribute to neither the curve nor the mean.
    """
    ranked = np.asarray(ranked)
    q_ids, q_cams = dataset.query_ids, dataset.query_cameras
    g_ids, g_cams = dataset.gallery_ids, dataset.gallery_cameras
    n_query, n_gallery = q_ids.shape[0], g_ids.shape[0]
    if ranked.shape != (n_query, n_gallery):
        raise ValidationError(f"ranked lists have shape {ranked.shape}, expected {(n_query, n_gallery)}")
    expected = np.arange(n_gallery)
    for qi in range(n_query):
        if not np.array_equal(np.sort(ranked[qi]), expected):
            raise ValidationError(f"ranked list for query {qi} is not a permutation of the gallery indices")

    first_hits: list[int] = []
    aps: list[float] = []
    excluded = 0
    for qi in range(n_query):
        order = ranked[qi]
        keep = ~((g_ids[order] == q_ids[qi]) & (g_cams[order] == q_cams[qi]))
        hits = g_ids[order][keep] == q_ids[qi]
        if not hits.any():
            excluded += 1
            continue
        first_hits.append(int(np.argmax(hits)))
        cum = np.cumsum(hits)
        positions = np.flatnonzero(hits)
        aps.append(float((cum[positions] / (positions + 1.0)).mean()))
    if excluded:
        warnings.warn(
            f"evaluate: {excluded} of {n_query} queries had no valid positive after junk filtering",
            stacklevel=2,
        )
    if not aps:
        raise DegeneracyError("evaluate: no query has a valid positive; nothing to score")

    counts = np.bincount(first_hits, minlength=n_gallery)
    cmc = np.cumsum(counts) / len(first_hits)
    per_query_ap = np.asarray(aps)
    return RankingReport(cmc=cmc, map=float(per_query_ap.mean()), per_query_ap=per_query_ap, excluded_queries=excluded)


def l2_normalize(feats) -> np.ndarray:
    """Row-wise unit normalization; zero rows are left untouched."""
    feats = as_matrix(feats, "feats")
    norms = np.linalg.norm(feats, axis=1, keepdims=True)
    return feats / np.where(norms == 0.0, 1.0, norms)


# Dataset CSV: header id,camera,split,f0..f{d-1}; floats via repr() so the
# round-trip is value-exact and the bytes are reproducible.
def save_dataset(dataset: RetrievalDataset, path) -> None:
    d = dataset.dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "camera", "split"] + [f"f{j}" for j in range(d)])
        for i in range(dataset.features.shape[0]):
            row = [int(dataset.ids[i]), int(dataset.cameras[i]), str(dataset.split[i])]
            row += [repr(float(v)) for v in dataset.features[i]]
            writer.writerow(row)


def load_dataset(path) -> RetrievalDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty dataset file") from None
        d = len(header) - 3
        if d < 1 or header[:3] != ["id", "camera", "split"] or header[3:] != [f"f{j}" for j in range(d)]:
            raise ValidationError(f"{path}: malformed header; expected id,camera,split,f0..f{{d-1}}")
        ids, cams, split, feats = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 3:
                raise ValidationError(f"{path}:{lineno}: expected {d + 3} fields, got {len(row)}")
            try:
                ids.append(int(row[0]))
                cams.append(int(row[1]))
                feats.append([float(v) for v in row[3:]])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            split.append(row[2])
    dataset = RetrievalDataset(
        features=np.asarray(feats, dtype=np.float64),
        ids=np.asarray(ids, dtype=np.int64),
        cameras=np.asarray(cams, dtype=np.int64),
        split=np.asarray(split),
    )
    return dataset.validate()


def write_report(report: RankingReport, path) -> None:
    """Report CSV: metric,value rows for the headline numbers followed by
    the full cumulative matching curve."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "value"])
        n = len(report.cmc)
        for r in (1, 5, 10):
            if r <= n:
                writer.writerow([f"rank{r}", repr(float(report.cmc[r - 1]))])
        writer.writerow(["map", repr(float(report.map))])
        writer.writerow(["valid_queries", len(report.per_query_ap)])
        writer.writerow(["excluded_queries", report.excluded_queries])
        for r in range(1, n + 1):
            writer.writerow([f"cmc{r}", repr(float(report.cmc[r - 1]))])


def format_report(report: RankingReport) -> str:
    """Human-readable summary table."""
    out = io.StringIO()
    n = len(report.cmc)
    out.write("rank   accuracy\n")
    for r in (1, 5, 10, 20):
        if r <= n:
            out.write(f"{r:>4}   {report.cmc[r - 1]:.4f}\n")
    out.write(f" mAP   {report.map:.4f}\n")
    out.write(f"queries scored: {len(report.per_query_ap)}, excluded: {report.excluded_queries}\n")
    return out.getvalue()
