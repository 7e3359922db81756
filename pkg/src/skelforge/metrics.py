"""Generative-quality metrics over recognizer embeddings.

All metrics are pure functions of (N, D) embedding matrices. Distances are
Euclidean; moment computations run in float64.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

log = logging.getLogger(__name__)


@dataclass
class EmbeddingSet:
    vectors: np.ndarray  # (N, D)
    labels: np.ndarray  # (N,)
    source: str = "real"

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a (N, D) matrix")
        if labels.shape != (vectors.shape[0],):
            raise ValueError("labels must match the number of vectors")
        if not np.isfinite(vectors).all():
            raise ValueError("embedding vectors contain non-finite values")
        self.vectors = vectors
        self.labels = labels

    def __len__(self) -> int:
        return len(self.vectors)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root; small negative eigenvalues clip to 0."""
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


_FID_REGULARIZER = 1e-6


def fid(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Frechet distance between Gaussian fits of the two embedding sets.

    ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}); the matrix square
    root is taken by eigendecomposition of the symmetrized product
    sqrt(S_a) S_b sqrt(S_a). Covariances are regularized with a small ridge
    when a set has fewer rows than dimensions.
    """
    if len(a) < 2 or len(b) < 2:
        raise ValueError("fid needs at least 2 embeddings per set")
    mu_a, mu_b = a.vectors.mean(axis=0), b.vectors.mean(axis=0)
    cov_a = np.cov(a.vectors, rowvar=False)
    cov_b = np.cov(b.vectors, rowvar=False)
    cov_a = np.atleast_2d(cov_a)
    cov_b = np.atleast_2d(cov_b)
    d = cov_a.shape[0]
    if len(a) < d:
        cov_a = cov_a + _FID_REGULARIZER * np.eye(d)
    if len(b) < d:
        cov_b = cov_b + _FID_REGULARIZER * np.eye(d)

    root_a = _psd_sqrt(cov_a)
    product = root_a @ cov_b @ root_a
    vals = np.linalg.eigvalsh(product)
    if not np.isfinite(vals).all():
        raise NumericError(f"fid cross-term eigenvalues are not finite: {vals}")
    trace_sqrt = float(np.sqrt(np.clip(vals, 0.0, None)).sum())
    value = float(
        np.sum((mu_a - mu_b) ** 2) + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_sqrt
    )
    if not np.isfinite(value):
        raise NumericError(f"fid evaluated to a non-finite value ({value})")
    return max(value, 0.0)


def _poly_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return (x @ y.T / d + 1.0) ** 3


def kid(a: EmbeddingSet, b: EmbeddingSet, block: int = 2048) -> tuple[float, float]:
    """Unbiased MMD^2 with the degree-3 polynomial kernel, plus a
    delete-one jackknife standard error.

    Within-set sums exclude the diagonal. Equal-size sets use the paired
    U-statistic (index-matched cross pairs excluded as well), so a set
    compared against an exact copy of itself evaluates to 0; small negative
    values on same-distribution sets are expected from unbiasedness.
    """
    x, y = a.vectors, b.vectors
    m, n = len(x), len(y)
    if m < 2 or n < 2:
        raise ValueError("kid needs at least 2 embeddings per set")

    def row_sums(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        sums = np.zeros(len(u))
        for s in range(0, len(u), block):
            chunk = _poly_kernel(u[s:s + block], v)
            sums[s:s + block] = chunk.sum(axis=1)
        return sums

    d = x.shape[1]
    diag_x = ((np.sum(x * x, axis=1) / d) + 1.0) ** 3
    diag_y = ((np.sum(y * y, axis=1) / d) + 1.0) ** 3
    rx = row_sums(x, x)
    ry = row_sums(y, y)
    cx = row_sums(x, y)  # cross sums per x row
    cy = row_sums(y, x)  # cross sums per y row

    s_xx = rx.sum() - diag_x.sum()
    s_yy = ry.sum() - diag_y.sum()
    xx_i = s_xx - 2.0 * (rx - diag_x)  # within-x sum after deleting x_i
    yy_j = s_yy - 2.0 * (ry - diag_y)

    if m == n:
        matched = ((np.sum(x * y, axis=1) / d) + 1.0) ** 3
        s_xy = cx.sum() - matched.sum()
        value = (s_xx + s_yy - 2.0 * s_xy) / (m * (m - 1))
        # jackknife deletes the pair (x_i, y_i)
        if m > 2:
            xy_i = s_xy - (cx - matched) - (cy - matched)
            theta = (xx_i + yy_j - 2.0 * xy_i) / ((m - 1) * (m - 2))
        else:
            theta = None
    else:
        s_xy = cx.sum()
        value = s_xx / (m * (m - 1)) + s_yy / (n * (n - 1)) - 2.0 * s_xy / (m * n)
        arms = []
        if m > 2:
            arms.append(
                xx_i / ((m - 1) * (m - 2))
                + s_yy / (n * (n - 1)) - 2.0 * (s_xy - cx) / ((m - 1) * n)
            )
        if n > 2:
            arms.append(
                s_xx / (m * (m - 1))
                + yy_j / ((n - 1) * (n - 2)) - 2.0 * (s_xy - cy) / (m * (n - 1))
            )
        theta = np.concatenate(arms) if arms else None
    if theta is None:
        return float(value), float("nan")
    total = len(theta)
    se = float(np.sqrt((total - 1) / total * np.sum((theta - theta.mean()) ** 2)))
    return float(value), se


def diversity(e: EmbeddingSet, num_pairs: int = 300, rng: np.random.Generator | None = None) -> float:
    """Mean L2 distance over random pairs of distinct indices."""
    if len(e) < 2:
        raise ValueError("diversity needs at least 2 embeddings")
    rng = rng or np.random.default_rng()
    i = rng.integers(0, len(e), size=num_pairs)
    j = rng.integers(0, len(e) - 1, size=num_pairs)
    j = np.where(j >= i, j + 1, j)  # distinct index per pair
    return float(np.linalg.norm(e.vectors[i] - e.vectors[j], axis=1).mean())


def _kth_neighbor_radii(points: np.ndarray, k: int) -> np.ndarray:
    d = np.linalg.norm(points[:, None] - points[None, :], axis=-1)
    return np.partition(d, k, axis=1)[:, k]  # k-th excluding self (self is 0th)


def precision_recall(real: EmbeddingSet, fake: EmbeddingSet, k: int = 3) -> tuple[float, float]:
    """k-NN manifold estimate of precision and recall.

    Precision: fraction of fake points inside the distance-to-kth-neighbor
    ball of at least one real point; recall swaps the roles.
    """
    if len(real) < k + 1 or len(fake) < k + 1:
        raise ValueError(f"both sets need at least {k + 1} points")
    radii_real = _kth_neighbor_radii(real.vectors, k)
    radii_fake = _kth_neighbor_radii(fake.vectors, k)
    cross = np.linalg.norm(real.vectors[:, None] - fake.vectors[None, :], axis=-1)
    precision = float((cross <= radii_real[:, None]).any(axis=0).mean())
    recall = float((cross <= radii_fake[None, :]).any(axis=1).mean())
    return precision, recall


def combine(a: EmbeddingSet, b: EmbeddingSet, source: str = "union") -> EmbeddingSet:
    return EmbeddingSet(
        vectors=np.concatenate([a.vectors, b.vectors], axis=0),
        labels=np.concatenate([a.labels, b.labels]),
        source=source,
    )


def full_report(
    real: EmbeddingSet,
    fake: EmbeddingSet,
    num_pairs: int = 300,
    k: int = 3,
    rng: np.random.Generator | None = None,
) -> dict:
    """All generative-quality numbers in one schema-conformant dict."""
    rng = rng or np.random.default_rng(0)
    kid_value, kid_se = kid(real, fake)
    precision, recall = precision_recall(real, fake, k=k)
    return {
        "fid": fid(real, fake),
        "kid": kid_value,
        "kid_se": kid_se,
        "diversity": diversity(fake, num_pairs=num_pairs, rng=rng),
        "precision": precision,
        "recall": recall,
        "within_class_cov_real": within_class_covariance(real),
        "within_class_cov_union": within_class_covariance(combine(real, fake)),
    }


def within_class_covariance(e: EmbeddingSet) -> float:
    """Trace of the per-class population covariance, averaged over classes.

    Classes with fewer than 2 members are excluded with a warning.
    """
    traces = []
    for label in np.unique(e.labels):
        members = e.vectors[e.labels == label]
        if len(members) < 2:
            log.warning("class %d has %d member(s); excluded from covariance", label, len(members))
            continue
        centered = members - members.mean(axis=0)
        traces.append(float(np.mean(np.sum(centered ** 2, axis=1))))
    if not traces:
        raise ValueError("no class has at least 2 members")
    return float(np.mean(traces))
