"""Affinity matrices, symmetric decomposition, spectral clustering, 2-D embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class DegenerateInputError(ValueError):
    """Raised when input carries no usable structure (zero rows/variance)."""


Scorer = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True, slots=True)
class AffinityMatrix:
    """Dense pairwise score matrix over a trip set; asymmetric scorers allowed."""

    values: np.ndarray
    symmetric: bool

    @property
    def n(self) -> int:
        return self.values.shape[0]


def build_affinity(
    reps: Sequence[np.ndarray], scorer: Scorer, symmetric_scorer: bool = False
) -> AffinityMatrix:
    """Score every ordered pair of scaled trip representations.

    A[i, j] = scorer(reps[i], reps[j]). With symmetric_scorer=True only the
    upper triangle is evaluated (n(n+1)/2 calls) and mirrored; otherwise
    all n^2 entries are computed.
    """
    n = len(reps)
    if n < 2:
        raise ValueError("affinity needs at least two trips")
    values = np.empty((n, n), dtype=float)
    for i in range(n):
        for j in range(i if symmetric_scorer else 0, n):
            values[i, j] = scorer(reps[i], reps[j])
            if symmetric_scorer:
                values[j, i] = values[i, j]
    return AffinityMatrix(values, symmetric_scorer)


def sym_decompose(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Split A into symmetric and anti-symmetric parts.

    Returns (S, K, ratio) with S = (A + A^T)/2, K = (A - A^T)/2 and
    ratio = ||S||_F^2 / ||A||_F^2, the share of the matrix energy in the
    symmetric part. A = S + K and the Frobenius norms are orthogonal:
    ||A||^2 = ||S||^2 + ||K||^2.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    s = (a + a.T) / 2.0
    k = (a - a.T) / 2.0
    total = float((a * a).sum())
    ratio = float((s * s).sum()) / total if total > 0 else 1.0
    return s, k, ratio


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centers by squared-distance sampling."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = points[rng.integers(n)]
            continue
        centers[c] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(
    points: np.ndarray, centers: np.ndarray, max_iter: int
) -> tuple[np.ndarray, float]:
    """Lloyd iterations until assignments stabilize; returns labels and inertia."""
    k = centers.shape[0]
    labels = np.full(points.shape[0], -1)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members) > 0:
                centers[c] = members.mean(axis=0)
            else:
                # revive an empty cluster at the worst-served point
                centers[c] = points[d2.min(axis=1).argmax()]
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(points.shape[0]), labels].sum())
    return labels, inertia


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    n_restarts: int = 100,
    max_iter: int = 300,
) -> np.ndarray:
    """Seeded k-means with k-means++ restarts; keeps the lowest-inertia run."""
    if not 1 <= k <= points.shape[0]:
        raise ValueError(f"k must be in [1, {points.shape[0]}], got {k}")
    rng = np.random.default_rng(seed)
    best_labels: np.ndarray | None = None
    best_inertia = np.inf
    for _ in range(n_restarts):
        centers = _kmeans_pp_init(points, k, rng)
        labels, inertia = _lloyd(points, centers.copy(), max_iter)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
        if best_inertia == 0.0:
            break
    assert best_labels is not None
    return best_labels


def spectral_cluster(
    s: np.ndarray, k: int, seed: int, n_restarts: int = 100
) -> np.ndarray:
    """Normalized spectral clustering of a symmetric affinity matrix.

    Forms the symmetric normalized Laplacian L = I - D^{-1/2} S D^{-1/2},
    embeds each trip as its row in the k bottom eigenvectors (row-normalized),
    and runs seeded k-means on the embedding. Deterministic for a fixed seed.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    if s.ndim != 2 or s.shape[1] != n:
        raise ValueError("affinity must be square")
    if np.abs(s - s.T).max() > 1e-9:
        raise ValueError("affinity must be symmetric within 1e-9")
    if not 2 <= k <= n:
        raise ValueError(f"k must be in [2, {n}], got {k}")
    degrees = s.sum(axis=1)
    if np.any(degrees <= 0):
        raise DegenerateInputError("affinity has a zero-degree row")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    lap = np.eye(n) - inv_sqrt[:, None] * s * inv_sqrt[None, :]
    lap = (lap + lap.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(lap)
    embedding = eigvecs[:, np.argsort(eigvals)[:k]]
    norms = np.linalg.norm(embedding, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    embedding = embedding / norms
    return kmeans(embedding, k, seed, n_restarts=n_restarts)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Deterministic eigenvector orientation: largest component positive."""
    pivot = np.abs(v).argmax()
    return -v if v[pivot] < 0 else v


def _power_iteration(
    m: np.ndarray, rng: np.random.Generator, tol: float, max_iter: int = 50_000
) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a symmetric PSD matrix by power iteration."""
    scale = float(np.linalg.norm(m))
    if scale == 0.0:
        v = np.zeros(m.shape[0])
        v[0] = 1.0
        return 0.0, v
    v = rng.standard_normal(m.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        u = m @ v
        lam = float(v @ u)
        if np.linalg.norm(u - lam * v) <= tol * scale:
            break
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            return 0.0, v
        v = u / norm_u
    return lam, _fix_sign(v)


def pca_2d(
    points: np.ndarray, seed: int = 0, tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """Project points onto their first two principal components.

    Computes the top-2 eigenpairs of the covariance matrix by power
    iteration with deflation. Returns (coords, explained) where coords is
    (n, 2) and explained holds the two explained-variance ratios.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 3 or x.shape[1] < 2:
        raise ValueError("need an (n >= 3) x (d >= 2) point matrix")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    total_var = float(np.trace(cov))
    if total_var <= 0:
        raise DegenerateInputError("points have zero variance")
    rng = np.random.default_rng(seed)
    lam1, v1 = _power_iteration(cov, rng, tol)
    lam2, v2 = _power_iteration(cov - lam1 * np.outer(v1, v1), rng, tol)
    # re-orthogonalize against v1; deflation leaves a tiny residual
    v2 = v2 - (v2 @ v1) * v1
    norm2 = np.linalg.norm(v2)
    if norm2 > 0:
        v2 = v2 / norm2
    coords = centered @ np.column_stack([v1, v2])
    explained = np.array([max(lam1, 0.0), max(lam2, 0.0)]) / total_var
    return coords, explained


def mds_2d(d: np.ndarray) -> np.ndarray:
    """Classical (Torgerson) multidimensional scaling into 2 dimensions.

    Double-centers the squared distance matrix, takes the top-2 eigenpairs
    (negative eigenvalues clamp to zero), and scales the eigenvectors by
    sqrt(eigenvalue). Exact for distance matrices embeddable in the plane.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if d.ndim != 2 or d.shape[1] != n:
        raise ValueError("distance matrix must be square")
    if np.abs(d - d.T).max() > 1e-9:
        raise ValueError("distance matrix must be symmetric")
    if np.abs(np.diag(d)).max() > 1e-9:
        raise ValueError("distance matrix must have a zero diagonal")
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ (d * d) @ j
    b = (b + b.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1][:2]
    coords = np.zeros((n, 2))
    for axis, idx in enumerate(order):
        lam = max(float(eigvals[idx]), 0.0)
        coords[:, axis] = _fix_sign(eigvecs[:, idx]) * np.sqrt(lam)
    return coords
