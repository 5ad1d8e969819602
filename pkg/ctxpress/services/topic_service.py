import logging
import math
import warnings
from typing import List

import numpy as np
from sklearn.cluster import MiniBatchKMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics import pairwise_distances_argmin_min

from ctxpress.core.errors import DegenerateInput, ZeroVector
from ctxpress.models.topics import TopicModel
from ctxpress.schemas.config import DEFAULT_SEED
from ctxpress.services.embedding_service import basis_vector, l2_normalize

logger = logging.getLogger(__name__)

BATCH_SIZE = 256
MAX_ITERS = 100
CENTER_TOLERANCE = 1e-4


def choose_k(n: int) -> int:
    """Square-root heuristic, rounded half up and clamped to [1, n]"""
    if n < 1:
        raise ValueError("choose_k needs at least one sentence")
    return min(max(int(math.floor(math.sqrt(n) + 0.5)), 1), n)


def _unit_centroids(matrix: np.ndarray, labels: np.ndarray, k: int):
    """Normalized member means and the inertia against the raw means"""
    centroids = np.zeros((k, matrix.shape[1]), dtype=np.float64)
    inertia = 0.0
    for cluster in range(k):
        members = matrix[labels == cluster]
        mean = members.mean(axis=0)
        inertia += float(((members - mean) ** 2).sum())
        try:
            centroids[cluster] = l2_normalize(mean)
        except ZeroVector:
            logger.warning("Cluster %d has a zero mean; using basis vector", cluster)
            centroids[cluster] = basis_vector(cluster, matrix.shape[1])
    return centroids, inertia


def _reseed_empty(matrix: np.ndarray, labels: np.ndarray, centers: np.ndarray, diagnostics: List[str]) -> np.ndarray:
    """Move the point farthest from its center into each empty cluster"""
    labels = labels.copy()
    centers = centers.copy()
    k = centers.shape[0]
    for cluster in range(k):
        if np.any(labels == cluster):
            continue
        sizes = np.bincount(labels, minlength=k)
        distances = ((matrix - centers[labels]) ** 2).sum(axis=1)
        distances[sizes[labels] < 2] = -np.inf
        point = int(np.argmax(distances))
        labels[point] = cluster
        centers[cluster] = matrix[point]
        diagnostics.append(f"reseeded:{cluster}")
    return labels


def _fit(matrix: np.ndarray, k: int, seed: int, batch_size: int, max_iters: int, diagnostics: List[str]) -> np.ndarray:
    if k > 1 and np.all(matrix == matrix[0]):
        raise DegenerateInput(f"All {matrix.shape[0]} embeddings are identical but K={k}")

    kmeans = MiniBatchKMeans(
        n_clusters=k,
        init="k-means++",
        n_init=1,
        batch_size=batch_size,
        max_iter=max_iters,
        tol=CENTER_TOLERANCE,
        reassignment_ratio=0.0,
        random_state=seed,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        kmeans.fit(matrix)
    for warning in caught:
        logger.debug("k-means: %s", warning.message)

    labels, _ = pairwise_distances_argmin_min(matrix, kmeans.cluster_centers_)
    return _reseed_empty(matrix, labels.astype(np.int64), kmeans.cluster_centers_, diagnostics)


def fit_minibatch_kmeans(
    embeddings,
    k: int,
    seed: int = DEFAULT_SEED,
    batch_size: int = BATCH_SIZE,
    max_iters: int = MAX_ITERS,
) -> TopicModel:
    """
    Cluster sentence embeddings into the topic skeleton

    Args:
        embeddings: Unit-norm rows, shape (N, d)
        k (int): Cluster count, 1 <= k <= N
        seed (int): k-means++ and minibatch sampling seed
        batch_size (int): Minibatch size
        max_iters (int): Iteration cap

    Returns:
        TopicModel: Labels, unit centroids and inertia. Identical inputs
            with K > 1 put every label on cluster 0 and mark the model
            "degenerate_input".
    """
    matrix = np.asarray(embeddings, dtype=np.float64)
    n = matrix.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"K={k} outside [1, {n}]")

    diagnostics: List[str] = []
    if k == 1:
        labels = np.zeros(n, dtype=np.int64)
    else:
        try:
            labels = _fit(matrix, k, seed, batch_size, max_iters, diagnostics)
        except DegenerateInput as e:
            logger.warning("[INFO] %s; assigning all sentences to cluster 0", e)
            centroid = l2_normalize(matrix[0])
            return TopicModel(
                K=k,
                assignment=np.zeros(n, dtype=np.int64),
                centroids=np.tile(centroid, (k, 1)),
                inertia=0.0,
                diagnostics=["degenerate_input"],
            )

    centroids, inertia = _unit_centroids(matrix, labels, k)
    return TopicModel(K=k, assignment=labels, centroids=centroids, inertia=inertia, diagnostics=diagnostics)


def representativeness(embedding, model: TopicModel, label: int) -> float:
    """
    Cosine to the sentence's own centroid, clamped to [0, 1]

    A cluster whose mean is zero has the basis vector e_(label mod d) as its
    centroid, so members score their own coordinate on that axis.
    """
    value = float(np.dot(np.asarray(embedding, dtype=np.float64), model.centroids[label]))
    return min(max(value, 0.0), 1.0)


def representativeness_scores(embeddings, model: TopicModel) -> np.ndarray:
    matrix = np.asarray(embeddings, dtype=np.float64)
    sims = np.einsum("ij,ij->i", matrix, model.centroids[model.assignment])
    return np.clip(sims, 0.0, 1.0)
