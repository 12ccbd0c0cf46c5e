"""Quantitative metrics: text-image similarity, character consistency, FID."""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from ..backends.base import EmbeddingBackend
from ..errors import DegenerateCovariance, EmptyInput, InsufficientCrops


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def _clamped_percent(cosine: float) -> float:
    # CLIP-score convention: negative similarities clamp to zero so the
    # percentage stays in [0, 100].
    return max(0.0, cosine) * 100.0


def tis(
    images: Sequence[np.ndarray],
    prompts: Sequence[str],
    embedder: EmbeddingBackend,
) -> float:
    """Mean cosine between image and prompt embeddings, as a percentage."""
    if len(images) != len(prompts):
        raise EmptyInput("images and prompts must pair up")
    if not images:
        raise EmptyInput("no image/prompt pairs")
    scores = [
        _clamped_percent(_cosine(embedder.embed(image), embedder.embed(prompt)))
        for image, prompt in zip(images, prompts)
    ]
    return float(np.mean(scores))


def ccs(
    character_crops: Mapping[str, Sequence[np.ndarray]],
    embedder: EmbeddingBackend,
) -> float:
    """Mean over characters of mean pairwise crop cosine, as a percentage."""
    if not character_crops:
        raise InsufficientCrops("no characters with crops")
    per_character: list[float] = []
    for character_id, crops in character_crops.items():
        if len(crops) < 2:
            raise InsufficientCrops(
                f"character {character_id!r} has {len(crops)} crop(s); need at least 2"
            )
        embeddings = [embedder.embed(crop) for crop in crops]
        pair_scores = [
            _clamped_percent(_cosine(embeddings[i], embeddings[j]))
            for i in range(len(embeddings))
            for j in range(i + 1, len(embeddings))
        ]
        per_character.append(float(np.mean(pair_scores)))
    return float(np.mean(per_character))


def _clamped_psd_eigenvalues(matrix: np.ndarray, tolerance: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues/vectors of a symmetric PSD-up-to-noise matrix.

    Negative eigenvalues within the (scaled) tolerance clamp to zero;
    anything beyond raises DegenerateCovariance.
    """
    symmetric = (matrix + matrix.T) / 2.0
    values, vectors = scipy.linalg.eigh(symmetric)
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    worst = float(values.min(initial=0.0))
    if worst < -tolerance * scale:
        raise DegenerateCovariance(
            f"negative eigenvalue {worst:.3e} beyond tolerance {tolerance:.0e}"
        )
    return np.clip(values, 0.0, None), vectors


def fid(
    features_a: np.ndarray | Sequence[np.ndarray],
    features_b: np.ndarray | Sequence[np.ndarray],
    eigenvalue_tolerance: float = 1e-8,
) -> float:
    """Fréchet distance between Gaussian fits of two feature sets.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), with unbiased
    covariance estimates. The cross term uses the symmetric form
    Tr((S_b^(1/2) S_a S_b^(1/2))^(1/2)), which stays real on the
    rank-deficient covariances small sample sets produce; negative
    eigenvalues are clamped within the tolerance and raise beyond it.
    """
    a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise EmptyInput("each feature set needs at least 2 vectors")
    if a.shape[1] != b.shape[1]:
        raise EmptyInput("feature widths differ")

    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    sigma_a = np.atleast_2d(np.cov(a, rowvar=False, ddof=1))
    sigma_b = np.atleast_2d(np.cov(b, rowvar=False, ddof=1))

    b_values, b_vectors = _clamped_psd_eigenvalues(sigma_b, eigenvalue_tolerance)
    sqrt_b = (b_vectors * np.sqrt(b_values)) @ b_vectors.T
    inner_values, _ = _clamped_psd_eigenvalues(
        sqrt_b @ sigma_a @ sqrt_b, eigenvalue_tolerance
    )
    trace_sqrt = float(np.sqrt(inner_values).sum())

    trace_term = float(np.trace(sigma_a) + np.trace(sigma_b)) - 2.0 * trace_sqrt
    if trace_term < 0.0:
        if trace_term < -eigenvalue_tolerance * max(
            1.0, float(np.trace(sigma_a) + np.trace(sigma_b))
        ):
            raise DegenerateCovariance(f"negative trace term {trace_term:.3e}")
        trace_term = 0.0
    diff = mu_a - mu_b
    return float(diff @ diff + trace_term)


FeatureExtractor = Callable[[np.ndarray], np.ndarray]


def extract_features(
    images: Sequence[np.ndarray], extractor: FeatureExtractor
) -> np.ndarray:
    if not images:
        raise EmptyInput("no images to extract features from")
    return np.stack([np.asarray(extractor(image), dtype=np.float64) for image in images])
