"""Per-frame visual descriptors: census-transform histograms (holistic scene
structure), pyramid edge-orientation histograms (local shape), and the
per-corpus PCA that compresses their concatenation to a working feature space.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ConfigurationError, DegenerateInputError, InsufficientDataError, ShapeError
from .ingest import Frame

CENSUS_BINS = 256


@dataclass
class DescriptorConfig:
    centrist_levels: int = 2
    phog_levels: int = 3
    phog_bins: int = 9
    phog_angle_range: int = 180
    n_components: int = 100

    def __post_init__(self):
        for name in ("centrist_levels", "phog_levels", "phog_bins", "n_components"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.phog_angle_range not in (180, 360):
            raise ConfigurationError("phog_angle_range must be 180 or 360")


@dataclass
class Descriptor:
    frame_id: int
    vector: np.ndarray


@dataclass
class PcaModel:
    """Mean and orthonormal principal axes of one corpus's raw descriptors."""

    mean: np.ndarray
    components: np.ndarray  # (n_components, raw_length)
    n_components: int
    explained_variance: np.ndarray

    @property
    def raw_length(self) -> int:
        return self.mean.shape[0]


def census_transform(pixels: np.ndarray) -> np.ndarray:
    """8-bit census codes for every interior pixel.

    Each of the 8 neighbors, visited in raster order, contributes bit 0 when
    the center is less than that neighbor and bit 1 otherwise (ties count as
    1); the first neighbor lands in the most significant bit. Output shape is
    (h-2, w-2).
    """
    if pixels.shape[0] < 3 or pixels.shape[1] < 3:
        raise DegenerateInputError(f"census transform needs at least 3x3, got {pixels.shape}")
    h, w = pixels.shape
    center = pixels[1 : h - 1, 1 : w - 1]
    codes = np.zeros((h - 2, w - 2), dtype=np.uint8)
    for dy in range(3):
        for dx in range(3):
            if dy == 1 and dx == 1:
                continue
            neighbor = pixels[dy : dy + h - 2, dx : dx + w - 2]
            codes = (codes << 1) | (center >= neighbor)
    return codes


def _grid_bounds(extent: int, cells: int) -> list[int]:
    return [round(extent * i / cells) for i in range(cells + 1)]


def _block_spans(h: int, w: int, levels: int) -> list[tuple[int, int, int, int]]:
    spans = []
    for level in range(levels):
        cells = 2**level
        row_bounds = _grid_bounds(h, cells)
        col_bounds = _grid_bounds(w, cells)
        for r in range(cells):
            for c in range(cells):
                r0, r1 = row_bounds[r], row_bounds[r + 1]
                c0, c1 = col_bounds[c], col_bounds[c + 1]
                if r1 - r0 < 3 or c1 - c0 < 3:
                    raise ConfigurationError(
                        f"centrist level {level} block {r1 - r0}x{c1 - c0} is smaller than 3x3"
                    )
                spans.append((r0, r1, c0, c1))
    return spans


def centrist(pixels: np.ndarray, levels: int) -> np.ndarray:
    """Spatial-pyramid histogram of census values.

    Level L splits the image into 2^L x 2^L non-overlapping blocks; each
    block yields an independent 256-bin histogram of its own census codes,
    L1-normalized per block. All blocks of all levels are concatenated.
    """
    # Census at a pixel depends only on its 3x3 neighborhood, so a block's
    # own census equals the full-image census restricted to its interior.
    codes = census_transform(pixels)
    h, w = pixels.shape
    chunks = []
    for r0, r1, c0, c1 in _block_spans(h, w, levels):
        region = codes[r0 : r1 - 2, c0 : c1 - 2]
        hist = np.bincount(region.ravel(), minlength=CENSUS_BINS).astype(np.float64)
        chunks.append(hist / hist.sum())
    return np.concatenate(chunks)


def phog(pixels: np.ndarray, levels: int, bins: int, angle_range: int) -> np.ndarray:
    """Pyramid histogram of edge orientations, magnitude-weighted.

    Gradients come from a 3x3 Sobel; edge pixels from Canny with hysteresis
    thresholds fixed relative to the strongest gradient (high = 0.2 * max,
    low = half of high). Orientation is the edge line's angle (a vertical
    step edge reads 90 degrees), folded into [0, angle_range). Region
    histograms over the 2^L x 2^L grids are concatenated and the whole
    vector is L1-normalized; an edgeless image yields the zero vector.
    """
    if angle_range not in (180, 360):
        raise ConfigurationError("angle_range must be 180 or 360")
    h, w = pixels.shape
    total_dims = sum((2**level) ** 2 for level in range(levels)) * bins

    # one-pass 3x3 Sobel; 8-bit input keeps gradients within +-1020, so the
    # int32 squared magnitudes are exact
    gx, gy = cv2.spatialGradient(pixels)
    squared = gx.astype(np.int32) ** 2 + gy.astype(np.int32) ** 2
    peak_squared = int(squared.max())
    if peak_squared == 0:
        return np.zeros(total_dims)

    high = 0.2 * float(np.sqrt(peak_squared))
    edges = cv2.Canny(pixels, high / 2.0, high, L2gradient=True)
    ys, xs = np.nonzero(edges)
    if ys.size == 0:
        return np.zeros(total_dims)

    angles = np.degrees(np.arctan2(gy[ys, xs].astype(np.float64), gx[ys, xs].astype(np.float64)))
    angles = np.mod(angles + 90.0, float(angle_range))
    bin_idx = np.minimum((angles / (angle_range / bins)).astype(np.intp), bins - 1)
    weights = np.sqrt(squared[ys, xs].astype(np.float64))

    chunks = []
    for level in range(levels):
        cells = 2**level
        region_row = (ys * cells) // h
        region_col = (xs * cells) // w
        flat = (region_row * cells + region_col) * bins + bin_idx
        chunks.append(np.bincount(flat, weights=weights, minlength=cells * cells * bins))
    vector = np.concatenate(chunks)
    total = vector.sum()
    return vector / total if total > 0 else vector


def fit_pca(raw_vectors: list[np.ndarray], n_components: int) -> PcaModel:
    """Fit mean-centered principal components by SVD.

    The effective dimensionality is min(n_components, n_vectors - 1,
    raw_length). Components come out ordered by descending explained
    variance, each with its largest-magnitude entry forced non-negative so
    repeated fits are bit-identical.
    """
    if len(raw_vectors) < 2:
        raise InsufficientDataError(f"PCA needs at least 2 vectors, got {len(raw_vectors)}")
    matrix = np.asarray(raw_vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError("raw vectors must all have the same length")
    n, raw_length = matrix.shape
    effective = min(n_components, n - 1, raw_length)

    mean = matrix.mean(axis=0)
    centered = matrix - mean
    if raw_length > n:
        # wide matrices factor faster through their transpose; the right
        # singular vectors of X are the left singular vectors of X^T
        u, singular, _ = np.linalg.svd(centered.T, full_matrices=False)
        components = u[:, :effective].T.copy()
    else:
        _, singular, vt = np.linalg.svd(centered, full_matrices=False)
        components = vt[:effective].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    explained = (singular[:effective] ** 2) / (n - 1)
    return PcaModel(
        mean=mean,
        components=components,
        n_components=effective,
        explained_variance=explained,
    )


def project(model: PcaModel, raw_vector: np.ndarray) -> np.ndarray:
    if raw_vector.shape != model.mean.shape:
        raise ShapeError(
            f"raw vector length {raw_vector.shape} does not match model {model.mean.shape}"
        )
    return model.components @ (raw_vector - model.mean)


def raw_descriptor(pixels: np.ndarray, config: DescriptorConfig) -> np.ndarray:
    """CENTRIST and PHOG concatenated, before any reduction."""
    return np.concatenate(
        [
            centrist(pixels, config.centrist_levels),
            phog(pixels, config.phog_levels, config.phog_bins, config.phog_angle_range),
        ]
    )


def extract_raw_descriptors(frames: list[Frame], config: DescriptorConfig) -> list[np.ndarray]:
    """Raw descriptor per frame, in frame order.

    Extraction is pure per frame, so it fans out over a small thread pool
    (cv2 and numpy release the GIL); results are collected back in input
    order, keeping the output independent of scheduling. Inside a worker
    process the pool is skipped so callers parallelizing whole corpora do
    not oversubscribe the machine.
    """
    import multiprocessing

    in_child = multiprocessing.current_process().name != "MainProcess"
    workers = 1 if in_child else min(len(frames), os.cpu_count() or 1, 8)
    if workers <= 1:
        return [raw_descriptor(frame.pixels, config) for frame in frames]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda frame: raw_descriptor(frame.pixels, config), frames))


def featurize_corpus(
    frames: list[Frame], config: DescriptorConfig
) -> tuple[PcaModel, list[Descriptor]]:
    """Raw descriptors for every frame plus the corpus-personalized PCA.

    The model is fit on exactly these frames, so the reduced space (and the
    distance thresholds derived from it downstream) depend only on this
    user's own footage.
    """
    if not frames:
        raise InsufficientDataError("cannot featurize an empty corpus")
    raw = extract_raw_descriptors(frames, config)
    model = fit_pca(raw, config.n_components)
    descriptors = [
        Descriptor(frame_id=frame.frame_id, vector=project(model, vec))
        for frame, vec in zip(frames, raw)
    ]
    return model, descriptors
