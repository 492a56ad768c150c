"""Adaptive hypercube codebook of the articulatory-to-acoustic map.

The articulatory box ``[-3, 3]^7`` is subdivided recursively.  A cube is
kept when its acoustic image is certified linear: formants interpolated
multilinearly from its 2^7 vertex formants agree with directly synthesized
formants, at the cube center and the 14 face centers, to within the build
threshold (bark, per formant).  Cubes whose vertices hit invalid (closed)
tracts are split to refine the boundary of the articulatory space, except
that a cube with only a small invalid fraction and a usable center
Jacobian may be kept as-is.  At the depth/edge floor, failing cubes are
discarded.

Each kept cube records its center formants, a central-difference Jacobian
(3x7, Hz per sigma unit), its vertex formants, and its formant bounding
box.  Lookups go through a regular-grid spatial index over the bounding
boxes expanded by the linearity threshold, which makes the result a
certified superset of the cubes whose image can contain the query triple.
Per-cube inverse sampling solves the local linear system and explores its
null space, forward-verifying every returned point.

Codebook file format (little-endian)::

    bytes 0:4    magic "AACB"
    bytes 4:8    u32 format version (currently 1)
    bytes 8:12   u32 header length H
    bytes 12:..  header JSON: model/acoustic/build config, stats, cube_count
    ...          cube_count fixed-width records of 426 float64 values:
                 center[7], half_edge, depth, validity_ratio,
                 linearity_error, center_formants[3], jac_flag,
                 jacobian[21] (row-major), bbox[6] (min3 then max3),
                 vertex_formants[128*3] (NaN marks an invalid vertex)
    last 4       u32 crc32 of header JSON + records
"""

from __future__ import annotations

import json
import logging
import struct
import zlib
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .acoustics import (
    AcousticConfig,
    FormantTriple,
    bark_to_hz,
    formants_batch,
    hz_to_bark,
)
from .artic import ArticulatoryVector, ModelConfig, to_area_function
from .config import coerce_fields, namespace, read_config
from .errors import (
    CodebookFormatError,
    ConfigError,
    DegenerateCubeError,
    UntestableCubeError,
)

log = logging.getLogger(__name__)

MAGIC = b"AACB"
FORMAT_VERSION = 1
N_VERTICES = 128
_RECORD_FLOATS = 7 + 1 + 1 + 1 + 1 + 3 + 1 + 21 + 6 + N_VERTICES * 3

# vertex j has sign +1 on axis i iff bit i of j is set
VERTEX_SIGNS = np.array(
    [[1.0 if (j >> i) & 1 else -1.0 for i in range(7)] for j in range(N_VERTICES)]
)


@dataclass(frozen=True)
class BuildConfig:
    linearity_threshold_bark: float = 0.3
    min_half_edge: float = 0.375
    max_depth: int = 4
    invalid_ratio_threshold: float = 0.25
    interior_scheme: str = "center+faces"

    def __post_init__(self):
        if self.linearity_threshold_bark <= 0 or self.min_half_edge <= 0:
            raise ConfigError("thresholds must be positive")
        if not (0.0 < self.invalid_ratio_threshold <= 1.0):
            raise ConfigError("invalid_ratio_threshold must be in (0, 1]")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.interior_scheme != "center+faces":
            raise ConfigError(f"unknown interior scheme {self.interior_scheme!r}")

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "BuildConfig":
        raw = namespace(mapping, "build")
        return cls(**coerce_fields(cls, raw, where="build config"))

    @classmethod
    def from_file(cls, path: str | Path) -> "BuildConfig":
        return cls.from_mapping(read_config(path))


@dataclass(frozen=True)
class CodebookStats:
    points_sampled: int
    cube_count: int
    vertex_count: int
    volume_fraction_kept: float
    mean_interp_error_hz: float

    def __post_init__(self):
        if self.vertex_count != N_VERTICES * self.cube_count:
            raise ValueError("vertex_count must equal 128 * cube_count")
        if not (0.0 <= self.volume_fraction_kept <= 1.0 + 1e-12):
            raise ValueError("volume_fraction_kept must lie in [0, 1]")


@dataclass(eq=False)
class Hypercube:
    """One linearity-certified cell of the articulatory space."""

    center: np.ndarray           # (7,)
    half_edge: float
    depth: int
    vertex_formants: np.ndarray  # (128, 3), NaN rows mark invalid vertices
    center_formants: np.ndarray  # (3,)
    jacobian: np.ndarray | None  # (3, 7) Hz per sigma unit
    validity_ratio: float
    linearity_error: float
    bbox: np.ndarray             # (2, 3) vertex-formant min / max, Hz

    def vertices(self) -> np.ndarray:
        return self.center[None, :] + self.half_edge * VERTEX_SIGNS

    def contains(self, x: np.ndarray, slack: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.asarray(x) - self.center) <= self.half_edge + slack))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypercube):
            return NotImplemented
        jac_eq = (self.jacobian is None) == (other.jacobian is None) and (
            self.jacobian is None or np.array_equal(self.jacobian, other.jacobian)
        )
        return (
            np.array_equal(self.center, other.center)
            and self.half_edge == other.half_edge
            and self.depth == other.depth
            and np.array_equal(self.vertex_formants, other.vertex_formants, equal_nan=True)
            and np.array_equal(self.center_formants, other.center_formants)
            and jac_eq
            and self.validity_ratio == other.validity_ratio
            and self.linearity_error == other.linearity_error
            and np.array_equal(self.bbox, other.bbox)
        )


class ForwardMap:
    """Memoizing, batching articulatory-to-formant evaluator.

    Invalid tracts (closure or resonance deficit) are cached as NaN rows.
    ``points_sampled`` counts distinct articulatory points synthesized.
    """

    def __init__(self, model_cfg: ModelConfig, acoustic_cfg: AcousticConfig):
        self.model_cfg = model_cfg
        self.acoustic_cfg = acoustic_cfg
        self._cache: dict[bytes, np.ndarray] = {}

    @property
    def points_sampled(self) -> int:
        return len(self._cache)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Formants for (P, 7) parameter rows; NaN rows where invalid."""
        points = np.ascontiguousarray(points, dtype=float)
        keys = [points[i].tobytes() for i in range(points.shape[0])]
        missing: dict[bytes, int] = {}
        for key in keys:
            if key not in self._cache and key not in missing:
                missing[key] = len(missing)
        if missing:
            self._compute(points, keys, missing)
        out = np.empty((points.shape[0], 3))
        for i, key in enumerate(keys):
            out[i] = self._cache[key]
        return out

    # batch size keeps the (points x grid) work arrays around ~20 MB
    _CHUNK = 4096

    def _compute(self, points: np.ndarray, keys: list[bytes], missing: dict[bytes, int]):
        eps = self.model_cfg.epsilon_closure_cm2
        first_row: dict[bytes, int] = {}
        for i, key in enumerate(keys):
            if key in missing and key not in first_row:
                first_row[key] = i
        order = sorted(first_row.items(), key=lambda kv: missing[kv[0]])
        for start in range(0, len(order), self._CHUNK):
            chunk = order[start : start + self._CHUNK]
            afs = []
            valid = []
            for _, row in chunk:
                af = to_area_function(
                    ArticulatoryVector.from_array(points[row]), self.model_cfg
                )
                afs.append(af)
                valid.append(af.min_area > eps)
            n = len(afs)
            smax = max(af.n_sections for af in afs)
            areas = np.ones((n, smax))
            lengths = np.zeros((n, smax))
            for i, af in enumerate(afs):
                areas[i, : af.n_sections] = af.areas
                lengths[i, : af.n_sections] = af.lengths
            valid = np.array(valid)
            results = np.full((n, 3), np.nan)
            if np.any(valid):
                results[valid] = formants_batch(
                    areas[valid], lengths[valid], self.acoustic_cfg
                )
            for (key, _), res in zip(chunk, results):
                self._cache[key] = res

    def __call__(self, point: np.ndarray) -> np.ndarray:
        """Single-point form; returns a (3,) array or NaN row."""
        return self.eval_many(np.asarray(point, dtype=float)[None, :])[0]


class FunctionForward:
    """Adapter fitting a vectorized (P,7)->(P,3) function to the forward API.

    Used as the test seam for replacing the synthesizer with stubs.
    """

    def __init__(self, fn):
        self._fn = fn
        self._seen: set[bytes] = set()

    @property
    def points_sampled(self) -> int:
        return len(self._seen)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        points = np.ascontiguousarray(points, dtype=float)
        for i in range(points.shape[0]):
            self._seen.add(points[i].tobytes())
        return np.asarray(self._fn(points), dtype=float)

    def __call__(self, point: np.ndarray) -> np.ndarray:
        return self.eval_many(np.asarray(point, dtype=float)[None, :])[0]


def _interior_points(center: np.ndarray, half_edge: float) -> np.ndarray:
    """Center plus the 14 face centers, shape (15, 7)."""
    pts = [center.copy()]
    for axis in range(7):
        for sign in (-1.0, 1.0):
            p = center.copy()
            p[axis] += sign * half_edge
            pts.append(p)
    return np.array(pts)


def _interior_weights() -> tuple[np.ndarray, np.ndarray]:
    """Multilinear weights (15, 128) and stencil masks (15, 128) for the
    center+faces scheme.  A point's stencil is the set of vertices with
    nonzero weight."""
    weights = np.zeros((15, N_VERTICES))
    weights[0, :] = 1.0 / N_VERTICES
    k = 1
    for axis in range(7):
        for sign in (-1.0, 1.0):
            on_face = VERTEX_SIGNS[:, axis] == sign
            weights[k, on_face] = 1.0 / (N_VERTICES // 2)
            k += 1
    stencil = weights > 0
    return weights, stencil


_INTERIOR_WEIGHTS, _INTERIOR_STENCIL = _interior_weights()


def _linearity_from_values(
    vertex_formants: np.ndarray, direct: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Max bark error over testable interior points.

    ``direct`` holds the synthesized formants at the 15 interior points
    (NaN rows where synthesis failed).  Returns (error, per-point Hz
    errors (M,3) over testable points, testable mask (15,)).  The error is
    +inf when a testable point's direct synthesis failed; raises
    :class:`UntestableCubeError` when no point has a fully valid stencil.
    """
    vertex_valid = ~np.isnan(vertex_formants[:, 0])
    testable = ~np.any(_INTERIOR_STENCIL & ~vertex_valid[None, :], axis=1)
    if not np.any(testable):
        raise UntestableCubeError("no interior test point has a valid stencil")
    vf = np.where(np.isnan(vertex_formants), 0.0, vertex_formants)
    interp = _INTERIOR_WEIGHTS[testable] @ vf  # (M, 3)
    direct_t = direct[testable]
    if np.any(np.isnan(direct_t)):
        return float("inf"), np.empty((0, 3)), testable
    err_bark = np.max(np.abs(hz_to_bark(interp) - hz_to_bark(direct_t)))
    hz_errors = np.abs(interp - direct_t)
    return float(err_bark), hz_errors, testable


def linearity_test(
    cube: Hypercube,
    model_cfg: ModelConfig,
    acoustic_cfg: AcousticConfig,
    forward=None,
) -> float:
    """Bark error of the multilinear surrogate at center + face centers.

    Points whose interpolation stencil touches an invalid vertex are
    skipped; a skipped-all cube raises :class:`UntestableCubeError`.  A
    testable point whose direct synthesis fails yields +inf.
    """
    if forward is None:
        forward = ForwardMap(model_cfg, acoustic_cfg)
    pts = _interior_points(cube.center, cube.half_edge)
    direct = forward.eval_many(pts)
    err, _, _ = _linearity_from_values(cube.vertex_formants, direct)
    return err


def _jacobian_points(center: np.ndarray, half_edge: float) -> np.ndarray:
    """Probe points for the central-difference Jacobian, shape (14, 7)."""
    h = half_edge / 4.0
    pts = []
    for axis in range(7):
        for sign in (1.0, -1.0):
            p = center.copy()
            p[axis] += sign * h
            pts.append(p)
    return np.array(pts)


def _jacobian_from_probes(probes: np.ndarray, half_edge: float) -> np.ndarray | None:
    """(3,7) Jacobian from 14 probe formants, or None when incomputable."""
    if np.any(np.isnan(probes)):
        return None
    h = half_edge / 4.0
    jac = np.empty((3, 7))
    for axis in range(7):
        plus = probes[2 * axis]
        minus = probes[2 * axis + 1]
        jac[:, axis] = (plus - minus) / (2.0 * h)
    if np.linalg.matrix_rank(jac) < 3:
        return None
    return jac


def build(
    model_cfg: ModelConfig = None,
    acoustic_cfg: AcousticConfig = None,
    build_cfg: BuildConfig = None,
    forward=None,
) -> "Codebook":
    """Construct the codebook by recursive subdivision of [-3,3]^7.

    Deterministic for fixed configurations.  ``forward`` substitutes the
    synthesizer (test seam); it must provide ``eval_many`` and
    ``points_sampled``.
    """
    model_cfg = model_cfg or ModelConfig()
    acoustic_cfg = acoustic_cfg or AcousticConfig()
    build_cfg = build_cfg or BuildConfig()
    if forward is None:
        forward = ForwardMap(model_cfg, acoustic_cfg)

    threshold = build_cfg.linearity_threshold_bark
    max_ratio = build_cfg.invalid_ratio_threshold

    accepted: list[Hypercube] = []
    err_sums = np.zeros(3)
    err_count = 0
    cube_chunk = 1024  # bounds working-set size on wide levels

    level = [(np.zeros(7), 3.0, 0)]  # (center, half_edge, depth)
    while level:
        next_level = []
        for chunk_start in range(0, len(level), cube_chunk):
            chunk = level[chunk_start : chunk_start + cube_chunk]
            n_cubes = len(chunk)
            centers = np.array([c for c, _, _ in chunk])
            half_edges = np.array([h for _, h, _ in chunk])
            depths = [d for _, _, d in chunk]

            # vertex formants, deduplicated through the forward cache
            vert_pts = (
                centers[:, None, :]
                + half_edges[:, None, None] * VERTEX_SIGNS[None, :, :]
            ).reshape(-1, 7)
            vf_all = forward.eval_many(vert_pts).reshape(n_cubes, N_VERTICES, 3)
            valid_counts = np.sum(~np.isnan(vf_all[:, :, 0]), axis=1)

            candidates = []  # chunk indices with acceptable vertex validity
            to_split: list[int] = []
            for i in range(n_cubes):
                ratio = valid_counts[i] / N_VERTICES
                if ratio >= 1.0 - max_ratio:
                    candidates.append(i)
                elif ratio > 0.0:
                    to_split.append(i)
                else:
                    # fully invalid corners: split only if the center is open
                    if not np.isnan(forward(centers[i])[0]):
                        to_split.append(i)

            # linearity test batch
            interior = {}
            if candidates:
                pts = np.concatenate(
                    [_interior_points(centers[i], half_edges[i]) for i in candidates]
                )
                vals = forward.eval_many(pts).reshape(len(candidates), 15, 3)
                interior = dict(zip(candidates, vals))

            passers = []
            for i in candidates:
                try:
                    err, hz_err, _ = _linearity_from_values(vf_all[i], interior[i])
                except UntestableCubeError:
                    to_split.append(i)
                    continue
                if err <= threshold:
                    passers.append((i, err, hz_err))
                else:
                    to_split.append(i)

            # Jacobians for passing cubes; partially invalid cubes must
            # have a computable one to be kept
            if passers:
                pts = np.concatenate(
                    [_jacobian_points(centers[i], half_edges[i]) for i, _, _ in passers]
                )
                probes = forward.eval_many(pts).reshape(len(passers), 14, 3)
            for idx, (i, err, hz_err) in enumerate(passers):
                jac = _jacobian_from_probes(probes[idx], half_edges[i])
                ratio = valid_counts[i] / N_VERTICES
                center_f = interior[i][0]
                if ratio < 1.0 and (jac is None or np.any(np.isnan(center_f))):
                    to_split.append(i)
                    continue
                vf = vf_all[i]
                bbox = np.stack([np.nanmin(vf, axis=0), np.nanmax(vf, axis=0)])
                accepted.append(
                    Hypercube(
                        center=centers[i].copy(),
                        half_edge=float(half_edges[i]),
                        depth=depths[i],
                        vertex_formants=vf.copy(),
                        center_formants=center_f.copy(),
                        jacobian=jac,
                        validity_ratio=float(ratio),
                        linearity_error=float(err),
                        bbox=bbox,
                    )
                )
                err_sums += hz_err.sum(axis=0)
                err_count += hz_err.shape[0]

            # children ordered deterministically by (cube, child index)
            for i in sorted(to_split):
                h2 = half_edges[i] / 2.0
                if depths[i] >= build_cfg.max_depth or h2 < build_cfg.min_half_edge:
                    continue  # terminal failure: discard
                for j in range(N_VERTICES):
                    next_level.append(
                        (centers[i] + h2 * VERTEX_SIGNS[j], h2, depths[i] + 1)
                    )
        level = next_level

    volume = sum((2.0 * c.half_edge) ** 7 for c in accepted) / 6.0**7
    mean_err = float(np.max(err_sums / err_count)) if err_count else 0.0
    stats = CodebookStats(
        points_sampled=forward.points_sampled,
        cube_count=len(accepted),
        vertex_count=N_VERTICES * len(accepted),
        volume_fraction_kept=min(volume, 1.0),
        mean_interp_error_hz=mean_err,
    )
    return Codebook(
        cubes=accepted,
        stats=stats,
        model_cfg=model_cfg,
        acoustic_cfg=acoustic_cfg,
        build_cfg=build_cfg,
    )


class Codebook:
    """Immutable set of certified hypercubes with an acoustic index."""

    def __init__(self, cubes, stats, model_cfg, acoustic_cfg, build_cfg):
        self.cubes: list[Hypercube] = list(cubes)
        self.stats: CodebookStats = stats
        self.model_cfg = model_cfg
        self.acoustic_cfg = acoustic_cfg
        self.build_cfg = build_cfg
        self._index = None
        self._forward = None

    # -- equality (used by round-trip tests) --------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.model_cfg == other.model_cfg
            and self.acoustic_cfg == other.acoustic_cfg
            and self.build_cfg == other.build_cfg
            and self.stats == other.stats
            and len(self.cubes) == len(other.cubes)
            and all(a == b for a, b in zip(self.cubes, other.cubes))
        )

    # -- acoustic index ------------------------------------------------------

    def _expanded_bbox(self, cube: Hypercube) -> np.ndarray:
        thr = self.build_cfg.linearity_threshold_bark
        lo = bark_to_hz(np.maximum(hz_to_bark(cube.bbox[0]) - thr, -0.5))
        hi = bark_to_hz(hz_to_bark(cube.bbox[1]) + thr)
        return np.stack([lo, hi])

    def _build_index(self):
        boxes = np.array([self._expanded_bbox(c) for c in self.cubes])  # (N,2,3)
        n_bins = max(4, min(32, int(np.ceil(len(self.cubes) ** (1.0 / 3.0)))))
        lo = boxes[:, 0, :].min(axis=0)
        hi = boxes[:, 1, :].max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        buckets: dict[tuple[int, int, int], list[int]] = {}
        for idx in range(len(self.cubes)):
            b_lo = np.clip(((boxes[idx, 0] - lo) / span * n_bins).astype(int), 0, n_bins - 1)
            b_hi = np.clip(((boxes[idx, 1] - lo) / span * n_bins).astype(int), 0, n_bins - 1)
            for bi in range(b_lo[0], b_hi[0] + 1):
                for bj in range(b_lo[1], b_hi[1] + 1):
                    for bk in range(b_lo[2], b_hi[2] + 1):
                        buckets.setdefault((bi, bj, bk), []).append(idx)
        self._index = (boxes, lo, hi, span, n_bins, buckets)

    def lookup(self, triple: FormantTriple) -> list[int]:
        """Indices of cubes whose expanded formant box contains the triple.

        A certified superset of the cubes whose image can produce the
        triple; empty means the acoustics are unreachable.
        """
        if not self.cubes:
            return []
        if self._index is None:
            self._build_index()
        boxes, lo, hi, span, n_bins, buckets = self._index
        f = triple.as_array()
        if np.any(f < lo) or np.any(f > hi):
            return []
        cell = tuple(np.clip(((f - lo) / span * n_bins).astype(int), 0, n_bins - 1))
        hits = []
        for idx in buckets.get(cell, ()):
            if np.all(boxes[idx, 0] <= f) and np.all(f <= boxes[idx, 1]):
                hits.append(idx)
        return hits

    # -- inverse sampling ----------------------------------------------------

    def forward(self) -> ForwardMap:
        if self._forward is None:
            self._forward = ForwardMap(self.model_cfg, self.acoustic_cfg)
        return self._forward

    def sample_inverse(
        self,
        cube: Hypercube | int,
        triple: FormantTriple,
        n: int,
        tol_bark: float,
        seed=0,
    ) -> list[ArticulatoryVector]:
        """Up to ``n`` forward-verified inverse solutions inside the cube."""
        detailed = self.sample_inverse_detailed(cube, triple, n, tol_bark, seed)
        return [vec for vec, _, _ in detailed]

    def sample_inverse_detailed(
        self,
        cube: Hypercube | int,
        triple: FormantTriple,
        n: int,
        tol_bark: float,
        seed=0,
    ) -> list[tuple[ArticulatoryVector, FormantTriple, float]]:
        if isinstance(cube, (int, np.integer)):
            cube = self.cubes[cube]
        return sample_inverse_detailed(
            cube, triple, n, tol_bark, self.model_cfg, self.acoustic_cfg,
            seed=seed, forward=self.forward(),
        )

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        save(self, path)


def sample_inverse(
    cube: Hypercube,
    triple: FormantTriple,
    n: int,
    tol_bark: float,
    model_cfg: ModelConfig,
    acoustic_cfg: AcousticConfig,
    seed=0,
    forward=None,
) -> list[ArticulatoryVector]:
    """Sample the cube's solution set for the triple; see the detailed form."""
    out = sample_inverse_detailed(
        cube, triple, n, tol_bark, model_cfg, acoustic_cfg, seed=seed, forward=forward
    )
    return [vec for vec, _, _ in out]


def sample_inverse_detailed(
    cube: Hypercube,
    triple: FormantTriple,
    n: int,
    tol_bark: float,
    model_cfg: ModelConfig,
    acoustic_cfg: AcousticConfig,
    seed=0,
    forward=None,
) -> list[tuple[ArticulatoryVector, FormantTriple, float]]:
    """Solve the local linear system and sample its null space.

    Returns up to ``n`` tuples (vector, formants, bark error), each
    forward-verified to ``bark error <= tol_bark`` and articulatorily
    valid.  Raises :class:`DegenerateCubeError` when the cube has no
    usable Jacobian.
    """
    if n <= 0:
        return []
    if cube.jacobian is None or np.any(np.isnan(cube.center_formants)):
        raise DegenerateCubeError("cube has no usable Jacobian")
    jac = cube.jacobian
    kernel = null_space(jac)
    if kernel.shape[1] != 4:
        raise DegenerateCubeError("Jacobian is rank-deficient")
    if forward is None:
        forward = ForwardMap(model_cfg, acoustic_cfg)

    h = cube.half_edge
    d_f = triple.as_array() - cube.center_formants
    y0 = np.linalg.pinv(jac) @ d_f
    if np.any(np.abs(y0) > h + 1e-12):
        res = linprog(
            c=np.zeros(7),
            A_eq=jac,
            b_eq=d_f,
            bounds=[(-h, h)] * 7,
            method="highs",
        )
        if not res.success:
            return []
        y0 = res.x
    y0 = np.clip(y0, -h, h)

    rng = np.random.default_rng(seed)
    eps = model_cfg.epsilon_closure_cm2
    results: list[tuple[ArticulatoryVector, FormantTriple, float]] = []
    reach = h * np.sqrt(7.0)
    max_draws = 60 * n + 60
    max_rejects = max(4 * n, 16)
    rejects = 0
    draws = 0
    y = y0.copy()
    while True:
        x = cube.center + y
        vec = ArticulatoryVector.from_array(np.clip(x, -3.0, 3.0))
        af = to_area_function(vec, model_cfg)
        if af.min_area > eps:
            f_x = forward(vec.as_array())
            if not np.isnan(f_x[0]):
                err = float(
                    np.max(np.abs(hz_to_bark(f_x) - hz_to_bark(triple.as_array())))
                )
                if err <= tol_bark:
                    results.append((vec, FormantTriple.from_array(f_x), err))
                else:
                    rejects += 1
            else:
                rejects += 1
        else:
            rejects += 1
        if len(results) >= n or rejects >= max_rejects:
            break
        # next in-cube point from the null space around the particular solution
        while True:
            draws += 1
            if draws >= max_draws:
                return results
            z = rng.uniform(-reach, reach, size=4)
            y = y0 + kernel @ z
            if np.all(np.abs(y) <= h):
                break
    return results


# -- persistence ---------------------------------------------------------


def _config_dict(cb: Codebook) -> dict:
    return {
        "model": asdict(cb.model_cfg),
        "acoustic": asdict(cb.acoustic_cfg),
        "build": asdict(cb.build_cfg),
        "stats": asdict(cb.stats),
        "cube_count": len(cb.cubes),
    }


def _cube_record(cube: Hypercube) -> np.ndarray:
    rec = np.empty(_RECORD_FLOATS)
    rec[0:7] = cube.center
    rec[7] = cube.half_edge
    rec[8] = cube.depth
    rec[9] = cube.validity_ratio
    rec[10] = cube.linearity_error
    rec[11:14] = cube.center_formants
    if cube.jacobian is None:
        rec[14] = 0.0
        rec[15:36] = 0.0
    else:
        rec[14] = 1.0
        rec[15:36] = cube.jacobian.ravel()
    rec[36:39] = cube.bbox[0]
    rec[39:42] = cube.bbox[1]
    rec[42:] = cube.vertex_formants.ravel()
    return rec


def _cube_from_record(rec: np.ndarray) -> Hypercube:
    jac = rec[15:36].reshape(3, 7).copy() if rec[14] == 1.0 else None
    return Hypercube(
        center=rec[0:7].copy(),
        half_edge=float(rec[7]),
        depth=int(rec[8]),
        vertex_formants=rec[42:].reshape(N_VERTICES, 3).copy(),
        center_formants=rec[11:14].copy(),
        jacobian=jac,
        validity_ratio=float(rec[9]),
        linearity_error=float(rec[10]),
        bbox=np.stack([rec[36:39], rec[39:42]]).copy(),
    )


def save(cb: Codebook, path: str | Path) -> None:
    header = json.dumps(_config_dict(cb), sort_keys=True, separators=(",", ":")).encode()
    if cb.cubes:
        payload = np.concatenate([_cube_record(c) for c in cb.cubes]).tobytes()
    else:
        payload = b""
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", crc))


def load(path: str | Path) -> Codebook:
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise CodebookFormatError("truncated", "file too short for codebook header")
    if blob[0:4] != MAGIC:
        raise CodebookFormatError("magic", f"bad magic {blob[0:4]!r}")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != FORMAT_VERSION:
        raise CodebookFormatError("version", f"unsupported format version {version}")
    (header_len,) = struct.unpack("<I", blob[8:12])
    if len(blob) < 12 + header_len + 4:
        raise CodebookFormatError("truncated", "file shorter than declared header")
    header = blob[12 : 12 + header_len]
    try:
        meta = json.loads(header.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CodebookFormatError("truncated", f"unreadable header: {exc}") from exc
    cube_count = int(meta["cube_count"])
    payload_len = cube_count * _RECORD_FLOATS * 8
    expected = 12 + header_len + payload_len + 4
    if len(blob) != expected:
        raise CodebookFormatError(
            "truncated", f"expected {expected} bytes, found {len(blob)}"
        )
    payload = blob[12 + header_len : 12 + header_len + payload_len]
    (crc_stored,) = struct.unpack("<I", blob[-4:])
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    if crc != crc_stored:
        raise CodebookFormatError("checksum", "checksum mismatch")
    records = np.frombuffer(payload, dtype=float).reshape(cube_count, _RECORD_FLOATS)
    cubes = [_cube_from_record(records[i]) for i in range(cube_count)]
    return Codebook(
        cubes=cubes,
        stats=CodebookStats(**meta["stats"]),
        model_cfg=ModelConfig(**meta["model"]),
        acoustic_cfg=AcousticConfig(**meta["acoustic"]),
        build_cfg=BuildConfig(**meta["build"]),
    )
