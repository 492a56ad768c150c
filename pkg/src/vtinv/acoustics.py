"""Vocal-tract transfer function, formant extraction, bark conversion.

Each tube section is a lossless cylindrical transmission line.  Cascading
the per-section chain (ABCD) matrices from glottis to lips gives

    [p_g; U_g] = M_1 M_2 ... M_N [p_l; U_l]

with M_k = [[cos(kl), jZ sin(kl)], [j sin(kl)/Z, cos(kl)]], Z = rho*c/A.
With an ideal open lip end (p_l = 0) and a closed glottis the volume
velocity transfer is U_l/U_g = 1/D, where D is the (2,2) element of the
product.  For the lossless cascade D is real and depends only on area
*ratios*, so a uniform area scaling leaves the transfer untouched and the
formants (zeros of D) are exactly invariant.

Only the lower matrix row is tracked: with C = j*c the recurrence per
section is

    c' = c*cos + d*sin/Z        d' = d*cos - c*Z*sin

and formants are located by sign changes of d on the analysis grid,
refined by bisection to the configured tolerance.  rho*c is dropped from Z
(it cancels in d), so Z = 1/A.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .artic import AreaFunction
from .config import coerce_fields, namespace, read_config
from .errors import ClosureError, ConfigError, PeakDeficitError

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - accelerator only
    _HAVE_NUMBA = False

# guard against numerically meaningless near-closed tracts; mirrors the
# articulatory model's default closure threshold
CLOSURE_AREA_CM2 = 0.05


@dataclass(frozen=True)
class FormantTriple:
    """First three formant frequencies in Hz, strictly increasing."""

    f1: float
    f2: float
    f3: float

    def __post_init__(self):
        if not (0.0 < self.f1 < self.f2 < self.f3):
            raise ValueError(
                f"formants must satisfy 0 < f1 < f2 < f3, got "
                f"({self.f1}, {self.f2}, {self.f3})"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3], dtype=float)

    @classmethod
    def from_array(cls, values) -> "FormantTriple":
        values = np.asarray(values, dtype=float)
        if values.shape != (3,):
            raise ValueError(f"expected 3 formants, got shape {values.shape}")
        return cls(*values.tolist())

    @classmethod
    def parse(cls, text: str) -> "FormantTriple":
        parts = text.split(",")
        if len(parts) != 3:
            raise ValueError(f"expected 'f1,f2,f3', got {text!r}")
        return cls(*(float(p) for p in parts))


@dataclass(frozen=True)
class AcousticConfig:
    speed_of_sound_cm_s: float = 35000.0
    grid_min_hz: float = 100.0
    grid_max_hz: float = 6000.0
    grid_step_hz: float = 10.0
    refine_tol_hz: float = 0.5
    loss_model: str = "lossless"

    def __post_init__(self):
        if self.grid_min_hz >= self.grid_max_hz:
            raise ConfigError("grid_min_hz must be < grid_max_hz")
        if self.grid_step_hz <= 0 or self.refine_tol_hz <= 0:
            raise ConfigError("grid_step_hz and refine_tol_hz must be > 0")
        if self.loss_model != "lossless":
            raise ConfigError(
                f"loss model {self.loss_model!r} not implemented (hook reserved)"
            )

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "AcousticConfig":
        raw = namespace(mapping, "acoustic")
        return cls(**coerce_fields(cls, raw, where="acoustic config"))

    @classmethod
    def from_file(cls, path: str | Path) -> "AcousticConfig":
        return cls.from_mapping(read_config(path))

    def grid(self) -> np.ndarray:
        n = int(np.floor((self.grid_max_hz - self.grid_min_hz) / self.grid_step_hz))
        return self.grid_min_hz + self.grid_step_hz * np.arange(n + 1)

    def config_text(self) -> str:
        lines = [f"acoustic.{f.name} = {getattr(self, f.name)}" for f in fields(self)]
        return "\n".join(lines) + "\n"


DEFAULT_ACOUSTIC = AcousticConfig()


def chain_denominator(areas: np.ndarray, lengths: np.ndarray, freqs: np.ndarray,
                      speed_of_sound: float, *, per_point: bool = False) -> np.ndarray:
    """Real denominator d(f) of the glottis-to-lips transfer, batched.

    Shapes: with 1-D ``areas``/``lengths`` (S,) and ``freqs`` (F,) the
    result is (F,).  With 2-D (P, S) inputs the result is (P, F), or, when
    ``per_point`` is set and ``freqs`` is (P,), one value per row (P,).
    Zero-length padding sections are exact no-ops, so ragged batches can
    be padded freely.
    """
    areas = np.asarray(areas, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    f = np.asarray(freqs, dtype=float)
    single = areas.ndim == 1
    if single:
        areas = areas[None, :]
        lengths = lengths[None, :]

    w = 2.0 * np.pi / speed_of_sound
    if per_point:
        omega = w * f  # (P,)
        c = np.zeros(areas.shape[0])
    else:
        omega = w * f[None, :]  # (1,F)
        c = np.zeros((areas.shape[0], f.shape[0]))
    d = np.ones_like(c)

    for s in range(areas.shape[1]):
        a_s = areas[:, s]
        if per_point:
            kl = omega * lengths[:, s]
            z = 1.0 / a_s
        else:
            kl = omega * lengths[:, s, None]  # (P,F)
            z = (1.0 / a_s)[:, None]
        cs = np.cos(kl)
        sn = np.sin(kl)
        c, d = c * cs + d * sn / z, d * cs - c * z * sn
    return d[0] if single else d


def transfer_magnitude(af: AreaFunction, f: float,
                       cfg: AcousticConfig = DEFAULT_ACOUSTIC) -> float:
    """Magnitude of the volume-velocity transfer at one frequency."""
    if af.min_area <= CLOSURE_AREA_CM2:
        raise ClosureError(
            f"minimum area {af.min_area:.4f} cm^2 at or below closure threshold"
        )
    if not (cfg.grid_min_hz <= f <= cfg.grid_max_hz):
        raise ValueError(f"frequency {f} Hz outside analysis grid")
    d = chain_denominator(af.areas, af.lengths, np.array([f]), cfg.speed_of_sound_cm_s)
    mag = np.abs(d[0])
    return float(np.inf) if mag == 0.0 else float(1.0 / mag)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _denom_scalar(areas, lengths, f, w):
        c = 0.0
        d = 1.0
        for s in range(areas.shape[0]):
            length = lengths[s]
            if length == 0.0:
                continue
            kl = w * f * length
            cs = np.cos(kl)
            sn = np.sin(kl)
            a = areas[s]
            cn = c * cs + d * sn * a
            dn = d * cs - c * sn / a
            c = cn
            d = dn
        return d

    @njit(cache=True, parallel=True)
    def _formants_kernel(areas, lengths, grid, n_iter, w, out):
        # the grid scan advances per-section phase angles by a fixed
        # rotation per step instead of calling sin/cos at every frequency;
        # sign-change brackets are then bisected with exact evaluations
        n_points = areas.shape[0]
        n_sections = areas.shape[1]
        n_freqs = grid.shape[0]
        step = grid[1] - grid[0]
        for p in prange(n_points):
            cs = np.empty(n_sections)
            sn = np.empty(n_sections)
            rc = np.empty(n_sections)
            rs = np.empty(n_sections)
            for s in range(n_sections):
                length = lengths[p, s]
                th0 = w * grid[0] * length
                cs[s] = np.cos(th0)
                sn[s] = np.sin(th0)
                dth = w * step * length
                rc[s] = np.cos(dth)
                rs[s] = np.sin(dth)

            c = 0.0
            d = 1.0
            for s in range(n_sections):
                if lengths[p, s] == 0.0:
                    continue
                a = areas[p, s]
                cn = c * cs[s] + d * sn[s] * a
                d = d * cs[s] - c * sn[s] / a
                c = cn
            neg_prev = d < 0.0

            found = 0
            for i in range(1, n_freqs):
                c = 0.0
                d = 1.0
                for s in range(n_sections):
                    cs_new = cs[s] * rc[s] - sn[s] * rs[s]
                    sn[s] = sn[s] * rc[s] + cs[s] * rs[s]
                    cs[s] = cs_new
                    if lengths[p, s] == 0.0:
                        continue
                    a = areas[p, s]
                    cn = c * cs[s] + d * sn[s] * a
                    d = d * cs[s] - c * sn[s] / a
                    c = cn
                neg_cur = d < 0.0
                if neg_cur != neg_prev:
                    lo = grid[i - 1]
                    hi = grid[i]
                    lo_neg = neg_prev
                    for _ in range(n_iter):
                        mid = 0.5 * (lo + hi)
                        d_mid = _denom_scalar(areas[p], lengths[p], mid, w)
                        if (d_mid < 0.0) == lo_neg:
                            lo = mid
                        else:
                            hi = mid
                    out[p, found] = 0.5 * (lo + hi)
                    found += 1
                    if found == 3:
                        break
                neg_prev = neg_cur
            for j in range(found, 3):
                out[p, j] = np.nan


def _refine_roots(areas: np.ndarray, lengths: np.ndarray, lo: np.ndarray,
                  hi: np.ndarray, d_lo_neg: np.ndarray, cfg: AcousticConfig) -> np.ndarray:
    """Vectorized bisection of denominator sign changes, one root per row."""
    n_iter = max(1, int(np.ceil(np.log2(cfg.grid_step_hz / cfg.refine_tol_hz))))
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        d_mid = chain_denominator(
            areas, lengths, mid, cfg.speed_of_sound_cm_s, per_point=True
        )
        mid_neg = d_mid < 0.0
        same = mid_neg == d_lo_neg
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def formants_batch(areas: np.ndarray, lengths: np.ndarray,
                   cfg: AcousticConfig = DEFAULT_ACOUSTIC) -> np.ndarray:
    """First three formants for a batch of padded area functions.

    ``areas``/``lengths`` are (P, S); padding sections must have zero
    length.  Rows with fewer than three grid resonances come back as NaN.
    """
    areas = np.ascontiguousarray(areas, dtype=float)
    lengths = np.ascontiguousarray(lengths, dtype=float)
    n_points = areas.shape[0]
    grid = cfg.grid()
    if _HAVE_NUMBA:
        n_iter = max(1, int(np.ceil(np.log2(cfg.grid_step_hz / cfg.refine_tol_hz))))
        out = np.empty((n_points, 3))
        _formants_kernel(
            areas, lengths, grid, n_iter,
            2.0 * np.pi / cfg.speed_of_sound_cm_s, out,
        )
        return out
    d = chain_denominator(areas, lengths, grid, cfg.speed_of_sound_cm_s)  # (P,F)

    neg = d < 0.0
    flips = neg[:, :-1] != neg[:, 1:]  # (P, F-1)
    counts = flips.sum(axis=1)
    out = np.full((n_points, 3), np.nan)
    ok = counts >= 3
    if not np.any(ok):
        return out

    ok_rows = np.nonzero(ok)[0]
    rows, cols = np.nonzero(flips)  # row-major: per row, cols ascending
    keep = ok[rows]
    rows = rows[keep]
    cols = cols[keep]
    first = np.searchsorted(rows, ok_rows, side="left")

    lo_idx = np.stack([cols[first], cols[first + 1], cols[first + 2]], axis=1)
    for j in range(3):
        lo = grid[lo_idx[:, j]]
        hi = grid[lo_idx[:, j] + 1]
        d_lo_neg = neg[ok_rows, lo_idx[:, j]]
        roots = _refine_roots(areas[ok_rows], lengths[ok_rows], lo, hi, d_lo_neg, cfg)
        out[ok_rows, j] = roots
    return out


def formants(af: AreaFunction, cfg: AcousticConfig = DEFAULT_ACOUSTIC) -> FormantTriple:
    """Extract (F1, F2, F3) from an area function.

    Raises :class:`ClosureError` on a closed tract and
    :class:`PeakDeficitError` when fewer than three resonances fall inside
    the analysis grid.
    """
    if af.min_area <= CLOSURE_AREA_CM2:
        raise ClosureError(
            f"minimum area {af.min_area:.4f} cm^2 at or below closure threshold"
        )
    triple = formants_batch(af.areas[None, :], af.lengths[None, :], cfg)[0]
    if np.any(np.isnan(triple)):
        raise PeakDeficitError("fewer than three resonances on the analysis grid")
    return FormantTriple.from_array(triple)


def hz_to_bark(f):
    """Traunmueller bark transform, scalar or array; strictly increasing."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be > 0")
    z = 26.81 / (1.0 + 1960.0 / f) - 0.53
    return float(z) if z.ndim == 0 else z


def bark_to_hz(z):
    """Inverse of :func:`hz_to_bark` (valid below the 26.28 bark asymptote)."""
    z = np.asarray(z, dtype=float)
    if np.any(z >= 26.28):
        raise ValueError("bark value beyond the transform's range")
    f = 1960.0 / (26.81 / (z + 0.53) - 1.0)
    return float(f) if f.ndim == 0 else f


def bark_distance(a: FormantTriple, b: FormantTriple) -> float:
    """Largest per-formant bark difference between two triples."""
    za = hz_to_bark(a.as_array())
    zb = hz_to_bark(b.as_array())
    return float(np.max(np.abs(za - zb)))
