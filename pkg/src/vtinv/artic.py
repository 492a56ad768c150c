"""Seven-parameter articulatory model and its area-function geometry.

The parameter vector lives in ``[-3, +3]^7`` (standard-deviation units around
a neutral posture).  Parameters, in storage order:

    0  jaw             jaw opening (+ = more open)
    1  tongue_pos      tongue body place (+ = more posterior)
    2  tongue_shape    tongue body constriction degree (+ = narrower)
    3  apex            tongue tip position / raising
    4  lip_aperture    intrinsic lip opening (+ = more open)
    5  lip_protrusion  lip extension (+ = more protruded)
    6  larynx          larynx height

The vocal tract is a surrogate tube model built from a uniform neutral tube
(32 sections, 17.5 cm, 4.0 cm^2) that each parameter perturbs smoothly, with
no perturbation at all for the zero vector:

    jaw             multiplies oral-half section areas by exp(g_jw * jaw)
    tongue body     place is the compensated jaw/tongue coordinate
                    (tongue_pos + alpha*jaw)/(1+alpha), positive = more
                    posterior; trades along the compensation direction
                    leave it unchanged (the compensatory behavior the
                    constraint axes assume).  Two effects ride on it:
                    (1) an antisymmetric area tilt exp(g_tilt*place*xi),
                    xi in [-1, 1] from glottis to lips, so a retracted
                    body narrows the pharynx and widens the mouth and a
                    fronted one does the opposite; (2) a Gaussian
                    constriction factor 1 - g, width 2.5 cm, at
                    x_c = 14.0 - 4.0 * place cm, spanning palatal
                    (~10.4 cm, raises F2) through velar/uvular (~5.6 cm,
                    lowers F2) places over the vowel range of the place
                    scale.  The depth g combines an always-on body term
                    g_pb * (1 - exp(-(place/w_pb)^2)), present whenever
                    the body leaves its neutral place and saturating so
                    the body alone never seals the tract, with the
                    shape-controlled odd septic g_tb * shape^7 / 729
                    whose sign gives constriction vs. dilation; the
                    constricting shape extreme passes depth 1 and closes
                    the tract
    apex            secondary Gaussian notch of fixed width at
                    13.0 + 0.5 * apex cm, even quadratic depth
                    g_ap * apex^2 / 3
    lip_aperture    the mouth-opening coordinate
                    m = lip_aperture + ((1-blend)/blend) * place is the
                    opening constraint axis up to scale, so acoustically
                    the mouth follows the same compensated combination the
                    opening constraint scores.  It multiplies the last two
                    section areas by exp(g_lip * m) and the whole oral
                    half by exp(g_mouth * m); a closure ramp on the
                    terminal sections falls linearly from 1 to 0 between
                    raw aperture -2.5 and -3.0 so the closing extreme
                    seals the tract regardless of place.  Mostly an F1
                    control
    lip_protrusion  scales the final (lip) section length by exp(q * p)
                    with q chosen so +3 lengthens the tract by the
                    configured maximum (1.2 cm), and narrows the last
                    five sections as a graded channel
                    exp(g_round * p * (0.25, 0.5, 0.75, 1, 1)): rounding
                    forms a long narrow lip tube, which drags F2 and F3
                    down much harder than the plain orifice does
    larynx          scales the first section length by 1 + 0.05 * larynx

The section count never changes, so batched acoustics can stack area
functions directly.  All effect constants live in :class:`ModelConfig` and
can be overridden from the shared text configuration (namespace
``model.``).  Nonsmooth behavior (area clipping at zero, the lip closure
ramp) is confined to the closure boundary of the space; the interior map
is analytic, which is what the codebook's linearity certification relies
on.

An area function is *valid* when its minimum area stays above
``epsilon_closure`` (default 0.05 cm^2); below that the tract counts as
closed and no vowel acoustics are computed.

The phonetic constraint axes are linear reads of the vector:

    dorsum      tongue_pos + alpha * jaw           (alpha = 0.66; jaw and
                tongue compensate along d(jaw)=t, d(tongue_pos)=-alpha*t)
    opening     blend * lip_aperture + (1-blend) * dorsum / (1+alpha)
    protrusion  lip_protrusion
    stretch     0 (the model cannot represent lip stretching)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .config import coerce_fields, namespace, read_config
from .errors import ConfigError

PARAM_NAMES = (
    "jaw",
    "tongue_pos",
    "tongue_shape",
    "apex",
    "lip_aperture",
    "lip_protrusion",
    "larynx",
)

PARAM_MIN = -3.0
PARAM_MAX = 3.0

# graded rounding weights over the last five sections, lips last; the
# terminal orifice is left to the aperture parameter so rounding shapes
# an inner channel rather than the F1-controlling opening
_ROUND_TAPER = np.array([0.5, 1.0, 1.0, 0.0, 0.0])


@dataclass(frozen=True)
class ArticulatoryVector:
    """Point in the seven-dimensional articulatory space, sigma units."""

    jaw: float = 0.0
    tongue_pos: float = 0.0
    tongue_shape: float = 0.0
    apex: float = 0.0
    lip_aperture: float = 0.0
    lip_protrusion: float = 0.0
    larynx: float = 0.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            if not (PARAM_MIN <= value <= PARAM_MAX):
                raise ValueError(
                    f"{name}={value} outside [{PARAM_MIN}, {PARAM_MAX}]"
                )
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "ArticulatoryVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (7,):
            raise ValueError(f"expected 7 components, got shape {values.shape}")
        return cls(*values.tolist())

    @classmethod
    def parse(cls, text: str) -> "ArticulatoryVector":
        """Parse the text form: 7 comma-separated decimals."""
        parts = text.split(",")
        if len(parts) != 7:
            raise ValueError(f"expected 7 comma-separated values, got {len(parts)}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise ValueError(f"bad articulatory vector {text!r}: {exc}") from exc

    def format(self) -> str:
        return ",".join(f"{getattr(self, n):.6f}" for n in PARAM_NAMES)


@dataclass(frozen=True)
class AreaFunction:
    """Tube model of the tract: per-section (area, length), glottis first."""

    areas: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        areas = np.asarray(self.areas, dtype=float)
        lengths = np.asarray(self.lengths, dtype=float)
        if areas.ndim != 1 or areas.shape != lengths.shape or areas.size == 0:
            raise ValueError("areas and lengths must be equal-length 1-D, non-empty")
        if np.any(lengths <= 0):
            raise ValueError("all section lengths must be > 0")
        if np.any(areas < 0):
            raise ValueError("all section areas must be >= 0")
        areas.setflags(write=False)
        lengths.setflags(write=False)
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "lengths", lengths)

    @property
    def n_sections(self) -> int:
        return self.areas.size

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def min_area(self) -> float:
        return float(self.areas.min())

    def midpoints(self) -> np.ndarray:
        """Section midpoint coordinates, cm from the glottis."""
        ends = np.cumsum(self.lengths)
        return ends - self.lengths / 2.0


@dataclass(frozen=True)
class ConstraintAxes:
    """Values of the four phonetic constraint axes for one vector."""

    dorsum_value: float
    opening_value: float
    stretch_value: float
    protrusion_value: float


@dataclass(frozen=True)
class ModelConfig:
    """Geometry of the surrogate tract and the constraint-axis map.

    Lengths in cm, areas in cm^2.  Gains are dimensionless per sigma unit.
    """

    section_count: int = 32
    neutral_length_cm: float = 17.5
    neutral_area_cm2: float = 4.0
    epsilon_closure_cm2: float = 0.05
    alpha_compensation: float = 0.66
    # per-parameter effect constants (see module docstring)
    jaw_area_gain: float = 0.1
    tongue_center_base_cm: float = 15.0
    tongue_center_gain_cm: float = 4.5
    tongue_depth_gain: float = 0.35
    tongue_depth_power: int = 7
    tongue_body_gain: float = 0.75
    tongue_body_width: float = 0.9
    tongue_width_cm: float = 2.5
    tongue_tilt_gain: float = 0.25
    apex_center_base_cm: float = 13.0
    apex_center_gain_cm: float = 0.5
    apex_depth_gain: float = 0.02
    apex_width_cm: float = 1.0
    lip_area_gain: float = 1.0
    lip_oral_gain: float = 0.2
    lip_closure_onset: float = 2.5
    lip_closure_width: float = 0.5
    protrusion_length_max_cm: float = 1.2
    protrusion_area_gain: float = -0.5
    spread_slit_gain: float = 0.15
    round_pocket_center_cm: float = 13.25
    round_pocket_width_cm: float = 1.0
    round_pocket_gain: float = 0.35
    larynx_length_gain: float = 0.05
    opening_blend: float = 0.5

    def __post_init__(self):
        if self.section_count < 8:
            raise ConfigError("section_count must be >= 8")
        if self.neutral_length_cm <= 0:
            raise ConfigError("neutral_length_cm must be > 0")
        if self.alpha_compensation <= 0:
            raise ConfigError("alpha_compensation must be > 0")
        if self.epsilon_closure_cm2 <= 0:
            raise ConfigError("epsilon_closure_cm2 must be > 0")
        if not (0.0 < self.opening_blend < 1.0):
            raise ConfigError("opening_blend must be in (0, 1)")
        if self.lip_closure_width <= 0:
            raise ConfigError("lip_closure_width must be > 0")
        if self.lip_closure_onset + self.lip_closure_width > PARAM_MAX:
            raise ConfigError(
                "lip closure ramp must complete inside the parameter range"
            )

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "ModelConfig":
        raw = namespace(mapping, "model")
        return cls(**coerce_fields(cls, raw, where="model config"))

    @classmethod
    def from_file(cls, path: str | Path) -> "ModelConfig":
        return cls.from_mapping(read_config(path))

    def config_text(self) -> str:
        lines = [f"model.{f.name} = {getattr(self, f.name)}" for f in fields(self)]
        return "\n".join(lines) + "\n"


DEFAULT_MODEL = ModelConfig()


def to_area_function(v: ArticulatoryVector, cfg: ModelConfig = DEFAULT_MODEL) -> AreaFunction:
    """Map an articulatory vector to its tube area function.

    Deterministic and continuous in every parameter.  The zero vector maps
    to the unmodified neutral tube.  Closures (areas at or below
    ``epsilon_closure_cm2``) are representable; use :func:`is_valid` to
    screen them out.
    """
    n = cfg.section_count
    base = cfg.neutral_length_cm / n
    lengths = np.full(n, base)
    lengths[0] *= 1.0 + cfg.larynx_length_gain * v.larynx
    # protrusion stretches (or shrinks) the two lip sections
    # exponentially; the rate is set so +3 adds protrusion_length_max_cm
    q = math.log1p(cfg.protrusion_length_max_cm / (2.0 * base)) / PARAM_MAX
    lengths[-2:] *= math.exp(q * v.lip_protrusion)
    areas = np.full(n, cfg.neutral_area_cm2)

    ends = np.cumsum(lengths)
    x = ends - lengths / 2.0

    # jaw opens or closes the oral half as a whole; the mask is fixed by
    # section index so length effects cannot flip sections in or out
    areas[n // 2 :] *= math.exp(cfg.jaw_area_gain * v.jaw)

    # tongue body: the compensated place coordinate tilts the whole tract
    # (posterior narrowing vs. anterior widening) and positions a signed
    # Gaussian constriction whose odd quintic depth keeps the bulk gentle
    # and the extremes decisive
    alpha = cfg.alpha_compensation
    place = (v.tongue_pos + alpha * v.jaw) / (1.0 + alpha)
    xi = 2.0 * x / ends[-1] - 1.0
    areas *= np.exp(cfg.tongue_tilt_gain * place * xi)
    x_c = cfg.tongue_center_base_cm - cfg.tongue_center_gain_cm * place
    depth = (
        cfg.tongue_body_gain * -math.expm1(-((place / cfg.tongue_body_width) ** 2))
        + cfg.tongue_depth_gain
        * v.tongue_shape**cfg.tongue_depth_power
        / PARAM_MAX ** (cfg.tongue_depth_power - 1)
    )
    factor = 1.0 - depth * np.exp(-((x - x_c) ** 2) / (2.0 * cfg.tongue_width_cm**2))
    areas *= np.clip(factor, 0.0, None)

    # apex: shallow even notch, position follows the parameter sign
    x_a = cfg.apex_center_base_cm + cfg.apex_center_gain_cm * v.apex
    notch = 1.0 - cfg.apex_depth_gain * (v.apex**2 / PARAM_MAX) * np.exp(
        -((x - x_a) ** 2) / (2.0 * cfg.apex_width_cm**2)
    )
    areas *= np.clip(notch, 0.0, None)

    # rounding: protrusion narrows a graded inner channel, while
    # retraction spreads the lips into a slit, narrowing the terminal
    # orifice (one-sided squares keep both smooth and zero at neutral)
    areas[-5:] *= np.exp(
        cfg.protrusion_area_gain * v.lip_protrusion * _ROUND_TAPER
    )
    areas[-2:] *= math.exp(
        -cfg.spread_slit_gain * min(v.lip_protrusion, 0.0) ** 2 / PARAM_MAX
    )
    # sublingual/lip-horn pocket: protrusion widens it (F3 down),
    # spreading narrows it more gently (F3 up)
    areas *= np.exp(
        cfg.round_pocket_gain * v.lip_protrusion
        * np.exp(-((x - cfg.round_pocket_center_cm) ** 2)
                 / (2.0 * cfg.round_pocket_width_cm**2))
    )

    # mouth opening follows the opening-axis combination of aperture and
    # place, opening the oral cavity and the terminal orifice together; a
    # linear ramp on raw aperture seals the tract at the closing extreme
    blend = cfg.opening_blend
    mouth = v.lip_aperture + (1.0 - blend) / blend * place
    areas[n // 2 :] *= math.exp(cfg.lip_oral_gain * mouth)
    lip = math.exp(cfg.lip_area_gain * mouth)
    over = -v.lip_aperture - cfg.lip_closure_onset
    if over > 0.0:
        lip *= max(1.0 - over / cfg.lip_closure_width, 0.0)
    areas[-2:] *= lip

    return AreaFunction(areas=areas, lengths=lengths)


def is_valid(v: ArticulatoryVector, cfg: ModelConfig = DEFAULT_MODEL) -> bool:
    """True when the vector's tract stays open everywhere."""
    return to_area_function(v, cfg).min_area > cfg.epsilon_closure_cm2


def constriction_profile(af: AreaFunction) -> tuple[float, float]:
    """Place (cm from glottis) and area (cm^2) of the maximal constriction.

    Ties on the minimum area are resolved toward the glottis (lowest
    section index) so results are deterministic.
    """
    idx = int(np.argmin(af.areas))
    place = float(af.midpoints()[idx])
    return place, float(af.areas[idx])


def constraint_axes(v: ArticulatoryVector, cfg: ModelConfig = DEFAULT_MODEL) -> ConstraintAxes:
    """Project a vector onto the four phonetic constraint axes.

    The dorsum axis uses the compensated coordinate
    ``tongue_pos + alpha * jaw`` so that acoustically equivalent
    jaw-for-tongue trades score identically; the opening axis blends lip
    aperture with the same coordinate (normalized back to sigma range).
    """
    alpha = cfg.alpha_compensation
    dorsum = v.tongue_pos + alpha * v.jaw
    blend = cfg.opening_blend
    opening = blend * v.lip_aperture + (1.0 - blend) * dorsum / (1.0 + alpha)
    return ConstraintAxes(
        dorsum_value=dorsum,
        opening_value=opening,
        stretch_value=0.0,
        protrusion_value=v.lip_protrusion,
    )


def dorsum_range(cfg: ModelConfig = DEFAULT_MODEL) -> tuple[float, float]:
    """Achievable span of the dorsum axis over the parameter box."""
    reach = PARAM_MAX * (1.0 + cfg.alpha_compensation)
    return -reach, reach
