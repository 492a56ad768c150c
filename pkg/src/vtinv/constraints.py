"""Vowel constraint table, target intervals, and phonetic scoring.

Ten oral French vowels are classified by four category levels:

    D  tongue dorsum place (6..8 here; the full consonant-inclusive
       scale runs 0..9)
    O  mouth opening (1..4)
    S  lip stretching (1..4, unused: the model cannot stretch lips)
    P  lip protrusion (1..4)

Vowel ids use X-SAMPA: ``2`` is the close-mid front rounded vowel, ``9``
the open-mid front rounded one, ``E``/``O`` the open-mid unrounded/rounded
pair.

Category levels are turned into target intervals on the constraint axes.
P (and the nominal S) levels spread evenly over the protrusion axis.  D
levels occupy their slots on the 0..9 place scale mapped affinely onto the
dorsum axis span.  The opening target composes the opening formula at the
level's lip-aperture slot and the vowel's dorsum target, which keeps every
vowel's ideal domain nonempty despite the jaw/tongue term the opening axis
shares with the dorsum axis.  Margins are half the inter-target spacing of
the axis in question.

A value inside its interval scores 1; outside, the score decays as
exp(-(distance to the interval) / tau) with tau defaulting to the margin.
The overall score is the weighted mean over D, O, P (equal weights; S has
null weight).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .artic import ArticulatoryVector, ModelConfig, constraint_axes, dorsum_range, is_valid
from .errors import ConfigError, SamplingError

VOWELS = ("i", "e", "E", "a", "y", "2", "9", "u", "o", "O")
CONSTRAINT_TYPES = ("D", "O", "S", "P")

_D_SCALE_LEVELS = 10  # place scale 0..9, consonants included

# level rows of the vowel classification table: D, O, S, P
_DEFAULT_LEVELS = {
    "i": (6, 1, 4, 1),
    "e": (6, 2, 3, 1),
    "E": (6, 3, 2, 1),
    "a": (7, 4, 1, 1),
    "y": (6, 1, 1, 4),
    "2": (6, 2, 1, 3),
    "9": (6, 3, 1, 2),
    "u": (8, 1, 1, 4),
    "o": (8, 2, 1, 3),
    "O": (8, 3, 1, 2),
}


@dataclass(frozen=True)
class VowelLevels:
    D: int
    O: int
    S: int
    P: int

    def __post_init__(self):
        if self.D not in (6, 7, 8):
            raise ConfigError(f"D level must be 6..8, got {self.D}")
        for name in ("O", "S", "P"):
            if getattr(self, name) not in (1, 2, 3, 4):
                raise ConfigError(f"{name} level must be 1..4, got {getattr(self, name)}")


@dataclass(frozen=True)
class ConstraintTable:
    """Per-vowel category levels; exactly the ten oral vowels."""

    levels: Mapping[str, VowelLevels]

    def __post_init__(self):
        if tuple(self.levels.keys()) != VOWELS:
            raise ConfigError(
                f"table must cover exactly {VOWELS} in order, got {tuple(self.levels)}"
            )

    def __getitem__(self, vowel: str) -> VowelLevels:
        return self.levels[vowel]

    def config_text(self) -> str:
        lines = [
            f"constraints.level.{v} = {l.D},{l.O},{l.S},{l.P}"
            for v, l in self.levels.items()
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "ConstraintTable":
        levels = dict(_DEFAULT_LEVELS)
        for key, value in mapping.items():
            if not key.startswith("constraints.level."):
                continue
            vowel = key[len("constraints.level."):]
            if vowel not in levels:
                raise ConfigError(f"unknown vowel {vowel!r} in constraint table")
            parts = value.split(",")
            if len(parts) != 4:
                raise ConfigError(f"expected 'D,O,S,P' for {vowel}, got {value!r}")
            levels[vowel] = tuple(int(p) for p in parts)
        return cls(levels={v: VowelLevels(*levels[v]) for v in VOWELS})


def default_table() -> ConstraintTable:
    return ConstraintTable(levels={v: VowelLevels(*_DEFAULT_LEVELS[v]) for v in VOWELS})


@dataclass(frozen=True)
class ConstraintEntry:
    theta: float
    sigma: float
    tau: float

    def __post_init__(self):
        if self.sigma <= 0 or self.tau <= 0:
            raise ConfigError("constraint margins and decays must be > 0")

    @property
    def interval(self) -> tuple[float, float]:
        return self.theta - self.sigma, self.theta + self.sigma


@dataclass(frozen=True)
class ConstraintSpec:
    """Targets, margins, decay constants per (vowel, type) plus type weights."""

    entries: Mapping[tuple[str, str], ConstraintEntry]
    weights: Mapping[str, float]

    def __post_init__(self):
        w = dict(self.weights)
        if set(w) != set(CONSTRAINT_TYPES):
            raise ConfigError("weights must cover D, O, S, P")
        if any(x < 0 for x in w.values()):
            raise ConfigError("weights must be >= 0")
        if w["S"] != 0.0:
            raise ConfigError("lip stretching carries a null weight")
        total = sum(w.values())
        if total <= 0:
            raise ConfigError("at least one weight must be positive")
        object.__setattr__(
            self, "weights", {t: w[t] / total for t in CONSTRAINT_TYPES}
        )

    def entry(self, vowel: str, ctype: str) -> ConstraintEntry:
        try:
            return self.entries[(vowel, ctype)]
        except KeyError:
            raise KeyError(f"no constraint entry for vowel {vowel!r}") from None


def _level_slots(n_levels: int, lo: float, hi: float) -> np.ndarray:
    """Equally spaced interior targets for 1-based levels on [lo, hi]."""
    spacing = (hi - lo) / n_levels
    return lo + spacing * (np.arange(n_levels) + 0.5)


def spec_from_table(
    table: ConstraintTable,
    model_cfg: ModelConfig = None,
    *,
    weights: Mapping[str, float] | None = None,
    margin_scale: float = 1.0,
    tau_scale: float = 1.0,
    aperture_span: float = 1.6,
) -> ConstraintSpec:
    """Build per-vowel target intervals from category levels.

    ``margin_scale`` widens or narrows every interval; ``tau_scale``
    adjusts the decay constant relative to the margin.  ``aperture_span``
    bounds the lip-aperture component of the opening targets: opening
    categories occupy moderate apertures, not the closure extremes.
    """
    model_cfg = model_cfg or ModelConfig()
    if margin_scale <= 0 or tau_scale <= 0:
        raise ConfigError("margin_scale and tau_scale must be > 0")
    if not (0.0 < aperture_span <= 3.0):
        raise ConfigError("aperture_span must be in (0, 3]")

    d_lo, d_hi = dorsum_range(model_cfg)
    d_slots = _level_slots(_D_SCALE_LEVELS, d_lo, d_hi)
    d_sigma = (d_hi - d_lo) / _D_SCALE_LEVELS / 2.0

    ap_slots = _level_slots(4, -aperture_span, aperture_span)
    ap_sigma = 2.0 * aperture_span / 4.0 / 2.0

    p_slots = _level_slots(4, -3.0, 3.0)
    p_sigma = 6.0 / 4.0 / 2.0

    blend = model_cfg.opening_blend
    alpha = model_cfg.alpha_compensation

    entries: dict[tuple[str, str], ConstraintEntry] = {}
    for vowel in VOWELS:
        lv = table[vowel]
        theta_d = float(d_slots[lv.D])
        # opening target: aperture at its slot, tongue/jaw at the vowel's
        # dorsum target
        theta_o = blend * float(ap_slots[lv.O - 1]) + (1.0 - blend) * theta_d / (1.0 + alpha)
        sigma_o = blend * ap_sigma
        per_type = {
            "D": (theta_d, d_sigma),
            "O": (theta_o, sigma_o),
            "S": (float(p_slots[lv.S - 1]), p_sigma),
            "P": (float(p_slots[lv.P - 1]), p_sigma),
        }
        for ctype, (theta, sigma) in per_type.items():
            sigma = sigma * margin_scale
            entries[(vowel, ctype)] = ConstraintEntry(
                theta=theta, sigma=sigma, tau=sigma * tau_scale
            )

    if weights is None:
        weights = {"D": 1.0, "O": 1.0, "S": 0.0, "P": 1.0}
    return ConstraintSpec(entries=entries, weights=dict(weights))


@dataclass(frozen=True)
class PhoneticScore:
    overall: float
    components: Mapping[str, float]

    def __post_init__(self):
        if not (0.0 <= self.overall <= 1.0):
            raise ValueError("overall score must lie in [0, 1]")


def component_score(value: float, theta: float, sigma: float, tau: float) -> float:
    """1 inside the validity interval, exponential decay outside."""
    if sigma <= 0 or tau <= 0:
        raise ValueError("sigma and tau must be > 0")
    excess = abs(value - theta) - sigma
    if excess <= 0.0:
        return 1.0
    return float(np.exp(-excess / tau))


def phonetic_score(
    v: ArticulatoryVector,
    vowel: str,
    spec: ConstraintSpec,
    model_cfg: ModelConfig = None,
) -> PhoneticScore:
    """Score a vector against one vowel's constraint intervals."""
    if vowel not in VOWELS:
        raise KeyError(f"unknown vowel id {vowel!r}")
    model_cfg = model_cfg or ModelConfig()
    axes = constraint_axes(v, model_cfg)
    values = {
        "D": axes.dorsum_value,
        "O": axes.opening_value,
        "S": axes.stretch_value,
        "P": axes.protrusion_value,
    }
    components = {}
    for ctype in CONSTRAINT_TYPES:
        e = spec.entry(vowel, ctype)
        components[ctype] = component_score(values[ctype], e.theta, e.sigma, e.tau)
    overall = sum(spec.weights[t] * components[t] for t in CONSTRAINT_TYPES)
    return PhoneticScore(overall=float(overall), components=components)


def ideal_domain_sample(
    vowel: str,
    spec: ConstraintSpec,
    model_cfg: ModelConfig = None,
    n: int = 1,
    seed=0,
) -> list[ArticulatoryVector]:
    """Draw ``n`` valid vectors scoring exactly 1 for the vowel.

    Constrained axes are sampled uniformly inside their validity
    intervals and pulled back through the linear axis maps; unconstrained
    parameters are uniform over their range.  Vectors with closed tracts
    are rejected and redrawn.  Deterministic per seed.
    """
    if vowel not in VOWELS:
        raise KeyError(f"unknown vowel id {vowel!r}")
    model_cfg = model_cfg or ModelConfig()
    if n <= 0:
        return []
    rng = np.random.default_rng(seed)
    alpha = model_cfg.alpha_compensation
    blend = model_cfg.opening_blend
    e_d = spec.entry(vowel, "D")
    e_o = spec.entry(vowel, "O")
    e_p = spec.entry(vowel, "P")

    out: list[ArticulatoryVector] = []
    budget = max(200 * n, 2000)
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > budget:
            raise SamplingError(
                f"could not draw {n} ideal-domain samples for /{vowel}/ "
                f"within {budget} attempts"
            )
        d = rng.uniform(*e_d.interval)
        jw_lo = max(-3.0, (d - 3.0) / alpha)
        jw_hi = min(3.0, (d + 3.0) / alpha)
        if jw_lo > jw_hi:
            continue
        jw = rng.uniform(jw_lo, jw_hi)
        tp = d - alpha * jw

        # opening interval intersected with what the aperture can reach
        shared = (1.0 - blend) * d / (1.0 + alpha)
        o_lo = max(e_o.theta - e_o.sigma, shared - 3.0 * blend)
        o_hi = min(e_o.theta + e_o.sigma, shared + 3.0 * blend)
        if o_lo > o_hi:
            continue
        o = rng.uniform(o_lo, o_hi)
        ap = (o - shared) / blend

        p = rng.uniform(*e_p.interval)
        shape, apex, larynx = rng.uniform(-3.0, 3.0, size=3)
        vec = ArticulatoryVector(
            jaw=jw, tongue_pos=tp, tongue_shape=shape, apex=apex,
            lip_aperture=ap, lip_protrusion=p, larynx=larynx,
        )
        if is_valid(vec, model_cfg):
            out.append(vec)
    return out
