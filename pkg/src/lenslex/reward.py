"""Lexicographic reward for lens prescriptions.

Stages gate one another: format, then structure, then the first-order ray
score, and only when the first-order gate passes does the spot-quality term
contribute,

    r_lex = r_fmt * r_stru * (r_ray + delta_pass * r_rms)

with r_ray = 0.6 * s_f + 0.4 * s_c, the focal score a mixed exponential
decay s_f = 0.7*exp(-eps/0.02) + 0.3*exp(-eps/0.10) in the relative focal
error, the convergence score s_c = exp(-|y_img| / 1 mm), the gate
delta_pass = 1 iff eps < 0.05 and |y_img| < 0.1 mm (strict), and
r_rms = exp(-sigma_max / gamma) with gamma = max(0.05 mm, 0.01 * f).

Everything downstream of a failed stage stays absent; physics failures
collapse to a zero stage with a diagnostic note, never an exception, so
batch scoring survives arbitrary candidate text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import oddl
from .errors import DegeneratePupil, LensLexError, SpotUnavailable
from .prescription import Prescription, Specification
from .tracer import spot_paraxial, trace_first_order
from .validation import check_format, check_structure

ALPHA_STRICT = 0.02
ALPHA_LOOSE = 0.10
MIX_STRICT = 0.7
MIX_LOOSE = 0.3
W_FOCAL = 0.6
W_CONVERGENCE = 0.4
CONVERGENCE_SCALE_MM = 1.0
GATE_EPSILON = 0.05
GATE_Y_IMG_MM = 0.1
GAMMA_FLOOR_MM = 0.05
GAMMA_FRACTION = 0.01


def score_focal(epsilon: float) -> float:
    """Focal accuracy score: mixed strict/loose exponential decay.

    Afocal systems are scored with epsilon = +inf, i.e. zero.
    """
    if math.isinf(epsilon):
        return 0.0
    if epsilon < 0 or math.isnan(epsilon):
        raise ValueError("relative focal error must be >= 0")
    return (MIX_STRICT * math.exp(-epsilon / ALPHA_STRICT)
            + MIX_LOOSE * math.exp(-epsilon / ALPHA_LOOSE))


def score_convergence(y_img: float) -> float:
    """Image-plane convergence score exp(-|y_img| / 1 mm)."""
    if not math.isfinite(y_img):
        raise ValueError("residual image height must be finite")
    return math.exp(-abs(y_img) / CONVERGENCE_SCALE_MM)


def gate(epsilon: float, y_img: float) -> int:
    """Binary gate opening the spot term: both bounds strict."""
    return int(epsilon < GATE_EPSILON and abs(y_img) < GATE_Y_IMG_MM)


def gamma_for(f_effl: float) -> float:
    """Spot tolerance scale: max(0.05 mm, 1% of the focal length)."""
    return max(GAMMA_FLOOR_MM, GAMMA_FRACTION * f_effl)


def score_rms(sigma_max: float, f_effl: float) -> float:
    """Worst-field spot score exp(-sigma_max / gamma)."""
    if sigma_max < 0:
        raise ValueError("sigma_max must be >= 0")
    return math.exp(-sigma_max / gamma_for(f_effl))


@dataclass
class RewardBreakdown:
    """Every reward component, gate state, and the final r_lex.

    Fields downstream of a failed stage are ``None``; the JSON projection
    emits them as nulls in a fixed key order.
    """

    r_fmt: int = 0
    r_stru: int | None = None
    s_f: float | None = None
    s_c: float | None = None
    r_ray: float | None = None
    delta_pass: int | None = None
    r_rms: float | None = None
    r_lex: float = 0.0
    epsilon: float | None = None
    y_img_abs: float | None = None
    sigma_max: float | None = None
    gamma: float | None = None
    note: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "r_fmt": self.r_fmt,
            "r_stru": self.r_stru,
            "s_f": self.s_f,
            "s_c": self.s_c,
            "r_ray": self.r_ray,
            "delta_pass": self.delta_pass,
            "r_rms": self.r_rms,
            "r_lex": self.r_lex,
            "epsilon": self.epsilon,
            "y_img_abs": self.y_img_abs,
            "sigma_max": self.sigma_max,
            "gamma": self.gamma,
            "note": self.note,
        }


def _notes(*parts: str | None) -> str | None:
    kept = [p for p in parts if p]
    return "; ".join(kept) if kept else None


def score(p: Prescription, spec: Specification, *, gamma_from_calc: bool = False) -> RewardBreakdown:
    """Run the full lexicographic pipeline against a demand specification.

    The candidate's own SPEC lines are what the format stage checks; the
    demand ``spec`` (merged with the embedded values by the caller) is what
    the physics is scored against. ``gamma_from_calc`` switches the spot
    tolerance to the traced focal length instead of the target.
    """
    fmt = check_format(p)
    if fmt.r_fmt != 1:
        return RewardBreakdown(r_fmt=0, r_lex=0.0,
                               note=_notes(*(v.message for v in fmt.violations)))
    structure = check_structure(p)
    if structure.r_stru != 1:
        return RewardBreakdown(r_fmt=1, r_stru=0, r_lex=0.0,
                               note=_notes(*(v.message for v in structure.violations)))

    demand = spec.merged_over(p.spec)
    traced = p.with_spec(demand)
    note_parts: list[str] = []
    try:
        tr = trace_first_order(traced)
    except (LensLexError, ValueError, ZeroDivisionError) as e:
        return RewardBreakdown(r_fmt=1, r_stru=1, s_f=0.0, s_c=0.0, r_ray=0.0,
                               delta_pass=0, r_lex=0.0, note=f"trace failed: {e}")

    f_target = demand.effl_target
    if tr.afocal:
        epsilon = math.inf
        note_parts.append("afocal system: focal error treated as infinite")
    else:
        epsilon = abs(tr.effl_calc - f_target) / f_target
    s_f = score_focal(epsilon)
    s_c = score_convergence(tr.y_img)
    r_ray = W_FOCAL * s_f + W_CONVERGENCE * s_c
    delta = gate(epsilon, tr.y_img)
    gamma = gamma_for(tr.effl_calc if gamma_from_calc else f_target)

    r_rms: float | None = None
    sigma_max: float | None = None
    if delta:
        try:
            spot = spot_paraxial(traced)
            sigma_max = spot.sigma_max
            r_rms = math.exp(-sigma_max / gamma)
        except (DegeneratePupil, SpotUnavailable) as e:
            r_rms = 0.0
            note_parts.append(f"spot unavailable: {e}")

    r_lex = 1 * 1 * (r_ray + delta * (r_rms if r_rms is not None else 0.0))
    return RewardBreakdown(
        r_fmt=1, r_stru=1, s_f=s_f, s_c=s_c, r_ray=r_ray, delta_pass=delta,
        r_rms=r_rms, r_lex=r_lex,
        epsilon=None if math.isinf(epsilon) else epsilon,
        y_img_abs=abs(tr.y_img),
        sigma_max=sigma_max,
        gamma=None if math.isinf(gamma) else gamma,
        note=_notes(*note_parts),
    )


def score_text(text: str, effl: float | None = None, fov: float | None = None,
               fno: float | None = None, *, gamma_from_calc: bool = False) -> RewardBreakdown:
    """Score raw ODDL text: parse failures become r_fmt = 0, never raise."""
    try:
        p = oddl.parse(text)
    except LensLexError as e:
        return RewardBreakdown(r_fmt=0, r_lex=0.0, note=f"parse failed: {e}")
    try:
        demand = Specification(effl_target=effl, fov_full=fov, f_number=fno)
    except ValueError as e:
        raise ValueError(f"invalid demand specification: {e}") from None
    return score(p, demand, gamma_from_calc=gamma_from_calc)
