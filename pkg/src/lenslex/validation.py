"""Format and structure gatekeepers.

``check_format`` runs the four hierarchical stages (existence, topology,
completeness, causality) and stops at the first failing stage: downstream
physics is never evaluated on a prescription that failed an earlier stage.
``check_structure`` applies the physical-soundness rules (surface count,
positive thicknesses, air before the image plane, non-negative edge
thickness). Both encode failures in the report instead of raising, matching
the reward-of-zero semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ApertureExceedsRadius
from .prescription import Kind, Prescription, Role, Surface

# Stage labels, in gate order. The first four zero the format reward; the
# last two zero the structure reward.
EXISTENCE = "EXISTENCE"
TOPOLOGY = "TOPOLOGY"
COMPLETENESS = "COMPLETENESS"
CAUSALITY = "CAUSALITY"
STRUCTURE = "STRUCTURE"
PLAUSIBILITY = "PLAUSIBILITY"

_FORMAT_STAGES = (EXISTENCE, TOPOLOGY, COMPLETENESS, CAUSALITY)


@dataclass
class Violation:
    stage: str
    code: str
    message: str
    surface: int | None = None

    def to_json_dict(self) -> dict:
        return {"stage": self.stage, "code": self.code,
                "message": self.message, "surface": self.surface}


@dataclass
class ValidationReport:
    """Binary gate results plus the rule violations behind them.

    ``r_stru`` is ``None`` until the structure check actually ran; the
    composed pipeline only runs it when the format gate passed.
    """

    r_fmt: int | None = None
    r_stru: int | None = None
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "r_fmt": self.r_fmt,
            "r_stru": self.r_stru,
            "violations": [v.to_json_dict() for v in self.violations],
            "warnings": list(self.warnings),
        }


def sag(radius: float, h: float) -> float:
    """Signed sag of a spherical cap of radius ``radius`` at height ``h``.

    sign(R) * (|R| - sqrt(R^2 - h^2)); zero for a plano surface.

    Raises:
        ApertureExceedsRadius: ``h`` exceeds ``|radius|`` for a finite radius.
    """
    if math.isinf(radius):
        return 0.0
    if h > abs(radius):
        raise ApertureExceedsRadius(f"semi-diameter {h} exceeds |R| = {abs(radius)}")
    drop = abs(radius) - math.sqrt(radius * radius - h * h)
    return math.copysign(drop, radius)


def edge_thickness(center: float, r1: float, r2: float, h: float) -> float:
    """Element edge thickness at semi-diameter ``h``.

    d_e = center - sag(r1, h) + sag(r2, h). A negative result is a
    knife-edge: unmanufacturable.
    """
    if not h > 0:
        raise ValueError("semi-diameter must be positive")
    return center - sag(r1, h) + sag(r2, h)


def check_format(p: Prescription) -> ValidationReport:
    """Run the four-stage format gate; stop at the first failing stage."""
    report = ValidationReport()
    for stage in _FORMAT_STAGES:
        found = _STAGE_CHECKS[stage](p)
        if found:
            report.violations.extend(found)
            report.r_fmt = 0
            return report
    report.r_fmt = 1
    return report


def _check_existence(p: Prescription) -> list[Violation]:
    out = []
    if p.spec.effl_target is None:
        out.append(Violation(EXISTENCE, "missing-effl", "no EFFL specification declared"))
    if not p.surfaces:
        out.append(Violation(EXISTENCE, "no-surfaces", "no surface table present"))
    return out


def _check_topology(p: Prescription) -> list[Violation]:
    out = []
    if p.surfaces[0].role is not Role.OBJ:
        out.append(Violation(TOPOLOGY, "first-not-obj", "first surface must be the object plane", 0))
    if p.surfaces[-1].role is not Role.IMAGE:
        out.append(Violation(TOPOLOGY, "last-not-ima", "last surface must be the image plane",
                             len(p.surfaces) - 1))
    stops = [i for i, s in enumerate(p.surfaces) if s.role is Role.STOP]
    if len(stops) != 1:
        out.append(Violation(TOPOLOGY, "missing-stop", "exactly one aperture stop is required"))
    elif not 0 < stops[0] < len(p.surfaces) - 1:
        out.append(Violation(TOPOLOGY, "stop-at-boundary",
                             "aperture stop must lie strictly between object and image", stops[0]))
    for i, s in enumerate(p.surfaces):
        if s.role is Role.OBJ and i != 0:
            out.append(Violation(TOPOLOGY, "stray-obj", "object plane declared mid-table", i))
        if s.role is Role.IMAGE and i != len(p.surfaces) - 1:
            out.append(Violation(TOPOLOGY, "stray-ima", "image plane declared mid-table", i))
    return out


def _check_completeness(p: Prescription) -> list[Violation]:
    out = []
    for i, s in enumerate(p.surfaces):
        if s.radius is None:
            out.append(Violation(COMPLETENESS, "masked-radius", "radius value missing", i))
        if s.thickness is None:
            out.append(Violation(COMPLETENESS, "masked-thickness", "thickness value missing", i))
        if s.material is None:
            out.append(Violation(COMPLETENESS, "masked-material", "material value missing", i))
        elif s.material.is_glass:
            n_d, v_d = s.material.n_d, s.material.v_d
            if not 1.0 < n_d < 2.5:
                out.append(Violation(COMPLETENESS, "index-out-of-range",
                                     f"glass index {n_d} outside (1.0, 2.5)", i))
            if v_d is None or not 10.0 < v_d < 100.0:
                out.append(Violation(COMPLETENESS, "abbe-out-of-range",
                                     f"Abbe number {v_d} outside (10, 100)", i))
    return out


def _check_causality(p: Prescription) -> list[Violation]:
    out = []
    if len(p.surfaces) < 2:
        return out
    pen = p.surfaces[-2]
    pen_index = len(p.surfaces) - 2
    if pen.material is None or pen.material.kind is not Kind.AIR:
        out.append(Violation(CAUSALITY, "glass-before-image",
                             "medium preceding the image plane must be air", pen_index))
    if pen.thickness is None or not pen.thickness > 0:
        out.append(Violation(CAUSALITY, "bfl-not-positive",
                             "back focal distance must be strictly positive", pen_index))
    return out


_STAGE_CHECKS = {
    EXISTENCE: _check_existence,
    TOPOLOGY: _check_topology,
    COMPLETENESS: _check_completeness,
    CAUSALITY: _check_causality,
}


def check_structure(p: Prescription) -> ValidationReport:
    """Physical-soundness rules. Callable standalone on any prescription;
    the composed pipeline invokes it only after the format gate passed."""
    report = ValidationReport()
    violations = report.violations

    if len(p.surfaces) < 3:
        violations.append(Violation(STRUCTURE, "too-few-surfaces",
                                    "at least three surfaces are required"))

    interior = list(enumerate(p.surfaces))[1:-1]
    for i, s in interior:
        if s.thickness is None or not s.thickness > 0:
            violations.append(Violation(STRUCTURE, "non-positive-thickness",
                                        f"thickness {s.thickness} must be positive", i))

    if len(p.surfaces) >= 2:
        pen = p.surfaces[-2]
        if pen.material is not None and pen.material.is_glass:
            violations.append(Violation(STRUCTURE, "glass-before-image",
                                        "the gap adjacent to the image plane must be air",
                                        len(p.surfaces) - 2))
        if pen.thickness is not None and math.isfinite(pen.thickness) and not pen.thickness > 0:
            violations.append(Violation(STRUCTURE, "bfl-not-positive",
                                        "back focal distance must be strictly positive",
                                        len(p.surfaces) - 2))

    for i, front in interior:
        if front.material is None or not front.material.is_glass:
            continue
        if i + 1 >= len(p.surfaces) - 1:
            continue  # glass running into the image plane is reported above
        back = p.surfaces[i + 1]
        _check_element_edge(report, i, front, back)

    report.r_stru = 0 if violations else 1
    return report


def _check_element_edge(report: ValidationReport, i: int, front: Surface, back: Surface) -> None:
    if front.radius is None or back.radius is None or front.thickness is None:
        report.warnings.append(f"surface {i}: edge thickness skipped (masked values)")
        return
    semis = [s.semi_diameter for s in (front, back)
             if s.semi_diameter is not None and math.isfinite(s.semi_diameter)]
    if not semis:
        report.warnings.append(f"surface {i}: edge thickness skipped (no semi-diameter stated)")
        return
    h = max(semis)
    try:
        d_e = edge_thickness(front.thickness, front.radius, back.radius, h)
    except ApertureExceedsRadius:
        report.violations.append(Violation(
            PLAUSIBILITY, "aperture-exceeds-radius",
            f"semi-diameter {h} exceeds a surface radius of element at surface {i}", i))
        return
    if d_e < 0:
        report.violations.append(Violation(
            PLAUSIBILITY, "knife-edge",
            f"edge thickness {d_e:.6g} mm is negative at semi-diameter {h}", i))


def validate(p: Prescription) -> ValidationReport:
    """Composed gate: format first, structure only when format passes."""
    report = check_format(p)
    if report.r_fmt != 1:
        return report
    structure = check_structure(p)
    report.r_stru = structure.r_stru
    report.violations.extend(structure.violations)
    report.warnings.extend(structure.warnings)
    return report
