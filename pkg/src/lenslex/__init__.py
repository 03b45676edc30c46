"""lenslex: lens prescription evaluation.

Parse ODDL prescriptions, verify physical and structural validity, compute
first-order optics and spot quality by ray tracing, aggregate the
lexicographic reward with group-relative advantages, and refine designs
with a damped least-squares local optimizer.
"""

from .catalog import lookup_material
from .errors import (
    ApertureExceedsRadius,
    DegeneratePupil,
    DuplicateSpec,
    LensLexError,
    MissedSurface,
    NothingToMask,
    ParseError,
    RenderError,
    ShapeMismatch,
    SpotUnavailable,
    TotalInternalReflection,
    UnknownMaterial,
    ZeroVariance,
)
from .grpo import SurrogateInputs, clipped_term, group_advantages, grpo_advantages_reference, objective
from .oddl import parse, serialize
from .optimizer import MeritConfig, OptimizeResult, merit, refine
from .prescription import (
    AIR,
    Kind,
    MaskedPrescription,
    Material,
    Prescription,
    Role,
    Specification,
    Surface,
    mask,
)
from .reward import RewardBreakdown, gate, score, score_convergence, score_focal, score_rms, score_text
from .tracer import (
    RayState,
    SpotReport,
    TraceReport,
    paraxial_step,
    solve_stop_ray,
    spot_paraxial,
    trace_first_order,
    trace_path,
    trace_real_meridional,
)
from .validation import ValidationReport, check_format, check_structure, edge_thickness, sag, validate

__version__ = "0.1.0"
