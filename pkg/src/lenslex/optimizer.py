"""Local refinement by damped least squares.

Minimizes a merit function over curvatures and air gaps, standing in for a
commercial optimizer's local refinement stage. The merit is a sum of
squared residuals

    w_effl * eps^2  +  w_spot * sum_k sigma_k^2  +  penalty * sum max(0, -margin)^2

with margins for thickness positivity, the back focal gap, and element edge
thickness. The Jacobian is forward-difference; a Levenberg damping ladder
lambda = 1e-3 * 4^k is walked until a step decreases the merit, so the
accepted-merit sequence is monotone by construction. Failed traces
contribute a large finite penalty (1e6), keeping the landscape finite.

Everything is deterministic: fixed difference steps, a fixed damping
schedule restarted each iteration, and a post-step projection clamping
thicknesses at 1e-3 mm so refined prescriptions stay physically causal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import LensLexError
from .prescription import Kind, Prescription, Specification
from .reward import RewardBreakdown, score
from .tracer import solve_stop_ray, spot_paraxial, trace_first_order, trace_real_meridional
from .validation import ApertureExceedsRadius, edge_thickness

RADII = "radii"
AIR_GAPS = "gaps"
BOTH = "both"

TRACE_FAILURE_PENALTY = 1.0e6
MIN_THICKNESS_MM = 1.0e-3
DAMPING_BASE = 1.0e-3
DAMPING_GROWTH = 4.0
MAX_DAMPING_LEVELS = 50
_FD_STEP = 1.0e-6


@dataclass(frozen=True)
class MeritConfig:
    w_effl: float = 1.0
    w_spot: float = 1.0
    penalty_scale: float = 1.0e3
    free_variables: str = BOTH
    max_iters: int = 200
    rel_tolerance: float = 1.0e-9
    spot_metric: str = "paraxial"

    def __post_init__(self):
        if self.w_effl < 0 or self.w_spot < 0 or self.penalty_scale < 0:
            raise ValueError("merit weights must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.free_variables not in (RADII, AIR_GAPS, BOTH):
            raise ValueError(f"free_variables must be one of {RADII!r}, {AIR_GAPS!r}, {BOTH!r}")
        if self.spot_metric not in ("paraxial", "real"):
            raise ValueError("spot_metric must be 'paraxial' or 'real'")


@dataclass(frozen=True)
class OptimizeResult:
    refined: Prescription
    merit_initial: float
    merit_final: float
    iterations: int
    converged: bool
    reward_before: RewardBreakdown
    reward_after: RewardBreakdown


def _free_variables(p: Prescription, cfg: MeritConfig) -> list[tuple[str, int]]:
    """(kind, surface index) pairs; the image-side air gap is always free."""
    variables: list[tuple[str, int]] = []
    last_interior = len(p.surfaces) - 2
    for i, s in enumerate(p.surfaces):
        if not 0 < i <= last_interior:
            continue
        if cfg.free_variables in (RADII, BOTH) and s.radius is not None \
                and math.isfinite(s.radius):
            variables.append(("curv", i))
        is_gap = s.material is not None and s.material.kind is Kind.AIR
        free_gap = cfg.free_variables in (AIR_GAPS, BOTH) and is_gap
        if (free_gap or i == last_interior) and s.thickness is not None:
            variables.append(("thick", i))
    return variables


def _pack(p: Prescription, variables: list[tuple[str, int]]) -> np.ndarray:
    x = np.empty(len(variables))
    for j, (kind, i) in enumerate(variables):
        s = p.surfaces[i]
        x[j] = 1.0 / s.radius if kind == "curv" else s.thickness
    return x


def _unpack(p: Prescription, variables: list[tuple[str, int]], x: np.ndarray) -> Prescription:
    surfaces = list(p.surfaces)
    for j, (kind, i) in enumerate(variables):
        if kind == "curv":
            radius = math.inf if x[j] == 0 else 1.0 / x[j]
            surfaces[i] = replace(surfaces[i], radius=radius)
        else:
            surfaces[i] = replace(surfaces[i], thickness=max(float(x[j]), MIN_THICKNESS_MM))
    return replace(p, surfaces=tuple(surfaces))


def _spot_sigmas(p: Prescription, cfg: MeritConfig) -> list[float]:
    if cfg.spot_metric == "paraxial":
        return list(spot_paraxial(p).sigma)
    # real-ray spot: same stop-referenced fan, exact propagation
    fov = p.spec.fov_full
    if fov is None:
        raise LensLexError("field of view unavailable for real spot")
    sigmas = []
    for theta in (0.0, math.radians(fov) / 2.0):
        heights = []
        for rho in (-1.0, -0.5, 0.0, 0.5, 1.0):
            launch = solve_stop_ray(p, theta, rho)
            heights.append(trace_real_meridional(p, launch).y_image)
        mean = sum(heights) / len(heights)
        sigmas.append(math.sqrt(sum((h - mean) ** 2 for h in heights) / len(heights)))
    return sigmas


def residuals(p: Prescription, spec: Specification, cfg: MeritConfig) -> np.ndarray:
    """Residual vector whose squared norm is the merit."""
    demand = spec.merged_over(p.spec)
    traced = p.with_spec(demand)
    out: list[float] = []

    try:
        tr = trace_first_order(traced)
        if tr.afocal or demand.effl_target is None:
            out.append(math.sqrt(TRACE_FAILURE_PENALTY))
        else:
            eps = abs(tr.effl_calc - demand.effl_target) / demand.effl_target
            out.append(math.sqrt(cfg.w_effl) * eps)
    except (LensLexError, ValueError, ZeroDivisionError):
        out.append(math.sqrt(TRACE_FAILURE_PENALTY))

    try:
        for sigma in _spot_sigmas(traced, cfg):
            out.append(math.sqrt(cfg.w_spot) * sigma)
    except (LensLexError, ValueError, ZeroDivisionError):
        out.append(math.sqrt(TRACE_FAILURE_PENALTY))

    root_penalty = math.sqrt(cfg.penalty_scale)
    surfaces = p.surfaces
    for i in range(1, len(surfaces) - 1):
        t = surfaces[i].thickness
        margin = t if t is not None else -1.0
        out.append(root_penalty * max(0.0, -margin))
    # back focal gap, re-asserted on top of its thickness term
    bfl = surfaces[-2].thickness if len(surfaces) >= 2 else None
    out.append(root_penalty * max(0.0, -(bfl if bfl is not None else -1.0)))
    for i in range(1, len(surfaces) - 1):
        front = surfaces[i]
        if front.material is None or not front.material.is_glass or i + 1 >= len(surfaces) - 1:
            continue
        back = surfaces[i + 1]
        semis = [s.semi_diameter for s in (front, back)
                 if s.semi_diameter is not None and math.isfinite(s.semi_diameter)]
        if not semis or front.radius is None or back.radius is None or front.thickness is None:
            continue
        h = max(semis)
        try:
            d_e = edge_thickness(front.thickness, front.radius, back.radius, h)
            out.append(root_penalty * max(0.0, -d_e))
        except ApertureExceedsRadius:
            out.append(root_penalty * (h - min(abs(front.radius), abs(back.radius))))
    return np.array(out)


def merit(p: Prescription, spec: Specification, cfg: MeritConfig) -> float:
    """Scalar merit: squared norm of the residual vector. Zero only for a
    perfect, constraint-clean system."""
    r = residuals(p, spec, cfg)
    return float(np.dot(r, r))


def refine(p: Prescription, spec: Specification, cfg: MeritConfig | None = None) -> OptimizeResult:
    """Damped least-squares refinement from a format/structure-valid start.

    Accepts a step only when the merit strictly decreases; otherwise the
    damping is raised through a fixed ladder. When no damping level helps
    on the very first iteration the input is returned unchanged with
    ``converged=False`` (nothing improvable).
    """
    cfg = cfg or MeritConfig()
    variables = _free_variables(p, cfg)
    reward_before = score(p, spec)

    x = _pack(p, variables)
    current = p
    r = residuals(current, spec, cfg)
    m = float(np.dot(r, r))
    merit_initial = m
    accepted = 0
    converged = False

    for iteration in range(1, cfg.max_iters + 1):
        if not variables:
            break
        jac = _jacobian(current, spec, cfg, variables, x, r)
        step = _find_descent_step(jac, r, x, p, variables, spec, cfg, m)
        if step is None:
            converged = iteration > 1
            break
        x, current, r, m_new = step
        accepted += 1
        rel_change = (m - m_new) / m if m > 0 else 0.0
        m = m_new
        if rel_change < cfg.rel_tolerance:
            converged = True
            break
    # falling out of the loop means the iteration budget ran dry while the
    # merit was still moving: not converged

    if accepted == 0:
        return OptimizeResult(refined=p, merit_initial=merit_initial,
                              merit_final=merit_initial, iterations=0, converged=False,
                              reward_before=reward_before, reward_after=reward_before)
    return OptimizeResult(refined=current, merit_initial=merit_initial, merit_final=m,
                          iterations=accepted, converged=converged,
                          reward_before=reward_before,
                          reward_after=score(current, spec))


def _jacobian(current, spec, cfg, variables, x, r) -> np.ndarray:
    jac = np.empty((len(r), len(x)))
    for j in range(len(x)):
        h = max(_FD_STEP, _FD_STEP * abs(x[j]))
        x_probe = x.copy()
        x_probe[j] += h
        r_probe = residuals(_unpack_raw(current, variables, x_probe, j), spec, cfg)
        jac[:, j] = (r_probe - r) / h
    return jac


def _unpack_raw(p, variables, x, j_changed):
    # probe points skip the thickness clamp so the derivative is of the raw
    # parameter; accepted steps always go through _unpack
    kind, i = variables[j_changed]
    s = p.surfaces[i]
    if kind == "curv":
        radius = math.inf if x[j_changed] == 0 else 1.0 / x[j_changed]
        return p.with_surface(i, replace(s, radius=radius))
    return p.with_surface(i, replace(s, thickness=float(x[j_changed])))


def _find_descent_step(jac, r, x, p, variables, spec, cfg, m_current):
    jtj = jac.T @ jac
    jtr = jac.T @ r
    identity = np.eye(len(x))
    for level in range(MAX_DAMPING_LEVELS):
        damping = DAMPING_BASE * DAMPING_GROWTH ** level
        try:
            delta = np.linalg.solve(jtj + damping * identity, -jtr)
        except np.linalg.LinAlgError:
            continue
        x_new = x + delta
        candidate = _unpack(p, variables, x_new)
        r_new = residuals(candidate, spec, cfg)
        m_new = float(np.dot(r_new, r_new))
        if m_new < m_current:
            # re-pack so x reflects the clamped prescription
            x_clamped = _pack(candidate, variables)
            return x_clamped, candidate, r_new, m_new
    return None
