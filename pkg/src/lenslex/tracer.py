"""Paraxial and real-ray tracing.

The paraxial engine follows the y-u recursion: at each surface the slope is
bent by the surface power,

    u' = (n*u - y*(n' - n)*c) / n'
    y_next = y + u' * t

with c the curvature (1/R, 0 for plano), t the distance to the next surface,
and n/n' the indices before/after. Sign convention: light travels in +z, a
radius is positive when its center of curvature lies right of the vertex, and
u is the slope dy/dz.

First-order quantities come from a marginal ray entering parallel to the
axis (u0 = 0, y0 = EPD/2): EFFL = -y0/u', BFL = -y_last/u'. Spot sampling
targets the physical stop plane: the launch height for a requested
normalized pupil coordinate is found by a two-ray linear solve, exact
because paraxial propagation is linear in the launch state.

The real tracer intersects meridional rays with each spherical surface
exactly and refracts by Snell's law; it exists for the optimizer's final
spot report and the layout renderer, and converges to the paraxial result
as the launch height shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegeneratePupil, MissedSurface, SpotUnavailable, TotalInternalReflection
from .prescription import Prescription, Role

#: |u'| below this multiple of the launch height counts as afocal.
AFOCAL_REL_TOL = 1e-12
#: Stop-height sensitivity below this is a degenerate pupil solve.
PUPIL_SENSITIVITY_TOL = 1e-12
#: Normalized pupil coordinates of the 5-ray sampling fan.
PUPIL_FAN = (-1.0, -0.5, 0.0, 0.5, 1.0)
#: Fallback marginal launch height when no entrance pupil is derivable.
DEFAULT_LAUNCH_HEIGHT = 1.0


@dataclass(frozen=True)
class RayState:
    """Paraxial ray: height above axis (mm) and slope dy/dz."""

    y: float
    u: float


@dataclass(frozen=True)
class TraceReport:
    """First-order results of the marginal trace.

    ``effl_calc``/``bfl_calc`` are ``math.inf`` when the system is afocal.
    ``totr`` spans the first lens vertex through the image plane.
    """

    effl_calc: float
    bfl_calc: float
    y_img: float
    totr: float
    afocal: bool

    def to_json_dict(self) -> dict:
        return {
            "effl_calc": None if math.isinf(self.effl_calc) else self.effl_calc,
            "bfl_calc": None if math.isinf(self.bfl_calc) else self.bfl_calc,
            "y_img": self.y_img,
            "totr": self.totr,
            "afocal": self.afocal,
        }


@dataclass(frozen=True)
class SpotReport:
    """Per-field RMS spot radii and the raw image-plane hits behind them."""

    sigma: tuple[float, ...]
    sigma_max: float
    hits: tuple[tuple[tuple[float, float], ...], ...]

    def to_json_dict(self) -> dict:
        return {
            "sigma": list(self.sigma),
            "sigma_max": self.sigma_max,
            "hits": [[[rho, h] for rho, h in fan] for fan in self.hits],
        }


@dataclass(frozen=True)
class ParaxialTrail:
    """Heights at each interior surface, slopes after each, image height."""

    ys: tuple[float, ...]
    us: tuple[float, ...]
    y_image: float


def curvature_of(radius: float) -> float:
    return 0.0 if math.isinf(radius) else 1.0 / radius


def paraxial_step(state: RayState, curvature: float, n_before: float,
                  n_after: float, thickness: float) -> RayState:
    """One refract-then-transfer step of the y-u recursion.

    Returns the state after the surface: the slope u' immediately past it
    and the height at the next surface, thickness ``t`` downstream.
    """
    u_after = (n_before * state.u - state.y * (n_after - n_before) * curvature) / n_after
    return RayState(y=state.y + u_after * thickness, u=u_after)


def trace_path(p: Prescription, launch: RayState) -> ParaxialTrail:
    """Propagate a paraxial ray through every interior surface to the image.

    The launch state is defined at the plane of the first interior surface.
    """
    ys: list[float] = []
    us: list[float] = []
    n_in = p.surfaces[0].material.n_d
    state = launch
    for s in p.interior():
        ys.append(state.y)
        n_out = s.material.n_d
        state = paraxial_step(state, curvature_of(s.radius), n_in, n_out, s.thickness)
        us.append(state.u)
        n_in = n_out
    return ParaxialTrail(ys=tuple(ys), us=tuple(us), y_image=state.y)


def launch_height(p: Prescription) -> float:
    """Marginal launch height EPD/2, or a 1 mm fallback when underivable."""
    epd = p.spec.epd
    return epd / 2.0 if epd is not None else DEFAULT_LAUNCH_HEIGHT


def trace_first_order(p: Prescription, y0: float | None = None) -> TraceReport:
    """First-order trace of the parallel marginal ray.

    ``y0`` overrides the EPD/2 launch height (EFFL and BFL are independent
    of it; the residual image height scales with it).
    """
    if y0 is None:
        y0 = launch_height(p)
    if y0 == 0:
        raise ValueError("marginal launch height must be nonzero")
    trail = trace_path(p, RayState(y=y0, u=0.0))
    u_exit = trail.us[-1]
    totr = sum(s.thickness for s in p.interior())
    afocal = abs(u_exit) < AFOCAL_REL_TOL * abs(y0)
    if afocal:
        effl = bfl = math.inf
    else:
        effl = -y0 / u_exit
        bfl = -trail.ys[_rear_vertex_pos(p)] / u_exit
    return TraceReport(effl_calc=effl, bfl_calc=bfl, y_img=trail.y_image,
                       totr=totr, afocal=afocal)


def _rear_vertex_pos(p: Prescription) -> int:
    """Interior position of the last lens element's rear vertex.

    The back focal distance is measured from the posterior vertex of the
    last element, so trailing dummy rows must not move it. Without any
    glass the last interior surface stands in.
    """
    interior = p.interior()
    n_in = p.surfaces[0].material.n_d
    rear = len(interior) - 1
    for pos, s in enumerate(interior):
        if n_in != 1.0:
            rear = pos
        n_in = s.material.n_d
    return rear


def _stop_geometry(p: Prescription) -> tuple[int, float]:
    """Interior position of the stop and its semi-diameter."""
    stop = p.stop_index
    if stop is None or not 0 < stop < len(p.surfaces) - 1:
        raise SpotUnavailable("prescription has no interior aperture stop")
    r_stop = p.surfaces[stop].semi_diameter
    if r_stop is None or not math.isfinite(r_stop):
        raise SpotUnavailable("aperture stop has no finite semi-diameter")
    return stop - 1, r_stop


def solve_stop_ray(p: Prescription, field_angle: float, rho: float) -> RayState:
    """Launch state whose traced height at the stop plane is rho * r_stop.

    Paraxial propagation is linear in the launch height, so two basis
    traces (y0 = 0 and y0 = 1 at fixed field slope) determine the height
    at the stop as an affine function of y0; the requested pupil height
    is one division away.

    Raises:
        DegeneratePupil: the stop height does not respond to the launch
            height (sensitivity below 1e-12).
    """
    stop_pos, r_stop = _stop_geometry(p)
    u0 = math.tan(field_angle)
    base = trace_path(p, RayState(y=0.0, u=u0)).ys[stop_pos]
    slope = trace_path(p, RayState(y=1.0, u=u0)).ys[stop_pos] - base
    if abs(slope) < PUPIL_SENSITIVITY_TOL:
        raise DegeneratePupil("stop height is insensitive to the launch height")
    return RayState(y=(rho * r_stop - base) / slope, u=u0)


def spot_paraxial(p: Prescription) -> SpotReport:
    """RMS spot radii from the 5-ray stop-referenced fan, per field.

    Fields are the axis and the half field; the fan covers normalized pupil
    coordinates {-1, -0.5, 0, 0.5, 1}. Each ray is propagated to the
    prescription's stated image plane. Summation order is fixed so results
    are bit-reproducible.
    """
    if p.spec.fov_full is None:
        raise SpotUnavailable("field of view unavailable for spot sampling")
    fields = (0.0, math.radians(p.spec.fov_full) / 2.0)
    sigmas: list[float] = []
    hits: list[tuple[tuple[float, float], ...]] = []
    for theta in fields:
        fan: list[tuple[float, float]] = []
        for rho in PUPIL_FAN:
            launch = solve_stop_ray(p, theta, rho)
            fan.append((rho, trace_path(p, launch).y_image))
        mean = sum(h for _, h in fan) / len(fan)
        var = sum((h - mean) ** 2 for _, h in fan) / len(fan)
        sigmas.append(math.sqrt(var))
        hits.append(tuple(fan))
    return SpotReport(sigma=tuple(sigmas), sigma_max=max(sigmas), hits=tuple(hits))


# --- exact meridional real-ray trace ------------------------------------

_FORWARD_EPS = 1e-9


@dataclass(frozen=True)
class RealTrace:
    """Polyline of surface intersections plus the image-plane hit."""

    points: tuple[tuple[float, float], ...]
    y_image: float
    warnings: tuple[str, ...] = ()


def trace_real_meridional(p: Prescription, launch: RayState,
                          wavelength: str = "d") -> RealTrace:
    """Exact meridional trace: ray-sphere intersections and Snell refraction.

    The launch state is defined at the first interior vertex plane (z = 0)
    and back-extended in a straight line so surfaces bulging toward the
    object are still met. Semi-diameter overflow is recorded as a warning,
    never an error; the reward never vignettes.

    Raises:
        TotalInternalReflection: critical angle exceeded at a surface.
        MissedSurface: no valid intersection ahead of the ray.
    """
    if wavelength != "d":
        raise ValueError("only the d-line is traced")
    interior = p.interior()
    first_r = interior[0].radius
    runway = 1.0 + (abs(first_r) if math.isfinite(first_r) and first_r < 0 else 0.0)

    pz, py = -runway, launch.y - launch.u * runway
    norm = math.hypot(1.0, launch.u)
    dz, dy = 1.0 / norm, launch.u / norm

    points: list[tuple[float, float]] = [(pz, py)]
    warnings: list[str] = []
    n_in = p.surfaces[0].material.n_d
    vertex_z = 0.0

    for idx, s in enumerate(interior, start=1):
        hz, hy = _intersect(pz, py, dz, dy, vertex_z, s.radius, idx, points)
        points.append((hz, hy))
        if s.semi_diameter is not None and math.isfinite(s.semi_diameter) \
                and abs(hy) > s.semi_diameter:
            warnings.append(f"surface {idx}: ray height {hy:.6g} exceeds semi-diameter")
        n_out = s.material.n_d
        if n_out != n_in:
            nz, ny = _surface_normal(hz, hy, vertex_z, s.radius)
            dz, dy = _refract(dz, dy, nz, ny, n_in, n_out, idx, points)
        if dz <= _FORWARD_EPS:
            raise MissedSurface(idx, points)
        pz, py = hz, hy
        n_in = n_out
        vertex_z += s.thickness

    # vertex_z now sits at the image plane
    t = (vertex_z - pz) / dz
    y_image = py + t * dy
    points.append((vertex_z, y_image))
    return RealTrace(points=tuple(points), y_image=y_image, warnings=tuple(warnings))


def _intersect(pz: float, py: float, dz: float, dy: float, vertex_z: float,
               radius: float, idx: int, points: list) -> tuple[float, float]:
    if math.isinf(radius):
        t = (vertex_z - pz) / dz
        if t < -_FORWARD_EPS:
            raise MissedSurface(idx, points)
        return vertex_z, py + max(t, 0.0) * dy
    zc = vertex_z + radius
    ocz, ocy = pz - zc, py
    b = ocz * dz + ocy * dy
    c = ocz * ocz + ocy * ocy - radius * radius
    disc = b * b - c
    if disc < 0:
        raise MissedSurface(idx, points)
    root = math.sqrt(disc)
    for t in sorted((-b - root, -b + root)):
        if t < _FORWARD_EPS:
            continue
        hz = pz + t * dz
        # keep the hemisphere cap facing the vertex: z < center for R > 0
        if (zc - hz) * radius > 0:
            return hz, py + t * dy
    raise MissedSurface(idx, points)


def _surface_normal(hz: float, hy: float, vertex_z: float, radius: float) -> tuple[float, float]:
    """Unit normal at the hit point, oriented into the incident medium."""
    if math.isinf(radius):
        return -1.0, 0.0
    zc = vertex_z + radius
    return (hz - zc) / radius, hy / radius


def _refract(dz: float, dy: float, nz: float, ny: float,
             n1: float, n2: float, idx: int, points: list) -> tuple[float, float]:
    eta = n1 / n2
    cos_i = -(nz * dz + ny * dy)
    sin2_t = 1.0 - eta * eta * (1.0 - cos_i * cos_i)
    if sin2_t < 0:
        raise TotalInternalReflection(idx, points)
    coeff = eta * cos_i - math.sqrt(sin2_t)
    rz, ry = eta * dz + coeff * nz, eta * dy + coeff * ny
    norm = math.hypot(rz, ry)
    return rz / norm, ry / norm
