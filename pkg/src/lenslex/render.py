"""SVG layout rendering: surface arcs, stop marks, image plane, ray fans.

Rays are real-meridional (paraxial polylines can overshoot physical
apertures and mislead); one stroke color per field, five rays per field
across the stop. Output is a pure function of the prescription: fixed
float formatting, no timestamps, byte-identical across runs.
"""

from __future__ import annotations

import math

from .errors import DegeneratePupil, MissedSurface, RenderError, SpotUnavailable, TotalInternalReflection
from .prescription import Prescription, Role
from .tracer import PUPIL_FAN, RayState, solve_stop_ray, trace_real_meridional
from .validation import sag

FIELD_COLORS = ("#1f6fb4", "#2ca02c")
_MARGIN_FRACTION = 0.06
_ARC_SAMPLES = 32


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _surface_polyline(z_vertex: float, radius: float, h: float) -> list[tuple[float, float]]:
    points = []
    for k in range(_ARC_SAMPLES + 1):
        y = -h + (2.0 * h) * k / _ARC_SAMPLES
        try:
            z = z_vertex + sag(radius, abs(y))
        except Exception:
            z = z_vertex
        points.append((z, y))
    return points


def render_svg(p: Prescription) -> str:
    """Render the lens layout as an SVG document string.

    Raises:
        RenderError: no surface carries a semi-diameter, so no aperture
            scale exists to draw to.
    """
    interior = p.interior()
    semis = [s.semi_diameter for s in p.surfaces
             if s.semi_diameter is not None and math.isfinite(s.semi_diameter)]
    if not semis:
        raise RenderError("no semi-diameters anywhere in the prescription")
    h_max = max(semis)
    h_default = h_max

    # z position of each interior surface vertex and of the image plane
    z = 0.0
    vertices = []
    for s in interior:
        vertices.append(z)
        z += s.thickness
    z_image = z

    rays = _ray_polylines(p)

    z_lo, z_hi = -0.05 * max(z_image, 1.0), z_image
    for group in rays:
        for poly in group:
            for zz, _ in poly:
                z_lo = min(z_lo, zz)
    span_z = z_hi - z_lo
    span_y = 2.0 * h_max
    pad = _MARGIN_FRACTION * max(span_z, span_y)

    width, height = 900.0, 480.0
    scale = min((width - 40) / (span_z + 2 * pad), (height - 40) / (span_y + 2 * pad))

    def X(zz: float) -> float:
        return 20.0 + (zz - z_lo + pad) * scale

    def Y(yy: float) -> float:
        return height / 2.0 - yy * scale

    el: list[str] = []
    el.append(f'<line class="axis" x1="{_fmt(X(z_lo))}" y1="{_fmt(Y(0))}" '
              f'x2="{_fmt(X(z_image))}" y2="{_fmt(Y(0))}" '
              'stroke="#888888" stroke-dasharray="6,4" stroke-width="1"/>')

    for s, zv in zip(interior, vertices):
        h = s.semi_diameter if s.semi_diameter is not None and math.isfinite(s.semi_diameter) \
            else h_default
        pts = _surface_polyline(zv, s.radius, h)
        path = " ".join(f"{'M' if i == 0 else 'L'} {_fmt(X(zz))} {_fmt(Y(yy))}"
                        for i, (zz, yy) in enumerate(pts))
        el.append(f'<path class="surface" d="{path}" fill="none" stroke="#222222" stroke-width="1.5"/>')
        if s.role is Role.STOP:
            tick = 0.08 * h_max
            for sign in (1.0, -1.0):
                el.append(f'<line class="stop-mark" x1="{_fmt(X(zv))}" y1="{_fmt(Y(sign * h))}" '
                          f'x2="{_fmt(X(zv))}" y2="{_fmt(Y(sign * (h + tick)))}" '
                          'stroke="#000000" stroke-width="3"/>')

    img_h = p.surfaces[-1].semi_diameter
    img_h = img_h if img_h is not None and math.isfinite(img_h) else h_default
    el.append(f'<line class="image-plane" x1="{_fmt(X(z_image))}" y1="{_fmt(Y(-img_h))}" '
              f'x2="{_fmt(X(z_image))}" y2="{_fmt(Y(img_h))}" '
              'stroke="#444444" stroke-width="2"/>')

    for color, field_polys in zip(FIELD_COLORS, rays):
        for poly in field_polys:
            path = " ".join(f"{'M' if i == 0 else 'L'} {_fmt(X(zz))} {_fmt(Y(yy))}"
                            for i, (zz, yy) in enumerate(poly))
            el.append(f'<path class="ray" d="{path}" fill="none" stroke="{color}" stroke-width="0.9"/>')

    body = "\n  ".join(el)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
            f'viewBox="0 0 {width:.0f} {height:.0f}">\n  {body}\n</svg>\n')


def _ray_polylines(p: Prescription) -> list[list[list[tuple[float, float]]]]:
    """Real-ray fans grouped per field; partial polylines when a ray dies."""
    fov = p.spec.fov_full or 0.0
    fields = (0.0, math.radians(fov) / 2.0)
    groups: list[list[list[tuple[float, float]]]] = []
    for theta in fields:
        polys: list[list[tuple[float, float]]] = []
        for rho in PUPIL_FAN:
            try:
                launch = solve_stop_ray(p, theta, rho)
            except (DegeneratePupil, SpotUnavailable):
                continue
            try:
                trace = trace_real_meridional(p, launch)
                polys.append(list(trace.points))
            except (TotalInternalReflection, MissedSurface) as e:
                if len(e.points) >= 2:
                    polys.append(list(e.points))
        groups.append(polys)
    return groups
