"""Data model for optical prescriptions.

A prescription is an ordered surface table (object side to image side) plus
the target specifications it was designed against. All values are millimeters
and degrees. Instances are frozen: safe to share between threads and to use
as dictionary keys.

Masked fields (the completion-task placeholders) are represented as ``None``;
``math.inf`` is the distinguished plano radius / infinite-conjugate value.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import NothingToMask

INF = math.inf

#: Eligible mask-site field names, in canonical per-surface order.
MASKABLE_FIELDS = ("radius", "thickness", "material")


class Role(Enum):
    OBJ = "OBJ"
    STOP = "STO"
    IMAGE = "IMA"
    STANDARD = "STD"


class Kind(Enum):
    AIR = "AIR"
    GLASS = "GLASS"


@dataclass(frozen=True)
class Material:
    """Medium following a surface: air, a named catalog glass, or inline glass.

    Inline glasses carry an empty name. Range validity (1 < n_d < 2.5,
    10 < v_d < 100 for glass) is a validation-stage concern, not enforced
    here, so that out-of-range inline glasses parse and score zero instead
    of crashing.
    """

    kind: Kind
    name: str
    n_d: float
    v_d: float | None = None

    @property
    def is_glass(self) -> bool:
        return self.kind is Kind.GLASS


AIR = Material(Kind.AIR, "AIR", 1.0, None)


@dataclass(frozen=True)
class Specification:
    """User demand: target focal length, full diagonal field, F-number.

    Any field may be absent (``None``); numeric fields are range-checked on
    construction. ``epd`` is derivable only when both EFFL and F-number are
    known.
    """

    effl_target: float | None = None
    fov_full: float | None = None
    f_number: float | None = None
    totr_max: float | None = None

    def __post_init__(self):
        if self.effl_target is not None and not self.effl_target > 0:
            raise ValueError("EFFL target must be positive")
        if self.f_number is not None and not self.f_number > 0:
            raise ValueError("F-number must be positive")
        if self.fov_full is not None and not 0 <= self.fov_full < 180:
            raise ValueError("full field of view must satisfy 0 <= FOV < 180")
        if self.totr_max is not None and not self.totr_max > 0:
            raise ValueError("TOTR bound must be positive")

    @property
    def epd(self) -> float | None:
        """Entrance pupil diameter EFFL / F-number, when derivable."""
        if self.effl_target is None or self.f_number is None:
            return None
        return self.effl_target / self.f_number

    def merged_over(self, base: Specification) -> Specification:
        """Field-wise overlay: values set here win over ``base``."""
        return Specification(
            self.effl_target if self.effl_target is not None else base.effl_target,
            self.fov_full if self.fov_full is not None else base.fov_full,
            self.f_number if self.f_number is not None else base.f_number,
            self.totr_max if self.totr_max is not None else base.totr_max,
        )


@dataclass(frozen=True)
class Surface:
    """One row of the surface table.

    ``radius`` and ``thickness`` are ``math.inf`` for the plano / infinite
    conjugate cases and ``None`` when masked. ``material`` is the medium
    *after* this surface (``None`` when masked). ``index`` is the document
    row label for STANDARD surfaces.
    """

    role: Role
    radius: float | None
    thickness: float | None
    material: Material | None
    semi_diameter: float | None = None
    index: int | None = None

    @property
    def is_plano(self) -> bool:
        return self.radius is not None and math.isinf(self.radius)

    def tag(self) -> str:
        if self.role is Role.STANDARD:
            return str(self.index) if self.index is not None else "?"
        return self.role.value


@dataclass(frozen=True)
class Prescription:
    """Ordered surface table plus its declared specification."""

    spec: Specification
    surfaces: tuple[Surface, ...]

    @property
    def stop_index(self) -> int | None:
        for i, s in enumerate(self.surfaces):
            if s.role is Role.STOP:
                return i
        return None

    def interior(self) -> tuple[Surface, ...]:
        """Surfaces strictly between the object and image rows."""
        return self.surfaces[1:-1]

    def with_spec(self, spec: Specification) -> Prescription:
        return replace(self, spec=spec)

    def with_surface(self, i: int, surface: Surface) -> Prescription:
        surfaces = list(self.surfaces)
        surfaces[i] = surface
        return replace(self, surfaces=tuple(surfaces))


@dataclass(frozen=True)
class MaskedPrescription:
    """Prescription with selected numeric fields blanked for completion."""

    base: Prescription
    mask_sites: tuple[tuple[int, str], ...] = field(default_factory=tuple)


def eligible_mask_sites(p: Prescription) -> list[tuple[int, str]]:
    """Numeric sites open to masking, in canonical (surface, field) order.

    Object/image rows are never masked; material is a site only when it is
    glass (air carries no numbers to complete).
    """
    sites: list[tuple[int, str]] = []
    for i, s in enumerate(p.surfaces):
        if s.role in (Role.OBJ, Role.IMAGE):
            continue
        sites.append((i, "radius"))
        sites.append((i, "thickness"))
        if s.material is not None and s.material.is_glass:
            sites.append((i, "material"))
    return sites


def mask(p: Prescription, ratio: float, seed: int) -> MaskedPrescription:
    """Blank ``ceil(ratio * N)`` of the eligible sites, deterministically.

    Identical ``(p, ratio, seed)`` always selects the same sites. SPEC lines
    are untouched (they live in ``p.spec``, outside the surface table).
    """
    if not 0 <= ratio <= 1:
        raise ValueError("mask ratio must lie in [0, 1]")
    if len(p.surfaces) < 3 or not p.interior():
        raise NothingToMask("prescription has no lens surfaces to mask")
    population = eligible_mask_sites(p)
    count = math.ceil(ratio * len(population))
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(len(population)), count))
    sites = tuple(population[i] for i in chosen)

    surfaces = list(p.surfaces)
    for i, field_name in sites:
        surfaces[i] = replace(surfaces[i], **{_FIELD_ATTR[field_name]: None})
    base = replace(p, surfaces=tuple(surfaces))
    return MaskedPrescription(base=base, mask_sites=sites)


_FIELD_ATTR = {"radius": "radius", "thickness": "thickness", "material": "material"}
