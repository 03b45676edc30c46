"""ODDL text format: parse and serialize lens prescriptions.

Line-oriented grammar, ``#`` comments, case-insensitive keywords:

    SPEC EFFL <mm>           target focal length
    SPEC FNO  <x>            F-number
    SPEC FOV  <deg>          full diagonal field of view
    SPEC TOTR <mm>           optional track-length bound
    SURF <tag> <radius> <thickness> <material> [semi-diameter]

``tag`` is ``OBJ``, ``STO``, ``IMA`` or a positive row index. ``INF`` is the
plano radius / infinite conjugate token, ``MASK`` a blanked numeric field.
Materials are ``AIR``, a catalog name, or inline ``G:<n_d>:<v_d>``.

Numeric values survive a round trip bit-exactly: serialization uses the
shortest decimal that reparses to the same double.
"""

from __future__ import annotations

import math
import re

from .catalog import lookup_material
from .errors import DuplicateSpec, ParseError, UnknownMaterial
from .prescription import AIR, Kind, Material, Prescription, Role, Specification, Surface

_TOKEN = re.compile(r"\S+")
_SPEC_KEYS = {"EFFL": "effl_target", "FNO": "f_number", "FOV": "fov_full", "TOTR": "totr_max"}
_ROLES = {"OBJ": Role.OBJ, "STO": Role.STOP, "IMA": Role.IMAGE}


def _tokens(line: str) -> list[tuple[str, int]]:
    """Whitespace tokens with their 1-based column positions."""
    return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]


def _number(token: str, lineno: int, col: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(lineno, col, f"invalid {what} {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(lineno, col, f"{what} must be finite (use INF for infinity)")
    return value


def _material(token: str, lineno: int, col: int) -> Material:
    upper = token.upper()
    if upper.startswith("G:"):
        parts = token.split(":")
        if len(parts) != 3:
            raise ParseError(lineno, col, f"inline glass must be G:<n_d>:<v_d>, got {token!r}")
        n_d = _number(parts[1], lineno, col, "inline n_d")
        v_d = _number(parts[2], lineno, col, "inline v_d")
        return Material(Kind.GLASS, "", n_d, v_d)
    try:
        return lookup_material(token)
    except UnknownMaterial:
        raise UnknownMaterial(f"line {lineno}, column {col}: unknown material {token!r}") from None


def parse(text: str) -> Prescription:
    """Parse an ODDL document into a Prescription.

    Raises:
        ParseError: malformed row (reports line, column, message).
        DuplicateSpec: a SPEC key given twice.
        UnknownMaterial: a name that is neither catalog nor inline glass.
    """
    spec_fields: dict[str, float] = {}
    surfaces: list[Surface] = []
    seen_stop = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        hash_at = raw.find("#")
        line = raw[:hash_at] if hash_at >= 0 else raw
        toks = _tokens(line)
        if not toks:
            continue
        keyword, kcol = toks[0][0].upper(), toks[0][1]

        if keyword == "SPEC":
            if len(toks) != 3:
                raise ParseError(lineno, kcol, "SPEC line must be 'SPEC <KEY> <value>'")
            key = toks[1][0].upper()
            if key not in _SPEC_KEYS:
                raise ParseError(lineno, toks[1][1], f"unknown SPEC key {toks[1][0]!r}")
            if _SPEC_KEYS[key] in spec_fields:
                raise DuplicateSpec(lineno, toks[1][1], f"duplicate SPEC {key}")
            value = _number(toks[2][0], lineno, toks[2][1], f"SPEC {key} value")
            try:
                Specification(**{_SPEC_KEYS[key]: value})
            except ValueError as e:
                raise ParseError(lineno, toks[2][1], str(e)) from None
            spec_fields[_SPEC_KEYS[key]] = value

        elif keyword == "SURF":
            if not 5 <= len(toks) <= 6:
                raise ParseError(
                    lineno, kcol,
                    "SURF line must be 'SURF <tag> <radius> <thickness> <material> [semi-diameter]'",
                )
            surfaces.append(_surface(toks, lineno))
            if surfaces[-1].role is Role.STOP:
                if seen_stop:
                    raise ParseError(lineno, toks[1][1], "duplicate STO row")
                seen_stop = True

        else:
            raise ParseError(lineno, kcol, f"expected SPEC or SURF, got {toks[0][0]!r}")

    if not surfaces:
        raise ParseError(1, 1, "document contains no surface rows")
    return Prescription(spec=Specification(**spec_fields), surfaces=tuple(surfaces))


def _surface(toks: list[tuple[str, int]], lineno: int) -> Surface:
    (tag, tcol), (rtok, rcol), (ttok, tcol2), (mtok, mcol) = toks[1:5]
    tag_up = tag.upper()
    role = _ROLES.get(tag_up)
    index = None
    if role is None:
        if tag.isdigit() and int(tag) > 0:
            role, index = Role.STANDARD, int(tag)
        else:
            raise ParseError(lineno, tcol, f"surface tag must be OBJ, STO, IMA or a positive integer, got {tag!r}")

    if rtok.upper() == "INF":
        radius = math.inf
    elif rtok.upper() == "MASK":
        radius = None
    else:
        radius = _number(rtok, lineno, rcol, "radius")
        if radius == 0:
            raise ParseError(lineno, rcol, "radius 0 is not a valid sphere; use INF for plano")

    if ttok.upper() == "INF":
        if role is not Role.OBJ:
            raise ParseError(lineno, tcol2, "infinite thickness is only permitted on the OBJ row")
        thickness = math.inf
    elif ttok.upper() == "MASK":
        thickness = None
    else:
        thickness = _number(ttok, lineno, tcol2, "thickness")

    material = None if mtok.upper() == "MASK" else _material(mtok, lineno, mcol)

    semi = None
    if len(toks) == 6:
        stok, scol = toks[5]
        if stok.upper() == "INF":
            if role not in (Role.OBJ, Role.IMAGE):
                raise ParseError(lineno, scol, "infinite semi-diameter is only permitted on OBJ/IMA rows")
            semi = math.inf
        else:
            semi = _number(stok, lineno, scol, "semi-diameter")
            if semi <= 0:
                raise ParseError(lineno, scol, "semi-diameter must be positive")

    return Surface(role=role, radius=radius, thickness=thickness,
                   material=material, semi_diameter=semi, index=index)


def _fmt(value: float | None) -> str:
    if value is None:
        return "MASK"
    if math.isinf(value):
        return "INF"
    return repr(float(value))


def _fmt_material(m: Material | None) -> str:
    if m is None:
        return "MASK"
    if m.kind is Kind.AIR:
        return "AIR"
    if m.name:
        return m.name
    return f"G:{repr(float(m.n_d))}:{repr(float(m.v_d))}"


def serialize(p: Prescription) -> str:
    """Render a Prescription back to ODDL text.

    ``parse(serialize(p)) == p`` field-for-field for any prescription whose
    STANDARD rows carry indices (parse always assigns them; programmatic
    surfaces without one are numbered by table position).
    """
    lines = []
    s = p.spec
    if s.effl_target is not None:
        lines.append(f"SPEC EFFL {repr(float(s.effl_target))}")
    if s.f_number is not None:
        lines.append(f"SPEC FNO {repr(float(s.f_number))}")
    if s.fov_full is not None:
        lines.append(f"SPEC FOV {repr(float(s.fov_full))}")
    if s.totr_max is not None:
        lines.append(f"SPEC TOTR {repr(float(s.totr_max))}")
    for position, surf in enumerate(p.surfaces):
        tag = surf.tag()
        if tag == "?":
            tag = str(position)
        row = f"SURF {tag} {_fmt(surf.radius)} {_fmt(surf.thickness)} {_fmt_material(surf.material)}"
        if surf.semi_diameter is not None:
            row += f" {_fmt(surf.semi_diameter)}"
        lines.append(row)
    return "\n".join(lines) + "\n"
