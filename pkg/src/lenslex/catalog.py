"""Built-in glass catalog: name -> (n_d, v_d) at the d-line.

The catalog ships as a text data file (one ``NAME n_d v_d`` entry per line,
``#`` comments, LF or CRLF). The environment variable ``LENSLEX_CATALOG``
points evaluation at an alternative file. Lookups are case-insensitive.
"""

from __future__ import annotations

import os
from functools import lru_cache
from importlib import resources

from .errors import UnknownMaterial
from .prescription import AIR, Kind, Material

ENV_VAR = "LENSLEX_CATALOG"


def _read_catalog_text() -> str:
    path = os.environ.get(ENV_VAR)
    if path:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    return resources.files("lenslex.data").joinpath("glasses.txt").read_text("utf-8")


def _parse_catalog(text: str) -> dict[str, tuple[float, float]]:
    table: dict[str, tuple[float, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"catalog line {lineno}: expected 'NAME n_d v_d'")
        name, nd, vd = parts[0].upper(), float(parts[1]), float(parts[2])
        table[name] = (nd, vd)
    return table


@lru_cache(maxsize=8)
def _catalog_for(path_key: str) -> dict[str, tuple[float, float]]:
    return _parse_catalog(_read_catalog_text())


def catalog() -> dict[str, tuple[float, float]]:
    """The active name -> (n_d, v_d) table, cached per catalog path."""
    return _catalog_for(os.environ.get(ENV_VAR, ""))


def lookup_material(name: str) -> Material:
    """Resolve a material name to air or a catalog glass.

    Raises:
        UnknownMaterial: the name is not ``AIR`` and not in the catalog.
    """
    if not name:
        raise ValueError("material name must be non-empty")
    key = name.upper()
    if key == "AIR":
        return AIR
    entry = catalog().get(key)
    if entry is None:
        raise UnknownMaterial(f"unknown material {name!r}")
    return Material(Kind.GLASS, key, entry[0], entry[1])
