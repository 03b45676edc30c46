import math
from pathlib import Path

import pytest

from lenslex.prescription import AIR, Kind, Material, Prescription, Role, Specification, Surface

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"

INF = math.inf


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def surf(role, radius, thickness, material, semi=None, index=None):
    return Surface(role=role, radius=radius, thickness=thickness,
                   material=material, semi_diameter=semi, index=index)


def glass(n_d: float, v_d: float = 50.0) -> Material:
    return Material(Kind.GLASS, "", n_d, v_d)


def singlet(r1: float, r2: float, d: float, n: float, *, gap: float = 40.0,
            spec: Specification | None = None, stop_semi: float = 5.0) -> Prescription:
    """Formal singlet: OBJ | STO-tagged front surface | back | IMA.

    Tagging the front surface as the stop keeps the table format-valid
    without an extra dummy row.
    """
    return Prescription(
        spec=spec or Specification(effl_target=10.0, f_number=2.0, fov_full=4.0),
        surfaces=(
            surf(Role.OBJ, INF, INF, AIR),
            surf(Role.STOP, r1, d, glass(n), stop_semi),
            surf(Role.STANDARD, r2, gap, AIR, stop_semi, index=2),
            surf(Role.IMAGE, INF, 0.0, AIR, 1.0),
        ),
    )


@pytest.fixture
def table1():
    from lenslex.oddl import parse
    return parse(fixture_text("table1.oddl"))


@pytest.fixture
def perfect_thin():
    from lenslex.oddl import parse
    return parse(fixture_text("perfect_thin.oddl"))


@pytest.fixture
def thick_singlet():
    from lenslex.oddl import parse
    return parse(fixture_text("thick_singlet.oddl"))
