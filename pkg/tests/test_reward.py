"""Reward components, gating, and the lexicographic pipeline."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lenslex.prescription import Role, Specification
from lenslex.reward import (
    RewardBreakdown, gamma_for, gate, score, score_convergence, score_focal,
    score_rms, score_text,
)

from conftest import fixture_text, singlet, surf


class TestFocalScore:
    def test_zero_error_is_unity(self):
        assert score_focal(0.0) == 1.0

    def test_strict_knee(self):
        want = 0.7 * math.exp(-1.0) + 0.3 * math.exp(-0.2)
        assert score_focal(0.02) == pytest.approx(want, rel=1e-15)
        assert score_focal(0.02) == pytest.approx(0.50314, abs=1e-5)

    def test_loose_knee(self):
        want = 0.7 * math.exp(-5.0) + 0.3 * math.exp(-1.0)
        assert score_focal(0.10) == pytest.approx(want, rel=1e-15)
        assert score_focal(0.10) == pytest.approx(0.11508, abs=1e-5)

    def test_afocal_maps_to_zero(self):
        assert score_focal(math.inf) == 0.0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            score_focal(-0.1)


class TestConvergenceScore:
    def test_perfect(self):
        assert score_convergence(0.0) == 1.0

    def test_one_millimeter(self):
        assert score_convergence(1.0) == pytest.approx(0.36788, abs=1e-5)

    def test_symmetric(self):
        assert score_convergence(-1.0) == score_convergence(1.0)


class TestGate:
    def test_inside(self):
        assert gate(0.01, 0.05) == 1

    def test_epsilon_boundary_exclusive(self):
        assert gate(0.05, 0.0) == 0

    def test_height_boundary_exclusive(self):
        assert gate(0.01, 0.1) == 0

    def test_afocal_closes(self):
        assert gate(math.inf, 0.0) == 0


class TestRmsScore:
    def test_perfect_spot(self):
        assert score_rms(0.0, 100.0) == 1.0

    def test_gamma_scales_with_focal_length(self):
        assert gamma_for(100.0) == 1.0
        assert score_rms(1.0, 100.0) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_gamma_floor(self):
        assert gamma_for(3.0) == 0.05


@given(st.lists(st.integers(min_value=0, max_value=300000), min_size=2, max_size=40,
                unique=True))
@settings(max_examples=100, deadline=None)
def test_strict_monotonicity(grid):
    # grid spacing 1e-5 keeps neighboring arguments resolvable by exp()
    ordered = sorted(v * 1e-5 for v in grid)
    focal = [score_focal(v) for v in ordered]
    conv = [score_convergence(v) for v in ordered]
    rms = [score_rms(v, 50.0) for v in ordered]
    for series in (focal, conv, rms):
        assert all(a > b for a, b in zip(series, series[1:]))


class TestPipeline:
    def test_unparseable_text(self):
        b = score_text("this is not a prescription")
        assert b.r_fmt == 0
        assert b.r_lex == 0.0
        assert b.r_stru is None and b.s_f is None and b.r_rms is None
        assert b.epsilon is None

    def test_empty_text(self):
        b = score_text("")
        assert b.r_fmt == 0 and b.r_lex == 0.0

    def test_perfect_fixture_is_exactly_two(self):
        b = score_text(fixture_text("perfect_thin.oddl"))
        assert b.r_lex == 2.0
        assert b.s_f == 1.0 and b.s_c == 1.0 and b.r_ray == 1.0
        assert b.delta_pass == 1 and b.r_rms == 1.0
        assert b.sigma_max == 0.0 and b.epsilon == 0.0

    def test_structure_failure_zeroes(self):
        p = singlet(10.0, -10.0, 0.5, 1.5, stop_semi=9.0)  # knife edge
        b = score(p, p.spec)
        assert b.r_fmt == 1 and b.r_stru == 0
        assert b.r_lex == 0.0
        assert b.s_f is None

    def test_format_failure_zeroes(self):
        b = score_text(fixture_text("missing_stop.oddl"))
        assert b.r_fmt == 0 and b.r_lex == 0.0

    def test_gate_closed_keeps_rlex_at_most_one(self, thick_singlet):
        # score the singlet against a target 30% away: gate must close
        b = score(thick_singlet, Specification(effl_target=66.0, f_number=5.0, fov_full=6.0))
        assert b.delta_pass == 0
        assert b.r_rms is None and b.sigma_max is None
        assert b.r_lex <= 1.0
        assert b.r_lex == b.r_ray

    def test_flags_override_embedded_spec(self, thick_singlet):
        loyal = score(thick_singlet, Specification())
        hostile = score(thick_singlet, Specification(effl_target=66.0))
        assert loyal.epsilon < 1e-12
        assert hostile.epsilon > 0.2

    def test_afocal_candidate(self):
        p = singlet(math.inf, math.inf, 5.0, 1.5)
        b = score(p, p.spec)
        assert b.s_f == 0.0
        assert b.delta_pass == 0
        assert b.epsilon is None
        assert "afocal" in b.note

    def test_gamma_from_calc_flag(self, thick_singlet):
        by_target = score(thick_singlet, thick_singlet.spec)
        by_calc = score(thick_singlet, thick_singlet.spec, gamma_from_calc=True)
        assert by_target.gamma == gamma_for(thick_singlet.spec.effl_target)
        # the traced focal length differs only in the last bits here
        assert by_calc.gamma == pytest.approx(by_target.gamma, rel=1e-12)

    def test_spot_unavailable_zeroes_rms(self, thick_singlet):
        bare = thick_singlet.with_surface(
            1, surf(Role.STOP, math.inf, 2.0, thick_singlet.surfaces[1].material, None))
        b = score(bare, thick_singlet.spec)
        assert b.delta_pass == 1
        assert b.r_rms == 0.0
        assert "spot unavailable" in b.note
        assert b.r_lex == b.r_ray

    def test_bounds(self, table1, thick_singlet, perfect_thin):
        for text in ("table1.oddl", "thick_singlet.oddl", "perfect_thin.oddl",
                     "missing_stop.oddl"):
            b = score_text(fixture_text(text))
            assert 0.0 <= b.r_lex <= 2.0
            for component in (b.s_f, b.s_c, b.r_ray, b.r_rms):
                if component is not None:
                    assert 0.0 <= component <= 1.0

    def test_curriculum_transition(self, thick_singlet):
        # walking (eps, y_img) below the gate can only raise r_lex:
        # compare the same geometry scored against targets inside/outside
        outside = score(thick_singlet, Specification(effl_target=54.0, f_number=5.0, fov_full=6.0))
        inside = score(thick_singlet, Specification(effl_target=51.0, f_number=5.0, fov_full=6.0))
        exact = score(thick_singlet, Specification())
        assert outside.delta_pass == 0
        assert inside.delta_pass == 1
        assert outside.r_lex < inside.r_lex < exact.r_lex

    def test_lexicographic_ordering(self, thick_singlet):
        broken = score_text("SPEC EFFL 50.0\nSURF OBJ INF INF AIR\nSURF IMA INF 0.0 AIR")
        working = score(thick_singlet, thick_singlet.spec)
        assert broken.r_lex == 0.0
        assert working.r_lex > 0.0

    def test_json_key_order(self):
        d = RewardBreakdown().to_json_dict()
        assert list(d) == ["r_fmt", "r_stru", "s_f", "s_c", "r_ray", "delta_pass",
                           "r_rms", "r_lex", "epsilon", "y_img_abs", "sigma_max",
                           "gamma", "note"]

    def test_invariant_identity(self, table1):
        b = score(table1, table1.spec)
        want = b.r_fmt * b.r_stru * (b.r_ray + b.delta_pass * (b.r_rms or 0.0))
        assert b.r_lex == want
