"""Tests for phantom primitives, support geometry, masses, and the file format."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sonarkit.phantoms import (
    BallIndicator,
    GaussianBump,
    Phantom,
    PhantomFormatError,
    PolyBump,
    format_phantom,
    load_phantom,
    parse_phantom,
    save_phantom,
)
from sonarkit.quadrature import QuadratureSpec


def gaussian_pair():
    return Phantom(
        [
            GaussianBump((0.0, 1.0), 0.25, 1.0, 1.0),
            GaussianBump((-0.3, 0.7), 0.15, 0.5, 0.6),
        ]
    )


class TestPrimitiveValidation:
    def test_support_must_stay_above_floor(self):
        with pytest.raises(ValueError, match="upper half-space"):
            GaussianBump((0.0, 0.5), 0.25, 1.0, 1.0)
        with pytest.raises(ValueError, match="upper half-space"):
            BallIndicator((0.0, 0.3), 0.5, 1.0)
        with pytest.raises(ValueError, match="upper half-space"):
            PolyBump((0.0, 0.0, 0.2), 0.6, 1.0, 3)

    def test_touching_floor_is_allowed(self):
        # strict support inequality: the boundary sphere itself carries no value
        b = BallIndicator((0.0, 0.5), 0.5, 1.0)
        assert b.value(np.array([0.0, 0.0])) == 0.0
        assert b.value(np.array([0.0, 0.5])) == 1.0

    def test_power_must_be_integer_at_least_two(self):
        with pytest.raises(ValueError, match="power"):
            PolyBump((0.0, 1.0), 0.5, 1.0, 1)
        with pytest.raises(ValueError):
            PolyBump((0.0, 1.0), 0.5, 1.0, 2.5)

    def test_positive_scales_required(self):
        with pytest.raises(ValueError):
            GaussianBump((0.0, 1.0), -0.25, 1.0, 1.0)
        with pytest.raises(ValueError):
            GaussianBump((0.0, 1.0), 0.25, 1.0, 0.0)
        with pytest.raises(ValueError):
            BallIndicator((0.0, 1.0), 0.0, 1.0)

    def test_dimension_mixing_rejected(self):
        with pytest.raises(ValueError, match="mix dimensions"):
            Phantom(
                [
                    GaussianBump((0.0, 1.0), 0.25, 1.0, 1.0),
                    PolyBump((0.0, 0.0, 1.0), 0.5, 1.0, 2),
                ]
            )

    def test_empty_phantom_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            Phantom([])


class TestEvaluation:
    def test_scalar_point_returns_float(self):
        f = gaussian_pair()
        v = f.eval(np.array([0.0, 1.0]))
        assert isinstance(v, float)
        assert v > 1.0  # both bumps overlap there a little

    def test_batch_shapes_preserved(self):
        f = gaussian_pair()
        pts = np.zeros((3, 4, 5, 2))
        pts[..., 1] = 1.0
        out = f.eval(pts)
        assert out.shape == (3, 4, 5)

    def test_zero_at_and_below_floor(self):
        # even if a primitive's formula would be positive there
        f = Phantom([BallIndicator((0.0, 0.4), 0.4, 2.0)])
        assert f.eval(np.array([0.0, 0.0])) == 0.0
        assert f.eval(np.array([0.05, -0.1])) == 0.0

    def test_zero_outside_every_support(self):
        f = gaussian_pair()
        rng = np.random.default_rng(7)
        pts = rng.uniform(-6, 6, size=(500, 2))
        lo, hi = f.support_bounds()
        outside = np.any((pts < lo) | (pts > hi), axis=-1)
        vals = f.eval(pts)
        assert np.all(vals[outside] == 0.0)

    def test_sum_of_terms(self):
        a = GaussianBump((0.0, 1.0), 0.25, 1.0, 1.0)
        b = PolyBump((0.1, 0.9), 0.3, 0.5, 2)
        f = Phantom([a, b])
        pts = np.random.default_rng(3).uniform(-1, 2, size=(50, 2))
        expect = np.where(pts[:, 1] > 0, a.value(pts) + b.value(pts), 0.0)
        assert_allclose(f.eval(pts), expect, rtol=0, atol=0)

    def test_wrong_trailing_dimension(self):
        f = gaussian_pair()
        with pytest.raises(ValueError, match="dimension"):
            f.eval(np.zeros((4, 3)))


class TestSupportGeometry:
    def test_bounds_cover_all_terms(self):
        f = gaussian_pair()
        lo, hi = f.support_bounds()
        assert_allclose(lo, [-1.0, 0.0])
        assert_allclose(hi, [1.0, 2.0])

    def test_balls_match_terms(self):
        f = gaussian_pair()
        balls = f.support_balls()
        assert len(balls) == 2
        assert_allclose(balls[0].center, [0.0, 1.0])
        assert balls[0].radius == 1.0
        assert balls[1].radius == 0.6

    def test_support_radius(self):
        f = Phantom([BallIndicator((3.0, 4.0), 0.5, 1.0)])
        assert_allclose(f.support_radius(), 5.5)


class TestMass:
    """Masses against closed forms.

    Truncated Gaussian (n=2): pi*w^2*A*(1 - exp(-c^2/w^2)).
    PolyBump (n=2): A*pi*r^2/(k+1); (n=3): A*4*pi*r^3*S(k) with
    S(k) = int_0^1 u^2 (1-u^2)^k du, S(3) = 16/315.
    """

    def test_gaussian_mass_2d(self):
        f = Phantom([GaussianBump((0.2, 1.1), 0.25, 2.0, 1.0)])
        exact = math.pi * 0.25**2 * 2.0 * (1.0 - math.exp(-16.0))
        assert_allclose(f.mass(), exact, rtol=1e-7)

    def test_polybump_mass_2d(self):
        f = Phantom([PolyBump((0.3, 1.2), 0.5, 2.0, 3)])
        assert_allclose(f.mass(), 2.0 * math.pi * 0.5**2 / 4.0, rtol=1e-8)

    def test_polybump_mass_3d(self):
        f = Phantom([PolyBump((0.0, 0.0, 1.0), 0.6, 1.0, 3)])
        assert_allclose(f.mass(), 4.0 * math.pi * 0.6**3 * 16.0 / 315.0, rtol=1e-8)

    def test_ball_mass_coarse(self):
        # discontinuous boundary: only a loose tolerance is honest here
        f = Phantom([BallIndicator((0.0, 1.0), 0.5, 1.0)])
        assert_allclose(f.mass(), math.pi * 0.25, rtol=1e-3)

    def test_mass_additive(self):
        a = Phantom([PolyBump((0.0, 1.0), 0.4, 1.0, 2)])
        b = Phantom([PolyBump((0.5, 0.8), 0.3, 2.0, 4)])
        both = Phantom(list(a.terms) + list(b.terms))
        # panel layouts differ between the union box and the separate boxes,
        # so agreement is only up to quadrature error, not bitwise
        assert_allclose(both.mass(), a.mass() + b.mass(), rtol=1e-6)

    def test_mass_respects_spec(self):
        f = Phantom([BallIndicator((0.0, 1.0), 0.5, 1.0)])
        coarse = f.mass(QuadratureSpec(panels=2, nodes_per_panel=4))
        fine = f.mass(QuadratureSpec(panels=16, nodes_per_panel=20))
        exact = math.pi * 0.25
        assert abs(fine - exact) < abs(coarse - exact)


class TestFileFormat:
    def test_round_trip_exact(self, tmp_path):
        f = Phantom(
            [
                GaussianBump((0.0, 1.0), 0.25, 1.0, 1.0),
                BallIndicator((0.4, 0.9), 0.3, 2.0),
                PolyBump((-0.2, 1.3), 0.5, 0.7, 4),
            ]
        )
        path = tmp_path / "phantom.txt"
        save_phantom(f, path)
        g = load_phantom(path)
        assert g.dimension == 2
        pts = np.random.default_rng(11).uniform(-1, 2, size=(200, 2))
        assert_allclose(g.eval(pts), f.eval(pts), rtol=0, atol=0)

    def test_comments_and_blank_lines(self):
        text = """
        # a phantom
        dim 3

        kind polybump   # compactly supported
        center 0 0 1
        radius 0.6
        amplitude 1
        power 3
        """
        f = parse_phantom(text)
        assert f.dimension == 3
        assert f.terms[0].power == 3

    def test_error_carries_line_number(self):
        text = "dim 2\nkind ball\ncenter 0 1\nradius oops\namplitude 1\n"
        with pytest.raises(PhantomFormatError, match=r"line 2.*not a number"):
            parse_phantom(text)

    def test_missing_dim(self):
        with pytest.raises(PhantomFormatError, match="dim"):
            parse_phantom("kind ball\ncenter 0 1\nradius 1\namplitude 1\n")

    def test_unknown_kind(self):
        with pytest.raises(PhantomFormatError, match="unknown primitive"):
            parse_phantom("dim 2\nkind torus\n")

    def test_unknown_field(self):
        text = "dim 2\nkind ball\ncenter 0 1\nradius 0.5\namplitude 1\ncolor 3\n"
        with pytest.raises(PhantomFormatError, match="unknown fields"):
            parse_phantom(text)

    def test_duplicate_field(self):
        text = "dim 2\nkind ball\ncenter 0 1\ncenter 0 2\nradius 0.5\namplitude 1\n"
        with pytest.raises(PhantomFormatError, match="duplicate"):
            parse_phantom(text)

    def test_center_arity_checked_against_dim(self):
        text = "dim 3\nkind ball\ncenter 0 1\nradius 0.5\namplitude 1\n"
        with pytest.raises(PhantomFormatError, match="needs 3 numbers"):
            parse_phantom(text)

    def test_format_is_reparseable_text(self):
        f = gaussian_pair()
        text = format_phantom(f)
        assert text.startswith("dim 2")
        assert "kind gaussian" in text
        parse_phantom(text)
