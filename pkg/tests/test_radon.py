"""Tests for the Radon family: plane integrals, ray integrals, cylinders."""

import math
from math import erf

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sonarkit.phantoms import BallIndicator, GaussianBump, Phantom, PolyBump
from sonarkit.quadrature import DomainError, QuadratureSpec
from sonarkit.geometry import Ball
from sonarkit.radon import (
    CylinderParam,
    Horizontal,
    PowerLaw,
    Reciprocal,
    Slanted,
    Unit,
    Vertical,
    cylinder_transform,
    format_sinogram,
    load_sinogram,
    parse_sinogram,
    radon_centerset,
    radon_h,
    radon_s,
    radon_v,
    radon_weighted,
    save_sinogram,
    weight_values,
)
from sonarkit.sonar import sonar_2d

G = Phantom([GaussianBump((0.0, 1.0), 0.25, 1.0, 1.0)])
BALL = Phantom([BallIndicator((0.0, 1.0), 0.5, 1.0)])
P3 = Phantom([PolyBump((0.0, 0.0, 1.0), 0.6, 1.0, 3)])


def truncated_gauss_marginal(d, w=0.25, amp=1.0, cut=1.0):
    """1-D marginal of the truncated Gaussian at distance d from its center."""
    if abs(d) >= cut:
        return 0.0
    half = math.sqrt(cut * cut - d * d)
    return amp * math.exp(-d * d / (w * w)) * w * math.sqrt(math.pi) * erf(half / w)


class TestPlaneTypes:
    def test_horizontal_needs_positive_height(self):
        with pytest.raises(DomainError):
            Horizontal(0.0)

    def test_slanted_angle_strictly_interior(self):
        for beta in (0.0, math.pi / 2, -0.3, 2.0):
            with pytest.raises(DomainError):
                Slanted(1.0, 0.0, beta)

    def test_unit_vector_enforced(self):
        with pytest.raises(ValueError, match="unit vector"):
            Vertical(np.array([0.5, 0.5]), 0.0)
        with pytest.raises(ValueError, match="unit vector"):
            Slanted(0.7, 0.0, 0.5)

    def test_scalar_omega_wrapped(self):
        v = Vertical(-1.0, 0.3)
        assert v.omega.shape == (1,)
        assert v.omega[0] == -1.0

    def test_cylinder_radius_positive(self):
        with pytest.raises(DomainError):
            CylinderParam(np.array([1.0, 0.0]), 0.0, 0.0)


class TestWeights:
    def test_values(self):
        s = np.array([0.5, 1.0, 2.0])
        assert_allclose(weight_values(Reciprocal(), s), 1.0 / s)
        assert_allclose(weight_values(Unit(), s), 1.0)
        assert_allclose(weight_values(PowerLaw(2.0), s), s * s)

    def test_power_zero_is_unit(self):
        s = np.linspace(0.1, 3.0, 17)
        assert np.array_equal(weight_values(PowerLaw(0.0), s), weight_values(Unit(), s))


class TestRadonH:
    def test_center_height_matches_gaussian_integral(self):
        # analytic 1-D Gaussian integral, cutoff tail ~7e-9 below it
        assert abs(radon_h(G, 1.0) - 0.25 * math.sqrt(math.pi)) < 1e-8

    def test_truncated_marginal_oracle(self):
        for y in (0.7, 1.0, 1.3, 1.9):
            assert_allclose(
                radon_h(G, y), truncated_gauss_marginal(y - 1.0), rtol=1e-12, atol=1e-300
            )

    def test_above_support_is_zero(self):
        assert radon_h(G, 5.0) == 0.0

    def test_nonpositive_height_rejected(self):
        with pytest.raises(DomainError):
            radon_h(G, 0.0)
        with pytest.raises(DomainError):
            radon_h(G, -1.0)

    def test_3d_polybump_slice_oracle(self):
        # slice of (1 - |q|^2/R^2)^k over the disk: 2*pi*R^2*a^{k+1}/(2(k+1))
        R, k = 0.6, 3
        for y in (0.7, 1.0, 1.2):
            a = 1.0 - (y - 1.0) ** 2 / (R * R)
            exact = math.pi * R * R * a ** (k + 1) / (k + 1)
            assert_allclose(radon_h(P3, y), exact, rtol=1e-12)

    def test_linearity(self):
        a = GaussianBump((0.0, 1.0), 0.25, 1.0, 1.0)
        b = PolyBump((0.3, 0.8), 0.4, 2.0, 2)
        lhs = radon_h(Phantom([a, b]), 0.9)
        rhs = radon_h(Phantom([a]), 0.9) + radon_h(Phantom([b]), 0.9)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


class TestRadonCenterset:
    def test_identity_on_one_dimensional_floor(self):
        g = lambda x, y: 10.0 * x + y
        assert radon_centerset(g, 1.0, -1.0, 0.3) == -2.0
        assert radon_centerset(g, 2.0, 1.0, 0.7) == 9.0

    def test_constant_over_known_length(self):
        # indicator of a unit disk around (0.5, 0): the line x1 = 0.5 sees length 2
        g = lambda x, y: (
            np.linalg.norm(np.asarray(x) - np.array([0.5, 0.0]), axis=-1) <= 1.0
        ).astype(float)
        v = radon_centerset(g, 0.0, np.array([1.0, 0.0]), 0.5)
        assert_allclose(v, 2.0, rtol=1e-12)

    def test_gaussian_marginal(self):
        w = 0.3
        g = lambda x, y: np.exp(-np.sum(np.asarray(x) ** 2, axis=-1) / (w * w))
        v = radon_centerset(g, 0.0, np.array([0.0, 1.0]), 0.4)
        assert_allclose(v, math.exp(-0.16 / (w * w)) * w * math.sqrt(math.pi), rtol=1e-12)

    def test_support_balls_clip_the_line(self):
        calls = []

        def g(x, y):
            x = np.asarray(x)
            calls.append(x.shape[0] if x.ndim == 2 else 1)
            u = np.sum(x**2, axis=-1) / 0.64
            return np.where(u < 1.0, (1.0 - np.minimum(u, 1.0)) ** 5, 0.0)

        balls = [Ball(np.array([0.0, 0.0, 1.0]), 1.0)]
        v = radon_centerset(g, 1.0, np.array([1.0, 0.0]), 0.0, support_balls=balls)
        full = radon_centerset(g, 1.0, np.array([1.0, 0.0]), 0.0)
        assert_allclose(v, full, rtol=1e-9)
        # the clipped call used far fewer nodes than the truncation window
        assert calls[0] < calls[1]


class TestRadonV:
    def test_ball_diameter(self):
        assert_allclose(radon_v(BALL, 1.0, 0.0), 1.0, rtol=1e-12)

    def test_gaussian_marginal_oracle(self):
        for p in (0.0, 0.3, -0.6):
            assert_allclose(
                radon_v(G, 1.0, p), truncated_gauss_marginal(p), rtol=1e-12
            )

    def test_plane_missing_support(self):
        assert radon_v(G, 1.0, 3.0) == 0.0
        assert radon_v(P3, np.array([1.0, 0.0]), 2.0) == 0.0

    def test_3d_radial_slice_oracle(self):
        R, k = 0.6, 3
        om = np.array([1.0, 0.0])
        for p in (0.0, 0.25, 0.5):
            a = 1.0 - p * p / (R * R)
            exact = math.pi * R * R * a ** (k + 1) / (k + 1)
            assert_allclose(radon_v(P3, om, p), exact, rtol=1e-12)

    def test_direction_sign_symmetric_phantom(self):
        # for the centered phantom, (omega, p) and (-omega, -p) describe
        # the same plane
        assert_allclose(
            radon_v(G, 1.0, 0.4), radon_v(G, -1.0, -0.4), rtol=1e-14
        )


class TestRadonS:
    def test_chord_through_ball_center(self):
        beta = 0.9
        p_foot = -math.cos(beta) / math.sin(beta)  # slanted line passing (0, 1)
        v = radon_s(BALL, Slanted(1.0, p_foot, beta))
        assert_allclose(v, 1.0, rtol=1e-12)

    def test_rotated_gaussian_marginal(self):
        for p, beta in [(-0.5, 0.8), (0.2, 1.2), (0.0, 0.4)]:
            d = (0.0 - p) * math.sin(beta) - 1.0 * math.cos(beta)
            v = radon_s(G, Slanted(1.0, p, beta))
            assert_allclose(v, truncated_gauss_marginal(d), rtol=1e-12, atol=1e-300)

    def test_plane_missing_support(self):
        assert radon_s(G, Slanted(1.0, 5.0, 0.3)) == 0.0

    def test_converges_to_vertical_plane(self):
        # the slanted family is cut off strictly below pi/2, but its values
        # must approach the separately-coded vertical integral
        target = radon_v(G, 1.0, 0.2)
        errs = [
            abs(radon_s(G, Slanted(1.0, 0.2, b)) - target)
            for b in (0.49 * math.pi, 0.499 * math.pi, 0.4999 * math.pi)
        ]
        assert errs[0] > errs[1] > errs[2]

    def test_3d_slanted_through_polybump(self):
        # oracle: full-plane 2-D quadrature in (s, tau) without clipping
        from numpy.polynomial.legendre import leggauss

        beta, p = 0.8, -0.4
        om = np.array([math.cos(0.3), math.sin(0.3)])
        perp = np.array([-om[1], om[0]])
        t, w = leggauss(1200)
        s = 2.5 * (t + 1.0)  # [0, 5]
        ws = 2.5 * w
        tau = 3.0 * t
        wt = 3.0 * w
        cb, sb = math.cos(beta), math.sin(beta)
        pts = np.empty((s.size, tau.size, 3))
        pts[..., 0] = (p + s * cb)[:, None] * om[0] + tau[None, :] * perp[0]
        pts[..., 1] = (p + s * cb)[:, None] * om[1] + tau[None, :] * perp[1]
        pts[..., 2] = (s * sb)[:, None]
        oracle = np.einsum("s,st,t->", ws, P3.eval(pts), wt)
        v = radon_s(P3, Slanted(om, p, beta))
        assert_allclose(v, oracle, rtol=1e-9)

    def test_linearity(self):
        a = GaussianBump((0.0, 1.0), 0.25, 1.0, 1.0)
        b = BallIndicator((0.4, 1.2), 0.3, 0.5)
        plane = Slanted(1.0, -0.3, 0.7)
        lhs = radon_s(Phantom([a, b]), plane)
        rhs = radon_s(Phantom([a]), plane) + radon_s(Phantom([b]), plane)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


class TestRadonWeighted:
    def test_zero_data(self):
        g = lambda om, u, r: np.zeros_like(u)
        assert radon_weighted(g, None, 0.0, 0.5, Unit()) == 0.0

    def test_unit_weight_indicator(self):
        g = lambda om, u, r: ((u >= 1.5) & (u <= 2.5)).astype(float)
        v = radon_weighted(g, None, 0.5, 0.7, Unit())
        assert_allclose(v, 1.0, rtol=1e-12)

    def test_unit_weight_reproduces_ray_integration(self):
        # smooth data: integral of exp(-(u-2)^2) * 1 ds over the ray u = p + s
        g = lambda om, u, r: np.exp(-((u - 2.0) ** 2) * 9.0)
        v = radon_weighted(g, None, 0.0, 0.5, Unit())
        assert_allclose(v, math.sqrt(math.pi) / 3.0, rtol=1e-10)

    def test_power_law_matches_reciprocal(self):
        g = lambda om, u, r: np.exp(-((u - 2.0) ** 2) * 4.0) * r
        a = radon_weighted(g, None, 0.0, 0.5, Reciprocal())
        b = radon_weighted(g, None, 0.0, 0.5, PowerLaw(-1.0))
        assert_allclose(a, b, rtol=1e-14)

    def test_support_ball_windows_match_full_truncation(self):
        # sonar data of the Gaussian phantom along a ray; clipped windows
        # must reproduce the plain truncated integral
        def g(om, u, r):
            return np.array(
                [sonar_2d(G, float(ui), float(ri)) for ui, ri in zip(u, r)]
            )

        balls = [Ball(np.array([0.0, 1.0]), 1.0)]
        clipped = radon_weighted(g, None, -0.8, 0.6, Unit(), support_balls=balls)
        plain = radon_weighted(g, None, -0.8, 0.6, Unit())
        assert_allclose(clipped, plain, rtol=1e-8)

    def test_log_windows_handle_far_field(self):
        # near-vertical ray: the window stretches two decades in s
        def g(om, u, r):
            from sonarkit.sonar import sonar_2d_batch

            return sonar_2d_batch(G, np.asarray(u), np.asarray(r))

        beta = 0.5 * math.pi - 0.05
        balls = [Ball(np.array([0.0, 1.0]), 1.0)]
        v = radon_weighted(g, None, -0.3, beta, Reciprocal(), support_balls=balls)
        fine = radon_weighted(
            g, None, -0.3, beta, Reciprocal(),
            spec=QuadratureSpec(panels=16), support_balls=balls,
        )
        assert v != 0.0
        assert_allclose(v, fine, rtol=1e-6)

    def test_reciprocal_near_zero_data_warns(self):
        g = lambda om, u, r: np.ones_like(u)
        with pytest.warns(RuntimeWarning, match="unreliable"):
            radon_weighted(g, None, 0.0, 0.5, Reciprocal())

    def test_beta_domain_checked(self):
        g = lambda om, u, r: np.zeros_like(u)
        with pytest.raises(DomainError):
            radon_weighted(g, None, 0.0, 0.5 * math.pi, Unit())


class TestCylinderTransform:
    def test_missing_support(self):
        cyl = CylinderParam(np.array([1.0, 0.0]), 5.0, 0.5)
        assert cylinder_transform(P3, cyl) == 0.0

    def test_half_circumference_times_length(self):
        # a term that is identically one over its whole declared patch: the
        # surface integral collapses to area(patch) * r = pi * r * L
        class _ConstPatch:
            center = np.array([0.0, 0.0, 1.6])
            reach = 1.6

            def value(self, pts):
                return np.ones(np.asarray(pts).shape[:-1])

        cyl = CylinderParam(np.array([1.0, 0.0]), 0.0, 0.8)
        v = cylinder_transform(Phantom([_ConstPatch()]), cyl)
        L = 2.0 * math.sqrt(1.6**2 - (1.6 - 0.8) ** 2)
        assert_allclose(v, math.pi * 0.8 * L, rtol=1e-13)

    def test_order_of_integration_oracle(self):
        # same surface integral with the iterated order swapped
        from numpy.polynomial.legendre import leggauss

        cyl = CylinderParam(np.array([1.0, 0.0]), 0.1, 0.9)
        v = cylinder_transform(P3, cyl)
        t, w = leggauss(1500)
        phi = 0.5 * math.pi * (t + 1.0)
        wphi = 0.5 * math.pi * w
        tau = 1.2 * t
        wtau = 1.2 * w
        pts = np.empty((tau.size, phi.size, 3))
        pts[..., 0] = (0.1 + 0.9 * np.cos(phi))[None, :]
        pts[..., 1] = tau[:, None]
        pts[..., 2] = (0.9 * np.sin(phi))[None, :]
        vals = P3.eval(pts)
        oracle = 0.9 * np.einsum("t,tp,p->", wtau, vals, wphi)
        assert_allclose(v, oracle, rtol=1e-8)

    def test_2d_degenerates_to_sonar(self):
        v = cylinder_transform(G, CylinderParam(1.0, 0.3, 0.9))
        assert v == sonar_2d(G, 0.3, 0.9)

    def test_linearity(self):
        a = PolyBump((0.0, 0.0, 1.0), 0.6, 1.0, 3)
        b = PolyBump((0.3, 0.2, 0.8), 0.4, 2.0, 2)
        cyl = CylinderParam(np.array([0.0, 1.0]), 0.2, 1.1)
        lhs = cylinder_transform(Phantom([a, b]), cyl)
        rhs = cylinder_transform(Phantom([a]), cyl) + cylinder_transform(Phantom([b]), cyl)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


class TestSinogramFormat:
    def test_round_trip_all_tags(self, tmp_path):
        entries = [
            (Horizontal(0.9), 1.25),
            (Vertical(1.0, -0.3), 2.5),
            (Slanted(-1.0, 0.7, 0.6), -0.125),
        ]
        path = tmp_path / "sino.txt"
        save_sinogram(entries, 2, path)
        dim, back = load_sinogram(path)
        assert dim == 2
        assert isinstance(back[0][0], Horizontal) and back[0][1] == 1.25
        assert isinstance(back[1][0], Vertical) and back[1][0].p == -0.3
        assert isinstance(back[2][0], Slanted) and back[2][0].beta == 0.6

    def test_3d_omega_arity(self):
        s2 = math.sqrt(0.5)
        entries = [(Vertical(np.array([s2, s2]), 0.1), 3.0)]
        text = format_sinogram(entries, 3)
        dim, back = parse_sinogram(text)
        assert dim == 3
        assert_allclose(back[0][0].omega, [s2, s2])

    def test_header_required(self):
        with pytest.raises(ValueError, match="dim"):
            parse_sinogram("H 1.0 2.0\n")

    def test_malformed_row_reports_line(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_sinogram("dim 2\nH 1.0\n")

    def test_bad_plane_parameters_report_line(self):
        with pytest.raises(ValueError, match="line 3"):
            parse_sinogram("dim 2\nH 1.0 2.0\nS 1.0 0.0 1.7 0.5\n")
