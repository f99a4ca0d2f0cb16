"""Operator identities tying sonar data to plane integrals, plus 2-D imaging.

The checks in this module compute both sides of each identity through
independent code paths (direct transform quadrature on one side, operator
compositions over sonar data on the other) and report the observed error.
``radon_from_sonar`` and ``reconstruct_2d`` consume *only* sonar data — they
accept an evaluator object, never a phantom — which is what makes the
recovery demonstrations meaningful.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .fractional import _fd_weights, frac_derivative, frac_integral, op_v, op_w
from .geometry import Ball
from .phantoms import Phantom
from .quadrature import (
    DEFAULT_SPEC,
    AngularProfile,
    DomainError,
    LimitEstimate,
    QuadratureSpec,
    RadialProfile,
    endpoint_singular_rule,
    extrapolate_limit,
    integrate_endpoint_singular,
    integrate_unit_sphere,
    unit_sphere_area,
)
from .radon import (
    CylinderParam,
    Horizontal,
    HyperplaneParam,
    Reciprocal,
    Slanted,
    Vertical,
    _gl_line,
    _window_nodes,
    _merge_intervals,
    _unit_vector,
    cylinder_transform,
    radon_centerset,
    radon_h,
    radon_s,
    radon_v,
    radon_weighted,
)
from .sonar import sonar_2d_batch, sonar_3d_batch

__all__ = [
    "PhantomSonarData",
    "TabulatedSonarData2D",
    "TabulatedSonarData3D",
    "IdentityReport",
    "ReconstructionResult",
    "check_horizontal",
    "check_vertical",
    "check_slanted_2d",
    "check_cylinder",
    "check_john",
    "check_semigroup",
    "check_inverse",
    "radon_from_sonar",
    "vertical_limit_samples",
    "reconstruct_2d",
    "format_report",
    "save_report",
    "format_image_pgm",
    "format_image_dump",
]


# ---------------------------------------------------------------------------
# sonar data evaluators


def _support_band_mask(balls, centers, radii):
    """True where a sphere (center, radius) can meet any support ball."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.asarray(radii, dtype=float)
    mask = np.zeros(radii.shape, dtype=bool)
    for ball in balls:
        bc = np.asarray(ball.center, dtype=float)
        d = np.sqrt(np.sum((centers - bc[:-1]) ** 2, axis=-1) + bc[-1] ** 2)
        mask |= np.abs(d - radii) <= ball.radius
    return mask


class PhantomSonarData:
    """Sonar data computed on demand by forward quadrature of a phantom.

    The callable signature is ``data(centers, radii) -> values`` with
    ``centers`` of shape (m, n-1) (or (m,) in dimension two) and ``radii``
    of shape (m,).  ``support_balls`` bound where the underlying function
    lives, letting consumers clip their integration windows.
    """

    def __init__(self, f: Phantom, spec: QuadratureSpec = DEFAULT_SPEC):
        self.dimension = f.dimension
        self.support_balls = f.support_balls()
        self.aux_cache: dict = {}
        self._f = f
        self._spec = spec

    def __call__(self, centers, radii):
        radii = np.asarray(radii, dtype=float)
        if self.dimension == 2:
            xs = np.asarray(centers, dtype=float).reshape(radii.shape)
            return sonar_2d_batch(self._f, xs, radii, self._spec)
        centers = np.asarray(centers, dtype=float).reshape(radii.size, 2)
        return sonar_3d_batch(self._f, centers, radii, self._spec)


class TabulatedSonarData2D:
    """Sonar data on cubic-spline tables, split into near and far fields.

    The near field holds ``S(c, r)`` on a rectangular (center, radius) grid
    up to ``r_switch``.  Beyond that, circles through the data region are
    nearly vertical lines, so the far field is tabulated against an *edge*
    coordinate: ``G_left(u, k) = S(u + 1/k, 1/k)`` for circles whose left
    edge sits at ``u``, and mirrored for right edges.  Both are smooth down
    to ``k = 0``, where the row holds the expanding-circle limit obtained
    by extrapolation.  Queries outside the support bands return exactly
    zero; nonpositive radii raise.
    """

    def __init__(self, source, r_switch=5.0, dc=0.01, dkappa=0.004, margin=0.1):
        from scipy.interpolate import RectBivariateSpline

        if source.dimension != 2:
            raise DomainError("TabulatedSonarData2D needs two-dimensional data")
        self.dimension = 2
        self.support_balls = list(source.support_balls)
        self.aux_cache: dict = {}
        self.r_switch = float(r_switch)

        reach = [
            (float(b.center[0]), float(b.center[1]), float(b.radius))
            for b in self.support_balls
        ]
        w = max(
            math.sqrt(max((self.r_switch + r) ** 2 - h * h, 0.0)) + abs(c)
            for c, h, r in reach
        )
        c_grid = np.arange(-w - margin, w + margin + dc, dc)
        r_grid = np.arange(0.0, self.r_switch + dc, dc)
        cc = np.repeat(c_grid, r_grid.size)
        rr = np.tile(r_grid, c_grid.size)
        vals = np.zeros_like(cc)
        live = rr > 0
        vals[live] = source(cc[live], rr[live])
        near = vals.reshape(c_grid.size, r_grid.size)
        self._near = RectBivariateSpline(c_grid, r_grid, near)

        u_half = max(abs(c) + r + margin for c, _h, r in reach) + 0.5
        u_grid = np.arange(-u_half, u_half + dc, dc)
        k_grid = np.arange(0.0, 1.0 / self.r_switch + dkappa, dkappa)
        gl = np.zeros((u_grid.size, k_grid.size))
        gr = np.zeros_like(gl)
        for j, k in enumerate(k_grid):
            if k == 0.0:
                radii = [8.0 * self.r_switch * 2.0**m for m in range(4)]
                for i, u in enumerate(u_grid):
                    gl[i, j] = extrapolate_limit(
                        [
                            (s, float(source(np.array([u + s]), np.array([s]))[0]))
                            for s in radii
                        ]
                    ).value
                    gr[i, j] = extrapolate_limit(
                        [
                            (s, float(source(np.array([u - s]), np.array([s]))[0]))
                            for s in radii
                        ]
                    ).value
            else:
                r = 1.0 / k
                gl[:, j] = source(u_grid + r, np.full(u_grid.size, r))
                gr[:, j] = source(u_grid - r, np.full(u_grid.size, r))
        self._far_left = RectBivariateSpline(u_grid, k_grid, gl)
        self._far_right = RectBivariateSpline(u_grid, k_grid, gr)
        self._u_lo, self._u_hi = float(u_grid[0]), float(u_grid[-1])

    def __call__(self, centers, radii):
        cs = np.asarray(centers, dtype=float).ravel()
        rs = np.asarray(radii, dtype=float).ravel()
        if np.any(rs <= 0):
            raise DomainError("sonar radii must be positive")
        out = np.zeros_like(rs)
        band = _support_band_mask(self.support_balls, cs[:, None], rs)
        near = band & (rs <= self.r_switch)
        if np.any(near):
            out[near] = self._near.ev(cs[near], rs[near])
        far = band & ~near
        if np.any(far):
            ul = cs[far] - rs[far]
            ur = cs[far] + rs[far]
            kk = 1.0 / rs[far]
            vals = np.zeros(int(far.sum()))
            left = (ul >= self._u_lo) & (ul <= self._u_hi)
            if np.any(left):
                vals[left] = self._far_left.ev(ul[left], kk[left])
            right = ~left & (ur >= self._u_lo) & (ur <= self._u_hi)
            if np.any(right):
                vals[right] = self._far_right.ev(ur[right], kk[right])
            out[far] = vals
        return out


class TabulatedSonarData3D:
    """Sonar data on a tricubic table over (center, center, radius).

    Coverage is sized from the support balls and ``r_max``; queries outside
    the support bands return exactly zero.  The table only answers radii up
    to ``r_max``; beyond it the bands are reported empty, so it must only
    stand in for data whose every queried radius stays under ``r_max``.
    """

    def __init__(self, source, r_max, dc=0.04, dr=0.04, margin=0.15):
        from scipy import ndimage

        if source.dimension != 3:
            raise DomainError("TabulatedSonarData3D needs three-dimensional data")
        self.dimension = 3
        self.support_balls = list(source.support_balls)
        self.aux_cache: dict = {}
        self.r_max = float(r_max)

        lo = np.full(2, np.inf)
        hi = np.full(2, -np.inf)
        for b in self.support_balls:
            w = math.sqrt(max((self.r_max + b.radius) ** 2 - b.center[2] ** 2, 0.0))
            lo = np.minimum(lo, b.center[:2] - w)
            hi = np.maximum(hi, b.center[:2] + w)
        self._origin = lo - margin
        self._dc, self._dr = float(dc), float(dr)
        n1 = int(math.ceil((hi[0] - lo[0] + 2 * margin) / dc)) + 1
        n2 = int(math.ceil((hi[1] - lo[1] + 2 * margin) / dc)) + 1
        nr = int(math.ceil(self.r_max / dr)) + 2
        c1 = self._origin[0] + dc * np.arange(n1)
        c2 = self._origin[1] + dc * np.arange(n2)
        rr = dr * np.arange(nr)
        table = np.zeros((n1, n2, nr))
        centers = np.stack([np.repeat(c1, n2), np.tile(c2, n1)], axis=1)
        # Chunk the banded centers: the batch evaluator builds a dense
        # (chunk, psi-nodes, lambda-nodes) tensor, so one full slice at
        # once would not fit in memory.
        chunk = 2048
        for j in range(1, nr):
            flat = _support_band_mask(
                self.support_balls, centers, np.full(centers.shape[0], rr[j])
            )
            if np.any(flat):
                vals = np.zeros(centers.shape[0])
                sel = np.flatnonzero(flat)
                for k in range(0, sel.size, chunk):
                    part = sel[k : k + chunk]
                    vals[part] = source(
                        centers[part], np.full(part.size, rr[j])
                    )
                table[:, :, j] = vals.reshape(n1, n2)
        self._coeffs = ndimage.spline_filter(table, order=3, mode="mirror")

    def __call__(self, centers, radii):
        from scipy import ndimage

        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        rs = np.asarray(radii, dtype=float).ravel()
        if np.any(rs <= 0):
            raise DomainError("sonar radii must be positive")
        out = np.zeros_like(rs)
        band = _support_band_mask(self.support_balls, centers, rs)
        band &= rs <= self.r_max
        if np.any(band):
            i1 = (centers[band, 0] - self._origin[0]) / self._dc
            i2 = (centers[band, 1] - self._origin[1]) / self._dc
            i3 = rs[band] / self._dr
            out[band] = ndimage.map_coordinates(
                self._coeffs,
                np.stack([i1, i2, i3]),
                order=3,
                prefilter=False,
                mode="mirror",
            )
        return out


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True, eq=False)
class IdentityReport:
    """Two independently computed sides of an identity, with error summary.

    ``max_rel_err`` uses per-point relative error except where the
    reference side is below 1e-9 in magnitude, where the absolute error
    stands in.  ``passed`` is exactly ``max_rel_err <= tolerance``.
    """

    identity_name: str
    parameter_grid: tuple
    lhs: NDArray[np.float64]
    rhs: NDArray[np.float64]
    max_abs_err: float
    max_rel_err: float
    tolerance: float
    passed: bool


def _assemble_report(name, grid, lhs, rhs, tolerance, extra_err=None, normalized=False):
    """Build a report; ``normalized`` rows carry sup-norm-scaled values.

    With ``normalized=True`` the caller has already divided both sides by
    the reference profile's sup norm, so the absolute row differences *are*
    relative errors and the pointwise quotient (which blows up at a
    profile's small-value foot) is not taken.
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.shape != rhs.shape or lhs.size != len(grid):
        raise ValueError("report sides and parameter grid must have equal length")
    abs_err = np.abs(lhs - rhs)
    if extra_err is not None:
        abs_err = np.maximum(abs_err, np.asarray(extra_err, dtype=float))
    if normalized:
        rel = abs_err
    else:
        big = np.abs(rhs) > 1e-9
        rel = np.where(big, abs_err / np.where(big, np.abs(rhs), 1.0), abs_err)
    max_abs = float(abs_err.max()) if abs_err.size else 0.0
    max_rel = float(rel.max()) if rel.size else 0.0
    return IdentityReport(
        identity_name=name,
        parameter_grid=tuple(grid),
        lhs=lhs,
        rhs=rhs,
        max_abs_err=max_abs,
        max_rel_err=max_rel,
        tolerance=float(tolerance),
        passed=max_rel <= tolerance,
    )


def format_report(report: IdentityReport) -> str:
    """Plain-text report: one row per grid point, then an error footer."""
    lines = [
        f"identity {report.identity_name}",
        "tolerance %.17g" % report.tolerance,
        f"points {len(report.parameter_grid)}",
    ]
    for params, lv, rv in zip(report.parameter_grid, report.lhs, report.rhs):
        ptxt = " ".join("%.17g" % float(p) for p in np.atleast_1d(params))
        lines.append(f"{ptxt} {'%.17g' % lv} {'%.17g' % rv}")
    lines.append("max_abs_err %.17g" % report.max_abs_err)
    lines.append("max_rel_err %.17g" % report.max_rel_err)
    lines.append("result " + ("pass" if report.passed else "fail"))
    return "\n".join(lines) + "\n"


def save_report(report: IdentityReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_report(report))


# ---------------------------------------------------------------------------
# shared numerics over sonar data


def _plane_integral_of_data(data, y: float, spec: QuadratureSpec) -> float:
    """Integral of the sonar data over all centers at one fixed radius."""
    if y <= 0:
        return 0.0
    if data.dimension == 2:
        intervals = []
        for b in data.support_balls:
            w_sq = (y + b.radius) ** 2 - b.center[1] ** 2
            if w_sq > 0:
                w = math.sqrt(w_sq)
                intervals.append((b.center[0] - w, b.center[0] + w))
        total = 0.0
        for a, bnd in _merge_intervals(intervals):
            nodes, weights = _gl_line(a, bnd, spec)
            total += float(weights @ data(nodes, np.full(nodes.size, y)))
        return total
    lo = np.full(2, np.inf)
    hi = np.full(2, -np.inf)
    for b in data.support_balls:
        w_sq = (y + b.radius) ** 2 - b.center[2] ** 2
        if w_sq > 0:
            w = math.sqrt(w_sq)
            lo = np.minimum(lo, b.center[:2] - w)
            hi = np.maximum(hi, b.center[:2] + w)
    if not np.all(lo < hi):
        return 0.0
    n1, w1 = _gl_line(lo[0], hi[0], spec)
    n2, w2 = _gl_line(lo[1], hi[1], spec)
    centers = np.stack([np.repeat(n1, n2.size), np.tile(n2, n1.size)], axis=1)
    vals = data(centers, np.full(centers.shape[0], y)).reshape(n1.size, n2.size)
    return float(w1 @ vals @ w2)


def _composed_horizontal_profile(data, grid, spec):
    """Profile of (plane integral of sonar data) over a radius grid."""
    values = np.zeros(grid.size)
    for i, y in enumerate(grid):
        if y > 0:
            values[i] = _plane_integral_of_data(data, float(y), spec)
    return RadialProfile(grid, values)


def _inflated_floor_balls(data, y: float) -> list[Ball]:
    """Balls bounding where sonar data at radius ``y`` lives on the floor.

    A sphere of radius ``y`` centered at floor point ``x`` meets a support
    ball (center height ``h``, radius ``rho``) only if ``x`` lies within
    ``sqrt((y+rho)^2 - h^2)`` of the ball's floor shadow — wider than the
    shadow itself, so the underlying function's own balls must not be used
    to clip data-side integrals.
    """
    balls = []
    for b in data.support_balls:
        w_sq = (y + b.radius) ** 2 - float(b.center[2]) ** 2
        if w_sq > 0.0:
            center = np.array([float(b.center[0]), float(b.center[1]), y])
            balls.append(Ball(center, math.sqrt(w_sq)))
    return balls


def _line_integral_of_data(data, y: float, omega, p: float, spec) -> float:
    """Centerset-line integral of 3-D sonar data at one fixed radius."""
    balls = _inflated_floor_balls(data, y)
    if not balls:
        return 0.0

    def g(pts, yy):
        pts = np.asarray(pts, dtype=float)
        return data(pts, np.full(pts.shape[0], yy))

    return radon_centerset(g, y, omega, p, spec, support_balls=balls)


def _ray_data_2d(data, omega):
    """Half-plane view of 2-D sonar data along direction ``omega``."""
    om = float(np.atleast_1d(np.asarray(omega, dtype=float))[0])
    balls_uy = [
        Ball(np.array([om * float(b.center[0]), float(b.center[1])]), float(b.radius))
        for b in data.support_balls
    ]

    def eval_uy(u, y):
        return data(om * np.asarray(u, dtype=float), y)

    return eval_uy, balls_uy


def _ray_windows(balls_uy, p: float, sin_beta: float):
    from .geometry import ray_circle_ball_windows

    windows = []
    for b in balls_uy:
        windows.extend(
            ray_circle_ball_windows(
                p, sin_beta, float(b.center[0]), float(b.center[1]), b.radius
            )
        )
    return _merge_intervals(windows)


def _ray_profile_matrix(eval_uy, balls_uy, feet, thetas, spec):
    """Reciprocal-weight ray integrals of half-plane data, batched.

    Returns the matrix ``P[j, k]`` of integrals along the ray with foot
    ``feet[k]`` and angle ``thetas[j]``, all data samples gathered into a
    single evaluator call.  Matches ``radon_weighted`` with the reciprocal
    weight node for node.
    """
    feet = np.asarray(feet, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    u_parts, y_parts, w_parts, owner_parts = [], [], [], []
    for j, theta in enumerate(thetas):
        sb = math.sin(theta)
        for k, p in enumerate(feet):
            for a, b in _ray_windows(balls_uy, float(p), sb):
                if b <= a:
                    continue
                s, wq = _window_nodes(a, b, spec)
                wq = wq / s
                u_parts.append(p + s)
                y_parts.append(s * sb)
                w_parts.append(wq)
                owner_parts.append(np.full(s.size, j * feet.size + k))
    out = np.zeros(thetas.size * feet.size)
    if u_parts:
        u_all = np.concatenate(u_parts)
        y_all = np.concatenate(y_parts)
        w_all = np.concatenate(w_parts)
        owner = np.concatenate(owner_parts)
        vals = np.asarray(eval_uy(u_all, y_all), dtype=float)
        out = np.bincount(owner, weights=w_all * vals, minlength=out.size)
    return out.reshape(thetas.size, feet.size)


def _frac_integral_matrix(grid, vals, nu, spec):
    """Column-wise fractional integral of sampled profiles."""
    from scipy.interpolate import CubicSpline

    nodes, weights = endpoint_singular_rule(nu - 1.0, spec)
    sp = CubicSpline(grid, vals, axis=0)
    out = np.zeros_like(vals)
    pos = grid > 0
    ys = grid[pos]
    coef = 2.0 * math.pi**nu / math.gamma(nu)
    scale = coef * ys ** (2.0 * nu)
    samples_at = ys[:, None] * np.sin(nodes)[None, :]
    rows = np.zeros((ys.size, vals.shape[1]))
    step = max(1, ys.size // 4)
    for lo in range(0, ys.size, step):
        block = sp(samples_at[lo : lo + step])  # (chunk, rule, columns)
        rows[lo : lo + step] = np.einsum("brk,r->bk", block, weights)
    out[pos] = scale[:, None] * rows
    return out


def _d1_matrix(grid, vals):
    """Column-wise reduction (1/2pi) d/dy [vals/y] on a shared grid."""
    m = grid.size
    ratio = np.empty_like(vals)
    if grid[0] == 0.0:
        ratio[1:] = vals[1:] / grid[1:, None]
        ratio[0] = _fd_weights(0.0, grid[:5], 1) @ vals[:5]
    else:
        ratio = vals / grid[:, None]
    out = np.empty_like(vals)
    for i in range(m):
        lo = min(max(i - 2, 0), m - 5)
        w = _fd_weights(grid[i], grid[lo : lo + 5], 1)
        out[i] = w @ ratio[lo : lo + 5]
    return out / (2.0 * math.pi)


def _op_w_matrix(beta_grid, vals, spec):
    """Column-wise angular inversion (same factorization as ``op_w``)."""
    y = np.sin(beta_grid)
    half = _frac_integral_matrix(y, vals, 0.5, spec)
    deriv = _d1_matrix(y, half)
    return np.cos(beta_grid)[:, None] * deriv


_THETA_NODES = 96
_THETA_MIN = 5e-3
_BETA_CAP = 0.5 * math.pi - 1e-3


def _slanted_values_from_rays(eval_uy, balls_uy, feet, beta, spec, n_theta=_THETA_NODES):
    """Evaluate the angular-inversion chain at one angle for many feet."""
    hi = min(1.08 * beta + 0.02, _BETA_CAP)
    # For nearly flat rays the whole grid is tiny; the floor must shrink
    # with it or the first step dwarfs the rest and the bottom
    # finite-difference stencils of the inversion lose their conditioning.
    grid = np.linspace(min(_THETA_MIN, hi / 32.0), hi, n_theta)
    step = grid[1] - grid[0]
    if beta > hi - 2.0 * step:
        warnings.warn(
            "slanted angle sits at the edge of the angular grid; the "
            "differentiation step of the inversion degrades there",
            RuntimeWarning,
            stacklevel=3,
        )
    profile = _ray_profile_matrix(eval_uy, balls_uy, feet, grid, spec)
    # Zero-radius circles see nothing, so the profile at angle zero vanishes
    # identically.  Pinning that row keeps the half-order integral honest on
    # [0, theta_min], where angles below the grid would otherwise rely on
    # spline extrapolation — the dominant error for nearly flat rays.
    grid = np.concatenate([[0.0], grid])
    profile = np.vstack([np.zeros(profile.shape[1]), profile])
    inverted = _op_w_matrix(grid, profile, spec)
    from scipy.interpolate import CubicSpline

    return CubicSpline(grid, inverted, axis=0)(beta)


def _c_data_2d(data, omega, y_cap: float, spec):
    """Half-plane cylinder data derived from 3-D sonar data (cached).

    Tabulates centerset-line integrals of the sonar data over an (axis
    offset, radius) grid, applies the half-order derivative column-wise in
    the radius variable, and wraps the result in a spline with exact zeros
    outside the support bands.  The returned (evaluator, balls) pair mirrors
    the 2-D sonar case, so the slanted-plane chain reuses the planar
    machinery unchanged.
    """
    omega = _unit_vector(omega)
    key = ("cdata", round(float(omega[0]), 12), round(float(omega[1]), 12))
    cached = data.aux_cache.get(key)
    if cached is not None and cached[0] >= y_cap:
        return cached[1], cached[2]

    balls_uy = [
        Ball(
            np.array([float(omega @ b.center[:2]), float(b.center[2])]),
            float(b.radius),
        )
        for b in data.support_balls
    ]
    spans = [
        (
            float(b.center[0]),
            math.sqrt(max((y_cap + b.radius) ** 2 - float(b.center[1]) ** 2, 0.0)),
        )
        for b in balls_uy
    ]
    u_lo = min(bu - w for bu, w in spans)
    u_hi = max(bu + w for bu, w in spans)
    u_grid = np.linspace(u_lo, u_hi, max(2, int(math.ceil((u_hi - u_lo) / 0.02)) + 1))
    y_grid = np.linspace(0.0, y_cap, max(5, int(math.ceil(y_cap / 0.01)) + 1))
    t1 = np.zeros((y_grid.size, u_grid.size))
    for i, u in enumerate(u_grid):
        for j in range(1, y_grid.size):
            t1[j, i] = _line_integral_of_data(
                data, float(y_grid[j]), omega, float(u), spec
            )
    half = _frac_integral_matrix(y_grid, t1, 0.5, spec)
    t2 = _d1_matrix(y_grid, half)

    from scipy.interpolate import RectBivariateSpline

    sp = RectBivariateSpline(y_grid, u_grid, t2)

    def eval_uy(u, y):
        u = np.asarray(u, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(u)
        ok = (y <= y_cap) & _support_band_mask(balls_uy, u[:, None], y)
        if np.any(ok):
            out[ok] = sp.ev(y[ok], u[ok])
        return out

    data.aux_cache[key] = (y_cap, eval_uy, balls_uy)
    return eval_uy, balls_uy


# ---------------------------------------------------------------------------
# identity checks


def check_horizontal(
    f: Phantom,
    y_grid,
    spec: QuadratureSpec = DEFAULT_SPEC,
    tolerance: float | None = None,
    form: str = "integral",
    sonar_data=None,
) -> IdentityReport:
    """Check the horizontal-plane identity over a grid of heights.

    ``form="integral"`` compares the plane integral of sonar data against
    the fractional integral (order (n-1)/2) of the direct plane-integral
    profile; ``form="derivative"`` compares the direct plane integral
    against the fractional derivative of the composed profile, which stacks
    differentiation error on top and so carries a looser default tolerance.
    """
    if form not in ("integral", "derivative"):
        raise ValueError(f"unknown form {form!r}")
    y_grid = np.asarray(y_grid, dtype=float)
    n = f.dimension
    if tolerance is None:
        if form == "integral":
            tolerance = 1e-3 if n == 2 else 5e-3
        else:
            tolerance = 1e-2
    data = sonar_data if sonar_data is not None else PhantomSonarData(f, spec)
    nu = (n - 1) / 2.0

    from scipy.interpolate import CubicSpline

    y_max = float(np.max(y_grid))
    dense = np.linspace(0.0, y_max * 1.05 + 0.05, 161)
    composed = _composed_horizontal_profile(data, dense, spec)
    if form == "integral":
        direct = RadialProfile(
            dense,
            np.array([radon_h(f, float(y), spec) if y > 0 else 0.0 for y in dense]),
        )
        lhs = CubicSpline(dense, composed.values)(y_grid)
        rhs = CubicSpline(dense, frac_integral(direct, nu, spec).values)(y_grid)
    else:
        lhs = np.array([radon_h(f, float(y), spec) for y in y_grid])
        rhs = CubicSpline(dense, frac_derivative(composed, nu, spec).values)(y_grid)
    return _assemble_report(
        "horizontal", [float(y) for y in y_grid], lhs, rhs, tolerance
    )


def vertical_limit_samples(data, omega, p: float, spec: QuadratureSpec = DEFAULT_SPEC):
    """Sonar samples along expanding tangent spheres for one vertical plane."""
    omega = _unit_vector(omega)
    if omega.size != data.dimension - 1:
        raise DomainError(
            f"omega has {omega.size} floor components for dimension-{data.dimension} data"
        )
    samples = []
    s = spec.limit_base
    for _ in range(spec.limit_steps):
        center = omega * s
        value = float(data(center.reshape(1, -1), np.array([abs(s - p)]))[0])
        samples.append((s, value))
        s *= spec.limit_ratio
    return samples


def check_vertical(
    f: Phantom,
    planes,
    spec: QuadratureSpec = DEFAULT_SPEC,
    tolerance: float = 1e-2,
    sonar_data=None,
) -> IdentityReport:
    """Check the vertical-plane identity over a list of planes.

    The data side is the extrapolated limit of sonar values along expanding
    tangent spheres.  An extrapolation whose own uncertainty estimate
    exceeds the tolerance is folded into the reported error rather than
    silently accepted.
    """
    data = sonar_data if sonar_data is not None else PhantomSonarData(f, spec)
    grid, lhs, rhs, extra = [], [], [], []
    for plane in planes:
        omega = np.atleast_1d(np.asarray(plane.omega, dtype=float))
        lhs.append(radon_v(f, omega, plane.p, spec))
        est: LimitEstimate = extrapolate_limit(
            vertical_limit_samples(data, omega, plane.p, spec)
        )
        rhs.append(est.value)
        flagged = est.uncertainty > tolerance * max(abs(est.value), 1e-9)
        extra.append(est.uncertainty if flagged else 0.0)
        grid.append((*[float(w) for w in omega], float(plane.p)))
    return _assemble_report("vertical", grid, lhs, rhs, tolerance, extra_err=extra)


def check_slanted_2d(
    f: Phantom,
    rays,
    spec: QuadratureSpec = DEFAULT_SPEC,
    tolerance: float | None = None,
    form: str = "V",
    sonar_data=None,
) -> IdentityReport:
    """Check the slanted-line identity on (offset, angle) pairs.

    ``form="V"`` compares the angular forward operator applied to direct
    slanted-line profiles against reciprocal-weight ray integrals of the
    sonar data.  ``form="W"`` checks the inverted arrangement, recovering
    each slanted-line integral from the sonar data alone; the extra
    differentiation loses accuracy, hence the looser default tolerance.
    """
    if f.dimension != 2:
        raise DomainError("the slanted-line check runs in dimension two")
    if form not in ("V", "W"):
        raise ValueError(f"unknown form {form!r}")
    if tolerance is None:
        tolerance = 1e-2 if form == "V" else 2e-2
    data = sonar_data if sonar_data is not None else PhantomSonarData(f, spec)
    eval_uy, balls_uy = _ray_data_2d(data, 1.0)

    def g(_om, u, r):
        return eval_uy(u, r)

    by_foot: dict[float, list[float]] = {}
    for p, beta in rays:
        by_foot.setdefault(float(p), []).append(float(beta))

    from scipy.interpolate import CubicSpline

    grid, lhs, rhs = [], [], []
    for p, betas in by_foot.items():
        betas = sorted(betas)
        if form == "V":
            dense = np.linspace(_THETA_MIN, max(betas), 192)
            direct = np.array(
                [radon_s(f, Slanted(1.0, p, float(t)), spec) for t in dense]
            )
            v_of_direct = op_v(AngularProfile(dense, direct), spec)
            lhs_interp = CubicSpline(dense, v_of_direct.values)
            for beta in betas:
                grid.append((p, beta))
                lhs.append(float(lhs_interp(beta)))
                rhs.append(
                    radon_weighted(
                        g, 1.0, p, beta, Reciprocal(), spec, support_balls=balls_uy
                    )
                )
        else:
            for beta in betas:
                grid.append((p, beta))
                lhs.append(radon_s(f, Slanted(1.0, p, beta), spec))
                rhs.append(
                    float(
                        _slanted_values_from_rays(eval_uy, balls_uy, [p], beta, spec)[0]
                    )
                )
    return _assemble_report("slanted2d", grid, lhs, rhs, tolerance)


def check_cylinder(
    f: Phantom,
    cylinders,
    spec: QuadratureSpec = DEFAULT_SPEC,
    tolerance: float | None = None,
    form: str = "integral",
    sonar_data=None,
) -> IdentityReport:
    """Check the cylinder identity on a list of cylinders.

    ``form="integral"``: half-order fractional integral of the direct
    cylinder profile against centerset-line integrals of the sonar data.
    ``form="derivative"``: direct cylinder values against the half-order
    derivative of the composed line-integral profile.
    """
    if f.dimension != 3:
        raise DomainError("the cylinder check runs in dimension three")
    if form not in ("integral", "derivative"):
        raise ValueError(f"unknown form {form!r}")
    if tolerance is None:
        tolerance = 5e-3 if form == "integral" else 2e-2
    data = sonar_data if sonar_data is not None else PhantomSonarData(f, spec)

    by_axis: dict[tuple, list[float]] = {}
    for cyl in cylinders:
        omega = _unit_vector(cyl.omega)
        key = (float(omega[0]), float(omega[1]), float(cyl.p))
        by_axis.setdefault(key, []).append(float(cyl.r))

    from scipy.interpolate import CubicSpline

    grid, lhs, rhs = [], [], []
    for (w0, w1, p), radii in by_axis.items():
        omega = np.array([w0, w1])
        radii = sorted(radii)
        dense = np.linspace(0.0, radii[-1] * 1.05 + 0.02, 129)
        if form == "integral":
            cyl_profile = RadialProfile(
                dense,
                np.array(
                    [
                        cylinder_transform(f, CylinderParam(omega, p, float(r)), spec)
                        if r > 0
                        else 0.0
                        for r in dense
                    ]
                ),
            )
            lhs_interp = CubicSpline(
                dense, frac_integral(cyl_profile, 0.5, spec).values
            )
            for r in radii:
                grid.append((w0, w1, p, r))
                lhs.append(float(lhs_interp(r)))
                rhs.append(_line_integral_of_data(data, r, omega, p, spec))
        else:
            composed = RadialProfile(
                dense,
                np.array(
                    [
                        _line_integral_of_data(data, float(y), omega, p, spec)
                        if y > 0
                        else 0.0
                        for y in dense
                    ]
                ),
            )
            rhs_interp = CubicSpline(
                dense, frac_derivative(composed, 0.5, spec).values
            )
            for r in radii:
                grid.append((w0, w1, p, r))
                lhs.append(cylinder_transform(f, CylinderParam(omega, p, r), spec))
                rhs.append(float(rhs_interp(r)))
    return _assemble_report("cylinder", grid, lhs, rhs, tolerance)


def check_john(
    n: int,
    test_functions,
    spec: QuadratureSpec = DEFAULT_SPEC,
    tolerance: float = 1e-8,
) -> IdentityReport:
    """Check the plane-wave sphere-integral identity on (g, v) cases.

    The left side integrates ``g(v . theta)`` over the unit sphere; the
    right side is the weighted 1-D integral with the dimension-(n-2)
    sphere area in front, desingularized in dimension two where the
    endpoint kernel blows up.  Each ``g`` must accept arrays.
    """
    if n not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {n}")
    area = unit_sphere_area(n - 1)
    grid, lhs, rhs = [], [], []
    for idx, (g, v) in enumerate(test_functions):
        v = np.asarray(v, dtype=float)
        speed = float(np.linalg.norm(v))
        lhs.append(integrate_unit_sphere(lambda pts: g(v @ pts), n, spec))
        if n == 2:

            def folded(s, g=g, speed=speed):
                return g(speed * s) + g(-speed * s)

            rhs.append(area * integrate_endpoint_singular(folded, 1.0, -0.5, spec))
        else:
            nodes, weights = _gl_line(-1.0, 1.0, spec)
            rhs.append(
                area * float(weights @ np.asarray(g(speed * nodes), dtype=float))
            )
        grid.append((float(idx), speed))
    return _assemble_report("john", grid, lhs, rhs, tolerance)


def check_semigroup(
    spec: QuadratureSpec = DEFAULT_SPEC, tolerance: float = 1e-6
) -> IdentityReport:
    """Composition law of the fractional integrals on a fixed smooth profile.

    Both sides are normalized per order pair by the direct side's sup norm,
    so the reported relative error reflects profile-level agreement rather
    than blowing up at the small-value foot of the profile.
    """
    y = np.linspace(0.0, 3.0, 512)
    g = RadialProfile(y, np.exp(-((y - 1.0) ** 2)) * y**2)
    grid, lhs, rhs = [], [], []
    for mu, nu in [(0.5, 0.5), (0.7, 0.8), (1.0, 1.0)]:
        nested = frac_integral(frac_integral(g, nu, spec), mu, spec)
        direct = frac_integral(g, mu + nu, spec)
        scale = float(np.max(np.abs(direct.values)))
        for yy, a, b in zip(y, nested.values, direct.values):
            grid.append((mu, nu, float(yy)))
            lhs.append(a / scale)
            rhs.append(b / scale)
    return _assemble_report("semigroup", grid, lhs, rhs, tolerance, normalized=True)


def check_inverse(
    spec: QuadratureSpec = DEFAULT_SPEC, tolerance: float = 1e-4
) -> IdentityReport:
    """Left-inverse laws: radial orders {0.5, 1, 1.5, 2} plus the angular pair.

    Radial rows hold the round trip derivative-after-integral on interior
    points of a positive grid; angular rows (tagged with a leading -1) hold
    the inverse-after-forward round trip of the angular operators.  Rows
    are normalized by the input's sup norm, as in the semigroup check.
    """
    y = np.linspace(0.004, 2.0, 512)
    g = RadialProfile(y, np.exp(-(y**2)) * np.cos(1.3 * y) + 0.5)
    g_scale = float(np.max(np.abs(g.values)))
    grid, lhs, rhs = [], [], []
    for nu in (0.5, 1.0, 1.5, 2.0):
        back = frac_derivative(frac_integral(g, nu, spec), nu, spec)
        for i in range(2, y.size - 2):
            grid.append((nu, float(y[i])))
            lhs.append(back.values[i] / g_scale)
            rhs.append(g.values[i] / g_scale)
    beta = np.linspace(0.02, 0.5 * math.pi - 0.02, 1025)
    ang = AngularProfile(beta, np.sin(2.0 * beta))
    back = op_w(op_v(ang, spec), spec)
    a_scale = float(np.max(np.abs(ang.values)))
    for i in range(2, beta.size - 2, 4):
        grid.append((-1.0, float(beta[i])))
        lhs.append(back.values[i] / a_scale)
        rhs.append(ang.values[i] / a_scale)
    return _assemble_report("inverse", grid, lhs, rhs, tolerance, normalized=True)


# ---------------------------------------------------------------------------
# sonar-only recovery of plane integrals


def radon_from_sonar(
    sonar_data, plane: HyperplaneParam, n: int, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Estimate a plane integral using only sonar data.

    Dispatch: horizontal planes go through the fractional derivative of the
    composed plane-integral profile; vertical planes through the
    expanding-sphere limit; slanted planes through the angular inversion of
    reciprocal-weight ray integrals — with the centerset line-integral
    reduction and its half-order radius derivative inserted first in
    dimension three, which turns the data into the planar kind.
    """
    if n not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {n}")
    if sonar_data.dimension != n:
        raise DomainError(
            f"sonar data has dimension {sonar_data.dimension}, expected {n}"
        )
    if isinstance(plane, Horizontal):
        from scipy.interpolate import CubicSpline

        dense = np.linspace(0.0, 1.1 * plane.y + 0.1, 161)
        composed = _composed_horizontal_profile(sonar_data, dense, spec)
        deriv = frac_derivative(composed, (n - 1) / 2.0, spec)
        return float(CubicSpline(dense, deriv.values)(plane.y))
    if isinstance(plane, Vertical):
        est = extrapolate_limit(
            vertical_limit_samples(sonar_data, plane.omega, plane.p, spec)
        )
        return est.value
    if isinstance(plane, Slanted):
        if n == 2:
            eval_uy, balls_uy = _ray_data_2d(sonar_data, plane.omega)
        else:
            sb = math.sin(min(1.08 * plane.beta + 0.02, _BETA_CAP))
            reach = max(
                float(plane.omega @ b.center[:2]) + b.radius - min(plane.p, 0.0)
                for b in sonar_data.support_balls
            )
            y_cap = max(1.0, reach * sb / (1.0 - sb) + 1.0)
            eval_uy, balls_uy = _c_data_2d(sonar_data, plane.omega, y_cap, spec)
        return float(
            _slanted_values_from_rays(eval_uy, balls_uy, [plane.p], plane.beta, spec)[0]
        )
    raise DomainError(f"unsupported plane parameterization: {plane!r}")


# ---------------------------------------------------------------------------
# 2-D reconstruction


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Image recovered from sonar data, with optional reference comparison."""

    grid: NDArray[np.float64]
    reconstructed: NDArray[np.float64]
    reference: NDArray[np.float64]
    rel_l2_error: float

    @property
    def xs(self) -> NDArray[np.float64]:
        return self.grid[:, 0, 0]

    @property
    def ys(self) -> NDArray[np.float64]:
        return self.grid[0, :, 1]


def _ramp_filter_rows(rows: NDArray[np.float64], dt: float) -> NDArray[np.float64]:
    """Frequency-domain ramp filter with a cosine taper above 80% Nyquist."""
    _n_angles, k = rows.shape
    m = 1
    while m < 2 * k:
        m *= 2
    spectrum = np.fft.rfft(rows, n=m, axis=1)
    freqs = np.arange(spectrum.shape[1]) / (m * dt)
    frac = freqs / (0.5 / dt)
    taper = np.ones_like(freqs)
    high = frac > 0.8
    taper[high] = np.cos(0.5 * math.pi * (frac[high] - 0.8) / 0.2) ** 2
    return np.fft.irfft(spectrum * freqs * taper, n=m, axis=1)[:, :k]


_WEDGE = 0.1


def reconstruct_2d(
    sonar_data,
    window,
    resolution: int,
    spec: QuadratureSpec = DEFAULT_SPEC,
    n_angles: int = 90,
    n_offsets: int = 128,
    reference: Phantom | None = None,
) -> ReconstructionResult:
    """Recover an image on a half-plane window from sonar data alone.

    A parallel-beam sinogram is assembled from the same sonar-only
    estimates as :func:`radon_from_sonar`: generic directions through the
    angular-inversion chain, and the two thin angular wedges around the
    vertical direction filled by interpolation in angle, anchored at the
    expanding-sphere vertical estimates (vertical and horizontal planes
    occupy measure zero of the sinogram and have their own identities).
    The sinogram is then ramp-filtered and back-projected.

    ``window`` is ``(x_lo, x_hi, y_lo, y_hi)`` with ``y_lo >= 0``;
    ``reference``, when given, is evaluated on the image grid purely for
    error reporting and plays no part in the reconstruction.  Without a
    reference the comparison image is zero, so ``rel_l2_error`` degenerates
    to the L2 norm of the reconstruction itself.
    """
    if sonar_data.dimension != 2:
        raise DomainError("image recovery is implemented for dimension two")
    x0, x1, y0, y1 = (float(v) for v in window)
    if not (x1 > x0 and y1 > y0 and y0 >= 0.0):
        raise DomainError("window must be a box (x_lo, x_hi, y_lo, y_hi) in y >= 0")
    t_max = max(math.hypot(x, y) for x in (x0, x1) for y in (y0, y1)) + 0.1
    t_grid = np.linspace(-t_max, t_max, n_offsets)
    dt = float(t_grid[1] - t_grid[0])
    angles = (np.arange(n_angles) + 0.5) * math.pi / n_angles

    eval_pos, balls_pos = _ray_data_2d(sonar_data, 1.0)
    eval_neg, balls_neg = _ray_data_2d(sonar_data, -1.0)

    # anchors at the exact vertical directions (angle 0: the line x = t)
    anchor0 = np.array(
        [
            extrapolate_limit(
                vertical_limit_samples(sonar_data, 1.0, float(t), spec)
            ).value
            for t in t_grid
        ]
    )
    anchor_pi = anchor0[::-1]

    sinogram = np.zeros((n_angles, n_offsets))
    kept = []
    for i, alpha in enumerate(angles):
        if alpha < _WEDGE or alpha > math.pi - _WEDGE:
            continue
        if alpha < 0.5 * math.pi:
            beta = 0.5 * math.pi - alpha
            feet = -t_grid / math.cos(alpha)
            eval_uy, balls_uy = eval_neg, balls_neg
        else:
            beta = alpha - 0.5 * math.pi
            feet = t_grid / math.cos(alpha)
            eval_uy, balls_uy = eval_pos, balls_pos
        sinogram[i] = _slanted_values_from_rays(eval_uy, balls_uy, feet, beta, spec)
        kept.append(i)

    from scipy.interpolate import CubicSpline

    low = [i for i in range(n_angles) if i not in kept and angles[i] < 0.5 * math.pi]
    if low:
        first = kept[:3]
        sp = CubicSpline(
            np.concatenate([[0.0], angles[first]]),
            np.vstack([anchor0[None, :], sinogram[first]]),
            axis=0,
        )
        sinogram[low] = sp(angles[low])
    high = [i for i in range(n_angles) if i not in kept and angles[i] > 0.5 * math.pi]
    if high:
        last = kept[-3:]
        sp = CubicSpline(
            np.concatenate([angles[last], [math.pi]]),
            np.vstack([sinogram[last], anchor_pi[None, :]]),
            axis=0,
        )
        sinogram[high] = sp(angles[high])

    filtered = _ramp_filter_rows(sinogram, dt)

    xs = x0 + (np.arange(resolution) + 0.5) * (x1 - x0) / resolution
    ys = y0 + (np.arange(resolution) + 0.5) * (y1 - y0) / resolution
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    image = np.zeros_like(xx)
    for i, alpha in enumerate(angles):
        proj = xx * math.cos(alpha) + yy * math.sin(alpha)
        image += np.interp(proj, t_grid, filtered[i], left=0.0, right=0.0)
    image *= math.pi / n_angles

    grid = np.stack([xx, yy], axis=-1)
    if reference is not None:
        ref = np.asarray(reference.eval(grid), dtype=float)
    else:
        ref = np.zeros_like(image)
    ref_norm = float(np.linalg.norm(ref))
    diff_norm = float(np.linalg.norm(image - ref))
    rel = diff_norm / ref_norm if ref_norm > 0 else diff_norm
    return ReconstructionResult(
        grid=grid, reconstructed=image, reference=ref, rel_l2_error=rel
    )


# ---------------------------------------------------------------------------
# image artifacts


def format_image_pgm(image: NDArray[np.float64]) -> bytes:
    """Binary 16-bit portable graymap; the value range rides in a comment."""
    img = np.asarray(image, dtype=float)
    vmin = float(img.min())
    vmax = float(img.max())
    span = vmax - vmin
    if span <= 0:
        scaled = np.zeros(img.shape, dtype=np.uint16)
    else:
        scaled = np.round((img - vmin) / span * 65535.0).astype(np.uint16)
    header = (
        f"P5\n# range {'%.17g' % vmin} {'%.17g' % vmax}\n"
        f"{img.shape[1]} {img.shape[0]}\n65535\n"
    )
    return header.encode("ascii") + scaled.astype(">u2").tobytes()


def format_image_dump(result: ReconstructionResult) -> str:
    """Plain-text value dump: one ``x y reconstructed reference`` row per pixel."""
    xs, ys = result.xs, result.ys
    lines = [f"resolution {xs.size} {ys.size}"]
    for i in range(xs.size):
        for j in range(ys.size):
            lines.append(
                "%.17g %.17g %.17g %.17g"
                % (xs[i], ys[j], result.reconstructed[i, j], result.reference[i, j])
            )
    lines.append("rel_l2_error %.17g" % result.rel_l2_error)
    return "\n".join(lines) + "\n"
