"""Fractional integrals and derivatives acting on sampled profiles.

The radial operators act on the last (height) variable of functions
sampled as :class:`~sonarkit.quadrature.RadialProfile`; the angular pair
``op_v`` / ``op_w`` act on :class:`~sonarkit.quadrature.AngularProfile`.
Everything is built from one fractional integral family ``I^nu`` plus the
first-order reduction ``D_1``; higher derivatives and the angular inverse
are operator compositions of those two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import (
    DEFAULT_SPEC,
    AngularProfile,
    DomainError,
    QuadratureSpec,
    RadialProfile,
    _panel_rule,
    endpoint_singular_rule,
)

__all__ = [
    "FractionalOrder",
    "frac_integral",
    "frac_d1",
    "frac_derivative",
    "op_v",
    "op_w",
]

_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class FractionalOrder:
    """A nonnegative order ``nu`` together with its integer ceiling."""

    nu: float

    def __post_init__(self) -> None:
        nu = float(self.nu)
        if not math.isfinite(nu) or nu < 0:
            raise DomainError(f"fractional order must be >= 0, got {self.nu}")
        object.__setattr__(self, "nu", nu)

    @property
    def ceiling(self) -> int:
        """Smallest integer >= nu."""
        return int(math.ceil(self.nu))


def _as_order(nu) -> FractionalOrder:
    if isinstance(nu, FractionalOrder):
        return nu
    return FractionalOrder(float(nu))


def frac_integral(
    g: RadialProfile, nu, spec: QuadratureSpec = DEFAULT_SPEC
) -> RadialProfile:
    """Fractional integral of order ``nu`` of a radial profile.

    For ``nu > 0`` the value at height ``y`` is

        ``(2 pi^nu / Gamma(nu)) * y * integral_0^y (y^2 - s^2)^(nu-1) g(s) ds``

    computed with the shared endpoint-singular rule (one rule serves every
    ``y`` on the grid); order zero is the identity.  The profile is
    interpolated cubically at the quadrature nodes, so the grid must sample
    ``g`` densely enough for that interpolation to be below quadrature
    error.
    """
    order = _as_order(nu)
    grid = np.asarray(g.grid, dtype=float)
    if order.nu == 0.0:
        return RadialProfile(grid.copy(), np.asarray(g.values, dtype=float).copy())
    nodes, weights = endpoint_singular_rule(order.nu - 1.0, spec)
    interp = g.interpolator()
    coef = 2.0 * math.pi**order.nu / math.gamma(order.nu)
    out = np.zeros_like(grid)
    pos = grid > 0
    ys = grid[pos]
    samples = interp(ys[:, None] * np.sin(nodes)[None, :])
    out[pos] = coef * ys ** (2.0 * order.nu) * (samples @ weights)
    return RadialProfile(grid.copy(), out)


def _fd_weights(x0: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at ``x0``.

    Fornberg's recursion on arbitrary (distinct) nodes ``x``; exact for
    polynomials up to degree ``len(x) - 1``.
    """
    n = x.size
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    for i in range(1, n):
        c2 = 1.0
        mn = min(i, m)
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - (x[i - 1] - x0) * c[i - 1, k]) / c2
                c[i, 0] = -c1 * (x[i - 1] - x0) * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = ((x[i] - x0) * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = (x[i] - x0) * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _derivative_on_grid(grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    """First derivative of sampled values, five-point stencils throughout."""
    m = grid.size
    out = np.empty_like(values)
    for i in range(m):
        lo = min(max(i - 2, 0), m - 5)
        win = slice(lo, lo + 5)
        out[i] = _fd_weights(grid[i], grid[win], 1) @ values[win]
    return out


def frac_d1(g: RadialProfile) -> RadialProfile:
    """The reduction ``(1/2pi) d/dy [g(y)/y]`` on the profile's own grid.

    Interior points use five-point (fourth-order) stencils; the first and
    last two points fall back to one-sided stencils of the same width.  If
    the grid starts at zero the ratio ``g/y`` is extended by its limit
    there, which requires ``g(0) = 0``.
    """
    grid = np.asarray(g.grid, dtype=float)
    values = np.asarray(g.values, dtype=float)
    if grid.size < 5:
        raise DomainError("frac_d1 needs at least 5 grid points")
    if grid[0] == 0.0:
        scale = float(np.max(np.abs(values))) or 1.0
        if abs(values[0]) > 1e-12 * scale:
            raise DomainError(
                "profile grid starts at y=0 but g(0) != 0; g/y is undefined there"
            )
        ratio = np.empty_like(values)
        ratio[1:] = values[1:] / grid[1:]
        # limit of g/y at 0 is g'(0) when g(0) = 0
        ratio[0] = _fd_weights(0.0, grid[:5], 1) @ values[:5]
    else:
        ratio = values / grid
    out = _derivative_on_grid(grid, ratio) / (2.0 * math.pi)
    return RadialProfile(grid.copy(), out)


def frac_derivative(
    g: RadialProfile, nu, spec: QuadratureSpec = DEFAULT_SPEC
) -> RadialProfile:
    """Fractional derivative of order ``nu``: ``D_1`` applied ceil(nu) times
    after the bridging integral of order ``ceil(nu) - nu``.

    Order zero is the identity, and for integer orders the bridging
    integral drops out.
    """
    order = _as_order(nu)
    if order.nu == 0.0:
        grid = np.asarray(g.grid, dtype=float)
        return RadialProfile(grid.copy(), np.asarray(g.values, dtype=float).copy())
    k = order.ceiling
    current = g
    if k > order.nu:
        current = frac_integral(current, k - order.nu, spec)
    for _ in range(k):
        current = frac_d1(current)
    return current


def _graded_edges(length: float, spec: QuadratureSpec, scale: float) -> np.ndarray:
    """Panel edges on [0, length], geometrically refined toward the right end."""
    n = max(1, math.ceil(spec.panels * length))
    base = np.linspace(0.0, length, n + 1)
    edges = list(base[:-1])
    d = base[-1] - base[-2]
    while d > scale:
        d *= 0.5
        edges.append(length - d)
    edges.append(length)
    return np.asarray(edges)


def op_v(g: AngularProfile, spec: QuadratureSpec = DEFAULT_SPEC) -> AngularProfile:
    """The angular forward operator

        ``V[g](beta) = integral_0^beta 2 sin(beta) g(theta)
                       / sqrt(sin^2 beta - sin^2 theta) dtheta``.

    The substitution ``sin(theta) = sin(beta) sin(u)`` removes the endpoint
    singularity; the remaining integral over ``u in [0, pi/2]`` is done on
    panels graded toward ``u = pi/2``, where the integrand still peaks with
    width ``~cos(beta)``.
    """
    interp = g.interpolator()
    grid = np.asarray(g.grid, dtype=float)
    out = np.empty_like(grid)
    for i, beta in enumerate(grid):
        if not 0.0 < beta < _HALF_PI:
            raise DomainError(f"op_v angle must lie strictly in (0, pi/2), got {beta}")
        k = math.sin(beta)
        edges = _graded_edges(_HALF_PI, spec, max(0.25 * math.cos(beta), 1e-10))
        u, w = _panel_rule(edges, spec.nodes_per_panel)
        ksin = k * np.sin(u)
        theta = np.arcsin(ksin)
        out[i] = 2.0 * k * float(w @ (interp(theta) / np.sqrt(1.0 - ksin * ksin)))
    return AngularProfile(grid.copy(), out)


def op_w(g: AngularProfile, spec: QuadratureSpec = DEFAULT_SPEC) -> AngularProfile:
    """Inverse of :func:`op_v` via the substitution factorization.

    Writing ``Q[h](beta) = h(sin beta)`` and ``K[h](beta) = cos(beta) *
    h(sin beta)``, the inverse is ``K`` after a half-order fractional
    derivative after ``Q^{-1}``; the sampled angular grid maps one-to-one
    onto the radial grid ``sin(beta)``, so no resampling is needed.  This
    reuses the validated radial machinery instead of differentiating the
    original singular integral through its moving endpoint.
    """
    grid = np.asarray(g.grid, dtype=float)
    radial = RadialProfile(np.sin(grid), np.asarray(g.values, dtype=float).copy())
    deriv = frac_derivative(radial, 0.5, spec)
    return AngularProfile(grid.copy(), np.cos(grid) * deriv.values)
