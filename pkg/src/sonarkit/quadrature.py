"""Deterministic quadrature primitives used by every transform in the package.

All integrals in this library reduce to four building blocks:

* panel Gauss–Legendre integration of a continuous function on an interval,
* integration of endpoint-singular kernels ``(y**2 - s**2)**exponent`` on
  ``[0, y]``, desingularized by the substitution ``s = y*sin(t)``,
* surface integrals over the unit sphere in dimension 2 or 3,
* extrapolation of a limit ``s -> inf`` from geometrically spaced samples
  under a ``O(1/s)`` error model.

Everything here is a pure function of its arguments: fixed inputs give
bit-identical outputs, and nothing is cached mutably, so all operations are
safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "DomainError",
    "QuadratureSpec",
    "DEFAULT_SPEC",
    "RadialProfile",
    "AngularProfile",
    "LimitEstimate",
    "integrate_1d",
    "integrate_endpoint_singular",
    "endpoint_singular_rule",
    "integrate_unit_sphere",
    "unit_sphere_area",
    "extrapolate_limit",
]

_HALF_PI = 0.5 * math.pi


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation.

    Raised for things like non-positive radii, divergent kernel exponents or
    unsupported dimensions, as opposed to malformed input of the right domain.
    """


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution parameters shared by all quadrature-based operations.

    Parameters
    ----------
    panels:
        Gauss–Legendre panels per unit length of integration interval (or per
        unit of arc length on curved domains).
    nodes_per_panel:
        Nodes of the Gauss–Legendre rule used on each panel.
    truncation:
        Half-width beyond which integrands over unbounded domains are treated
        as zero.  Callers that know a tighter support window use that instead;
        this is the fallback and must strictly exceed the support radius of
        any function it is used with.
    limit_base:
        First abscissa ``s0`` used when realizing a limit ``s -> inf``.
    limit_ratio:
        Geometric ratio between successive limit abscissas (must be > 1).
    limit_steps:
        Number of limit samples taken.
    singular_substitution:
        When True (the default), endpoint-singular kernels are integrated via
        the trigonometric substitution ``s = y*sin(t)``; when False they are
        integrated naively, which is only useful to demonstrate why the
        substitution is the default.
    """

    panels: int = 8
    nodes_per_panel: int = 16
    truncation: float = 8.0
    limit_base: float = 8.0
    limit_ratio: float = 2.0
    limit_steps: int = 4
    singular_substitution: bool = True

    def __post_init__(self) -> None:
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if self.nodes_per_panel < 2:
            raise ValueError("nodes_per_panel must be >= 2")
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if not self.limit_base > 0:
            raise ValueError("limit_base must be positive")
        if not self.limit_ratio > 1:
            raise ValueError("limit_ratio must be > 1")
        if self.limit_steps < 2:
            raise ValueError("limit_steps must be >= 2")

    def refined(self, factor: int = 2) -> "QuadratureSpec":
        """Return a copy with ``factor`` times as many panels per unit."""
        return replace(self, panels=self.panels * factor)


DEFAULT_SPEC = QuadratureSpec()


def _validated_profile(grid, values, kind: str):
    g = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.ndim != 1 or v.ndim != 1:
        raise ValueError(f"{kind} grid and values must be one-dimensional")
    if g.shape != v.shape:
        raise ValueError(f"{kind} grid and values must have equal length")
    if g.size < 2:
        raise ValueError(f"{kind} needs at least two samples")
    if not np.all(np.diff(g) > 0):
        raise ValueError(f"{kind} grid must be strictly increasing")
    return g, v


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of a function of the radial variable ``y >= 0``.

    The grid must be strictly increasing with ``grid[0] >= 0``.  Operators
    that need values between the samples interpolate cubically.
    """

    grid: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        g, v = _validated_profile(self.grid, self.values, "RadialProfile")
        if g[0] < 0:
            raise ValueError("RadialProfile grid must start at y >= 0")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def interpolator(self):
        """Cubic interpolant of the sampled values (scipy ``CubicSpline``)."""
        from scipy.interpolate import CubicSpline

        return CubicSpline(self.grid, self.values)


@dataclass(frozen=True, eq=False)
class AngularProfile:
    """Samples of a function of an angle strictly inside ``(0, pi/2)``."""

    grid: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        g, v = _validated_profile(self.grid, self.values, "AngularProfile")
        if g[0] <= 0 or g[-1] >= _HALF_PI:
            raise ValueError("AngularProfile grid must lie strictly inside (0, pi/2)")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def interpolator(self):
        """Cubic interpolant of the sampled values (scipy ``CubicSpline``)."""
        from scipy.interpolate import CubicSpline

        return CubicSpline(self.grid, self.values)


class LimitEstimate(NamedTuple):
    """Extrapolated limit together with a data-driven uncertainty estimate."""

    value: float
    uncertainty: float


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_rule(edges: NDArray[np.float64], nodes_per_panel: int):
    """Map the reference Gauss–Legendre rule onto each panel between edges."""
    x, w = _gauss_legendre(nodes_per_panel)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _sample(f: Callable, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Evaluate ``f`` at every node, vectorizing when ``f`` allows it."""
    try:
        vals = np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is not None and vals.shape == ():
        vals = np.full(x.shape, float(vals))
    if vals is None or vals.shape != x.shape:
        vals = np.array([float(f(xi)) for xi in x])
    bad = ~np.isfinite(vals)
    if bad.any():
        node = x[int(np.argmax(bad))]
        raise ValueError(f"integrand returned a non-finite value at node {node!r}")
    return vals


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Integrate a continuous function on ``[a, b]`` by panel Gauss–Legendre.

    Parameters
    ----------
    f:
        Integrand; may accept an ndarray of abscissas (preferred) or a scalar.
    a, b:
        Interval endpoints with ``a <= b``.
    spec:
        Resolution parameters; ``ceil(spec.panels * (b - a))`` panels are used.

    Returns
    -------
    float
        The panel Gauss–Legendre approximation of the integral.  The result
        is deterministic for fixed arguments.

    Raises
    ------
    DomainError
        If ``a > b``.
    ValueError
        If the integrand returns a non-finite value at any node; the message
        names the offending node.
    """
    if a > b:
        raise DomainError(f"integration interval is empty: a={a} > b={b}")
    if a == b:
        return 0.0
    n_panels = max(1, math.ceil(spec.panels * (b - a)))
    edges = np.linspace(a, b, n_panels + 1)
    nodes, weights = _panel_rule(edges, spec.nodes_per_panel)
    return float(weights @ _sample(f, nodes))


def endpoint_singular_rule(
    exponent: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Quadrature rule in the substituted variable for endpoint-singular kernels.

    Returns nodes ``t_i`` and weights ``w_i`` on ``[0, pi/2]`` such that

        ``integral_0^y (y**2 - s**2)**exponent * g(s) ds
          ~= y**(2*exponent + 1) * sum_i w_i * g(y * sin(t_i))``

    for any ``y > 0``.  The weights absorb the factor ``cos(t)**(2e+1)``
    produced by the substitution ``s = y*sin(t)``.  When ``2e+1`` is not a
    nonnegative integer the panels are geometrically graded toward
    ``t = pi/2`` and the last analytic sliver of the interval is folded into
    the final weight, so the rule stays accurate for every exponent > -1.

    This is the building block shared by :func:`integrate_endpoint_singular`
    and the fractional-integral operator, which applies one rule to a whole
    grid of upper limits ``y`` at once.
    """
    if exponent <= -1:
        raise DomainError(
            f"kernel exponent {exponent} <= -1 gives a divergent integral"
        )
    alpha = 2.0 * exponent + 1.0
    n_base = max(1, math.ceil(spec.panels * _HALF_PI))
    base = np.linspace(0.0, _HALF_PI, n_base + 1)
    integer_alpha = alpha >= 0 and float(alpha).is_integer()
    if integer_alpha:
        edges = base
        sliver = 0.0
    else:
        # Geometric grading toward the cos-singularity at t = pi/2.  Beyond
        # ~48 halvings the breakpoints are no longer distinguishable from
        # pi/2 in double precision, so the remaining sliver is integrated
        # analytically with g frozen at its edge value (error O(width**2)).
        delta = base[-1] - base[-2]
        levels = int(min(48, max(8, math.ceil(46.0 / (alpha + 1.0)))))
        tail = _HALF_PI - delta * 2.0 ** (-np.arange(1, levels + 1, dtype=float))
        edges = np.concatenate([base[:-1], tail])
        sliver = delta * 2.0 ** (-levels)
    nodes, weights = _panel_rule(edges, spec.nodes_per_panel)
    weights = weights * np.cos(nodes) ** alpha
    if sliver > 0.0:
        # integral of cos(t)**alpha over [pi/2 - sliver, pi/2], first order
        # in the (tiny) sliver width:
        tail_weight = sliver ** (alpha + 1.0) / (alpha + 1.0)
        nodes = np.append(nodes, edges[-1])
        weights = np.append(weights, tail_weight)
    return nodes, weights


def integrate_endpoint_singular(
    g: Callable[[float], float],
    y: float,
    exponent: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Integrate ``(y**2 - s**2)**exponent * g(s)`` for ``s`` in ``[0, y]``.

    Parameters
    ----------
    g:
        Continuous function on ``[0, y]``.
    y:
        Upper endpoint, positive.
    exponent:
        Kernel exponent, any real > -1.  (Values <= -1 make the integral
        divergent.)
    spec:
        Resolution parameters.  With ``spec.singular_substitution`` False the
        kernel is integrated naively on ``[0, y]`` instead of being
        desingularized; expect poor accuracy for negative exponents.

    Returns
    -------
    float

    Raises
    ------
    DomainError
        If ``y <= 0`` or ``exponent <= -1``.
    """
    if y <= 0:
        raise DomainError(f"upper endpoint must be positive, got y={y}")
    if exponent <= -1:
        raise DomainError(
            f"kernel exponent {exponent} <= -1 gives a divergent integral"
        )
    if not spec.singular_substitution:
        yy = y * y
        return integrate_1d(lambda s: (yy - s * s) ** exponent * np.asarray(g(s)), 0.0, y, spec)
    nodes, weights = endpoint_singular_rule(exponent, spec)
    vals = _sample(g, y * np.sin(nodes))
    return float(y ** (2.0 * exponent + 1.0) * (weights @ vals))


def _sphere_points_2d(spec: QuadratureSpec):
    n_panels = max(1, math.ceil(spec.panels * 2.0 * math.pi))
    edges = np.linspace(0.0, 2.0 * math.pi, n_panels + 1)
    theta, w = _panel_rule(edges, spec.nodes_per_panel)
    pts = np.stack([np.cos(theta), np.sin(theta)])
    return pts, w


def _sphere_points_3d(spec: QuadratureSpec):
    n_col = max(1, math.ceil(spec.panels * math.pi))
    n_lon = max(1, math.ceil(spec.panels * 2.0 * math.pi))
    col, w_col = _panel_rule(np.linspace(0.0, math.pi, n_col + 1), spec.nodes_per_panel)
    lon, w_lon = _panel_rule(
        np.linspace(0.0, 2.0 * math.pi, n_lon + 1), spec.nodes_per_panel
    )
    sin_c, cos_c = np.sin(col), np.cos(col)
    x = np.outer(sin_c, np.cos(lon)).ravel()
    y = np.outer(sin_c, np.sin(lon)).ravel()
    z = np.outer(cos_c, np.ones_like(lon)).ravel()
    pts = np.stack([x, y, z])
    weights = np.outer(w_col * sin_c, w_lon).ravel()
    return pts, weights


def _sample_directions(g: Callable, pts: NDArray[np.float64]) -> NDArray[np.float64]:
    try:
        vals = np.asarray(g(pts), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is not None and vals.shape == ():
        vals = np.full(pts.shape[1], float(vals))
    if vals is None or vals.shape != (pts.shape[1],):
        vals = np.array([float(g(pts[:, i])) for i in range(pts.shape[1])])
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(
            f"integrand returned a non-finite value at direction {pts[:, i]!r}"
        )
    return vals


def integrate_unit_sphere(
    g: Callable, n: int, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Surface integral of ``g`` over the unit sphere in dimension ``n``.

    For ``n == 2`` the circle is parameterized by angle; for ``n == 3``
    latitude–longitude coordinates with area element ``sin(colatitude)`` are
    used.  ``g`` receives either an array of shape ``(n, m)`` whose columns
    are unit vectors (preferred, vectorized) or a single vector of shape
    ``(n,)``.

    Raises
    ------
    DomainError
        If ``n`` is not 2 or 3.
    """
    if n == 2:
        pts, w = _sphere_points_2d(spec)
    elif n == 3:
        pts, w = _sphere_points_3d(spec)
    else:
        raise DomainError(f"unsupported dimension n={n}; only 2 and 3 are available")
    return float(w @ _sample_directions(g, pts))


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit sphere in ``R**n``: ``2*pi**(n/2)/gamma(n/2)``."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def extrapolate_limit(
    samples: Sequence[tuple[float, float]],
) -> LimitEstimate:
    """Extrapolate ``lim v(s)`` for ``s -> inf`` under a ``v + c/s`` model.

    Parameters
    ----------
    samples:
        Pairs ``(s_k, v_k)`` with the abscissas increasing (geometrically
        spaced in the intended use).  Only the final two samples enter the
        one-step Richardson extrapolation; earlier samples document the
        approach to the limit.

    Returns
    -------
    LimitEstimate
        ``value`` solves ``v_k = value + c/s_k`` through the last two
        samples (so the result is exact whenever the data follow that model);
        ``uncertainty`` is the discrepancy between the extrapolated value and
        the last raw sample.

    Raises
    ------
    ValueError
        With fewer than two samples.
    """
    pairs = [(float(s), float(v)) for s, v in samples]
    if len(pairs) < 2:
        raise ValueError("extrapolate_limit needs at least two samples")
    (s1, v1), (s2, v2) = pairs[-2], pairs[-1]
    if not (0 < s1 < s2):
        raise ValueError("sample abscissas must be positive and increasing")
    value = (v2 * s2 - v1 * s1) / (s2 - s1)
    return LimitEstimate(value=value, uncertainty=abs(value - v2))
