"""The Radon transform family and the cylinder transform.

Planes in the upper half-space come in three kinds — horizontal, vertical,
and slanted — and each gets its own integral:

* ``radon_h``: integral of the phantom over a horizontal plane ``y = const``.
* ``radon_v``: integral over a vertical plane, computed by its own code
  path (never as a limiting case of the slanted one).
* ``radon_s``: integral over a slanted plane, parameterized by arc length
  ``s`` along the steepest direction so that the plane measure is genuine
  surface measure.
* ``radon_centerset``: the floor Radon transform acting in the centerset
  variable only — the identity map when the floor is one-dimensional, a
  line integral when it is a plane.
* ``radon_weighted``: a one-sided ray integral of sonar-type data with a
  weight ``sigma(s)``; the reciprocal weight is the one that turns sonar
  data into slanted-plane data.
* ``cylinder_transform``: integral over a half-cylinder whose axis lies on
  the floor.

All phantom-based operations clip against each phantom term's bounding
ball before placing quadrature nodes and integrate term by term, making
them exactly linear in the phantom.  Everything is pure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .geometry import Ball, circle_box_windows, ray_circle_ball_windows
from .phantoms import Phantom
from .quadrature import DEFAULT_SPEC, DomainError, QuadratureSpec, _gauss_legendre
from .sonar import sonar_2d

__all__ = [
    "Horizontal",
    "Vertical",
    "Slanted",
    "HyperplaneParam",
    "Reciprocal",
    "Unit",
    "PowerLaw",
    "WeightSpec",
    "CylinderParam",
    "weight_values",
    "radon_h",
    "radon_centerset",
    "radon_v",
    "radon_s",
    "radon_weighted",
    "cylinder_transform",
    "format_sinogram",
    "parse_sinogram",
    "save_sinogram",
    "load_sinogram",
]


def _unit_vector(omega, what: str = "omega") -> NDArray[np.float64]:
    """Validate and return a floor unit vector as an array of 1 or 2 entries."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if w.ndim != 1 or w.size not in (1, 2):
        raise ValueError(f"{what} must be a scalar (+-1) or a 2-vector, got shape {w.shape}")
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"{what} must be a unit vector, got |{what}| = {norm}")
    return w


def _perp(omega: NDArray[np.float64]) -> NDArray[np.float64]:
    # left-hand perpendicular in the floor plane
    return np.array([-omega[1], omega[0]])


@dataclass(frozen=True)
class Horizontal:
    """Horizontal plane at height ``y > 0``."""

    y: float

    def __post_init__(self) -> None:
        if not self.y > 0:
            raise DomainError(f"horizontal plane height must be positive, got {self.y}")


@dataclass(frozen=True)
class Vertical:
    """Vertical plane {x : omega . x = p} x (0, inf); ``omega`` is a floor unit vector."""

    omega: NDArray[np.float64]
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", _unit_vector(self.omega))


@dataclass(frozen=True)
class Slanted:
    """Slanted plane through the floor line {omega . x = p} at angle ``beta``.

    The plane is swept by arc length ``s``: its points are
    ``x = (p + s*cos(beta))*omega + tau*perp(omega)``, ``y = s*sin(beta)``
    with ``s > 0``.  ``beta`` is strictly inside (0, pi/2); vertical planes
    are a separate type, not the ``beta = pi/2`` member of this family.
    """

    omega: NDArray[np.float64]
    p: float
    beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", _unit_vector(self.omega))
        if not 0.0 < self.beta < 0.5 * math.pi:
            raise DomainError(
                f"slanted angle must lie strictly inside (0, pi/2), got {self.beta}"
            )


HyperplaneParam = Union[Horizontal, Vertical, Slanted]


@dataclass(frozen=True)
class Reciprocal:
    """Ray weight sigma(s) = 1/s."""


@dataclass(frozen=True)
class Unit:
    """Ray weight sigma(s) = 1."""


@dataclass(frozen=True)
class PowerLaw:
    """Ray weight sigma(s) = s**exponent."""

    exponent: float


WeightSpec = Union[Reciprocal, Unit, PowerLaw]


def weight_values(weight: WeightSpec, s: NDArray[np.float64]) -> NDArray[np.float64]:
    """Evaluate the ray weight on positive ray parameters."""
    if isinstance(weight, Reciprocal):
        return 1.0 / s
    if isinstance(weight, Unit):
        return np.ones_like(s)
    if isinstance(weight, PowerLaw):
        return s**weight.exponent
    raise TypeError(f"unknown weight {weight!r}")


def _weight_exponent(weight: WeightSpec) -> float:
    if isinstance(weight, Reciprocal):
        return -1.0
    if isinstance(weight, Unit):
        return 0.0
    if isinstance(weight, PowerLaw):
        return float(weight.exponent)
    raise TypeError(f"unknown weight {weight!r}")


@dataclass(frozen=True)
class CylinderParam:
    """Half-cylinder {(x, y) : (omega.x - p)^2 + y^2 = r^2, y > 0}."""

    omega: NDArray[np.float64]
    p: float
    r: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", _unit_vector(self.omega))
        if not self.r > 0:
            raise DomainError(f"cylinder radius must be positive, got {self.r}")


def _gl_line(a: float, b: float, spec: QuadratureSpec, scale: float = 1.0):
    """Panel Gauss nodes/weights on [a, b]; panel count follows scale*(b-a)."""
    n_panels = max(1, math.ceil(spec.panels * scale * (b - a)))
    t, w = _gauss_legendre(spec.nodes_per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _window_nodes(a: float, b: float, spec: QuadratureSpec):
    """Gauss nodes and plain-measure weights on a ray-parameter window.

    Short windows get panels in proportion to their length.  Long windows
    switch to nodes uniform in log(s) — their panel count follows the
    window's dynamic range instead of its raw extent, which matters for
    nearly-grazing rays whose windows stretch over thousands of units.  A
    window starting at s = 0 keeps a linear head in front of the log tail.
    """
    long_window = b - a >= 4.0
    if a > 0.0 and (long_window or b / a >= 4.0):
        u, wu = _gl_line(math.log(a), math.log(b), spec)
        s = np.exp(u)
        return s, wu * s
    if a <= 0.0 and long_window:
        head = 1.0
        s1, w1 = _gl_line(a, head, spec)
        u, wu = _gl_line(0.0, math.log(b), spec)
        s2 = np.exp(u)
        return np.concatenate([s1, s2]), np.concatenate([w1, wu * s2])
    return _gl_line(a, b, spec)


def radon_h(f: Phantom, y: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integral of the phantom over the horizontal plane at height ``y``.

    Raises:
        DomainError: if ``y <= 0``.
    """
    if not y > 0:
        raise DomainError(f"horizontal plane height must be positive, got y={y}")
    total = 0.0
    for term in f.terms:
        dy = y - float(term.center[-1])
        w_sq = term.reach**2 - dy * dy
        if w_sq <= 0.0:
            continue
        w = math.sqrt(w_sq)
        if f.dimension == 2:
            cx = float(term.center[0])
            nodes, weights = _gl_line(cx - w, cx + w, spec)
            pts = np.stack([nodes, np.full_like(nodes, y)], axis=-1)
            total += float(weights @ term.value(pts))
        else:
            # polar quadrature over the support disk in the plane
            rho, w_rho = _gl_line(0.0, w, spec)
            theta, w_theta = _gl_line(0.0, 2.0 * math.pi, spec, scale=w)
            pts = np.empty((rho.size, theta.size, 3))
            pts[..., 0] = term.center[0] + rho[:, None] * np.cos(theta)[None, :]
            pts[..., 1] = term.center[1] + rho[:, None] * np.sin(theta)[None, :]
            pts[..., 2] = y
            vals = term.value(pts)
            total += float((w_rho * rho) @ vals @ w_theta)
    return total


def radon_centerset(
    g: Callable,
    y: float,
    omega,
    p: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    support_balls: Sequence[Ball] | None = None,
) -> float:
    """Floor Radon transform of ``g(., y)`` over the floor hyperplane (omega, p).

    When the floor is one-dimensional the hyperplane is the single point
    ``p*omega`` and the value is ``g(p*omega, y)`` — the identity map.  When
    the floor is a plane, the value is the line integral of ``g(., y)``
    along ``{x : omega . x = p}``, parameterized as ``p*omega + tau*perp``.

    ``g`` is called as ``g(x, y)`` with ``x`` a floor point (scalar or
    2-vector) or a batch of them with the floor coordinate on the last axis.
    Without ``support_balls`` (balls in (x, y)-space bounding the support of
    ``g``) the line integral is truncated at ``|tau| <= spec.truncation``.
    """
    omega = _unit_vector(omega)
    if omega.size == 1:
        return float(g(p * float(omega[0]), y))
    perp = _perp(omega)
    windows: list[tuple[float, float]] = []
    if support_balls is None:
        windows = [(-spec.truncation, spec.truncation)]
    else:
        for ball in support_balls:
            bx = ball.center[:2]
            dy = y - float(ball.center[2]) if ball.center.size == 3 else 0.0
            h_sq = ball.radius**2 - dy * dy - (p - float(omega @ bx)) ** 2
            if h_sq <= 0.0:
                continue
            tau0 = float(perp @ bx)
            h = math.sqrt(h_sq)
            windows.append((tau0 - h, tau0 + h))
    total = 0.0
    for a, b in windows:
        nodes, weights = _gl_line(a, b, spec)
        pts = p * omega[None, :] + nodes[:, None] * perp[None, :]
        total += float(weights @ np.asarray(g(pts, y), dtype=float))
    return total


def radon_v(f: Phantom, omega, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integral of the phantom over the vertical plane ``{omega . x = p}``.

    In dimension two this is the line integral over the vertical ray
    ``x = p*omega``; in dimension three the surface integral over the
    vertical half-plane, done in polar coordinates around each term.
    """
    omega = _unit_vector(omega)
    total = 0.0
    for term in f.terms:
        if f.dimension == 2:
            x = p * float(omega[0])
            w_sq = term.reach**2 - (x - float(term.center[0])) ** 2
            if w_sq <= 0.0:
                continue
            w = math.sqrt(w_sq)
            cy = float(term.center[1])
            nodes, weights = _gl_line(max(cy - w, 0.0), cy + w, spec)
            pts = np.stack([np.full_like(nodes, x), nodes], axis=-1)
            total += float(weights @ term.value(pts))
        else:
            bx = term.center[:2]
            dist = p - float(omega @ bx)
            w_sq = term.reach**2 - dist * dist
            if w_sq <= 0.0:
                continue
            w = math.sqrt(w_sq)
            perp = _perp(omega)
            tau0 = float(perp @ bx)
            cy = float(term.center[2])
            rho, w_rho = _gl_line(0.0, w, spec)
            theta, w_theta = _gl_line(0.0, 2.0 * math.pi, spec, scale=w)
            tau = tau0 + rho[:, None] * np.cos(theta)[None, :]
            yy = cy + rho[:, None] * np.sin(theta)[None, :]
            pts = np.empty(tau.shape + (3,))
            pts[..., 0] = p * omega[0] + tau * perp[0]
            pts[..., 1] = p * omega[1] + tau * perp[1]
            pts[..., 2] = yy
            vals = np.where(yy > 0.0, term.value(pts), 0.0)
            total += float((w_rho * rho) @ vals @ w_theta)
    return total


def radon_s(f: Phantom, plane: Slanted, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integral of the phantom over a slanted plane, in arc-length measure.

    The plane is swept from its floor line by arc length ``s`` along the
    tilt direction ``(omega*cos(beta), sin(beta))`` and (in dimension
    three) by the axis coordinate ``tau`` along the floor line.
    """
    omega, p, beta = plane.omega, plane.p, plane.beta
    cb, sb = math.cos(beta), math.sin(beta)
    total = 0.0
    for term in f.terms:
        rho = term.reach
        if f.dimension == 2:
            bx, by = float(term.center[0]), float(term.center[1])
            s0 = (omega[0] * bx - p) * cb + by * sb
            dist = (omega[0] * bx - p) * sb - by * cb
            w_sq = rho * rho - dist * dist
            if w_sq <= 0.0:
                continue
            w = math.sqrt(w_sq)
            a, b = max(s0 - w, 0.0), s0 + w
            if b <= a:
                continue
            nodes, weights = _gl_line(a, b, spec)
            pts = np.stack(
                [omega[0] * (p + nodes * cb), nodes * sb], axis=-1
            )
            total += float(weights @ term.value(pts))
        else:
            bx = term.center[:2]
            by = float(term.center[2])
            perp = _perp(omega)
            u = float(omega @ bx) - p
            s0 = u * cb + by * sb
            tau0 = float(perp @ bx)
            dist = u * sb - by * cb
            w_sq = rho * rho - dist * dist
            if w_sq <= 0.0:
                continue
            w = math.sqrt(w_sq)
            a = max(s0 - w, 0.0)
            b = s0 + w
            if b <= a:
                continue
            s_nodes, s_weights = _gl_line(a, b, spec)
            t_nodes, t_weights = _gl_line(tau0 - w, tau0 + w, spec)
            pts = np.empty((s_nodes.size, t_nodes.size, 3))
            pts[..., 0] = (
                (p + s_nodes * cb)[:, None] * omega[0] + t_nodes[None, :] * perp[0]
            )
            pts[..., 1] = (
                (p + s_nodes * cb)[:, None] * omega[1] + t_nodes[None, :] * perp[1]
            )
            pts[..., 2] = (s_nodes * sb)[:, None]
            vals = term.value(pts)
            total += float(s_weights @ vals @ t_weights)
    return total


def radon_weighted(
    g: Callable,
    omega,
    p: float,
    beta: float,
    weight: WeightSpec,
    spec: QuadratureSpec = DEFAULT_SPEC,
    support_balls: Sequence[Ball] | None = None,
) -> float:
    """Weighted one-sided ray integral of sonar-type data.

    Computes ``int_0^inf g(omega, p + s, s*sin(beta)) * sigma(s) ds``: the
    data ``g`` is evaluated at sphere centers marching along the ray
    ``u = p + s`` with radii growing as ``s*sin(beta)``.

    Args:
        g: called as ``g(omega, u, r)`` with 1-D arrays ``u`` (center
            coordinate along ``omega``) and ``r`` (radii); must broadcast.
        omega: passed through to ``g`` untouched (may be None for data that
            ignores direction).
        p: ray foot coordinate.
        beta: ray angle, strictly inside (0, pi/2).
        weight: ray weight ``sigma``.
        spec: quadrature controls.
        support_balls: balls in the ray's (u, y) half-plane bounding where
            the data's spheres can meet the support.  With them the ray is
            clipped to exact parameter windows (long windows integrate in
            log-space); without them the ray is truncated at
            ``s = spec.truncation``.

    A reciprocal-type weight combined with data that does not vanish near
    ``s = 0`` is numerically unreliable; that situation is reported with a
    ``RuntimeWarning``.
    """
    if not 0.0 < beta < 0.5 * math.pi:
        raise DomainError(f"ray angle must lie strictly inside (0, pi/2), got {beta}")
    sb = math.sin(beta)
    exponent = _weight_exponent(weight)

    if support_balls is None:
        windows = [(0.0, spec.truncation)]
    else:
        merged: list[tuple[float, float]] = []
        for ball in support_balls:
            merged.extend(
                ray_circle_ball_windows(
                    p, sb, float(ball.center[0]), float(ball.center[1]), ball.radius
                )
            )
        windows = _merge_intervals(merged)

    total = 0.0
    for a, b in windows:
        if b <= a:
            continue
        if support_balls is None:
            # plain truncated ray: keep uniform panels, whose edges land on
            # unit boundaries and integrate piecewise data exactly
            s, wq = _gl_line(a, b, spec)
        else:
            s, wq = _window_nodes(a, b, spec)
        vals = np.asarray(g(omega, p + s, s * sb), dtype=float)
        if exponent < 0.0 and a <= 1e-12 and vals.size >= 2:
            # data that decays toward s=0 keeps the weighted integrand
            # integrable; data leveling off to a nonzero value does not
            scale = float(np.max(np.abs(vals)))
            v1, v2 = abs(float(vals[0])), abs(float(vals[1]))
            if scale > 0.0 and v1 > 1e-9 * scale and v1 > 0.6 * v2:
                warnings.warn(
                    "reciprocal-type ray weight applied to data that does not vanish "
                    "near s=0; the ray integral may be unreliable",
                    RuntimeWarning,
                    stacklevel=2,
                )
        total += float(wq @ (vals * weight_values(weight, s)))
    return total


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Union of possibly overlapping intervals, sorted."""
    out: list[tuple[float, float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def cylinder_transform(
    f: Phantom, cyl: CylinderParam, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Integral of the phantom over a half-cylinder with axis on the floor.

    The surface ``{(x, y) : (omega.x - p)^2 + y^2 = r^2, y > 0}`` is
    parameterized by the axis coordinate ``tau`` (along ``perp(omega)``)
    and the semicircle angle ``phi``, with area element ``r dtau dphi``.
    In dimension two the cylinder degenerates to the semicircle and the
    value is the sonar transform at ``(p*omega, r)``.
    """
    if not cyl.r > 0:
        raise DomainError(f"cylinder radius must be positive, got {cyl.r}")
    if f.dimension == 2:
        return sonar_2d(f, cyl.p * float(cyl.omega[0]), cyl.r, spec)
    omega, p, r = cyl.omega, cyl.p, cyl.r
    perp = _perp(omega)
    total = 0.0
    for term in f.terms:
        bx = term.center[:2]
        by = float(term.center[2])
        rho = term.reach
        u0 = float(omega @ bx)
        tau0 = float(perp @ bx)
        rho_in = math.hypot(u0 - p, by)
        half_sq = rho * rho - (rho_in - r) ** 2
        if half_sq <= 0.0:
            continue
        half = math.sqrt(half_sq)
        # cross-section angle windows against the term's bounding box
        box = (u0 - rho, u0 + rho, max(by - rho, 0.0), by + rho)
        phi_windows = circle_box_windows(p, r, box)
        if not phi_windows:
            continue
        tau_nodes, tau_weights = _gl_line(tau0 - half, tau0 + half, spec)
        for a, b in phi_windows:
            phi, w_phi = _gl_line(a, b, spec, scale=r)
            u = p + r * np.cos(phi)
            yy = r * np.sin(phi)
            step = max(1, 2_000_000 // phi.size)
            for lo in range(0, tau_nodes.size, step):
                tau_c = tau_nodes[lo : lo + step]
                pts = np.empty((phi.size, tau_c.size, 3))
                pts[..., 0] = u[:, None] * omega[0] + tau_c[None, :] * perp[0]
                pts[..., 1] = u[:, None] * omega[1] + tau_c[None, :] * perp[1]
                pts[..., 2] = yy[:, None]
                vals = term.value(pts)
                total += float(r * (w_phi @ vals @ tau_weights[lo : lo + step]))
    return total


# ---------------------------------------------------------------------------
# sinogram file format: header `dim n`, one row per plane with tags H/V/S


def format_sinogram(
    entries: Sequence[tuple[HyperplaneParam, float]], dim: int
) -> str:
    """Serialize (plane, value) pairs: rows ``H y v`` / ``V w... p v`` / ``S w... p beta v``."""
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    lines = [f"dim {dim}"]
    for plane, value in entries:
        if isinstance(plane, Horizontal):
            lines.append(f"H {'%.17g' % plane.y} {'%.17g' % value}")
        elif isinstance(plane, Vertical):
            w = " ".join("%.17g" % c for c in plane.omega)
            lines.append(f"V {w} {'%.17g' % plane.p} {'%.17g' % value}")
        elif isinstance(plane, Slanted):
            w = " ".join("%.17g" % c for c in plane.omega)
            lines.append(
                f"S {w} {'%.17g' % plane.p} {'%.17g' % plane.beta} {'%.17g' % value}"
            )
        else:
            raise TypeError(f"unknown plane {plane!r}")
    return "\n".join(lines) + "\n"


def parse_sinogram(text: str) -> tuple[int, list[tuple[HyperplaneParam, float]]]:
    """Parse the sinogram text format; errors name the offending line."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not rows:
        raise ValueError("empty sinogram")
    header_no, header = rows[0]
    fields = header.split()
    if len(fields) != 2 or fields[0] != "dim" or fields[1] not in ("2", "3"):
        raise ValueError(f"line {header_no}: expected header 'dim 2' or 'dim 3'")
    dim = int(fields[1])
    m = dim - 1
    out: list[tuple[HyperplaneParam, float]] = []
    for lineno, ln in rows[1:]:
        parts = ln.split()
        tag = parts[0].upper()
        try:
            nums = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric entry") from exc
        try:
            if tag == "H" and len(nums) == 2:
                out.append((Horizontal(nums[0]), nums[1]))
            elif tag == "V" and len(nums) == m + 2:
                out.append((Vertical(np.array(nums[:m]), nums[m]), nums[m + 1]))
            elif tag == "S" and len(nums) == m + 3:
                out.append(
                    (Slanted(np.array(nums[:m]), nums[m], nums[m + 1]), nums[m + 2])
                )
            else:
                raise ValueError(
                    f"line {lineno}: malformed row (tag {tag!r} with {len(nums)} numbers)"
                )
        except (DomainError, ValueError) as exc:
            if str(exc).startswith("line "):
                raise
            raise ValueError(f"line {lineno}: {exc}") from exc
    return dim, out


def save_sinogram(entries, dim: int, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_sinogram(entries, dim))


def load_sinogram(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_sinogram(fh.read())
