"""Support-clipping geometry shared by the transforms.

Every transform in this package integrates a compactly supported function
over a sphere, plane, ray, or cylinder.  Restricting quadrature nodes to the
part of the domain that can actually meet the support is what keeps
far-field evaluations (huge tangent spheres, long rays) cheap, so the clipping
primitives live here:

* interval-set algebra on finite unions of closed intervals,
* parameter windows of circles/hemispheres clipped against boxes,
* exact ray windows where an expanding circle meets a ball (two quadratics),
* segment-versus-box clipping for plane and line integrals.

All functions are pure and operate on plain floats/ndarrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Ball",
    "intersect_intervals",
    "subtract_interval",
    "circle_box_windows",
    "circle_box_windows_batch",
    "hemisphere_box_window",
    "ray_circle_ball_windows",
    "line_sphere_ball_windows",
    "clip_segment_to_box",
]

Intervals = list[tuple[float, float]]


@dataclass(frozen=True)
class Ball:
    """Closed ball with ``center`` in R^n; used as a support bound."""

    center: NDArray[np.float64]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


def intersect_intervals(a: Intervals, b: Intervals) -> Intervals:
    """Intersection of two finite unions of closed intervals (both sorted)."""
    out: Intervals = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi > lo:
                out.append((lo, hi))
    out.sort()
    return out


def subtract_interval(a: Intervals, cut: tuple[float, float]) -> Intervals:
    """Remove the open interval ``cut`` from a union of intervals."""
    lo_c, hi_c = cut
    if hi_c <= lo_c:
        return list(a)
    out: Intervals = []
    for lo, hi in a:
        if hi_c <= lo or hi <= lo_c:
            out.append((lo, hi))
            continue
        if lo < lo_c:
            out.append((lo, min(hi, lo_c)))
        if hi > hi_c:
            out.append((max(lo, hi_c), hi))
    return [(lo, hi) for lo, hi in out if hi > lo]


def circle_box_windows(
    cx: float, r: float, box: tuple[float, float, float, float]
) -> Intervals:
    """Angle windows where the upper semicircle meets an axis-aligned box.

    The semicircle is ``(cx + r*cos(phi), r*sin(phi))`` for ``phi`` in
    ``[0, pi]``; ``box`` is ``(x0, x1, y0, y1)`` with ``y0 >= 0``.  Returns at
    most two disjoint angle intervals.
    """
    x0, x1, y0, y1 = box
    if r <= 0 or x1 < x0 or y1 < max(y0, 0.0):
        return []
    # cos(phi) in [(x0-cx)/r, (x1-cx)/r]; cos is decreasing on [0, pi]
    c_lo = (x0 - cx) / r
    c_hi = (x1 - cx) / r
    if c_lo > 1.0 or c_hi < -1.0:
        return []
    phi_lo = math.acos(min(c_hi, 1.0))
    phi_hi = math.acos(max(c_lo, -1.0))
    window: Intervals = [(phi_lo, phi_hi)]
    # sin(phi) >= y0/r keeps the middle band
    s_lo = max(y0, 0.0) / r
    if s_lo >= 1.0:
        return []
    if s_lo > 0.0:
        a = math.asin(min(s_lo, 1.0))
        window = intersect_intervals(window, [(a, math.pi - a)])
    # sin(phi) <= y1/r removes the top band
    s_hi = y1 / r
    if s_hi < 1.0:
        if s_hi <= 0.0:
            return []
        b = math.asin(s_hi)
        window = subtract_interval(window, (b, math.pi - b))
    return window


def circle_box_windows_batch(
    cx: NDArray[np.float64],
    r: NDArray[np.float64],
    box: tuple[float, float, float, float],
):
    """Vectorized :func:`circle_box_windows` for many circles at once.

    Returns ``(lo, hi)`` arrays of shape ``(2, k)``: up to two angle windows
    per circle, empty windows marked by ``hi <= lo``.
    """
    x0, x1, y0, y1 = box
    cx = np.asarray(cx, dtype=float)
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        c_lo = np.clip((x0 - cx) / r, -1.0, 1.0)
        c_hi = np.clip((x1 - cx) / r, -1.0, 1.0)
        phi_lo = np.arccos(c_hi)
        phi_hi = np.arccos(c_lo)
        feasible = ((x0 - cx) / r <= 1.0) & ((x1 - cx) / r >= -1.0) & (r > 0)

        s_lo = np.clip(max(y0, 0.0) / r, 0.0, None)
        lower_ok = s_lo < 1.0
        a = np.arcsin(np.clip(s_lo, 0.0, 1.0))
        phi_lo = np.maximum(phi_lo, a)
        phi_hi = np.minimum(phi_hi, math.pi - a)

        s_hi = y1 / r
        cut = s_hi < 1.0
        cut_ok = s_hi > 0.0
        b = np.where(cut & cut_ok, np.arcsin(np.clip(s_hi, 0.0, 1.0)), 0.0)

    feasible &= lower_ok & (cut_ok | ~cut)
    # window 1: [phi_lo, min(phi_hi, b)] when cut, else [phi_lo, phi_hi]
    lo1 = phi_lo
    hi1 = np.where(cut, np.minimum(phi_hi, b), phi_hi)
    # window 2: [max(phi_lo, pi - b), phi_hi] when cut, else empty
    lo2 = np.where(cut, np.maximum(phi_lo, math.pi - b), 0.0)
    hi2 = np.where(cut, phi_hi, 0.0)
    lo = np.stack([lo1, lo2])
    hi = np.stack([hi1, hi2])
    hi = np.where(feasible[None, :], hi, 0.0)
    lo = np.where(feasible[None, :], lo, 1.0)
    return lo, hi


def hemisphere_box_window(
    cx: NDArray[np.float64], r: float, box_lo, box_hi
) -> tuple[float, float, float, float] | None:
    """Colatitude/longitude window of an upper hemisphere against a box.

    The hemisphere is centered at ``(cx, 0)`` in R^3 with radius ``r``,
    parameterized as ``(cx + r*sin(psi)*e(lam), r*cos(psi))`` for colatitude
    ``psi`` in ``[0, pi/2]``.  Returns ``(psi_lo, psi_hi, lam_lo, lam_hi)``
    (a single conservative rectangle, possibly with ``lam`` spanning a full
    turn) or None when the hemisphere cannot meet the box.
    """
    x0, y0 = float(box_lo[0]), float(box_lo[1])
    x1, y1 = float(box_hi[0]), float(box_hi[1])
    z0, z1 = max(float(box_lo[2]), 0.0), float(box_hi[2])
    if z1 <= 0 or r <= 0:
        return None
    c_hi = min(z1 / r, 1.0)
    c_lo = max(z0 / r, 0.0)
    if c_lo >= 1.0:
        return None
    psi_lo = math.acos(c_hi)
    psi_hi = math.acos(c_lo)
    if psi_hi <= psi_lo:
        return None
    # horizontal reach of the clipped cap
    rho_max = r * math.sin(psi_hi)
    px, py = float(cx[0]), float(cx[1])
    dx = max(x0 - px, 0.0, px - x1)
    dy = max(y0 - py, 0.0, py - y1)
    if math.hypot(dx, dy) > rho_max:
        return None
    if x0 <= px <= x1 and y0 <= py <= y1:
        return psi_lo, psi_hi, 0.0, 2.0 * math.pi
    # angular cone from the center to the rectangle's corners
    angles = [
        math.atan2(cy - py, cxn - px)
        for cxn in (x0, x1)
        for cy in (y0, y1)
    ]
    base = angles[0]
    rel = [(a - base + math.pi) % (2.0 * math.pi) - math.pi for a in angles]
    lam_lo = base + min(rel)
    lam_hi = base + max(rel)
    if lam_hi - lam_lo >= math.pi:
        # the rectangle wraps around the center's azimuth range; be safe
        return psi_lo, psi_hi, 0.0, 2.0 * math.pi
    return psi_lo, psi_hi, lam_lo, lam_hi


def _quadratic_leq_zero(a: float, b: float, c: float) -> Intervals:
    """Solution set of ``a*s**2 + b*s + c <= 0`` with ``a > 0``."""
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return []
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1, r2 = q / a, (c / q if q != 0.0 else 0.0)
    if r1 > r2:
        r1, r2 = r2, r1
    return [(r1, r2)]


def ray_circle_ball_windows(
    p: float,
    sin_beta: float,
    ball_u: float,
    ball_y: float,
    rho: float,
    s_min: float = 0.0,
) -> Intervals:
    """Ray-parameter windows where an expanding circle meets a disk.

    Along the ray ``s > 0`` the circle has center ``(p + s, 0)`` and radius
    ``s*sin_beta`` (in the plane spanned by an axis coordinate ``u`` and the
    height ``y``).  The disk has center ``(ball_u, ball_y)`` and radius
    ``rho``.  The circle meets the disk iff ``|d - r| <= rho`` with ``d`` the
    center distance, which splits into two quadratics in ``s``:

        ``QA = d**2 - (r + rho)**2 <= 0``  and  ``d >= r - rho``.

    The second condition is one-sided: when the circle is smaller than the
    disk and lies entirely inside it (``d < rho - r``) the circle still meets
    the disk, so squaring it is only valid where ``r > rho``, i.e. past
    ``s = rho / sin_beta``.  Returns at most two intervals (circle passing
    through the disk, and disk grazing the circle's rim from inside).
    """
    if not 0.0 < sin_beta < 1.0:
        raise ValueError("sin_beta must lie strictly inside (0, 1)")
    a = 1.0 - sin_beta * sin_beta
    du = p - ball_u
    base = du * du + ball_y * ball_y - rho * rho
    qa = _quadratic_leq_zero(a, 2.0 * (du - rho * sin_beta), base)
    if not qa:
        return []
    qb_inside = _quadratic_leq_zero(a, 2.0 * (du + rho * sin_beta), base)
    window = qa
    if qb_inside:
        cut_lo = max(qb_inside[0][0], rho / sin_beta)
        if qb_inside[0][1] > cut_lo:
            window = subtract_interval(window, (cut_lo, qb_inside[0][1]))
    return intersect_intervals(window, [(s_min, math.inf)])


def line_sphere_ball_windows(
    tau0: float, h_sq: float, r: float, rho: float
) -> Intervals:
    """Axis-parameter windows where spheres along a line meet a ball.

    Spheres of fixed radius ``r`` are centered at points of a line whose
    squared distance to the ball center is ``(tau - tau0)**2 + h_sq``;
    the ball has radius ``rho``.  The sphere meets the ball iff its center
    distance ``d`` satisfies ``r - rho <= d <= r + rho``; the lower bound only
    bites when ``r > rho`` (a sphere entirely inside the ball still meets it).
    """
    outer = (r + rho) ** 2 - h_sq
    if outer <= 0.0:
        return []
    half = math.sqrt(outer)
    window: Intervals = [(tau0 - half, tau0 + half)]
    inner = (r - rho) ** 2 - h_sq
    if r > rho and inner > 0.0:
        cut = math.sqrt(inner)
        window = subtract_interval(window, (tau0 - cut, tau0 + cut))
    return window


def clip_segment_to_box(
    origin: NDArray[np.float64],
    direction: NDArray[np.float64],
    box_lo: NDArray[np.float64],
    box_hi: NDArray[np.float64],
    t_lo: float = -math.inf,
    t_hi: float = math.inf,
) -> tuple[float, float] | None:
    """Clip the parameterized line ``origin + t*direction`` against a box.

    Standard slab test.  Returns the parameter interval inside the box
    intersected with ``[t_lo, t_hi]``, or None when empty.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    lo, hi = t_lo, t_hi
    for o, d, b0, b1 in zip(origin, direction, np.asarray(box_lo), np.asarray(box_hi)):
        if abs(d) < 1e-300:
            if o < b0 or o > b1:
                return None
            continue
        t0, t1 = (b0 - o) / d, (b1 - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        lo, hi = max(lo, t0), min(hi, t1)
        if lo >= hi:
            return None
    if lo >= hi:
        return None
    return lo, hi
