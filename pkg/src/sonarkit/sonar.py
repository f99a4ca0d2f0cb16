"""Forward sonar transform: integrals over spheres centered on the floor.

In dimension two the transform integrates a phantom over the upper
semicircle of radius ``y`` centered at ``(x, 0)`` with arc-length measure::

    S[f](x, y) = int_0^pi f(x + y*cos(phi), y*sin(phi)) * y dphi

and in dimension three over the upper hemisphere of the sphere of radius
``y`` centered at ``(x, 0)``, with the spherical area element
``y^2 * sin(colatitude)``.

Circles and hemispheres are clipped against the support bounds of each
phantom term separately before any quadrature node is placed, which keeps
far-field evaluations (very large tangent spheres) as cheap as near-field
ones.  Integrating term by term also makes the transform exactly linear in
the phantom: the multi-bump value is the same floating-point sum as the
single-bump values.  The batch evaluators share one vectorized term
evaluation across thousands of spheres; they are what downstream curve
integrals are built on.

Everything here is pure and deterministic; batch results do not depend on
the order of the input samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .geometry import circle_box_windows, circle_box_windows_batch, hemisphere_box_window
from .phantoms import Phantom
from .quadrature import DEFAULT_SPEC, DomainError, QuadratureSpec, _gauss_legendre

__all__ = [
    "SonarSample",
    "sonar_2d",
    "sonar_2d_batch",
    "sonar_3d",
    "sonar_3d_batch",
    "sonar_grid",
    "format_sonar_table",
    "parse_sonar_table",
    "save_sonar_table",
    "load_sonar_table",
]

# cap on quadrature points held in memory at once by the batch paths
_CHUNK_NODE_BUDGET = 4_000_000


@dataclass(frozen=True)
class SonarSample:
    """One (center, radius, value) triple of the transform.

    ``center`` lives on the floor (R^{n-1}), ``radius`` is the sphere
    radius, strictly positive.
    """

    center: NDArray[np.float64]
    radius: float
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "center", np.atleast_1d(np.asarray(self.center, dtype=float))
        )
        if not self.radius > 0:
            raise DomainError(f"sonar sample radius must be positive, got {self.radius}")


def _term_box_2d(term) -> tuple[float, float, float, float]:
    c, reach = term.center, term.reach
    return (
        float(c[0] - reach),
        float(c[0] + reach),
        max(float(c[1] - reach), 0.0),
        float(c[1] + reach),
    )


def sonar_2d(f: Phantom, x: float, y: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Arc integral of a 2-D phantom over the semicircle of radius ``y`` at ``(x, 0)``.

    Args:
        f: phantom of dimension 2.
        x: center abscissa on the floor.
        y: circle radius, strictly positive.
        spec: quadrature controls; panel count scales with clipped arc length.

    Raises:
        DomainError: if ``y <= 0``.
        ValueError: if the phantom is not 2-dimensional.
    """
    if f.dimension != 2:
        raise ValueError(f"sonar_2d needs a 2-D phantom, got dimension {f.dimension}")
    if not y > 0:
        raise DomainError(f"circle radius must be positive, got y={y}")
    t, w = _gauss_legendre(spec.nodes_per_panel)
    total = 0.0
    for term in f.terms:
        for a, b in circle_box_windows(x, y, _term_box_2d(term)):
            n_panels = max(1, math.ceil(spec.panels * y * (b - a)))
            edges = np.linspace(a, b, n_panels + 1)
            mid = 0.5 * (edges[1:] + edges[:-1])
            half = 0.5 * (edges[1:] - edges[:-1])
            phi = (mid[:, None] + half[:, None] * t[None, :]).ravel()
            wq = (half[:, None] * w[None, :]).ravel()
            pts = np.stack([x + y * np.cos(phi), y * np.sin(phi)], axis=-1)
            total += y * float(wq @ term.value(pts))
    return total


def sonar_2d_batch(
    f: Phantom,
    xs: NDArray[np.float64],
    ys: NDArray[np.float64],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> NDArray[np.float64]:
    """Vectorized :func:`sonar_2d` over many (x, y) samples at once.

    One phantom evaluation is shared by all circles of a chunk, which is
    10-100x faster than the scalar loop for large batches.  Output order
    matches input order; results agree with the scalar path to roundoff
    (same nodes, different summation order).

    Raises:
        DomainError: if any radius is nonpositive (the message names the
            first offending index).
    """
    if f.dimension != 2:
        raise ValueError(f"sonar_2d_batch needs a 2-D phantom, got dimension {f.dimension}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    bad = np.flatnonzero(~(ys > 0))
    if bad.size:
        raise DomainError(
            f"circle radius must be positive, got y={ys[bad[0]]} at index {bad[0]}"
        )
    out = np.zeros(xs.shape, dtype=float)
    if xs.size == 0:
        return out

    nodes_per_panel = spec.nodes_per_panel
    t, w = _gauss_legendre(nodes_per_panel)

    for term in f.terms:
        wlo, whi = circle_box_windows_batch(xs, ys, _term_box_2d(term))  # (2, m)
        active = (whi - wlo) > 0
        if not np.any(active):
            continue
        # flatten the (window, sample) pairs that actually carry arc
        owner = np.broadcast_to(np.arange(xs.size), wlo.shape)[active]
        a = wlo[active]
        b = whi[active]
        arc = ys[owner] * (b - a)
        n_panels = np.maximum(1, np.ceil(spec.panels * arc)).astype(np.int64)

        # chunk windows so one chunk's quadrature nodes stay within budget
        nodes_per_window = n_panels * nodes_per_panel
        splits = np.searchsorted(
            np.cumsum(nodes_per_window),
            np.arange(_CHUNK_NODE_BUDGET, int(nodes_per_window.sum()), _CHUNK_NODE_BUDGET),
            side="left",
        )
        starts = [0] + list(splits)
        stops = list(splits) + [len(nodes_per_window)]

        for lo_i, hi_i in zip(starts, stops):
            if hi_i <= lo_i:
                continue
            P = n_panels[lo_i:hi_i]
            win_a = a[lo_i:hi_i]
            win_b = b[lo_i:hi_i]
            win_owner = owner[lo_i:hi_i]
            total_panels = int(P.sum())
            panel_win = np.repeat(np.arange(P.size), P)
            offsets = np.concatenate(([0], np.cumsum(P)))[:-1]
            idx_in_win = np.arange(total_panels) - np.repeat(offsets, P)
            h = ((win_b - win_a) / P)[panel_win]
            centers = win_a[panel_win] + (idx_in_win + 0.5) * h
            phi = centers[:, None] + 0.5 * h[:, None] * t[None, :]
            wq = 0.5 * h[:, None] * w[None, :]
            Y = ys[win_owner][panel_win]
            X = xs[win_owner][panel_win]
            pts = np.stack(
                [X[:, None] + Y[:, None] * np.cos(phi), Y[:, None] * np.sin(phi)],
                axis=-1,
            )
            vals = term.value(pts)
            contrib = Y * np.sum(wq * vals, axis=1)
            np.add.at(out, win_owner[panel_win], contrib)
    return out


def sonar_3d(
    f: Phantom, x: NDArray[np.float64], y: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Area integral of a 3-D phantom over the upper hemisphere at ``(x, 0)``.

    The hemisphere of radius ``y`` centered at ``(x1, x2, 0)`` is
    parameterized by colatitude ``psi`` (height ``y*cos(psi)``) and
    longitude ``lam``; the integrand carries the area element
    ``y**2 * sin(psi)``.

    Raises:
        DomainError: if ``y <= 0``.
    """
    if f.dimension != 3:
        raise ValueError(f"sonar_3d needs a 3-D phantom, got dimension {f.dimension}")
    if not y > 0:
        raise DomainError(f"sphere radius must be positive, got y={y}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != 2:
        raise ValueError("sonar_3d centers live on the floor plane (two coordinates)")
    total = 0.0
    for term in f.terms:
        box_lo = term.center - term.reach
        box_hi = term.center + term.reach
        box_lo[2] = max(box_lo[2], 0.0)
        window = hemisphere_box_window(x, y, box_lo, box_hi)
        if window is None:
            continue
        psi_lo, psi_hi, lam_lo, lam_hi = window
        n_psi = max(1, math.ceil(spec.panels * y * (psi_hi - psi_lo)))
        n_lam = max(1, math.ceil(spec.panels * y * math.sin(psi_hi) * (lam_hi - lam_lo)))
        psi, w_psi = _panel_nodes(psi_lo, psi_hi, n_psi, spec.nodes_per_panel)
        lam, w_lam = _panel_nodes(lam_lo, lam_hi, n_lam, spec.nodes_per_panel)
        sin_psi = np.sin(psi)
        pts = np.empty((psi.size, lam.size, 3))
        pts[..., 0] = x[0] + y * sin_psi[:, None] * np.cos(lam)[None, :]
        pts[..., 1] = x[1] + y * sin_psi[:, None] * np.sin(lam)[None, :]
        pts[..., 2] = y * np.cos(psi)[:, None]
        vals = term.value(pts)
        inner = vals @ w_lam
        total += float(y * y * ((w_psi * sin_psi) @ inner))
    return total


def _panel_nodes(a: float, b: float, n_panels: int, nodes_per_panel: int):
    t, w = _gauss_legendre(nodes_per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def sonar_3d_batch(
    f: Phantom,
    xs: NDArray[np.float64],
    ys: NDArray[np.float64],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> NDArray[np.float64]:
    """Vectorized :func:`sonar_3d` over many (center, radius) samples.

    Samples are bucketed by their clipped panel counts so each bucket runs
    as one rectangular tensor quadrature with a single phantom evaluation.
    """
    if f.dimension != 3:
        raise ValueError(f"sonar_3d_batch needs a 3-D phantom, got dimension {f.dimension}")
    xs = np.asarray(xs, dtype=float)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if xs.ndim != 2 or xs.shape[1] != 2 or xs.shape[0] != ys.size:
        raise ValueError("xs must have shape (m, 2) matching ys of shape (m,)")
    bad = np.flatnonzero(~(ys > 0))
    if bad.size:
        raise DomainError(
            f"sphere radius must be positive, got y={ys[bad[0]]} at index {bad[0]}"
        )
    out = np.zeros(ys.shape, dtype=float)
    K = spec.nodes_per_panel
    t, w = _gauss_legendre(K)

    for term in f.terms:
        box_lo = term.center - term.reach
        box_hi = term.center + term.reach
        box_lo[2] = max(box_lo[2], 0.0)

        buckets: dict[tuple[int, int], list[tuple[int, tuple[float, float, float, float]]]] = {}
        for i in range(ys.size):
            window = hemisphere_box_window(xs[i], float(ys[i]), box_lo, box_hi)
            if window is None:
                continue
            psi_lo, psi_hi, lam_lo, lam_hi = window
            y = float(ys[i])
            n_psi = max(1, math.ceil(spec.panels * y * (psi_hi - psi_lo)))
            n_lam = max(
                1, math.ceil(spec.panels * y * math.sin(psi_hi) * (lam_hi - lam_lo))
            )
            buckets.setdefault((n_psi, n_lam), []).append((i, window))

        for (n_psi, n_lam), members in buckets.items():
            idx = np.array([m[0] for m in members])
            wins = np.array([m[1] for m in members])  # (g, 4)
            g = idx.size
            y = ys[idx]

            def axis_nodes(a_vals, b_vals, n_panels):
                # (g, n_panels*K) nodes and weights on [a, b] per sample
                edges = a_vals[:, None] + (b_vals - a_vals)[:, None] * np.linspace(
                    0.0, 1.0, n_panels + 1
                )
                mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
                half = 0.5 * (edges[:, 1:] - edges[:, :-1])
                nodes = mid[:, :, None] + half[:, :, None] * t[None, None, :]
                weights = half[:, :, None] * w[None, None, :]
                return nodes.reshape(g, -1), weights.reshape(g, -1)

            psi, w_psi = axis_nodes(wins[:, 0], wins[:, 1], n_psi)
            lam, w_lam = axis_nodes(wins[:, 2], wins[:, 3], n_lam)
            sin_psi = np.sin(psi)
            pts = np.empty((g, psi.shape[1], lam.shape[1], 3))
            pts[..., 0] = (
                xs[idx][:, 0, None, None]
                + y[:, None, None] * sin_psi[:, :, None] * np.cos(lam)[:, None, :]
            )
            pts[..., 1] = (
                xs[idx][:, 1, None, None]
                + y[:, None, None] * sin_psi[:, :, None] * np.sin(lam)[:, None, :]
            )
            pts[..., 2] = y[:, None, None] * np.cos(psi)[:, :, None]
            vals = term.value(pts)
            inner = np.einsum("gpl,gl->gp", vals, w_lam)
            out[idx] += y * y * np.einsum("gp,gp->g", inner, w_psi * sin_psi)
    return out


def sonar_grid(
    f: Phantom,
    centers,
    radii,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> list[SonarSample]:
    """Dense transform table over a center grid x radius grid, center-major.

    ``centers`` is a 1-D array of abscissas (n=2) or an (m, 2) array of
    floor points (n=3); ``radii`` is a 1-D positive array.  Row order is
    center-major: all radii of the first center, then the second, and so
    on.  Errors from individual samples are re-raised with the grid indices
    attached.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    bad = np.flatnonzero(~(radii > 0))
    if bad.size:
        raise DomainError(
            f"radius grid must be positive, got {radii[bad[0]]} at radius index {bad[0]}"
        )
    centers = np.asarray(centers, dtype=float)
    if f.dimension == 2:
        centers = np.atleast_1d(centers)
        if centers.ndim != 1:
            raise ValueError("2-D phantoms take a 1-D grid of center abscissas")
        xs = np.repeat(centers, radii.size)
        ys = np.tile(radii, centers.size)
        try:
            values = sonar_2d_batch(f, xs, ys, spec)
        except DomainError as exc:
            raise DomainError(f"sonar grid evaluation failed: {exc}") from exc
        return [
            SonarSample(np.array([xs[k]]), float(ys[k]), float(values[k]))
            for k in range(xs.size)
        ]
    if centers.ndim != 2 or centers.shape[1] != 2:
        raise ValueError("3-D phantoms take an (m, 2) grid of floor centers")
    xs = np.repeat(centers, radii.size, axis=0)
    ys = np.tile(radii, centers.shape[0])
    try:
        values = sonar_3d_batch(f, xs, ys, spec)
    except DomainError as exc:
        raise DomainError(f"sonar grid evaluation failed: {exc}") from exc
    return [
        SonarSample(xs[k], float(ys[k]), float(values[k])) for k in range(ys.size)
    ]


def format_sonar_table(samples: list[SonarSample], dim: int) -> str:
    """Serialize samples as the plain-text table: ``dim n`` then ``x... y value`` rows."""
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    lines = [f"dim {dim}"]
    for s in samples:
        if s.center.size != dim - 1:
            raise ValueError(
                f"sample center has {s.center.size} coordinates, expected {dim - 1}"
            )
        coords = " ".join("%.17g" % c for c in s.center)
        lines.append(f"{coords} {'%.17g' % s.radius} {'%.17g' % s.value}")
    return "\n".join(lines) + "\n"


def parse_sonar_table(text: str) -> tuple[int, list[SonarSample]]:
    """Parse the plain-text sonar table format; errors name the line."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not rows:
        raise ValueError("empty sonar table")
    header_no, header = rows[0]
    fields = header.split()
    if len(fields) != 2 or fields[0] != "dim" or fields[1] not in ("2", "3"):
        raise ValueError(f"line {header_no}: expected header 'dim 2' or 'dim 3'")
    dim = int(fields[1])
    samples = []
    for lineno, ln in rows[1:]:
        parts = ln.split()
        if len(parts) != dim + 1:
            raise ValueError(
                f"line {lineno}: expected {dim + 1} columns (center..., radius, value)"
            )
        try:
            nums = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric entry") from exc
        try:
            samples.append(SonarSample(np.array(nums[: dim - 1]), nums[dim - 1], nums[dim]))
        except DomainError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    return dim, samples


def save_sonar_table(samples: list[SonarSample], dim: int, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_sonar_table(samples, dim))


def load_sonar_table(path) -> tuple[int, list[SonarSample]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_sonar_table(fh.read())
