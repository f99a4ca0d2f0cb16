"""Closed-form test functions with known support geometry.

A phantom is a finite sum of radially symmetric primitives (truncated
Gaussian bumps, ball indicators, polynomial bumps), each supported strictly
inside the open upper half-space ``y > 0``.  Phantoms are the ground truth
fed to every transform: their support boxes and bounding balls drive the
clipping logic, and their masses and marginals have closed forms used as
test oracles.

Phantoms are immutable after construction and evaluation is pure, so a
single phantom can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .geometry import Ball
from .quadrature import DEFAULT_SPEC, QuadratureSpec, _gauss_legendre

__all__ = [
    "GaussianBump",
    "BallIndicator",
    "PolyBump",
    "Phantom",
    "PhantomFormatError",
    "parse_phantom",
    "format_phantom",
    "load_phantom",
    "save_phantom",
]


def _as_center(center) -> NDArray[np.float64]:
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.size not in (2, 3):
        raise ValueError(f"phantom centers must be 2- or 3-dimensional, got {c.size}")
    return c


def _check_height(center: NDArray[np.float64], reach: float, kind: str) -> None:
    # The support is defined by a strict inequality (r < reach), so the open
    # set where the primitive is nonzero stays inside the open half-space as
    # long as center_y - reach >= 0.
    if center[-1] - reach < 0:
        raise ValueError(
            f"{kind} support leaves the upper half-space: "
            f"center_y={center[-1]} minus reach={reach} is negative"
        )


def _radii_sq(center: NDArray[np.float64], points: NDArray[np.float64]):
    d = points - center
    return np.sum(d * d, axis=-1)


@dataclass(frozen=True, eq=False)
class GaussianBump:
    """Gaussian bump truncated at a cutoff radius.

    Value is ``amplitude * exp(-r^2 / width^2)`` for ``r < cutoff`` and 0
    outside.  Truncation restores literal compact support; at the default
    four-plus widths the jump at the cutoff sphere is below 1e-7.
    """

    center: Sequence[float]
    width: float
    amplitude: float
    cutoff: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _as_center(self.center))
        if not self.width > 0:
            raise ValueError("width must be positive")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        _check_height(self.center, self.cutoff, "GaussianBump")

    @property
    def reach(self) -> float:
        return self.cutoff

    def value(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        r_sq = _radii_sq(self.center, points)
        inside = r_sq < self.cutoff**2
        return np.where(
            inside, self.amplitude * np.exp(-r_sq / self.width**2), 0.0
        )


@dataclass(frozen=True, eq=False)
class BallIndicator:
    """Constant value ``amplitude`` on the open ball, 0 outside.

    Deliberately non-smooth: piecewise-constant phantoms give closed-form
    sphere and plane integrals, at the price of slower quadrature
    convergence, so tests built on them use looser tolerances.
    """

    center: Sequence[float]
    radius: float
    amplitude: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _as_center(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        _check_height(self.center, self.radius, "BallIndicator")

    @property
    def reach(self) -> float:
        return self.radius

    def value(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        r_sq = _radii_sq(self.center, points)
        return np.where(r_sq < self.radius**2, self.amplitude, 0.0)


@dataclass(frozen=True, eq=False)
class PolyBump:
    """Polynomial bump ``amplitude * (1 - r^2/radius^2)**power`` inside its ball.

    ``power >= 2`` guarantees the function is C^1 across the support
    boundary.
    """

    center: Sequence[float]
    radius: float
    amplitude: float
    power: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _as_center(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if int(self.power) != self.power or self.power < 2:
            raise ValueError("power must be an integer >= 2")
        object.__setattr__(self, "power", int(self.power))
        _check_height(self.center, self.radius, "PolyBump")

    @property
    def reach(self) -> float:
        return self.radius

    def value(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        r_sq = _radii_sq(self.center, points) / self.radius**2
        inside = r_sq < 1.0
        base = np.where(inside, 1.0 - r_sq, 0.0)
        return self.amplitude * base**self.power


Primitive = Union[GaussianBump, BallIndicator, PolyBump]


@dataclass(frozen=True, eq=False)
class Phantom:
    """A finite sum of primitives in dimension 2 or 3.

    Args:
        terms: the primitives; all centers must share one dimension.
        dimension: optional explicit dimension check (2 or 3).

    Evaluation is exactly zero outside the union of the primitive supports
    and exactly zero on and below the boundary ``y = 0``.
    """

    terms: tuple[Primitive, ...]
    dimension: int = 0

    def __init__(self, terms: Iterable[Primitive], dimension: int | None = None):
        terms = tuple(terms)
        if not terms:
            raise ValueError("phantom needs at least one primitive")
        dims = {t.center.size for t in terms}
        if len(dims) > 1:
            raise ValueError(f"primitives mix dimensions: {sorted(dims)}")
        n = dims.pop()
        if dimension is not None and dimension != n:
            raise ValueError(f"declared dimension {dimension} != primitive dimension {n}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dimension", n)

    def eval(self, points) -> NDArray[np.float64] | float:
        """Evaluate at one point of shape ``(n,)`` or an array ``(..., n)``.

        Raises:
            ValueError: if the trailing axis does not match the dimension.
        """
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        if pts.shape[-1] != self.dimension:
            raise ValueError(
                f"points have dimension {pts.shape[-1]}, phantom has {self.dimension}"
            )
        total = self.terms[0].value(pts)
        for term in self.terms[1:]:
            total = total + term.value(pts)
        total = np.where(pts[..., -1] > 0.0, total, 0.0)
        return float(total) if scalar else total

    def support_bounds(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Smallest axis-aligned box containing every primitive's support."""
        lows = np.stack([t.center - t.reach for t in self.terms])
        highs = np.stack([t.center + t.reach for t in self.terms])
        return lows.min(axis=0), highs.max(axis=0)

    def support_balls(self) -> list[Ball]:
        """Bounding ball of each primitive, for curve/ray clipping."""
        return [Ball(t.center, t.reach) for t in self.terms]

    def support_radius(self) -> float:
        """Radius of a ball at the origin containing the whole support."""
        return max(
            float(np.linalg.norm(t.center) + t.reach) for t in self.terms
        )

    def mass(self, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        """Total integral over R^n by tensor quadrature on the support box."""
        lo, hi = self.support_bounds()
        axes = []
        weights = []
        for a, b in zip(lo, hi):
            n_panels = max(1, math.ceil(spec.panels * (b - a)))
            edges = np.linspace(a, b, n_panels + 1)
            x, w = _gauss_legendre(spec.nodes_per_panel)
            mid = 0.5 * (edges[1:] + edges[:-1])
            half = 0.5 * (edges[1:] - edges[:-1])
            axes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
            weights.append((half[:, None] * w[None, :]).ravel())
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack(grids, axis=-1)
        vals = self.eval(pts)
        wtot = weights[0]
        for w in weights[1:]:
            wtot = np.multiply.outer(wtot, w)
        return float(np.sum(wtot * vals))


class PhantomFormatError(ValueError):
    """Malformed phantom description text; message carries the line number."""


_REQUIRED_KEYS = {
    "gaussian": {"center", "width", "amplitude", "cutoff"},
    "ball": {"center", "radius", "amplitude"},
    "polybump": {"center", "radius", "amplitude", "power"},
}


def parse_phantom(text: str) -> Phantom:
    """Parse the plain-text phantom description format.

    The format is line-based key/value:  a ``dim n`` header, then one block
    per primitive starting with ``kind gaussian|ball|polybump`` followed by
    its fields (``center`` takes n numbers).  ``#`` starts a comment.

    Raises:
        PhantomFormatError: naming the offending line and field.
    """
    dim: int | None = None
    blocks: list[tuple[int, dict[str, list[str]]]] = []
    current: dict[str, list[str]] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        key, args = fields[0].lower(), fields[1:]
        if key == "dim":
            if dim is not None:
                raise PhantomFormatError(f"line {lineno}: duplicate 'dim' header")
            if len(args) != 1 or args[0] not in ("2", "3"):
                raise PhantomFormatError(
                    f"line {lineno}: 'dim' must be 2 or 3, got {args!r}"
                )
            dim = int(args[0])
        elif key == "kind":
            if dim is None:
                raise PhantomFormatError(
                    f"line {lineno}: 'kind' before the 'dim' header"
                )
            if len(args) != 1 or args[0].lower() not in _REQUIRED_KEYS:
                raise PhantomFormatError(
                    f"line {lineno}: unknown primitive kind {args!r}"
                )
            current = {"kind": [args[0].lower()], "_line": [str(lineno)]}
            blocks.append((lineno, current))
        else:
            if current is None:
                raise PhantomFormatError(
                    f"line {lineno}: field {key!r} outside any 'kind' block"
                )
            if key in current:
                raise PhantomFormatError(f"line {lineno}: duplicate field {key!r}")
            current[key] = args
    if dim is None:
        raise PhantomFormatError("missing 'dim' header")
    if not blocks:
        raise PhantomFormatError("no primitives defined")

    def number(block_line: int, block, key: str) -> float:
        vals = block.get(key)
        if vals is None or len(vals) != 1:
            raise PhantomFormatError(
                f"line {block_line}: field {key!r} needs exactly one number"
            )
        try:
            return float(vals[0])
        except ValueError as exc:
            raise PhantomFormatError(
                f"line {block_line}: field {key!r} is not a number: {vals[0]!r}"
            ) from exc

    terms: list[Primitive] = []
    for block_line, block in blocks:
        kind = block["kind"][0]
        missing = _REQUIRED_KEYS[kind] - set(block)
        if missing:
            raise PhantomFormatError(
                f"line {block_line}: {kind} block missing fields {sorted(missing)}"
            )
        extra = set(block) - _REQUIRED_KEYS[kind] - {"kind", "_line"}
        if extra:
            raise PhantomFormatError(
                f"line {block_line}: {kind} block has unknown fields {sorted(extra)}"
            )
        center_args = block["center"]
        if len(center_args) != dim:
            raise PhantomFormatError(
                f"line {block_line}: 'center' needs {dim} numbers, got {len(center_args)}"
            )
        try:
            center = [float(v) for v in center_args]
        except ValueError as exc:
            raise PhantomFormatError(
                f"line {block_line}: 'center' is not numeric: {center_args!r}"
            ) from exc
        try:
            if kind == "gaussian":
                terms.append(
                    GaussianBump(
                        center,
                        width=number(block_line, block, "width"),
                        amplitude=number(block_line, block, "amplitude"),
                        cutoff=number(block_line, block, "cutoff"),
                    )
                )
            elif kind == "ball":
                terms.append(
                    BallIndicator(
                        center,
                        radius=number(block_line, block, "radius"),
                        amplitude=number(block_line, block, "amplitude"),
                    )
                )
            else:
                terms.append(
                    PolyBump(
                        center,
                        radius=number(block_line, block, "radius"),
                        amplitude=number(block_line, block, "amplitude"),
                        power=int(number(block_line, block, "power")),
                    )
                )
        except PhantomFormatError:
            raise
        except ValueError as exc:
            raise PhantomFormatError(f"line {block_line}: {exc}") from exc
    return Phantom(terms)


def format_phantom(phantom: Phantom) -> str:
    """Serialize a phantom back to the plain-text description format."""
    lines = [f"dim {phantom.dimension}"]
    for term in phantom.terms:
        lines.append("")
        center = " ".join(repr(float(c)) for c in term.center)
        if isinstance(term, GaussianBump):
            lines.append("kind gaussian")
            lines.append(f"center {center}")
            lines.append(f"width {term.width!r}")
            lines.append(f"amplitude {term.amplitude!r}")
            lines.append(f"cutoff {term.cutoff!r}")
        elif isinstance(term, BallIndicator):
            lines.append("kind ball")
            lines.append(f"center {center}")
            lines.append(f"radius {term.radius!r}")
            lines.append(f"amplitude {term.amplitude!r}")
        else:
            lines.append("kind polybump")
            lines.append(f"center {center}")
            lines.append(f"radius {term.radius!r}")
            lines.append(f"amplitude {term.amplitude!r}")
            lines.append(f"power {term.power}")
    return "\n".join(lines) + "\n"


def load_phantom(path) -> Phantom:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_phantom(fh.read())


def save_phantom(phantom: Phantom, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_phantom(phantom))
