"""Batch front door: forward transforms, identity suites, reconstruction.

Three subcommands cover the library surface:

* ``forward`` — evaluate one transform on a parameter grid and write a
  plain-text table.
* ``verify`` — run identity suites and write one report file per suite.
* ``reconstruct`` — recover a 2-D image from sonar data and write a
  16-bit graymap plus a value dump and an error summary.

Every numeric value is printed with 17 significant digits so identical
configurations produce byte-identical files, and all files are written
atomically (temp-then-rename).  Exit codes are stable for scripting:
0 success, 1 verification failure, 2 usage or parse error, 3 domain error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .phantoms import (
    GaussianBump,
    Phantom,
    PhantomFormatError,
    PolyBump,
    parse_phantom,
)
from .quadrature import DEFAULT_SPEC, DomainError, QuadratureSpec
from .radon import (
    CylinderParam,
    Slanted,
    Vertical,
    cylinder_transform,
    radon_h,
    radon_s,
    radon_v,
)
from .relations import (
    IdentityReport,
    PhantomSonarData,
    TabulatedSonarData2D,
    check_cylinder,
    check_horizontal,
    check_inverse,
    check_john,
    check_semigroup,
    check_slanted_2d,
    check_vertical,
    format_image_dump,
    format_image_pgm,
    format_report,
    reconstruct_2d,
)
from .sonar import sonar_grid

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

CONFIG_ENV_VAR = "SONARKIT_CONFIG"

SUITE_NAMES = (
    "horizontal",
    "vertical",
    "slanted2d",
    "cylinder",
    "john",
    "semigroup",
    "inverse",
)


class CliError(Exception):
    """A failure with a definite exit code and a printable message."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# parsing: grids, phantom files, config files


def parse_grid(token: str | None, name: str = "grid") -> np.ndarray:
    """Parse ``start:stop:count`` into an inclusive-endpoint grid."""
    if token is None:
        raise CliError(EXIT_USAGE, f"{name} is required here")
    parts = token.split(":")
    if len(parts) != 3:
        raise CliError(
            EXIT_USAGE, f"{name}: expected start:stop:count, got {token!r}"
        )
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"{name}: {exc}") from exc
    if count < 1:
        raise CliError(EXIT_USAGE, f"{name}: count must be >= 1, got {count}")
    if count == 1 and start != stop:
        raise CliError(
            EXIT_USAGE, f"{name}: a single-point grid needs start == stop"
        )
    return np.linspace(start, stop, count)


def _load_phantom(path: str) -> Phantom:
    if not os.path.exists(path):
        raise CliError(EXIT_USAGE, f"phantom file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_phantom(text)
    except PhantomFormatError as exc:
        raise CliError(EXIT_USAGE, f"{path}: {exc}") from exc


def load_config(path: str) -> dict[str, str]:
    """Plain-text key-value config: one ``key value`` pair per line."""
    if not os.path.exists(path):
        raise CliError(EXIT_USAGE, f"config file not found: {path}")
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise CliError(
                    EXIT_USAGE, f"{path}:{lineno}: expected 'key value'"
                )
            out[parts[0].replace("-", "_")] = parts[1].strip()
    return out


@dataclass
class RunConfig:
    """Merged view of command-line flags over an optional config file.

    Flags beat config-file entries, which beat built-in defaults; config
    keys are flag names with dashes turned into underscores.
    """

    args: argparse.Namespace
    file_values: Mapping[str, str]

    def value(self, key: str, default=None, cast=str):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.file_values:
            raw = self.file_values[key]
            try:
                return cast(raw)
            except (TypeError, ValueError) as exc:
                raise CliError(
                    EXIT_USAGE, f"config key {key!r}: bad value {raw!r} ({exc})"
                ) from exc
        return default

    def spec(self) -> QuadratureSpec:
        spec = DEFAULT_SPEC
        for key, cast in (
            ("panels", int),
            ("nodes_per_panel", int),
            ("truncation", float),
            ("limit_base", float),
            ("limit_ratio", float),
            ("limit_steps", int),
        ):
            val = self.value(key, cast=cast)
            if val is not None:
                spec = replace(spec, **{key: cast(val)})
        return spec


def _builtin_phantom(dimension: int) -> Phantom:
    """The built-in demonstration phantoms used when no file is given."""
    if dimension == 2:
        return Phantom([GaussianBump((0.0, 1.0), 0.25, 1.0, cutoff=1.0)])
    return Phantom([PolyBump((0.0, 0.0, 1.0), 0.6, 1.0, 3)])


def _parse_omega(token: str, dimension: int):
    parts = token.split(",")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"--omega: {exc}") from exc
    if dimension == 2:
        if len(vals) != 1:
            raise CliError(
                EXIT_USAGE, "--omega: one signed value in dimension two"
            )
        return vals[0]
    if len(vals) != 2:
        raise CliError(
            EXIT_USAGE, "--omega: two comma-separated values in dimension three"
        )
    return np.array(vals)


# ---------------------------------------------------------------------------
# forward


def cmd_forward(config: RunConfig) -> int:
    phantom = _load_phantom(config.value("phantom"))
    spec = config.spec()
    transform = config.value("transform")
    out_path = config.value("output", default="forward.txt")
    n = phantom.dimension

    lines = [f"# transform {transform}", f"# dimension {n}"]
    if transform == "sonar":
        radii = parse_grid(config.value("radii"), "--radii")
        if n == 2:
            centers = parse_grid(config.value("centers"), "--centers")
            lines.append("# columns center radius value")
        else:
            if config.value("centers2") is None:
                raise CliError(
                    EXIT_USAGE,
                    "sonar in dimension three needs --centers and --centers2",
                )
            c1 = parse_grid(config.value("centers"), "--centers")
            c2 = parse_grid(config.value("centers2"), "--centers2")
            centers = np.stack(
                [np.repeat(c1, c2.size), np.tile(c2, c1.size)], axis=1
            )
            lines.append("# columns center1 center2 radius value")
        samples = sonar_grid(phantom, centers, radii, spec)
        for sample in samples:
            coords = np.atleast_1d(sample.center)
            lines.append(
                " ".join(_fmt(c) for c in coords)
                + f" {_fmt(sample.radius)} {_fmt(sample.value)}"
            )
    elif transform == "radon-h":
        heights = parse_grid(config.value("heights"), "--heights")
        lines.append("# columns height value")
        for y in heights:
            lines.append(f"{_fmt(y)} {_fmt(radon_h(phantom, float(y), spec))}")
    elif transform == "radon-v":
        omega = _parse_omega(config.value("omega", default="1"), n)
        offsets = parse_grid(config.value("offsets"), "--offsets")
        lines.append("# columns offset value")
        for p in offsets:
            lines.append(
                f"{_fmt(p)} {_fmt(radon_v(phantom, omega, float(p), spec))}"
            )
    elif transform == "radon-s":
        omega = _parse_omega(config.value("omega", default="1"), n)
        offsets = parse_grid(config.value("offsets"), "--offsets")
        betas = parse_grid(config.value("betas"), "--betas")
        lines.append("# columns offset beta value")
        for p in offsets:
            for beta in betas:
                plane = Slanted(omega, float(p), float(beta))
                lines.append(
                    f"{_fmt(p)} {_fmt(beta)} {_fmt(radon_s(phantom, plane, spec))}"
                )
    elif transform == "cylinder":
        omega = _parse_omega(config.value("omega", default="1,0"), 3)
        if n != 3:
            raise CliError(
                EXIT_USAGE, "the cylinder transform needs a 3-D phantom"
            )
        offsets = parse_grid(config.value("offsets"), "--offsets")
        radii = parse_grid(config.value("radii"), "--radii")
        lines.append("# columns offset radius value")
        for p in offsets:
            for r in radii:
                cyl = CylinderParam(omega, float(p), float(r))
                lines.append(
                    f"{_fmt(p)} {_fmt(r)} {_fmt(cylinder_transform(phantom, cyl, spec))}"
                )
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(EXIT_USAGE, f"unknown transform {transform!r}")

    _atomic_write_text(out_path, "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _john_cases(n: int):
    e = np.zeros(n)
    e[0] = 1.0
    diag = np.ones(n) / math.sqrt(n)
    return [
        (np.cos, 0.7 * e),
        (lambda t: np.exp(-(t**2)), 1.3 * diag),
        (lambda t: 1.0 / (1.0 + t**2), 0.9 * e),
        (lambda t: np.sin(t) + t**2, 1.1 * diag),
        (lambda t: np.cosh(t / 2.0), 0.5 * e),
    ]


def _merge_reports(name: str, reports: Sequence[IdentityReport], tolerance: float) -> IdentityReport:
    grid: list[tuple] = []
    lhs: list[float] = []
    rhs: list[float] = []
    for tag, rep in enumerate(reports):
        for params, lv, rv in zip(rep.parameter_grid, rep.lhs, rep.rhs):
            grid.append((float(tag),) + tuple(np.atleast_1d(params)))
            lhs.append(lv)
            rhs.append(rv)
    return IdentityReport(
        identity_name=name,
        parameter_grid=tuple(grid),
        lhs=tuple(lhs),
        rhs=tuple(rhs),
        max_abs_err=max(r.max_abs_err for r in reports),
        max_rel_err=max(r.max_rel_err for r in reports),
        tolerance=tolerance,
        passed=all(r.passed for r in reports),
    )


def _suite_report(
    suite: str,
    phantom2: Phantom,
    phantom3: Phantom,
    spec: QuadratureSpec,
    tolerance: float | None,
    limits_overridden: bool,
) -> IdentityReport:
    if suite == "horizontal":
        box = phantom2.support_bounds()
        y_lo, y_hi = box[0][-1], box[1][-1]
        pad = 0.1 * (y_hi - y_lo)
        grid = np.linspace(y_lo + pad, y_hi - pad, 24)
        return check_horizontal(phantom2, grid, spec, tolerance=tolerance)
    if suite == "vertical":
        box = phantom2.support_bounds()
        x_lo, x_hi = box[0][0], box[1][0]
        pad = 0.2 * (x_hi - x_lo)
        offsets = np.linspace(x_lo + pad, x_hi - pad, 6)
        vspec = spec
        if not limits_overridden:
            reach = 0.5 * float(
                np.hypot(x_hi - x_lo, box[1][-1] - box[0][-1])
            )
            vspec = replace(
                spec, limit_base=max(8.0, 8.0 * reach), limit_steps=8
            )
        planes = [Vertical(1.0, float(p)) for p in offsets]
        return check_vertical(phantom2, planes, vspec, tolerance=tolerance or 1e-2)
    if suite == "slanted2d":
        box = phantom2.support_bounds()
        cx = 0.5 * (box[0][0] + box[1][0])
        cy = 0.5 * (box[0][-1] + box[1][-1])
        rays = []
        for beta0 in (0.6, 0.75, 0.9):
            foot = cx - cy / math.tan(beta0)
            for beta in (beta0 - 0.06, beta0, beta0 + 0.06):
                rays.append((float(foot), float(beta)))
        return check_slanted_2d(phantom2, rays, spec, tolerance=tolerance)
    if suite == "cylinder":
        balls = [(t.center, t.reach) for t in phantom3.terms]
        center, reach = balls[0]
        axis_dist = math.hypot(float(center[0]), float(center[2]))
        omega = np.array([1.0, 0.0])
        radii = np.linspace(
            max(axis_dist - 0.75 * reach, 0.05), axis_dist + 0.75 * reach, 4
        )
        cyls = [CylinderParam(omega, 0.0, float(r)) for r in radii]
        return check_cylinder(phantom3, cyls, spec, tolerance=tolerance)
    if suite == "john":
        reports = [
            check_john(n, _john_cases(n), spec, tolerance=tolerance or 1e-8)
            for n in (2, 3)
        ]
        return _merge_reports("john", reports, tolerance or 1e-8)
    if suite == "semigroup":
        return check_semigroup(spec, tolerance=tolerance or 1e-6)
    if suite == "inverse":
        return check_inverse(spec, tolerance=tolerance or 1e-4)
    raise CliError(EXIT_USAGE, f"unknown suite {suite!r}")


def cmd_verify(config: RunConfig) -> int:
    raw = config.value("suites", default="")
    suites = [s.strip() for s in raw.split(",") if s.strip()]
    if not suites:
        raise CliError(
            EXIT_USAGE,
            "no suites given; choose from " + ", ".join(SUITE_NAMES),
        )
    unknown = [s for s in suites if s not in SUITE_NAMES]
    if unknown:
        raise CliError(
            EXIT_USAGE,
            f"unknown suite(s) {', '.join(unknown)};"
            f" choose from {', '.join(SUITE_NAMES)}",
        )

    phantom_path = config.value("phantom")
    phantom2 = _builtin_phantom(2)
    phantom3 = _builtin_phantom(3)
    if phantom_path is not None:
        loaded = _load_phantom(phantom_path)
        if loaded.dimension == 2:
            phantom2 = loaded
        else:
            phantom3 = loaded
        needs2 = {"horizontal", "vertical", "slanted2d"} & set(suites)
        if loaded.dimension == 3 and needs2:
            raise CliError(
                EXIT_DOMAIN,
                f"suite(s) {', '.join(sorted(needs2))} need a 2-D phantom,"
                f" got dimension 3 from {phantom_path}",
            )
        if loaded.dimension == 2 and "cylinder" in suites:
            raise CliError(
                EXIT_DOMAIN,
                f"suite cylinder needs a 3-D phantom, got dimension 2"
                f" from {phantom_path}",
            )

    spec = config.spec()
    tolerance = config.value("tolerance", cast=float)
    out_dir = config.value("out_dir", default=".")
    os.makedirs(out_dir, exist_ok=True)
    limits_overridden = any(
        config.value(key) is not None
        for key in ("limit_base", "limit_ratio", "limit_steps")
    )

    all_passed = True
    for suite in suites:
        report = _suite_report(
            suite, phantom2, phantom3, spec, tolerance, limits_overridden
        )
        path = os.path.join(out_dir, f"{suite}.report.txt")
        _atomic_write_text(path, format_report(report))
        status = "pass" if report.passed else "fail"
        print(f"{suite}: {status} (max_rel_err {_fmt(report.max_rel_err)}) -> {path}")
        all_passed = all_passed and report.passed
    return EXIT_OK if all_passed else EXIT_VERIFY_FAIL


# ---------------------------------------------------------------------------
# reconstruct


class GridSonarData2D:
    """Sonar data interpolated from a center-major ``forward`` table file.

    Coverage is inferred from the nonzero entries: one support ball is
    fitted so the in-band region brackets every nonzero sample.  Radii
    beyond the tabulated range evaluate to zero, so limit radii are
    clamped to the table and a coverage warning is printed.
    """

    def __init__(self, c_grid, r_grid, values):
        from scipy.interpolate import RectBivariateSpline

        from .geometry import Ball

        self.dimension = 2
        self.aux_cache: dict = {}
        self.c_grid = np.asarray(c_grid, dtype=float)
        self.r_grid = np.asarray(r_grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        mask = np.abs(self.values) > 1e-12
        if not mask.any():
            raise CliError(EXIT_USAGE, "sonar table is identically zero")
        ci, ri = np.nonzero(mask)
        c_lo, c_hi = self.c_grid[ci.min()], self.c_grid[ci.max()]
        r_lo, r_hi = self.r_grid[ri.min()], self.r_grid[ri.max()]
        bx = 0.5 * (c_lo + c_hi)
        bh = 0.5 * (r_lo + r_hi)
        rho = 0.5 * (r_hi - r_lo) + 0.05 * max(r_hi - r_lo, 1.0)
        self.support_balls = [Ball(np.array([bx, bh]), float(rho))]
        kx = min(3, self.c_grid.size - 1)
        ky = min(3, self.r_grid.size - 1)
        self._spline = RectBivariateSpline(
            self.c_grid, self.r_grid, self.values, kx=kx, ky=ky
        )

    def __call__(self, centers, radii):
        centers = np.asarray(centers, dtype=float).ravel()
        rs = np.asarray(radii, dtype=float).ravel()
        if np.any(rs <= 0):
            raise DomainError("sonar radii must be positive")
        out = np.zeros_like(rs)
        inside = (
            (centers >= self.c_grid[0])
            & (centers <= self.c_grid[-1])
            & (rs >= self.r_grid[0])
            & (rs <= self.r_grid[-1])
        )
        if inside.any():
            out[inside] = self._spline.ev(centers[inside], rs[inside])
        return out


def load_sonar_table(path: str) -> GridSonarData2D:
    if not os.path.exists(path):
        raise CliError(EXIT_USAGE, f"sonar table not found: {path}")
    centers, radii, values = [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise CliError(
                    EXIT_USAGE,
                    f"{path}:{lineno}: expected 'center radius value' rows",
                )
            try:
                c, r, v = (float(p) for p in parts)
            except ValueError as exc:
                raise CliError(EXIT_USAGE, f"{path}:{lineno}: {exc}") from exc
            centers.append(c)
            radii.append(r)
            values.append(v)
    if not centers:
        raise CliError(EXIT_USAGE, f"{path}: empty sonar table")
    c_grid = np.unique(np.asarray(centers))
    r_grid = np.unique(np.asarray(radii))
    if c_grid.size * r_grid.size != len(values):
        raise CliError(
            EXIT_USAGE,
            f"{path}: rows do not form a full center x radius grid",
        )
    table = np.asarray(values).reshape(c_grid.size, r_grid.size)
    return GridSonarData2D(c_grid, r_grid, table)


def _parse_window(token: str):
    parts = token.split(":")
    if len(parts) != 4:
        raise CliError(
            EXIT_USAGE, f"--window: expected x0:x1:y0:y1, got {token!r}"
        )
    try:
        x0, x1, y0, y1 = (float(p) for p in parts)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"--window: {exc}") from exc
    if not (x0 < x1 and y0 < y1):
        raise CliError(EXIT_USAGE, "--window: needs x0 < x1 and y0 < y1")
    return (x0, x1, y0, y1)


def cmd_reconstruct(config: RunConfig) -> int:
    phantom_path = config.value("phantom")
    table_path = config.value("sonar_table")
    if phantom_path is None and table_path is None:
        raise CliError(
            EXIT_USAGE, "reconstruct needs --phantom or --sonar-table"
        )
    spec = config.spec()
    reference = None
    warnings_out: list[str] = []
    if phantom_path is not None:
        phantom = _load_phantom(phantom_path)
        if phantom.dimension != 2:
            raise CliError(
                EXIT_USAGE,
                "reconstruction is two-dimensional only; the higher-"
                "dimensional problems reduce to plane transforms instead",
            )
        reference = phantom
        data = TabulatedSonarData2D(PhantomSonarData(phantom, spec))
        box = phantom.support_bounds()
        default_window = (
            float(box[0][0] - 0.1),
            float(box[1][0] + 0.1),
            max(0.05, float(box[0][1] - 0.1)),
            float(box[1][1] + 0.1),
        )
    else:
        data = load_sonar_table(table_path)
        ball = data.support_balls[0]
        default_window = (
            float(ball.center[0] - ball.radius),
            float(ball.center[0] + ball.radius),
            max(0.05, float(ball.center[1] - ball.radius)),
            float(ball.center[1] + ball.radius),
        )
        r_top = float(data.r_grid[-1])
        needed = spec.limit_base * spec.limit_ratio ** (spec.limit_steps - 1)
        if needed > r_top:
            steps = 2
            base = spec.limit_base
            while base * spec.limit_ratio ** (steps - 1) > r_top and base > 0.25:
                base /= 2.0
            spec = replace(spec, limit_base=base, limit_steps=steps)
            warnings_out.append(
                f"warning: table covers radii up to {_fmt(r_top)};"
                " direction-limit anchors were clamped to the table"
            )

    window_token = config.value("window")
    window = (
        _parse_window(window_token) if window_token else default_window
    )
    resolution = config.value("resolution", default=128, cast=int)
    n_angles = config.value("angles", default=90, cast=int)
    n_offsets = config.value("offsets", default=128, cast=int)
    prefix = config.value("out_prefix", default="reconstruction")

    if table_path is not None:
        ball = data.support_balls[0]
        covered = (
            ball.center[0] - ball.radius,
            ball.center[0] + ball.radius,
            0.0,
            ball.center[1] + ball.radius,
        )
        if (
            window[0] < covered[0] - 0.5
            or window[1] > covered[1] + 0.5
            or window[3] > covered[3] + 0.5
        ):
            warnings_out.append(
                "warning: window extends beyond the table's support coverage"
            )

    result = reconstruct_2d(
        data,
        window,
        resolution,
        spec,
        n_angles=n_angles,
        n_offsets=n_offsets,
        reference=reference,
    )

    for note in warnings_out:
        print(note, file=sys.stderr)
    if reference is None:
        warnings_out.append(
            "note: no reference image; rel_l2_error is the L2 norm of the"
            " reconstruction, not an error"
        )
    _atomic_write_bytes(prefix + ".pgm", format_image_pgm(result.reconstructed))
    _atomic_write_text(prefix + ".txt", format_image_dump(result))
    summary = [
        f"window {_fmt(window[0])} {_fmt(window[1])}"
        f" {_fmt(window[2])} {_fmt(window[3])}",
        f"resolution {resolution}",
        f"angles {n_angles}",
        f"offsets {n_offsets}",
        f"rel_l2_error {_fmt(result.rel_l2_error)}",
    ]
    summary.extend(warnings_out)
    _atomic_write_text(prefix + ".summary.txt", "\n".join(summary) + "\n")
    print(f"rel_l2_error {_fmt(result.rel_l2_error)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--panels", type=int, help="quadrature panels per unit length")
    parser.add_argument(
        "--nodes-per-panel", type=int, dest="nodes_per_panel",
        help="Gauss-Legendre nodes per panel",
    )
    parser.add_argument("--truncation", type=float, help="improper-integral cutoff")
    parser.add_argument(
        "--limit-base", type=float, dest="limit_base",
        help="first radius of the direction-limit ladder",
    )
    parser.add_argument(
        "--limit-ratio", type=float, dest="limit_ratio",
        help="growth ratio of the direction-limit ladder",
    )
    parser.add_argument(
        "--limit-steps", type=int, dest="limit_steps",
        help="number of rungs in the direction-limit ladder",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonarkit",
        description=(
            "Sphere-mean (sonar) and Radon transforms on the upper"
            " half-space: forward evaluation, identity verification,"
            " and 2-D reconstruction."
        ),
    )
    parser.add_argument(
        "--config",
        help=(
            "plain-text key-value config file; flags override it"
            f" (default from ${CONFIG_ENV_VAR})"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fwd = sub.add_parser("forward", help="evaluate one transform on a grid")
    fwd.add_argument("--transform", required=True,
                     choices=["sonar", "radon-h", "radon-v", "radon-s", "cylinder"])
    fwd.add_argument("--phantom", help="phantom description file")
    fwd.add_argument("--centers", help="center grid start:stop:count")
    fwd.add_argument("--centers2", help="second center axis (3-D sonar)")
    fwd.add_argument("--radii", help="radius grid start:stop:count")
    fwd.add_argument("--heights", help="height grid start:stop:count")
    fwd.add_argument("--offsets", help="offset grid start:stop:count")
    fwd.add_argument("--betas", help="angle grid start:stop:count")
    fwd.add_argument("--omega", help="direction: signed unit (2-D) or 'a,b' (3-D)")
    fwd.add_argument("--output", help="output table path (default forward.txt)")
    _add_spec_flags(fwd)

    ver = sub.add_parser("verify", help="run identity suites, write reports")
    ver.add_argument(
        "--suites",
        help="comma-separated subset of: " + ", ".join(SUITE_NAMES),
    )
    ver.add_argument("--phantom", help="phantom description file (else built-ins)")
    ver.add_argument("--tolerance", type=float, help="override every suite tolerance")
    ver.add_argument("--out-dir", dest="out_dir", help="report directory (default .)")
    _add_spec_flags(ver)

    rec = sub.add_parser("reconstruct", help="2-D image from sonar data")
    rec.add_argument("--phantom", help="2-D phantom description file")
    rec.add_argument(
        "--sonar-table", dest="sonar_table",
        help="center-major sonar table from 'forward --transform sonar'",
    )
    rec.add_argument("--window", help="image window x0:x1:y0:y1")
    rec.add_argument("--resolution", type=int, help="pixels per side (default 128)")
    rec.add_argument("--angles", type=int, help="sinogram directions (default 90)")
    rec.add_argument("--offsets", type=int, help="sinogram offsets (default 128)")
    rec.add_argument(
        "--out-prefix", dest="out_prefix",
        help="output prefix (default 'reconstruction')",
    )
    _add_spec_flags(rec)
    return parser


_COMMANDS = {
    "forward": cmd_forward,
    "verify": cmd_verify,
    "reconstruct": cmd_reconstruct,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    try:
        file_values = load_config(config_path) if config_path else {}
        config = RunConfig(args, file_values)
        if args.command == "forward" and config.value("phantom") is None:
            raise CliError(EXIT_USAGE, "forward needs --phantom")
        return _COMMANDS[args.command](config)
    except CliError as exc:
        print(f"sonarkit: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"sonarkit: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
