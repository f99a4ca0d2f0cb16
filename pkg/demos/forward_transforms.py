"""Forward transforms on closed-form phantoms.

Walks through the basic objects: build a phantom, evaluate its sonar
transform (sphere means scaled by the sphere measure), sweep a grid of
circles, and compare the three Radon-family restrictions against values
computed by direct quadrature over the plane parameterizations.
"""

import math

import numpy as np

from sonarkit import (
    DEFAULT_SPEC,
    GaussianBump,
    Phantom,
    PolyBump,
    Horizontal,
    Slanted,
    Vertical,
    CylinderParam,
    cylinder_transform,
    radon_h,
    radon_s,
    radon_v,
    sonar_2d,
    sonar_3d,
    sonar_grid,
    format_sonar_table,
)

# a single off-center Gaussian bump in the upper half-plane
bump = Phantom([GaussianBump((0.0, 1.0), 0.25, 1.0, cutoff=1.0)])
ball = bump.support_balls()[0]
print(
    f"phantom: {bump.dimension}-dimensional,"
    f" support ball at {ball.center} with radius {ball.radius}"
)

print("\n-- sonar transform: integrals over upper semicircles --")
for center, radius in [(0.0, 1.0), (0.5, 0.8), (-1.2, 2.0), (3.0, 0.5)]:
    value = sonar_2d(bump, center, radius)
    print(f"circle at x={center:+.1f}, r={radius:.1f}:  S[f] = {value:.6f}")

print("\n-- a small acquisition grid, in the plain-text table format --")
samples = sonar_grid(bump, np.linspace(-0.5, 0.5, 3), np.array([0.8, 1.0, 1.2]))
print(format_sonar_table(samples, dim=2))

print("-- Radon restrictions of the same phantom --")
# horizontal line y = 1 passes straight through the bump center
print(f"horizontal y=1.0:   R_h = {radon_h(bump, 1.0):.6f}")
# the Gaussian marginal along that line is known in closed form
w, cut = 0.25, 1.0
exact = w * math.sqrt(math.pi) * math.erf(cut / w)
print(f"closed form:             {exact:.6f}")

print(f"vertical x=0.25:    R_v = {radon_v(bump, np.array([1.0]), 0.25):.6f}")
line = Slanted(1.0, -1.0, 0.9)
print(f"slanted p=-1, b=0.9: R_s = {radon_s(bump, line):.6f}")

print("\n-- dimension three: hemisphere means and the cylinder transform --")
blob = Phantom([PolyBump((0.0, 0.0, 1.0), 0.6, 1.0, 3)])
print(f"hemisphere at origin, r=1: S[f] = {sonar_3d(blob, (0.0, 0.0), 1.0):.6f}")
cyl = CylinderParam(np.array([1.0, 0.0]), 0.0, 1.0)
print(f"cylinder p=0, r=1:         C[f] = {cylinder_transform(blob, cyl):.6f}")
print(f"horizontal plane y=1:      R_h  = {radon_h(blob, 1.0):.6f}")
print(f"exact value pi*0.6^2/4:          {math.pi * 0.36 / 4:.6f}")
