"""Cross-checking the transform identities on a desk-scale phantom.

Each identity links the sonar transform to one restriction of the Radon
transform through fractional operators.  The check_* functions compute
both sides along independent quadrature paths and return a report; here
we run a small instance of every one and print the summaries.
"""

from dataclasses import replace

import numpy as np

from sonarkit import (
    DEFAULT_SPEC,
    GaussianBump,
    Phantom,
    PolyBump,
    Vertical,
    check_horizontal,
    check_john,
    check_semigroup,
    check_slanted_2d,
    check_vertical,
    format_report,
)

bump = Phantom([GaussianBump((0.0, 1.0), 0.25, 1.0, cutoff=1.0)])

print("-- sphere integrals of plane waves (both dimensions) --")
for n in (2, 3):
    e = np.zeros(n)
    e[0] = 1.0
    cases = [(np.cos, 0.7 * e), (lambda t: np.exp(-(t**2)), 1.3 * e)]
    rep = check_john(n, cases)
    print(f"n={n}: max_rel_err {rep.max_rel_err:.3e} -> {'ok' if rep.passed else 'FAIL'}")

print("\n-- fractional semigroup --")
rep = check_semigroup()
print(f"max_rel_err {rep.max_rel_err:.3e} -> {'ok' if rep.passed else 'FAIL'}")

print("\n-- horizontal planes: plane integrals vs fractional sonar means --")
rep = check_horizontal(bump, np.linspace(0.4, 1.6, 7))
print(format_report(rep))

print("-- vertical planes: expanding-sphere limits --")
# the tangent spheres must grow well past the support before the 1/radius
# error model behind the extrapolation dominates, so the limit ladder here
# starts higher and climbs further than the all-purpose default
spec = replace(DEFAULT_SPEC, limit_base=16.0, limit_steps=6)
planes = [Vertical(np.array([1.0]), p) for p in (-0.3, 0.15, 0.4)]
rep = check_vertical(bump, planes, spec)
print(f"max_rel_err {rep.max_rel_err:.3e} -> {'ok' if rep.passed else 'FAIL'}")

print("\n-- slanted lines: angular operator vs weighted ray integrals --")
rays = [(-1.0, 0.7), (-1.0, 0.9), (-0.8, 0.8)]
rep = check_slanted_2d(bump, rays, form="V")
print(f"forward form:  max_rel_err {rep.max_rel_err:.3e} -> {'ok' if rep.passed else 'FAIL'}")
rep = check_slanted_2d(bump, rays, form="W")
print(f"inverted form: max_rel_err {rep.max_rel_err:.3e} -> {'ok' if rep.passed else 'FAIL'}")
