"""The fractional operator families behind the transform identities.

The radial family I^nu integrates a profile against (y^2 - s^2)^(nu-1)
weights; D^nu undoes it.  The angular pair V and W does the same on
angle profiles with the kernel 1/sqrt(sin^2 b - sin^2 t).  Everything
here is checked against closed forms, so this doubles as a worked list
of oracle examples.
"""

import math

import numpy as np

from sonarkit import (
    AngularProfile,
    RadialProfile,
    frac_derivative,
    frac_integral,
    op_v,
    op_w,
)

y = np.linspace(0.0, 2.0, 401)

print("-- fractional integral of a power: I^nu[s^2] --")
# substituting s = y sin(u) turns the kernel integral into a beta function:
#   I^nu[s^2](y) = pi^nu * gamma(3/2) / gamma(nu + 3/2) * y^(2 nu + 2),
# so the half-order case is simply (pi/2) * y^3
g = RadialProfile(y, y**2)
half = frac_integral(g, 0.5)
print(f"computed I^0.5[s^2](1.5) = {np.interp(1.5, y, half.values):.8f}")
print(f"closed form (pi/2)*y^3   = {0.5 * math.pi * 1.5**3:.8f}")

print("\n-- semigroup: I^0.7 after I^0.8 equals I^1.5 --")
smooth = RadialProfile(y, np.exp(-((y - 1.0) ** 2)) * y**2)
nested = frac_integral(frac_integral(smooth, 0.8), 0.7)
direct = frac_integral(smooth, 1.5)
err = np.max(np.abs(nested.values - direct.values)) / np.max(np.abs(direct.values))
print(f"sup-norm relative gap: {err:.3e}")

print("\n-- inversion: D^nu recovers the profile from I^nu --")
# the derivative family divides by y, so its grid must stay positive
y_pos = np.linspace(0.01, 2.0, 400)
probe = RadialProfile(y_pos, np.cos(1.3 * y_pos) + 0.5)
for nu in (0.5, 1.0, 1.5):
    back = frac_derivative(frac_integral(probe, nu), nu)
    gap = np.max(np.abs(back.values[2:-2] - probe.values[2:-2]))
    print(f"nu = {nu}: max interior gap {gap:.3e}")

print("\n-- the angular pair: V has cos -> pi*sin as an eigenrelation --")
beta = np.linspace(0.02, math.pi / 2 - 0.02, 257)
forward = op_v(AngularProfile(beta, np.cos(beta)))
print(
    "max |V[cos] - pi*sin|:",
    f"{np.max(np.abs(forward.values - math.pi * np.sin(beta))):.3e}",
)

print("\n-- W undoes V on a generic profile --")
profile = AngularProfile(beta, np.sin(2.0 * beta))
back = op_w(op_v(profile))
print(
    "round-trip sup-norm error:",
    f"{np.max(np.abs(back.values - profile.values)):.3e}",
)
