"""Exact peakon-antipeakon pairs and the circles traced by their peak values.

Run with ``python3 demos/01_closed_form_circles.py``.
"""

# %%
import numpy as np

from m2ch import closed_form as cf

# %% [markdown]
# The density amplitude ``s`` decides the fate of the pair. For ``s < 1``
# the peaks collide once and separate again. For ``s > 1`` the pair
# oscillates forever; ``s = 1`` is the borderline case.

# %%
for s in (0.0, 0.5, 1.0, 1.5):
    case = cf.classify(s)
    print(f"s = {s:4.2f}: {case.regime.value:13s} C = {case.C:+.4f}")

# %% [markdown]
# At the left peak, ``(u, rho_bar)`` stays on a circle of radius ``1/(4s)``
# centred at ``(0, 1/(4s))``. The residual is zero to rounding along the
# whole orbit, including the instant of collision where both values vanish.

# %%
t = np.linspace(-20, 20, 4001)
for s in (0.25, 0.5, 1.0, 1.5, 2.0):
    pt = cf.eval_collision_centered(cf.classify(s), t)
    res = np.abs(cf.circle_residual(pt, s)).max()
    print(f"s = {s:4.2f}: max circle residual {res:.1e}")

# %% [markdown]
# Subcritical pairs start and end on the circle's intersection with the
# line ``rho_bar = s/2``; the velocity changes sign through the collision.

# %%
case = cf.classify(0.5)
lim = cf.asymptotics(case)
far = cf.eval_collision_centered(case, np.array([-50.0, 50.0]))
print("limits (u) from formulas:", lim.u_peak_limits)
print("values at t = -50, 50:  ", tuple(far.u_peak))

# %% [markdown]
# Supercritical pairs repeat with period ``2 pi / sqrt(C)``.

# %%
case = cf.classify(1.5)
T = cf.period(case)
a = cf.eval_collision_centered(case, 0.3)
b = cf.eval_collision_centered(case, 0.3 + T)
print(f"period {T:.15f}; u(0.3) = {float(a.u_peak):.15f}, u(0.3 + T) = {float(b.u_peak):.15f}")
