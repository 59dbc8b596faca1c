"""Angular value estimates for a discrete rotation and a continuous model.

Discrete: the sheared rotation D_rho T_phi D_rho^{-1} turns every line by
phi per step on average, so all four variants equal min(phi, pi - phi).

Continuous: the elliptic generator with frequency omega has angular value
omega; a single trajectory average over whole periods recovers it to
machine precision.
"""

import math

from angval.continuous import ContinuousSystem, estimate_angular_value_ct
from angval.discrete import DiscreteSystem, estimate_angular_value
from angval.search import SubspaceSearchConfig

phi, rho = 0.7, 0.5
sys_d = DiscreteSystem.planar_rotation(rho, phi)
cfg = SubspaceSearchConfig(seed=0, candidates=8, refine_rounds=12, sample_times=[1000, 2000])
for variant in ("sup-limsup", "sup-liminf", "limsup-sup", "liminf-sup"):
    rep = estimate_angular_value(sys_d, 1, variant, 2000, cfg)
    print("discrete %-10s = %.8f" % (variant, rep.value))
print("exact min(phi, pi-phi) = %.8f" % min(phi, math.pi - phi))

omega = 1.25
sys_c = ContinuousSystem.model2d(1.0 / 3.0, omega)
horizon = 40 * math.pi  # whole periods of the pi-periodic angular speed
cfg = SubspaceSearchConfig(seed=0, candidates=2, refine_rounds=0, sample_times=[horizon])
rep = estimate_angular_value_ct(sys_c, 1, "sup-limsup", horizon, 1e-3, cfg)
print("continuous timed average = %.12f  (omega = %.4f)" % (rep.value, omega))
