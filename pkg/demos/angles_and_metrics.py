"""Principal angles and the four subspace metrics on a pair of planes."""

import math

import numpy as np

from angval.grassmann import (
    metric_d1,
    metric_d2,
    metric_dF,
    metric_dsigma,
    principal_angles,
    procrustes_min,
    subspace_from_spanning,
)

rng = np.random.default_rng(1)

v = subspace_from_spanning(rng.standard_normal((5, 2)))
w = subspace_from_spanning(rng.standard_normal((5, 2)))

res = principal_angles(v, w)
print("principal angles:", res.angles)

d1 = metric_d1(v, w)
print("d1      =", d1)
print("d2      =", metric_d2(v, w), " sin(d1) =", math.sin(d1))
print("dF      =", metric_dF(v, w))
print("dsigma  =", metric_dsigma(v, w), " 2 sin(d1/2) =", 2 * math.sin(d1 / 2))

# the geodesic metric dominates the gap metric, with the 2/pi bound below
print("bracket: (2/pi) d1 =", 2 / math.pi * d1, "<= d2 <= d1")

# nearest orthonormal alignment of the two bases
pro = procrustes_min(v.basis, w.basis)
print("procrustes min ||P1 - P2 Q||_F =", pro.value)
print("realized by Q =")
print(pro.q)
