"""Right derivative of the maximal principal angle along a subspace curve.

The curve W(t) rotates a 2-plane in R^4 at unit speed in one coordinate
pair, so the exact derivative at t = 0 is 1.  Finite differences of the
angle converge to it at first order.
"""

import numpy as np

from angval.oracles import fd_angle_derivative
from angval.smoothness import CurvePoint, angle_derivative_right

w = np.zeros((4, 2))
w[0, 0] = 1.0
w[2, 1] = 1.0
wdot = np.zeros((4, 2))
wdot[1, 0] = 1.0  # e1 rotates toward e2

exact = angle_derivative_right(CurvePoint(w=w, wdot=wdot))
print("closed-form right derivative:", exact)

for h in (1e-2, 1e-3, 1e-4, 1e-5):
    fd = fd_angle_derivative(w, wdot, h)
    print("h = %7.0e   forward difference = %.10f   err = %.2e" % (h, fd, abs(fd - exact)))

# invariant under change of basis W -> W G and tangent shifts along the space
rng = np.random.default_rng(2)
g = rng.standard_normal((2, 2)) + 2 * np.eye(2)
hmat = rng.standard_normal((2, 2))
print("after W -> WG:       ", angle_derivative_right(CurvePoint(w=w @ g, wdot=wdot @ g)))
print("after Wdot -> Wdot+WH:", angle_derivative_right(CurvePoint(w=w, wdot=wdot + w @ hmat)))
