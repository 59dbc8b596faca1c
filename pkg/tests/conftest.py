import numpy as np

from angval.grassmann import Subspace


def haar_subspace(rng, d, s):
    """Random s-dimensional subspace of R^d from a QR'd Gaussian matrix."""
    m = rng.standard_normal((d, s))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    return Subspace(q)


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))
