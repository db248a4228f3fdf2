"""Independent reference computations used to pin expected values in tests.

Everything here goes through scipy's orthogonal-polynomial routines or plain
linear algebra on monomials, deliberately avoiding the code paths under test.
"""

import numpy as np
from scipy.special import roots_hermitenorm, roots_jacobi


def jacobi_rule(alpha, beta, m):
    """Gauss rule for the normalized Jacobi weight, via scipy."""
    nodes, weights = roots_jacobi(m, alpha, beta)
    return nodes, weights / weights.sum()


def hermite_rule(m):
    """Gauss rule for the standard Gaussian, via scipy."""
    nodes, weights = roots_hermitenorm(m)
    return nodes, weights / weights.sum()


def gram_schmidt_values(rule, max_degree, x):
    """Orthonormal polynomial values built from monomials by weighted QR.

    ``rule`` must integrate degree 2*max_degree exactly.  Conditioning of the
    Vandermonde matrix limits this oracle to moderate degrees (<= ~12).
    Returns an array of shape (len(x), max_degree + 1) whose column j is the
    degree-j orthonormal polynomial with positive leading coefficient.
    """
    nodes, weights = rule
    vandermonde = np.vander(nodes, max_degree + 1, increasing=True)
    q, r = np.linalg.qr(np.sqrt(weights)[:, None] * vandermonde)
    coeffs = np.linalg.inv(r)
    signs = np.sign(np.diag(coeffs))
    coeffs = coeffs * signs[None, :]
    return np.vander(np.atleast_1d(np.asarray(x, float)), max_degree + 1, increasing=True) @ coeffs


def central_difference(f, x, h=1e-6):
    """Fourth-order central difference, an independent derivative oracle."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)
