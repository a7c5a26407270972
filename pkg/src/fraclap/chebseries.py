"""Chebyshev and ultraspherical series utilities.

Everything in this package represents functions on [-1, 1] by coefficient
vectors in either the Chebyshev basis ``T_k`` or an ultraspherical
(Gegenbauer) basis ``C^(lam)_k`` with integer parameter ``lam >= 1``.  This
module holds the basis-independent plumbing: point grids, the discrete
transform between values and coefficients, series evaluation (Clenshaw),
Clenshaw-Curtis quadrature, and adaptive construction of coefficients from a
callable.

Conventions
-----------
* ``chebpts(npts)`` returns the Chebyshev points of the second kind in
  ascending order, ``x_j = cos(pi*(npts-1-j)/(npts-1))``.
* A basis tag is an integer ``lam``; ``lam = 0`` denotes the Chebyshev
  basis ``T_k`` and ``lam >= 1`` the ultraspherical basis ``C^(lam)_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChebSeries",
    "chebpts",
    "vals_to_coeffs",
    "coeffs_to_vals",
    "chebcoeffs",
    "clenshaw_chebyshev",
    "clenshaw_ultraspherical",
    "evaluate_series",
    "clenshaw_curtis_weights",
    "integrate_coeffs",
    "l2_norm",
    "chop_coeffs",
]


def chebpts(npts):
    """Chebyshev points of the second kind on [-1, 1], ascending.

    Parameters
    ----------
    npts : int
        Number of points (>= 1).

    Returns
    -------
    ndarray
        ``x_j = cos(pi*(npts-1-j)/(npts-1))`` for ``j = 0..npts-1``; the
        single point 0.0 when ``npts == 1``.
    """
    if npts < 1:
        raise ValueError("npts must be >= 1")
    if npts == 1:
        return np.zeros(1)
    n = npts - 1
    # sine form: exactly symmetric about 0 and exactly +-1 at the ends
    j = np.arange(npts)
    return np.sin(np.pi * (2 * j - n) / (2 * n))


def vals_to_coeffs(vals):
    """Map values at ``chebpts(len(vals))`` to Chebyshev T coefficients.

    Uses the even-extension FFT form of the DCT-I, so the cost is
    O(n log n).  Inverse of :func:`coeffs_to_vals`.
    """
    vals = np.asarray(vals)
    npts = vals.shape[0]
    if npts == 1:
        return vals.astype(np.result_type(vals.dtype, np.float64)).copy()
    n = npts - 1
    # Reverse to f(cos(j*pi/n)), j = 0..n, then extend evenly.
    f = vals[::-1]
    ext = np.concatenate([f, f[-2:0:-1]])
    c = np.fft.fft(ext)[: n + 1] / n
    if np.isrealobj(vals):
        c = c.real
    c[0] /= 2.0
    c[n] /= 2.0
    return c


def coeffs_to_vals(coeffs):
    """Map Chebyshev T coefficients to values at ``chebpts(len(coeffs))``."""
    coeffs = np.asarray(coeffs)
    npts = coeffs.shape[0]
    if npts == 1:
        return coeffs.copy()
    n = npts - 1
    c = coeffs.astype(np.result_type(coeffs.dtype, np.float64)).copy()
    c[0] *= 2.0
    c[n] *= 2.0
    ext = np.concatenate([c, c[-2:0:-1]])
    f = np.fft.fft(ext)[: n + 1] / 2.0
    if np.isrealobj(coeffs):
        f = f.real
    return f[::-1]


def chop_coeffs(coeffs, tol=1e-15):
    """Trim trailing coefficients below ``tol`` times the largest magnitude."""
    coeffs = np.asarray(coeffs)
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0.0:
        return coeffs[:1].copy() if coeffs.size else np.zeros(1)
    keep = np.nonzero(np.abs(coeffs) > tol * scale)[0]
    return coeffs[: keep[-1] + 1].copy()


def chebcoeffs(f, tol=1e-15, max_degree=65536):
    """Chebyshev T coefficients of a callable, adaptively resolved.

    Samples ``f`` on nested Chebyshev grids, doubling until the trailing
    coefficients fall below ``tol`` relative to the largest one, then chops.

    Parameters
    ----------
    f : callable
        Vectorized function of one array argument on [-1, 1].
    tol : float
        Relative truncation tolerance.
    max_degree : int
        Failure threshold for unresolvable functions.

    Returns
    -------
    ndarray
        Coefficient vector, trailing noise removed.
    """
    n = 16
    while True:
        c = vals_to_coeffs(f(chebpts(n + 1)))
        scale = np.max(np.abs(c))
        if scale == 0.0:
            return np.zeros(1)
        tail = np.max(np.abs(c[-max(2, n // 8):]))
        if tail <= tol * scale:
            return chop_coeffs(c, tol)
        n *= 2
        if n > max_degree:
            raise ValueError(
                "function not resolved to tol=%g by degree %d" % (tol, max_degree)
            )


def clenshaw_chebyshev(coeffs, x):
    """Evaluate a Chebyshev T series at ``x`` by Clenshaw recurrence."""
    coeffs = np.asarray(coeffs)
    x = np.asarray(x)
    dtype = np.result_type(coeffs.dtype, x.dtype, np.float64)
    b1 = np.zeros(x.shape, dtype=dtype)
    b2 = np.zeros(x.shape, dtype=dtype)
    two_x = 2.0 * x
    for k in range(len(coeffs) - 1, 0, -1):
        b1, b2 = coeffs[k] + two_x * b1 - b2, b1
    return coeffs[0] + x * b1 - b2


def clenshaw_ultraspherical(coeffs, lam, x):
    """Evaluate an ultraspherical ``C^(lam)`` series at ``x`` by Clenshaw.

    Uses the three-term recurrence
    ``C_{k+1} = (2*(k+lam)/(k+1)) * x * C_k - ((k+2*lam-1)/(k+1)) * C_{k-1}``
    with ``C_0 = 1``; since ``C_1 = 2*lam*x`` matches the recurrence started
    from ``C_0`` alone, the plain backward sweep applies.
    """
    if lam == 0:
        return clenshaw_chebyshev(coeffs, x)
    coeffs = np.asarray(coeffs)
    x = np.asarray(x)
    dtype = np.result_type(coeffs.dtype, x.dtype, np.float64)
    b1 = np.zeros(x.shape, dtype=dtype)
    b2 = np.zeros(x.shape, dtype=dtype)
    for k in range(len(coeffs) - 1, -1, -1):
        alpha_k = 2.0 * (k + lam) / (k + 1.0)
        beta_k1 = -(k + 2.0 * lam) / (k + 2.0)
        b1, b2 = coeffs[k] + alpha_k * x * b1 + beta_k1 * b2, b1
    return b1


def evaluate_series(coeffs, lam, x):
    """Evaluate a series with basis tag ``lam`` (0 = T, >= 1 = C^(lam))."""
    if lam == 0:
        return clenshaw_chebyshev(coeffs, x)
    return clenshaw_ultraspherical(coeffs, lam, x)


def clenshaw_curtis_weights(npts):
    """Clenshaw-Curtis quadrature weights for ``chebpts(npts)``.

    The rule integrates polynomials of degree ``npts - 1`` exactly on
    [-1, 1].  Computed in O(n log n) from the Chebyshev moments
    ``int T_k = 2/(1-k^2)`` (even k) via the same even-extension FFT as the
    transform.
    """
    if npts == 1:
        return np.array([2.0])
    n = npts - 1
    m = np.zeros(n + 1)
    k = np.arange(0, n + 1, 2)
    m[::2] = 2.0 / (1.0 - k.astype(float) ** 2)
    mt = m.copy()
    mt[0] /= 2.0
    mt[n] /= 2.0
    ext = np.concatenate([mt, mt[-2:0:-1]])
    F = np.fft.fft(ext).real[: n + 1]
    sgn = np.where(np.arange(n + 1) % 2 == 0, 1.0, -1.0)
    S = 0.5 * (F + mt[0] + sgn * mt[n])
    w = (2.0 / n) * S
    w[0] /= 2.0
    w[n] /= 2.0
    # weights for descending points; flip to match ascending chebpts
    return w[::-1]


def integrate_coeffs(coeffs):
    """Integral over [-1, 1] of the function with Chebyshev T coefficients."""
    coeffs = np.asarray(coeffs)
    k = np.arange(0, len(coeffs), 2)
    m = 2.0 / (1.0 - k.astype(float) ** 2)
    return np.dot(m, coeffs[::2])


def l2_norm(coeffs, lam=0, weight_coeffs=None):
    """Weighted L2 norm ``sqrt(int w(x) |f(x)|^2 dx)`` of a series.

    Parameters
    ----------
    coeffs : array
        Series coefficients in basis ``lam``.
    lam : int
        Basis tag (0 = Chebyshev T).
    weight_coeffs : array, optional
        Chebyshev T coefficients of a weight function; default weight 1.

    Notes
    -----
    Evaluates the integrand on a Clenshaw-Curtis grid fine enough to be
    exact when the weight is (numerically) polynomial.
    """
    coeffs = np.asarray(coeffs)
    deg_w = 0 if weight_coeffs is None else len(weight_coeffs) - 1
    npts = 2 * len(coeffs) + deg_w + 8
    x = chebpts(npts)
    w = clenshaw_curtis_weights(npts)
    fx = evaluate_series(coeffs, lam, x)
    wx = 1.0 if weight_coeffs is None else clenshaw_chebyshev(weight_coeffs, x)
    val = np.dot(w, wx * np.abs(fx) ** 2)
    return float(np.sqrt(max(val.real if np.iscomplexobj(np.asarray(val)) else val, 0.0)))


@dataclass
class ChebSeries:
    """A function on [-1, 1] as a coefficient vector in basis ``lam``.

    Attributes
    ----------
    coeffs : ndarray
        Coefficients, lowest degree first.
    lam : int
        Basis tag: 0 for Chebyshev ``T_k``, ``lam >= 1`` for the
        ultraspherical basis ``C^(lam)_k``.
    """

    coeffs: np.ndarray
    lam: int = 0

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs))

    def __call__(self, x):
        return evaluate_series(self.coeffs, self.lam, x)

    def __len__(self):
        return len(self.coeffs)

    @classmethod
    def from_function(cls, f, tol=1e-15):
        return cls(chebcoeffs(f, tol=tol), 0)
