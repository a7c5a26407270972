"""Deformed contours and quadrature for inverting the Laplace transform.

The inverse transform ``q(t) = (2 pi i)^{-1} int e^{zt} qhat(z) dz`` is
evaluated along a contour deformed into the left half-plane so that the
integrand decays and the trapezoid rule converges super-algebraically:

    q_N(t) = sum_{j=-N..N} e^{z_j t} w_j qhat(z_j),
    z_j = gamma(j h),  w_j = (h / (2 pi i)) gamma'(j h).

Two families are provided, each with a closed-form/optimized stable
parameter selection for a time window ``[t0, t1]``:

* hyperbolic ``gamma(s) = sigma + mu (1 + sin(i s - alpha))`` for
  transforms whose singularities lie outside a translated sector
  ``S_{delta,sigma}``; parameters via the Lambert-W closed forms, with the
  stability constraint ``gamma(0) t1 = mu t1 (1 - sin(alpha)) <= beta``;
* parabolic ``gamma(s) = sigma - 1/(4 delta) + mu (1 + i s)^2`` for
  singularities outside the parabola region ``P_{delta,sigma}``;
  parameters by minimizing the maximum of four model error exponents.

An a-priori error certificate for the hyperbolic family is also provided
(quadrature decay plus amplification of the per-node tolerance eta).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize

__all__ = [
    "Contour",
    "ErrorCertificate",
    "lambert_w0",
    "hyperbolic_params",
    "parabolic_params",
    "invert_at_times",
    "error_certificate",
]


def lambert_w0(x):
    """Principal branch of the Lambert W function, ``w e^w = x``.

    Halley iteration from a log-based initial guess; the result satisfies
    ``|w e^w - x| <= 1e-14 (1 + |x|)``.
    """
    x = float(x)
    xmin = -np.exp(-1.0)
    if x < xmin * (1.0 + 4.0 * np.finfo(float).eps) - 1e-300:
        raise ValueError(f"lambert_w0 requires x >= -1/e, got {x}")
    if x == 0.0:
        return 0.0
    if x < -0.25:
        # series about the branch point x = -1/e
        p = np.sqrt(max(2.0 * (np.e * x + 1.0), 0.0))
        w = -1.0 + p - p**2 / 3.0 + 11.0 * p**3 / 72.0
    elif x < np.e:
        w = np.log1p(x) * 0.75
    else:
        l1 = np.log(x)
        l2 = np.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(60):
        ew = np.exp(w)
        f = w * ew - x
        if abs(f) <= 0.25e-14 * (1.0 + abs(x)):
            break
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= 4.0 * np.finfo(float).eps * max(abs(w), 1.0):
            break
    if abs(w * np.exp(w) - x) > 1e-14 * (1.0 + abs(x)):
        raise ArithmeticError(f"lambert_w0 failed to converge for x = {x}")
    return float(w)


@dataclass(frozen=True)
class Contour:
    """Quadrature contour: nodes ``z_j`` and weights ``w_j``, j = -N..N.

    ``alpha`` is set for the hyperbolic family, ``delta`` for the
    parabolic one; ``nodes[k]``/``weights[k]`` correspond to j = k - N.
    Conjugate symmetry ``z_{-j} = conj(z_j)``, ``w_{-j} = conj(w_j)``
    holds exactly by construction (sigma real).
    """

    kind: str
    mu: float
    sigma: float
    h: float
    N: int
    alpha: float = None
    delta: float = None
    nodes: np.ndarray = None
    weights: np.ndarray = None

    @property
    def js(self):
        return np.arange(-self.N, self.N + 1)

    def gamma(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "hyperbolic":
            re = self.sigma + self.mu * (1.0 - np.cosh(s) * np.sin(self.alpha))
            im = self.mu * np.sinh(s) * np.cos(self.alpha)
        else:
            re = self.sigma - 1.0 / (4.0 * self.delta) + self.mu * (1.0 - s**2)
            im = 2.0 * self.mu * s
        return re + 1j * im

    def gamma_prime(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "hyperbolic":
            # gamma'(s) = i mu cos(is - alpha)
            re = -self.mu * np.sinh(s) * np.sin(self.alpha)
            im = self.mu * np.cosh(s) * np.cos(self.alpha)
        else:
            # gamma'(s) = 2 i mu (1 + is)
            re = -2.0 * self.mu * s
            im = 2.0 * self.mu * np.ones_like(s)
        return re + 1j * im

    @property
    def max_real(self):
        return float(np.max(self.nodes.real))

    def point_is_right(self, p):
        """Whether ``p`` lies strictly to the right of the contour.

        Poles of the transform right of the deformed contour are swept
        during the deformation and must be compensated by residues.
        """
        p = complex(p)
        if self.kind == "hyperbolic":
            s = np.arcsinh(p.imag / (self.mu * np.cos(self.alpha)))
        else:
            s = p.imag / (2.0 * self.mu)
        return p.real > complex(self.gamma(s)).real

    def rows(self):
        """(j, Re z_j, Im z_j, Re w_j, Im w_j) table for diagnostics."""
        return np.column_stack([
            self.js.astype(float),
            self.nodes.real, self.nodes.imag,
            self.weights.real, self.weights.imag,
        ])


def _build_nodes(kind, mu, sigma, h, N, alpha=None, delta=None):
    """Nodes/weights from the real/imaginary parametrization.

    Built from j >= 0 and mirrored so conjugate symmetry is exact to the
    last bit.
    """
    s = h * np.arange(0, N + 1)
    if kind == "hyperbolic":
        re = sigma + mu * (1.0 - np.cosh(s) * np.sin(alpha))
        im = mu * np.sinh(s) * np.cos(alpha)
        # w_j = (h / 2 pi) (cosh(s) cos(alpha) + i sinh(s) sin(alpha))
        wre = h / (2.0 * np.pi) * mu * np.cosh(s) * np.cos(alpha)
        wim = h / (2.0 * np.pi) * mu * np.sinh(s) * np.sin(alpha)
    else:
        re = sigma - 1.0 / (4.0 * delta) + mu * (1.0 - s**2)
        im = 2.0 * mu * s
        # w_j = (h / 2 pi) (2 mu + 2 i mu s)
        wre = h / (2.0 * np.pi) * 2.0 * mu * np.ones_like(s)
        wim = h / (2.0 * np.pi) * 2.0 * mu * s
    zpos = re + 1j * im
    wpos = wre + 1j * wim
    nodes = np.concatenate([np.conj(zpos[:0:-1]), zpos])
    weights = np.concatenate([np.conj(wpos[:0:-1]), wpos])
    return nodes, weights


@dataclass(frozen=True)
class TimeWindow:
    """Reuse window ``0 < t0 <= t1`` for the computed resolvents."""

    t0: float
    t1: float

    def __post_init__(self):
        if not (0.0 < self.t0 <= self.t1):
            raise ValueError("need 0 < t0 <= t1")

    @property
    def lam(self):
        return self.t1 / self.t0


def hyperbolic_params(delta, sigma, win, beta, N):
    """Stable optimal hyperbolic contour for a sector ``S_{delta,sigma}``.

    Closed forms (W is the Lambert function, Lambda = t1/t0):

        mu    = (1 - sin((pi-2 delta)/4))^-1 beta / t1
        h     = W( Lambda N pi (pi-2 delta) (1-sin((pi-2 delta)/4))
                   / (beta sin((pi-2 delta)/4)) ) / N
        alpha = (h mu t1 + pi^2 - 2 pi delta) / (4 pi)

    The asymptote half-angle constraint ``0 < alpha < pi/2 - delta`` can
    fail for very small N (the optimum is outside the valid family); this
    raises rather than returning an invalid contour.
    """
    if not (0.0 <= delta < np.pi / 2.0):
        raise ValueError("delta must lie in [0, pi/2)")
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    sn = np.sin((np.pi - 2.0 * delta) / 4.0)
    mu = beta / win.t1 / (1.0 - sn)
    warg = win.lam * N * np.pi * (np.pi - 2.0 * delta) * (1.0 - sn) / (
        beta * sn
    )
    h = lambert_w0(warg) / N
    alpha = (h * mu * win.t1 + np.pi**2 - 2.0 * np.pi * delta) / (4.0 * np.pi)
    if not (0.0 < alpha < np.pi / 2.0 - delta):
        raise ValueError(
            f"alpha = {alpha:.6f} outside (0, pi/2 - delta); the optimal "
            f"contour is invalid for N = {N} (increase N)"
        )
    nodes, weights = _build_nodes("hyperbolic", mu, sigma, h, N, alpha=alpha)
    return Contour(kind="hyperbolic", mu=mu, sigma=sigma, h=h, N=N,
                   alpha=alpha, nodes=nodes, weights=weights)


def _parabolic_objective(h, mu, delta, t0, t1, N, log_eta):
    worst = -np.inf
    e1 = -(2.0 * np.pi / h) * (1.0 - 1.0 / (2.0 * np.sqrt(mu * delta)))
    worst = max(worst, e1)
    for t in (t0, t1):
        e2 = -t / (4.0 * delta) - np.pi**2 / (mu * t * h**2) + 2.0 * np.pi / h
        e3 = -t / (4.0 * delta) + mu * t * (1.0 - (h * N) ** 2)
        e4 = -t / (4.0 * delta) + mu * t + log_eta
        worst = max(worst, e2, e3, e4)
    return worst


def parabolic_params(delta, sigma, win, N, eta):
    """Stable parabolic contour for a parabola region ``P_{delta,sigma}``.

    Selects ``(h, mu)`` minimizing the worst of the four model error
    exponents (two discretization terms, the truncation term, and the
    round-off/stability term involving eta) over ``t in {t0, t1}``, by a
    coarse log-grid scan refined with Nelder-Mead multi-starts; the
    returned point is never worse than the best scanned one.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    if N < 1:
        raise ValueError("N must be >= 1")
    t0, t1 = win.t0, win.t1
    log_eta = np.log(eta)
    mu0 = 1.0 / (4.0 * delta)

    def obj_logged(u):
        h = np.exp(u[0])
        mu = mu0 + np.exp(u[1])
        return _parabolic_objective(h, mu, delta, t0, t1, N, log_eta)

    hs = np.log(np.geomspace(1e-3 / N, 50.0 / N, 240))
    mus = np.log(np.geomspace(1e-6 * mu0 + 1e-9 / t1,
                              1e4 * mu0 + 1e3 * N / t0, 240))
    H, M = np.meshgrid(hs, mus, indexing="ij")
    vals = np.empty_like(H)
    for i in range(H.shape[0]):
        for k in range(H.shape[1]):
            vals[i, k] = obj_logged((H[i, k], M[i, k]))
    flat = np.argsort(vals, axis=None)
    best_u = None
    best_val = np.inf
    for idx in flat[:8]:
        i, k = np.unravel_index(idx, vals.shape)
        res = minimize(obj_logged, x0=[H[i, k], M[i, k]],
                       method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-13,
                                "maxiter": 2000})
        if res.fun < best_val:
            best_val = res.fun
            best_u = res.x
    i, k = np.unravel_index(flat[0], vals.shape)
    if vals[i, k] < best_val:  # grid fallback
        best_val = vals[i, k]
        best_u = (H[i, k], M[i, k])
    h = float(np.exp(best_u[0]))
    mu = float(mu0 + np.exp(best_u[1]))
    nodes, weights = _build_nodes("parabolic", mu, sigma, h, N, delta=delta)
    return Contour(kind="parabolic", mu=mu, sigma=sigma, h=h, N=N,
                   delta=delta, nodes=nodes, weights=weights)


def invert_at_times(values, contour, times, derivative_order=0, win=None):
    """Trapezoid sum ``q_N(t) = sum_j e^{z_j t} w_j v_j`` over the window.

    ``values`` holds one entry per node (scalars or coefficient vectors,
    shape ``(2N+1,)`` or ``(2N+1, m)``); ``derivative_order=1`` multiplies
    each term by ``z_j`` (transform of the time derivative for decaying
    data).  When the node data is conjugate-symmetric (real time signal),
    only the ``j >= 0`` half is summed and the real part returned.  If the
    window the contour was optimized for is passed, times outside it draw
    a warning (the error bound is void there).
    """
    if derivative_order not in (0, 1):
        raise ValueError("derivative_order must be 0 or 1")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    values = np.asarray(values, dtype=complex)
    z = contour.nodes
    w = contour.weights.copy()
    if values.shape[0] != z.shape[0]:
        raise ValueError("values must supply one entry per node")
    if win is not None:
        check_window(times, win)
    if derivative_order == 1:
        w = w * z
    symmetric = bool(
        np.allclose(values[::-1].conj(), values, rtol=1e-13, atol=0.0)
    )
    vec = values.ndim == 2
    N = contour.N
    if symmetric:
        zs, ws, vs = z[N:], w[N:], values[N:]
        scale = np.ones(N + 1)
        scale[1:] = 2.0
        E = np.exp(np.multiply.outer(times, zs)) * (ws * scale)
        out = (E @ vs).real if vec else (E * vs).sum(axis=1).real
    else:
        E = np.exp(np.multiply.outer(times, z)) * w
        out = E @ values if vec else (E * values).sum(axis=1)
    return out


def check_window(times, win):
    """Warn when evaluation times leave the certified window [t0, t1]."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < win.t0 * (1 - 1e-12)) or np.any(
        times > win.t1 * (1 + 1e-12)
    ):
        warnings.warn(
            "evaluation outside [t0, t1]: the contour error bound is void",
            stacklevel=2,
        )


@dataclass(frozen=True)
class ErrorCertificate:
    """A-priori hyperbolic bound: eta amplification + quadrature decay.

    ``total = eta_term + quadrature_term`` bounds ``e^{-sigma t}
    ||q - q_N||`` for t in the window, modulo the unknowable prefactor C
    (which multiplies only the quadrature term and depends on bounds for
    the transform; C = 1 unless the caller knows better).
    """

    eta_term: float
    quadrature_term: float
    C: float

    @property
    def total(self):
        return self.eta_term + self.quadrature_term


def error_certificate(contour, delta, beta, eta, win, C=1.0):
    """Evaluate the printed hyperbolic error bound for this contour.

    The eta-amplification integral ``int_0^inf e^{x - mu t sin(alpha)
    cosh x} dx`` is evaluated at t = t0 (the worst case over the window)
    by adaptive quadrature.
    """
    if contour.kind != "hyperbolic":
        raise ValueError("the a-priori certificate covers hyperbolic "
                         "contours only")
    mu, alpha, N = contour.mu, contour.alpha, contour.N
    k = mu * win.t0 * np.sin(alpha)

    def integrand(x):
        if x > 700.0:
            return 0.0
        arg = x - k * np.cosh(x)
        return np.exp(arg) if arg > -745.0 else 0.0

    integral, _ = quad(integrand, 0.0, np.inf)
    stab = np.exp(beta / (1.0 - np.sin(alpha)))
    eta_term = 2.0 * mu * stab / np.pi * integral * eta
    s = np.sin(np.pi / 4.0 - delta / 2.0)
    log_arg = win.lam * (1.0 / s - 1.0) / beta * N * np.pi * (
        np.pi - 2.0 * delta
    )
    exponent = -(N * np.pi * (np.pi - 2.0 * delta) / 2.0) / np.log(log_arg)
    quad_term = C * stab * np.exp(exponent)
    return ErrorCertificate(eta_term=float(eta_term),
                            quadrature_term=float(quad_term), C=C)
