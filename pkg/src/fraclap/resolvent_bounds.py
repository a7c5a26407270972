"""Certified resolvent bounds and contour-region selection for the pencil.

For the beam pencil ``T(z) = rho z^2 + d2( (a + z^nu b) d2 )`` the numerical
range argument yields a computable region of ``z`` where the resolvent obeys
``||T(z)^{-1}|| <= 1/eps`` in the energy graph norm.  In polar form
``z = r e^{i theta}`` the certificate reads: either ``Re z >= eps``, or
``0 < |(2-nu) theta| < pi`` together with

    r^(nu/2) >= C * sqrt( max(eps/r - cos(theta), 0) *
                |cos((nu-1) theta)| ) / |sin((2-nu) theta)|
              + sqrt(2) * eps * r^(nu/2-1) / |sin((2-nu) theta)|,

with ``C = 2 sqrt(M)`` and ``M = max a/b``.  Both sides are monotone in
``r`` and ``eps``, so radial thresholds ``r*(theta, eps)`` and pointwise
certified levels ``eps(z)`` follow from bisection; at ``eps = 0`` and
``|theta| >= pi/2`` the threshold has the closed form

    r*(theta, 0) = [ 4 M |cos(theta)| |cos((nu-1) theta)|
                     / sin((2-nu) theta)^2 ]^(1/nu).

The boundary curve ``r*(theta, 0)`` encloses every point where the pencil
may be singular; contours must stay in its exterior.  This module also
selects the sector / parabola opening parameters used by the quadrature
contours so that they respect that exclusion region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .pencil import BranchCutError

__all__ = [
    "BoundParams",
    "r_star",
    "epsilon_bound",
    "epsilon_bound_many",
    "select_sector_delta",
    "select_parabola_delta",
    "emit_region_curves",
    "asymptote_angle",
]


@dataclass
class BoundParams:
    """Data the resolvent certificate depends on: ``M = max a/b`` and nu."""

    M: float
    nu: float

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be positive")
        if not (0.0 < self.nu < 2.0):
            raise ValueError("nu must be in (0, 2)")

    @property
    def C(self):
        return 2.0 * np.sqrt(self.M)

    @classmethod
    def from_pencil(cls, pencil):
        return cls(M=pencil.stiffness_ratio(), nu=pencil.nu)


def asymptote_angle(nu):
    """Angle at which the nu < 1 exclusion region opens to infinity."""
    if nu >= 1.0:
        return np.pi
    return np.pi / (2.0 - nu)


def _angle_admissible(nu, theta):
    # strict interior of 0 < |(2-nu) theta| < pi, with an ulp guard so that
    # the rounded asymptote angle pi/(2-nu) itself counts as inadmissible
    t = abs((2.0 - nu) * theta)
    return 0.0 < t < np.pi * (1.0 - 64.0 * np.finfo(float).eps)


def _abs_cos_factor(nu, theta):
    """|cos((nu-1) theta)|, snapped to 0 when theta rounds to a pinch angle.

    The curve closes at theta = +-pi/(2(nu-1)) where this factor vanishes;
    the nearest double to that angle evaluates to ~eps instead of 0, which
    the 1/nu power would inflate to ~1e-10.  Values within a few ulps of a
    zero of the cosine are therefore flushed.
    """
    w = np.asarray((nu - 1.0) * theta, dtype=float)
    c = np.abs(np.cos(w))
    near = np.abs(w - (np.round(w / np.pi - 0.5) + 0.5) * np.pi)
    out = np.where(near <= 64.0 * np.finfo(float).eps * np.maximum(
        1.0, np.abs(w)), 0.0, c)
    return out if out.ndim else float(out)


def _G(bp, r, theta, eps):
    """Certificate margin; condition holds at (r, theta, eps) iff G >= 0."""
    nu = bp.nu
    s = np.abs(np.sin((2.0 - nu) * theta))
    cnu = _abs_cos_factor(nu, theta)
    lhs = r ** (nu / 2.0)
    t1 = bp.C * np.sqrt(np.maximum(eps / r - np.cos(theta), 0.0) * cnu) / s
    t2 = np.sqrt(2.0) * eps * r ** (nu / 2.0 - 1.0) / s
    return lhs - t1 - t2


def r_star(bp, theta, eps=0.0):
    """Smallest radius on ray ``theta`` at which the bound is certified.

    Requires the admissible range ``0 < |(2-nu) theta| < pi`` (rays at or
    beyond the nu < 1 asymptote angle are never certified and raise);
    returns 0.0 when the whole ray is certified.
    """
    theta = float(theta)
    if abs(theta) > np.pi or not _angle_admissible(bp.nu, theta):
        raise ValueError(
            f"theta = {theta} violates 0 < |(2-nu) theta| < pi"
        )
    candidates = []
    c = np.cos(theta)
    if eps == 0.0:
        if abs(theta) < np.pi / 2.0 or c == 0.0:
            return 0.0
        nu = bp.nu
        s2 = np.sin((2.0 - nu) * theta) ** 2
        val = 4.0 * bp.M * abs(c) * _abs_cos_factor(nu, theta) / s2
        return float(val ** (1.0 / nu))
    if c > 0.0:
        candidates.append(eps / c)
    if _angle_admissible(bp.nu, theta):
        lo, hi = 0.0, max(1.0, eps)
        for _ in range(200):
            if _G(bp, hi, theta, eps) >= 0.0:
                break
            hi *= 2.0
        else:
            hi = np.inf
        if np.isfinite(hi):
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                if _G(bp, mid, theta, eps) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            candidates.append(hi)
    if not candidates:
        return np.inf
    return float(min(candidates))


def epsilon_bound_many(bp, z):
    """Vectorized largest certified ``eps`` at each point of ``z``.

    Combines the right-half-plane branch (``eps = Re z`` when positive)
    with a fixed-count vector bisection of the curve condition; entries
    outside every certified region come back 0.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any((z.imag == 0.0) & (z.real <= 0.0)):
        raise BranchCutError("epsilon_bound requires z outside (-inf, 0]")
    r = np.abs(z)
    theta = np.angle(z)
    out = np.maximum(z.real, 0.0)
    ok = (r > 0.0) & _vec_admissible(bp.nu, theta)
    if np.any(ok):
        rr, tt = r[ok], theta[ok]
        lo = np.zeros_like(rr)
        hi = np.maximum(rr, 1.0)
        # expand upper brackets until the condition fails everywhere
        for _ in range(80):
            g = _G(bp, rr, tt, hi)
            grow = g >= 0.0
            if not np.any(grow):
                break
            hi[grow] *= 2.0
        feasible = _G(bp, rr, tt, lo) >= 0.0  # eps = 0 certified at all?
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            g = _G(bp, rr, tt, mid)
            take = g >= 0.0
            lo = np.where(take, mid, lo)
            hi = np.where(take, hi, mid)
        curve_eps = np.where(feasible, lo, 0.0)
        out_ok = out[ok]
        out[ok] = np.maximum(out_ok, curve_eps)
    return out


def _vec_admissible(nu, theta):
    t = np.abs((2.0 - nu) * theta)
    return (t > 0.0) & (t < np.pi * (1.0 - 64.0 * np.finfo(float).eps))


def epsilon_bound(bp, z):
    """Largest ``eps >= 0`` with ``||T(z)^{-1}|| <= 1/eps`` certified."""
    return float(epsilon_bound_many(bp, np.array([z]))[0])


def _sector_angle_of(z, sigma):
    """Sector opening delta(z) = pi - |arg(z - sigma)|."""
    return np.pi - np.abs(np.angle(z - sigma))


def select_sector_delta(bp, sigma):
    """Smallest sector half-opening ``delta`` excluding the singular region.

    The sector ``S_{delta,sigma} = { |arg(z - sigma)| < pi - delta }`` must
    not meet the region enclosed by ``r*(theta, 0)``; equivalently
    ``delta >= sup`` of ``pi - |arg(z - sigma)|`` over that region, and the
    supremum is attained along the boundary curve (plus, for nu < 1, in the
    asymptote direction).  Dense sweep with local refinement; the result is
    within 1e-6 of the supremum.

    A warning is emitted when delta comes out within 1e-4 of pi/2, where
    the hyperbolic contour family degenerates (this always happens for
    sigma = 0 since the curve is tangent to the imaginary axis at the
    origin).
    """
    nu = bp.nu
    theta_max = asymptote_angle(nu)
    guard = 1e-9

    def delta_at(theta):
        r = r_star(bp, theta, 0.0)
        z = r * np.exp(1j * theta)
        return _sector_angle_of(z, sigma)

    u_log = np.geomspace(1e-12, theta_max - np.pi / 2.0 - guard, 3000)
    u_lin = np.linspace(guard, theta_max - np.pi / 2.0 - guard, 3000)
    thetas = np.pi / 2.0 + np.unique(np.concatenate([u_log, u_lin]))
    vals = np.array([delta_at(t) for t in thetas])
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo = thetas[max(i - 1, 0)]
    hi = thetas[min(i + 1, len(thetas) - 1)]
    if hi > lo:
        from scipy.optimize import minimize_scalar

        res = minimize_scalar(
            lambda t: -delta_at(t), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, float(-res.fun))
    if nu < 1.0:
        best = max(best, np.pi - theta_max)
    best = min(best, np.pi / 2.0)
    if best > np.pi / 2.0 - 1e-4:
        warnings.warn(
            f"sector opening delta = {best:.6f} is within 1e-4 of pi/2; the "
            "hyperbolic contour family degenerates (is sigma too small?)",
            stacklevel=2,
        )
    return best


def select_parabola_delta(bp, t0):
    """Opening ``delta`` and shift ``sigma`` for the parabolic region.

    For nu >= 1 the parabola ``Re z = -delta Im(z)^2`` with
    ``delta = 1/(4M)`` encloses the exclusion region (its nu = 1 boundary
    is exactly that parabola and the region shrinks as nu grows), so
    ``(1/(4M), 0)`` is returned.

    For nu < 1 no parabola contains the full region.  The parabola is
    taken through the boundary point at depth ``Re z = -ln(1e16)/t0``
    (and flattened further if the boundary bulges past it at shallower
    depths), so every singular point it fails to enclose has
    ``Re z <= -36.8/t0`` and a residue swept by the contour deformation
    is suppressed by ``e^(Re z t) <= 1e-16`` for all t >= t0.
    """
    if bp.nu >= 1.0:
        return 1.0 / (4.0 * bp.M), 0.0
    target = -np.log(1e-16) / t0
    theta_max = asymptote_angle(bp.nu)

    def f(theta):
        return r_star(bp, theta, 0.0) * abs(np.cos(theta)) - target

    lo = np.pi / 2.0 + 1e-12
    hi = theta_max - 1e-12
    if f(lo) > 0 or f(hi) < 0:  # pragma: no cover - curve shape guarantees
        raise RuntimeError("parabola intersection bracket failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    theta_dag = 0.5 * (lo + hi)
    # containment up to the through-point: the parabola through any
    # boundary point has polar radius |cos t|/(delta sin^2 t), so the
    # largest admissible delta is the minimum of that ratio along the
    # boundary; it is attained at theta_dag when the ratio is monotone
    # (the usual shape), and the sweep below guards the general case.
    thetas = np.linspace(np.pi / 2.0 + 1e-9, theta_dag, 800)
    ratios = [
        abs(np.cos(th)) / (r_star(bp, th, 0.0) * np.sin(th) ** 2)
        for th in thetas
    ]
    return float(min(ratios)), 0.0


def emit_region_curves(nu, M, eps_list=(0.0, 1.0, 5.0, 10.0), n_theta=2000):
    """Sample ``r*(theta, eps)`` for plotting the certified regions.

    Returns ``(theta, radii)`` where ``theta`` has ``n_theta`` values in
    ``(-theta_max, theta_max)`` and ``radii`` is a dict mapping each eps
    to an array (``inf`` marks uncertifiable directions).
    """
    bp = BoundParams(M=M, nu=nu)
    theta_max = asymptote_angle(nu)
    guard = 1e-9
    theta = np.linspace(-theta_max + guard, theta_max - guard, n_theta)
    radii = {}
    for eps in eps_list:
        vals = np.empty(len(theta))
        for i, t in enumerate(theta):
            vals[i] = float(eps) if t == 0.0 else r_star(bp, t, eps)
        radii[eps] = vals
    return theta, radii
