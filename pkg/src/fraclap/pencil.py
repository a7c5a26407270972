"""The fractional Kelvin-Voigt beam pencil and its spectral discretization.

The model is the transverse displacement ``y(x, t)`` of a viscoelastic
Euler-Bernoulli beam on ``x in [-1, 1]``:

    rho(x) y_tt + d^2/dx^2 [ (a(x) + b(x) D_t^nu) y_xx ] = f(x, t),

with a fractional time derivative ``D_t^nu`` of order ``nu in (0, 2)``
(Caputo or Riemann-Liouville) in the damping term.  Laplace transforming in
time turns this into a one-parameter family of two-point boundary value
problems: for each complex ``z`` off the branch cut,

    S(z) u := z^2 u + (1/rho) [ (a + z^nu b) u'' ]'' = K(z),

where ``K`` collects the transformed forcing and the initial data.  This
module builds ``S(z)`` as an almost-banded ultraspherical system (boundary
rows on top of a banded interior operator, see :mod:`fraclap.speclin`) and
assembles the right-hand side ``K(z)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import speclin as sl
from .chebseries import chebcoeffs, chebpts, clenshaw_chebyshev, l2_norm

__all__ = [
    "BeamPencil",
    "InitialData",
    "Forcing",
    "UndampedError",
    "BranchCutError",
    "ForcingPoleError",
    "PencilDiscretization",
    "graph_norm",
    "rho_weighted_norm",
    "nondimensionalize",
    "NondimensionalScales",
    "power_z",
]

_POSITIVITY_POINTS = 200


class UndampedError(ValueError):
    """Raised when the damping coefficient vanishes identically."""


class BranchCutError(ValueError):
    """Raised when ``z^nu`` is requested on the branch cut (-inf, 0]."""


class ForcingPoleError(ValueError):
    """Raised when the transformed forcing is evaluated at its own pole."""


def power_z(z, nu):
    """Principal branch of ``z^nu``; rejects the cut ``Re z <= 0, Im z = 0``.

    The pencil is analytic on the cut plane only; hitting the cut means the
    contour was misconfigured, so this is an error rather than a convention.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0:
        raise BranchCutError(f"z = {z} lies on the branch cut (-inf, 0]")
    return complex(np.exp(nu * np.log(z)))


def _as_coeffs(fn_or_coeffs, tol=1e-15):
    if fn_or_coeffs is None:
        return np.zeros(1)
    if callable(fn_or_coeffs):
        return chebcoeffs(lambda x: fn_or_coeffs(x) + 0.0 * x, tol=tol)
    return np.atleast_1d(np.asarray(fn_or_coeffs, dtype=float))


@dataclass
class BeamPencil:
    """Coefficients and structure of the beam pencil.

    Parameters
    ----------
    a, b, rho : callable or coefficient array
        Elastic stiffness ``a(x) > 0``, viscous stiffness ``b(x) > 0`` and
        mass density ``rho(x) > 0`` (Chebyshev T coefficients accepted).
    nu : float
        Fractional order, ``0 < nu < 2``, ``nu != 1`` allowed and ``nu = 1``
        gives classical Kelvin-Voigt damping.
    bc_left, bc_right : {'clamped', 'simply_supported'}
    fractional_type : {'caputo', 'riemann_liouville'}

    Raises
    ------
    UndampedError
        If ``b`` is identically zero (the undamped problem has a purely
        oscillatory closed form and no sectorial resolvent; callers are
        expected to branch to that closed form).
    ValueError
        If a coefficient is not strictly positive on [-1, 1] (checked at
        200 Chebyshev points) or parameters are out of range.
    """

    a: object
    b: object
    rho: object
    nu: float
    bc_left: str = "clamped"
    bc_right: str = "clamped"
    fractional_type: str = "caputo"

    def __post_init__(self):
        if not (0.0 < self.nu < 2.0):
            raise ValueError(f"nu must be in (0, 2), got {self.nu}")
        if self.fractional_type not in ("caputo", "riemann_liouville"):
            raise ValueError(f"unknown fractional_type {self.fractional_type!r}")
        for bc in (self.bc_left, self.bc_right):
            if bc not in ("clamped", "simply_supported"):
                raise ValueError(f"unknown boundary condition {bc!r}")
        self.a_coeffs = _as_coeffs(self.a)
        self.b_coeffs = _as_coeffs(self.b)
        self.rho_coeffs = _as_coeffs(self.rho)
        x = chebpts(_POSITIVITY_POINTS)
        bx = clenshaw_chebyshev(self.b_coeffs, x)
        if np.max(np.abs(bx)) == 0.0:
            raise UndampedError(
                "damping coefficient b is identically zero; use the undamped "
                "closed form instead"
            )
        for name, coeffs in (("a", self.a_coeffs), ("b", self.b_coeffs),
                             ("rho", self.rho_coeffs)):
            vals = clenshaw_chebyshev(coeffs, x)
            if np.min(vals) <= 0.0:
                raise ValueError(
                    f"coefficient {name}(x) must be strictly positive on "
                    f"[-1, 1]; min sampled value {np.min(vals):.3e}"
                )
        self.inv_rho_coeffs = chebcoeffs(
            lambda x: 1.0 / clenshaw_chebyshev(self.rho_coeffs, x)
        )
        self._disc_cache = {}

    # -- resolvent-bound data -------------------------------------------------
    def stiffness_ratio(self):
        """max over [-1,1] of a(x)/b(x), refined beyond the sampling grid."""
        from scipy.optimize import minimize_scalar

        def ratio(x):
            return clenshaw_chebyshev(self.a_coeffs, x) / clenshaw_chebyshev(
                self.b_coeffs, x
            )

        x = chebpts(max(_POSITIVITY_POINTS, 256))
        vals = ratio(x)
        i = int(np.argmax(vals))
        best = float(vals[i])
        lo = x[max(i - 1, 0)]
        hi = x[min(i + 1, len(x) - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda t: -ratio(np.array([t]))[0], bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-12},
            )
            best = max(best, float(-res.fun))
        return best

    def bcs(self):
        rows = []
        for end, bc in ((-1, self.bc_left), (1, self.bc_right)):
            for kind in sl._BC_KINDS[bc]:
                rows.append((kind, end))
        return rows

    def discretize(self, n, n_extended=None):
        key = (n, n_extended)
        disc = self._disc_cache.get(key)
        if disc is None:
            disc = PencilDiscretization(self, n, n_extended)
            self._disc_cache[key] = disc
        return disc


@dataclass
class InitialData:
    """Initial displacement ``y0`` and velocity ``y1`` (T coefficients).

    A warning is emitted when ``y0`` violates the displacement boundary
    conditions by more than 1e-10 relative to its size.
    """

    y0: object = None
    y1: object = None

    def __post_init__(self):
        self.y0_coeffs = _as_coeffs(self.y0)
        self.y1_coeffs = _as_coeffs(self.y1)

    def check_compatibility(self, pencil, warn=None):
        import warnings

        warn = warnings.warn if warn is None else warn
        scale = max(np.max(np.abs(self.y0_coeffs)), 1e-300)
        n = len(self.y0_coeffs)
        rows = sl.boundary_rows(pencil.bc_left, pencil.bc_right, n)
        mism = np.abs(rows @ self.y0_coeffs)
        if np.max(mism) > 1e-10 * scale:
            warn(
                "initial displacement violates the boundary conditions "
                f"(max mismatch {np.max(mism):.2e})",
                stacklevel=2,
            )


@dataclass
class Forcing:
    """Separable forcing ``f(x, t) = amplitude * g(x) * s(t)``.

    ``kind`` selects ``s``: 'sin' (``sin(omega t)``), 'cos'
    (``cos(omega t)``) or 'zero'.  The Laplace transform has simple poles
    at ``+- i omega`` for the trigonometric kinds.
    """

    kind: str = "zero"
    omega: float = 0.0
    amplitude: float = 1.0
    profile: object = None

    def __post_init__(self):
        if self.kind not in ("sin", "cos", "zero"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind != "zero" and self.omega <= 0.0:
            raise ValueError("omega must be positive for trigonometric forcing")
        self.profile_coeffs = _as_coeffs(self.profile)

    def transform(self, z):
        """`s^(z)`` of the time factor; raises at the poles ``+-i omega``."""
        if self.kind == "zero":
            return 0.0
        z = complex(z)
        denom = z * z + self.omega**2
        if denom == 0.0:
            raise ForcingPoleError(
                f"forcing transform evaluated at its pole z = {z}"
            )
        if self.kind == "sin":
            return self.omega / denom
        return z / denom

    def poles(self):
        """Poles of the transformed time factor in the upper half plane."""
        if self.kind == "zero":
            return []
        return [1j * self.omega]

    def residue(self, pole):
        """Residue of ``s^`` at ``pole`` (one of +-i omega)."""
        if self.kind == "sin":
            return self.omega / (2.0 * pole)
        if self.kind == "cos":
            return 0.5
        return 0.0


class PencilDiscretization:
    """Cached spectral sections of one pencil at truncation ``n``.

    Stores the z-independent sparse pieces at an extended size so both the
    square solve section and the residual spillover rows come from exact
    sections of the infinite matrices:

    * ``A`` : chain of the elastic term, ``M_4[1/rho] D^2_{2->4} M_2[a] D^2_{0->2}``
    * ``B`` : same chain with ``b`` (also the Caputo initial-data operator)
    * ``S`` : conversion ``T -> C^(4)``, the identity term

    The ``z``-dependent matrix is ``A + z^nu B + z^2 S``.
    """

    def __init__(self, pencil, n, n_extended=None):
        self.pencil = pencil
        self.n = n
        self.nb = 4
        conv = sl.compose(
            sl.conversion_op(3), sl.conversion_op(2), sl.conversion_op(1),
            sl.conversion_op(0),
        )
        m4 = sl.mult_op(pencil.inv_rho_coeffs, 4)
        d24 = sl.ultra_diff_op(2, 2)
        d02 = sl.diff_op(2)
        chain_a = sl.compose(m4, d24, sl.mult_op(pencil.a_coeffs, 2), d02)
        chain_b = sl.compose(m4, d24, sl.mult_op(pencil.b_coeffs, 2), d02)
        self.lower = max(chain_a.lower, chain_b.lower, conv.lower)
        self.upper = max(chain_a.upper, chain_b.upper, conv.upper)
        if n_extended is None:
            n_extended = n + self.lower + self.upper + self.nb + 8
        self.n_ext = n_extended
        self.A = chain_a.rect(self.n_ext, self.n_ext).tocsr()
        self.B = chain_b.rect(self.n_ext, self.n_ext).tocsr()
        self.S = conv.rect(self.n_ext, self.n_ext).tocsr()
        self.bcs = pencil.bcs()
        self.boundary = np.array(
            [sl.boundary_row(k, e, self.n_ext) for k, e in self.bcs]
        )

    def op_at(self, z):
        """BandedOp view of ``A + z^nu B + z^2 S`` (exact sections)."""
        znu = power_z(z, self.pencil.nu)
        z = complex(z)
        A, B, S = self.A, self.B, self.S

        def rect(nr, nc):
            if nr > self.n_ext or nc > self.n_ext:
                raise ValueError("requested section beyond cached extension")
            return (A[:nr, :nc] + znu * B[:nr, :nc] + z * z * S[:nr, :nc]).tocsr()

        return sl.BandedOp(
            lower=self.lower, upper=self.upper, dom=0, rng=4, rect=rect,
            name="pencil",
        )

    def system_at(self, z):
        return sl.AlmostBandedSystem(op=self.op_at(z), bcs=self.bcs, n=self.n)

    def rhs_vectors(self, init, forcing):
        """z-independent right-hand-side vectors at the extended size.

        Returns ``(Cg, Cy0, Cy1, By0, By1)``: the conversion chain applied
        to ``amplitude * g/rho``, ``y0`` and ``y1``, and the damping chain
        applied to ``y0`` and ``y1`` (for the Caputo initial terms).
        """
        ne = self.n_ext

        def pad(c):
            out = np.zeros(ne)
            m = min(len(c), ne)
            out[:m] = c[:m]
            return out

        rho = self.pencil.rho_coeffs
        if forcing.kind == "zero":
            g_over_rho = np.zeros(1)
        else:
            prof = forcing.profile_coeffs
            g_over_rho = chebcoeffs(
                lambda x: forcing.amplitude
                * clenshaw_chebyshev(prof, x)
                / clenshaw_chebyshev(rho, x)
            )
        y0 = pad(init.y0_coeffs)
        y1 = pad(init.y1_coeffs)
        return (
            self.S @ pad(g_over_rho),
            self.S @ y0,
            self.S @ y1,
            self.B @ y0,
            self.B @ y1,
        )

    def full_rhs(self, z, init, forcing, vectors=None):
        """Solver-facing rhs: boundary zeros + K(z) rows, extended length."""
        if vectors is None:
            vectors = self.rhs_vectors(init, forcing)
        Cg, Cy0, Cy1, By0, By1 = vectors
        z = complex(z)
        nu = self.pencil.nu
        K = forcing.transform(z) * Cg + z * Cy0 + Cy1
        if self.pencil.fractional_type == "caputo":
            if nu < 1.0:
                K = K + power_z(z, nu - 1.0) * By0
            else:
                K = K + power_z(z, nu - 1.0) * By0 + power_z(z, nu - 2.0) * By1
        rhs = np.zeros(self.n_ext, dtype=complex)
        rhs[self.nb:] = K[: self.n_ext - self.nb]
        return rhs

    def solve_at(self, z, init, forcing, vectors=None):
        """Certifiable solve at one node: returns (coeffs, residual_vector).

        The residual vector is the extended-coefficient-space residual
        (boundary mismatches followed by interior rows), exact for the
        infinite matrix.
        """
        rhs_ext = self.full_rhs(z, init, forcing, vectors)
        system = self.system_at(z)
        x = sl.solve_almost_banded(system, rhs_ext[: self.n])
        M = system.materialize(self.n_ext)
        xp = np.zeros(self.n_ext, dtype=complex)
        xp[: self.n] = x
        resid = M @ xp - rhs_ext
        return x, resid


def graph_norm(pencil, z, u_coeffs):
    """Energy graph norm ``sqrt( int a |u''|^2 + |z|^2 int rho |u|^2 )``.

    This is the norm in which the resolvent certificate
    ``||T(z)^{-1} v||_graph <= (1/eps) ||v||_{L^2_rho}`` holds.
    """
    u_coeffs = np.asarray(u_coeffs)
    d2 = sl.diff_op(2)
    n = len(u_coeffs)
    upp = d2.rect(n, n) @ u_coeffs
    bend = l2_norm(upp, lam=2, weight_coeffs=pencil.a_coeffs)
    mass = l2_norm(u_coeffs, lam=0, weight_coeffs=pencil.rho_coeffs)
    return float(np.hypot(bend, abs(complex(z)) * mass))


def rho_weighted_norm(pencil, v_coeffs):
    """``L^2_rho`` norm ``sqrt( int rho |v|^2 dx )`` of a Chebyshev series."""
    return float(l2_norm(np.asarray(v_coeffs), lam=0,
                         weight_coeffs=pencil.rho_coeffs))


@dataclass
class NondimensionalScales:
    """Scales linking the physical beam to the unit-interval pencil."""

    length: float
    time: float
    rho_star: float
    a_star: float
    b_star: float


def nondimensionalize(
    rho_A,
    E0,
    E1,
    inertia,
    length,
    nu,
    frequency_scale=1.0,
    width_fraction=0.1,
):
    """Map physical beam parameters to the dimensionless pencil coefficients.

    Parameters
    ----------
    rho_A : float
        Mass per unit length per unit width (kg/m^2).
    E0, E1 : float
        Elastic and viscous moduli (Pa, Pa s^nu).
    inertia : float
        Second moment of area I (m^4).
    length : float
        Beam length (m); the spatial variable is rescaled to [-1, 1] by
        half the length.
    nu : float
        Fractional order (scales the viscous modulus by T^(2-nu)).
    frequency_scale : float
        Reference frequency (Hz); the time scale is its inverse.
    width_fraction : float
        Cross-section width as a fraction of length (defines the linear
        mass density rho_0 = rho_A / width).

    Returns
    -------
    NondimensionalScales
        With ``rho_star = 1``, ``a_star = E0 I T^2 / (rho_0 L^4)`` and
        ``b_star = E1 I T^(2-nu) / (rho_0 L^4)``.
    """
    width = width_fraction * length
    rho_0 = rho_A / width
    L = length / 2.0
    T = 1.0 / frequency_scale
    denom = rho_0 * L**4
    a_star = E0 * inertia * T**2 / denom
    b_star = E1 * inertia * T ** (2.0 - nu) / denom
    return NondimensionalScales(
        length=L, time=T, rho_star=1.0, a_star=a_star, b_star=b_star
    )
