"""Sparse ultraspherical spectral operators and almost-banded solves.

Differential operators acting on Chebyshev coefficient vectors become banded
infinite matrices once the range is expressed in a higher ultraspherical
basis (Olver & Townsend, SIAM Review 55 (2013) 462-489).  This module
provides the banded building blocks (conversion, differentiation,
multiplication), dense boundary functionals, and a QR solver for the
resulting almost-banded systems: a banded interior operator with a few dense
boundary rows stacked on top.

The almost-banded factorization keeps the dense rows in a rank-``nb``
correction ``U @ V`` while Givens rotations sweep the band, so the solve
costs O(n * bandwidth^2) with full numerical stability.  The inner loop is a
single kernel that is JIT-compiled with numba when available and runs as
plain Python otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .chebseries import chop_coeffs

try:  # pragma: no cover - exercised implicitly by environment
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


__all__ = [
    "BandedOp",
    "AlmostBandedSystem",
    "AlmostBandedSingularError",
    "conversion_op",
    "diff_op",
    "ultra_diff_op",
    "identity_op",
    "mult_op",
    "compose",
    "boundary_row",
    "boundary_rows",
    "solve_almost_banded",
    "residual_norm",
    "HAVE_NUMBA",
]


class AlmostBandedSingularError(np.linalg.LinAlgError):
    """Raised when an almost-banded system is numerically singular."""


@dataclass
class BandedOp:
    """A banded infinite matrix acting between coefficient bases.

    Attributes
    ----------
    lower, upper : int
        Bandwidths: entries vanish outside ``-lower <= j - i <= upper``.
    dom, rng : int
        Basis tags of the domain and range (0 = Chebyshev T,
        ``lam >= 1`` = ultraspherical C^(lam)).
    rect : callable
        ``rect(nrows, ncols)`` returning the top-left section of the
        infinite matrix as a scipy CSR matrix, exactly (no truncation
        artifacts inside the section).
    """

    lower: int
    upper: int
    dom: int
    rng: int
    rect: Callable[[int, int], sp.csr_matrix]
    name: str = ""

    def section(self, n):
        """Square top-left ``n x n`` section."""
        return self.rect(n, n)


def _diag_rect(offset_fns, nr, nc):
    """Assemble a rectangular section from {offset: fn(rows)->values}."""
    mats = []
    for d, fn in offset_fns.items():
        if d >= 0:
            length = min(nr, nc - d)
        else:
            length = min(nr + d, nc)
        if length <= 0:
            continue
        rows = np.arange(length) + (0 if d >= 0 else -d)
        vals = np.asarray(fn(rows), dtype=float)
        mats.append(sp.diags([vals], [d], shape=(nr, nc)))
    if not mats:
        return sp.csr_matrix((nr, nc))
    out = mats[0]
    for m in mats[1:]:
        out = out + m
    return out.tocsr()


def _diag_op(offset_fns, lower, upper, dom, rng, name=""):
    return BandedOp(
        lower=lower,
        upper=upper,
        dom=dom,
        rng=rng,
        rect=lambda nr, nc: _diag_rect(offset_fns, nr, nc),
        name=name,
    )


def conversion_op(lam):
    """Basis conversion ``S_lam``: C^(lam) (or T for lam=0) -> C^(lam+1).

    ``S_0`` has diagonal ``(1, 1/2, 1/2, ...)`` and second superdiagonal
    ``-1/2``; for ``lam >= 1`` the diagonal is ``lam/(lam+k)`` and the
    second superdiagonal ``-lam/(lam+k+2)``.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if lam == 0:
        fns = {
            0: lambda k: np.where(k == 0, 1.0, 0.5),
            2: lambda k: np.full(len(k), -0.5),
        }
    else:
        fns = {
            0: lambda k: lam / (lam + k.astype(float)),
            2: lambda k: -lam / (lam + k.astype(float) + 2.0),
        }
    return _diag_op(fns, 0, 2, lam, lam + 1, name=f"S_{lam}")


def diff_op(order):
    """Differentiation ``D_order``: T coefficients -> C^(order) coefficients.

    From ``d^k/dx^k T_n = 2^(k-1) n (k-1)! C^(k)_(n-k)`` the matrix has the
    single superdiagonal ``order`` with entries
    ``2^(order-1) (order-1)! (j+order)`` in row ``j``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    c = 2.0 ** (order - 1) * math.factorial(order - 1)
    fns = {order: lambda k: c * (k.astype(float) + order)}
    return _diag_op(fns, 0, order, 0, order, name=f"D_{order}")


def ultra_diff_op(lam, order):
    """Differentiation ``C^(lam) -> C^(lam+order)``.

    ``d/dx C^(lam)_n = 2 lam C^(lam+1)_(n-1)`` iterated ``order`` times
    gives a constant superdiagonal ``prod_i 2(lam+i)``.
    """
    if lam < 1 or order < 1:
        raise ValueError("lam and order must be >= 1")
    c = 1.0
    for i in range(order):
        c *= 2.0 * (lam + i)
    fns = {order: lambda k: np.full(len(k), c)}
    return _diag_op(fns, 0, order, lam, lam + order, name=f"D^{order}_{lam}")


def identity_op(lam):
    return _diag_op({0: lambda k: np.ones(len(k))}, 0, 0, lam, lam, name="I")


def _jacobi_matrix(lam, size):
    """Multiplication-by-x matrix ``X_lam`` in basis lam, ``size`` section."""
    k = np.arange(size - 1, dtype=float)
    if lam == 0:
        sub = np.where(k == 0, 1.0, 0.5)  # X[k+1, k]
        sup = np.full(size - 1, 0.5)  # X[k, k+1]
    else:
        sub = (k + 1.0) / (2.0 * (k + lam))  # X[k+1, k]
        kk = k + 1.0
        sup = (kk + 2.0 * lam - 1.0) / (2.0 * (kk + lam))  # X[k, k+1]
    return sp.diags([sub, sup], [-1, 1], shape=(size, size), format="csr")


def mult_op(coeffs, lam, tol=1e-14):
    """Multiplication operator ``M_lam[c]`` in basis ``C^(lam)`` (or T).

    Parameters
    ----------
    coeffs : array
        Chebyshev T coefficients of the multiplier ``c(x)``.
    lam : int
        Basis the operator acts on (and maps into).
    tol : float
        Relative tolerance at which the multiplier series is truncated;
        the resulting bandwidths equal the truncated degree ``m``.

    Notes
    -----
    Built as ``sum_k c_k T_k(X_lam)`` with the Chebyshev three-term
    recurrence applied to the tridiagonal Jacobi matrix ``X_lam``.  Sections
    are produced on a padded ``(n+m+2)`` grid and cut back so every returned
    section agrees with the infinite matrix.
    """
    c = chop_coeffs(np.asarray(coeffs, dtype=float), tol=tol)
    m = len(c) - 1

    def rect(nr, nc):
        if m == 0:
            return (c[0] * sp.eye(max(nr, nc), format="csr"))[:nr, :nc].tocsr()
        P = max(nr, nc) + m + 2
        X = _jacobi_matrix(lam, P)
        Tkm1 = sp.eye(P, format="csr")
        Tk = X.copy()
        M = c[0] * Tkm1 + c[1] * Tk
        for k in range(2, m + 1):
            Tkp1 = 2.0 * (X @ Tk) - Tkm1
            M = M + c[k] * Tkp1
            Tkm1, Tk = Tk, Tkp1
        return M[:nr, :nc].tocsr()

    return BandedOp(lower=m, upper=m, dom=lam, rng=lam, rect=rect, name=f"M[{lam}]")


def compose(*ops):
    """Composition ``ops[0] @ ops[1] @ ... `` (rightmost applies first)."""
    if not ops:
        raise ValueError("compose requires at least one operator")
    out = ops[0]
    for B in ops[1:]:
        A = out
        if A.dom != B.rng:
            raise ValueError(
                f"basis mismatch in composition: {A.name} expects {A.dom}, "
                f"{B.name} produces {B.rng}"
            )

        def rect(nr, nc, A=A, B=B):
            mid = max(min(nr - 1 + A.upper, nc - 1 + B.lower) + 1, 1)
            return (A.rect(nr, mid) @ B.rect(mid, nc)).tocsr()

        out = BandedOp(
            lower=A.lower + B.lower,
            upper=A.upper + B.upper,
            dom=B.dom,
            rng=A.rng,
            rect=rect,
            name=f"{A.name}*{B.name}",
        )
    return out


# ---------------------------------------------------------------------------
# boundary functionals
# ---------------------------------------------------------------------------

def boundary_row(kind, end, ncols):
    """Row vector of a boundary functional applied to T coefficients.

    Parameters
    ----------
    kind : {'value', 'slope', 'second_derivative'}
    end : {-1, 1}
    ncols : int

    Notes
    -----
    ``T_k(s) = s^k``, ``T_k'(s) = s^(k+1) k^2`` and
    ``T_k''(s) = s^k k^2 (k^2 - 1)/3`` at ``s = +-1``.
    """
    if end not in (-1, 1):
        raise ValueError("end must be -1 or +1")
    k = np.arange(ncols, dtype=float)
    sgn = np.ones(ncols) if end == 1 else np.where(np.arange(ncols) % 2 == 0, 1.0, -1.0)
    if kind == "value":
        return sgn.copy()
    if kind == "slope":
        return (sgn * end) * k**2
    if kind == "second_derivative":
        return sgn * k**2 * (k**2 - 1.0) / 3.0
    raise ValueError(f"unknown boundary functional kind: {kind!r}")


_BC_KINDS = {
    "clamped": ("value", "slope"),
    "simply_supported": ("value", "second_derivative"),
}


def boundary_rows(bc_left, bc_right, ncols):
    """Stack the four boundary rows for the given end conditions.

    Row order: left value, left extra, right value, right extra, where the
    extra row is the slope for ``clamped`` and the second derivative for
    ``simply_supported``.
    """
    rows = []
    for end, bc in ((-1, bc_left), (1, bc_right)):
        if bc not in _BC_KINDS:
            raise ValueError(f"unknown boundary condition: {bc!r}")
        for kind in _BC_KINDS[bc]:
            rows.append(boundary_row(kind, end, ncols))
    return np.array(rows)


# ---------------------------------------------------------------------------
# almost-banded systems
# ---------------------------------------------------------------------------

@dataclass
class AlmostBandedSystem:
    """A truncated operator with dense boundary rows on top.

    The ``n x n`` matrix consists of the ``nb`` boundary rows followed by
    the first ``n - nb`` rows of the banded interior operator (the last
    ``nb`` operator rows are dropped to keep the system square).

    Attributes
    ----------
    op : BandedOp
        Interior operator (domain basis = T for the systems built here).
    bcs : sequence of (kind, end)
        Boundary functionals, applied to the domain coefficients.
    n : int
        Truncation size.
    """

    op: BandedOp
    bcs: Sequence
    n: int

    @property
    def nb(self):
        return len(self.bcs)

    def boundary_matrix(self, ncols=None):
        ncols = self.n if ncols is None else ncols
        return np.array([boundary_row(k, e, ncols) for k, e in self.bcs])

    def materialize(self, nrows=None):
        """Sparse ``nrows x nrows`` matrix (default ``n``); exact section."""
        nrows = self.n if nrows is None else nrows
        nb = self.nb
        B = sp.csr_matrix(self.boundary_matrix(nrows))
        A = self.op.rect(nrows - nb, nrows)
        return sp.vstack([B, A]).tocsr()


def _fill_band_storage(system, dtype=np.complex128):
    """Expand the interior operator into the kernel's band layout.

    Returns ``(band, V, L, UR)`` where the composite matrix row ``r``
    (boundary rows first) has its banded part stored at
    ``band[r, col - r + L]``.
    """
    n, nb = system.n, system.nb
    l, u = system.op.lower, system.op.upper
    L = nb + l
    UR = L + max(u - nb, 0)
    band = np.zeros((n, L + UR + 1), dtype=dtype)
    A = system.op.rect(n - nb, n).tocoo()
    rows = A.row + nb
    idx = A.col - rows + L
    band[rows, idx] = A.data
    V = system.boundary_matrix().astype(dtype)
    return band, V, L, UR


def _aqr_kernel(band, Umat, V, rhs, L, UR, nb, n):
    """Givens QR sweep + back substitution on the almost-banded layout.

    ``band`` holds the banded part (row ``r`` entry for column ``q`` at
    ``band[r, q - r + L]``), the dense boundary rows are carried as the
    rank-``nb`` correction ``Umat @ V``.  Everything is modified in place;
    returns ``(x, flag)`` with ``flag = 1`` when a pivot is negligible.
    """
    for j in range(n):
        rmax = j + L
        if rmax > n - 1:
            rmax = n - 1
        for r in range(j + 1, rmax + 1):
            a = band[j, L]
            b = band[r, j - r + L]
            for k in range(nb):
                a += Umat[j, k] * V[k, j]
                b += Umat[r, k] * V[k, j]
            if abs(b) == 0.0:
                continue
            rho = math.hypot(abs(a), abs(b))
            if abs(a) == 0.0:
                c = 0.0
                s = b.conjugate() / rho
            else:
                c = abs(a) / rho
                s = (a / abs(a)) * b.conjugate() / rho
            qmax = j + UR
            if qmax > n - 1:
                qmax = n - 1
            for q in range(j, qmax + 1):
                bj = band[j, q - j + L]
                br = band[r, q - r + L]
                band[j, q - j + L] = c * bj + s * br
                band[r, q - r + L] = -s.conjugate() * bj + c * br
            for k in range(nb):
                uj = Umat[j, k]
                ur = Umat[r, k]
                Umat[j, k] = c * uj + s * ur
                Umat[r, k] = -s.conjugate() * uj + c * ur
            tj = rhs[j]
            tr = rhs[r]
            rhs[j] = c * tj + s * tr
            rhs[r] = -s.conjugate() * tj + c * tr

    x = np.zeros(n, dtype=band.dtype)
    w = np.zeros(nb, dtype=band.dtype)
    dmax = 0.0
    dmin = 1e300
    for j in range(n - 1, -1, -1):
        acc = rhs[j]
        qmax = j + UR
        if qmax > n - 1:
            qmax = n - 1
        for q in range(j + 1, qmax + 1):
            acc -= band[j, q - j + L] * x[q]
        d = band[j, L]
        for k in range(nb):
            acc -= Umat[j, k] * w[k]
            d += Umat[j, k] * V[k, j]
        ad = abs(d)
        if ad > dmax:
            dmax = ad
        if ad < dmin:
            dmin = ad
        if ad == 0.0:
            return x, 1
        x[j] = acc / d
        for k in range(nb):
            w[k] += V[k, j] * x[j]
    if dmin < 1e-14 * dmax:
        return x, 1
    return x, 0


if HAVE_NUMBA:
    _aqr_kernel_jit = numba.njit(cache=False, nogil=True)(_aqr_kernel)
else:  # pragma: no cover
    _aqr_kernel_jit = _aqr_kernel


def solve_almost_banded(system, rhs, use_jit=True):
    """Solve the almost-banded system for Chebyshev coefficients.

    Parameters
    ----------
    system : AlmostBandedSystem
    rhs : array, length ``system.n``
        Boundary data in the first ``nb`` entries, then the range-basis
        coefficients of the right-hand side.
    use_jit : bool
        Use the numba-compiled kernel when available.

    Returns
    -------
    ndarray
        Domain (Chebyshev T) coefficients of the solution.

    Raises
    ------
    AlmostBandedSingularError
        If a pivot is zero or the pivot spread indicates numerical
        singularity.
    """
    n, nb = system.n, system.nb
    rhs = np.asarray(rhs)
    if rhs.shape[0] != n:
        raise ValueError("rhs length must equal system.n")
    dtype = np.complex128
    band, V, L, UR = _fill_band_storage(system, dtype)
    Umat = np.zeros((n, nb), dtype=dtype)
    for k in range(nb):
        Umat[k, k] = 1.0
    r = rhs.astype(dtype).copy()
    kernel = _aqr_kernel_jit if (use_jit and HAVE_NUMBA) else _aqr_kernel
    x, flag = kernel(band, Umat, V, r, L, UR, nb, n)
    if flag:
        raise AlmostBandedSingularError(
            f"almost-banded system of size {n} is numerically singular"
        )
    return x


def residual_norm(system, x, rhs_extended):
    """l2 coefficient norm of the extended residual of a candidate solve.

    The candidate ``x`` is zero-padded to ``len(rhs_extended)`` rows, the
    system is materialized at that size (an exact section of the infinite
    matrix, boundary rows included), and ``||M x - rhs||_2`` is returned,
    so boundary mismatches and the spillover rows beyond ``system.n`` all
    count.  ``len(rhs_extended)`` must be at least ``n + lower + upper +
    nb`` for the result to capture every nonzero row.
    """
    n_ext = len(rhs_extended)
    n, nb = system.n, system.nb
    min_ext = n + system.op.lower + system.op.upper + nb
    if n_ext < min_ext:
        raise ValueError(f"extended size {n_ext} < required {min_ext}")
    M = system.materialize(n_ext)
    xp = np.zeros(n_ext, dtype=np.result_type(x, np.complex128))
    xp[: len(x)] = x
    r = M @ xp - np.asarray(rhs_extended)
    return float(np.linalg.norm(r))
