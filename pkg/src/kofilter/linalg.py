"""Dense linear-algebra kernels used by the knockoff construction and estimators.

All routines are deterministic, operate on float64 ndarrays and never mutate
their inputs.  Matrices are plain 2-D ``numpy.ndarray`` objects; symmetric
matrices are stored in full with both triangles equal exactly (helpers here
guarantee that by mirroring one triangle).
"""

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceFailure,
    NotPositiveSemiDefinite,
    RankDeficient,
    ZeroColumn,
)

# Pivots of a PSD factorization may graze zero from below due to roundoff;
# values in (-PIVOT_TOL, 0] are clamped to 0, anything below is a hard failure.
PIVOT_TOL = 1e-12


def normalize_columns(m):
    """Scale every column of ``m`` to unit Euclidean norm.

    Parameters
    ----------
    m : ndarray, shape (n, p)

    Returns
    -------
    ndarray, shape (n, p)
        New array whose columns have norm 1 (within 1e-12), directions
        preserved.

    Raises
    ------
    ZeroColumn
        If any column has norm below 1e-14.
    """
    m = np.asarray(m, dtype=float)
    norms = np.linalg.norm(m, axis=0)
    bad = np.flatnonzero(norms < 1e-14)
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    return m / norms


def gram(m):
    """Return ``m.T @ m`` with exact (stored) symmetry.

    The upper triangle is computed and mirrored so that the result is
    bit-symmetric, not merely symmetric up to roundoff.
    """
    m = np.asarray(m, dtype=float)
    g = m.T @ m
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def symmetrize(a):
    """Mirror the upper triangle of ``a`` onto the lower one (bit-exact)."""
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def min_eigenvalue(s):
    """Smallest eigenvalue of a symmetric matrix.

    Accurate to 1e-10 relative to the spectral radius (LAPACK symmetric
    eigensolver).

    Raises
    ------
    ConvergenceFailure
        If the underlying iteration fails to converge.
    """
    s = np.asarray(s, dtype=float)
    try:
        vals = np.linalg.eigvalsh(s)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"symmetric eigensolver did not converge: {exc}") from exc
    return float(vals[0])


def cholesky(s):
    """Lower-triangular L with ``L @ L.T == s`` for PSD ``s``.

    Uses an outer-product factorization with pivot clamping: pivots in
    (-1e-12, 0] are treated as exactly zero (and the remainder of that
    column is zeroed), so exactly-singular PSD inputs factor cleanly.

    Raises
    ------
    NotPositiveSemiDefinite
        If any pivot falls below -1e-12.
    """
    a = np.array(s, dtype=float)
    n = a.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if pivot < -PIVOT_TOL:
            raise NotPositiveSemiDefinite(j, pivot)
        if pivot <= 0.0:
            # PSD-singular direction: pivot clamped, column stays zero.
            continue
        d = np.sqrt(pivot)
        L[j, j] = d
        if j + 1 < n:
            L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / d
    return L


def psd_factor(a):
    """Factor C with ``C.T @ C == a`` for PSD ``a`` of any conditioning.

    Diagonally pivoted outer-product Cholesky: the largest remaining diagonal
    is eliminated first, so exactly-singular directions are deferred to the
    end where they show up as a clean ~0 block instead of an amplified
    negative pivot.  The rank cutoff and the indefiniteness floor are both
    relative to the largest diagonal entry.

    Raises
    ------
    NotPositiveSemiDefinite
        If a remaining diagonal entry is negative beyond roundoff scale.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    scale = max(float(np.max(np.abs(np.diag(a)))), 0.0)
    tol = 64.0 * n * np.finfo(float).eps * scale
    tol = max(tol, PIVOT_TOL)
    perm = np.arange(n)
    rank = n
    for j in range(n):
        rem = np.diag(a)[j:]
        m = j + int(np.argmax(rem))
        pivot = a[m, m]
        if pivot < -tol:
            raise NotPositiveSemiDefinite(int(perm[m]), float(pivot))
        if pivot <= tol:
            tail_min = float(np.min(rem))
            if tail_min < -tol:
                k = j + int(np.argmin(rem))
                raise NotPositiveSemiDefinite(int(perm[k]), tail_min)
            rank = j
            break
        if m != j:
            a[[j, m]] = a[[m, j]]
            a[:, [j, m]] = a[:, [m, j]]
            perm[[j, m]] = perm[[m, j]]
        d = np.sqrt(pivot)
        a[j, j] = d
        if j + 1 < n:
            a[j + 1 :, j] /= d
            a[j + 1 :, j + 1 :] -= np.outer(a[j + 1 :, j], a[j + 1 :, j])
    L = np.tril(a)
    L[:, rank:] = 0.0
    inv = np.argsort(perm)
    return L.T[:, inv]


def _cholesky_strict(s):
    """Cholesky factor of a strictly PD matrix (every pivot > 1e-12)."""
    L = cholesky(s)
    piv = np.diag(L) ** 2
    weak = np.flatnonzero(piv <= PIVOT_TOL)
    if weak.size:
        j = int(weak[0])
        raise NotPositiveSemiDefinite(
            j, float(piv[j]), message=f"matrix is not strictly positive definite (pivot {j} = {piv[j]:.3e} <= 1e-12)"
        )
    return L


def solve_spd(s, rhs):
    """Solve ``s @ x = rhs`` for strictly positive definite symmetric ``s``.

    ``rhs`` may be a vector or a matrix of right-hand sides.  Residual is
    bounded by 1e-9 * ||rhs|| for well-scaled systems.

    Raises
    ------
    NotPositiveSemiDefinite
        If ``s`` is not strictly positive definite.
    """
    rhs = np.asarray(rhs, dtype=float)
    L = _cholesky_strict(s)
    z = scipy.linalg.solve_triangular(L, rhs, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(L.T, z, lower=False, check_finite=False)


def orthonormal_complement(m, k):
    """k orthonormal columns orthogonal to the column space of ``m``.

    Built from a Householder QR of ``m`` (deterministic LAPACK output) with a
    fixed sign convention: each returned column is flipped so that its
    largest-magnitude entry is positive.  Satisfies ``U.T @ U = I_k`` and
    ``U.T @ m = 0`` to 1e-10.

    Raises
    ------
    RankDeficient
        If the numerical rank of ``m`` is below its column count
        (smallest |R| diagonal < 1e-10).
    """
    m = np.asarray(m, dtype=float)
    n, p = m.shape
    if n < p + k:
        raise ValueError(f"need n >= p + k rows, got n={n}, p={p}, k={k}")
    if k == 0:
        return np.zeros((n, 0))
    q, r = scipy.linalg.qr(m, mode="full", check_finite=False)
    rdiag = np.abs(np.diag(r)[:p])
    if rdiag.size < p or np.min(rdiag) < 1e-10:
        raise RankDeficient(
            f"design has numerical rank < {p} (smallest R diagonal {np.min(rdiag) if rdiag.size else 0.0:.3e})"
        )
    u = q[:, p : p + k].copy()
    # Fixed sign convention so repeated builds are identical.
    anchor = np.abs(u).argmax(axis=0)
    signs = np.sign(u[anchor, np.arange(k)])
    signs[signs == 0] = 1.0
    return u * signs
