"""Knockoff design construction.

Given a unit-column design X (n x p, n >= 2p) and a gap vector s, builds the
knockoff copy

    X_tilde = X (I - Sigma^{-1} diag(s)) + U_tilde C,

where Sigma = X'X, U_tilde is an orthonormal basis of the complement of
col(X), and C'C equals the Schur complement 2 diag(s) - diag(s) Sigma^{-1}
diag(s).  The augmented Gram then has the exchangeable block structure

    G = [[Sigma, Sigma - diag(s)], [Sigma - diag(s), Sigma]],

which is what makes a column and its knockoff swappable without changing
inner products.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionError, InfeasibleS, NotPositiveSemiDefinite


@dataclass(frozen=True)
class Equicorrelated:
    """Equal gaps s_i = min(factor * lambda_min(Sigma), 1), factor in (0, 2]."""

    factor: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.factor <= 2.0:
            raise ValueError(f"equicorrelated factor must be in (0, 2], got {self.factor}")


@dataclass(frozen=True)
class ExplicitS:
    """User-supplied gap vector (e.g. from an external SDP solver)."""

    values: np.ndarray


@dataclass(frozen=True)
class KnockoffModel:
    """Original design, its knockoff copy, and the exact augmented Gram.

    ``g`` is assembled from the ideal block structure (Sigma and s), not from
    floating-point inner products, so it is bit-symmetric and exactly
    invariant under pair swaps; estimators should consume ``g`` and the
    feature-response products of ``augmented()``.
    """

    x: np.ndarray
    x_tilde: np.ndarray
    s: np.ndarray
    sigma: np.ndarray
    g: np.ndarray
    lambda_min: float

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def augmented(self):
        """The n x 2p design [X X_tilde]."""
        return np.hstack([self.x, self.x_tilde])

    def products(self, y):
        """Feature-response products [X X_tilde]' y (length 2p)."""
        return self.augmented().T @ np.asarray(y, dtype=float)


def _resolve_s(sv, sigma, lambda_min, p):
    if isinstance(sv, Equicorrelated):
        return np.full(p, min(sv.factor * lambda_min, 1.0))
    if isinstance(sv, ExplicitS):
        s = np.array(sv.values, dtype=float)
        if s.shape != (p,):
            raise ValueError(f"explicit s must have length {p}, got shape {s.shape}")
        if np.any(s < 0):
            raise InfeasibleS("s must be elementwise nonnegative")
        gap = linalg.min_eigenvalue(linalg.symmetrize(2.0 * sigma - np.diag(s)))
        if gap < -1e-10:
            raise InfeasibleS(f"diag(s) exceeds 2*Sigma (min eigenvalue of 2*Sigma - diag(s) = {gap:.3e})")
        return s
    raise TypeError(f"unsupported s variant: {sv!r}")


def build_knockoffs(x, sv):
    """Construct a :class:`KnockoffModel` for design ``x`` and gap choice ``sv``.

    Parameters
    ----------
    x : ndarray, shape (n, p)
        Design with unit-norm columns and n >= 2p.
    sv : Equicorrelated or ExplicitS

    Raises
    ------
    DimensionError
        If n < 2p.
    NotPositiveSemiDefinite
        If Sigma is singular or the Schur complement is indefinite beyond
        tolerance.
    InfeasibleS
        If an explicit s violates diag(s) <= 2*Sigma.
    """
    x = np.array(x, dtype=float)  # private copy; the model freezes its arrays
    n, p = x.shape
    if n < 2 * p:
        raise DimensionError(f"knockoff construction needs n >= 2p, got n={n}, p={p}")
    norms = np.linalg.norm(x, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-6:
        raise ValueError("columns of x must be unit-norm; apply linalg.normalize_columns first")

    sigma = linalg.gram(x)
    lambda_min = linalg.min_eigenvalue(sigma)
    if lambda_min <= 1e-12:
        raise NotPositiveSemiDefinite(0, lambda_min, message=f"Sigma is numerically singular (lambda_min = {lambda_min:.3e})")
    s = _resolve_s(sv, sigma, lambda_min, p)

    # Schur complement of the augmented Gram: 2 diag(s) - diag(s) Sigma^{-1} diag(s).
    # Factored with diagonal pivoting: the equicorrelated boundary s = 2*lambda_min
    # makes it exactly singular, and unpivoted elimination can turn that zero
    # eigenvalue into an amplified negative trailing pivot.
    sigma_inv_d = linalg.solve_spd(sigma, np.diag(s))
    schur = linalg.symmetrize(2.0 * np.diag(s) - np.diag(s) @ sigma_inv_d)
    c = linalg.psd_factor(schur)
    u = linalg.orthonormal_complement(x, p)
    x_tilde = x - x @ sigma_inv_d + u @ c

    off = sigma - np.diag(s)
    off = linalg.symmetrize(off)
    g = np.block([[sigma, off], [off, sigma]])

    for arr in (x, x_tilde, s, sigma, g):
        arr.setflags(write=False)
    return KnockoffModel(x=x, x_tilde=x_tilde, s=s, sigma=sigma, g=g, lambda_min=lambda_min)


def check_ols_feasible(m):
    """True iff max_i s_i < 2 * lambda_min(Sigma) (strict).

    This is the sufficient condition for the augmented Gram to be invertible,
    i.e. for OLS on [X X_tilde] to be well posed.
    """
    return bool(np.max(m.s) < 2.0 * m.lambda_min)
