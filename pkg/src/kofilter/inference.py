"""Antisymmetric statistics, the knockoff+ threshold, the composite-BH
baseline, and the FDR ceiling for naively running the filter on composite
nulls.

All statistics satisfy the antisymmetry contract exactly: swapping
(theta_i, theta_prime_i) negates w_i and touches nothing else.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import InvalidGrid


@dataclass(frozen=True)
class StatVector:
    """Per-variable statistics w plus the candidate thresholds Psi.

    ``psi`` holds the sorted distinct nonzero magnitudes; exact zeros are
    discarded (those variables can never be selected).
    """

    w: np.ndarray
    psi: np.ndarray

    @classmethod
    def from_w(cls, w):
        w = np.asarray(w, dtype=float)
        psi = np.unique(np.abs(w[w != 0.0]))
        return cls(w=w, psi=psi)


@dataclass(frozen=True)
class SelectionOutcome:
    threshold: float
    selected: np.ndarray
    fdp_estimate: float
    target_q: float


def stat_lcd(e):
    """Coefficient-difference statistic w_i = |theta_i| - |theta'_i|."""
    return StatVector.from_w(np.abs(e.theta) - np.abs(e.theta_prime))


def stat_signed_max(e):
    """Signed-max statistic: sgn(|theta_i| - |theta'_i|) * max(|theta_i|, |theta'_i|)."""
    a, b = np.abs(e.theta), np.abs(e.theta_prime)
    return StatVector.from_w(np.sign(a - b) * np.maximum(a, b))


def stat_diff(e):
    """One-sided difference statistic w_i = theta_i - theta'_i."""
    return StatVector.from_w(e.theta - e.theta_prime)


def knockoff_threshold(sv, q):
    """Data-dependent threshold of the knockoff+ filter.

    T = min{ t in Psi : (1 + #{w <= -t}) / max(#{w >= t}, 1) <= q }, or +inf
    if no candidate qualifies.  Selects {j : w_j >= T}.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must be in (0, 1], got {q}")
    w = sv.w
    for t in sv.psi:  # ascending, so the first hit is the minimum
        num = 1 + int(np.sum(w <= -t))
        den = max(int(np.sum(w >= t)), 1)
        fdp = num / den
        if fdp <= q:
            return SelectionOutcome(
                threshold=float(t),
                selected=np.flatnonzero(w >= t),
                fdp_estimate=fdp,
                target_q=q,
            )
    return SelectionOutcome(
        threshold=np.inf, selected=np.empty(0, dtype=int), fdp_estimate=0.0, target_q=q
    )


def composite_bh(beta_hat, boundary_delta, q):
    """Benjamini-Hochberg step-up on boundary p-values.

    P_j = 2 * P(N(boundary_delta, 1) >= |beta_hat_j|), clipped to [0, 1];
    rejects the k* smallest where k* = max{k : P_(k) <= k q / p}.
    ``boundary_delta`` may be a scalar or a per-hypothesis vector (the
    standardized mode divides both beta_hat and the boundary by the OLS
    standard errors before calling this).
    Returns the rejected index set (0-based ndarray).
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must be in (0, 1], got {q}")
    beta_hat = np.asarray(beta_hat, dtype=float)
    pvals = np.clip(2.0 * norm.sf(np.abs(beta_hat) - boundary_delta), 0.0, 1.0)
    p = pvals.size
    order = np.argsort(pvals, kind="stable")
    sorted_p = pvals[order]
    ks = np.flatnonzero(sorted_p <= (np.arange(1, p + 1) * q / p))
    if ks.size == 0:
        return np.empty(0, dtype=int)
    cutoff = sorted_p[ks[-1]]
    return np.flatnonzero(pvals <= cutoff)


@dataclass(frozen=True)
class BoundInput:
    """Inputs for the naive-selection FDR ceiling.

    ``beta_null`` holds the null coefficient magnitudes entering the tail
    term; the worst case sets them all to ``boundary_delta``.
    """

    boundary_delta: float
    sigma2: float
    s: np.ndarray
    beta_null: np.ndarray
    q: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if np.any(np.abs(self.beta_null) > self.boundary_delta + 1e-12):
            raise ValueError("|beta_null_j| must not exceed boundary_delta")


def default_eps_grid():
    """{0} followed by 200 log-spaced points in [1e-4, 10]."""
    return np.concatenate([[0.0], np.logspace(-4, 1, 200)])


def _tail_probability(b, eps):
    """P( (delta/sigma2) * max_j |gamma_j - gamma'_j| > eps ).

    Uses gamma_j - gamma'_j ~ independent N(s_j * beta_j, 2 sigma2 s_j)
    (a consequence of the block structure of G; Monte-Carlo verified in the
    test suite), so the max-tail is one minus a product of Gaussian interval
    probabilities.
    """
    delta = b.boundary_delta
    if delta == 0.0:
        return 0.0  # the max is scaled by delta = 0, never exceeds eps >= 0
    t = eps * b.sigma2 / delta
    mu = b.s * b.beta_null
    sd = np.sqrt(2.0 * b.sigma2 * b.s)
    inside = np.empty_like(mu)
    degenerate = sd == 0.0
    inside[degenerate] = (np.abs(mu[degenerate]) <= t).astype(float)
    ok = ~degenerate
    inside[ok] = norm.cdf((t - mu[ok]) / sd[ok]) - norm.cdf((-t - mu[ok]) / sd[ok])
    return float(1.0 - np.prod(inside))


def naive_fdr_bound(b, eps_grid=None):
    """FDR ceiling min over eps of q * e^eps + tail(eps) for naive selection.

    Returns (bound, argmin_eps) over the supplied grid (default
    :func:`default_eps_grid`).  Refining the grid can only lower the result.

    Raises
    ------
    InvalidGrid
        If the grid is empty or contains negative entries.
    """
    if eps_grid is None:
        eps_grid = default_eps_grid()
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.size == 0:
        raise InvalidGrid("eps grid is empty")
    if np.any(eps_grid < 0):
        raise InvalidGrid("eps grid entries must be >= 0")
    values = np.array([b.q * np.exp(e) + _tail_probability(b, e) for e in eps_grid])
    i = int(np.argmin(values))
    return float(values[i]), float(eps_grid[i])


def naive_bound_curve(b, eps_grid=None):
    """The full (eps, objective) curve backing :func:`naive_fdr_bound`."""
    if eps_grid is None:
        eps_grid = default_eps_grid()
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.size == 0:
        raise InvalidGrid("eps grid is empty")
    if np.any(eps_grid < 0):
        raise InvalidGrid("eps grid entries must be >= 0")
    values = np.array([b.q * np.exp(e) + _tail_probability(b, e) for e in eps_grid])
    return eps_grid, values
