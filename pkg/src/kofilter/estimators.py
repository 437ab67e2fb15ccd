"""Coefficient estimators over the augmented design [X X_tilde].

Every estimator here consumes the data only through the pair
(G, [X X_tilde]' y), which is what guarantees the swap contract: permuting
the products at slots (i, i+p) swaps the i-th original/knockoff estimates and
leaves everything else unchanged.

The LASSO objective keeps the raw least-squares scaling

    || y - A (b + offset) ||_2^2 + lam * ||b||_1

(no 1/2 or 1/n factor), so the zero-kill condition is
lam >= 2 * ||A' (y - A offset)||_inf.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from ._kernels import cd_gram_sweeps
from .errors import ConvergenceFailure, InvalidEpsilon, NotPositiveSemiDefinite
from .knockoff import check_ols_feasible

# The sweep loop may stop once the largest coordinate change drops below
# 1e-8, but running to 1e-10 costs a handful of extra sweeps and keeps
# solutions of column-swapped problems (whose visit orders differ) within
# ~1e-9 of each other, well inside the 1e-8 antisymmetry tolerance.
LASSO_TOL = 1e-10
LASSO_MAX_SWEEPS = 10_000
KKT_TOL = 1e-6


@dataclass(frozen=True)
class EstimatePair:
    """Estimates split as (originals, knockoffs), with any applied shift."""

    theta: np.ndarray
    theta_prime: np.ndarray
    method: str
    shift: np.ndarray

    @property
    def stacked(self):
        return np.concatenate([self.theta, self.theta_prime])


@dataclass(frozen=True)
class FrppNoise:
    """Laplace perturbation of the feature-response products.

    Coordinates j and j+p share the scale 2 * s_j * boundary_delta / epsilon
    (the swap sensitivity of the products under the composite null).
    """

    delta: np.ndarray
    epsilon: float
    boundary_delta: float
    scales: np.ndarray


def _pair(beta, method, shift=None):
    p = beta.shape[0] // 2
    if shift is None:
        shift = np.zeros(p)
    return EstimatePair(theta=beta[:p].copy(), theta_prime=beta[p:].copy(), method=method, shift=shift)


def ols_augmented(m, y):
    """OLS on the augmented design: solve G beta = [X X_tilde]' y.

    Requires max(s) < 2 * lambda_min(Sigma) so that G is invertible.
    """
    if not check_ols_feasible(m):
        raise NotPositiveSemiDefinite(
            0,
            message=(
                "augmented Gram is singular: OLS needs max(s) < 2*lambda_min(Sigma), "
                f"got max(s)={np.max(m.s):.6g}, 2*lambda_min={2 * m.lambda_min:.6g}"
            ),
        )
    beta = linalg.solve_spd(m.g, m.products(y))
    return _pair(beta, "ols")


def _cd_solve(g, c, lam):
    """Run the coordinate-descent kernel until the KKT residual is met.

    Convergence is declared on max coordinate change < LASSO_TOL; if the KKT
    residual is still above KKT_TOL the sweeps continue with a tightened
    change tolerance until either the residual bound holds or the sweep cap
    is reached.
    """
    d = c.shape[0]
    g = np.ascontiguousarray(g, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    b = np.zeros(d)
    budget = LASSO_MAX_SWEEPS
    tol = LASSO_TOL
    while True:
        used, _ = cd_gram_sweeps(g, c, float(lam), tol, budget, b)
        budget -= used
        kkt = _kkt_residual(g, c, lam, b)
        if kkt <= KKT_TOL:
            return b
        if budget <= 0:
            raise ConvergenceFailure(
                f"coordinate descent hit the {LASSO_MAX_SWEEPS}-sweep cap with KKT residual {kkt:.3e}",
                residual=kkt,
            )
        tol /= 100.0


def _kkt_residual(g, c, lam, b):
    """Max violation of the subgradient conditions at b (Gram form)."""
    grad = 2.0 * (c - g @ b)  # negative gradient of the smooth part
    active = b != 0
    viol_zero = np.maximum(np.abs(grad[~active]) - lam, 0.0)
    viol_active = np.abs(grad[active] - lam * np.sign(b[active]))
    worst = 0.0
    if viol_zero.size:
        worst = max(worst, float(np.max(viol_zero)))
    if viol_active.size:
        worst = max(worst, float(np.max(viol_active)))
    return worst


def lasso_augmented(m, y, lam, offset=None):
    """LASSO on the augmented design by cyclic coordinate descent.

    Minimizes ``||y - A(b + offset)||^2 + lam ||b||_1`` with A = [X X_tilde].
    A zero offset is the plain augmented LASSO; offset (0; delta) gives the
    inner-shift variant.  The solve runs on the Gram form (G, A'y), so the
    data path honors the swap contract.

    Raises
    ------
    ConvergenceFailure
        If the sweep cap is reached with KKT residual above 1e-6.
    """
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    d = 2 * m.p
    if offset is None:
        offset = np.zeros(d)
    offset = np.asarray(offset, dtype=float)
    if offset.shape != (d,):
        raise ValueError(f"offset must have length {d}, got shape {offset.shape}")
    c = m.products(y) - m.g @ offset
    b = _cd_solve(m.g, c, lam)
    return _pair(b, f"lasso(lam={lam:g})")


def shift_estimates(e, delta_prime):
    """Add ``delta_prime`` to the knockoff-half estimates (originals untouched)."""
    delta_prime = np.asarray(delta_prime, dtype=float)
    if delta_prime.shape != e.theta_prime.shape:
        raise ValueError("delta_prime must have length p")
    return replace(
        e,
        theta_prime=e.theta_prime + delta_prime,
        shift=e.shift + delta_prime,
        method=e.method + "+shift",
    )


def _laplace_inverse_cdf(u, scales):
    """Laplace(0, scale) draws from uniforms via the inverse CDF.

    Exact zeros come out for zero scales (so a zero boundary reduces the
    perturbed pipeline bit-for-bit to the unperturbed one).
    """
    t = u - 0.5
    mag = np.clip(1.0 - 2.0 * np.abs(t), 1e-300, None)
    return -scales * np.sign(t) * np.log(mag)


def frpp_perturb(m, y, epsilon, boundary_delta, rng_seed):
    """Feature-response products plus calibrated Laplace noise.

    Returns ``([X X_tilde]' y + Delta, FrppNoise)`` with Delta_j and
    Delta_{j+p} drawn independently from Laplace(0, 2 s_j boundary_delta /
    epsilon).  Deterministic given ``rng_seed``.
    """
    if epsilon <= 0:
        raise InvalidEpsilon(f"epsilon must be > 0, got {epsilon}")
    if boundary_delta < 0:
        raise ValueError(f"boundary_delta must be >= 0, got {boundary_delta}")
    scales = np.concatenate([m.s, m.s]) * (2.0 * boundary_delta / epsilon)
    rng = np.random.default_rng(rng_seed)
    u = rng.random(2 * m.p)
    delta = _laplace_inverse_cdf(u, scales)
    noise = FrppNoise(delta=delta, epsilon=float(epsilon), boundary_delta=float(boundary_delta), scales=scales)
    return m.products(y) + delta, noise


def frpp_estimate(m, perturbed_products, estimator="ols", lam=1.0):
    """Apply an estimator to (G, perturbed products).

    ``estimator`` is "ols" (solve G beta = products) or "lasso" (coordinate
    descent on b'Gb - 2 products'b + lam ||b||_1).  Either way the data enters
    only through (G, products), so permuting product slots (i, i+p) swaps the
    corresponding estimates exactly.
    """
    c = np.asarray(perturbed_products, dtype=float)
    if c.shape != (2 * m.p,):
        raise ValueError(f"perturbed_products must have length {2 * m.p}")
    if estimator == "ols":
        if not check_ols_feasible(m):
            raise NotPositiveSemiDefinite(
                0,
                message=(
                    "augmented Gram is singular: OLS needs max(s) < 2*lambda_min(Sigma), "
                    f"got max(s)={np.max(m.s):.6g}, 2*lambda_min={2 * m.lambda_min:.6g}"
                ),
            )
        beta = linalg.solve_spd(m.g, c)
        return _pair(beta, "frpp-ols")
    if estimator == "lasso":
        b = _cd_solve(m.g, c, lam)
        return _pair(b, f"frpp-lasso(lam={lam:g})")
    raise ValueError(f"unknown estimator {estimator!r} (expected 'ols' or 'lasso')")
