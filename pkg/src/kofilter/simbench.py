"""Monte-Carlo harness: synthetic FDR/power experiments and lemma verifiers.

Trials are pure functions of (config, trial seed); method specs at the same
(axis index, trial index) share the data seed so methods are compared on
identical draws, and the reduction over trials is deterministic regardless of
worker scheduling.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import binomtest

from . import linalg
from .errors import AssertionFailure, KofilterError
from .estimators import (
    frpp_estimate,
    frpp_perturb,
    lasso_augmented,
    ols_augmented,
    shift_estimates,
)
from .inference import (
    SelectionOutcome,
    composite_bh,
    knockoff_threshold,
    stat_diff,
    stat_lcd,
    stat_signed_max,
)
from .knockoff import Equicorrelated, build_knockoffs

# Per-method default equicorrelation factors; OLS-backed methods must stay
# strictly below 2 or the augmented Gram goes singular.
DEFAULT_S_FACTOR = {"naive": 1.0, "s-ols": 1.8, "frpp": 1.0, "s-las1": 2.0, "s-las2": 2.0}

_STATS = {"signed_max": stat_signed_max, "lcd": stat_lcd}


@dataclass(frozen=True)
class MethodSpec:
    """A selection method plus its knobs.

    name: naive | s-ols | frpp | s-las1 | s-las2 | bh
    estimator: "ols" or "lasso" (naive and frpp only)
    lam: l1 penalty for lasso-based estimators
    delta_prime: knockoff-half shift for s-ols (None -> the null boundary)
    sided: "one" (difference statistic) or "two" for s-ols
    epsilon: FRPP noise/level parameter
    s_factor: equicorrelation factor (None -> per-method default)
    statistic: "signed_max" or "lcd" for two-sided methods
    standardize: composite-BH standardized mode
    """

    name: str
    estimator: str = "ols"
    lam: float = 1.0
    delta_prime: float | None = None
    sided: str = "two"
    epsilon: float = 1.0
    s_factor: float | None = None
    statistic: str = "signed_max"
    standardize: bool = False
    label: str | None = None

    def display_label(self):
        if self.label:
            return self.label
        if self.name == "naive":
            return f"naive-{self.estimator}"
        if self.name == "s-ols":
            return f"s-ols-{self.sided}sided"
        if self.name == "frpp":
            return f"frpp-{self.estimator}"
        if self.name == "bh":
            return "composite-bh" + ("-std" if self.standardize else "")
        return self.name


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    k: int
    rho: float
    sigma2: float
    boundary_delta: float
    null_dist: str  # "uniform" | "rademacher"
    amplitude: float
    q: float
    trials: int
    method: MethodSpec
    seed: int
    alt_sign: str = "random"  # "random" | "positive"

    def __post_init__(self):
        if not 0 <= self.k <= self.p:
            raise ValueError("need 0 <= k <= p")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be < 1")
        if self.null_dist not in ("uniform", "rademacher"):
            raise ValueError(f"unknown null_dist {self.null_dist!r}")
        if self.alt_sign not in ("random", "positive"):
            raise ValueError(f"unknown alt_sign {self.alt_sign!r}")


@dataclass(frozen=True)
class TrialMetrics:
    fdp: float
    power: float
    num_selected: int
    threshold: float
    seed: tuple


@dataclass(frozen=True)
class SweepCell:
    axis_value: float
    method: str
    mean_fdr: float
    se_fdr: float
    mean_power: float
    se_power: float
    trials: int


@dataclass(frozen=True)
class SweepResult:
    axis_name: str
    axis_values: tuple
    cells: tuple


class TrialError(KofilterError):
    """A trial inside a sweep cell failed; carries the cell coordinate."""

    def __init__(self, axis_value, method, trial_index, cause):
        self.axis_value = axis_value
        self.method = method
        self.trial_index = trial_index
        super().__init__(
            f"trial {trial_index} failed (axis value {axis_value}, method {method}): {cause}"
        )


def generate_design(n, p, rho, seed):
    """Design with rows iid N(0, S), S_ij = rho^|i-j|, columns normalized.

    Sampling uses the AR(1) recursion (the analytic Cholesky of S exploited
    through its band structure), so it is O(np) and deterministic under seed.
    """
    if not abs(rho) < 1:
        raise ValueError("|rho| must be < 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, p))
    if rho == 0.0:
        return linalg.normalize_columns(z)
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    innov = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        x[:, j] = rho * x[:, j - 1] + innov * z[:, j]
    return linalg.normalize_columns(x)


def generate_coefficients(p, k, boundary_delta, null_dist, amplitude, seed, alt_sign="random"):
    """Coefficient vector with k alternatives and boundary-bounded nulls.

    Alternatives sit at k uniformly chosen positions with value
    +-amplitude (sign random, or all + when alt_sign="positive"); nulls draw
    from U[-delta, delta] or delta * Rademacher.  Returns (beta, null_set).
    """
    if k > p:
        raise ValueError("need k <= p")
    rng = np.random.default_rng(seed)
    alt = np.sort(rng.choice(p, size=k, replace=False))
    null_set = np.setdiff1d(np.arange(p), alt)
    beta = np.zeros(p)
    if null_dist == "uniform":
        beta[null_set] = rng.uniform(-boundary_delta, boundary_delta, size=null_set.size)
    elif null_dist == "rademacher":
        beta[null_set] = boundary_delta * rng.choice([-1.0, 1.0], size=null_set.size)
    else:
        raise ValueError(f"unknown null_dist {null_dist!r}")
    if alt_sign == "positive":
        signs = np.ones(k)
    else:
        signs = rng.choice([-1.0, 1.0], size=k)
    beta[alt] = amplitude * signs
    return beta, null_set


def select_on_data(x, y, method, q, boundary_delta, sigma2=1.0, frpp_seed=0):
    """Run one selection method on given (x, y).

    ``x`` must have unit-norm columns.  Returns (outcome, estimate) where
    ``estimate`` is the EstimatePair for knockoff methods and None for BH.
    FRPP thresholds at the corrected level q/e^eps while ``outcome.target_q``
    reports that corrected level; callers report the configured q.  A zero
    boundary adds no noise, so no level correction applies and FRPP reduces
    exactly to the naive pipeline.
    """
    p = x.shape[1]
    if method.name == "bh":
        sigma = linalg.gram(x)
        beta_hat = linalg.solve_spd(sigma, x.T @ y)
        if method.standardize:
            se = np.sqrt(sigma2 * np.diag(linalg.solve_spd(sigma, np.eye(p))))
            selected = composite_bh(beta_hat / se, boundary_delta / se, q)
        else:
            selected = composite_bh(beta_hat, boundary_delta, q)
        outcome = SelectionOutcome(
            threshold=np.nan, selected=selected, fdp_estimate=np.nan, target_q=q
        )
        return outcome, None

    factor = method.s_factor if method.s_factor is not None else DEFAULT_S_FACTOR[method.name]
    model = build_knockoffs(x, Equicorrelated(factor))
    stat = _STATS[method.statistic]
    level = q

    if method.name == "naive":
        if method.estimator == "ols":
            est = ols_augmented(model, y)
        else:
            est = lasso_augmented(model, y, method.lam)
    elif method.name == "s-ols":
        dp = boundary_delta if method.delta_prime is None else method.delta_prime
        est = shift_estimates(ols_augmented(model, y), np.full(p, dp))
        if method.sided == "one":
            stat = stat_diff
    elif method.name == "frpp":
        products, _ = frpp_perturb(model, y, method.epsilon, boundary_delta, frpp_seed)
        est = frpp_estimate(model, products, method.estimator, method.lam)
        if boundary_delta > 0:
            level = q / math.exp(method.epsilon)
    elif method.name == "s-las1":
        est = shift_estimates(lasso_augmented(model, y, method.lam), np.full(p, boundary_delta))
    elif method.name == "s-las2":
        offset = np.concatenate([np.zeros(p), np.full(p, boundary_delta)])
        est = lasso_augmented(model, y, method.lam, offset)
    else:
        raise ValueError(f"unknown method {method.name!r}")

    outcome = knockoff_threshold(stat(est), level)
    return outcome, est


@dataclass(frozen=True)
class TrialDetail:
    outcome: SelectionOutcome
    estimate: object  # EstimatePair | None
    null_set: np.ndarray
    beta: np.ndarray


def _trial_seeds(trial_seed):
    if isinstance(trial_seed, np.random.SeedSequence):
        ss = trial_seed
    else:
        ss = np.random.SeedSequence(trial_seed)
    return ss.spawn(4)  # design, coefficients, response noise, frpp noise


def run_trial_detail(cfg, trial_seed):
    """Full pipeline for one trial; exposes the outcome plus intermediates."""
    sd_design, sd_coef, sd_noise, sd_frpp = _trial_seeds(trial_seed)
    x = generate_design(cfg.n, cfg.p, cfg.rho, sd_design)
    beta, null_set = generate_coefficients(
        cfg.p, cfg.k, cfg.boundary_delta, cfg.null_dist, cfg.amplitude, sd_coef, cfg.alt_sign
    )
    rng = np.random.default_rng(sd_noise)
    y = x @ beta + math.sqrt(cfg.sigma2) * rng.standard_normal(cfg.n)
    outcome, est = select_on_data(
        x, y, cfg.method, cfg.q, cfg.boundary_delta, sigma2=cfg.sigma2, frpp_seed=sd_frpp
    )
    return TrialDetail(outcome=outcome, estimate=est, null_set=null_set, beta=beta)


def run_trial(cfg, trial_seed):
    """One trial reduced to its metrics (fdp, power, count, threshold)."""
    detail = run_trial_detail(cfg, trial_seed)
    selected = detail.outcome.selected
    n_false = int(np.isin(selected, detail.null_set).sum())
    fdp = n_false / max(selected.size, 1)
    power = (selected.size - n_false) / cfg.k if cfg.k else 0.0
    if isinstance(trial_seed, tuple):
        seed_id = trial_seed
    elif isinstance(trial_seed, (int, np.integer)):
        seed_id = (int(trial_seed),)
    else:
        seed_id = (str(trial_seed),)
    return TrialMetrics(
        fdp=fdp,
        power=power,
        num_selected=int(selected.size),
        threshold=float(detail.outcome.threshold),
        seed=seed_id,
    )


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


def _run_cell(args):
    cfg, axis_value, axis_index = args
    metrics = []
    for t in range(cfg.trials):
        try:
            metrics.append(run_trial(cfg, (cfg.seed, axis_index, t)))
        except Exception as exc:
            raise TrialError(axis_value, cfg.method.display_label(), t, exc) from exc
    mean_fdr, se_fdr = _mean_se([m.fdp for m in metrics])
    mean_power, se_power = _mean_se([m.power for m in metrics])
    return SweepCell(
        axis_value=axis_value,
        method=cfg.method.display_label(),
        mean_fdr=mean_fdr,
        se_fdr=se_fdr,
        mean_power=mean_power,
        se_power=se_power,
        trials=cfg.trials,
    )


def run_sweep(base, axis_name, axis_values, methods, jobs=1):
    """Sweep one axis ("amplitude" or "rho") over a list of methods.

    The seed schedule is a pure function of (base.seed, axis index, trial
    index) and is shared across methods so every method sees the same data.
    """
    if axis_name not in ("amplitude", "rho"):
        raise ValueError(f"axis must be 'amplitude' or 'rho', got {axis_name!r}")
    tasks = []
    for ai, aval in enumerate(axis_values):
        for method in methods:
            cfg = replace(base, method=method, **{axis_name: aval})
            tasks.append((cfg, aval, ai))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_run_cell, tasks))
    else:
        cells = [_run_cell(t) for t in tasks]
    return SweepResult(axis_name=axis_name, axis_values=tuple(axis_values), cells=tuple(cells))


# ----------------------------------------------------------------------------
# Monte-Carlo verifiers
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifierReport:
    name: str
    trials: int
    details: dict


def verify_lemma_frp_mean(m, beta, null_set, sigma2, trials, seed, boundary_delta):
    """Check the moments of the feature-response product differences.

    For d_j = (x_j - x~_j)' y the claims are E d_j = s_j beta_j, hence
    |E d_j| <= s_j * boundary_delta on nulls, and Var d_j = 2 sigma2 s_j.
    Means are tested at 3 Monte-Carlo SEs; variances at
    max(5%, 4 * sqrt(2/trials)) relative error.

    Raises AssertionFailure listing the violating indices.
    """
    beta = np.asarray(beta, dtype=float)
    null_set = np.asarray(null_set, dtype=int)
    if np.any(np.abs(beta[null_set]) > boundary_delta + 1e-12):
        raise ValueError("null coefficients must satisfy |beta_j| <= boundary_delta")
    diff = (m.x - m.x_tilde).T  # p x n
    mu_y = m.x @ beta
    p, n = diff.shape
    total = np.zeros(p)
    total_sq = np.zeros(p)
    rng = np.random.default_rng(seed)
    done = 0
    while done < trials:
        size = min(4096, trials - done)
        yb = mu_y[:, None] + math.sqrt(sigma2) * rng.standard_normal((n, size))
        d = diff @ yb
        total += d.sum(axis=1)
        total_sq += (d * d).sum(axis=1)
        done += size
    mean = total / trials
    var = (total_sq - trials * mean**2) / (trials - 1)
    se = np.sqrt(var / trials)

    var_tol = max(0.05, 4.0 * math.sqrt(2.0 / trials))
    bound_bad, identity_bad, var_bad = [], [], []
    for j in null_set:
        if abs(mean[j]) > m.s[j] * boundary_delta + 3 * se[j]:
            bound_bad.append(int(j))
        if abs(mean[j] - m.s[j] * beta[j]) > 3 * se[j]:
            identity_bad.append(int(j))
        expected_var = 2.0 * sigma2 * m.s[j]
        if expected_var > 1e-12 and abs(var[j] / expected_var - 1.0) > var_tol:
            var_bad.append(int(j))
    details = {
        "max_abs_mean": float(np.max(np.abs(mean[null_set]))) if null_set.size else 0.0,
        "mean_bound": float(np.max(m.s[null_set]) * boundary_delta) if null_set.size else 0.0,
        "var_tol": var_tol,
    }
    if bound_bad or identity_bad or var_bad:
        raise AssertionFailure(
            "feature-response product moments violated: "
            f"|mean|<=s*delta failed at {bound_bad}, mean=s*beta failed at {identity_bad}, "
            f"variance=2*sigma2*s failed at {var_bad}",
            details={"bound": bound_bad, "identity": identity_bad, "variance": var_bad, **details},
        )
    return VerifierReport(name="frp-mean", trials=trials, details=details)


def verify_sign_property(cfg, trials, seed):
    """Null statistic signs are iid Rademacher when the boundary is zero.

    Pools the nonzero null-statistic signs over trials: two-sided binomial
    test for P(+) = 1/2 at size 0.01, and within-trial lag-1 sign
    autocorrelation below 3/sqrt(#pairs).
    """
    if cfg.boundary_delta != 0:
        raise ValueError("sign property verification requires boundary_delta = 0")
    if cfg.method.name == "bh":
        raise ValueError("sign property applies to knockoff statistics, not BH")
    pos = neg = 0
    first, second = [], []
    for t in range(trials):
        detail = run_trial_detail(cfg, (seed, 0, t))
        wn = _null_stats(cfg, detail)
        signs = np.sign(wn[wn != 0.0])
        pos += int((signs > 0).sum())
        neg += int((signs < 0).sum())
        if signs.size >= 2:
            first.append(signs[:-1])
            second.append(signs[1:])
    count = pos + neg
    if count == 0:
        raise AssertionFailure("no nonzero null statistics observed", details={"trials": trials})
    test = binomtest(pos, count, 0.5)
    frequency = pos / count
    a = np.concatenate(first)
    b = np.concatenate(second)
    npairs = a.size
    if npairs > 1 and a.std() > 0 and b.std() > 0:
        lag1 = float(np.corrcoef(a, b)[0, 1])
    else:
        lag1 = 0.0
    lag_limit = 3.0 / math.sqrt(max(npairs, 1))
    details = {
        "positive_frequency": frequency,
        "binomial_pvalue": test.pvalue,
        "count": count,
        "lag1_autocorr": lag1,
        "lag1_limit": lag_limit,
    }
    if test.pvalue < 0.01:
        raise AssertionFailure(
            f"null sign frequency {frequency:.4f} rejects P(+)=1/2 (p-value {test.pvalue:.3g} < 0.01)",
            details=details,
        )
    if abs(lag1) >= lag_limit:
        raise AssertionFailure(
            f"lag-1 sign autocorrelation {lag1:.4f} exceeds {lag_limit:.4f}", details=details
        )
    return VerifierReport(name="sign-property", trials=trials, details=details)


def _null_stats(cfg, detail):
    """Recompute the trial's statistic vector and slice the null coordinates."""
    est = detail.estimate
    if est is None:
        raise ValueError("method produced no estimate pair")
    if cfg.method.name == "s-ols" and cfg.method.sided == "one":
        stat = stat_diff
    else:
        stat = _STATS[cfg.method.statistic]
    return stat(est).w[detail.null_set]


def verify_ratio_bound(cfg, epsilon, trials, seed):
    """Marginal surrogate for the conditional sign-odds bound under FRPP.

    The conditional bound P(W>0|...)/P(W<0|...) <= e^eps implies the pooled
    marginal ratio obeys the same bound; only the marginal is estimable, so
    that is what is checked: pooled-over-nulls P^(W>0)/P^(W<0) <= e^eps +
    3 SE (delta-method SE).
    """
    if cfg.method.name != "frpp":
        raise ValueError("ratio bound verification requires an FRPP method")
    pos = neg = 0
    for t in range(trials):
        detail = run_trial_detail(cfg, (seed, 0, t))
        wn = _null_stats(cfg, detail)
        pos += int((wn > 0).sum())
        neg += int((wn < 0).sum())
    count = pos + neg
    if count == 0 or neg == 0:
        raise AssertionFailure(
            "ratio undefined: no negative null statistics observed",
            details={"pos": pos, "neg": neg},
        )
    fpos = pos / count
    fneg = neg / count
    ratio = pos / neg
    se_ratio = math.sqrt(fpos * fneg / count) / fneg**2
    limit = math.exp(epsilon)
    details = {
        "ratio": ratio,
        "se_ratio": se_ratio,
        "e_eps_reference": limit,
        "pos": pos,
        "neg": neg,
    }
    if ratio > limit + 3 * se_ratio:
        raise AssertionFailure(
            f"sign-odds ratio {ratio:.4f} exceeds e^eps = {limit:.4f} + 3*SE ({se_ratio:.4f})",
            details=details,
        )
    return VerifierReport(name="ratio-bound", trials=trials, details=details)
