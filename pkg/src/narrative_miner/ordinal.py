"""Proportional-odds (cumulative logit) regression.

Model: ``logit P(Y <= j | x) = alpha_j - x . beta`` for ``j = 1..K-1``, so a
positive ``beta`` shifts mass toward higher categories and ``exp(beta)`` is
the odds ratio of a higher category per unit of ``x``.

Fitting is Newton's method on the exact log-likelihood, in the coordinates
``(alpha_1, log(alpha_2 - alpha_1), ..., beta)`` that keep the intercepts
ordered. Derivatives are analytic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import expit

SIGN_CONVENTION = "logit P(Y <= j) = alpha_j - beta * x"
SIGN_NOTE = (
    "minus form: beta > 0 shifts mass to higher categories and exp(beta) > 1 is the odds ratio "
    "of a higher category per unit covariate; the alpha_j + beta * x form would flip the sign of beta"
)
MAX_ITER = 200
GRAD_TOL = 1e-8


class OrdinalError(ValueError):
    pass


@dataclass(frozen=True)
class PomFit:
    intercepts: np.ndarray
    beta: np.ndarray
    covariance: np.ndarray = field(repr=False)
    log_likelihood: float = 0.0
    n: int = 0
    K: int = 0
    iterations: int = 0
    gradient_norm: float = 0.0

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.intercepts, self.beta])

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    @property
    def t_values(self) -> np.ndarray:
        return self.params / self.standard_errors

    @property
    def p_values(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.t_values))

    @property
    def slope(self) -> float:
        return float(self.beta[0])

    @property
    def slope_se(self) -> float:
        return float(self.standard_errors[self.K - 1])


@dataclass(frozen=True)
class OddsRatioReport:
    or_value: float
    ci_low: float
    ci_high: float


def _design(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise OrdinalError("covariate must be a vector or a matrix")
    return x


def _check(x, y, K):
    x = _design(x)
    y = np.asarray(y)
    if len(x) != len(y):
        raise OrdinalError("x and y differ in length")
    if np.any(y != np.floor(y)):
        raise OrdinalError("categories must be integers")
    y = y.astype(np.int64)
    K = int(y.max()) if K is None else int(K)
    if K < 2:
        raise OrdinalError("need at least two categories")
    if y.min() < 1 or y.max() > K:
        raise OrdinalError(f"categories must lie in 1..{K}")
    missing = sorted(set(range(1, K + 1)) - set(np.unique(y).tolist()))
    if missing:
        raise OrdinalError(f"category missing from data: {missing}")
    if len(y) <= K:
        raise OrdinalError("need more observations than categories")
    return x, y, K


def _cum_probs(alpha: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``P(Y <= j)`` for ``j = 0..K`` (bounds included), one row per case."""
    n = len(eta)
    inner = expit(alpha[None, :] - eta[:, None])
    return np.hstack([np.zeros((n, 1)), inner, np.ones((n, 1))])


def category_probabilities(alpha, beta, x) -> np.ndarray:
    x = _design(x)
    cum = _cum_probs(np.asarray(alpha, float), x @ np.atleast_1d(np.asarray(beta, float)))
    return np.diff(cum, axis=1)


def _loglik_parts(alpha, beta, x, y, K):
    """Log-likelihood, gradient and Hessian in ``(alpha, beta)``."""
    n, p = x.shape
    m = K - 1 + p
    eta = x @ beta
    # linear predictor at the upper and lower cut of each case
    a_ext = np.concatenate(([-np.inf], alpha, [np.inf]))
    zu = a_ext[y] - eta
    zl = a_ext[y - 1] - eta
    fu, fl = expit(zu), expit(zl)
    top = y == K
    bottom = y == 1
    # complementary form avoids cancellation in the upper tail
    prob = np.where(top, expit(-zl), np.where(bottom, fu, fu - fl))
    if np.any(prob <= 0) or not np.all(np.isfinite(prob)):
        return -np.inf, None, None
    ll = float(np.log(prob).sum())

    du = np.where(top, 0.0, fu * (1.0 - fu))
    dl = np.where(bottom, 0.0, fl * (1.0 - fl))
    d2u = du * (1.0 - 2.0 * fu)
    d2l = dl * (1.0 - 2.0 * fl)
    gu = du / prob
    gl = -dl / prob
    huu = d2u / prob - gu * gu
    hll = -d2l / prob - gl * gl
    hul = -gu * gl

    # Jacobians of the two cut predictors w.r.t. (alpha, beta)
    ju = np.zeros((n, m))
    jl = np.zeros((n, m))
    rows = np.arange(n)
    ju[rows[~top], y[~top] - 1] = 1.0
    jl[rows[~bottom], y[~bottom] - 2] = 1.0
    ju[:, K - 1 :] = -x * (~top)[:, None]
    jl[:, K - 1 :] = -x * (~bottom)[:, None]

    grad = ju.T @ gu + jl.T @ gl
    hess = (ju * huu[:, None]).T @ ju + (jl * hll[:, None]).T @ jl
    cross = (ju * hul[:, None]).T @ jl
    hess += cross + cross.T
    return ll, grad, hess


def _to_alpha(theta, K):
    a1 = theta[0]
    inc = np.exp(theta[1 : K - 1])
    return np.concatenate(([a1], a1 + np.cumsum(inc)))


def _from_alpha(alpha):
    return np.concatenate(([alpha[0]], np.log(np.diff(alpha))))


def _reparam(grad_a, hess_a, theta, K):
    """Chain rule from ``(alpha, beta)`` to ``(alpha_1, gamma, beta)``."""
    m = len(theta)
    inc = np.exp(theta[1 : K - 1])
    jac = np.eye(m)
    jac[: K - 1, : K - 1] = 0.0
    jac[: K - 1, 0] = 1.0
    for l in range(1, K - 1):
        jac[l : K - 1, l] = inc[l - 1]
    g = jac.T @ grad_a
    h = jac.T @ hess_a @ jac
    for l in range(1, K - 1):
        h[l, l] += grad_a[l : K - 1].sum() * inc[l - 1]
    return g, h, jac


def _separated(x, y, K) -> bool:
    """True when some direction raises the likelihood without bound.

    A direction ``(da, db)`` never lowers any case's likelihood iff
    ``da_y - x.db >= 0`` for ``y < K``, ``da_{y-1} - x.db <= 0`` for ``y > 1``
    and ``da`` is non-decreasing; the MLE is infinite iff one of these holds
    strictly. Solved as an LP over the distinct ``(x, y)`` patterns.
    """
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    pats = np.unique(np.column_stack([x / scale, y]), axis=0)
    xs, ys = pats[:, :-1], pats[:, -1].astype(np.int64)
    m, p = K - 1, x.shape[1]
    rows = []
    for xi, yi in zip(xs, ys):
        if yi < K:
            r = np.zeros(m + p)
            r[yi - 1], r[m:] = -1.0, xi
            rows.append(r)
        if yi > 1:
            r = np.zeros(m + p)
            r[yi - 2], r[m:] = 1.0, -xi
            rows.append(r)
    a_case = np.array(rows)
    a_ord = np.zeros((m - 1, m + p))
    for j in range(m - 1):
        a_ord[j, j], a_ord[j, j + 1] = 1.0, -1.0
    a_ub = np.vstack([a_case, a_ord]) if m > 1 else a_case
    res = optimize.linprog(
        a_case.sum(axis=0), A_ub=a_ub, b_ub=np.zeros(len(a_ub)), bounds=[(-1.0, 1.0)] * (m + p), method="highs"
    )
    return bool(res.status == 0 and -res.fun > 1e-7)


def fit_pom(x, y, K: int | None = None, max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> PomFit:
    """Maximum-likelihood proportional-odds fit.

    Converges when the gradient norm per observation falls below ``tol``.
    Each Newton step is halved until the log-likelihood does not drop.
    """
    x, y, K = _check(x, y, K)
    n, p = x.shape
    cum = np.cumsum(np.bincount(y, minlength=K + 1)[1:])[:-1] / n
    alpha0 = np.log(cum / (1.0 - cum))
    theta = np.concatenate([_from_alpha(alpha0), np.zeros(p)])

    def evaluate(th):
        alpha = _to_alpha(th, K)
        return _loglik_parts(alpha, th[K - 1 :], x, y, K)

    ll, ga, ha = evaluate(theta)
    it = 0
    gnorm = np.inf
    for it in range(1, max_iter + 1):
        g, h, _ = _reparam(ga, ha, theta, K)
        gnorm = float(np.linalg.norm(ga)) / n
        if gnorm < tol:
            break
        try:
            step = np.linalg.solve(-h, g)
            if not np.all(np.isfinite(step)) or g @ step <= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = g / max(1.0, float(np.abs(np.diag(h)).max()))
        t = 1.0
        while True:
            cand = theta + t * step
            ll_new, ga_new, ha_new = evaluate(cand)
            if np.isfinite(ll_new) and ll_new >= ll:
                break
            t *= 0.5
            if t < 1e-12:
                raise OrdinalError("divergent estimate: line search failed")
        theta, ll, ga, ha = cand, ll_new, ga_new, ha_new
        if not np.all(np.isfinite(theta)) or np.abs(theta).max() > 1e8:
            raise OrdinalError("divergent estimate")
    else:
        raise OrdinalError(f"divergent estimate: no convergence in {max_iter} iterations")

    if _separated(x, y, K):
        raise OrdinalError("divergent estimate: categories are separated by the covariate, the MLE is infinite")
    alpha = _to_alpha(theta, K)
    beta = theta[K - 1 :].copy()
    try:
        cov = np.linalg.inv(-ha)
    except np.linalg.LinAlgError as exc:
        raise OrdinalError("singular information matrix") from exc
    if np.any(np.diag(cov) <= 0):
        raise OrdinalError("divergent estimate: information not positive definite")
    return PomFit(alpha, beta, cov, ll, n, K, it, gnorm)


def log_likelihood(fit: PomFit, x, y) -> float:
    x, y, K = _design(x), np.asarray(y, dtype=np.int64), fit.K
    return _loglik_parts(fit.intercepts, fit.beta, x, y, K)[0]


def score(fit: PomFit, x, y) -> np.ndarray:
    """Gradient of the log-likelihood in ``(alpha, beta)`` at the fit."""
    x, y = _design(x), np.asarray(y, dtype=np.int64)
    return _loglik_parts(fit.intercepts, fit.beta, x, y, fit.K)[1]


def odds_ratio(fit: PomFit, z: float = 1.96) -> OddsRatioReport:
    b, se = fit.slope, fit.slope_se
    return OddsRatioReport(math.exp(b), math.exp(b - z * se), math.exp(b + z * se))


def predict_category(fit: PomFit, x) -> tuple[np.ndarray, np.ndarray]:
    """Category probabilities and the most probable category (lowest on ties)."""
    probs = category_probabilities(fit.intercepts, fit.beta, x)
    return probs, np.argmax(probs, axis=1) + 1


def absolute_distance_coefficient(predicted, actual, K: int) -> float:
    """``1 - sum |predicted - actual| / (n (K - 1))``."""
    pred = np.asarray(predicted)
    act = np.asarray(actual)
    if pred.shape != act.shape:
        raise OrdinalError("predicted and actual differ in length")
    if pred.size == 0:
        raise OrdinalError("empty input")
    if K < 2:
        raise OrdinalError("K must be at least 2")
    return float(1.0 - np.abs(pred - act).sum() / (pred.size * (K - 1)))


@dataclass(frozen=True)
class FitDiagnostics:
    deviance: float
    df: int
    p_value: float
    n_patterns: int
    reliable: bool


def fit_diagnostics(fit: PomFit, x, y) -> FitDiagnostics:
    """Deviance against the saturated model on covariate patterns.

    Cells are (pattern, category) counts; ``df = patterns (K - 1) - params``.
    With fewer patterns than parameters the result is flagged unreliable;
    with ``df <= 0`` the p-value is NaN.
    """
    x = _design(x)
    y = np.asarray(y, dtype=np.int64)
    patterns, inverse = np.unique(x, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    n_pat = len(patterns)
    observed = np.zeros((n_pat, fit.K))
    np.add.at(observed, (inverse, y - 1), 1.0)
    probs = category_probabilities(fit.intercepts, fit.beta, patterns)
    expected = observed.sum(axis=1, keepdims=True) * probs
    mask = observed > 0
    dev = float(2.0 * (observed[mask] * np.log(observed[mask] / expected[mask])).sum())
    dev = max(dev, 0.0)
    n_params = len(fit.params)
    df = n_pat * (fit.K - 1) - n_params
    p = float(stats.chi2.sf(dev, df)) if df > 0 else float("nan")
    return FitDiagnostics(dev, df, p, n_pat, n_pat >= n_params)


def simulate_pom(alpha, beta, x, rng: np.random.Generator) -> np.ndarray:
    """Draw categories ``1..K`` from the model at covariates ``x``."""
    cum = _cum_probs(np.asarray(alpha, float), _design(x) @ np.atleast_1d(np.asarray(beta, float)))
    u = rng.random(len(cum))
    return (u[:, None] >= cum[:, 1:-1]).sum(axis=1) + 1


def report(fit: PomFit, x, y, covariate: str = "likes") -> dict:
    """Regression table with odds ratio, prediction accuracy and GoF."""
    _, pred = predict_category(fit, x)
    diag = fit_diagnostics(fit, x, y)
    orr = odds_ratio(fit)
    se, tv, pv = fit.standard_errors, fit.t_values, fit.p_values
    K = fit.K
    names = [f"{covariate}"] if len(fit.beta) == 1 else [f"{covariate}_{i}" for i in range(len(fit.beta))]
    coef = [
        {"name": nm, "value": float(b), "std_error": float(se[K - 1 + i]), "t_value": float(tv[K - 1 + i]),
         "p_value": float(pv[K - 1 + i])}
        for i, (nm, b) in enumerate(zip(names, fit.beta))
    ]
    cuts = [
        {"name": f"{j + 1}|{j + 2}", "value": float(a), "std_error": float(se[j]), "t_value": float(tv[j]),
         "p_value": float(pv[j])}
        for j, a in enumerate(fit.intercepts)
    ]
    return {
        "sign_convention": SIGN_CONVENTION,
        "sign_convention_note": SIGN_NOTE,
        "n": fit.n,
        "K": K,
        "coefficients": coef,
        "intercepts": cuts,
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "odds_ratio": {"value": orr.or_value, "ci_low": orr.ci_low, "ci_high": orr.ci_high},
        "beta_ci95": [fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se],
        "delta": absolute_distance_coefficient(pred, y, K),
        "deviance": diag.deviance,
        "deviance_df": diag.df,
        "chi_square_p": None if math.isnan(diag.p_value) else diag.p_value,
        "diagnostics_reliable": diag.reliable,
    }
