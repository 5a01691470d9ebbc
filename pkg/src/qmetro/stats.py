"""Binning, curve fitting, model selection and resampling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from . import rng
from .errors import ConvergenceFailure, DegenerateData, SingularDesign

log = logging.getLogger(__name__)

CI_Z = 1.96
MIN_OCCUPANCY = 100


# -- binning -----------------------------------------------------------------


def fd_bin_width(values) -> float:
    """Freedman-Diaconis width 2 * IQR * n^(-1/3), linear-interpolation percentiles."""
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        raise DegenerateData("need at least 4 values for a Freedman-Diaconis width")
    q75, q25 = np.percentile(v, [75, 25])
    iqr = q75 - q25
    if iqr <= 0:
        raise DegenerateData("interquartile range is zero")
    return float(2 * iqr * v.size ** (-1 / 3))


def fd_n_bins(values) -> int:
    v = np.asarray(values, dtype=float)
    return max(2, int(math.ceil((v.max() - v.min()) / fd_bin_width(v))))


@dataclass
class BinnedSeries:
    edges: np.ndarray  # len k + 1
    count: np.ndarray
    x_mean: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    standard_error: np.ndarray
    median: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def __len__(self) -> int:
        return len(self.count)

    def fit_weights(self) -> np.ndarray:
        """1/SE^2 where every SE is positive, otherwise uniform."""
        se = self.standard_error
        if np.all(se > 0):
            return 1.0 / se**2
        return np.ones_like(se)

    def rows(self) -> list[dict]:
        c = self.centers
        return [
            {
                "bin_low": self.edges[i],
                "bin_high": self.edges[i + 1],
                "center": c[i],
                "x_mean": self.x_mean[i],
                "count": int(self.count[i]),
                "mean": self.mean[i],
                "std": self.std[i],
                "standard_error": self.standard_error[i],
                "median": self.median[i],
                "ci_low": self.ci_low[i],
                "ci_high": self.ci_high[i],
            }
            for i in range(len(self))
        ]


def _equal_edges(x: np.ndarray, n_bins: int) -> np.ndarray:
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise DegenerateData("x has zero range")
    return np.linspace(lo, hi, n_bins + 1)


def _assign(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # right-closed last bin so max(x) lands inside
    idx = np.searchsorted(edges, x, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def _merge_sparse(edges: np.ndarray, counts: np.ndarray, min_occupancy: int) -> np.ndarray:
    edges = list(edges)
    counts = list(counts)
    while len(counts) > 1:
        low = [i for i, c in enumerate(counts) if c < min_occupancy]
        if not low:
            break
        i = low[0]
        if i == 0:
            j = 1
        elif i == len(counts) - 1:
            j = i - 1
        else:
            centre = 0.5 * (edges[i] + edges[i + 1])
            d_left = centre - 0.5 * (edges[i - 1] + edges[i])
            d_right = 0.5 * (edges[i + 1] + edges[i + 2]) - centre
            j = i - 1 if d_left <= d_right else i + 1
        lo, hi = min(i, j), max(i, j)
        counts[lo : hi + 1] = [counts[lo] + counts[hi]]
        del edges[hi]
    return np.array(edges)


def bin_series(x, y, n_bins: int, min_occupancy: int = MIN_OCCUPANCY, edges=None) -> BinnedSeries:
    """Equal-width bins over [min x, max x]; sparse bins merge into the nearer neighbour.

    Passing ``edges`` skips edge construction and merging (used to bin held-out
    data on training edges); empty bins are then dropped.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have equal length")
    if edges is None:
        if n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        edges = _equal_edges(x, n_bins)
        counts = np.bincount(_assign(x, edges), minlength=n_bins)
        edges = _merge_sparse(edges, counts, min_occupancy)
    else:
        edges = np.asarray(edges, dtype=float)
    idx = _assign(x, edges)
    order = np.argsort(idx, kind="stable")
    groups = np.split(order, np.searchsorted(idx[order], np.arange(1, len(edges) - 1)))
    keep, cols = [], {k: [] for k in ("count", "x_mean", "mean", "std", "se", "median")}
    for b, g in enumerate(groups):
        if g.size == 0:
            continue
        yy = y[g]
        sd = float(np.std(yy, ddof=1)) if g.size > 1 and np.ptp(yy) > 0 else 0.0
        keep.append(b)
        cols["count"].append(g.size)
        cols["x_mean"].append(float(np.mean(x[g])))
        cols["mean"].append(float(np.mean(yy)))
        cols["std"].append(sd)
        cols["se"].append(sd / math.sqrt(g.size))
        cols["median"].append(float(np.median(yy)))
    keep_edges = edges
    if len(keep) != len(groups):
        # only reachable with caller-supplied edges; keep the per-bin edges of non-empty bins
        lows = edges[:-1][keep]
        highs = edges[1:][keep]
        keep_edges = np.append(lows, highs[-1])
    mean = np.array(cols["mean"])
    se = np.array(cols["se"])
    return BinnedSeries(
        edges=np.asarray(keep_edges),
        count=np.array(cols["count"], dtype=int),
        x_mean=np.array(cols["x_mean"]),
        mean=mean,
        std=np.array(cols["std"]),
        standard_error=se,
        median=np.array(cols["median"]),
        ci_low=mean - CI_Z * se,
        ci_high=mean + CI_Z * se,
    )


def boundary_extract(x, y, n_bins: int, min_occupancy: int = 1):
    """Per-bin (center, max y) and (center, min y) pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    edges = _equal_edges(x, n_bins)
    counts = np.bincount(_assign(x, edges), minlength=n_bins)
    edges = _merge_sparse(edges, counts, min_occupancy)
    idx = _assign(x, edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    upper, lower = [], []
    for b in range(len(edges) - 1):
        m = idx == b
        if not m.any():
            continue
        upper.append((centers[b], float(y[m].max())))
        lower.append((centers[b], float(y[m].min())))
    return np.array(upper), np.array(lower)


# -- models ------------------------------------------------------------------


def _poly(deg):
    def f(x, p):
        return np.polynomial.polynomial.polyval(x, p)

    def jac(x, p):
        return np.vander(x, deg + 1, increasing=True)

    return f, jac


def _exp_f(x, p):
    a, alpha, b = p
    return a * (1 - np.exp(-alpha * x)) + b


def _exp_jac(x, p):
    a, alpha, _ = p
    e = np.exp(-alpha * x)
    return np.column_stack([1 - e, a * x * e, np.ones_like(x)])


def _exp_init(x, y):
    return np.array([np.ptp(y), 2.0, y.min()])


def _logistic_f(x, p):
    big_l, k, x0, c = p
    return big_l * expit(k * (x - x0)) + c


def _logistic_jac(x, p):
    big_l, k, x0, _ = p
    s = expit(k * (x - x0))
    ds = s * (1 - s)
    return np.column_stack([s, big_l * ds * (x - x0), -big_l * ds * k, np.ones_like(x)])


def _logistic_init(x, y):
    return np.array([np.ptp(y), 4.0 / np.ptp(x), float(np.median(x)), y.min()])


def _mm_f(x, p):
    v, k, c = p
    return v * x / (k + x) + c


def _mm_jac(x, p):
    v, k, _ = p
    d = k + x
    return np.column_stack([x / d, -v * x / d**2, np.ones_like(x)])


def _mm_init(x, y):
    return np.array([np.ptp(y), float(np.median(x)), y.min()])


@dataclass(frozen=True)
class Model:
    name: str
    arity: int
    f: object
    jac: object
    init: object = None
    param_names: tuple[str, ...] = ()

    @property
    def linear(self) -> bool:
        return self.init is None

    def __call__(self, x, p):
        return self.f(np.asarray(x, dtype=float), np.asarray(p, dtype=float))


MODELS = {
    "linear": Model("linear", 2, *_poly(1), None, ("a0", "a1")),
    "quadratic": Model("quadratic", 3, *_poly(2), None, ("a0", "a1", "a2")),
    "cubic": Model("cubic", 4, *_poly(3), None, ("a0", "a1", "a2", "a3")),
    "exponential_saturation": Model("exponential_saturation", 3, _exp_f, _exp_jac, _exp_init, ("A", "alpha", "B")),
    "logistic": Model("logistic", 4, _logistic_f, _logistic_jac, _logistic_init, ("L", "k", "E0", "c")),
    "michaelis_menten": Model("michaelis_menten", 3, _mm_f, _mm_jac, _mm_init, ("V", "K", "c")),
}
MODEL_NAMES = tuple(MODELS)


def get_model(model) -> Model:
    if isinstance(model, Model):
        return model
    try:
        return MODELS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}") from None


@dataclass
class FitResult:
    model: str
    params: np.ndarray
    r2: float
    aic: float
    bic: float
    rss: float
    residuals: np.ndarray
    n: int
    weighted: bool = False
    r2_cv: float = float("nan")
    param_cis: list[tuple[float, float]] | None = None
    converged: bool = True

    @property
    def n_params(self) -> int:
        return len(self.params)

    def predict(self, x) -> np.ndarray:
        return get_model(self.model)(x, self.params)

    def to_dict(self) -> dict:
        m = get_model(self.model)
        return {
            "model": self.model,
            "param_names": list(m.param_names),
            "params": [float(p) for p in self.params],
            "param_cis": None if self.param_cis is None else [list(map(float, c)) for c in self.param_cis],
            "r2": self.r2,
            "r2_cv": self.r2_cv,
            "aic": self.aic,
            "bic": self.bic,
            "rss": self.rss,
            "n": self.n,
            "weighted": self.weighted,
            "residuals": [float(r) for r in self.residuals],
        }


def information_criteria(rss: float, n: int, p: int) -> tuple[float, float]:
    """(AIC, BIC) = n ln(RSS/n) + 2p, n ln(RSS/n) + p ln n."""
    base = n * math.log(max(rss, 1e-300) / n)
    return base + 2 * p, base + p * math.log(n)


def _r2(y, yhat, w) -> tuple[float, float]:
    ybar = np.sum(w * y) / np.sum(w)
    rss = float(np.sum(w * (y - yhat) ** 2))
    tss = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1 - rss / tss if tss > 0 else (1.0 if rss == 0 else float("-inf"))
    return r2, rss


def r_squared(y, yhat, weights=None) -> float:
    """Coefficient of determination, optionally weighted."""
    y = np.asarray(y, dtype=float)
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    return _r2(y, np.asarray(yhat, dtype=float), w)[0]


def _solve(m: Model, x, y, w, p0=None):
    sw = np.sqrt(w)
    if m.linear:
        design = m.jac(x, None) * sw[:, None]
        if np.linalg.matrix_rank(design) < m.arity:
            raise SingularDesign(f"{m.name}: design matrix is rank deficient")
        p, *_ = np.linalg.lstsq(design, y * sw, rcond=None)
        return p, True
    p0 = m.init(x, y) if p0 is None else np.asarray(p0, dtype=float)
    return levenberg_marquardt(lambda p: sw * (m.f(x, p) - y), lambda p: sw[:, None] * m.jac(x, p), p0)


def levenberg_marquardt(fun, jac, p0, ftol: float = 1e-10, xtol: float = 1e-12, gtol: float = 1e-12,
                        max_nfev: int = 500) -> tuple[np.ndarray, bool]:
    """Levenberg-Marquardt with Marquardt diagonal scaling and a step bound.

    Returns (params, converged). Damped steps solve the augmented system
    [J; sqrt(lam) D] dp = [-r; 0] with LAPACK, so results are bit-reproducible.
    Convergence tests follow the classic ftol/xtol/gtol definitions.
    """
    tiny = np.finfo(float).tiny
    p = np.array(p0, dtype=float)
    r = fun(p)
    cost = float(r @ r)
    if not np.isfinite(cost):
        return p, False
    nfev, lam, nu = 1, 1e-3, 2.0
    d = None
    bound = None
    while nfev < max_nfev:
        J = jac(p)
        g = J.T @ r
        d = np.sqrt(np.maximum(np.sum(J * J, axis=0), tiny)) if d is None else np.maximum(d, np.sqrt(np.sum(J * J, axis=0)))
        if bound is None:
            bound = 100.0 * (np.linalg.norm(d * p) or 1.0)
        if cost == 0.0 or np.max(np.abs(g) / (d * np.sqrt(cost))) <= gtol:
            return p, True
        while nfev < max_nfev:
            A = np.vstack([J, np.sqrt(lam) * np.diag(d)])
            dp = np.linalg.lstsq(A, np.concatenate([-r, np.zeros(p.size)]), rcond=None)[0]
            step = float(np.linalg.norm(d * dp))
            if step > bound:
                lam *= nu
                nu *= 2.0
                continue
            trial = p + dp
            r_new = fun(trial)
            nfev += 1
            cost_new = float(r_new @ r_new)
            predicted = cost - float(np.sum((r + J @ dp) ** 2))
            actual = cost - cost_new if np.isfinite(cost_new) else -np.inf
            rho = actual / predicted if predicted > 0 else -np.inf
            if rho > 0:
                small_step = step <= xtol * (np.linalg.norm(d * trial) + xtol)
                small_gain = actual <= ftol * cost and predicted <= ftol * cost and rho <= 2.0
                p, r, cost = trial, r_new, cost_new
                lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                nu = 2.0
                if rho > 0.75:
                    bound = max(bound, 2.0 * step)
                if small_step or small_gain or cost == 0.0:
                    return p, bool(np.all(np.isfinite(p)))
                break
            lam *= nu
            nu *= 2.0
            bound = min(bound, 0.5 * step) if step > 0 else bound
            if (abs(actual) <= ftol * cost and 0.0 <= predicted <= ftol * cost) or bound <= xtol * np.linalg.norm(d * p):
                return p, True
            if lam > 1e16:
                return p, False
    return p, False


def fit_model(model, x, y, weights=None, p0=None, raise_on_failure: bool = True) -> FitResult:
    """Weighted least squares for one model; closed form for polynomials, LM otherwise."""
    m = get_model(model)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < m.arity + 1:
        raise ValueError(f"{m.name} needs at least {m.arity + 1} points, got {n}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    p, ok = _solve(m, x, y, w, p0)
    yhat = m.f(x, p)
    r2, rss = _r2(y, yhat, w)
    aic, bic = information_criteria(rss, n, m.arity)
    fit = FitResult(m.name, p, r2, aic, bic, rss, y - yhat, n, weights is not None, converged=ok)
    if not ok and raise_on_failure:
        raise ConvergenceFailure(f"{m.name} fit did not converge", best=fit)
    return fit


def gradient_check(model, x, params, step: float = 1e-6) -> float:
    """Max relative deviation between the analytic Jacobian and central differences."""
    m = get_model(model)
    x = np.asarray(x, dtype=float)
    p = np.asarray(params, dtype=float)
    j = m.jac(x, p)
    num = np.empty_like(j)
    for k in range(p.size):
        h = step * max(1.0, abs(p[k]))
        dp = np.zeros_like(p)
        dp[k] = h
        num[:, k] = (m.f(x, p + dp) - m.f(x, p - dp)) / (2 * h)
    scale = np.maximum(np.abs(num), 1e-8)
    return float(np.max(np.abs(j - num) / scale))


# -- validation --------------------------------------------------------------


def train_test_split(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    perm = rng.generator(seed, rng.SHUFFLE, 0).permutation(n)
    n_test = int(round(n * test_fraction))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def kfold_cv(model, x, y, k: int, fold_seed: int, weights=None) -> float:
    """Pooled out-of-fold R^2: 1 - sum RSS_k / sum TSS_k, TSS_k about the training-fold mean."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if k < 2 or n < 2 * k:
        raise ValueError(f"k-fold CV needs k >= 2 and n >= 2k (k={k}, n={n})")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    perm = rng.generator(fold_seed, rng.SHUFFLE, 1).permutation(n)
    rss = tss = 0.0
    for test in np.array_split(perm, k):
        train = np.setdiff1d(perm, test, assume_unique=True)
        fit = fit_model(model, x[train], y[train], None if weights is None else w[train], raise_on_failure=False)
        ybar = np.sum(w[train] * y[train]) / np.sum(w[train])
        rss += float(np.sum(w[test] * (y[test] - fit.predict(x[test])) ** 2))
        tss += float(np.sum(w[test] * (y[test] - ybar) ** 2))
    return 1 - rss / tss if tss > 0 else (1.0 if rss == 0 else float("-inf"))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length vectors with at least 2 entries")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateData("zero variance")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


# -- binned fitting and bootstrap ---------------------------------------------


@dataclass(frozen=True)
class BinDirective:
    """How to bin (x, y) before fitting. ``n_bins=None`` means Freedman-Diaconis."""

    n_bins: int | None = None
    min_occupancy: int = MIN_OCCUPANCY
    weighted: bool = True

    def bins(self, x, y) -> BinnedSeries:
        n_bins = self.n_bins if self.n_bins is not None else fd_n_bins(x)
        return bin_series(x, y, n_bins, self.min_occupancy)


def binned_fit(model, x, y, directive: BinDirective = BinDirective(), **kw) -> tuple[BinnedSeries, FitResult]:
    b = directive.bins(x, y)
    w = b.fit_weights() if directive.weighted else None
    return b, fit_model(model, b.x_mean, b.mean, w, **kw)


@dataclass
class BootstrapSummary:
    model: str
    n_resamples: int
    n_dropped: int
    mean: np.ndarray
    std: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    samples: np.ndarray = field(repr=False)

    def p_value_zero(self, index: int) -> tuple[float, float]:
        """Tests of parameter == 0: (normal-approximation two-sided p, empirical one-sided p)."""
        s = self.samples[:, index]
        mu, sd = float(np.mean(s)), float(np.std(s, ddof=1))
        p_norm = float(2 * norm.sf(abs(mu) / sd)) if sd > 0 else 0.0
        opposite = np.sum(s <= 0) if mu > 0 else np.sum(s >= 0)
        p_emp = float((opposite + 1) / (s.size + 1))
        return p_norm, p_emp

    def cis(self) -> list[tuple[float, float]]:
        return list(zip(self.ci_low.tolist(), self.ci_high.tolist()))

    def to_dict(self) -> dict:
        m = get_model(self.model)
        return {
            "model": self.model,
            "n_resamples": self.n_resamples,
            "n_dropped": self.n_dropped,
            "params": {
                name: {
                    "mean": float(self.mean[i]),
                    "std": float(self.std[i]),
                    "ci_low": float(self.ci_low[i]),
                    "ci_high": float(self.ci_high[i]),
                }
                for i, name in enumerate(m.param_names)
            },
        }


def bootstrap_fit(model, x, y, n_resamples: int, seed: int, rebin: BinDirective | None = None, min_resamples: int = 100) -> BootstrapSummary:
    """Resample rows with replacement, optionally re-bin, refit; percentile 95% CIs."""
    if n_resamples < min_resamples:
        raise ValueError(f"n_resamples must be >= {min_resamples}")
    m = get_model(model)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    p0 = None
    if not m.linear:
        p0 = (binned_fit(m, x, y, rebin, raise_on_failure=False)[1] if rebin else fit_model(m, x, y, raise_on_failure=False)).params
    samples, dropped = [], 0
    for b in range(n_resamples):
        idx = rng.generator(seed, rng.BOOTSTRAP, b).integers(0, n, n)
        try:
            if rebin is not None:
                _, fit = binned_fit(m, x[idx], y[idx], rebin, p0=p0)
            else:
                fit = fit_model(m, x[idx], y[idx], p0=p0)
        except (ConvergenceFailure, DegenerateData, SingularDesign, ValueError):
            dropped += 1
            continue
        samples.append(fit.params)
    if dropped > 0.1 * n_resamples:
        raise ConvergenceFailure(f"{dropped} of {n_resamples} bootstrap refits failed (> 10%)")
    s = np.array(samples)
    lo, hi = np.percentile(s, [2.5, 97.5], axis=0)
    return BootstrapSummary(m.name, n_resamples, dropped, s.mean(axis=0), s.std(axis=0, ddof=1), lo, hi, s)


# -- parameter-evolution models (functions of the noise strength) --------------

CONSTANT = Model(
    "constant",
    1,
    lambda x, p: np.full_like(x, p[0], dtype=float),
    lambda x, p: np.ones((x.size, 1)),
    None,
    ("P0",),
)
EXP_DECAY = Model(
    "exp_decay",
    2,
    lambda x, p: p[0] * np.exp(-p[1] * x),
    lambda x, p: np.column_stack([np.exp(-p[1] * x), -p[0] * x * np.exp(-p[1] * x)]),
    lambda x, y: np.array([y[0] if y[0] != 0 else np.mean(y), 1.0]),
    ("P0", "beta"),
)
