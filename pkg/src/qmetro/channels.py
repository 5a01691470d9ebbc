"""Local amplitude/phase damping and global depolarizing noise on two qubits."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConvergenceFailure, DegenerateData, RangeViolation
from .linalg import as_cmat
from .states import maximally_mixed

log = logging.getLogger(__name__)

KRAUS_TOL = 1e-12


class ChannelKind(str, Enum):
    AMPLITUDE_DAMPING = "amplitude_damping"
    PHASE_DAMPING = "phase_damping"
    DEPOLARIZING = "depolarizing"


GAMMA_MAX = {
    ChannelKind.AMPLITUDE_DAMPING: 0.5,
    ChannelKind.PHASE_DAMPING: 0.5,
    ChannelKind.DEPOLARIZING: 0.75,
}


@dataclass(frozen=True)
class ChannelSpec:
    kind: ChannelKind
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        _check_gamma(self.kind, self.gamma)

    def apply(self, rho) -> np.ndarray:
        return CHANNELS[self.kind](rho, self.gamma)


def _check_gamma(kind: ChannelKind, gamma: float) -> None:
    hi = GAMMA_MAX[ChannelKind(kind)]
    if not 0.0 <= gamma <= hi:
        raise RangeViolation(f"{ChannelKind(kind).value}: gamma={gamma} outside [0, {hi}]")


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return [k0, k1]


def phase_damping_kraus(gamma: float) -> list[np.ndarray]:
    k0 = np.sqrt(1 - gamma) * np.eye(2, dtype=complex)
    k1 = np.sqrt(gamma) * np.diag([1, 0]).astype(complex)
    k2 = np.sqrt(gamma) * np.diag([0, 1]).astype(complex)
    return [k0, k1, k2]


def kraus_completeness_residual(kraus: list[np.ndarray]) -> float:
    d = kraus[0].shape[0]
    s = sum(k.conj().T @ k for k in kraus)
    return float(np.max(np.abs(s - np.eye(d))))


def apply_local(rho, kraus_a: list[np.ndarray], kraus_b: list[np.ndarray], order: str = "ab") -> np.ndarray:
    """Independent single-qubit channels on A and B, applied in the given order."""
    for kraus in (kraus_a, kraus_b):
        resid = kraus_completeness_residual(kraus)
        if resid > KRAUS_TOL:
            raise RangeViolation(f"Kraus set incomplete: residual {resid:.3e}")
    rho = as_cmat(rho, dims=(4,))
    eye = np.eye(2)
    steps = {"a": [np.kron(k, eye) for k in kraus_a], "b": [np.kron(eye, k) for k in kraus_b]}
    for q in order:
        rho = sum(k @ rho @ k.conj().T for k in steps[q])
    return rho


def amplitude_damping(rho, gamma: float) -> np.ndarray:
    _check_gamma(ChannelKind.AMPLITUDE_DAMPING, gamma)
    if gamma == 0:
        return as_cmat(rho, dims=(4,)).copy()
    k = amplitude_damping_kraus(gamma)
    return apply_local(rho, k, k)


def phase_damping(rho, gamma: float) -> np.ndarray:
    _check_gamma(ChannelKind.PHASE_DAMPING, gamma)
    rho = as_cmat(rho, dims=(4,))
    if gamma == 0:
        return rho.copy()
    k = phase_damping_kraus(gamma)
    out = apply_local(rho, k, k)
    # the Kraus sum reproduces populations only up to rounding; they are exact invariants
    np.fill_diagonal(out, np.diag(rho))
    return out


def depolarizing(rho, gamma: float) -> np.ndarray:
    """(1 - gamma) rho + gamma I/4."""
    _check_gamma(ChannelKind.DEPOLARIZING, gamma)
    rho = as_cmat(rho, dims=(4,))
    if gamma == 0:
        return rho.copy()
    return (1 - gamma) * rho + gamma * maximally_mixed()


CHANNELS = {
    ChannelKind.AMPLITUDE_DAMPING: amplitude_damping,
    ChannelKind.PHASE_DAMPING: phase_damping,
    ChannelKind.DEPOLARIZING: depolarizing,
}


def depolarizing_correction(p_measured: float, gamma_eff: float, p_infinity: float) -> float:
    """Undo convex mixing: (P_measured - gamma P_inf) / (1 - gamma)."""
    if not 0.0 <= gamma_eff < 1.0:
        raise RangeViolation(f"gamma_eff={gamma_eff} outside [0, 1)")
    return (p_measured - gamma_eff * p_infinity) / (1 - gamma_eff)


@dataclass
class GammaFit:
    gamma: float
    A: float
    A_ci: tuple[float, float]
    alpha: float
    alpha_ci: tuple[float, float]
    B: float
    B_ci: tuple[float, float]
    r2: float
    n_bins: int = 0
    n_dropped_bins: int = 0

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "A": self.A,
            "A_ci": list(self.A_ci),
            "alpha": self.alpha,
            "alpha_ci": list(self.alpha_ci),
            "B": self.B,
            "B_ci": list(self.B_ci),
            "r2": self.r2,
            "n_bins": self.n_bins,
            "n_dropped_bins": self.n_dropped_bins,
        }


@dataclass
class SweepResult:
    kind: str
    measure: str
    gammas: list[float]
    params: list[GammaFit]
    n_sample: int
    seed: int
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "measure": self.measure,
            "gammas": list(self.gammas),
            "params": [p.to_dict() for p in self.params],
            "n_sample": self.n_sample,
            "seed": self.seed,
            "warnings": list(self.warnings),
        }

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.params])


# -- sweeps --------------------------------------------------------------------

REE_MAX_GAMMA = 0.3
REE_MIN_SAMPLE = 500
SWEEP_MIN_BIN = 30


@dataclass(frozen=True)
class SweepDirective:
    kind: str
    measure: str = "concurrence"
    gammas: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    n_sample: int = 2000
    seed: int | None = None  # None: derived from the experiment's master seed
    bootstrap_n: int = 100
    n_bins: int | None = None  # None: Freedman-Diaconis on the gamma=0 data

    @property
    def name(self) -> str:
        return f"{ChannelKind(self.kind).value}_{self.measure}"


def _sweep_point(task):
    from . import entanglement, metrology, rng, states

    kind, gamma, seed, measure_name, mqfi_cfg, ree_cfg = task
    rho = CHANNELS[ChannelKind(kind)](states.gen_hs_random(seed), gamma)
    try:
        e = entanglement.measure(rho, measure_name, ree_cfg, seed)
    except ConvergenceFailure:
        return None
    f = metrology.mqfi(rho, None, mqfi_cfg, rng.derive_seed(seed, rng.SWEEP)).value
    return e, f / 4


def channel_sweep(
    ensemble_seed: int,
    n_sample: int,
    spec_kind,
    gammas,
    fit_measure: str = "concurrence",
    *,
    mqfi_config=None,
    ree_config=None,
    bootstrap_n: int = 100,
    n_bins: int | None = None,
    workers: int = 1,
) -> SweepResult:
    """Apply one channel over a gamma grid and refit the exponential saturation model."""
    from . import rng, stats
    from .entanglement import ReeConfig
    from .metrology import MqfiConfig
    from .parallel import pmap

    kind = ChannelKind(spec_kind)
    gammas = [float(g) for g in gammas]
    if n_sample < 200:
        raise ValueError("n_sample must be >= 200")
    if not gammas or gammas[0] != 0.0 or any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gammas must start at 0 and increase strictly")
    for g in gammas:
        _check_gamma(kind, g)
    warnings = []
    if fit_measure == "ree":
        if n_sample < REE_MIN_SAMPLE:
            raise ValueError(f"REE sweeps need n_sample >= {REE_MIN_SAMPLE}")
        dropped = [g for g in gammas if g > REE_MAX_GAMMA]
        if dropped:
            warnings.append(f"REE sweep restricted to gamma <= {REE_MAX_GAMMA}; skipped {dropped}")
            gammas = [g for g in gammas if g <= REE_MAX_GAMMA]
    mqfi_config = mqfi_config or MqfiConfig()
    ree_config = ree_config or ReeConfig()

    seeds = [rng.derive_seed(ensemble_seed, rng.SWEEP, i) for i in range(n_sample)]
    tasks = [(kind.value, g, s, fit_measure, mqfi_config, ree_config) for g in gammas for s in seeds]
    points = pmap(_sweep_point, tasks, workers)

    params = []
    bins_used = n_bins
    data = {}
    for gi, g in enumerate(gammas):
        chunk = [p for p in points[gi * n_sample : (gi + 1) * n_sample] if p is not None]
        if len(chunk) < n_sample:
            warnings.append(f"gamma={g}: {n_sample - len(chunk)} states without a converged measure")
        e = np.array([c[0] for c in chunk])
        f = np.array([c[1] for c in chunk])
        data[g] = (e, f)
        if bins_used is None:
            bins_used = stats.fd_n_bins(e)
        fit, n_kept, n_merged = _sweep_fit(e, f, bins_used)
        if fit is None:
            warnings.append(f"gamma={g}: fewer than 4 bins with >= {SWEEP_MIN_BIN} points; no fit")
            nan = float("nan")
            params.append(GammaFit(g, nan, (nan, nan), nan, (nan, nan), nan, (nan, nan), nan, n_kept, n_merged))
            continue
        if n_merged:
            warnings.append(f"gamma={g}: merged {n_merged} bins with < {SWEEP_MIN_BIN} points")
        if not fit.converged:
            warnings.append(f"gamma={g}: exponential fit did not converge")
        boot = _sweep_bootstrap(e, f, bins_used, bootstrap_n, rng.derive_seed(ensemble_seed, rng.BOOTSTRAP, gi), fit.params)
        cis = boot.cis() if boot is not None else [(float("nan"), float("nan"))] * 3
        params.append(
            GammaFit(
                gamma=g,
                A=float(fit.params[0]),
                A_ci=cis[0],
                alpha=float(fit.params[1]),
                alpha_ci=cis[1],
                B=float(fit.params[2]),
                B_ci=cis[2],
                r2=float(fit.r2),
                n_bins=n_kept,
                n_dropped_bins=n_merged,
            )
        )
    for w_ in warnings:
        log.warning("%s sweep: %s", kind.value, w_)
    result = SweepResult(kind.value, fit_measure, gammas, params, n_sample, int(ensemble_seed), warnings)
    result.data = data
    return result


def _sweep_fit(e, f, n_bins, p0=None):
    """Bin with sparse-bin merging and fit the exponential model; (fit | None, n_bins, n_merged)."""
    from . import stats

    try:
        b = stats.bin_series(e, f, n_bins, SWEEP_MIN_BIN)
    except DegenerateData:
        return None, 0, n_bins
    n_merged = n_bins - len(b)
    if len(b) < 4 or b.count.min() < SWEEP_MIN_BIN:
        return None, len(b), n_merged
    w = b.fit_weights() if np.all(b.standard_error > 0) else None
    return stats.fit_model("exponential_saturation", b.x_mean, b.mean, w, p0=p0, raise_on_failure=False), len(b), n_merged


def _sweep_bootstrap(e, f, n_bins, n_resamples, seed, p0):
    from . import rng, stats

    samples = []
    for b in range(n_resamples):
        idx = rng.generator(seed, rng.BOOTSTRAP, b).integers(0, e.size, e.size)
        fit, _, _ = _sweep_fit(e[idx], f[idx], n_bins, p0)
        if fit is None:
            continue
        if fit.converged:
            samples.append(fit.params)
    if len(samples) < 0.9 * n_resamples:
        log.warning("sweep bootstrap: only %d of %d refits usable", len(samples), n_resamples)
    if not samples:
        return None
    s = np.array(samples)
    lo, hi = np.percentile(s, [2.5, 97.5], axis=0)
    return stats.BootstrapSummary("exponential_saturation", n_resamples, n_resamples - len(samples), s.mean(0), s.std(0, ddof=1), lo, hi, s)
