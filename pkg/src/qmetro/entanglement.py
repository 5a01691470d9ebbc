"""Concurrence, negativity and relative entropy of entanglement for two qubits."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import rng
from .errors import NotConverged, SpectrumError
from .linalg import LOG_EPSILON, PAULIS, SIGMA_Y, as_cmat, matrix_log2_regularized, partial_transpose_A, trace_norm
from .states import uniform_ball

log = logging.getLogger(__name__)

_YY = np.kron(SIGMA_Y, SIGMA_Y)
_HALF_PAULIS = np.stack([PAULIS["x"], PAULIS["y"], PAULIS["z"]]) / 2
_LN2 = np.log(2.0)

N_COMPONENTS = 4
_EPS_STAGES = (1e-4, 1e-8)
_RETRIES = 4


def concurrence(rho) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_i are square roots of the eigenvalues of rho (Y*Y) rho^* (Y*Y).  With
    rho = A A^dag they equal the singular values of A^dag (Y*Y) A^*, which is
    how they are computed: it avoids square roots of round-off-sized eigenvalues.
    """
    rho = as_cmat(rho, dims=(4,))
    ev = np.linalg.eigvals(rho @ _YY @ rho.conj() @ _YY).real
    if ev.min() < -1e-8:
        raise SpectrumError(f"spin-flip matrix eigenvalue {ev.min():.3e} below -1e-8")
    p, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    a = v * np.sqrt(np.clip(p, 0.0, None))
    lam = np.linalg.svd(a.conj().T @ _YY @ a.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def negativity(rho) -> float:
    """(||rho^T_A||_1 - 1) / 2, clamped to [0, 0.5]."""
    rho = as_cmat(rho, dims=(4,))
    n = (trace_norm(partial_transpose_A(rho)) - 1.0) / 2.0
    return float(min(max(n, 0.0), 0.5))


def relative_entropy(rho, sigma, epsilon: float = LOG_EPSILON) -> float:
    """S(rho||sigma) = Tr(rho log2 rho) - Tr(rho log2 sigma), in bits."""
    rho = as_cmat(rho, dims=(4,))
    sigma = as_cmat(sigma, dims=(4,))
    s = np.trace(rho @ (matrix_log2_regularized(rho, epsilon) - matrix_log2_regularized(sigma, epsilon))).real
    if s < -1e-8:
        log.warning("relative entropy %.3e below zero", s)
    return float(max(s, 0.0))


@dataclass(frozen=True)
class SeparableAnsatz:
    """sigma = sum_i w_i rho_i^A (x) rho_i^B with Bloch-parametrized factors."""

    weights: np.ndarray  # (4,)
    bloch_a: np.ndarray  # (4, 3)
    bloch_b: np.ndarray  # (4, 3)

    @classmethod
    def from_vector(cls, x: np.ndarray, project: bool = False) -> "SeparableAnsatz":
        x = np.asarray(x, dtype=float)
        n = N_COMPONENTS
        w = x[:n].copy()
        ra = x[n : 4 * n].reshape(n, 3).copy()
        rb = x[4 * n : 7 * n].reshape(n, 3).copy()
        if project:
            w = np.clip(w, 0.0, None)
            w /= w.sum()
            for r in (ra, rb):
                norms = np.linalg.norm(r, axis=1)
                big = norms > 1
                r[big] /= norms[big, None]
        return cls(w, ra, rb)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.weights, self.bloch_a.ravel(), self.bloch_b.ravel()])

    def matrix(self) -> np.ndarray:
        return _ansatz_parts(self.to_vector())[0]


def _local_states(r: np.ndarray) -> np.ndarray:
    # (n, 2, 2) single-qubit states from (n, 3) Bloch vectors
    return 0.5 * np.eye(2) + np.einsum("nk,kij->nij", r, _HALF_PAULIS * 2) / 2


def _ansatz_parts(x: np.ndarray):
    n = N_COMPONENTS
    w = x[:n]
    a = _local_states(x[n : 4 * n].reshape(n, 3))
    b = _local_states(x[4 * n : 7 * n].reshape(n, 3))
    prods = np.einsum("nij,nkl->nikjl", a, b).reshape(n, 4, 4)
    sigma = np.einsum("n,nij->ij", w, prods)
    return sigma, w, a, b, prods


class _ReeObjective:
    """S(rho||sigma(x)) and its analytic gradient over the 28 raw ansatz coordinates."""

    def __init__(self, rho: np.ndarray, epsilon: float):
        self.rho = rho
        self.eps = epsilon
        self.s_rho = float(np.trace(rho @ matrix_log2_regularized(rho, epsilon)).real)

    def value_and_grad(self, x: np.ndarray):
        sigma, w, a, b, prods = _ansatz_parts(x)
        sigma = 0.5 * (sigma + sigma.conj().T)
        lam, v = np.linalg.eigh(sigma)
        lam = np.clip(lam, 0.0, None) + self.eps
        logl = np.log2(lam)
        rt = v.conj().T @ self.rho @ v
        value = self.s_rho - float(np.real(np.sum(np.diag(rt) * logl)))
        # first divided differences of log2 on the spectrum (Daleckii-Krein)
        dl = lam[:, None] - lam[None, :]
        dlog = logl[:, None] - logl[None, :]
        close = np.abs(dl) < 1e-12 * np.maximum(lam[:, None], lam[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            gam = np.where(close, 1.0 / (_LN2 * 0.5 * (lam[:, None] + lam[None, :])), dlog / dl)
        d = v @ (gam * rt) @ v.conj().T  # dTr(rho log2 sigma) = Tr(d dsigma)
        d4 = d.reshape(2, 2, 2, 2)
        # Tr(d (X (x) Y)) = sum d[a,b,c,e] X[c,a] Y[e,b]
        g_w = -np.einsum("abce,nca,neb->n", d4, a, b).real
        da = np.einsum("abce,neb->nca", d4, b)  # partial contraction against B_i
        db = np.einsum("abce,nca->neb", d4, a)
        g_ra = -(w[:, None] * np.einsum("nca,kca->nk", da, _HALF_PAULIS).real)
        g_rb = -(w[:, None] * np.einsum("neb,keb->nk", db, _HALF_PAULIS).real)
        grad = np.concatenate([g_w, g_ra.ravel(), g_rb.ravel()])
        return value, grad


@dataclass(frozen=True)
class ReeConfig:
    n_starts: int = 10
    max_iter: int = 2000
    objective_tol: float = 1e-8
    gradient_tol: float = 1e-6
    constraint_tol: float = 1e-8
    accept_spread: float = 1e-4
    accept_min_runs: int = 3
    epsilon: float = LOG_EPSILON


@dataclass
class ReeResult:
    value: float
    closest_separable: SeparableAnsatz
    n_converged_runs: int
    run_spread: float
    n_agreeing_runs: int = 0
    run_values: list[float] = field(default_factory=list)


def _random_start(g: np.random.Generator) -> np.ndarray:
    w = g.dirichlet(np.ones(N_COMPONENTS))
    ra = uniform_ball(g, N_COMPONENTS)
    rb = uniform_ball(g, N_COMPONENTS)
    return np.concatenate([w, ra.ravel(), rb.ravel()])


def _constraints():
    n = N_COMPONENTS

    def eq(x):
        return np.array([x[:n].sum() - 1.0])

    def eq_jac(x):
        j = np.zeros((1, 7 * n))
        j[0, :n] = 1.0
        return j

    def ineq(x):
        r = x[n:].reshape(2 * n, 3)
        return 1.0 - np.sum(r * r, axis=1)

    def ineq_jac(x):
        r = x[n:].reshape(2 * n, 3)
        j = np.zeros((2 * n, 7 * n))
        for i in range(2 * n):
            j[i, n + 3 * i : n + 3 * i + 3] = -2 * r[i]
        return j

    return [{"type": "eq", "fun": eq, "jac": eq_jac}, {"type": "ineq", "fun": ineq, "jac": ineq_jac}]


def _constraint_violation(x: np.ndarray) -> float:
    n = N_COMPONENTS
    w = x[:n]
    r = x[n:].reshape(2 * n, 3)
    return float(max(abs(w.sum() - 1.0), max(0.0, -w.min()), max(0.0, np.max(np.sum(r * r, axis=1) - 1.0))))


def _minimize_from(rho: np.ndarray, x0: np.ndarray, config: ReeConfig, bounds, cons):
    # Continuation in the log regularizer: a pure or low-rank target makes
    # log2(sigma + eps) extremely steep at eps=1e-14 and SLSQP then leaves the
    # Bloch ball. Each stage warm-starts from the projected previous optimum.
    res = None
    stages = [e for e in _EPS_STAGES if e > config.epsilon] + [config.epsilon]
    for eps in stages:
        obj = _ReeObjective(rho, eps)
        for _ in range(_RETRIES):
            res = minimize(
                obj.value_and_grad,
                x0,
                jac=True,
                method="SLSQP",
                bounds=bounds,
                constraints=cons,
                options={"maxiter": config.max_iter, "ftol": config.objective_tol * 1e-2},
            )
            x0 = SeparableAnsatz.from_vector(res.x, project=True).to_vector()
            if res.success:
                break
    return res


def ree(rho, config: ReeConfig = ReeConfig(), seed: int = 0) -> ReeResult:
    """Relative entropy of entanglement by multi-start SLSQP over the separable ansatz.

    Raises NotConverged (with ``best`` set) unless at least
    ``config.accept_min_runs`` converged runs land within ``config.accept_spread``
    of the best value.
    """
    rho = as_cmat(rho, dims=(4,))
    obj = _ReeObjective(rho, config.epsilon)
    bounds = [(0.0, 1.0)] * N_COMPONENTS + [(-1.0, 1.0)] * (6 * N_COMPONENTS)
    cons = _constraints()
    runs: list[tuple[float, int, SeparableAnsatz]] = []
    for k in range(config.n_starts):
        x0 = _random_start(rng.generator(seed, rng.REE_START, k))
        res = _minimize_from(rho, x0, config, bounds, cons)
        if not res.success or _constraint_violation(res.x) > config.constraint_tol:
            log.debug("REE start %d rejected: %s", k, res.message)
            continue
        ans = SeparableAnsatz.from_vector(res.x, project=True)
        value, _ = obj.value_and_grad(ans.to_vector())
        runs.append((max(value, 0.0), k, ans))
    if not runs:
        raise NotConverged("no REE start converged", best=None)
    runs.sort(key=lambda t: (t[0], t[1]))
    values = [r[0] for r in runs]
    best_value, _, best_ans = runs[0]
    agreeing = [v for v in values if v - best_value <= config.accept_spread]
    top = values[: config.accept_min_runs]
    result = ReeResult(
        value=float(best_value),
        closest_separable=best_ans,
        n_converged_runs=len(runs),
        run_spread=float(top[-1] - top[0]),
        n_agreeing_runs=len(agreeing),
        run_values=values,
    )
    if len(agreeing) < config.accept_min_runs:
        raise NotConverged(
            f"only {len(agreeing)} of {len(runs)} converged REE runs within {config.accept_spread:g} of the best",
            best=result,
        )
    return result


MEASURES = ("concurrence", "negativity", "ree")


def measure(rho, name: str, ree_config: ReeConfig = ReeConfig(), seed: int = 0) -> float:
    """Evaluate one named entanglement measure."""
    if name == "concurrence":
        return concurrence(rho)
    if name == "negativity":
        return negativity(rho)
    if name == "ree":
        return ree(rho, ree_config, seed).value
    raise ValueError(f"unknown measure {name!r}; choose from {MEASURES}")
