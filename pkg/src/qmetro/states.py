"""Two-qubit density matrices: random ensembles, reference states, validation."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import rng
from .errors import BlochNormViolation, DegenerateSample, RangeViolation
from .linalg import PAULIS, as_cmat

STATE_TOL = 1e-12
MAX_RESAMPLES = 3
PURE_CUTOFF = 0.99

CSV_COLUMNS = ("state_id", "seed", "purity", "concurrence", "negativity", "ree", "mqfi", "mqfi_norm")


def validate(rho, tol: float = STATE_TOL) -> list[str]:
    """Return the list of violated density-matrix properties (empty if valid)."""
    rho = as_cmat(rho, dims=(4,))
    problems = []
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > tol:
        problems.append(f"hermiticity: max|rho - rho^dag| = {herm:.3e}")
    lam_min = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if lam_min < -tol:
        problems.append(f"positivity: min eigenvalue = {lam_min:.3e}")
    tr = complex(np.trace(rho))
    resid = abs(tr - 1.0)
    if resid > tol:
        problems.append(f"normalization: |Tr(rho) - 1| = {resid:.3e}")
    return problems


def gen_hs_random(seed: int) -> np.ndarray:
    """Hilbert-Schmidt random state rho = M M^dag / Tr(M M^dag), keyed by ``seed``."""
    g = np.random.Generator(np.random.Philox(int(seed) & ((1 << 64) - 1)))
    for _ in range(1 + MAX_RESAMPLES):
        m = g.standard_normal((4, 4)) + 1j * g.standard_normal((4, 4))
        mm = m @ m.conj().T
        tr = float(np.trace(mm).real)
        if tr >= 1e-12:
            rho = mm / tr
            return 0.5 * (rho + rho.conj().T)
    raise DegenerateSample(f"Tr(MM^dag) < 1e-12 after {MAX_RESAMPLES} resamples (seed={seed})")


def purity(rho) -> float:
    rho = np.asarray(rho)
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho) ** 2))


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(4)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bell_state() -> np.ndarray:
    """|Phi+><Phi+| with |Phi+> = (|00> + |11>)/sqrt(2)."""
    return pure_state([1, 0, 0, 1])


def maximally_mixed() -> np.ndarray:
    return np.eye(4, dtype=complex) / 4


def qubit_state(bloch) -> np.ndarray:
    r = np.asarray(bloch, dtype=float)
    if r.shape != (3,):
        raise ValueError("Bloch vector must have 3 components")
    if np.linalg.norm(r) > 1 + 1e-12:
        raise BlochNormViolation(f"Bloch vector norm {np.linalg.norm(r):.6f} exceeds 1")
    return 0.5 * (PAULIS["i"] + r[0] * PAULIS["x"] + r[1] * PAULIS["y"] + r[2] * PAULIS["z"])


def product_state(bloch_a, bloch_b) -> np.ndarray:
    return np.kron(qubit_state(bloch_a), qubit_state(bloch_b))


def werner(p: float) -> np.ndarray:
    """p |Phi+><Phi+| + (1 - p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise RangeViolation(f"Werner parameter p={p} outside [0, 1]")
    return p * bell_state() + (1 - p) * maximally_mixed()


def uniform_ball(g: np.random.Generator, size: int) -> np.ndarray:
    """``size`` points uniform in the unit 3-ball."""
    v = g.standard_normal((size, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * g.random((size, 1)) ** (1 / 3)


def separable_mixture(seed: int, n_components: int = 4) -> np.ndarray:
    """Convex mixture of random product states; separable by construction."""
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    g = rng.generator(seed, rng.SEPARABLE)
    weights = g.dirichlet(np.ones(n_components))
    ra = uniform_ball(g, n_components)
    rb = uniform_ball(g, n_components)
    rho = sum(w * product_state(a, b) for w, a, b in zip(weights, ra, rb))
    return 0.5 * (rho + rho.conj().T)


@dataclass
class EnsembleRecord:
    state_id: int
    seed: int
    purity: float
    concurrence: float
    negativity: float
    ree: float | None
    mqfi: float
    mqfi_norm: float

    def csv_row(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                out.append("")
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            else:
                out.append(format(float(v), ".17g"))
        return out

    @classmethod
    def from_csv_row(cls, row: dict) -> "EnsembleRecord":
        def num(key):
            s = row[key]
            return None if s == "" else float(s)

        return cls(
            state_id=int(row["state_id"]),
            seed=int(row["seed"]),
            purity=float(row["purity"]),
            concurrence=float(row["concurrence"]),
            negativity=float(row["negativity"]),
            ree=num("ree"),
            mqfi=float(row["mqfi"]),
            mqfi_norm=float(row["mqfi_norm"]),
        )
