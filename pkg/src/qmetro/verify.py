"""Fast self-check of exact identities the library must satisfy.

Each check is a closed-form fact (identity maps, fixed points, algebraic
identities); ``qmetro verify`` runs them all and exits non-zero on any failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import channels, entanglement, linalg, metrology, states, stats
from .errors import DegenerateData, RangeViolation


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def _close(a, b, tol) -> bool:
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= tol))


def _raises(exc, fn) -> bool:
    try:
        fn()
    except exc:
        return True
    return False


def _checks() -> list[tuple[str, Callable[[], bool]]]:
    bell = states.bell_state()
    mixed = states.maximally_mixed()
    hs = states.gen_hs_random(12345)
    zz = metrology.pauli_product_generator("z", "z")
    ket11 = states.product_state((0, 0, -1), (0, 0, -1))
    x = np.linspace(0, 1, 200)
    return [
        ("eig(I4) = [1,1,1,1]", lambda: _close(linalg.hermitian_eig(np.eye(4)).eigenvalues, 1.0, 1e-14)),
        ("eig(sigma_z) = [1,-1]", lambda: _close(linalg.hermitian_eig(linalg.SIGMA_Z).eigenvalues, [1, -1], 1e-14)),
        ("kron(I2, I2) = I4", lambda: _close(linalg.kron(linalg.I2, linalg.I2), np.eye(4), 0)),
        ("kron(sz, sz) = diag(1,-1,-1,1)", lambda: _close(linalg.kron(linalg.SIGMA_Z, linalg.SIGMA_Z), np.diag([1, -1, -1, 1]), 0)),
        ("partial transpose is an involution", lambda: _close(linalg.partial_transpose_A(linalg.partial_transpose_A(hs)), hs, 0)),
        ("trace norm of a state = 1", lambda: _close(linalg.trace_norm(hs), 1.0, 1e-12)),
        ("trace norm diag(1/2,1/2,1/2,-1/2) = 2", lambda: _close(linalg.trace_norm(np.diag([0.5, 0.5, 0.5, -0.5])), 2.0, 1e-14)),
        ("log2(I4/4) = -2 on the diagonal", lambda: _close(np.diag(linalg.matrix_log2_regularized(mixed)).real, -2.0, 1e-12)),
        ("log2(I4) ~ 0", lambda: _close(linalg.matrix_log2_regularized(np.eye(4)), 0.0, 2 * linalg.LOG_EPSILON)),
        ("HS sampling is deterministic", lambda: np.array_equal(states.gen_hs_random(7), states.gen_hs_random(7))),
        ("HS sample validates", lambda: states.validate(hs) == []),
        ("validate(I4/4) is empty", lambda: states.validate(mixed) == []),
        ("validate flags a negative eigenvalue", lambda: any("positivity" in m for m in states.validate(np.diag([0.6, 0.6, -0.1, -0.1])))),
        ("purity(I4/4) = 0.25", lambda: _close(states.purity(mixed), 0.25, 1e-15)),
        ("purity(Bell) = 1", lambda: _close(states.purity(bell), 1.0, 1e-14)),
        ("product of zero Bloch vectors = I4/4", lambda: _close(states.product_state((0, 0, 0), (0, 0, 0)), mixed, 1e-15)),
        ("product of poles = |00><00|", lambda: _close(states.product_state((0, 0, 1), (0, 0, 1)), np.diag([1, 0, 0, 0]), 1e-15)),
        ("werner(0) = I4/4, werner(1) = Bell", lambda: _close(states.werner(0), mixed, 1e-15) and _close(states.werner(1), bell, 1e-15)),
        ("separable mixture has zero negativity", lambda: entanglement.negativity(states.separable_mixture(5)) <= 1e-10),
        ("separable mixture with one component is a product", lambda: _close(entanglement.concurrence(states.separable_mixture(5, 1)), 0, 1e-8)),
        ("C(product) = 0", lambda: entanglement.concurrence(states.product_state((0.3, 0, 0.5), (0, -0.7, 0.1))) <= 1e-8),
        ("C(Bell) = 1", lambda: _close(entanglement.concurrence(bell), 1.0, 1e-9)),
        ("N(Bell) = 0.5", lambda: _close(entanglement.negativity(bell), 0.5, 1e-9)),
        ("S(rho||rho) = 0", lambda: _close(entanglement.relative_entropy(hs, hs), 0.0, 1e-7)),
        ("QFI(I4/4, H) = 0", lambda: metrology.qfi(mixed, zz.mat) == 0.0),
        ("MQFI(I4/4) = 0", lambda: _close(metrology.mqfi(mixed).value, 0.0, 1e-8)),
        ("sz sz generator = diag(1,-1,-1,1)", lambda: _close(zz.mat, np.diag([1, -1, -1, 1]), 0)),
        ("Pauli products have unit norm", lambda: all(_close(np.abs(linalg.hermitian_eig(metrology.pauli_product_generator(a, b).mat).eigenvalues), 1, 1e-14) for a in "xyz" for b in "xyz")),
        ("generator spread on I4/4 = 0", lambda: metrology.verify_generator_independence(mixed, [metrology.pauli_product_generator(c, c) for c in "xyz"]) <= 1e-8),
        ("channels at gamma=0 are the identity", lambda: all(np.array_equal(f(hs, 0.0), hs) for f in channels.CHANNELS.values())),
        ("AD decays each qubit independently", lambda: _close(channels.amplitude_damping(ket11, 0.3).diagonal().real, [0.09, 0.21, 0.21, 0.49], 1e-14)),
        ("AD(|11><11|, 0.5) has uniform populations", lambda: _close(channels.amplitude_damping(ket11, 0.5).diagonal().real, 0.25, 1e-14)),
        ("DEP rejects gamma > 0.75", lambda: _raises(RangeViolation, lambda: channels.depolarizing(bell, 1.0))),
        ("correction fixed point P_inf", lambda: _close(channels.depolarizing_correction(0.3, 0.4, 0.3), 0.3, 1e-15)),
        ("correction at gamma=0 is the identity", lambda: channels.depolarizing_correction(0.756, 0.0, 0.2) == 0.756),
        ("correction inverts the forward map", lambda: _close(channels.depolarizing_correction(0.5 * 0.756, 0.5, 0.0), 0.756, 1e-15)),
        ("FD width rejects constant data", lambda: _raises(DegenerateData, lambda: stats.fd_bin_width(np.ones(50)))),
        ("bins of y = x track bin centres", lambda: bool(np.all(np.abs(stats.bin_series(x, x, 10, 1).mean - stats.bin_series(x, x, 10, 1).centers) <= 0.05))),
        ("bins of constant y have zero SE", lambda: bool(np.all(stats.bin_series(x, np.full_like(x, 0.3), 10, 1).standard_error == 0))),
        ("exact line fit", lambda: _close(stats.fit_model("linear", x, 2 * x + 1).params, [1, 2], 1e-12)),
        ("AIC(RSS = n, p = 2) = 4", lambda: _close(stats.information_criteria(10.0, 10, 2)[0], 4.0, 1e-12)),
        ("R2_CV = 1 on an exact line", lambda: _close(stats.kfold_cv("linear", x, 2 * x + 1, 5, 3), 1.0, 1e-12)),
        ("split is a partition", lambda: sorted(np.concatenate(stats.train_test_split(100, 0.2, 1)).tolist()) == list(range(100))),
        ("pearson(x, x) = 1, pearson(x, -x) = -1", lambda: stats.pearson(x, x) == 1.0 and stats.pearson(x, -x) == -1.0),
        ("boundaries of y = x sit near the centres", lambda: _close(stats.boundary_extract(x, x, 10)[0][:, 1], stats.boundary_extract(x, x, 10)[0][:, 0], 0.06)),
    ]


def run_checks() -> list[Check]:
    out = []
    for name, fn in _checks():
        try:
            out.append(Check(name, bool(fn())))
        except Exception as exc:  # a crash is a failed check, reported with its cause
            out.append(Check(name, False, f"{type(exc).__name__}: {exc}"))
    return out


def summary_line(check: Check) -> str:
    mark = "PASS" if check.passed else "FAIL"
    return f"[{mark}] {check.name}" + (f" ({check.detail})" if check.detail else "")


if __name__ == "__main__":  # pragma: no cover
    results = run_checks()
    for c in results:
        print(summary_line(c))
    raise SystemExit(0 if all(c.passed for c in results) else 1)
