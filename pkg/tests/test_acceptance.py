"""Acceptance suite: one test per acceptance criterion, each printing a PASS/FAIL line.

The desk-scale run (20,000 states, 500-state REE subsample, three 2,000-state channel
sweeps, 1,000 separable mixtures) takes tens of minutes on one core.  Its outputs are
cached under ``.acceptance_run/`` (override with ``QMETRO_ACCEPTANCE_DIR``) together with
a stamp of the configuration and library source; the cache is rebuilt whenever either
changes.  Derived numbers are recomputed from the written artifacts with independent
tools (scipy.stats, numpy.polyfit, scipy.optimize.curve_fit) where possible.

Run alone with ``python3 -m pytest -v tests/test_acceptance.py``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize
from scipy import stats as sstats

import qmetro
from qmetro import channels, entanglement, metrology, pipeline, rng, states, stats
from qmetro.config import ExperimentConfig
from qmetro.parallel import resolve_workers

from conftest import random_ket, record_criterion

ROOT = Path(__file__).resolve().parents[1]
MEASURES = ("concurrence", "negativity", "ree")


# -- desk-scale run ------------------------------------------------------------------


def _stamp(config: ExperimentConfig) -> str:
    cfg = config.to_dict()
    cfg.pop("output_dir")
    cfg.pop("workers")
    h = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode())
    for src in sorted(Path(qmetro.__file__).parent.glob("*.py")):
        h.update(src.name.encode() + src.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="session")
def desk_run() -> Path:
    out = Path(os.environ.get("QMETRO_ACCEPTANCE_DIR", ROOT / ".acceptance_run"))
    config = ExperimentConfig(master_seed=42, output_dir=str(out), workers="auto")
    stamp = _stamp(config)
    stamp_file = out / "acceptance.stamp"
    if stamp_file.exists() and stamp_file.read_text().strip() == stamp and (out / "report.json").exists():
        return out
    if stamp_file.exists():
        stamp_file.unlink()
    workers = resolve_workers("auto")
    csv_path, _ = pipeline.run_ensemble(config, workers=workers, overwrite=True)
    pipeline.run_analysis(csv_path, config)
    pipeline.run_sweeps(config, workers=workers)
    pipeline.run_separable_baseline(config, workers=workers)
    pipeline.report(config)
    stamp_file.write_text(stamp + "\n")
    return out


def load_json(path: Path):
    return json.loads(path.read_text())


def load_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def column(rows, key) -> np.ndarray:
    return np.array([float(r[key]) for r in rows if r[key] != ""])


def verdict(number: int, title: str, checks: dict[str, bool], detail: str) -> None:
    passed = all(checks.values())
    failing = [k for k, ok in checks.items() if not ok]
    record_criterion(number, title, passed, detail + (f" | failing: {', '.join(failing)}" if failing else ""))
    assert passed, f"criterion {number} ({title}) not met: {detail}"


def within(v, lo, hi) -> bool:
    return v is not None and math.isfinite(v) and lo <= v <= hi


def sweep_series(run: Path, kind: str) -> tuple[np.ndarray, dict[str, np.ndarray], bool, dict]:
    result = load_json(run / "sweeps" / f"{kind}_concurrence.json")
    evo = load_json(run / "sweeps" / f"{kind}_concurrence_evolution.json")
    ok = [p for p in result["params"] if p["A"] is not None]
    g = np.array([p["gamma"] for p in ok])
    series = {k: np.array([p[k] for p in ok]) for k in ("A", "alpha", "B")}
    return g, series, len(ok) == len(result["params"]), evo


# -- quantitative criteria ----------------------------------------------------------------


def test_criterion_01_ensemble_purity():
    t0 = time.perf_counter()
    purities = np.array([states.purity(states.gen_hs_random(rng.derive_seed(42, rng.STATE, i))) for i in range(20000)])
    elapsed = time.perf_counter() - t0
    mean = float(purities.mean())
    verdict(
        1,
        "ensemble purity",
        {"mean purity in [0.50, 0.54]": within(mean, 0.50, 0.54), "runtime < 60 s": elapsed < 60},
        f"mean Tr(rho^2) = {mean:.4f} over 20000 states (random-matrix expectation 8/17 = {8 / 17:.4f}); {elapsed:.1f} s",
    )


def test_criterion_02_correlations(desk_run):
    rows = load_csv(desk_run / "ensemble.csv")
    mq = column(rows, "mqfi_norm")
    r_c = sstats.pearsonr(column(rows, "concurrence"), mq)[0]
    r_n = sstats.pearsonr(column(rows, "negativity"), mq)[0]
    sub = [r for r in rows if r["ree"] != ""]
    r_e = sstats.pearsonr(column(sub, "ree"), column(sub, "mqfi_norm"))[0]
    verdict(
        2,
        "correlations",
        {
            "n >= 5000": len(rows) >= 5000,
            "r(C, MQFI) in [0.93, 0.97]": within(r_c, 0.93, 0.97),
            "r(N, MQFI) in [0.92, 0.96]": within(r_n, 0.92, 0.96),
            "r(REE, MQFI) in [0.83, 0.93]": within(r_e, 0.83, 0.93),
        },
        f"n={len(rows)}: r_C={r_c:.4f}, r_N={r_n:.4f}, r_REE={r_e:.4f} (REE n={len(sub)})",
    )


def test_criterion_03_cubic_fit(desk_run):
    d = desk_run / "analysis" / "concurrence"
    table = {r["model"]: r for r in load_csv(d / "table1.csv")}
    r2_train, r2_cv = float(table["cubic"]["r2_train"]), float(table["cubic"]["r2_cv"])
    bins = load_csv(d / "bins.csv")
    x, y, se = column(bins, "x_mean"), column(bins, "mean"), column(bins, "standard_error")
    coef = np.polyfit(x, y, 3, w=1 / se)
    w = 1 / se**2
    ybar = np.sum(w * y) / np.sum(w)
    oracle = 1 - np.sum(w * (y - np.polyval(coef, x)) ** 2) / np.sum(w * (y - ybar) ** 2)
    verdict(
        3,
        "cubic fit on binned concurrence",
        {
            "R2_train matches an independent weighted polyfit": abs(oracle - r2_train) <= 1e-8,
            "R2_train >= 0.995": r2_train >= 0.995,
            "|R2_train - R2_CV| <= 0.005": abs(r2_train - r2_cv) <= 0.005,
        },
        f"R2_train={r2_train:.4f}, R2_CV={r2_cv:.4f}, gap={abs(r2_train - r2_cv):.4f} on {len(bins)} bins",
    )


def test_criterion_04_exponential_saturation(desk_run):
    fit = load_json(desk_run / "analysis" / "concurrence" / "fits.json")["exponential_saturation"]
    a, alpha, b = fit["params"]
    boot = load_json(desk_run / "analysis" / "concurrence" / "bootstrap.json")["exponential_saturation"]["params"]
    ci = {k: (boot[k]["ci_low"], boot[k]["ci_high"]) for k in ("A", "alpha", "B")}
    overlaps = {
        "A CI covers 0.756": ci["A"][0] <= 0.756 <= ci["A"][1],
        "alpha CI covers 2.31": ci["alpha"][0] <= 2.31 <= ci["alpha"][1],
        "B CI overlaps [0.164, 0.211]": ci["B"][0] <= 0.211 and 0.164 <= ci["B"][1],
    }
    verdict(
        4,
        "exponential saturation on concurrence",
        {"A in [0.70, 0.81]": within(a, 0.70, 0.81), "alpha in [2.0, 2.7]": within(alpha, 2.0, 2.7), "B in [0.15, 0.22]": within(b, 0.15, 0.22), **overlaps},
        f"A={a:.3f} {np.round(ci['A'], 3).tolist()}, alpha={alpha:.3f} {np.round(ci['alpha'], 3).tolist()}, B={b:.3f} {np.round(ci['B'], 3).tolist()}",
    )


def test_criterion_05_baseline_significance(desk_run):
    summary = load_json(desk_run / "analysis" / "summary.json")["measures"]
    checks, parts = {}, []
    for m in MEASURES:
        ex = summary.get(m, {}).get("exponential", {})
        p_norm, p_emp = ex.get("B_zero_p_normal"), ex.get("B_zero_p_empirical")
        checks[f"{m}: p < 0.001"] = p_norm is not None and p_norm < 1e-3
        parts.append(f"{m}: B={ex.get('params', {}).get('B', float('nan')):.3f}, p_normal={p_norm}, p_empirical={p_emp}")
    verdict(5, "non-zero baseline significance", checks, "; ".join(parts))


def test_criterion_06_separable_baseline(desk_run):
    base = load_json(desk_run / "baseline.json")
    verdict(
        6,
        "separable baseline",
        {"n = 1000": base["n"] == 1000, "all certified separable": base["max_negativity"] <= 1e-10, "mean MQFI/4 in [0.14, 0.24]": within(base["mean"], 0.14, 0.24)},
        f"mean={base['mean']:.4f}, std={base['std']:.4f}, range=[{base['min']:.3f}, {base['max']:.3f}] over n={base['n']}",
    )


def test_criterion_07_amplitude_damping(desk_run):
    g, s, complete, evo = sweep_series(desk_run, "amplitude_damping")
    result = load_json(desk_run / "sweeps" / "amplitude_damping_concurrence.json")
    rel = s["A"] / s["A"][0]
    (c, beta), _ = optimize.curve_fit(lambda x, c, b: c * np.exp(-b * x), g, rel, p0=[1.0, 1.0])
    r2 = 1 - np.sum((rel - c * np.exp(-beta * g)) ** 2) / np.sum((rel - rel.mean()) ** 2)
    verdict(
        7,
        "amplitude-damping sweep",
        {
            "n_sample >= 1000": result["n_sample"] >= 1000,
            "all gammas fitted": complete,
            "matches the pipeline's beta": abs(beta - evo["A_exponential"]["beta"]) <= 1e-4 * max(1, abs(beta)),
            "beta_A in [0.9, 1.6]": within(beta, 0.9, 1.6),
            "R2 >= 0.95": r2 >= 0.95,
        },
        f"beta_A={beta:.3f}, R2={r2:.3f}, A(gamma)={np.round(s['A'], 3).tolist()} at {g.tolist()}",
    )


def test_criterion_08_phase_damping(desk_run):
    g, s, complete, evo = sweep_series(desk_run, "phase_damping")
    drift = {k: float(np.max(np.abs(v - v[0]) / abs(v[0]))) for k, v in s.items()}
    winners = {k: evo["model_comparison"][k]["aic_winner"] for k in s}
    verdict(
        8,
        "phase-damping sweep",
        {
            "all gammas fitted": complete,
            **{f"{k} drift < 10%": drift[k] < 0.10 for k in s},
            **{f"{k}: constant wins AIC": winners[k] == "constant" for k in s},
        },
        "drift " + ", ".join(f"{k}={drift[k]:.1%}" for k in s) + f"; AIC winners {winners}; fitted gammas {g.tolist()}",
    )


def test_criterion_09_depolarizing(desk_run):
    g, s, complete, evo = sweep_series(desk_run, "depolarizing")
    lr = sstats.linregress(g, s["A"])
    verdict(
        9,
        "depolarizing sweep",
        {"all gammas fitted": complete, "A(gamma) linear R2 >= 0.995": lr.rvalue**2 >= 0.995},
        f"A(gamma)={np.round(s['A'], 3).tolist()} at {g.tolist()}: slope={lr.slope:.3f}, R2={lr.rvalue**2:.4f}",
    )


def test_criterion_10_generator_independence():
    gens = [metrology.pauli_product_generator(c, c) for c in "xyz"]
    spreads = np.array([metrology.verify_generator_independence(states.gen_hs_random(1000 + i), gens) for i in range(50)])
    verdict(
        10,
        "generator independence",
        {"spread <= 1e-3 for every state": bool(np.all(spreads <= 1e-3))},
        f"50 random states: max spread {spreads.max():.2e}, median {np.median(spreads):.2e}",
    )


def test_criterion_11_bin_robustness(desk_run):
    rows = [r for r in load_csv(desk_run / "analysis" / "concurrence" / "bin_robustness.csv") if int(r["n_bins"]) in (20, 25, 30)]
    spread = {}
    for k in ("A", "alpha", "B"):
        v = column(rows, k)
        spread[k] = float((v.max() - v.min()) / abs(v.mean()))
    verdict(
        11,
        "bin-count robustness",
        {f"{k} varies < 5%": spread[k] < 0.05 for k in spread} | {"three bin counts": len(rows) == 3},
        "relative spread over n_bins in {20, 25, 30}: " + ", ".join(f"{k}={v:.2%}" for k, v in spread.items()),
    )


def test_criterion_12_upper_boundary(desk_run):
    d = desk_run / "analysis" / "concurrence"
    rows = load_csv(d / "boundaries.csv")
    x, y = column(rows, "center"), column(rows, "upper")
    coef = np.polyfit(x, y, 2)
    r2 = 1 - np.sum((y - np.polyval(coef, x)) ** 2) / np.sum((y - y.mean()) ** 2)
    reported = load_json(d / "boundary_fits.json")["upper"]["r2"]
    verdict(
        12,
        "upper-boundary quadratic fit",
        {"matches the pipeline's R2": abs(r2 - reported) <= 1e-8, "R2 >= 0.98": r2 >= 0.98},
        f"R2={r2:.4f} on {len(rows)} per-bin maxima",
    )


# -- property criteria ----------------------------------------------------------------------


def test_criterion_13_analytic_anchors():
    g = np.random.default_rng(13)
    bell = states.bell_state()
    pure_err = 0.0
    for _ in range(200):
        psi = random_ket(g)
        a, b, c, d = psi
        pure_err = max(pure_err, abs(entanglement.concurrence(np.outer(psi, psi.conj())) - 2 * abs(a * d - b * c)))
    werner_err = 0.0
    for p in np.linspace(0, 1, 50):
        rho = states.werner(p)
        werner_err = max(
            werner_err,
            abs(entanglement.concurrence(rho) - max(0.0, (3 * p - 1) / 2)),
            abs(entanglement.negativity(rho) - max(0.0, (3 * p - 1) / 4)),
        )
    c_bell, n_bell = entanglement.concurrence(bell), entanglement.negativity(bell)
    verdict(
        13,
        "analytic anchors",
        {
            "C(Bell) = 1": abs(c_bell - 1) <= 1e-9,
            "N(Bell) = 0.5": abs(n_bell - 0.5) <= 1e-9,
            "C(pure) = 2|ad - bc|": pure_err <= 1e-8,
            "Werner closed forms": werner_err <= 1e-8,
        },
        f"|C(Bell)-1|={abs(c_bell - 1):.1e}, |N(Bell)-0.5|={abs(n_bell - 0.5):.1e}, pure max err={pure_err:.1e}, Werner max err={werner_err:.1e}",
    )


def test_criterion_14_qfi_anchors():
    g = np.random.default_rng(14)
    zz = metrology.pauli_product_generator("z", "z")
    mixed_ok = all(metrology.qfi(states.maximally_mixed(), h.mat) == 0.0 for h in [zz, metrology.pauli_product_generator("x", "y")])
    var_err = 0.0
    for _ in range(100):
        psi = random_ket(g)
        a = g.normal(size=(4, 4)) + 1j * g.normal(size=(4, 4))
        h = (a + a.conj().T) / 2
        h /= np.max(np.abs(np.linalg.eigvalsh(h)))
        var = float(np.real(psi.conj() @ h @ h @ psi) - np.real(psi.conj() @ h @ psi) ** 2)
        var_err = max(var_err, abs(metrology.qfi(np.outer(psi, psi.conj()), h) - 4 * var))
    bell_mqfi = metrology.mqfi(states.bell_state()).value
    deficits = []
    for i in range(100):
        res = metrology.mqfi(states.gen_hs_random(5000 + i))
        deficits.append(res.identity_value - res.value)
    verdict(
        14,
        "QFI anchors",
        {
            "QFI(I/4, H) = 0 exactly": mixed_ok,
            "pure QFI = 4 Var(H)": var_err <= 1e-8,
            "MQFI(Bell) = 4": abs(bell_mqfi - 4) <= 1e-4,
            "MQFI >= identity-start QFI": max(deficits) <= 0,
        },
        f"pure-state max err={var_err:.1e}, MQFI(Bell)={bell_mqfi:.6f}, max(identity QFI - MQFI)={max(deficits):.1e} over 100 states",
    )


def test_criterion_15_cptp_suite():
    rhos = [states.gen_hs_random(7000 + i) for i in range(50)]
    grid = {"amplitude_damping": (0.0, 0.1, 0.25, 0.5), "phase_damping": (0.0, 0.1, 0.25, 0.5), "depolarizing": (0.0, 0.1, 0.4, 0.75)}
    validity = all(states.validate(channels.CHANNELS[k](r, gm), 1e-10) == [] for k, gs in grid.items() for gm in gs for r in rhos)
    completeness = 0.0
    for kraus_fn in (channels.amplitude_damping_kraus, channels.phase_damping_kraus):
        for gm in np.linspace(0, 0.5, 11):
            ks = kraus_fn(gm)
            completeness = max(completeness, float(np.max(np.abs(sum(k.conj().T @ k for k in ks) - np.eye(2)))))
    pop_err = max(float(np.max(np.abs(np.diag(channels.phase_damping(r, gm)) - np.diag(r)))) for r in rhos for gm in (0.1, 0.3, 0.5))
    rise = 0.0
    for r in rhos:
        c0, n0 = entanglement.concurrence(r), entanglement.negativity(r)
        for k in ("amplitude_damping", "phase_damping"):
            for gm in (0.1, 0.3, 0.5):
                out = channels.CHANNELS[k](r, gm)
                rise = max(rise, entanglement.concurrence(out) - c0, entanglement.negativity(out) - n0)
    verdict(
        15,
        "CPTP suite",
        {
            "outputs valid at 1e-10": validity,
            "Kraus completeness <= 1e-12": completeness <= 1e-12,
            "phase damping keeps populations": pop_err <= 1e-14,
            "local channels never raise C or N": rise <= 1e-8,
        },
        f"completeness residual {completeness:.1e}, population drift {pop_err:.1e}, max C/N increase {rise:.1e}",
    )


def test_criterion_16_statistics_suite():
    g = np.random.default_rng(16)
    interp = 0.0
    for d, name in ((1, "linear"), (2, "quadratic"), (3, "cubic")):
        x = np.sort(g.random(d + 1))
        y = g.normal(size=d + 1)
        # fitting requires one point beyond the parameter count; the extra point lies on the interpolant
        coef = np.polynomial.polynomial.polyfit(x, y, d)
        x2, y2 = np.append(x, 0.5), np.append(y, np.polynomial.polynomial.polyval(0.5, coef))
        fit = stats.fit_model(name, x2, y2)
        interp = max(interp, float(np.max(np.abs(fit.residuals))), float(np.max(np.abs(fit.params - coef))))
    aic_small, bic_small = stats.information_criteria(2.0, 50, 3)
    aic_big, bic_big = stats.information_criteria(2.0, 50, 4)
    x = np.linspace(0, 1, 200)
    r2cv = stats.kfold_cv("linear", x, 3 * x - 1, 5, 7)

    def width(n):
        gg = np.random.default_rng(n)
        xx = np.linspace(0, 1, n)
        yy = 0.4 + 0.5 * xx + 0.1 * gg.normal(size=n)
        b = stats.bootstrap_fit("linear", xx, yy, 1000, seed=n)
        return b.ci_high - b.ci_low

    ratio = width(2000) / width(1000)
    verdict(
        16,
        "statistics suite",
        {
            "degree-d interpolation exact": interp <= 1e-8,
            "AIC/BIC penalize parameters": aic_small < aic_big and bic_small < bic_big,
            "R2_CV = 1 on exact line": abs(r2cv - 1) <= 1e-12,
            "CI width ratio 0.71 +/- 0.15": bool(np.all(np.abs(ratio - 1 / math.sqrt(2)) <= 0.15)),
        },
        f"max interpolation residual {interp:.1e}, R2_CV={r2cv:.12f}, CI width ratio n=2000/1000: {np.round(ratio, 3).tolist()}",
    )


# -- ensemble invariants (reported alongside the criteria, not numbered) ---------------------


def test_invariant_ppt_equivalence(desk_run):
    rows = load_csv(desk_run / "ensemble.csv")
    c, n = column(rows, "concurrence"), column(rows, "negativity")
    assert np.array_equal(c > 1e-9, n > 1e-9)
    # Hilbert-Schmidt two-qubit states are separable with probability 8/33
    assert abs(np.mean(c > 1e-9) - 25 / 33) <= 0.01


def test_invariant_concurrence_negativity_correlation(desk_run):
    rows = load_csv(desk_run / "ensemble.csv")
    r = sstats.pearsonr(column(rows, "concurrence"), column(rows, "negativity"))[0]
    assert abs(r - 0.94) <= 0.02, f"Pearson(C, N) = {r:.4f}"


def test_invariant_ree_concurrence_correlation(desk_run):
    sub = [r for r in load_csv(desk_run / "ensemble.csv") if r["ree"] != ""]
    r = sstats.pearsonr(column(sub, "ree"), column(sub, "concurrence"))[0]
    assert abs(r - 0.78) <= 0.04, f"Pearson(REE, C) = {r:.4f} on {len(sub)} states"


def test_invariant_baseline_intercepts_overlap(desk_run):
    cis = {}
    for m in MEASURES:
        boot = load_json(desk_run / "analysis" / m / "bootstrap.json")["exponential_saturation"]["params"]["B"]
        cis[m] = (boot["ci_low"], boot["ci_high"])
    for i, a in enumerate(MEASURES):
        for b in MEASURES[i + 1 :]:
            assert cis[a][0] <= cis[b][1] and cis[b][0] <= cis[a][1], f"B CIs of {a} {cis[a]} and {b} {cis[b]} are disjoint"


def _run_tree(out: Path, workers: int) -> dict[str, bytes]:
    sweep = channels.SweepDirective("amplitude_damping", "concurrence", (0.0, 0.1, 0.2), n_sample=500, bootstrap_n=20, n_bins=8)
    cfg = ExperimentConfig(master_seed=17, n_states=400, ree_subsample=60, bootstrap_n=100, baseline_n=100, sweeps=(sweep,), output_dir=str(out), workers=workers)
    path, _ = pipeline.run_ensemble(cfg)
    pipeline.run_analysis(path, cfg)
    pipeline.run_sweeps(cfg)
    pipeline.run_separable_baseline(cfg)
    pipeline.report(cfg)
    files = {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
    man = json.loads(files.pop("manifest.json"))
    for key in ("started", "finished", "workers"):
        man.pop(key)
    for key in ("workers", "output_dir"):
        man["config"].pop(key)
    files["manifest.json (without timestamps and worker count)"] = json.dumps(man, sort_keys=True).encode()
    return files


def test_criterion_17_determinism(tmp_path):
    one = _run_tree(tmp_path / "w1", 1)
    eight = _run_tree(tmp_path / "w8", 8)
    differing = sorted(k for k in set(one) | set(eight) if one.get(k) != eight.get(k))
    verdict(
        17,
        "determinism",
        {"same file set": sorted(one) == sorted(eight), "byte-identical": not differing},
        f"{len(one)} files compared (1 vs 8 workers)" + (f"; differ: {differing}" if differing else ""),
    )


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main(["-v", __file__]))
