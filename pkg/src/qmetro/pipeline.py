"""End-to-end experiment driver: ensemble, analysis, channel sweeps, baseline, report.

Everything written here is a deterministic function of the configuration; the
worker count only changes wall-clock time.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import shutil
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import __version__, rng, stats
from .channels import ChannelKind, SweepResult, channel_sweep
from .config import ExperimentConfig
from .entanglement import MEASURES, concurrence, negativity, ree
from .errors import ConvergenceFailure, PipelineFailure, QmetroError, ResumeConflict
from .metrology import MqfiConfig, mqfi
from .parallel import chunked, imap, pmap, resolve_workers
from .states import CSV_COLUMNS, EnsembleRecord, gen_hs_random, maximally_mixed, purity, separable_mixture

log = logging.getLogger(__name__)

STATE_CHUNK = 250
REE_CHUNK = 20
MAX_FAILED_FRACTION = 0.01
N_STRATA = 10
ROBUSTNESS_BINS = (15, 20, 25, 30, 35)
ROBUSTNESS_CORE = (20, 25, 30)
EVOLUTION_MODELS = ("constant", "linear", "exp_decay", "quadratic")


# -- serialization ---------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    _atomic_write(path, text)


def read_json(path: Path):
    with open(path) as fh:
        return json.load(fh)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else ""
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines += [",".join(_fmt(r[h]) if isinstance(r, dict) else _fmt(r[i]) for i, h in enumerate(header)) for r in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_ensemble(path) -> list[EnsembleRecord]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ensemble file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [EnsembleRecord.from_csv_row(r) for r in reader]


# -- ensemble --------------------------------------------------------------------


def _state_chunk(task):
    ids, master_seed, mqfi_cfg = task
    out = []
    for sid in ids:
        seed = rng.state_seed(master_seed, sid)
        row = {"state_id": int(sid), "seed": int(seed)}
        try:
            rho = gen_hs_random(seed)
            res = mqfi(rho, None, mqfi_cfg, seed)
            row.update(
                status="failed" if res.all_failed else "completed",
                purity=purity(rho),
                concurrence=concurrence(rho),
                negativity=negativity(rho),
                mqfi=res.value,
                low_confidence=res.low_confidence,
                error="all MQFI restarts failed" if res.all_failed else None,
            )
        except QmetroError as exc:
            row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        out.append(row)
    return out


def _ree_chunk(task):
    items, ree_cfg = task
    out = []
    for sid, seed in items:
        try:
            out.append({"state_id": sid, "ree": ree(gen_hs_random(seed), ree_cfg, seed).value, "error": None})
        except ConvergenceFailure as exc:
            out.append({"state_id": sid, "ree": None, "error": str(exc)})
    return out


def stratified_subsample(state_ids, conc, n: int, seed: int, n_strata: int = N_STRATA) -> list[int]:
    """Equal counts per concurrence decile (remainder to the lowest strata)."""
    ids = np.asarray(state_ids)
    if n >= ids.size:
        return sorted(int(i) for i in ids)
    order = np.lexsort((ids, np.asarray(conc)))
    strata = np.array_split(ids[order], n_strata)
    base, extra = divmod(n, n_strata)
    picked = []
    for k, stratum in enumerate(strata):
        q = min(base + (1 if k < extra else 0), stratum.size)
        picked += rng.generator(seed, rng.SUBSAMPLE, k).choice(stratum, q, replace=False).tolist()
    return sorted(int(i) for i in picked)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _run_chunks(partial: Path, prefix: str, tasks: list, func, workers: int) -> list:
    """Run ``func`` over ``tasks``, checkpointing each chunk; finished chunks are reused."""
    files = [partial / f"{prefix}_{i:05d}.json" for i in range(len(tasks))]
    pending = [i for i, f in enumerate(files) if not f.exists()]
    if len(pending) < len(tasks):
        log.info("%s: resuming, %d of %d chunks already done", prefix, len(tasks) - len(pending), len(tasks))
    for i, rows in zip(pending, imap(func, [tasks[i] for i in pending], workers)):
        _atomic_write(files[i], json.dumps(rows))
    rows = []
    for f in files:
        rows += json.loads(f.read_text())
    return rows


def _prepare_output(config: ExperimentConfig, overwrite: bool) -> tuple[Path, Path]:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / ".partial"
    key = config.ensemble_key()
    manifest = out / "manifest.json"
    if partial.exists():
        old = (partial / "key").read_text().strip() if (partial / "key").exists() else "<unknown>"
        if old != key:
            if not overwrite:
                raise ResumeConflict(
                    f"{partial} holds a partial run with a different configuration ({old} != {key}); "
                    "remove it, pick another --output, or pass --force"
                )
            shutil.rmtree(partial)
    elif manifest.exists() and not overwrite:
        old = read_json(manifest).get("ensemble_key")
        if old != key:
            raise ResumeConflict(
                f"{out} already holds an ensemble from a different configuration ({old} != {key}); "
                "pick another --output or pass --force"
            )
    partial.mkdir(exist_ok=True)
    (partial / "key").write_text(key + "\n")
    return out, partial


def run_ensemble(config: ExperimentConfig, workers=None, overwrite: bool = False) -> tuple[Path, dict]:
    """Generate the state ensemble and write ``ensemble.csv`` plus ``manifest.json``."""
    workers = resolve_workers(config.workers if workers is None else workers)
    started = _now()
    out, partial = _prepare_output(config, overwrite)
    ids = list(range(config.n_states))

    tasks = [(chunk, config.master_seed, config.mqfi) for chunk in chunked(ids, STATE_CHUNK)]
    rows = {r["state_id"]: r for r in _run_chunks(partial, "states", tasks, _state_chunk, workers)}
    failed = [r for r in rows.values() if r["status"] != "completed"]
    if len(failed) > MAX_FAILED_FRACTION * config.n_states:
        raise PipelineFailure(f"{len(failed)} of {config.n_states} states failed (> {MAX_FAILED_FRACTION:.0%}); see {partial}")
    done = [r for r in rows.values() if r["status"] == "completed"]

    n_ree = min(config.n_ree(), len(done))
    ree_ids = stratified_subsample([r["state_id"] for r in done], [r["concurrence"] for r in done], n_ree, config.master_seed)
    ree_items = [(sid, rows[sid]["seed"]) for sid in ree_ids]
    ree_tasks = [(chunk, config.ree) for chunk in chunked(ree_items, REE_CHUNK)]
    ree_rows = {r["state_id"]: r for r in _run_chunks(partial, "ree", ree_tasks, _ree_chunk, workers)}

    records = []
    for r in sorted(done, key=lambda r: r["state_id"]):
        rr = ree_rows.get(r["state_id"])
        records.append(
            EnsembleRecord(
                r["state_id"], r["seed"], r["purity"], r["concurrence"], r["negativity"],
                None if rr is None else rr["ree"], r["mqfi"], r["mqfi"] / 4,
            )
        )
    csv_path = out / "ensemble.csv"
    write_csv(csv_path, CSV_COLUMNS, [rec.csv_row() for rec in records])

    ree_failed = sorted(sid for sid, r in ree_rows.items() if r["ree"] is None)
    low_conf = sorted(r["state_id"] for r in done if r["low_confidence"])
    warnings = []
    if failed:
        warnings.append(f"{len(failed)} states failed and are absent from ensemble.csv")
    if ree_failed:
        warnings.append(f"REE did not converge for {len(ree_failed)} subsampled states (blank ree column)")
    if low_conf:
        warnings.append(f"{len(low_conf)} MQFI values flagged low-confidence")
    manifest = {
        "software_version": __version__,
        "config": config.to_dict(),
        "ensemble_key": config.ensemble_key(),
        "started": started,
        "finished": _now(),
        "workers": workers,
        "counts": {
            "states": {"total": config.n_states, "completed": len(done), "skipped": 0, "failed": len(failed)},
            "ree": {
                "total": config.n_states,
                "completed": len(ree_rows) - len(ree_failed),
                "skipped": config.n_states - len(ree_rows),
                "failed": len(ree_failed),
            },
        },
        "failed_states": [{"state_id": r["state_id"], "error": r["error"]} for r in sorted(failed, key=lambda r: r["state_id"])],
        "ree_not_converged": ree_failed,
        "mqfi_low_confidence": low_conf,
        "warnings": warnings,
    }
    write_json(out / "manifest.json", manifest)
    shutil.rmtree(partial)
    for w in warnings:
        log.warning(w)
    return csv_path, manifest


# -- analysis ----------------------------------------------------------------------


def _min_occupancy(config: ExperimentConfig, n_train: int) -> int:
    return max(1, min(config.min_occupancy, n_train // 20))


def _ci_overlap(a, b) -> bool:
    return a is not None and b is not None and a[0] <= b[1] and b[0] <= a[1]


def _relative_spread(values) -> float:
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / abs(v.mean())) if v.size and v.mean() != 0 else float("nan")


# Reference AIC ranking of five models (best first); the summary reports whether binned and raw fits reproduce it.
REFERENCE_AIC_ORDER = ("cubic", "exponential_saturation", "logistic", "quadratic", "linear")
TABLE_COLUMNS = ("model", "n_params", "r2_train", "r2_cv", "aic", "bic", "r2_test", "delta_aic", "converged")


def _comparison_table(fits: dict, x_test, y_test, w_test) -> list[dict]:
    best = min(f.aic for f in fits.values())
    return [
        {
            "model": m,
            "n_params": f.n_params,
            "r2_train": f.r2,
            "r2_cv": f.r2_cv,
            "aic": f.aic,
            "bic": f.bic,
            "r2_test": stats.r_squared(y_test, f.predict(x_test), w_test) if len(y_test) > 1 else float("nan"),
            "delta_aic": f.aic - best,
            "converged": f.converged,
        }
        for m, f in fits.items()
    ]


def analyze_measure(name: str, ids, x, y, config: ExperimentConfig, out: Path) -> dict:
    """All fits, bootstraps, boundaries and robustness checks for one measure."""
    ids = np.asarray(ids)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m_idx = MEASURES.index(name)
    train, test = stats.train_test_split(x.size, config.test_fraction, rng.derive_seed(config.master_seed, rng.SHUFFLE, m_idx))
    in_test = np.zeros(x.size, dtype=bool)
    in_test[test] = True
    write_csv(
        out / "scatter.csv",
        ("state_id", name, "mqfi_norm", "split"),
        [(int(i), a, b, "test" if t else "train") for i, a, b, t in zip(ids, x, y, in_test)],
    )

    xt, yt = x[train], y[train]
    n_bins = config.explicit_bins or stats.fd_n_bins(xt)
    occ = _min_occupancy(config, train.size)
    bins = stats.bin_series(xt, yt, n_bins, occ)
    w = bins.fit_weights()
    test_bins = stats.bin_series(x[test], y[test], n_bins, edges=bins.edges)
    write_csv(out / "bins.csv", tuple(bins.rows()[0]), bins.rows())

    fits = {}
    k = config.cv_folds
    for mname in stats.MODEL_NAMES:
        fit = stats.fit_model(mname, bins.x_mean, bins.mean, w, raise_on_failure=False)
        if not fit.converged:
            log.warning("%s/%s: fit did not converge", name, mname)
        if len(bins) >= 2 * k:
            fit.r2_cv = stats.kfold_cv(mname, bins.x_mean, bins.mean, k, rng.derive_seed(config.master_seed, rng.SHUFFLE, m_idx, 1), w)
        fits[mname] = fit
    boot_out, p_values = {}, {}
    rebin = stats.BinDirective(n_bins, occ)
    for j, mname in enumerate(config.bootstrap_models):
        try:
            boot = stats.bootstrap_fit(
                mname, xt, yt, config.bootstrap_n, rng.derive_seed(config.master_seed, rng.BOOTSTRAP, m_idx, j),
                rebin=rebin, min_resamples=min(100, config.bootstrap_n),
            )
        except ConvergenceFailure as exc:
            log.warning("%s/%s bootstrap: %s", name, mname, exc)
            continue
        fits[mname].param_cis = boot.cis()
        boot_out[mname] = boot.to_dict()
        if mname == "exponential_saturation":
            p_norm, p_emp = boot.p_value_zero(2)
            p_values = {"B_zero_p_normal": p_norm, "B_zero_p_empirical": p_emp}
            boot_out[mname].update(p_values)
    table = _comparison_table(fits, test_bins.x_mean, test_bins.mean, test_bins.fit_weights() if len(test_bins) > 1 else None)
    raw_fits = {}
    for mname in stats.MODEL_NAMES:
        raw = stats.fit_model(mname, xt, yt, raise_on_failure=False)
        raw.r2_cv = stats.kfold_cv(mname, xt, yt, k, rng.derive_seed(config.master_seed, rng.SHUFFLE, m_idx, 2))
        raw_fits[mname] = raw
    raw_table = _comparison_table(raw_fits, x[test], y[test], None)
    write_json(out / "fits.json", {m: f.to_dict() for m, f in fits.items()})
    write_json(out / "bootstrap.json", boot_out)
    write_csv(out / "table1.csv", TABLE_COLUMNS, table)
    write_csv(out / "table1_raw.csv", TABLE_COLUMNS, raw_table)

    upper, lower = stats.boundary_extract(x, y, n_bins)
    write_csv(
        out / "boundaries.csv",
        ("center", "upper", "lower"),
        [(u[0], u[1], lo[1]) for u, lo in zip(upper, lower)],
    )
    bfits = {}
    for side, pts in (("upper", upper), ("lower", lower)):
        if len(pts) >= 4:
            bfits[side] = stats.fit_model("quadratic", pts[:, 0], pts[:, 1]).to_dict()
    write_json(out / "boundary_fits.json", bfits)

    robust = []
    for nb in ROBUSTNESS_BINS:
        b = stats.bin_series(xt, yt, nb, occ)
        f = stats.fit_model("exponential_saturation", b.x_mean, b.mean, b.fit_weights(), raise_on_failure=False)
        robust.append({"n_bins": nb, "n_bins_kept": len(b), "A": f.params[0], "alpha": f.params[1], "B": f.params[2], "r2": f.r2, "converged": f.converged})
    write_csv(out / "bin_robustness.csv", tuple(robust[0]), robust)
    core = [r for r in robust if r["n_bins"] in ROBUSTNESS_CORE]

    ex = fits["exponential_saturation"]
    return {
        "n": int(x.size),
        "n_train": int(train.size),
        "n_test": int(test.size),
        "n_bins_requested": int(n_bins),
        "n_bins": len(bins),
        "min_occupancy": occ,
        "pearson_mqfi": stats.pearson(x, y),
        "exponential": {
            "params": dict(zip(("A", "alpha", "B"), ex.params.tolist())),
            "cis": None if ex.param_cis is None else dict(zip(("A", "alpha", "B"), ex.param_cis)),
            "r2": ex.r2,
            **p_values,
        },
        "cubic": {"r2_train": fits["cubic"].r2, "r2_cv": fits["cubic"].r2_cv},
        "aic_order_binned": sorted(fits, key=lambda m: fits[m].aic),
        "aic_order_raw": sorted(raw_fits, key=lambda m: raw_fits[m].aic),
        "aic_order_matches_reference": {
            "binned": [m for m in sorted(fits, key=lambda m: fits[m].aic) if m in REFERENCE_AIC_ORDER] == list(REFERENCE_AIC_ORDER),
            "raw": [m for m in sorted(raw_fits, key=lambda m: raw_fits[m].aic) if m in REFERENCE_AIC_ORDER] == list(REFERENCE_AIC_ORDER),
        },
        "boundary_upper_quadratic_r2": bfits.get("upper", {}).get("r2"),
        "bin_robustness_spread": {p: _relative_spread([r[p] for r in core]) for p in ("A", "alpha", "B")},
    }


def run_analysis(ensemble_csv, config: ExperimentConfig) -> dict:
    """Per-measure analysis bundle under ``<output_dir>/analysis``; returns the summary."""
    records = read_ensemble(ensemble_csv)
    if len(records) < 10:
        raise ValueError(f"{ensemble_csv}: too few rows ({len(records)}) to analyze")
    out = Path(config.output_dir) / "analysis"
    summary = {
        "n_states": len(records),
        "mean_purity": float(np.mean([r.purity for r in records])),
        "measures": {},
    }
    for name in MEASURES:
        rows = [r for r in records if getattr(r, name) is not None]
        if len(rows) < 10 * config.cv_folds:
            log.warning("%s: only %d values; skipped", name, len(rows))
            continue
        x = [getattr(r, name) for r in rows]
        y = [r.mqfi_norm for r in rows]
        try:
            summary["measures"][name] = analyze_measure(name, [r.state_id for r in rows], x, y, config, out / name)
        except QmetroError as exc:
            raise type(exc)(f"{name}: {exc}") from exc
    cis = {m: s["exponential"]["cis"]["B"] for m, s in summary["measures"].items() if s["exponential"]["cis"]}
    names = sorted(cis)
    summary["B_ci_pairwise_overlap"] = {f"{a}~{b}": _ci_overlap(cis[a], cis[b]) for i, a in enumerate(names) for b in names[i + 1 :]}
    write_json(out / "summary.json", summary)
    return summary


# -- sweeps ------------------------------------------------------------------------


def _linear_trend(g, v) -> dict | None:
    if len(g) < 3:
        return None
    lr = sps.linregress(g, v)
    half = sps.t.ppf(0.975, len(g) - 2) * lr.stderr
    return {
        "intercept": lr.intercept,
        "slope": lr.slope,
        "slope_ci": [lr.slope - half, lr.slope + half],
        "r2": lr.rvalue**2,
    }


def _model_comparison(g, v) -> dict:
    out = {}
    for name in EVOLUTION_MODELS:
        model = {"constant": stats.CONSTANT, "exp_decay": stats.EXP_DECAY}.get(name, name)
        try:
            f = stats.fit_model(model, g, v, raise_on_failure=False)
        except (ValueError, QmetroError):
            continue
        out[name] = {"params": f.params.tolist(), "aic": f.aic, "bic": f.bic, "r2": f.r2, "converged": f.converged}
    if out:
        out["aic_winner"] = min(out, key=lambda m: out[m]["aic"])
    return out


def evolution_fits(result: SweepResult) -> dict:
    """Laws for A, alpha, B as functions of gamma, plus the kind-specific headline."""
    ok = [p for p in result.params if math.isfinite(p.A)]
    g = np.array([p.gamma for p in ok])
    series = {name: np.array([getattr(p, name) for p in ok]) for name in ("A", "alpha", "B")}
    complete = len(ok) == len(result.params)
    out = {
        "kind": result.kind,
        "measure": result.measure,
        "gammas_fitted": g,
        "complete": complete,
        "linear": {k: _linear_trend(g, v) for k, v in series.items()},
        "model_comparison": {k: _model_comparison(g, v) for k, v in series.items()},
        "max_relative_drift": {k: float(np.max(np.abs(v - v[0]) / abs(v[0]))) if v.size and v[0] != 0 else None for k, v in series.items()},
    }
    if len(ok) >= 3 and series["A"][0] > 0:
        fit = stats.fit_model(stats.EXP_DECAY, g, series["A"] / series["A"][0], raise_on_failure=False)
        out["A_exponential"] = {"A0": series["A"][0], "beta": fit.params[1], "r2": fit.r2, "converged": fit.converged}
    kind = ChannelKind(result.kind)
    if kind is ChannelKind.DEPOLARIZING:
        b_inf = mqfi(maximally_mixed()).value / 4
        lin_b = out["linear"]["B"]
        out["B_infinity"] = {
            "measured_maximally_mixed": b_inf,
            "extrapolated": None if lin_b is None else lin_b["intercept"] + lin_b["slope"],
            "predicted_slope": None if lin_b is None else b_inf - lin_b["intercept"],
        }
    return out


def run_sweeps(config: ExperimentConfig, workers=None) -> dict:
    """One SweepResult JSON (and its evolution fits) per configured sweep."""
    workers = resolve_workers(config.workers if workers is None else workers)
    out = Path(config.output_dir) / "sweeps"
    bundle = {}
    for i, d in enumerate(config.sweeps):
        seed = d.seed if d.seed is not None else rng.derive_seed(config.master_seed, rng.SWEEP, i)
        result = channel_sweep(
            seed, d.n_sample, d.kind, d.gammas, d.measure,
            mqfi_config=config.mqfi, ree_config=config.ree, bootstrap_n=d.bootstrap_n, n_bins=d.n_bins, workers=workers,
        )
        evo = evolution_fits(result)
        write_json(out / f"{d.name}.json", result.to_dict())
        write_json(out / f"{d.name}_evolution.json", evo)
        bundle[d.name] = {"result": result, "evolution": evo}
    return bundle


# -- separable baseline --------------------------------------------------------------


def _baseline_point(task):
    seed, cfg = task
    rho = separable_mixture(seed)
    res = mqfi(rho, None, cfg, seed)
    return negativity(rho), res.value / 4, res.low_confidence


def run_separable_baseline(config: ExperimentConfig, n: int | None = None, workers=None) -> dict:
    """MQFI/4 statistics over certified separable mixtures; writes ``baseline.json``."""
    n = config.baseline_n if n is None else n
    if n < 100:
        raise ValueError("baseline needs n >= 100")
    workers = resolve_workers(config.workers if workers is None else workers)
    seeds = [rng.derive_seed(config.master_seed, rng.SEPARABLE, i) for i in range(n)]
    pts = pmap(_baseline_point, [(s, config.mqfi) for s in seeds], workers)
    neg = np.array([p[0] for p in pts])
    val = np.array([p[1] for p in pts])
    summary = {
        "n": n,
        "mean": float(val.mean()),
        "median": float(np.median(val)),
        "std": float(val.std(ddof=1)),
        "min": float(val.min()),
        "max": float(val.max()),
        "max_negativity": float(neg.max()),
        "n_low_confidence": int(sum(p[2] for p in pts)),
    }
    write_json(Path(config.output_dir) / "baseline.json", summary)
    return summary


# -- report --------------------------------------------------------------------------


def report(config: ExperimentConfig) -> dict:
    """Collect headline numbers from whatever stages have been run into ``report.json``."""
    out = Path(config.output_dir)

    def load(rel):
        p = out / rel
        return read_json(p) if p.exists() else None

    sweeps = {}
    for d in config.sweeps:
        evo = load(f"sweeps/{d.name}_evolution.json")
        if evo is not None:
            sweeps[d.name] = evo
    rep = {
        "software_version": __version__,
        "manifest_counts": (load("manifest.json") or {}).get("counts"),
        "analysis": load("analysis/summary.json"),
        "sweeps": sweeps,
        "baseline": load("baseline.json"),
    }
    missing = [k for k in ("manifest_counts", "analysis", "baseline") if rep[k] is None]
    if not sweeps:
        missing.append("sweeps")
    rep["missing_stages"] = missing
    write_json(out / "report.json", rep)
    return rep
