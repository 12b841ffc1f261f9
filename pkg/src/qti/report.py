"""Artifact emission: delimited series, JSON summaries, and figures.

CSV files are RFC-4180 style (comma separated, CRLF, header row, UTF-8,
'.' decimal); floats are written with shortest round-trip repr so a replay
is byte-comparable. Figures render through the Agg backend with the
Software tag stripped, which keeps PNG bytes deterministic as well.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .basis import PotentialCoeffs, potential_eval  # noqa: E402
from .inversion import InversionResult, autocorrelation  # noqa: E402
from .ringpoly import GaussianBump, ScaledHermite  # noqa: E402
from .twolevel import TwoLevelObservable, TwoLevelPotential  # noqa: E402

_SAVEFIG = {"dpi": 110, "metadata": {"Software": None}}
POTENTIAL_GRID = np.linspace(-4.0, 4.0, 161)


def obs_id(obs) -> str:
    """Stable short identifier used in headers and figure legends."""
    prefix = ""
    if isinstance(obs, TwoLevelObservable):
        prefix = "d:" if obs.placement == "diagonal" else "o:"
        obs = obs.base
    if isinstance(obs, GaussianBump):
        return f"{prefix}bump({obs.center:g},{obs.exponent:g})"
    if isinstance(obs, ScaledHermite):
        return f"{prefix}hermite({obs.order},{obs.scale:g})"
    return f"{prefix}{obs!r}"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> str:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return str(path)


def write_json(path, payload) -> str:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return str(path)


def _potential_curves(V, x):
    """List of (label, values) channels for a 1- or 2-level potential."""
    if isinstance(V, TwoLevelPotential):
        return [("v00", potential_eval(V.v00, x)),
                ("v11", potential_eval(V.v11, x)),
                ("v01", V.v01_value(x))]
    if isinstance(V, PotentialCoeffs):
        return [("v", potential_eval(V, x))]
    return [("v", np.asarray(V.value(x), dtype=float))]


def emit_forward(out, observables, estimates, exact=None) -> list[str]:
    rows = []
    for j, (o, e) in enumerate(zip(observables, estimates)):
        row = [obs_id(o), e.mean, e.std_err, e.n_samples]
        row.append(exact[j] if exact is not None else "")
        rows.append(row)
    files = [write_csv(Path(out) / "forward.csv",
                       ["observable_id", "mean", "std_err", "n_samples", "exact"],
                       rows)]

    fig, ax = plt.subplots(figsize=(7, 4))
    xs = np.arange(len(observables))
    means = [e.mean for e in estimates]
    errs = [2 * e.std_err for e in estimates]
    ax.errorbar(xs, means, yerr=errs, fmt="o", capsize=3, label="trajectory (2 SE)")
    if exact is not None:
        ax.plot(xs, exact, "k_", markersize=14, label="reference")
    ax.set_xticks(xs)
    ax.set_xticklabels([obs_id(o) for o in observables], rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("thermal average")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = Path(out) / "forward.png"
    fig.savefig(p, **_SAVEFIG)
    plt.close(fig)
    files.append(str(p))
    return files


def _chain_potential_columns(V):
    if isinstance(V, TwoLevelPotential):
        cols = [("v00_%d" % i, c) for i, c in enumerate(V.v00.v)]
        cols += [("v11_%d" % i, c) for i, c in enumerate(V.v11.v)]
        cols += [("a_%d" % m, comp.A) for m, comp in enumerate(V.v01)]
        return cols
    return [("v_%d" % i, c) for i, c in enumerate(V.v)]


def emit_chains(out, result: InversionResult, train_obs, test_obs) -> list[str]:
    files = []
    for r, run in enumerate(result.runs):
        if not run.records:
            continue
        pot_names = [n for n, _ in _chain_potential_columns(run.records[0].V)]
        header = (["iteration", "accepted", "phi"]
                  + [f"yhat_{obs_id(o)}" for o in train_obs]
                  + [f"pred_{obs_id(o)}" for o in test_obs]
                  + pot_names)
        rows = []
        for rec in run.records:
            vals = [v for _, v in _chain_potential_columns(rec.V)]
            rows.append([rec.iteration, rec.accepted, rec.phi]
                        + list(rec.y_hat)
                        + list(result.runs[r].test_series[rec.iteration])
                        + vals)
        files.append(write_csv(Path(out) / f"chain_run{r}.csv", header, rows))
    return files


def emit_predictions(out, result: InversionResult, test_obs) -> list[str]:
    rows = []
    for o, p, truth in zip(test_obs, result.predictions,
                           result.test_truth if result.test_truth is not None
                           else [""] * len(test_obs)):
        rows.append([obs_id(o), truth, p.mean, p.se_runs, p.se_pooled,
                     2 * p.se_runs, 2 * p.se_pooled, p.sd_post])
    return [write_csv(Path(out) / "predictions.csv",
                      ["observable_id", "exact", "mean", "se_runs", "se_pooled",
                       "two_se_runs", "two_se_pooled", "sd_post"], rows)]


def emit_acceptance(out, result: InversionResult) -> list[str]:
    rows = [[r, run.accept_rate, run.diverged, run.diagnostic]
            for r, run in enumerate(result.runs)]
    return [write_csv(Path(out) / "acceptance.csv",
                      ["run", "accept_rate", "diverged", "diagnostic"], rows)]


def chain_acf(result: InversionResult, max_lag: int) -> np.ndarray:
    """Across-run average ACF of each test series; nan where degenerate."""
    n_test = result.runs[0].test_series.shape[1] if result.runs else 0
    acc = np.zeros((max_lag + 1, n_test))
    cnt = np.zeros(n_test)
    for run in result.runs:
        if run.diverged or run.test_series.shape[0] <= max_lag:
            continue
        for j in range(n_test):
            r = autocorrelation(run.test_series[:, j], max_lag)
            if not r.degenerate:
                acc[:, j] += r.values
                cnt[j] += 1
    out = np.full((max_lag + 1, n_test), np.nan)
    nz = cnt > 0
    out[:, nz] = acc[:, nz] / cnt[nz]
    return out


def emit_autocorrelation(out, result: InversionResult, test_obs,
                         max_lag: int) -> list[str]:
    acf = chain_acf(result, max_lag)
    header = ["lag"] + [f"acf_{obs_id(o)}" for o in test_obs]
    rows = [[lag] + list(acf[lag]) for lag in range(max_lag + 1)]
    return [write_csv(Path(out) / "autocorrelation.csv", header, rows)]


def _kept_potentials(result: InversionResult, prediction_burnin: int, t_ac: int):
    """Per run, the thinned list of held potentials used for averaging."""
    kept = []
    for run in result.runs:
        if run.diverged or not run.records:
            continue
        kept.append([run.records[k].V
                     for k in range(prediction_burnin, len(run.records), t_ac)])
    return kept


def emit_potential(out, result: InversionResult, truth,
                   prediction_burnin: int, t_ac: int) -> list[str]:
    x = POTENTIAL_GRID
    kept = _kept_potentials(result, prediction_burnin, t_ac)
    files = []
    if not kept:
        return files
    channels = [n for n, _ in _potential_curves(kept[0][0], x)]
    run_means = {n: [] for n in channels}
    for run_vs in kept:
        per = {n: [] for n in channels}
        for V in run_vs:
            for n, vals in _potential_curves(V, x):
                per[n].append(vals)
        for n in channels:
            run_means[n].append(np.mean(per[n], axis=0))
    header = ["x"]
    cols = [x]
    truth_curves = dict(_potential_curves(truth, x)) if truth is not None else {}
    fig, axes = plt.subplots(1, len(channels), figsize=(5 * len(channels), 4),
                             squeeze=False)
    for i, n in enumerate(channels):
        A = np.asarray(run_means[n])
        mean = A.mean(axis=0)
        se = (A.std(axis=0, ddof=1) / np.sqrt(A.shape[0])
              if A.shape[0] > 1 else np.zeros_like(mean))
        header += [f"{n}_mean", f"{n}_se_runs"]
        cols += [mean, se]
        ax = axes[0][i]
        ax.plot(x, mean, label=f"{n} posterior mean")
        ax.fill_between(x, mean - 2 * se, mean + 2 * se, alpha=0.3,
                        label="2 SE across runs")
        if n in truth_curves:
            header.append(f"{n}_exact")
            cols.append(truth_curves[n])
            ax.plot(x, truth_curves[n], "k--", label=f"{n} truth")
        ax.set_xlabel("x")
        ax.set_ylabel(n)
        ax.legend(fontsize=8)
    files.append(write_csv(Path(out) / "potential.csv", header,
                           list(zip(*cols))))
    fig.tight_layout()
    p = Path(out) / "potential.png"
    fig.savefig(p, **_SAVEFIG)
    plt.close(fig)
    files.append(str(p))
    return files


def emit_prediction_figure(out, result: InversionResult, test_obs) -> list[str]:
    live = [r for r in result.runs if not r.diverged]
    if not live:
        return []
    n_iter = min(r.test_series.shape[0] for r in live)
    series = np.asarray([r.test_series[:n_iter] for r in live])
    steps = np.arange(1, n_iter + 1)
    running = np.cumsum(series, axis=1) / steps[None, :, None]
    mean = running.mean(axis=0)
    se = (running.std(axis=0, ddof=1) / np.sqrt(len(live))
          if len(live) > 1 else np.zeros_like(mean))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for j, o in enumerate(test_obs):
        line, = ax.plot(steps - 1, mean[:, j], label=obs_id(o))
        ax.fill_between(steps - 1, mean[:, j] - 2 * se[:, j],
                        mean[:, j] + 2 * se[:, j], alpha=0.2,
                        color=line.get_color())
        if result.test_truth is not None:
            ax.axhline(result.test_truth[j], color=line.get_color(),
                       linestyle=":", linewidth=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("running averaged prediction")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = Path(out) / "predictions.png"
    fig.savefig(p, **_SAVEFIG)
    plt.close(fig)
    return [str(p)]


def emit_diagnostics_figure(out, result: InversionResult, test_obs,
                            max_lag: int) -> list[str]:
    acf = chain_acf(result, max_lag)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    rates = [run.accept_rate for run in result.runs]
    ax1.bar(np.arange(len(rates)), rates)
    ax1.set_xlabel("run")
    ax1.set_ylabel("acceptance rate")
    ax1.set_ylim(0, 1)
    for j, o in enumerate(test_obs):
        ax2.plot(np.arange(max_lag + 1), acf[:, j], label=obs_id(o))
    ax2.axhline(0.5, color="k", linestyle="--", linewidth=1)
    ax2.set_xlabel("lag")
    ax2.set_ylabel("chain autocorrelation")
    ax2.legend(fontsize=7)
    fig.tight_layout()
    p = Path(out) / "diagnostics.png"
    fig.savefig(p, **_SAVEFIG)
    plt.close(fig)
    return [str(p)]


def emit_stability(out, report, test_obs) -> list[str]:
    rows = []
    for s, scale in enumerate(report.gamma_scales):
        for j, o in enumerate(test_obs):
            rows.append([scale, obs_id(o), report.mean_abs_errors[s, j]])
    files = [write_csv(Path(out) / "stability.csv",
                       ["scale", "observable_id", "mean_abs_error"], rows)]
    files.append(write_json(Path(out) / "slopes.json", {
        "gamma_scales": list(report.gamma_scales),
        "fitted_slope": {obs_id(o): report.fitted_slope[j]
                         for j, o in enumerate(test_obs)},
    }))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for j, o in enumerate(test_obs):
        ax.loglog(report.gamma_scales, report.mean_abs_errors[:, j], "o-",
                  label=f"{obs_id(o)} (slope {report.fitted_slope[j]:.2f})")
    ref = np.sqrt(report.gamma_scales)
    ref *= report.mean_abs_errors[-1].mean() / ref[-1]
    ax.loglog(report.gamma_scales, ref, "k--", label="slope 1/2 reference")
    ax.set_xlabel("noise scale")
    ax.set_ylabel("mean |prediction - truth|")
    ax.legend(fontsize=7)
    fig.tight_layout()
    p = Path(out) / "stability.png"
    fig.savefig(p, **_SAVEFIG)
    plt.close(fig)
    files.append(str(p))
    return files
