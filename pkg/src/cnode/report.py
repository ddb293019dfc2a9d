"""Aggregation of run artifacts into tables, CSV and figures."""

import csv
import json
import math
import statistics
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import ReportError


def load_result(run_dir):
    path = Path(run_dir) / "result.json"
    if not path.exists():
        raise FileNotFoundError(f"missing artifact: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except ValueError as exc:
        raise ReportError(f"unreadable result.json in {run_dir}: {exc}")


def _method_label(cfg):
    method = cfg["method"]
    if method == "quadratic":
        mu = cfg["mu"]
        mu_txt = f"{int(mu)}" if float(mu).is_integer() else f"{mu}"
        return f"quadratic(mu={mu_txt})"
    return method


def aggregate(results):
    """Group results by (system, task, method): mean +/- std of MSE and P.

    std is reported only over >= 2 runs.  Minima per (system, task) get
    `best_mse` / `best_p` markers.
    """
    groups = {}
    for res in results:
        cfg = res.get("config")
        if not isinstance(cfg, dict) or "system" not in cfg:
            raise ReportError("result.json without a config echo")
        key = (cfg["system"], cfg["task"], _method_label(cfg))
        groups.setdefault(key, []).append(res)

    rows = []
    for (system, task, method), members in sorted(groups.items()):
        mses = [m["metrics"]["test_mse"] for m in members]
        ps = [m["metrics"]["test_p_raw"] for m in members]
        rows.append({
            "system": system, "task": task, "method": method,
            "n_runs": len(members),
            "mse_mean": _mean(mses), "mse_std": _std(mses),
            "p_mean": _mean(ps), "p_std": _std(ps),
            "best_mse": False, "best_p": False,
        })
    for (system, task) in {(r["system"], r["task"]) for r in rows}:
        cell = [r for r in rows if r["system"] == system and r["task"] == task]
        finite = [r for r in cell if math.isfinite(r["mse_mean"])]
        if finite:
            min(finite, key=lambda r: r["mse_mean"])["best_mse"] = True
        finite = [r for r in cell if math.isfinite(r["p_mean"])]
        if finite:
            min(finite, key=lambda r: r["p_mean"])["best_p"] = True
    return rows


def _mean(xs):
    return sum(xs) / len(xs)


def _std(xs):
    if len(xs) < 2:
        return None
    return statistics.stdev(xs)


def format_table(rows):
    header = ["system", "task", "method", "n", "MSE mean", "MSE std",
              "P mean", "P std", "best"]
    table = [header]
    for r in rows:
        best = "".join(["M" if r["best_mse"] else "",
                        "P" if r["best_p"] else ""])
        table.append([
            r["system"], r["task"], r["method"], str(r["n_runs"]),
            _fmt(r["mse_mean"]), _fmt(r["mse_std"]),
            _fmt(r["p_mean"]), _fmt(r["p_std"]), best,
        ])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in table]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


def _fmt(x):
    if x is None:
        return "NA"
    if not math.isfinite(x):
        return "inf"
    return f"{x:.3g}"


def write_table_csv(rows, path):
    cols = ["system", "task", "method", "n_runs", "mse_mean", "mse_std",
            "p_mean", "p_std", "best_mse", "best_p"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in rows:
            writer.writerow([
                r["system"], r["task"], r["method"], r["n_runs"],
                r["mse_mean"], "" if r["mse_std"] is None else r["mse_std"],
                r["p_mean"], "" if r["p_std"] is None else r["p_std"],
                int(r["best_mse"]), int(r["best_p"]),
            ])


def render_metrics_figure(rows, path):
    """Bar chart of mean test MSE and raw P per method, one panel per
    (system, task) cell."""
    cells = sorted({(r["system"], r["task"]) for r in rows})
    fig, axes = plt.subplots(len(cells), 1,
                             figsize=(8, 2.6 * len(cells)), squeeze=False)
    for ax, (system, task) in zip(axes[:, 0], cells):
        cell = [r for r in rows
                if r["system"] == system and r["task"] == task]
        labels = [r["method"] for r in cell]
        x = range(len(cell))
        mse = [_safe_bar(r["mse_mean"]) for r in cell]
        p = [_safe_bar(r["p_mean"]) for r in cell]
        ax.bar([i - 0.2 for i in x], mse, width=0.4, label="MSE")
        ax.bar([i + 0.2 for i in x], p, width=0.4, label="P")
        ax.set_yscale("log")
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=15, fontsize=8)
        ax.set_title(f"{system} / {task}", fontsize=10)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _safe_bar(x):
    # log-scale bars need strictly positive finite heights
    if x is None or not math.isfinite(x) or x <= 0:
        return 1e-12
    return x


def write_curves_csv(path, times, truth, pred, columns):
    """Columns: t, <c>_true per state column, then <c>_pred."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"{c}_true" for c in columns]
                        + [f"{c}_pred" for c in columns])
        for t, tr, pr in zip(times, truth, pred):
            writer.writerow([repr(float(t))]
                            + [repr(float(v)) for v in tr]
                            + [repr(float(v)) for v in pr])


def render_curves_figure(path, times, truth, pred, columns, title=""):
    """Ground truth dashed, prediction solid, one colour per component."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for j, name in enumerate(columns):
        c = colors[j % len(colors)]
        ax.plot(times, [s[j] for s in truth], "--", color=c,
                label=f"{name} (real)")
        ax.plot(times, [s[j] for s in pred], "-", color=c,
                label=f"{name} (predicted)")
    ax.set_xlabel("t")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
