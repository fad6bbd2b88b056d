"""Figure rendering for the benchmark CSV outputs.

Every figure is a pure function of the delimited files written by the
bench module (the CSVs are the data contract; the PNGs sit alongside
them).  Rendering uses the Agg backend and never requires a display.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

LS_COLOR = "#1f77b4"
CME_COLOR = "#d62728"
N_COLORS = ("#377eb8", "#4daf4a", "#e41a1c", "#984ea3")
EPS_COLORS = ("#1f77b4", "#d62728", "#2ca02c")


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _series(rows, x_key, keys):
    """Rows -> (x, mean, lo, hi) for rows where all keys are populated."""
    out = [[] for _ in range(len(keys) + 1)]
    for row in rows:
        if any(row.get(k, "") == "" for k in keys):
            continue
        out[0].append(float(row[x_key]))
        for i, k in enumerate(keys):
            out[i + 1].append(float(row[k]))
    return out


def _band_plot(ax, x, mean, lo, hi, color, label, **kwargs):
    if not x:
        return
    ax.plot(x, mean, color=color, label=label, marker="o", markersize=3, **kwargs)
    ax.fill_between(x, lo, hi, color=color, alpha=0.15, linewidth=0)


def render_timing_figure(out_dir, t_index, maturity):
    path = os.path.join(out_dir, f"winner_time_T{t_index}.csv")
    if not os.path.exists(path):
        return None
    rows = _read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 4))
    x, m, lo, hi = _series(rows, "N", ["mean_logtime_poly", "lo_logtime_poly", "hi_logtime_poly"])
    _band_plot(ax, x, m, lo, hi, LS_COLOR, "LS")
    x, m, lo, hi = _series(rows, "N", ["mean_logtime_cme", "lo_logtime_cme", "hi_logtime_cme"])
    _band_plot(ax, x, m, lo, hi, CME_COLOR, "CME-LR", linestyle="--")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(r"$\log_{10}$(time / $\mu$s)")
    ax.set_title(f"T = {maturity:g}")
    ax.grid(True, alpha=0.4)
    ax.legend()
    target = os.path.join(out_dir, f"winner_time_T{t_index}.png")
    fig.savefig(target, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return target


def render_error_figure(out_dir, t_index, maturity):
    path = os.path.join(out_dir, f"winner_err_T{t_index}.csv")
    if not os.path.exists(path):
        return None
    rows = _read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 4))
    x, m, lo, hi = _series(rows, "N", ["mean_relerr_poly", "lo_poly", "hi_poly"])
    _band_plot(ax, x, m, lo, hi, LS_COLOR, "LS")
    x, m, lo, hi = _series(rows, "N", ["mean_relerr_cme", "lo_cme", "hi_cme"])
    _band_plot(ax, x, m, lo, hi, CME_COLOR, "CME-LR", linestyle="--")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("Mean relative IV error")
    ax.set_title(f"T = {maturity:g}")
    ax.grid(True, alpha=0.4)
    ax.legend()
    target = os.path.join(out_dir, f"winner_err_T{t_index}.png")
    fig.savefig(target, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return target


def render_moneyness_figure(out_dir, t_index, maturity, n_grid):
    paths = [
        (n, os.path.join(out_dir, f"error_mk_winner_T{t_index}_N{j + 1}.csv"))
        for j, n in enumerate(n_grid)
    ]
    paths = [(n, p) for n, p in paths if os.path.exists(p)]
    if not paths:
        return None
    fig, (ax_ls, ax_cme) = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for (n, p), color in zip(paths, N_COLORS):
        rows = _read_csv(p)
        x, m, lo, hi = _series(rows, "logmoneyness", ["mean_relerr_poly", "lo_poly", "hi_poly"])
        _band_plot(ax_ls, x, m, lo, hi, color, f"n = {n}")
        x, m, lo, hi = _series(rows, "logmoneyness", ["mean_relerr_cme", "lo_cme", "hi_cme"])
        _band_plot(ax_cme, x, m, lo, hi, color, f"n = {n}", linestyle="--")
    for ax, label in ((ax_ls, "LS"), (ax_cme, "CME-LR")):
        ax.set_xlabel(r"$\log(K / S_0)$")
        ax.set_title(f"{label}, T = {maturity:g}")
        ax.grid(True, alpha=0.4)
    ax_ls.set_ylabel("Mean relative IV error")
    ax_cme.legend()
    target = os.path.join(out_dir, f"error_mk_winner_T{t_index}.png")
    fig.savefig(target, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return target


def render_rank_figure(out_dir, t_index, maturity, epsilons=None):
    path = os.path.join(out_dir, f"rank_T{t_index}.csv")
    if not os.path.exists(path):
        return None
    rows = _read_csv(path)
    if not rows:
        return None
    if epsilons is None:
        epsilons = sorted({float(r["epsilon"]) for r in rows}, reverse=True)
    fig, ax = plt.subplots(figsize=(5, 4))
    for eps, color in zip(epsilons, EPS_COLORS):
        pts = [(int(r["N"]), float(r["mean_rank_y"])) for r in rows if float(r["epsilon"]) == eps and r["mean_rank_y"] != ""]
        if not pts:
            continue
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", markersize=3, color=color,
                label=rf"$\varepsilon$ = {eps:g}")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("Mean rank of transition kernel matrix")
    ax.set_title(f"T = {maturity:g}")
    ax.grid(True, alpha=0.4)
    ax.legend()
    target = os.path.join(out_dir, f"rank_T{t_index}.png")
    fig.savefig(target, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return target


def render_convergence_figure(out_dir):
    path = os.path.join(out_dir, "converge_summary.csv")
    if not os.path.exists(path):
        return None
    rows = _read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 4))
    x = [int(r["n"]) for r in rows]
    med = [float(r["median_l2_error"]) for r in rows]
    lo = [float(r["lo"]) for r in rows]
    hi = [float(r["hi"]) for r in rows]
    _band_plot(ax, x, med, lo, hi, CME_COLOR, "median L2 error")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("Empirical L2 prediction error")
    ax.grid(True, alpha=0.4, which="both")
    ax.legend()
    target = os.path.join(out_dir, "converge.png")
    fig.savefig(target, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return target


def render_bench_figures(out_dir, config):
    """All figures for a bench run; returns the paths written."""
    written = []
    for t_idx, maturity in enumerate(config.maturities, start=1):
        for renderer in (render_timing_figure, render_error_figure):
            target = renderer(out_dir, t_idx, maturity)
            if target:
                written.append(target)
        target = render_moneyness_figure(out_dir, t_idx, maturity, config.n_grid)
        if target:
            written.append(target)
        target = render_rank_figure(out_dir, t_idx, maturity)
        if target:
            written.append(target)
    return written


def render_rank_figures(out_dir, config, epsilons):
    written = []
    for t_idx, maturity in enumerate(config.maturities, start=1):
        target = render_rank_figure(out_dir, t_idx, maturity, list(epsilons))
        if target:
            written.append(target)
    return written
