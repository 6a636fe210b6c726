"""Figure rendering for finished runs (opt-in; bc run emits data only)."""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _read_csv(path: str):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.asarray(rows, dtype=np.float64)


def _save(fig, out_dir: str, name: str, written: list):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)


def render(results_dir: str, out_dir: str) -> list:
    """Render the figures appropriate for the run found in results_dir."""
    with open(os.path.join(results_dir, "summary.json")) as fh:
        summary = json.load(fh)
    _, results = _read_csv(os.path.join(results_dir, "results.csv"))
    law_header, law = _read_csv(os.path.join(results_dir, "law.csv"))
    os.makedirs(out_dir, exist_ok=True)
    written = []
    kind = summary["kind"]

    if kind == "coupling-time":
        t_exact = np.sort(results[:, 1])
        uncensored = results[:, 3] == 0
        t_grid = np.sort(results[uncensored, 2])
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for sample, label in ((t_exact, "exact sampler"), (t_grid, "grid detection")):
            ax.step(sample, np.arange(1, sample.size + 1) / results.shape[0],
                    where="post", lw=1.0, label=label)
        ax.plot(law[1:, 0], law[1:, 1], "k--", lw=1.2, label="first-passage law")
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("P[T <= t]")
        ax.legend()
        ax.set_title("coupling time vs first-passage law")
        _save(fig, out_dir, "coupling_time_cdf.png", written)

    elif kind == "maximality":
        check = summary["checks"][0]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(law[:, 0], law[:, 1], "k--", lw=1.2, label="max coupling probability")
        horizon = law[-1, 0]
        ax.errorbar([horizon], [check["empirical"]], yerr=[check["critical_value"]],
                    fmt="o", capsize=4, label="empirical (3 sigma)")
        ax.set_xlabel("t")
        ax.set_ylabel("P[coupled by t]")
        ax.legend()
        ax.set_title("attained coupling probability")
        _save(fig, out_dir, "maximality_fraction.png", written)

    elif kind == "infinity":
        times = np.unique(results[:, 1])
        pos = times[times > 0]
        med = [np.median(results[results[:, 1] == t, 2]) for t in pos]
        q25 = [np.quantile(results[results[:, 1] == t, 2], 0.25) for t in pos]
        q75 = [np.quantile(results[results[:, 1] == t, 2], 0.75) for t in pos]
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.fill_between(pos, q25, q75, alpha=0.25, label="interquartile band")
        ax.plot(pos, med, "o-", label="median ambient distance")
        ax.set_xscale("log")
        ax.set_yscale("symlog", linthresh=1e-6)
        ax.set_xlabel("t")
        ax.set_ylabel("d_W(t)")
        ax.legend()
        ax.set_title("block coupling: distance decay")
        _save(fig, out_dir, "infinity_decay.png", written)

        frac = [np.mean(results[results[:, 1] == t, 3] == 0) for t in pos]
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.plot(pos, frac, "o-", label="empirical all-blocks-coupled")
        ax.plot(law[:, 0], law[:, 1], "k--", lw=1.2, label="product law")
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("P[all blocks coupled by t]")
        ax.legend()
        ax.set_title("block coupling: completion probability")
        _save(fig, out_dir, "infinity_all_coupled.png", written)

    elif kind == "ruin":
        sups = results[:, 1]
        lam = law[:, 0]
        emp = [(sups >= v).mean() for v in lam]
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        ax.plot(lam, emp, lw=1.0, label="empirical P[sup >= lambda]")
        ax.plot(lam, law[:, 1], "k--", lw=1.2, label="1 / lambda")
        for check in summary["checks"]:
            ax.errorbar([1.0 / check["target"]], [check["empirical"]],
                        yerr=[check["critical_value"]], fmt="o", capsize=4, color="C1")
        ax.set_xlabel("lambda")
        ax.set_ylabel("exceedance probability")
        ax.legend()
        ax.set_title("factor-process maximum vs gambler's ruin")
        _save(fig, out_dir, "ruin_exceedance.png", written)

    elif kind == "density":
        hnorms = np.unique(results[:, 1])
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        for i, hn in enumerate(hnorms):
            weights = np.exp(results[results[:, 1] == hn, 2])
            check = next(c for c in summary["checks"]
                         if c["law"] == f"density-mean(hnorm={hn:g})")
            ax.errorbar([hn], [weights.mean()], yerr=[check["critical_value"]],
                        fmt="o", capsize=4, color=f"C{i}",
                        label=f"hnorm={hn:g} (n={weights.size})")
        ax.axhline(1.0, color="k", ls="--", lw=1.0)
        ax.set_xlabel("shift Hilbert norm")
        ax.set_ylabel("mean density weight")
        ax.legend()
        ax.set_title("shift density: unit-mean check")
        _save(fig, out_dir, "density_mean.png", written)

    elif kind == "isometry":
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        for j, target, lo, hi in law:
            sample = results[results[:, 1] == j, 2]
            ax.errorbar([j], [sample.var(ddof=1)], fmt="o", capsize=4, color="C0")
            ax.plot([j, j], [lo, hi], color="k", lw=1.0)
            ax.plot([j], [target], "_", color="k", ms=16)
        ax.set_xlabel("test vector index")
        ax.set_ylabel("variance of the linear pairing")
        ax.set_title("pairing variance vs squared Hilbert norm")
        _save(fig, out_dir, "isometry_variance.png", written)

    return written
