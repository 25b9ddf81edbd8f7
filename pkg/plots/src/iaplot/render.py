"""Figure builders for the four supported plot kinds."""

import math
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import group_key, read_rows

KINDS = ("convergence", "se-vs-snr", "scaling-fit", "lemma-table")


@dataclass(frozen=True)
class PlotSpec:
    source: str
    kind: str
    out: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"choose from {', '.join(KINDS)}")


def _fmt_bits(bits):
    if bits is None:
        return "?"
    if isinstance(bits, float) and math.isinf(bits):
        return "inf"
    return f"{bits:g}" if isinstance(bits, float) else str(bits)


def _grouped(rows, wanted):
    groups = {}
    for row in rows:
        if wanted(row):
            groups.setdefault(group_key(row), []).append(row)
    return groups


def _empty_axes(ax, message):
    ax.text(0.5, 0.5, message, ha="center", va="center", transform=ax.transAxes)
    print(f"warning: {message}", file=sys.stderr)


def _convergence(ax, rows):
    groups = {}
    for row in rows:
        if row["metric"] == "residual_interference_db":
            groups.setdefault((row["metric"], row["bits"]), []).append(row)
    if not groups:
        _empty_axes(ax, "no residual-interference rows")
    for (metric, bits), rws in sorted(groups.items(), key=lambda kv: str(kv[0])):
        rws = sorted(rws, key=lambda r: r["iteration"])
        x = [r["iteration"] for r in rws]
        y = [r["value"] for r in rws]
        err = [r["stderr"] or 0.0 for r in rws]
        ax.errorbar(x, y, yerr=err, capsize=2, label=f"B = {_fmt_bits(bits)}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual interference [dB]")


def _se_vs_snr(ax, rows):
    groups = _grouped(rows, lambda r: r["metric"].startswith("sum_se"))
    if not groups:
        _empty_axes(ax, "no spectral-efficiency rows")
    for (metric, bits, iters), rws in sorted(groups.items(), key=lambda kv: str(kv[0])):
        rws = sorted(rws, key=lambda r: r["snr_db"])
        x = [r["snr_db"] for r in rws]
        y = [r["value"] for r in rws]
        err = [r["stderr"] or 0.0 for r in rws]
        scheme = metric.split("_")[-1].upper()
        ax.errorbar(x, y, yerr=err, capsize=2, marker="o",
                    label=f"{scheme}, bits={_fmt_bits(bits)}, {iters} it")
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("sum spectral efficiency [bit/s/Hz]")


def _scaling_fit(ax, rows):
    groups = _grouped(rows, lambda r: r["metric"].startswith("rate_gap_mean"))
    if not groups:
        _empty_axes(ax, "no rate-gap rows")
        return
    n_t = rows[0]["nt"] if rows else 5
    ref_slopes = (-1.0 / (n_t - 1), -1.0 / (2 * (n_t - 1)))
    for (metric, _, _), rws in sorted(groups.items(), key=lambda kv: str(kv[0])):
        rws = sorted(rws, key=lambda r: r["bits"])
        x = np.array([r["bits"] for r in rws], dtype=float)
        y = np.log2([r["value"] for r in rws])
        ax.plot(x, y, marker="o", label=metric.replace("rate_gap_mean_", ""))
        for slope in ref_slopes:
            ax.plot(x, y[0] + slope * (x - x[0]), linestyle="--", linewidth=0.8,
                    color="gray")
    ax.plot([], [], linestyle="--", color="gray",
            label=f"slopes -1/{n_t - 1}, -1/{2 * (n_t - 1)}")
    ax.set_xlabel("feedback bits B")
    ax.set_ylabel("log2(mean rate gap)")


def _lemma_table(ax, rows):
    lemmas = [r for r in rows if r["metric"].startswith("lemma_")]
    if not lemmas:
        _empty_axes(ax, "no lemma rows")
        return
    stats = {}
    for r in lemmas:
        name = r["metric"].replace("lemma_", "")
        if name.endswith("_stat"):
            stats.setdefault((name[:-5], r["iteration"]), {})["stat"] = r["value"]
        elif name.endswith("_passed"):
            stats.setdefault((name[:-7], r["iteration"]), {})["passed"] = r["value"]
    cells = [[name, f"{vals.get('stat', float('nan')):.4g}",
              "pass" if vals.get("passed") else "fail"]
             for (name, _), vals in sorted(stats.items())]
    ax.axis("off")
    table = ax.table(cellText=cells, colLabels=["check", "statistic", "verdict"],
                     loc="center")
    table.scale(1, 1.4)


_BUILDERS = {
    "convergence": _convergence,
    "se-vs-snr": _se_vs_snr,
    "scaling-fit": _scaling_fit,
    "lemma-table": _lemma_table,
}


def build_figure(rows, kind, title="", xlabel="", ylabel=""):
    """Assemble the figure for ``kind`` from parsed rows (no file I/O)."""
    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    _BUILDERS[kind](ax, rows)
    if title:
        ax.set_title(title)
    if xlabel:
        ax.set_xlabel(xlabel)
    if ylabel:
        ax.set_ylabel(ylabel)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def render(spec):
    """Read the CSV, build the figure, and write the image file."""
    rows = read_rows(spec.source)
    fig = build_figure(rows, spec.kind, spec.title, spec.xlabel, spec.ylabel)
    try:
        fig.savefig(spec.out, dpi=150)
    finally:
        plt.close(fig)
    return spec.out
