"""CSV and SVG emission for simulation experiments.

The SVG chart is rendered from the CSV alone so the two artifacts can
never disagree (no second computation path).
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Mapping, Sequence

CSV_FIELDS = ("dist", "n", "estimator", "bias", "se", "reps", "seed",
              "caveat")


def write_bias_csv(rows: Iterable[Mapping], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for row in rows:
            out = dict(row)
            out.setdefault("caveat", "")
            out["bias"] = repr(float(out["bias"]))
            out["se"] = repr(float(out["se"]))
            w.writerow(out)


def read_bias_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = []
        for row in csv.DictReader(fh):
            row["n"] = int(row["n"])
            row["bias"] = float(row["bias"])
            row["se"] = float(row["se"])
            row["reps"] = int(row["reps"])
            rows.append(row)
        return rows


def render_bias_svg(csv_path: str | Path, svg_path: str | Path) -> None:
    """Panel-per-distribution line chart of usual vs corrected bias with
    error bars, in the layout of the bias-comparison figure."""
    import matplotlib
    matplotlib.use("Agg")
    # fixed hash salt: element ids must not vary between identical runs
    matplotlib.rcParams["svg.hashsalt"] = "momenta"
    import matplotlib.pyplot as plt

    rows = read_bias_csv(csv_path)
    dists = sorted({r["dist"] for r in rows},
                   key=lambda d: min(i for i, r in enumerate(rows)
                                     if r["dist"] == d))
    ncol = min(3, len(dists))
    nrow = (len(dists) + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 3 * nrow),
                             squeeze=False, sharex=True)
    colors = {"usual": "black", "corrected": "red"}
    for i, dist in enumerate(dists):
        ax = axes[i // ncol][i % ncol]
        for est in ("usual", "corrected"):
            pts = sorted((r["n"], r["bias"], r["se"]) for r in rows
                         if r["dist"] == dist and r["estimator"] == est)
            if not pts:
                continue
            ns, bs, ses = zip(*pts)
            ax.errorbar(ns, bs, yerr=ses, color=colors[est], label=est,
                        marker="o", markersize=3, capsize=2, linewidth=1)
        ax.axhline(0.0, color="gray", linewidth=0.5)
        caveat = next((r["caveat"] for r in rows
                       if r["dist"] == dist and r.get("caveat")), "")
        title = dist + (f" ({caveat})" if caveat else "")
        ax.set_title(title, fontsize=10)
        ax.set_xlabel("n")
        ax.set_ylabel("bias")
        if i == 0:
            ax.legend(fontsize=8)
    for j in range(len(dists), nrow * ncol):
        axes[j // ncol][j % ncol].axis("off")
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def rows_to_csv_text(rows: Sequence[Mapping],
                     fields: Sequence[str] | None = None) -> str:
    """Generic delimited rendering for CLI --format csv output."""
    if not rows:
        return ""
    fields = list(fields or rows[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
