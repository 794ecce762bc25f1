#!/usr/bin/env python3
"""Render figure families from sweep output CSVs.

Reads the simulator's aggregate.csv (or, for disease_curves, the trajectory
manifest) and writes one PNG. Rendering is a pure function of the input
bytes: fixed ordering, fixed palette, fixed DPI, no timestamps.

    python3 plot.py --family dispersion --in runs/aggregate.csv --out fig.png

Families
    dispersion       estimated vs target dispersion k, identity reference
    correlation      positivity/incidence correlation vs daily tests
    final_infection  final infected fraction vs daily tests
    threat           peak threat level (four observer bases) vs daily tests
    disease_curves   mean daily new-infection ratio by day; --in is the
                     trajectories/manifest.csv written with --emit-trajectories

Panels are faceted rows=gamma, columns=R0; lines are strategies. Exits 2 on
a schema mismatch (printing the column diff) and 3 when no data row is
usable, without writing an image.
"""

import argparse
import csv
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# the simulator's published CSV schemas; checked, never inferred
AXIS_COLUMNS = (
    "N", "I0", "beta", "gamma", "kappa", "R0", "k", "p_H",
    "daily_tests", "strategy", "network_kind", "model",
)
METRIC_COLUMNS = (
    "mean_final_infection_fraction",
    "mean_top5_community_fraction",
    "mean_days_to_end",
    "mean_daily_correlation",
    "max_threat_actual",
    "max_threat_confirmed",
    "max_threat_posrate",
    "max_threat_rt_only",
    "k_hat_mean",
    "replicas",
)
AGGREGATE_COLUMNS = AXIS_COLUMNS + METRIC_COLUMNS
MANIFEST_COLUMNS = ("cell_index",) + AXIS_COLUMNS
TRAJECTORY_COLUMNS = (
    "day", "S", "E", "I", "R", "H", "new_infections", "tests_used",
    "positives_found", "positive_rate", "quarantined_cumulative",
    "threat_level_actual", "tests_rt", "positives_rt",
)

FAMILIES = ("dispersion", "correlation", "final_infection", "threat",
            "disease_curves")

# stable strategy order and palette, shared by every family
STRATEGY_ORDER = ("none", "rt", "fct", "bct", "cto", "got")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
           "#8c564b", "#e377c2")
THREAT_STYLES = (
    ("max_threat_actual", "actual", "-"),
    ("max_threat_confirmed", "confirmed", "--"),
    ("max_threat_posrate", "positive rate", "-."),
    ("max_threat_rt_only", "rt only", ":"),
)
DPI = 120
PNG_METADATA = {"Software": "plot.py"}


class SchemaError(Exception):
    pass


class NoDataError(Exception):
    pass


def check_columns(present, expected, what):
    missing = [c for c in expected if c not in present]
    if missing:
        extra = [c for c in present if c not in expected]
        lines = [f"{what}: column schema mismatch"]
        lines.append("  missing: " + ", ".join(missing))
        if extra:
            lines.append("  unexpected: " + ", ".join(extra))
        lines.append("  expected: " + ", ".join(expected))
        raise SchemaError("\n".join(lines))


def read_csv_rows(path, expected, what):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise NoDataError(f"{what}: file is empty")
        check_columns(reader.fieldnames, expected, what)
        rows = list(reader)
    if not rows:
        raise NoDataError(f"{what}: no data rows")
    return rows


def to_float(text):
    try:
        return float(text)
    except ValueError:
        return math.nan


def strategy_rank(name):
    try:
        return (0, STRATEGY_ORDER.index(name))
    except ValueError:
        return (1, name)


def strategy_color(strategies):
    ordered = sorted(set(strategies), key=strategy_rank)
    return {s: PALETTE[i % len(PALETTE)] for i, s in enumerate(ordered)}


def facet_axes(rows):
    gammas = sorted({to_float(r["gamma"]) for r in rows})
    r0s = sorted({to_float(r["R0"]) for r in rows})
    return gammas, r0s


def make_grid(n_rows, n_cols):
    fig, axes = plt.subplots(
        n_rows,
        n_cols,
        figsize=(3.4 * n_cols + 1.2, 2.8 * n_rows + 1.0),
        squeeze=False,
        sharex=True,
        sharey=True,
    )
    return fig, axes


def finish(fig, axes, gammas, r0s, xlabel, ylabel, handles):
    for j, r0 in enumerate(r0s):
        axes[0][j].set_title(f"R0 = {r0:g}", fontsize=10)
    for i, g in enumerate(gammas):
        axes[i][0].set_ylabel(f"gamma = {g:g}\n{ylabel}", fontsize=9)
    for ax in axes[-1]:
        ax.set_xlabel(xlabel, fontsize=9)
    if handles:
        fig.legend(
            handles=handles,
            loc="upper center",
            ncol=min(len(handles), 6),
            fontsize=8,
            frameon=False,
            bbox_to_anchor=(0.5, 1.0),
        )
    fig.tight_layout(rect=(0, 0, 1, 0.93 if handles else 1.0))


def line_handles(colors, styles=None):
    handles = [
        plt.Line2D([], [], color=c, marker="o", label=s, linewidth=1.5)
        for s, c in sorted(colors.items(), key=lambda kv: strategy_rank(kv[0]))
    ]
    if styles:
        handles.extend(
            plt.Line2D([], [], color="0.3", linestyle=ls, label=label)
            for _, label, ls in styles
        )
    return handles


def series_by_tests(rows, ycol):
    """(x=daily_tests, y=ycol) points sorted by x, nan y dropped."""
    pts = sorted(
        (int(r["daily_tests"]), to_float(r[ycol]))
        for r in rows
    )
    xs = [x for x, y in pts if not math.isnan(y)]
    ys = [y for x, y in pts if not math.isnan(y)]
    return xs, ys


def panel_rows(rows, gamma, r0):
    return [
        r
        for r in rows
        if to_float(r["gamma"]) == gamma and to_float(r["R0"]) == r0
    ]


def render_aggregate_family(family, rows, out_path):
    gammas, r0s = facet_axes(rows)
    colors = strategy_color(r["strategy"] for r in rows)
    fig, axes = make_grid(len(gammas), len(r0s))
    drew = False

    ycol = {
        "correlation": "mean_daily_correlation",
        "final_infection": "mean_final_infection_fraction",
    }.get(family)

    for i, gamma in enumerate(gammas):
        for j, r0 in enumerate(r0s):
            ax = axes[i][j]
            sub = panel_rows(rows, gamma, r0)
            for strategy in sorted({r["strategy"] for r in sub}, key=strategy_rank):
                srows = [r for r in sub if r["strategy"] == strategy]
                color = colors[strategy]
                if family == "dispersion":
                    pts = sorted(
                        (to_float(r["k"]), to_float(r["k_hat_mean"])) for r in srows
                    )
                    xs = [x for x, y in pts if not math.isnan(y)]
                    ys = [y for x, y in pts if not math.isnan(y)]
                    if xs:
                        ax.plot(xs, ys, color=color, marker="o", linewidth=1.5)
                        drew = True
                elif family == "threat":
                    for col, _, style in THREAT_STYLES:
                        xs, ys = series_by_tests(srows, col)
                        if xs:
                            ax.plot(xs, ys, color=color, linestyle=style,
                                    marker="o", markersize=3, linewidth=1.2)
                            drew = True
                else:
                    xs, ys = series_by_tests(srows, ycol)
                    if xs:
                        ax.plot(xs, ys, color=color, marker="o", linewidth=1.5)
                        drew = True
            if family == "dispersion":
                ks = [to_float(r["k"]) for r in sub]
                if ks:
                    lo, hi = min(ks), max(ks)
                    ax.plot([lo, hi], [lo, hi], color="0.5", linestyle="--",
                            linewidth=1.0)
                ax.set_xscale("log")
                ax.set_yscale("log")

    if not drew:
        plt.close(fig)
        raise NoDataError(f"{family}: every usable value is missing")

    labels = {
        "dispersion": ("target k", "estimated k"),
        "correlation": ("daily tests", "correlation"),
        "final_infection": ("daily tests", "final infected fraction"),
        "threat": ("daily tests", "peak threat level"),
    }
    xlabel, ylabel = labels[family]
    styles = THREAT_STYLES if family == "threat" else None
    finish(fig, axes, gammas, r0s, xlabel, ylabel, line_handles(colors, styles))
    fig.savefig(out_path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)


def render_disease_curves(manifest_path, out_path):
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.csv"
    cells = read_csv_rows(manifest_path, MANIFEST_COLUMNS, "manifest")
    tdir = manifest_path.parent

    curves = []  # (gamma, R0, strategy, ratio-by-day)
    for cell in cells:
        idx = int(cell["cell_index"])
        n = int(cell["N"])
        files = sorted(tdir.glob(f"cell{idx:03d}_net*_rep*.csv"))
        files = [f for f in files if not f.name.endswith(".infections.csv")]
        if not files:
            continue
        per_day = []
        for f in files:
            rows = read_csv_rows(f, TRAJECTORY_COLUMNS, f.name)
            series = [int(r["new_infections"]) for r in rows]
            for day, v in enumerate(series):
                while len(per_day) <= day:
                    per_day.append([])
                per_day[day].append(v)
        # runs that ended early contribute zero new infections afterwards
        n_runs = len(files)
        ratio = [sum(vals) / (n_runs * n) for vals in per_day]
        curves.append(
            (to_float(cell["gamma"]), to_float(cell["R0"]), cell["strategy"], ratio)
        )

    if not curves:
        raise NoDataError("disease_curves: no trajectory files for any cell")

    gammas = sorted({c[0] for c in curves})
    r0s = sorted({c[1] for c in curves})
    colors = strategy_color(c[2] for c in curves)
    fig, axes = make_grid(len(gammas), len(r0s))
    for gamma, r0, strategy, ratio in sorted(
        curves, key=lambda c: (c[0], c[1], strategy_rank(c[2]))
    ):
        ax = axes[gammas.index(gamma)][r0s.index(r0)]
        ax.plot(range(len(ratio)), ratio, color=colors[strategy], linewidth=1.5)
    finish(
        fig, axes, gammas, r0s, "day", "new infections / N",
        line_handles(colors),
    )
    fig.savefig(out_path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)


def render(family, in_path, out_path):
    if family == "disease_curves":
        render_disease_curves(in_path, out_path)
        return
    rows = read_csv_rows(in_path, AGGREGATE_COLUMNS, "aggregate")
    render_aggregate_family(family, rows, out_path)


def main(argv=None):
    ap = argparse.ArgumentParser(
        description="Render one figure family from sweep output CSVs."
    )
    ap.add_argument("--family", required=True, choices=FAMILIES)
    ap.add_argument("--in", dest="in_path", required=True,
                    help="aggregate.csv, or the trajectory manifest for "
                         "disease_curves")
    ap.add_argument("--out", required=True, help="output PNG path")
    args = ap.parse_args(argv)
    try:
        render(args.family, args.in_path, args.out)
    except SchemaError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (NoDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
