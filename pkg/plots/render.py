#!/usr/bin/env python3
"""Render harness CSVs into figures.

Kinds:
  bands          toy_bands.csv -> tuned fit with disagreement bands
  rmse_compare   toy_rmse_compare.csv -> disagreement vs error-model profiles
  reward_curves  one or more series CSVs -> per-replication cumulative reward
  summary_bar    summary.csv -> mean regret per policy with 95% CI bars

Usage:
  render.py --kind KIND --in PATH [PATH ...] --out IMAGE

The script is read-only over the CSVs and computes no statistics beyond the
pointwise mean line of the plotted reward curves. Schema mismatches exit
with code 2 and print the column diff; an empty CSV is an error, never a
blank figure. Styling is fixed so re-rendering the same inputs produces the
same figure.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEMAS = {
    "bands": ["x", "f", "g", "residual_overfit", "band99"],
    "rmse_compare": ["x", "residual_overfit", "rmse_model"],
    "reward_curves": ["step", "reward", "cumulative_reward"],
    "summary_bar": ["policy", "dataset", "n_replications", "mean_regret",
                    "ci95_halfwidth"],
}

NUMERIC_EXCEPT = {"policy", "dataset"}

FIGSIZE = (7.0, 4.5)
DPI = 120


class SchemaError(Exception):
    pass


def read_table(path, expected_columns):
    """Read a CSV as a dict of columns, enforcing the expected header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: file is empty")
    header = [c.strip() for c in rows[0]]
    if header != expected_columns:
        missing = [c for c in expected_columns if c not in header]
        extra = [c for c in header if c not in expected_columns]
        raise SchemaError(
            f"{path}: column mismatch\n"
            f"  expected: {','.join(expected_columns)}\n"
            f"  found:    {','.join(header)}\n"
            f"  missing:  {','.join(missing) or '-'}\n"
            f"  extra:    {','.join(extra) or '-'}")
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: no data rows")
    table = {}
    for j, name in enumerate(expected_columns):
        raw = [r[j] for r in body]
        if name in NUMERIC_EXCEPT:
            table[name] = raw
        else:
            try:
                table[name] = [float(v) for v in raw]
            except ValueError as exc:
                raise SchemaError(f"{path}: column {name!r}: {exc}") from None
    return table


def render_bands(paths, out):
    table = read_table(paths[0], SCHEMAS["bands"])
    x, f, g = table["x"], table["f"], table["g"]
    ro, band = table["residual_overfit"], table["band99"]
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    outer_lo = [fi - bi for fi, bi in zip(f, band)]
    outer_hi = [fi + bi for fi, bi in zip(f, band)]
    inner_lo = [fi - ri for fi, ri in zip(f, ro)]
    inner_hi = [fi + ri for fi, ri in zip(f, ro)]
    ax.fill_between(x, outer_lo, outer_hi, color="tab:green", alpha=0.2,
                    label="2.58x disagreement (~99%)")
    ax.fill_between(x, inner_lo, inner_hi, color="tab:blue", alpha=0.3,
                    label="disagreement band")
    ax.plot(x, f, color="tab:blue", lw=2, label="tuned model f")
    ax.plot(x, g, color="tab:red", lw=1.5, ls="--", label="overfit model g")
    ax.set_xlabel("x")
    ax.set_ylabel("prediction")
    ax.legend(loc="upper center", fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_rmse_compare(paths, out):
    table = read_table(paths[0], SCHEMAS["rmse_compare"])
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.plot(table["x"], table["residual_overfit"], color="tab:blue", lw=2,
            label="tuned/overfit disagreement")
    ax.plot(table["x"], table["rmse_model"], color="tab:orange", lw=2, ls="--",
            label="error-model profile")
    ax.set_xlabel("x")
    ax.set_ylabel("uncertainty")
    ax.legend(loc="upper center", fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_reward_curves(paths, out):
    series = [read_table(p, SCHEMAS["reward_curves"]) for p in paths]
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for table in series:
        ax.plot(table["step"], table["cumulative_reward"], color="tab:blue",
                alpha=0.35, lw=1)
    n = min(len(t["step"]) for t in series)
    mean = [sum(t["cumulative_reward"][i] for t in series) / len(series)
            for i in range(n)]
    ax.plot(series[0]["step"][:n], mean, color="tab:red", lw=2,
            label=f"mean of {len(series)} replications")
    ax.set_xlabel("step")
    ax.set_ylabel("cumulative reward")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_summary_bar(paths, out):
    table = read_table(paths[0], SCHEMAS["summary_bar"])
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    positions = range(len(table["policy"]))
    ax.bar(positions, table["mean_regret"], yerr=table["ci95_halfwidth"],
           color="tab:blue", alpha=0.8, capsize=4)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(table["policy"], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("average regret")
    ax.set_title(f"dataset: {table['dataset'][0]}", fontsize=9)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


RENDERERS = {
    "bands": render_bands,
    "rmse_compare": render_rmse_compare,
    "reward_curves": render_reward_curves,
    "summary_bar": render_summary_bar,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="render.py")
    parser.add_argument("--kind", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        metavar="PATH")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    if args.kind != "reward_curves" and len(args.inputs) != 1:
        print(f"error: kind {args.kind!r} takes exactly one input CSV",
              file=sys.stderr)
        return 2
    try:
        RENDERERS[args.kind](args.inputs, args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
