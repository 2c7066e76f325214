"""Command-line entry point.

Subcommands:

* ``run``: execute a configured experiment and print the summary table.
* ``toy``: emit the 1-D toy figure data as CSV files.
* ``verify-proposition``: Monte-Carlo check of the squared-disagreement
  decomposition; exits 2 if the relative error exceeds the threshold.
* ``report``: merge summary CSVs across dataset directories, marking the
  best policy per dataset.

Exit codes: 0 success, 1 usage/config/IO error, 2 threshold failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .environments import FIG_CLUSTERED_SPEC, FIG_SCATTER_SPEC, linear_gaussian_spec
from .errors import ConfigError, RomeBanditsError
from .harness import (
    EnvConfig,
    ExperimentConfig,
    SUMMARY_COLUMNS,
    compare_uncertainty_maps,
    overfit_linear_config,
    persist_results,
    run_experiment,
    toy_band_profiles,
    tuned_linear_config,
    verify_proposition,
)
from .policies import POLICY_KINDS

BAND_MULTIPLIER = 2.58  # approximate 99% normal interval
MIN_ASSERT_DRAWS = 1000


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_scalar(text: str):
    s = text.strip()
    if s.lower() in ("none", ""):
        return None
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    for caster in (int, float):
        try:
            return caster(s)
        except ValueError:
            continue
    return s


def parse_config_file(path) -> dict:
    """Flat ``section.key = value`` pairs; '#' starts a comment."""
    mapping = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def apply_overrides(mapping: dict, overrides) -> dict:
    out = dict(mapping)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_ENV_FIELDS = {f.name for f in fields(EnvConfig)}
_RUN_FIELDS = {f.name for f in fields(ExperimentConfig)} - {"env", "policies"}


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    env_kwargs, run_kwargs = {}, {}
    policies = None
    for key, raw in mapping.items():
        value = _parse_scalar(raw) if not isinstance(raw, (int, float, bool)) else raw
        if key.startswith("env."):
            name = key[4:]
            if name not in _ENV_FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            env_kwargs[name] = value
        elif key == "run.policies":
            policies = tuple(p.strip() for p in str(raw).split(",") if p.strip())
        elif key.startswith("run."):
            name = key[4:]
            if name not in _RUN_FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            run_kwargs[name] = value
        elif key == "seed":
            run_kwargs["base_seed"] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if policies is None:
        raise ConfigError("config must set run.policies")
    for kind in policies:
        if kind not in POLICY_KINDS:
            raise ConfigError(f"unknown policy kind {kind!r}")
    return ExperimentConfig(env=EnvConfig(**env_kwargs), policies=policies,
                            **run_kwargs)


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n")


def _fmt(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def cmd_run(args) -> int:
    mapping = apply_overrides(parse_config_file(args.config), args.override)
    config = config_from_mapping(mapping)
    if args.seed is not None:
        config = ExperimentConfig(**{**vars(config), "base_seed": args.seed})
    if config.env.path is not None and not os.path.exists(config.env.path):
        raise ConfigError(f"dataset path does not exist: {config.env.path}")
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    result = run_experiment(config, jobs=jobs)
    if args.out:
        persist_results(result, config, args.out)
    print(SUMMARY_COLUMNS)
    for s in result.summaries:
        print(f"{s.policy},{s.dataset},{s.n_replications},"
              f"{s.mean_regret!r},{s.ci95_halfwidth!r}")
    return 0


def cmd_toy(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0

    bands = toy_band_profiles(FIG_SCATTER_SPEC, seed=seed)
    _write_csv(out / "toy_samples.csv", "x,y",
               (_fmt([x, y]) for x, y in zip(bands.samples_x, bands.samples_y)))
    _write_csv(out / "toy_fit.csv", "x,f,g",
               (_fmt([x, f, g]) for x, f, g in zip(bands.grid, bands.f, bands.g)))
    _write_csv(out / "toy_bands.csv", "x,f,g,residual_overfit,band99",
               (_fmt([x, f, g, ro, BAND_MULTIPLIER * ro])
                for x, f, g, ro in zip(bands.grid, bands.f, bands.g,
                                       bands.residual_overfit)))

    maps = compare_uncertainty_maps(FIG_CLUSTERED_SPEC, seed=seed)
    _write_csv(out / "toy_rmse_compare.csv", "x,residual_overfit,rmse_model",
               (_fmt([x, ro, rm]) for x, ro, rm in
                zip(maps.grid, maps.residual_overfit, maps.rmse_model)))
    print(f"wrote toy CSVs to {out}")
    return 0


def cmd_verify_proposition(args) -> int:
    seed = args.seed if args.seed is not None else 0
    spec = linear_gaussian_spec()
    probes = np.array([[-0.8, 0.0, 0.3],
                       [0.5, 0.5, -0.5],
                       [0.0, 0.0, 0.0],
                       [0.9, -0.9, 0.2],
                       [-0.3, 0.6, 0.7]])
    report = verify_proposition(
        spec,
        tuned_linear_config(1.0),
        overfit_linear_config(),
        n_draws=args.draws,
        probes=probes,
        seed=seed,
        frozen_f=args.frozen_f,
    )
    for i in range(report.probes.shape[0]):
        rel = abs(report.lhs[i] - report.rhs[i]) / report.rhs[i]
        print(f"probe {i}: lhs={report.lhs[i]:.6g} rhs={report.rhs[i]:.6g} "
              f"rel_err={rel:.4f}")
    print(f"max relative error: {report.max_relative_error:.4f} "
          f"(threshold {args.threshold})")
    if args.draws < MIN_ASSERT_DRAWS:
        print(f"warning: {args.draws} draws is below {MIN_ASSERT_DRAWS}; "
              "result is a smoke check only, no assertion applied")
        return 0
    if report.max_relative_error > args.threshold:
        print("FAIL: relative error exceeds threshold", file=sys.stderr)
        return 2
    return 0


def _read_summary(path: Path):
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0] != SUMMARY_COLUMNS:
        raise ConfigError(f"{path}: unexpected summary columns "
                          f"(want {SUMMARY_COLUMNS!r})")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 5:
            raise ConfigError(f"{path}: malformed summary row {line!r}")
        rows.append({"policy": parts[0], "dataset": parts[1],
                     "mean": float(parts[3]), "ci": float(parts[4])})
    return rows


def cmd_report(args) -> int:
    root = Path(args.out or ".")
    paths = sorted(root.rglob("summary.csv"))
    if not paths:
        raise ConfigError(f"no summary.csv files found under {root}")
    by_dataset = {}
    policies = []
    for path in paths:
        for row in _read_summary(path):
            cell = by_dataset.setdefault(row["dataset"], {})
            cell[row["policy"]] = (row["mean"], row["ci"])
            if row["policy"] not in policies:
                policies.append(row["policy"])
    datasets = sorted(by_dataset)
    header = ["policy"]
    for ds in datasets:
        header += [f"{ds}_mean", f"{ds}_ci95", f"{ds}_best"]
    print(",".join(header))
    best = {ds: min(v[0] for v in by_dataset[ds].values()) for ds in datasets}
    for policy in policies:
        cells = [policy]
        for ds in datasets:
            entry = by_dataset[ds].get(policy)
            if entry is None:
                cells += ["", "", ""]
                continue
            mean, ci = entry
            marker = "*" if mean == best[ds] else ""
            cells += [repr(mean), repr(ci), marker]
        print(",".join(cells))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rome-bandits")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--override", action="append", metavar="K=V")
    run.add_argument("--out", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--jobs", type=int, default=1)

    toy = sub.add_parser("toy", help="emit 1-D toy figure data as CSV")
    toy.add_argument("--out", default=None)
    toy.add_argument("--seed", type=int, default=None)

    verify = sub.add_parser("verify-proposition",
                            help="Monte-Carlo check of the disagreement decomposition")
    verify.add_argument("--draws", type=int, default=10000)
    verify.add_argument("--threshold", type=float, default=0.05)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--frozen-f", type=float, default=None,
                        help="freeze f to this constant (degenerate check)")

    report = sub.add_parser("report", help="merge summary CSVs across datasets")
    report.add_argument("--out", default=None,
                        help="directory searched recursively for summary.csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "run": cmd_run,
        "toy": cmd_toy,
        "verify-proposition": cmd_verify_proposition,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (RomeBanditsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():  # console-script hook
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
