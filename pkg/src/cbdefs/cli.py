"""Command-line front end: experiment batteries, comparisons, thread-scaling
benchmarks, and synthetic dataset generation.

Configuration is a flat YAML mapping (see CONFIG_KEYS); unknown keys are
rejected.  Exit codes: 0 success, 1 runtime failure, 2 invalid config.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import itertools
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import analysis, engine
from .classifier import TrainConfig
from .data import Dataset, load_csv, load_libsvm, standardize, stratified_split, write_csv
from .engine import ConfigError, EngineConfig, RunReport, comparable_dict

# key -> (expected type(s), default); None default means "no default, optional"
CONFIG_KEYS = {
    "dataset_path": (str, None),
    "dataset_format": (str, None),  # "csv" | "libsvm"
    "label_column": ((str, int), None),
    "libsvm_n_features": ((str, int), "auto"),
    "synthetic_samples": (int, None),
    "synthetic_features": (int, None),
    "synthetic_informative": (int, None),
    "synthetic_noise": ((int, float), 0.0),
    "synthetic_seed": (int, 0),
    "test_fraction": ((int, float), 0.2),
    "split_seed": (int, 0),
    "standardize": (bool, True),
    "ps": (int, None),
    "lps": (int, None),
    "k_islands": (int, 1),
    "m_mig": (int, 1),
    "m_gen": (int, 1),
    "mf": ((int, float), 0.2),
    "cr": ((int, float), 0.9),
    "variant": (str, "bde"),
    "threads": (int, None),
    "lr_learning_rate": ((int, float), 0.1),
    "lr_max_iters": (int, 100),
    "lr_tolerance": ((int, float), 1e-6),
    "lr_l2": ((int, float), 0.0),
    "dedup_masks": (bool, False),
    "retrain_final": (bool, False),
    "n_runs": (int, 1),
    "base_seed": (int, 0),
    "out_dir": (str, None),
}

_REQUIRED = ("ps", "lps")


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int
    n_features: int
    n_informative: int
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 4:
            raise ConfigError(f"synthetic_samples must be >= 4, got {self.n_samples}")
        if self.n_features < 1:
            raise ConfigError(f"synthetic_features must be >= 1, got {self.n_features}")
        if not 1 <= self.n_informative <= self.n_features:
            raise ConfigError(
                f"synthetic_informative must lie in [1, {self.n_features}], "
                f"got {self.n_informative}"
            )
        if self.noise < 0.0:
            raise ConfigError(f"synthetic_noise must be >= 0, got {self.noise}")


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, list[int]]:
    """Labels from a random linear logit over the informative columns, with
    additive Gaussian noise; the other columns are pure noise."""
    rng = np.random.default_rng(spec.seed)
    x = rng.standard_normal((spec.n_samples, spec.n_features))
    informative = np.sort(rng.choice(spec.n_features, spec.n_informative, replace=False))
    weights = rng.uniform(1.0, 2.0, spec.n_informative) * rng.choice((-1.0, 1.0), spec.n_informative)
    logit = x[:, informative] @ weights + spec.noise * rng.standard_normal(spec.n_samples)
    labels = (logit > 0.0).astype(np.int8)
    if labels.min() == labels.max():
        raise ValueError("degenerate synthetic draw produced a single class; change the seed")
    names = tuple(f"f{j}" for j in range(spec.n_features))
    return Dataset(x, labels, names), [int(j) for j in informative]


@dataclass
class ExperimentConfig:
    raw: dict

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(str(exc)) from exc
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat key-value mapping")
        merged = {}
        for key, value in data.items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            expected, _ = CONFIG_KEYS[key]
            if value is not None and not isinstance(value, expected):
                raise ConfigError(f"config key {key!r} has invalid type {type(value).__name__}")
            merged[key] = value
        for key, (_, default) in CONFIG_KEYS.items():
            merged.setdefault(key, default)
        for key in _REQUIRED:
            if merged[key] is None:
                raise ConfigError(f"missing required config key {key!r}")
        has_file = merged["dataset_path"] is not None
        has_synth = merged["synthetic_samples"] is not None
        if has_file == has_synth:
            raise ConfigError(
                "configure exactly one data source: dataset_path or synthetic_samples"
            )
        if has_file and merged["dataset_format"] not in ("csv", "libsvm"):
            raise ConfigError("dataset_format must be 'csv' or 'libsvm'")
        if merged["n_runs"] < 1:
            raise ConfigError(f"n_runs must be >= 1, got {merged['n_runs']}")
        if not 0.0 < merged["test_fraction"] < 1.0:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {merged['test_fraction']}")
        return cls(merged)

    def engine_config(self, master_seed: int) -> EngineConfig:
        c = self.raw
        cfg = EngineConfig(
            ps=c["ps"],
            lps=c["lps"],
            k_islands=c["k_islands"],
            m_mig=c["m_mig"],
            m_gen=c["m_gen"],
            mf=float(c["mf"]),
            cr=float(c["cr"]),
            variant=c["variant"],
            master_seed=master_seed,
            threads=c["threads"],
            lr=TrainConfig(
                learning_rate=float(c["lr_learning_rate"]),
                max_iters=c["lr_max_iters"],
                tolerance=float(c["lr_tolerance"]),
                l2=float(c["lr_l2"]),
            ),
            dedup_masks=c["dedup_masks"],
            retrain_final=c["retrain_final"],
        )
        cfg.validate()
        return cfg

    def load_data(self) -> tuple[Dataset, dict]:
        c = self.raw
        if c["dataset_path"] is not None:
            path = c["dataset_path"]
            digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
            if c["dataset_format"] == "csv":
                if c["label_column"] is None:
                    raise ConfigError("label_column is required for CSV datasets")
                ds = load_csv(path, c["label_column"])
            else:
                ds = load_libsvm(path, c["libsvm_n_features"])
            info = {"source": str(path), "format": c["dataset_format"], "sha256": digest}
        else:
            spec = SyntheticSpec(
                n_samples=c["synthetic_samples"],
                n_features=c["synthetic_features"],
                n_informative=c["synthetic_informative"],
                noise=float(c["synthetic_noise"]),
                seed=c["synthetic_seed"],
            )
            ds, informative = generate_synthetic(spec)
            digest = hashlib.sha256(
                ds.dense_features().tobytes() + ds.labels.tobytes()
            ).hexdigest()
            info = {
                "source": "synthetic",
                "samples": spec.n_samples,
                "features": spec.n_features,
                "informative": informative,
                "noise": spec.noise,
                "seed": spec.seed,
                "sha256": digest,
            }
        info["test_fraction"] = float(c["test_fraction"])
        info["split_seed"] = c["split_seed"]
        return ds, info


def run_battery(config: ExperimentConfig, out_dir: Path, threads: int | None = None) -> list[RunReport]:
    """Execute n_runs engine runs (seed = base_seed + r) and write the artifacts."""
    c = config.raw
    ds, info = config.load_data()
    train, test = stratified_split(ds, float(c["test_fraction"]), c["split_seed"])
    if c["standardize"]:
        train, test, _ = standardize(train, test)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for r in range(c["n_runs"]):
        cfg = config.engine_config(master_seed=c["base_seed"] + r)
        if threads is not None:
            cfg = dataclasses.replace(cfg, threads=threads)
        try:
            report = engine.run(cfg, train, test, dataset_info=info)
        except Exception as exc:
            raise RuntimeError(f"run {r} failed: {exc}") from exc
        report.save(out_dir / f"run_{r:03d}.json")
        reports.append(report)
    summary = analysis.summarize(reports)
    analysis.write_table(
        analysis.summary_rows([summary]),
        analysis.SUMMARY_COLUMNS,
        out_dir / "summary.csv",
        out_dir / "summary.json",
    )
    return reports


def _load_battery(path: Path) -> list[RunReport]:
    files = sorted(path.glob("run_*.json"))
    if not files:
        raise ConfigError(f"no run_*.json reports found in {path}")
    return [RunReport.load(f) for f in files]


def cmd_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    _apply_overrides(config, args)
    out_dir = Path(args.out or config.raw["out_dir"] or "battery_out")
    run_battery(config, out_dir)
    print(f"wrote {config.raw['n_runs']} report(s) and summary to {out_dir}")
    return 0


def cmd_compare(args) -> int:
    batteries = [_load_battery(Path(d)) for d in args.report_dirs]
    counts = {len(b) for b in batteries}
    if len(counts) != 1:
        raise ConfigError(f"mismatched run counts across batteries: {sorted(counts)}")
    hashes = {b[0].dataset_info.get("sha256") for b in batteries}
    if len(hashes) != 1:
        raise ConfigError("batteries were produced on different datasets")
    summaries = [analysis.summarize(b) for b in batteries]
    comparisons = [
        analysis.compare_batteries(a, b) for a, b in itertools.combinations(summaries, 2)
    ]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    analysis.write_table(
        analysis.summary_rows(summaries),
        analysis.SUMMARY_COLUMNS,
        out_dir / "summary.csv",
        out_dir / "summary.json",
    )
    if comparisons:
        analysis.write_table(
            analysis.comparison_rows(comparisons),
            analysis.COMPARISON_COLUMNS,
            out_dir / "comparisons.csv",
            out_dir / "comparisons.json",
        )
    print(f"wrote {len(summaries)} summary row(s), {len(comparisons)} comparison row(s) to {out_dir}")
    return 0


def cmd_bench(args) -> int:
    thread_counts = [int(t) for t in args.threads.split(",")]
    if 1 not in thread_counts:
        raise ConfigError("bench thread counts must include 1")
    config = ExperimentConfig.load(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    baseline_reports = None
    baseline_seconds = None
    for threads in thread_counts:
        t0 = time.perf_counter()
        reports = run_battery(config, out_dir / f"threads_{threads}", threads=threads)
        elapsed = time.perf_counter() - t0
        if threads == 1:
            baseline_reports = [comparable_dict(r) for r in reports]
            baseline_seconds = elapsed
        results.append((threads, elapsed, reports))

    rows = []
    for threads, elapsed, reports in results:
        if [comparable_dict(r) for r in reports] != baseline_reports:
            raise RuntimeError(
                f"non-timing results at {threads} threads differ from the sequential run"
            )
        value = analysis.speedup(baseline_seconds, elapsed)
        rows.append(
            {
                "threads": threads,
                "seconds": elapsed,
                "speedup": value,
                "speedup_2dp": analysis.format_speedup(value),
            }
        )
    analysis.write_table(
        rows,
        ("threads", "seconds", "speedup", "speedup_2dp"),
        out_dir / "speedup.csv",
        out_dir / "speedup.json",
    )
    for row in rows:
        print(f"threads={row['threads']}: {row['seconds']:.2f}s speedup={row['speedup_2dp']}")
    return 0


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        n_samples=args.samples,
        n_features=args.features,
        n_informative=args.informative,
        noise=args.noise,
        seed=args.seed,
    )
    ds, informative = generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out)
    sidecar = out.with_suffix(out.suffix + ".indices.json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump({"informative_indices": informative}, fh)
    print(f"wrote {out} and {sidecar}")
    return 0


def _apply_overrides(config: ExperimentConfig, args) -> None:
    if getattr(args, "threads", None) is not None:
        config.raw["threads"] = args.threads
    if getattr(args, "runs", None) is not None:
        config.raw["n_runs"] = args.runs
    if getattr(args, "seed", None) is not None:
        config.raw["base_seed"] = args.seed
    if getattr(args, "variant", None) is not None:
        config.raw["variant"] = args.variant


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbdefs",
        description="Island-model (chaotic) binary differential evolution for feature subset selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment battery from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--runs", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--variant", choices=engine.VARIANTS, default=None)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="summarize and t-test saved batteries")
    p_cmp.add_argument("report_dirs", nargs="+")
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_bench = sub.add_parser("bench", help="run the same seeded workload at several thread counts")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--threads", default="1", help="comma-separated counts, must include 1")
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(func=cmd_bench)

    p_synth = sub.add_parser("synth", help="generate a synthetic CSV dataset with a sidecar index list")
    p_synth.add_argument("--samples", type=int, required=True)
    p_synth.add_argument("--features", type=int, required=True)
    p_synth.add_argument("--informative", type=int, required=True)
    p_synth.add_argument("--noise", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
