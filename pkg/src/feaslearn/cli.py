"""Config-driven experiment runner, comparison reports, and verification CLI.

Verbs:
  run <config.json>          train every seed, persist run dirs + summary.json
  compare <dirs...>          CDF/CVaR curves and a metrics table across runs
  verify {props,gradients,all}   run the verification oracles
  gen-config <template>      write a ready-to-edit experiment config

Exit codes: 0 success, 2 config error, 3 aborted run, 4 verification failure.
The FEASLEARN_OUTPUT_ROOT environment variable prefixes relative output
directories.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys

import numpy as np

from . import data as dt
from . import metrics as mt
from . import models as md
from . import oracle
from . import trainers as tr
from .errors import ConfigError, ParameterError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORTED = 3
EXIT_VERIFY = 4

OUTPUT_ROOT_ENV = "FEASLEARN_OUTPUT_ROOT"

CONFIG_DEFAULTS = {
    "name": "experiment",
    "split": {"test_fraction": 0.0, "seed": None},
    "model": {"family": "linear"},
    "metrics": {"quantiles": [0.9, 0.95, 0.99], "top_k": 10},
    "seeds": [0, 1, 2, 3, 4],
}

TRAINER_DEFAULTS = {
    "eta_theta": 1e-3,
    "eta_lambda": 1e-2,
    "alpha": "inf",
    "eps": 0.0,
    "batch_size": None,
    "epochs": 100,
    "primal_optimizer": "sgd",
    "momentum": 0.9,
    "weight_decay": 0.0,
    "cosine_decay": False,
    "analytic_dual": False,
}


def _fail(path: str, message: str):
    raise ConfigError(f"config field '{path}': {message}")


def load_config(source) -> dict:
    """Parse and validate an experiment config (path or dict), filling defaults."""
    if isinstance(source, dict):
        cfg = copy.deepcopy(source)
    else:
        try:
            with open(source) as fh:
                cfg = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}")
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")

    merged = copy.deepcopy(CONFIG_DEFAULTS)
    merged.update(cfg)
    merged["split"] = {**CONFIG_DEFAULTS["split"], **cfg.get("split", {})}
    merged["metrics"] = {**CONFIG_DEFAULTS["metrics"], **cfg.get("metrics", {})}
    merged["trainer"] = {**TRAINER_DEFAULTS, **cfg.get("trainer", {})}

    if "dataset" not in merged:
        _fail("dataset", "required")
    if "method" not in merged["trainer"]:
        _fail("trainer.method", "required")
    if merged["trainer"]["method"] not in tr.METHODS:
        _fail("trainer.method", f"must be one of {tr.METHODS}")
    seeds = merged["seeds"]
    if not isinstance(seeds, list) or not seeds or any(not isinstance(s, int) or s < 0 for s in seeds):
        _fail("seeds", "must be a non-empty list of non-negative integers")
    quantiles = merged["metrics"]["quantiles"]
    if any(not 0.0 <= q < 1.0 for q in quantiles):
        _fail("metrics.quantiles", "quantiles must lie in [0, 1)")
    frac = merged["split"]["test_fraction"]
    if not 0.0 <= frac < 1.0:
        _fail("split.test_fraction", "must lie in [0, 1)")
    alpha = merged["trainer"]["alpha"]
    if alpha in ("inf", None):
        merged["trainer"]["alpha"] = math.inf
    elif not isinstance(alpha, (int, float)) or alpha <= 0:
        _fail("trainer.alpha", "must be a positive number, 'inf', or null")
    merged.setdefault("output_dir", os.path.join("runs", merged["name"]))
    return merged


def build_dataset(cfg: dict, run_seed: int) -> tuple[dt.Dataset, dt.Dataset | None]:
    """Build the (train, test) pair a run sees. A null dataset/split seed
    follows the run seed so seeds resample the data; fixed seeds pin it."""
    dcfg = cfg["dataset"]
    gen = dcfg.get("generator")
    seed = dcfg.get("seed")
    seed = run_seed if seed is None else seed
    try:
        if gen == "two_moons":
            full = dt.gen_two_moons(dcfg.get("n", 1000), dcfg.get("noise", 0.1), seed)
        elif gen == "noisy_cosine":
            full = dt.gen_noisy_cosine(dcfg.get("n", 20), dcfg.get("sigma", 0.2), seed)
        elif gen == "conflicting_pairs":
            full = dt.gen_conflicting_pairs(dcfg.get("n_pairs", 8), dcfg.get("d", 2),
                                            dcfg.get("label_gap", 2.0), seed)
        elif gen == "csv" or "path" in dcfg:
            full = dt.load_dataset_csv(dcfg["path"], dcfg.get("task", dt.REGRESSION))
        else:
            _fail("dataset.generator", f"unknown generator {gen!r}")
        out = dcfg.get("outliers")
        if out:
            full = dt.with_label_outliers(full, out.get("fraction", 0.05), out.get("offset", 1.0),
                                          seed, out.get("placement", "random"))
    except ParameterError as err:
        raise ConfigError(f"config field 'dataset': {err}")
    frac = cfg["split"]["test_fraction"]
    if frac == 0.0:
        return full, None
    split_seed = cfg["split"]["seed"]
    split_seed = run_seed if split_seed is None else split_seed
    return dt.split_train_test(full, frac, split_seed)


def build_model(cfg: dict, dataset: dt.Dataset) -> md.Model:
    mcfg = cfg["model"]
    family = mcfg.get("family")
    try:
        if family == "linear":
            return md.LinearModel(dataset.n_features)
        if family == "poly":
            return md.PolyModel(mcfg.get("degree", 3), mcfg.get("basis", "chebyshev"),
                                tuple(mcfg["domain"]) if "domain" in mcfg else None)
        if family == "mlp":
            layers = mcfg.get("layers")
            if layers is None:
                _fail("model.layers", "required for mlp")
            return md.MLP(tuple(layers), task=dataset.task)
    except ParameterError as err:
        raise ConfigError(f"config field 'model': {err}")
    _fail("model.family", f"unknown family {family!r}")


def _resolve_output_dir(cfg: dict, output_root: str | None) -> str:
    out = cfg["output_dir"]
    root = output_root or os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    return out


def _seed_metrics(cfg: dict, record: tr.RunRecord, model: md.Model,
                  train_ds: dt.Dataset, test_ds: dt.Dataset | None) -> dict:
    quantiles = cfg["metrics"]["quantiles"]
    eps = np.asarray(record.config["eps"], dtype=np.float64)
    out = {"status": record.status, "wall_clock_s": record.wall_clock_s}
    for split, losses, ds in (("train", record.final_train_losses, train_ds),
                              ("test", record.final_test_losses, test_ds)):
        if losses is None:
            continue
        out[f"{split}_mean_loss"] = float(losses.mean())
        out[f"{split}_max_loss"] = float(losses.max())
        for q in quantiles:
            out[f"{split}_cvar_{q}"] = mt.cvar(losses, q)
        if ds is not None and ds.task == dt.CLASSIFICATION:
            preds = model.forward(record.params.theta, ds.features)
            out[f"{split}_accuracy"] = float(np.mean(preds.argmax(axis=1) == ds.targets))
    if record.final_train_losses is not None:
        out["sat_fraction"] = float(np.mean(record.final_train_losses <= eps + 1e-8))
    lam = record.multipliers.lam
    out["lam_fraction_zero"] = float(np.mean(lam <= 1e-12))
    out["lam_max"] = float(lam.max())
    if (train_ds.task == dt.CLASSIFICATION and record.config["method"] in (tr.FL, tr.RFL)
            and record.final_train_losses is not None):
        logits = model.forward(record.params.theta, train_ds.features)
        margins = md.classification_margins(logits, train_ds.targets)
        rho, degenerate = mt.margin_multiplier_correlation(lam, margins)
        out["margin_multiplier_spearman"] = rho
        out["margin_corr_degenerate"] = degenerate
    return out


def run_experiment(config, output_root: str | None = None) -> dict:
    """Train every seed of an experiment and persist artifacts.

    Returns the aggregate summary (also written to summary.json in the
    experiment output directory). Aborted runs keep their partial artifacts
    and are flagged in the summary.
    """
    cfg = load_config(config)
    outdir = _resolve_output_dir(cfg, output_root)
    os.makedirs(outdir, exist_ok=True)
    per_seed = {}
    any_aborted = False
    for seed in cfg["seeds"]:
        train_ds, test_ds = build_dataset(cfg, seed)
        model = build_model(cfg, train_ds)
        tcfg = tr.TrainerConfig(seed=seed, **cfg["trainer"])
        record = tr.train(tcfg, model, train_ds, test_ds)
        record.config["experiment"] = {k: cfg[k] for k in ("name", "dataset", "split", "model", "metrics")}
        tr.save_run(record, os.path.join(outdir, f"seed_{seed}"))
        per_seed[str(seed)] = _seed_metrics(cfg, record, model, train_ds, test_ds)
        any_aborted = any_aborted or record.aborted

    scalar_keys = sorted({k for m in per_seed.values() for k, v in m.items()
                          if isinstance(v, (int, float)) and not isinstance(v, bool)})
    aggregate = {}
    for key in scalar_keys:
        values = [m[key] for m in per_seed.values() if key in m]
        aggregate[key] = {"mean": float(np.mean(values)), "std": float(np.std(values)),
                          "n": len(values)}
    summary = {
        "name": cfg["name"],
        "config": cfg,
        "per_seed": per_seed,
        "aggregate": aggregate,
        "any_aborted": any_aborted,
        "output_dir": outdir,
    }
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _svg_polyline_chart(path, series, title, xlabel, ylabel) -> None:
    """Dependency-free SVG line chart; CSV remains the canonical output."""
    width, height, pad = 640, 420, 56
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    xs_all = np.concatenate([np.asarray(xs, dtype=float) for _, xs, _ in series])
    ys_all = np.concatenate([np.asarray(ys, dtype=float) for _, _, ys in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x):
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / y_span * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
             f'<text x="16" y="{height / 2}" font-size="12" transform="rotate(-90 16 {height / 2})" '
             f'text-anchor="middle">{ylabel}</text>',
             f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x_lo:.4g}</text>',
             f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" text-anchor="end">{x_hi:.4g}</text>',
             f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y_lo:.4g}</text>',
             f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y_hi:.4g}</text>']
    for i, (label, xs, ys) in enumerate(series):
        color = palette[i % len(palette)]
        points = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        parts.append(f'<text x="{width - pad - 4}" y="{pad + 14 + 16 * i}" text-anchor="end" '
                     f'font-size="12" fill="{color}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _write_curve_csv(path, xs, ys) -> None:
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in zip(xs, ys):
            fh.write(f"{repr(float(x))},{repr(float(y))}\n")


def compare(run_dirs, quantiles=None, out_dir="comparison", svg: bool = False) -> dict:
    """Pool runs by method and emit CDF/CVaR curves plus a summary table.

    All runs must carry identical dataset signatures; mixing runs trained on
    different data is refused.
    """
    if not run_dirs:
        raise ConfigError("compare needs at least one run directory")
    quantiles = sorted(quantiles if quantiles is not None else
                       [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99])
    runs = [tr.load_run(d) for d in run_dirs]
    signatures = [json.dumps(r.config.get("dataset_signature"), sort_keys=True) for r in runs]
    if any(s == "null" for s in signatures):
        raise ConfigError("run directories lack dataset signatures; re-run training to compare")
    if len(set(signatures)) > 1:
        raise ConfigError(f"dataset signatures differ across runs: {sorted(set(signatures))}")

    groups: dict[str, list] = {}
    for run in runs:
        label = run.config["method"]
        if run.config["method"] in (tr.RFL, tr.CSERM):
            label = f"{label}_alpha{run.config['alpha']}"
        groups.setdefault(label, []).append(run)

    os.makedirs(out_dir, exist_ok=True)
    table = []
    curves: dict[str, dict] = {}
    for label, members in sorted(groups.items()):
        for split in ("train", "test"):
            pools = [getattr(m, f"{split}_losses") for m in members]
            pools = [p for p in pools if p is not None]
            if not pools:
                continue
            pooled = np.concatenate(pools)
            cdf_pts = mt.empirical_cdf(pooled)
            cvar_pts = [(q, mt.cvar(pooled, q)) for q in quantiles]
            _write_curve_csv(os.path.join(out_dir, f"cdf_{label}_{split}.csv"),
                             [p[0] for p in cdf_pts], [p[1] for p in cdf_pts])
            _write_curve_csv(os.path.join(out_dir, f"cvar_{label}_{split}.csv"),
                             [p[0] for p in cvar_pts], [p[1] for p in cvar_pts])
            curves.setdefault(split, {})[label] = {"cdf": cdf_pts, "cvar": cvar_pts}
            means = [float(getattr(m, f"{split}_losses").mean()) for m in members]
            maxes = [float(getattr(m, f"{split}_losses").max()) for m in members]
            accs = [m.trajectory[f"{split}_accuracy"][-1] for m in members
                    if len(m.trajectory["epoch"]) and np.isfinite(m.trajectory[f"{split}_accuracy"][-1:]).all()]
            row = {"method": label, "split": split, "n_runs": len(members),
                   "mean_loss": float(np.mean(means)), "mean_loss_std": float(np.std(means)),
                   "max_loss": float(np.mean(maxes)), "max_loss_std": float(np.std(maxes))}
            if accs:
                row["accuracy"] = float(np.mean(accs))
                row["accuracy_std"] = float(np.std(accs))
            table.append(row)

    with open(os.path.join(out_dir, "table.csv"), "w") as fh:
        cols = ["method", "split", "n_runs", "mean_loss", "mean_loss_std",
                "max_loss", "max_loss_std", "accuracy", "accuracy_std"]
        fh.write(",".join(cols) + "\n")
        for row in table:
            fh.write(",".join(str(row.get(c, "")) for c in cols) + "\n")
    report = {"quantiles": quantiles, "table": table, "out_dir": out_dir,
              "methods": sorted(groups), "n_runs": len(runs)}
    with open(os.path.join(out_dir, "comparison.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if svg:
        for split, by_label in curves.items():
            for kind in ("cdf", "cvar"):
                series = [(label, [p[0] for p in c[kind]], [p[1] for p in c[kind]])
                          for label, c in sorted(by_label.items())]
                _svg_polyline_chart(os.path.join(out_dir, f"{kind}_{split}.svg"), series,
                                    f"{kind.upper()} ({split})",
                                    "loss" if kind == "cdf" else "quantile",
                                    "fraction" if kind == "cdf" else "tail mean loss")
    return report


def verify(suite: str = "all", report_path: str | None = None) -> dict:
    """Run the verification oracles; used as the trust gate for the trainer."""
    if suite not in ("props", "gradients", "all"):
        raise ConfigError("suite must be props, gradients, or all")
    checks = []
    if suite in ("props", "all"):
        checks.append(oracle.check_cserm_identity("all", n_trials=1000, tol=1e-10, seed=0))
        checks.append(oracle.slack_elimination_suite(n_trials=100, n_perturbations=100,
                                                     tol=1e-10, seed=0))
    if suite in ("gradients", "all"):
        checks.append(oracle.gradient_check_report(n_draws=20, tol=1e-5, seed=0))
    report = {"suite": suite, "passed": all(c["passed"] for c in checks), "checks": checks}
    if report_path:
        with open(report_path, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report


def config_templates() -> dict:
    ln9 = 0.10536051565782628  # -ln(0.9): demands 90% true-class probability
    return {
        "two_moons_fl": {
            "name": "two_moons_fl",
            "dataset": {"generator": "two_moons", "n": 1250, "noise": 0.1, "seed": None},
            "split": {"test_fraction": 0.2, "seed": None},
            "model": {"family": "mlp", "layers": [2, 70, 70, 2]},
            "trainer": {"method": "fl", "eta_theta": 5e-4, "eta_lambda": 1e-2,
                        "eps": ln9, "batch_size": 512, "epochs": 250,
                        "primal_optimizer": "adamw"},
            "seeds": [0, 1, 2, 3, 4],
        },
        "two_moons_erm": {
            "name": "two_moons_erm",
            "dataset": {"generator": "two_moons", "n": 1250, "noise": 0.1, "seed": None},
            "split": {"test_fraction": 0.2, "seed": None},
            "model": {"family": "mlp", "layers": [2, 70, 70, 2]},
            "trainer": {"method": "erm", "eta_theta": 5e-4, "batch_size": 512,
                        "epochs": 250, "primal_optimizer": "adamw"},
            "seeds": [0, 1, 2, 3, 4],
        },
        "noisy_cosine_fl": {
            "name": "noisy_cosine_fl",
            "dataset": {"generator": "noisy_cosine", "n": 20, "sigma": 0.2, "seed": None},
            "model": {"family": "poly", "degree": 20, "basis": "chebyshev", "domain": [0.0, 1.0]},
            "trainer": {"method": "fl", "eta_theta": 5e-3, "eta_lambda": 0.5,
                        "eps": 0.2, "epochs": 3000, "primal_optimizer": "sgd"},
            "seeds": [0, 1, 2, 3, 4],
        },
        "noisy_cosine_erm": {
            "name": "noisy_cosine_erm",
            "dataset": {"generator": "noisy_cosine", "n": 20, "sigma": 0.2, "seed": None},
            "model": {"family": "poly", "degree": 20, "basis": "chebyshev", "domain": [0.0, 1.0]},
            "trainer": {"method": "erm", "eta_theta": 0.3, "epochs": 3000,
                        "primal_optimizer": "sgd"},
            "seeds": [0, 1, 2, 3, 4],
        },
        "conflicting_pairs_fl": {
            "name": "conflicting_pairs_fl",
            "dataset": {"generator": "conflicting_pairs", "n_pairs": 8, "d": 2,
                        "label_gap": 2.0, "seed": 0},
            "model": {"family": "linear"},
            "trainer": {"method": "fl", "eta_theta": 1e-4, "eta_lambda": 1e-2,
                        "eps": 0.0, "epochs": 5000, "primal_optimizer": "sgd"},
            "seeds": [0],
        },
        "conflicting_pairs_rfl": {
            "name": "conflicting_pairs_rfl",
            "dataset": {"generator": "conflicting_pairs", "n_pairs": 8, "d": 2,
                        "label_gap": 2.0, "seed": 0},
            "model": {"family": "linear"},
            "trainer": {"method": "rfl", "alpha": 1.0, "eta_theta": 1e-4, "eta_lambda": 1e-2,
                        "eps": 0.0, "epochs": 5000, "primal_optimizer": "sgd"},
            "seeds": [0],
        },
        "outlier_regression_erm": {
            "name": "outlier_regression_erm",
            "dataset": {"generator": "noisy_cosine", "n": 900, "sigma": 0.1, "seed": None,
                        "outliers": {"fraction": 0.05, "offset": 1.2, "placement": "upper_window"}},
            "split": {"test_fraction": 0.333, "seed": None},
            "model": {"family": "poly", "degree": 8, "basis": "chebyshev", "domain": [0.0, 1.0]},
            "trainer": {"method": "erm", "eta_theta": 1e-2, "epochs": 2000,
                        "primal_optimizer": "adamw"},
            "seeds": [0, 1, 2, 3, 4],
        },
        "outlier_regression_rfl": {
            "name": "outlier_regression_rfl",
            "dataset": {"generator": "noisy_cosine", "n": 900, "sigma": 0.1, "seed": None,
                        "outliers": {"fraction": 0.05, "offset": 1.2, "placement": "upper_window"}},
            "split": {"test_fraction": 0.333, "seed": None},
            "model": {"family": "poly", "degree": 8, "basis": "chebyshev", "domain": [0.0, 1.0]},
            "trainer": {"method": "rfl", "alpha": 1.0, "eta_theta": 1e-2, "eta_lambda": 0.1,
                        "eps": 0.02, "epochs": 2000, "primal_optimizer": "adamw"},
            "seeds": [0, 1, 2, 3, 4],
        },
    }


def gen_config(template: str, out_path: str | None = None) -> str:
    templates = config_templates()
    if template not in templates:
        raise ConfigError(f"unknown template {template!r}; available: {sorted(templates)}")
    path = out_path or f"{template}.json"
    with open(path, "w") as fh:
        json.dump(templates[template], fh, indent=2)
        fh.write("\n")
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="feaslearn", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config across its seeds")
    p_run.add_argument("config")
    p_run.add_argument("--output-root", default=None,
                       help=f"prefix for relative output dirs (or ${OUTPUT_ROOT_ENV})")

    p_cmp = sub.add_parser("compare", help="compare persisted runs")
    p_cmp.add_argument("run_dirs", nargs="+")
    p_cmp.add_argument("--quantiles", type=float, nargs="+", default=None)
    p_cmp.add_argument("--out", default="comparison")
    p_cmp.add_argument("--svg", action="store_true", help="also render SVG charts")

    p_ver = sub.add_parser("verify", help="run verification oracles")
    p_ver.add_argument("suite", choices=["props", "gradients", "all"])
    p_ver.add_argument("--report", default=None, help="write the JSON report here")

    p_gen = sub.add_parser("gen-config", help="write a config template")
    p_gen.add_argument("template")
    p_gen.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            summary = run_experiment(args.config, output_root=args.output_root)
            agg = summary["aggregate"]
            print(f"experiment {summary['name']}: {len(summary['per_seed'])} seeds "
                  f"-> {summary['output_dir']}")
            for key in sorted(agg):
                print(f"  {key}: {agg[key]['mean']:.6g} +- {agg[key]['std']:.3g}")
            if summary["any_aborted"]:
                print("at least one run aborted; partial artifacts retained", file=sys.stderr)
                return EXIT_ABORTED
            return EXIT_OK
        if args.command == "compare":
            report = compare(args.run_dirs, quantiles=args.quantiles,
                             out_dir=args.out, svg=args.svg)
            for row in report["table"]:
                acc = f" acc={row['accuracy']:.3f}" if "accuracy" in row else ""
                print(f"{row['method']:24s} {row['split']:5s} mean={row['mean_loss']:.6g} "
                      f"max={row['max_loss']:.6g}{acc}")
            print(f"curves written to {report['out_dir']}")
            return EXIT_OK
        if args.command == "verify":
            report = verify(args.suite, report_path=args.report)
            print(json.dumps(report, indent=2, sort_keys=True, default=str))
            return EXIT_OK if report["passed"] else EXIT_VERIFY
        if args.command == "gen-config":
            path = gen_config(args.template, args.out)
            print(f"wrote {path}")
            return EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
