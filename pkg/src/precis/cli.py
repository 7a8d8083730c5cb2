"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 computation failure.
``PRECIS_SEED`` overrides the seed of ``sample-data`` and the base seed of ``bench``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ConfigError, expand_grid, read_grid_spec, run_grid
from .core import as_data_matrix, read_matrix_csv, sample_gaussian, write_matrix_csv
from .estimators import ESTIMATORS, PmlConfig, assemble_precision, estimate, estimate_pml
from .models import MODEL_IDS, PrecisionModel, build_model
from .regression import SqrtLassoConfig, ols_refit, sqrt_lasso_all
from .serialize import read_regression_matrix, read_vector, write_matrix, write_regression_matrix, write_vector


class UsageError(Exception):
    pass


class _HelpFormatter(argparse.HelpFormatter):
    """Append the default to help text unless it is None or False."""

    def _get_help_string(self, action):
        text = action.help or ""
        if action.default not in (None, False, argparse.SUPPRESS) and "%(default)" not in text:
            text += " (default: %(default)s)"
        return text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _env_seed(default):
    value = os.environ.get("PRECIS_SEED")
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"PRECIS_SEED must be an integer, got {value!r}") from None


def _load_model(args) -> PrecisionModel:
    if args.model.endswith(".json"):
        return PrecisionModel.from_json(args.model)
    if args.p is None:
        raise UsageError("--p is required with a model id")
    return build_model(args.model, args.p)


def _fit_b(X, scenario, lam, model_path=None):
    if scenario == "oracle":
        if not model_path:
            raise UsageError("--scenario oracle needs --model MODEL.json")
        model = PrecisionModel.from_json(model_path)
        if model.p != X.shape[1]:
            raise UsageError(f"model has p={model.p}, data has p={X.shape[1]}")
        return model.b_star
    B = sqrt_lasso_all(X, SqrtLassoConfig(lam=lam))
    if scenario == "sqrt-lasso-ols":
        B = ols_refit(X, B)
    return B


def cmd_generate_model(args):
    model = build_model(args.model, args.p)
    model.to_json(args.out)
    print(f"wrote {args.out}: model {model.model_id}, p={model.p}, {len(model.edges())} edges")


def cmd_sample_data(args):
    model = _load_model(args)
    seed = _env_seed(args.seed)
    X = sample_gaussian(model.sigma, args.n, np.random.SeedSequence(seed))
    write_matrix_csv(args.out, X)
    print(f"wrote {args.out}: n={args.n}, p={model.p}, seed={seed}")


def cmd_fit_b(args):
    X = as_data_matrix(read_matrix_csv(args.data))
    B = _fit_b(X, args.scenario, args.lam, args.model)
    write_regression_matrix(args.out, B)
    print(f"wrote {args.out}: p={B.shape[0]}, {int(np.count_nonzero(B) - B.shape[0])} off-diagonal nonzeros")


def cmd_estimate(args):
    X = as_data_matrix(read_matrix_csv(args.data))
    if args.bhat:
        B = read_regression_matrix(args.bhat)
    else:
        B = _fit_b(X, args.scenario, args.lam, args.model)
    if B.shape[0] != X.shape[1]:
        raise UsageError(f"B is {B.shape[0]}x{B.shape[0]}, data has p={X.shape[1]}")
    mean = 0.0 if args.mean == "known" else None
    if args.estimator == "pml":
        cfg = PmlConfig(kappa=args.kappa, t=args.t, max_iter=args.max_iter)
        phi, info = estimate_pml(X, B, mean, cfg, return_info=True)
        if not info.converged:
            print(f"warning: PML stopped after {info.n_iter} iterations, |grad| = {info.grad_norm:.3g}",
                  file=sys.stderr)
    else:
        phi = estimate(args.estimator, X, B, mean, tree_mode=args.tree, t=args.t)
    write_vector(args.out, phi)
    if args.omega:
        write_matrix(args.omega, assemble_precision(B, phi))
    print(" ".join(f"{x:.6g}" for x in read_vector(args.out)))


def cmd_assemble_omega(args):
    B = read_regression_matrix(args.bhat)
    phi = read_vector(args.phi)
    write_matrix(args.out, assemble_precision(B, phi))
    print(f"wrote {args.out}")


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    preset = resources.files("precis") / "presets" / (path.stem + ".json")
    if preset.is_file():
        return Path(str(preset))
    raise UsageError(f"config {name!r} not found (presets: {', '.join(list_presets())})")


def list_presets() -> list[str]:
    folder = resources.files("precis") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def cmd_bench(args):
    path = _resolve_config(args.config)
    try:
        spec = read_grid_spec(path)
        if isinstance(spec, dict):
            if "PRECIS_SEED" in os.environ:
                spec["base_seed"] = _env_seed(0)
            if args.replications is not None:
                spec["replications"] = args.replications
        configs = expand_grid(spec)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if args.dry_run:
        for cfg in configs:
            print(f"{cfg.model} p={cfg.p} n={cfg.n} {cfg.scenario} "
                  f"estimators={','.join(cfg.estimators)} R={cfg.replications} seed={cfg.base_seed}")
        print(f"{len(configs)} configurations")
        return 0

    def progress(k, cfg):
        print(f"[{k + 1}/{len(configs)}] {cfg.model} p={cfg.p} n={cfg.n} {cfg.scenario}",
              file=sys.stderr)

    results, text, table_csv = run_grid(configs, workers=args.threads, progress=progress)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.json").write_text(json.dumps([r.to_dict() for r in results], indent=1))
    (out / "table.csv").write_text(table_csv)
    (out / "table.txt").write_text(text)
    sys.stdout.write((out / "table.txt").read_text())
    failed = [r for r in results if r.hard_failed]
    for r in results:
        for flag in r.flags:
            print(f"note: {r.config['model']} p={r.config['p']} n={r.config['n']} "
                  f"{r.config['scenario']}: {flag}", file=sys.stderr)
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="precis", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = _HelpFormatter

    p = sub.add_parser("generate-model", help="write a ground-truth precision model as JSON",
                       formatter_class=fmt)
    p.add_argument("--model", required=True, choices=MODEL_IDS)
    p.add_argument("--p", type=int, required=True, help="dimension (multiple of 6 for m6)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_model)

    p = sub.add_parser("sample-data", help="draw n Gaussian rows from a model", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model id or a model JSON file")
    p.add_argument("--p", type=int, help="dimension when --model is an id")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0, help="overridden by PRECIS_SEED")
    p.add_argument("--out", required=True, help="headerless CSV, one row per sample")
    p.set_defaults(func=cmd_sample_data)

    def add_b_source(p, required_scenario):
        p.add_argument("--scenario", choices=["sqrt-lasso", "sqrt-lasso-ols", "oracle"],
                       default="sqrt-lasso" if required_scenario else None,
                       help="how to obtain B (oracle reads B* from --model)")
        p.add_argument("--model", help="model JSON, needed for --scenario oracle")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="square-root Lasso penalty; default sqrt(2 log p), the universal choice")

    p = sub.add_parser("fit-b", help="estimate the regression matrix B", formatter_class=fmt)
    p.add_argument("--data", required=True)
    add_b_source(p, True)
    p.add_argument("--out", required=True, help=".csv (dense) or .json (sparse triplets)")
    p.set_defaults(func=cmd_fit_b)

    p = sub.add_parser("estimate", help="estimate phi (and optionally omega)", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--bhat", help="B matrix file; otherwise B is fitted per --scenario")
    add_b_source(p, True)
    p.add_argument("--estimator", required=True, choices=ESTIMATORS)
    p.add_argument("--mean", choices=["sample", "known"], default="sample",
                   help="center by the sample mean, or by the known zero mean")
    p.add_argument("--tree", choices=["mst", "spt", "spt-best-root"], default="mst",
                   help="SML spanning tree; minimum spanning tree works best in practice")
    p.add_argument("--t", type=float, default=None,
                   help="edge threshold on B_ij B_ji; default min(0.01, n^-1/2)")
    p.add_argument("--kappa", type=float, default=None,
                   help="PML penalty weight; default sqrt(log p) / 3")
    p.add_argument("--max-iter", type=int, default=5000, help="PML iteration cap")
    p.add_argument("--out", required=True, help="phi as .csv or .json")
    p.add_argument("--omega", help="also write omega = B diag(1/phi) here")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("assemble-omega", help="omega = B diag(1/phi)", formatter_class=fmt)
    p.add_argument("--bhat", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble_omega)

    p = sub.add_parser("bench", help="run a Monte Carlo benchmark grid", formatter_class=fmt)
    p.add_argument("--config", required=True, help="grid JSON file or preset name (table1..table6)")
    p.add_argument("--out-dir", default="bench-out")
    p.add_argument("--replications", type=int, default=None, help="override R from the config")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--dry-run", action="store_true", help="print the planned grid and exit")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except (UsageError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # invalid inputs detected by the library (shapes, model constraints)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
