"""Monte Carlo risk benchmark over (model, p, n, scenario, estimator) grids.

The risk of an estimator is reported as the mean over replications of the
l2 error ``||phi_star - phi_hat||_2`` together with its standard deviation
(divisor R - 1).

Datasets depend only on ``(base_seed, model, p, n, replication)``, so every
estimator and every scenario of a grid sees the same samples.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import sample_covariance, sample_gaussian, standardize
from .estimators import ESTIMATORS, PmlConfig, diag_sb, pml_from_sb, sml_from_sb
from .graph import default_threshold
from .models import MODEL_IDS, build_model
from .regression import SqrtLassoConfig, ols_refit, sqrt_lasso_all

SCENARIOS = ("sqrt-lasso", "sqrt-lasso-ols", "oracle")
SCENARIO_TITLES = {
    "sqrt-lasso": "B estimated by square-root Lasso",
    "sqrt-lasso-ols": "B estimated by square-root Lasso followed by OLS",
    "oracle": "B known exactly",
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["models", "p", "n", "scenarios"],
    "properties": {
        "name": {"type": "string"},
        "models": {"type": "array", "minItems": 1, "items": {"enum": list(MODEL_IDS)}},
        "p": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 3}},
        "n": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
        "scenarios": {"type": "array", "minItems": 1, "items": {"enum": list(SCENARIOS)}},
        "estimators": {"type": "array", "minItems": 1, "items": {"enum": list(ESTIMATORS)}},
        "replications": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0},
        "lambda": {"type": ["number", "null"], "minimum": 0},
        "kappa": {"type": ["number", "null"], "minimum": 0},
        "t": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "tree_mode": {"enum": ["mst", "spt", "spt-best-root"]},
        "mean": {"enum": ["sample", "known"]},
        "standardize": {"type": "boolean"},
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BenchConfig:
    model: str
    p: int
    n: int
    scenario: str = "oracle"
    estimators: tuple = ESTIMATORS
    replications: int = 50
    base_seed: int = 0
    lam: float | None = None
    kappa: float | None = None
    t: float | None = None
    tree_mode: str = "mst"
    mean: str = "sample"
    standardize: bool = False

    def __post_init__(self):
        if self.model not in MODEL_IDS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ConfigError(f"unknown estimators {bad}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.model == "m6" and self.p % 6:
            raise ConfigError(f"p must be a multiple of 6 for model m6, got {self.p}")
        if self.mean not in ("sample", "known"):
            raise ConfigError("mean must be 'sample' or 'known'")
        object.__setattr__(self, "estimators", tuple(self.estimators))

    def threshold(self) -> float:
        return default_threshold(self.n) if self.t is None else self.t

    def seed(self, r: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            [self.base_seed, MODEL_IDS.index(self.model), self.p, self.n, r]
        )


@dataclass
class EstimatorStats:
    mean: float
    sd: float
    errors: list
    failures: int = 0
    seconds: float = 0.0


@dataclass
class BenchResult:
    config: dict
    stats: dict
    seconds: float
    version: str = __version__
    flags: list = field(default_factory=list)

    @property
    def hard_failed(self) -> bool:
        return any(len(s.errors) == 0 for s in self.stats.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "stats": {k: asdict(v) for k, v in self.stats.items()},
            "seconds": self.seconds,
            "version": self.version,
            "flags": self.flags,
        }


def estimate_b(X, cfg: BenchConfig, model):
    if cfg.scenario == "oracle":
        return model.b_star
    B = sqrt_lasso_all(X, SqrtLassoConfig(lam=cfg.lam))
    if cfg.scenario == "sqrt-lasso-ols":
        B = ols_refit(X, B)
    return B


def run_replication(cfg: BenchConfig, r: int, model=None) -> dict:
    """One dataset: returns {estimator: (error or None, seconds, message)}."""
    model = model or build_model(cfg.model, cfg.p)
    X = sample_gaussian(model.sigma, cfg.n, cfg.seed(r))
    if cfg.standardize:
        X = standardize(X)
    try:
        B = estimate_b(X, cfg, model)
    except Exception as exc:
        msg = f"B estimation failed: {type(exc).__name__}: {exc}"
        return {name: (None, 0.0, msg) for name in cfg.estimators}
    mean = 0.0 if cfg.mean == "known" else None
    S = sample_covariance(X, mean)
    sb = diag_sb(S, B)
    out = {}
    for name in cfg.estimators:
        t0 = time.perf_counter()
        try:
            if name == "rv":
                phi = np.maximum(np.einsum("kj,kl,lj->j", B, S, B), 0.0)
            elif name == "rml":
                phi = np.maximum(sb, 0.0)
            elif name == "sml":
                phi, _ = sml_from_sb(sb, B, cfg.threshold(), cfg.tree_mode)
            else:
                pml_cfg = PmlConfig(kappa=cfg.kappa, t=cfg.threshold())
                phi = pml_from_sb(sb, B, cfg.n, pml_cfg).phi
            err, msg = float(np.linalg.norm(model.phi_star - phi)), ""
        except Exception as exc:  # recorded and excluded, never fatal
            err, msg = None, f"{type(exc).__name__}: {exc}"
        out[name] = (err, time.perf_counter() - t0, msg)
    return out


def _run_chunk(args):
    cfg, reps = args
    model = build_model(cfg.model, cfg.p)
    return [(r, run_replication(cfg, r, model)) for r in reps]


def run_config(cfg: BenchConfig, workers: int = 1) -> BenchResult:
    t0 = time.perf_counter()
    reps = list(range(cfg.replications))
    if workers > 1:
        chunks = [(cfg, reps[k::workers]) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for part in pool.map(_run_chunk, chunks) for row in part]
        rows.sort(key=lambda x: x[0])
    else:
        rows = _run_chunk((cfg, reps))

    stats, flags = {}, []
    for name in cfg.estimators:
        errs = [rep[name][0] for _, rep in rows if rep[name][0] is not None]
        fails = [rep[name][2] for _, rep in rows if rep[name][0] is None]
        secs = sum(rep[name][1] for _, rep in rows)
        if fails:
            flags.append(f"{name}: {len(fails)} replication(s) excluded ({fails[0]})")
        if len(errs) == 1:
            flags.append(f"{name}: single replication, sd reported as 0")
        mean = float(np.mean(errs)) if errs else math.nan
        sd = float(np.std(errs, ddof=1)) if len(errs) > 1 else 0.0
        stats[name] = EstimatorStats(mean, sd, errs, len(fails), secs)
    config = asdict(cfg)
    config["estimators"] = list(cfg.estimators)
    config["t_used"] = cfg.threshold()
    config["b_estimation"] = "centered, not rescaled" if cfg.scenario != "oracle" else "exact"
    return BenchResult(config, stats, time.perf_counter() - t0, flags=flags)


def expand_grid(spec: dict) -> list[BenchConfig]:
    """Validate a JSON grid description and expand it into configs.

    Order: model, scenario, p, n (the layout of the printed tables).
    """
    import jsonschema

    try:
        jsonschema.validate(spec, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {exc.message}") from None
    common = dict(
        estimators=tuple(spec.get("estimators", ESTIMATORS)),
        replications=spec.get("replications", 50),
        base_seed=spec.get("base_seed", 0),
        lam=spec.get("lambda"),
        kappa=spec.get("kappa"),
        t=spec.get("t"),
        tree_mode=spec.get("tree_mode", "mst"),
        mean=spec.get("mean", "sample"),
        standardize=spec.get("standardize", False),
    )
    return [
        BenchConfig(model=m, p=p, n=n, scenario=s, **common)
        for m in spec["models"]
        for s in spec["scenarios"]
        for p in spec["p"]
        for n in spec["n"]
    ]


def read_grid_spec(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_grid(path) -> list[BenchConfig]:
    return expand_grid(read_grid_spec(path))


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.3f}"


def _fmt_sd(x: float) -> str:
    s = f"{x:.3f}"
    return "(" + (s[1:] if s.startswith("0.") else s) + ")"


def format_text_table(results: list[BenchResult]) -> str:
    """Aligned text tables, one per model: rows are (scenario, estimator), columns (p, n)."""
    blocks = []
    for model in dict.fromkeys(r.config["model"] for r in results):
        res = [r for r in results if r.config["model"] == model]
        cols = list(dict.fromkeys((r.config["p"], r.config["n"]) for r in res))
        width = 9
        lines = [f"Model {model}"]
        lines.append("p".ljust(6) + "".join(str(p).rjust(width) for p, _ in cols))
        lines.append("n".ljust(6) + "".join(str(n).rjust(width) for _, n in cols))
        for scen in dict.fromkeys(r.config["scenario"] for r in res):
            lines.append(f"-- {SCENARIO_TITLES[scen]}")
            cell = {(r.config["p"], r.config["n"]): r for r in res if r.config["scenario"] == scen}
            names = list(dict.fromkeys(e for r in cell.values() for e in r.config["estimators"]))
            for name in names:
                means, sds = [], []
                for c in cols:
                    st = cell[c].stats.get(name) if c in cell else None
                    means.append(_fmt(st.mean) if st else "")
                    sds.append(_fmt_sd(st.sd) if st else "")
                lines.append(name.upper().ljust(6) + "".join(m.rjust(width) for m in means))
                lines.append("".ljust(6) + "".join(s.rjust(width) for s in sds))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def format_csv_table(results: list[BenchResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "scenario", "estimator", "p", "n", "mean", "sd", "replications", "failures"])
    for r in results:
        for name, st in r.stats.items():
            w.writerow([
                r.config["model"], r.config["scenario"], name, r.config["p"], r.config["n"],
                _fmt(st.mean), f"{st.sd:.3f}", len(st.errors) + st.failures, st.failures,
            ])
    return buf.getvalue()


def run_grid(configs: list[BenchConfig], workers: int = 1, progress=None):
    """Run every config in order. Returns (results, text_table, csv_table)."""
    if not configs:
        raise ConfigError("empty grid")
    results = []
    for k, cfg in enumerate(configs):
        if progress:
            progress(k, cfg)
        results.append(run_config(cfg, workers=workers))
    return results, format_text_table(results), format_csv_table(results)
