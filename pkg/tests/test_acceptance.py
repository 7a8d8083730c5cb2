"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""

import itertools
import math
import sys
import time

import numpy as np
import pytest
from scipy.optimize import minimize

from precis.bench import BenchConfig, run_config
from precis.core import sample_covariance, sample_gaussian
from precis.estimators import (
    PmlConfig,
    PmlObjective,
    diag_sb,
    estimate_pml,
    estimate_rml,
    estimate_rv,
    estimate_sml,
    pml_from_sb,
)
from precis.graph import (
    PartialCorrGraph,
    build_graph,
    delta_factors,
    minimum_spanning_forest,
    shortest_path_distances,
    spanning_forest,
)
from precis.models import MODEL_IDS, build_model
from precis.regression import SqrtLassoConfig, sqrt_lasso_all, sqrt_lasso_column, universal_lambda

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # standalone run
    ACCEPTANCE_LINES = []


def report(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def mc_seeds(label: int, R: int):
    return np.random.SeedSequence([20240, label]).spawn(R)


def test_criterion_01_rv_risk():
    t0 = time.perf_counter()
    m = build_model("m1", 5)
    n, R = 100, 2000
    err = np.array([
        estimate_rv(sample_gaussian(m.sigma, n, s), m.b_star, mean=0) - m.phi_star
        for s in mc_seeds(1, R)
    ])
    ratio = (err**2).mean(axis=0) / (2 * m.phi_star**2 / n)
    secs = time.perf_counter() - t0
    ok = bool(np.all(np.abs(ratio - 1) <= 0.10)) and secs < 30
    report(1, ok, f"MSE / (2 phi^2 / n) = {np.round(ratio, 3).tolist()} (tol 10%), {secs:.1f}s")


def test_criterion_02_rml_variance():
    t0 = time.perf_counter()
    m = build_model("m1", 5)
    n, R = 100, 2000
    sb = np.array([
        diag_sb(sample_covariance(sample_gaussian(m.sigma, n, s), mean=0), m.b_star)
        for s in mc_seeds(2, R)
    ])
    target = (np.diag(m.sigma) * m.phi_star + m.phi_star**2) / n
    ratio = sb.var(axis=0, ddof=1) / target
    secs = time.perf_counter() - t0
    ok = bool(np.all(np.abs(ratio - 1) <= 0.10)) and secs < 30
    report(2, ok, f"Var[(S B)_jj] / target = {np.round(ratio, 3).tolist()} (tol 10%), {secs:.1f}s")


def test_criterion_03_sml_risk():
    t0 = time.perf_counter()
    n, R = 100, 2000
    parts, ok = [], True
    for label, (mid, p, k) in enumerate([("m3", 5, 5), ("m6", 12, 6)]):
        m = build_model(mid, p)
        err = np.array([
            estimate_sml(sample_gaussian(m.sigma, n, s), m.b_star, mean=0) - m.phi_star
            for s in mc_seeds(30 + label, R)
        ])
        ratio = (err**2).mean(axis=0) / (2 * m.phi_star**2 / (n * k))
        ok &= bool(np.all(np.abs(ratio - 1) <= 0.15))
        parts.append(f"{mid}: [{ratio.min():.3f}, {ratio.max():.3f}]")
    secs = time.perf_counter() - t0
    ok &= secs < 60
    report(3, ok, f"MSE / (2 phi^2 / (n k)) ranges {'; '.join(parts)} (tol 15%), {secs:.1f}s")


# reference mean and sd, Model 1 oracle scenario, p = 30
M1_ORACLE_REFERENCE = {
    "rv": ([0.263, 0.132, 0.081], [0.034, 0.017, 0.012]),
    "rml": ([0.322, 0.165, 0.104], [0.042, 0.018, 0.013]),
    "sml": ([0.043, 0.024, 0.010], [0.030, 0.018, 0.010]),
    "pml": ([0.079, 0.043, 0.023], [0.025, 0.015, 0.007]),
}


def test_criterion_04_model1_oracle_block():
    t0 = time.perf_counter()
    R = 50
    bad, cells = [], []
    for col, n in enumerate((200, 800, 2000)):
        res = run_config(BenchConfig(model="m1", p=30, n=n, scenario="oracle", replications=R))
        for name, (means, sds) in M1_ORACLE_REFERENCE.items():
            got = res.stats[name].mean
            band = 3 * sds[col] / math.sqrt(R)
            cells.append(f"{name}@{n}={got:.3f}")
            if abs(got - means[col]) > band:
                bad.append(f"{name}@{n}: {got:.3f} vs {means[col]:.3f} +/- {band:.3f}")
    secs = time.perf_counter() - t0
    ok = not bad and secs < 300
    detail = ", ".join(bad) if bad else " ".join(cells)
    report(4, ok, f"{detail} ({secs:.1f}s)")


def test_criterion_05_model2_sqrt_lasso_block():
    t0 = time.perf_counter()
    res = run_config(BenchConfig(model="m2", p=30, n=2000, scenario="sqrt-lasso", replications=50))
    mean = {k: v.mean for k, v in res.stats.items()}
    secs = time.perf_counter() - t0
    ok = (
        abs(mean["rv"] - 0.070) <= 0.2 * 0.070
        and all(mean["rv"] < mean[k] for k in ("rml", "sml", "pml"))
        and secs < 900
    )
    cells = " ".join(f"{k}={v:.3f}" for k, v in mean.items())
    report(5, ok, f"{cells} (RV target 0.070 +/- 20%), {secs:.1f}s")


def test_criterion_06_oracle_risk_ordering():
    parts, ok = [], True
    for mid in ("m1", "m2", "m3"):
        res = run_config(BenchConfig(model=mid, p=30, n=800, scenario="oracle", replications=50))
        e = {k: v.mean for k, v in res.stats.items()}
        good = e["sml"] < e["pml"] < e["rv"] < e["rml"]
        ok &= good
        parts.append(f"{mid}: sml={e['sml']:.4f} pml={e['pml']:.4f} rv={e['rv']:.4f} "
                     f"rml={e['rml']:.4f}{'' if good else ' (out of order)'}")
    report(6, ok, "; ".join(parts))


def test_criterion_07_identity_coincidence():
    worst_pml, exact = 0.0, True
    for seed, (n, p) in enumerate([(50, 4), (200, 10), (1000, 3)]):
        scales = np.random.default_rng(seed).uniform(0.001, 3.0, p)
        X = sample_gaussian(np.diag(scales), n, seed)
        B = np.eye(p)
        rv, rml, sml = estimate_rv(X, B), estimate_rml(X, B), estimate_sml(X, B)
        exact &= np.array_equal(rv, rml) and np.array_equal(rv, sml)
        for kappa in (0.0, 0.4, 10.0):
            pml = estimate_pml(X, B, config=PmlConfig(kappa=kappa))
            worst_pml = max(worst_pml, float(np.max(np.abs(pml - np.clip(rv, n**-0.5, 1.0)))))
    ok = exact and worst_pml <= 1e-4
    report(7, ok, f"RV = RML = SML exactly: {exact}; max |PML - clip| = {worst_pml:.2e} (tol 1e-4)")


def _random_graph(rng):
    p = int(rng.integers(1, 8))
    W = np.zeros((p, p))
    for i, j in itertools.combinations(range(p), 2):
        if rng.random() < 0.55:
            W[i, j] = W[j, i] = int(rng.integers(1, 257)) / 256
    return PartialCorrGraph.from_weights(W)


def _exhaustive_min_forest(g):
    best = None
    edges = g.edges
    for k in range(len(edges) + 1):
        for subset in itertools.combinations(edges, k):
            label = list(range(g.p))
            acyclic = True
            for i, j, _ in subset:
                a, b = label[i], label[j]
                if a == b:
                    acyclic = False
                    break
                label = [a if x == b else x for x in label]
            if not acyclic:
                continue
            # spanning: no edge may join two different labels
            if any(label[i] != label[j] for i, j, _ in edges):
                continue
            w = sum(x for _, _, x in subset)
            best = w if best is None else min(best, w)
    return best


def _floyd_warshall(W):
    D = np.where(W > 0, W, np.inf)
    np.fill_diagonal(D, 0.0)
    for k in range(W.shape[0]):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


def test_criterion_08_graph_oracles():
    rng = np.random.default_rng(808)
    mst_bad = spt_bad = 0
    for _ in range(200):
        g = _random_graph(rng)
        if sum(t.weight(g) for t in minimum_spanning_forest(g)) != _exhaustive_min_forest(g):
            mst_bad += 1
        D = _floyd_warshall(g.weights)
        for root in range(g.p):
            dist, _ = shortest_path_distances(g, root)
            ref = {v: D[root, v] for v in range(g.p) if np.isfinite(D[root, v])}
            if dist != ref:
                spt_bad += 1
    ok = mst_bad == 0 and spt_bad == 0
    report(8, ok, f"200 graphs: MST mismatches {mst_bad}, SPT distance mismatches {spt_bad}")


def test_criterion_09_pml_numerics():
    worst_rel, monotone, worst_clamp = 0.0, True, 0.0
    for k, mid in enumerate(["m1", "m2", "m3", "m4", "m5"]):
        m = build_model(mid, 12)
        n = 200
        X = sample_gaussian(m.sigma, n, 900 + k)
        sb = diag_sb(sample_covariance(X), m.b_star)
        kappa = math.sqrt(math.log(12)) / 3
        obj = PmlObjective(sb, m.b_star, kappa, 0.01)
        rng = np.random.default_rng(k)
        for _ in range(10):
            v = rng.uniform(1.05, math.sqrt(n) - 0.05, 12)
            g = obj.gradient(v)
            h = 1e-6
            fd = np.array([(obj.value(v + h * e) - obj.value(v - h * e)) / (2 * h) for e in np.eye(12)])
            worst_rel = max(worst_rel, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1.0))))
        res = pml_from_sb(sb, m.b_star, n, PmlConfig(kappa=kappa))
        monotone &= all(b <= a for a, b in zip(res.objective_path, res.objective_path[1:]))
        res0 = pml_from_sb(sb, m.b_star, n, PmlConfig(kappa=0.0))
        worst_clamp = max(worst_clamp, float(np.max(np.abs(res0.phi - np.clip(sb, n**-0.5, 1.0)))))
    ok = worst_rel <= 1e-5 and monotone and worst_clamp <= 1e-4
    report(9, ok, f"max FD rel err {worst_rel:.1e} (tol 1e-5), monotone {monotone}, "
                  f"kappa=0 vs clamp {worst_clamp:.1e} (tol 1e-4)")


def _brute_force_objective(X, j, lam):
    others = [k for k in range(X.shape[1]) if k != j]

    def f(z):
        b, c = z[:-1], z[-1]
        return np.linalg.norm(X[:, j] + X[:, others] @ b - c) + lam * np.abs(b).sum()

    best = math.inf
    rng = np.random.default_rng(j)
    starts = [np.zeros(len(others) + 1)] + [rng.normal(0, 1, len(others) + 1) for _ in range(4)]
    for z0 in starts:
        r = minimize(f, z0, method="Nelder-Mead",
                     options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 40000, "maxfev": 40000})
        r = minimize(f, r.x, method="Nelder-Mead",
                     options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 40000, "maxfev": 40000})
        best = min(best, r.fun)
    return best


def _kkt_residual(X, beta, j, lam):
    Xc = X - X.mean(axis=0)
    r = Xc @ beta
    rn = np.linalg.norm(r)
    worst = 0.0
    for i in range(X.shape[1]):
        if i == j:
            continue
        g = Xc[:, i] @ r / rn
        worst = max(worst, abs(g) - lam if beta[i] == 0 else abs(g + lam * np.sign(beta[i])))
    return worst


def test_criterion_10_sqrt_lasso():
    worst_obj, worst_kkt, worst_scale = 0.0, 0.0, 0.0
    lam = universal_lambda(3)
    for k in range(20):
        rng = np.random.default_rng(1000 + k)
        X = rng.standard_normal((40, 3)) @ (np.eye(3) + 0.5 * rng.standard_normal((3, 3)))
        for j in range(3):
            fit = sqrt_lasso_column(X, j)
            ref = _brute_force_objective(X, j, lam)
            worst_obj = max(worst_obj, (fit.objective - ref) / ref)
            worst_kkt = max(worst_kkt, _kkt_residual(X, fit.beta, j, lam))
        worst_scale = max(worst_scale, float(np.max(np.abs(sqrt_lasso_all(3 * X) - sqrt_lasso_all(X)))))
    ok = worst_obj <= 1e-4 and worst_kkt <= 1e-6 and worst_scale <= 1e-6
    report(10, ok, f"objective excess over oracle {worst_obj:.1e} (tol 1e-4), KKT {worst_kkt:.1e} "
                   f"(tol 1e-6), max |B(3X) - B(X)| {worst_scale:.1e} (tol 1e-6)")


def test_criterion_11_model_invariants():
    worst = {"diag": 0.0, "sym": 0.0, "delta": 0.0}
    pd = True
    count = 0
    for mid in MODEL_IDS:
        for p in (6, 12, 30, 60, 90):
            if mid == "m6" and p % 6:
                continue
            count += 1
            m = build_model(mid, p)
            pd &= bool(np.linalg.eigvalsh(m.omega).min() > 0)
            worst["diag"] = max(worst["diag"], float(np.max(np.abs(np.diag(np.linalg.inv(m.omega)) - 1))))
            om = m.b_star / m.phi_star[None, :]
            worst["sym"] = max(worst["sym"], float(np.max(np.abs(om - om.T))))
            g = build_graph(m.b_star, 0.01)
            for mode in ("mst", "spt", "spt-best-root"):
                for tree in spanning_forest(g, mode):
                    d = delta_factors(tree, m.b_star)
                    for i in tree.nodes:
                        target = m.phi_star[i] / m.phi_star[tree.root]
                        worst["delta"] = max(worst["delta"], abs(d[i] - target) / target)
    ok = pd and worst["diag"] <= 1e-9 and worst["sym"] <= 1e-10 and worst["delta"] <= 1e-9
    report(11, ok, f"{count} models, PD {pd}, diag err {worst['diag']:.1e}, "
                   f"symmetry err {worst['sym']:.1e}, delta err {worst['delta']:.1e}")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
