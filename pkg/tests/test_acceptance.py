"""Acceptance criteria.

Each test records one line in ``RESULTS``; the lines are printed in the
pytest terminal summary (see conftest) and when the module is run directly.
"""

import json
import math
import time

import numpy as np
import pytest

from densridge.cli import main as cli_main
from densridge.experiments import (
    BootstrapPlan,
    Scenario,
    check_lu2,
    generate,
    oracle_ridge,
    rate_check,
    run_coverage,
    trial_seed,
)
from densridge.finder import FinderConfig, find_ridge
from densridge.geometry import subspace_W
from densridge.kde import KdeModel, Sample, silverman_bandwidth
from densridge.metrics import hausdorff, quasi_hausdorff

RESULTS = {}


def record(key, ok, detail):
    RESULTS[key] = f"{key}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(RESULTS[key])
    return ok


# --------------------------------------------------------------------------
# 1. derivative correctness


def _fd_errors(model, x, eps):
    jet = model.jet(x, 3)
    d = x.shape[0]
    g = np.zeros(d)
    H = np.zeros((d, d))
    T = np.zeros((d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = eps
        jp, jm = model.jet(x + e, 2), model.jet(x - e, 2)
        g[k] = (jp.value - jm.value) / (2 * eps)
        H[:, k] = (jp.grad - jm.grad) / (2 * eps)
        T[:, :, k] = (jp.hess - jm.hess) / (2 * eps)

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))

    return rel(jet.grad, g), rel(jet.hess, H), rel(jet.third, T)


def test_c1_derivatives():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(100):
        d = 2 if i < 50 else 3
        n = int(rng.integers(10, 300))
        h = float(rng.uniform(0.2, 1.5))
        pts = rng.normal(size=(n, d)) * rng.uniform(0.5, 2.0, size=d)
        model = KdeModel(Sample(pts), h)
        x = pts[rng.integers(n)] + rng.normal(scale=h, size=d)
        worst = max(worst, *_fd_errors(model, x, 1e-4 * h))
    dt = time.perf_counter() - t0
    ok = record("C1 derivative correctness", worst < 1e-4 and dt < 30, f"max rel err {worst:.2e}, {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 2. frame identities


def _frames_from_benchmarks():
    frames = []
    circle = Scenario.defaults("circle")
    s = generate(circle)
    h = silverman_bandwidth(s)
    frames += [p.frame for p in find_ridge(KdeModel(s, h), FinderConfig(mesh=oracle_ridge(circle, h, 60)))]
    box = Scenario.defaults("box", corner_radius=0.1)
    s = generate(box)
    h = silverman_bandwidth(s)
    frames += [p.frame for p in find_ridge(KdeModel(s, h), FinderConfig(mesh=oracle_ridge(box, h, 50)))][:50]
    aniso = Scenario.defaults("aniso-gaussian", n=2000)
    s = generate(aniso)
    h = silverman_bandwidth(s)
    mesh = oracle_ridge(aniso, h, 40, extent=4.0)
    frames += [p.frame for p in find_ridge(KdeModel(s, h), FinderConfig(mesh=mesh))]
    # a curved filament in three dimensions, where rebasing N is non-trivial
    rng = np.random.default_rng(7)
    t = rng.uniform(-2, 2, size=600)
    pts = np.stack([t, np.sin(t), 0.3 * t**2], axis=1) + 0.1 * rng.normal(size=(600, 3))
    m3 = KdeModel(Sample(pts), 0.3)
    frames += [p.frame for p in find_ridge(m3, FinderConfig(mesh=pts[:80]))][:50]
    return frames


def test_c2_frame_identities():
    t0 = time.perf_counter()
    frames = _frames_from_benchmarks()
    rng = np.random.default_rng(1)
    worst = {"NNt": 0.0, "NtN": 0.0, "eN": 0.0, "W": 0.0}
    for f in frames:
        M, N = f.M, f.N
        P = M @ np.linalg.solve(M.T @ M, M.T)
        worst["NNt"] = max(worst["NNt"], float(np.max(np.abs(N @ N.T - P))))
        worst["NtN"] = max(worst["NtN"], float(np.max(np.abs(N.T @ N - np.eye(N.shape[1])))))
        worst["eN"] = max(worst["eN"], float(np.max(np.abs(f.tangent @ N))))
        k = N.shape[1]
        Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
        lam, V = f.eigen.eigenvalues, f.eigen.eigenvectors
        H = (V * lam) @ V.T
        W2 = subspace_W(N @ Q, H)
        worst["W"] = max(worst["W"], float(np.max(np.abs(W2 - f.W)) / max(1.0, np.max(np.abs(f.W)))))
    dt = time.perf_counter() - t0
    ok = (
        len(frames) >= 200
        and worst["NNt"] < 1e-8
        and worst["NtN"] < 1e-10
        and worst["eN"] < 1e-8
        and worst["W"] < 1e-10
        and dt < 60
    )
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record("C2 frame identities", ok, f"{len(frames)} points; {detail}; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 3. ridge recovery on the anisotropic Gaussian


def test_c3_ridge_recovery():
    t0 = time.perf_counter()
    sc = Scenario.defaults("aniso-gaussian", n=2000)
    dists = []
    for i in range(10):
        s = generate(sc, np.random.default_rng(trial_seed(sc.seed, i)))
        h = silverman_bandwidth(s)
        truth = oracle_ridge(sc, h, 121)
        ridge = find_ridge(KdeModel(s, h), FinderConfig(mesh=truth), frames=False)
        dists.append(hausdorff(ridge, truth))
    dt = time.perf_counter() - t0
    passed = sum(d < 0.25 for d in dists)
    ok = passed >= 9 and dt < 120
    record("C3 ridge recovery", ok,
           f"{passed}/10 runs under 0.25; Haus = {', '.join(f'{d:.3f}' for d in dists)}; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 4. set metrics


def _brute_qh(A, B):
    worst = 0.0
    for b in B:
        best = math.inf
        for a in A:
            dd = 0.0
            for k in range(len(a)):
                dd += (float(b[k]) - float(a[k])) ** 2
            best = min(best, dd)
        worst = max(worst, math.sqrt(best))
    return worst


def test_c4_set_metrics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)

    def rset():
        return rng.uniform(-5, 5, size=(int(rng.integers(1, 31)), 2))

    exact = True
    for _ in range(50):
        A, B = rset(), rset()
        exact &= quasi_hausdorff(A, B) == _brute_qh(A, B)
        exact &= quasi_hausdorff(B, A) == _brute_qh(B, A)
        exact &= hausdorff(A, B) == max(_brute_qh(A, B), _brute_qh(B, A))
    triangle = symmetric = True
    for _ in range(100):
        A, B, C = rset(), rset(), rset()
        triangle &= hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12
        symmetric &= hausdorff(A, B) == hausdorff(B, A)
    dt = time.perf_counter() - t0
    ok = bool(exact and triangle and symmetric and dt < 10)
    record("C4 set-metric oracle", ok, f"exact={exact}, triangle={triangle}, symmetry={symmetric}; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 5. trace formula


def test_c5_trace_formula():
    t0 = time.perf_counter()
    sc = Scenario.defaults("circle", n=2000)
    h = silverman_bandwidth(generate(sc))
    rep = check_lu2(sc, n=2000, h=h, M=50, resolution=60, B=200)
    s = rep.summary()
    dt = time.perf_counter() - t0
    ok = (
        s["median_trace_rel_err_bootstrap"] < 0.25
        and s["median_cosine"] > 0.9
        and s["median_abs_tangent_cosine"] < 0.1
        and dt < 20 * 60
    )
    record(
        "C5 trace formula",
        ok,
        f"h={h:.3f}; bootstrap rel err {s['median_trace_rel_err_bootstrap']:.3f}, "
        f"Monte-Carlo rel err {s['median_trace_rel_err_mc']:.3f}, cosine {s['median_cosine']:.4f}, "
        f"|tangent cos| {s['median_abs_tangent_cosine']:.2e}; {dt:.0f}s",
    )
    assert ok


# --------------------------------------------------------------------------
# 6. coverage


def test_c6_coverage():
    t0 = time.perf_counter()
    sc = Scenario.defaults("circle", n=500)
    rep = run_coverage(sc, alpha=0.1, M=100, plan=BootstrapPlan(B=300, seed=0))
    cov = rep.empirical_coverage
    failed = len(rep.trials) - len(rep.ok_trials)
    dt = time.perf_counter() - t0
    ok = 0.82 <= cov <= 0.98 and failed == 0 and dt < 45 * 60
    record("C6 coverage", ok, f"empirical coverage {cov:.2f} over {len(rep.ok_trials)} trials; {dt:.0f}s")
    assert ok


# --------------------------------------------------------------------------
# 7. rate


def test_c7_rate():
    t0 = time.perf_counter()
    sc = Scenario.defaults("circle")
    h = silverman_bandwidth(generate(Scenario.defaults("circle", n=2000)))
    rep = rate_check(sc, h=h, n_small=2000, n_large=8000, runs=20)
    dt = time.perf_counter() - t0
    ok = 0.35 <= rep.ratio <= 0.7
    pr = rep.pair_ratios
    record("C7 rate sanity", ok,
           f"ratio {rep.ratio:.3f} (pairwise median {np.median(pr):.3f}, range {pr.min():.2f}-{pr.max():.2f}); {dt:.0f}s")
    assert ok


# --------------------------------------------------------------------------
# 8. CLI determinism


def _outputs(d):
    out = {}
    for p in sorted(d.iterdir()):
        text = p.read_text()
        if p.name == "manifest.json":
            m = json.loads(text)
            m.pop("created")
            m.pop("argv")
            text = json.dumps(m, sort_keys=True)
        out[p.name] = text
    return out


def test_c8_cli_determinism(tmp_path):
    data = tmp_path / "circle.csv"
    np.savetxt(data, generate(Scenario.defaults("circle")).points, delimiter=",")
    commands = {
        "ridge": ["ridge", str(data), "{out}", "--silverman"],
        "uncertainty": ["uncertainty", str(data), "{out}", "--B", "10"],
        "confset": ["confset", str(data), "{out}", "--B", "10", "--alpha", "0.1"],
        "confset-stabilized": ["confset", str(data), "{out}", "--B", "10", "--statistic", "stabilized"],
        "simulate": ["simulate", "smoke", "{out}"],
    }
    same = {}
    for name, argv in commands.items():
        runs = []
        for k in range(2):
            out = tmp_path / f"{name}-{k}"
            assert cli_main([a.format(out=out) for a in argv]) == 0
            runs.append(_outputs(out))
        same[name] = runs[0] == runs[1]
    ok = all(same.values())
    record("C8 CLI determinism", ok, ", ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in same.items()))
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
