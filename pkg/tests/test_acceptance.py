"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from sdla.analysis import audit_recursion, estimate_lipschitz, nse, nse_series, pds_integrate, solve_ne
from sdla.channel import ChannelDistribution, NetworkConfig, gradient, sample_realization, tau
from sdla.experiments import Arm, ExperimentSpec, fluctuation, preset, run
from sdla.learners import NoiseModel, StepSchedule, run_sdla
from sdla.projection import project_profile, project_user
from sdla.rng import stream
from sdla.scenario import scenario_preset

from conftest import ACCEPTANCE_LINES
from oracles import fd_gradient, kkt_residual, qp_projection

pytestmark = [pytest.mark.acceptance, pytest.mark.filterwarnings("ignore::UserWarning")]

SEEDS_20 = tuple(range(20))


def report(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def weak_oracle():
    scn = scenario_preset("weak")
    return scn, solve_ne(scn.cfg, scn.dist, "saa", n_samples=2000, rng=stream(0, "oracle"))


def test_01_projection_oracle_equivalence():
    rng = np.random.default_rng(20240101)
    instances = []
    for _ in range(1000):
        K = int(rng.integers(2, 9))
        p_max = float(rng.uniform(0.5, 50.0))
        mask = rng.uniform(p_max / K * 1.05, p_max, K)
        q = rng.uniform(-2 * p_max, 2 * p_max, K)
        instances.append((q, mask, p_max))
    t0 = time.perf_counter()
    results = [project_user(q, m, c) for q, m, c in instances]
    elapsed = time.perf_counter() - t0
    err = max(float(np.max(np.abs(r.point - qp_projection(q, m, c))))
              for r, (q, m, c) in zip(results, instances))
    kkt = max(kkt_residual(q, m, c, r.point, r.multiplier) for r, (q, m, c) in zip(results, instances))
    ok = err <= 1e-8 and kkt <= 1e-9 and elapsed < 5.0
    report(1, ok, f"1000 instances: max |p - p_QP| = {err:.2e} (<= 1e-8), "
                  f"KKT residual {kkt:.2e} (<= 1e-9), {elapsed:.2f} s (< 5 s)")


def test_02_gradient_finite_differences():
    scn = scenario_preset("strong")
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        g = sample_realization(scn.dist, rng)
        p = project_profile(rng.random(scn.cfg.shape) * scn.cfg.effective_mask, scn.cfg)
        p = 0.05 * scn.cfg.effective_mask + 0.9 * p  # strictly interior
        p *= np.minimum(1.0, 0.99 * scn.cfg.p_max / p.sum(axis=1))[:, None]
        s = gradient(g, p, scn.cfg.noise)
        for j in range(scn.cfg.n_users):
            fd = fd_gradient(g, p, scn.cfg.noise, j, h=1e-4)
            worst = max(worst, float(np.max(np.abs(fd - s[j]) / np.abs(s[j]))))
    report(2, worst <= 1e-6, f"100 interior points, worst relative error {worst:.2e} (<= 1e-6)")


def test_03_strong_monotonicity():
    cfg = NetworkConfig.build(2, 1, 1.0, 1.0)
    dist = ChannelDistribution.from_shorthand(2, 1, 1.0, 0.1, 0.0)
    g = dist.mean_gains
    t = tau(g, cfg)
    p_star = solve_ne(cfg, dist, "mean", tol=1e-14).p_star
    rng = np.random.default_rng(3)
    violations, worst = 0, np.inf
    for _ in range(1000):
        p = rng.random(cfg.shape) * cfg.effective_mask
        lhs = float(np.sum(gradient(g, p, cfg.noise) * (p_star - p)))
        margin = lhs - t * float(np.sum((p - p_star) ** 2))
        worst = min(worst, margin)
        violations += margin < -1e-7
    ok = violations == 0 and abs(t - 0.17914) < 1e-5
    report(3, ok, f"tau = {t:.5f}, {violations} violations in 1000 points (worst margin {worst:.2e})")


def test_04_sdla1_convergence():
    t0 = time.perf_counter()
    scn, sol = weak_oracle()
    finals = []
    for seed in SEEDS_20:
        r = run_sdla(scn.cfg, scn.dist, scn.cfg.uniform_profile(), 5000,
                     StepSchedule("harmonic", 0.5), seed=seed)
        finals.append(nse(r.p[-1], sol.p_star))
    elapsed = time.perf_counter() - t0
    med = float(np.median(finals))
    ok = tau(scn.dist.mean_gains, scn.cfg) > 0 and med <= 0.05 and elapsed < 30
    report(4, ok, f"weak scenario, harmonic 0.5/(n+1): median NSE(5000) = {med:.4f} (<= 0.05) "
                  f"over 20 seeds, {elapsed:.1f} s (< 30 s)")


def test_05_averaging_improves():
    scn, _ = weak_oracle()
    const = StepSchedule("constant", 0.5)
    spec = ExperimentSpec(name="c5", scenario=scn, iterations=1000, seeds=SEEDS_20,
                          arms=(Arm("sdla1", "sdla1", const), Arm("mixed", "sdla-mixed", const, switch_at=100)))
    res = run(spec, diagnostics=False)
    p_star = res.oracles["0.2"].p_star
    raw = [nse(r.p[-1], p_star) for r in res.logs if r.meta["label"] == "sdla1"]
    avg = [nse(r.p_avg[-1], p_star) for r in res.logs if r.meta["label"] == "mixed"]
    m_raw, m_avg = float(np.median(raw)), float(np.median(avg))
    report(5, m_avg < m_raw, f"median NSE(1000): averaged {m_avg:.4f} < raw SDLA-I {m_raw:.4f}")


def test_06_step_size_tradeoff():
    spec = preset("fig2", seeds=range(5))
    res = run(spec, diagnostics=False)
    p_star = res.oracles["0.2"].p_star
    curves = {}
    for r in res.logs:
        curves.setdefault(r.meta["label"], []).append(nse_series(r.p, p_star))
    final = {k: float(np.median([c[-1] for c in v])) for k, v in curves.items()}
    var = {k: float(np.median([np.var(c[-500:]) for c in v])) for k, v in curves.items()}
    ok = final["sdla1-harmonic"] < final["sdla1-c0.01"] and var["sdla1-c0.5"] > var["sdla1-harmonic"]
    report(6, ok, f"NSE(2000) harmonic {final['sdla1-harmonic']:.2e} < constant 0.01 "
                  f"{final['sdla1-c0.01']:.2e}; last-500 NSE variance constant 0.5 "
                  f"{var['sdla1-c0.5']:.2e} > harmonic {var['sdla1-harmonic']:.2e} (medians, 5 seeds)")


def test_07_iwfa_fluctuates_more():
    spec = preset("fig1", seeds=SEEDS_20)
    spec = ExperimentSpec(**{**spec.__dict__, "arms": tuple(a for a in spec.arms if a.label != "sdla1")})
    res = run(spec, diagnostics=False)
    fl = {}
    for r in res.logs:
        fl.setdefault(r.meta["label"], []).append(fluctuation(r))
    iw, sd = float(np.median(fl["iwfa"])), float(np.median(fl["sdla1-harmonic"]))
    ratio = iw / sd if sd > 0 else np.inf
    report(7, ratio >= 5, f"median var(p_1^1, last 200): IWFA {iw:.3e}, SDLA-I harmonic {sd:.3e}, "
                          f"ratio {ratio:.3g} (>= 5)")


def test_08_pds_exponential_bound():
    scn = scenario_preset("weak")
    dist = scn.dist.with_perturbation(0.0)
    lip = estimate_lipschitz(dist, scn.cfg, 200, 1, stream(0, "pairs"))
    h = 0.01 / lip
    p0 = scn.cfg.uniform_profile()
    coarse = pds_integrate(scn.cfg, dist, p0, 10.0, h=h, n_samples=1)
    fine = pds_integrate(scn.cfg, dist, p0, 10.0, h=h / 2, n_samples=1, p_star=coarse.p_star)
    s1, s2 = coarse.bound_slack, fine.bound_slack
    # same grid times: every second fine step
    n = min(len(coarse.distance), (len(fine.distance) + 1) // 2)
    disc = float(np.max(np.abs(coarse.distance[:n] - fine.distance[::2][:n]))) / coarse.distance[0]
    ok = (coarse.tau_hat > 0 and s1 is not None and s2 is not None
          and s1 <= 0.1 and s2 <= 0.1 and s2 <= s1 + 1e-12 and disc < 0.01)
    report(8, ok, f"tau_hat {coarse.tau_hat:.4f}, h = {h:.3g}: slack {s1:.2e}, h/2: slack {s2:.2e} "
                  f"(<= 0.1, nonincreasing); h vs h/2 trajectory gap {disc:.1e}")


def test_09_recursion_audit():
    scn, sol = weak_oracle()
    sched = StepSchedule("harmonic", 0.5)
    noises = {"noise-free": NoiseModel(), "theta 0.01": NoiseModel("theta", sigma=0.01),
              "epsilon 0.5/(n+1)": NoiseModel("epsilon", bias_scale=0.5, bias_decay=1.0)}
    counts = {}
    for name, noise in noises.items():
        r = run_sdla(scn.cfg, scn.dist, scn.cfg.uniform_profile(), 1000, sched, noise, seed=0)
        counts[name] = audit_recursion(r, sol.p_star).violations
    report(9, sum(counts.values()) == 0,
           "violations over 1000 steps: " + ", ".join(f"{k} {v}" for k, v in counts.items()))


def test_10_determinism():
    scn = scenario_preset("weak")
    const = StepSchedule("constant", 0.5)
    arms = (Arm("sdla1", "sdla1", StepSchedule("harmonic", 0.5)), Arm("sdla2", "sdla2", const),
            Arm("mixed", "sdla-mixed", const, switch_at=100), Arm("iwfa", "iwfa"))
    spec = ExperimentSpec(name="c10", scenario=scn, arms=arms, iterations=300, seeds=(0, 1),
                          noise=NoiseModel("theta", sigma=0.01))
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        run(spec, out=a)
        run(spec, out=b)
        files = sorted(p.name for p in Path(a).iterdir())
        same = [Path(a, f).read_bytes() == Path(b, f).read_bytes() for f in files]
    report(10, all(same) and len(files) > 8,
           f"{sum(same)}/{len(files)} output files byte-identical across reruns")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    raise SystemExit(1 if failed else 0)
