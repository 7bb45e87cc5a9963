import numpy as np
import pytest

from sdla.analysis import (
    AuditError,
    OracleError,
    audit_recursion,
    check_gamma_pd,
    diagnose,
    draw_pool,
    estimate_lipschitz,
    mean_gradient,
    nse,
    pds_integrate,
    saa_best_response,
    solve_ne,
)
from sdla.channel import ChannelDistribution, NetworkConfig
from sdla.learners import NoiseModel, StepSchedule, run_sdla, water_fill
from sdla.projection import project_profile

from oracles import water_fill_bisect


# ------------------------------------------------------------ NE oracle


def test_single_user_ne_is_water_filling():
    cfg = NetworkConfig.build(1, 3, [[0.3, 0.6, 0.9]], 1.0)
    dist = ChannelDistribution(np.ones((1, 1, 3)), 0.0)
    ref = water_fill_bisect([0.3, 0.6, 0.9], [1.0] * 3, 1.0)
    for method in ("mean", "saa"):
        sol = solve_ne(cfg, dist, method, tol=1e-12, n_samples=5)
        np.testing.assert_allclose(sol.p_star[0], ref, atol=1e-12)
        assert sol.residual <= 1e-12


def test_symmetric_two_user_ne():
    cfg = NetworkConfig.build(2, 3, 0.5, 2.0)
    g = np.full((2, 2, 3), 0.1)
    for j in range(2):
        g[j, j] = [2.0, 1.0, 0.5]
    dist = ChannelDistribution(g, 0.0)
    sol = solve_ne(cfg, dist, "mean", tol=1e-13)
    np.testing.assert_allclose(sol.p_star[0], sol.p_star[1], atol=1e-11)
    assert cfg.contains(sol.p_star)


def test_mean_and_saa_agree_without_perturbation(weak):
    dist = weak.dist.with_perturbation(0.0)
    a = solve_ne(weak.cfg, dist, "mean", tol=1e-12)
    b = solve_ne(weak.cfg, dist, "saa", tol=1e-12, n_samples=50)
    np.testing.assert_allclose(a.p_star, b.p_star, atol=1e-8)
    assert b.samples_used == 50 and a.method == "mean" and b.method == "saa"


def test_oracle_failure_carries_residual(weak):
    with pytest.raises(OracleError) as info:
        solve_ne(weak.cfg, weak.dist, "saa", tol=1e-15, max_iter=1, n_samples=20)
    assert info.value.residual > 0


def test_unknown_method(weak):
    with pytest.raises(ValueError):
        solve_ne(weak.cfg, weak.dist, "newton")


def test_ne_is_projection_fixed_point(weak, weak_ne):
    """p* = P(p* + s_bar(p*)) on the oracle's pool."""
    from sdla.rng import stream
    pool = draw_pool(weak.dist, 2000, stream(0, "oracle"))
    p = weak_ne.p_star
    np.testing.assert_allclose(project_profile(p + mean_gradient(pool, p, weak.cfg.noise), weak.cfg),
                               p, atol=1e-7)
    assert weak_ne.residual <= 1e-8


def test_pds_stationary_at_mean_channel_ne(weak):
    dist = weak.dist.with_perturbation(0.0)
    p = solve_ne(weak.cfg, dist, "mean", tol=1e-13).p_star
    s = mean_gradient(dist.mean_gains[None], p, weak.cfg.noise)
    assert np.linalg.norm(project_profile(p + 1e-3 * s, weak.cfg) - p) <= 1e-8


def test_saa_best_response_matches_water_filling_on_single_draw(weak, rng):
    g = weak.dist.mean_gains * rng.uniform(0.8, 1.2, weak.dist.mean_gains.shape)
    p = weak.cfg.uniform_profile()
    for j in range(weak.cfg.n_users):
        np.testing.assert_allclose(saa_best_response(g[None], p, j, weak.cfg),
                                   water_fill(g, p, weak.cfg, j)[0], atol=1e-10)


def test_saa_best_response_improves_pool_utility(weak, rng):
    pool = draw_pool(weak.dist, 100, rng)
    p = weak.cfg.uniform_profile()
    br = saa_best_response(pool, p, 0, weak.cfg)

    def utility(x):
        q = p.copy()
        q[0] = x
        total = np.einsum("sjik,ik->sjk", pool, q) + weak.cfg.noise
        own = pool[:, 0, 0, :] * x
        return np.mean(np.log1p(own / (total[:, 0] - own)).sum(axis=1))

    best = utility(br)
    for _ in range(200):
        cand = project_profile(br + rng.normal(0, 0.05, br.shape)[None].repeat(4, 0), weak.cfg)[0]
        assert utility(cand) <= best + 1e-12


# ------------------------------------------------------------ NSE


def test_nse_examples():
    assert nse([[3.0, 4.0]], [[3.0, 4.0]]) == 0.0
    assert nse([[6.0, 8.0]], [[3.0, 4.0]]) == pytest.approx(1.0)
    assert nse([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        nse([[1.0]], [[0.0]])


def test_nse_sign_symmetry(rng):
    for _ in range(50):
        p_star = rng.uniform(0.1, 1, (3, 4))
        d = rng.normal(0, 0.2, (3, 4))
        assert nse(p_star + d, p_star) == pytest.approx(nse(p_star - d, p_star), rel=1e-14)


# ------------------------------------------------------------ coupling checks


def test_gamma_pd_examples(two_user, strong):
    cfg, _ = two_user
    none = ChannelDistribution.from_shorthand(2, 1, 1.0, 0.0, 0.0)
    chk = check_gamma_pd(none, cfg, 5, np.random.default_rng(0))
    assert chk.fraction_pd == 1.0 and chk.min_eig == pytest.approx(1.0)
    chk = check_gamma_pd(two_user[1], cfg, 5, np.random.default_rng(0))
    assert chk.fraction_pd == 1.0 and chk.min_eig == pytest.approx(0.79)
    chk = check_gamma_pd(strong.dist, strong.cfg, 20, np.random.default_rng(0))
    assert chk.fraction_pd == 0.0


def test_weak_preset_is_positive_definite(weak):
    chk = check_gamma_pd(weak.dist, weak.cfg, 500, np.random.default_rng(3))
    assert chk.fraction_pd == 1.0 and chk.min_eig > 0.5


# ------------------------------------------------------------ Lipschitz estimate


def test_lipschitz_single_user_calculus():
    cfg = NetworkConfig.build(1, 1, 1.0, 40.0)
    dist = ChannelDistribution(np.ones((1, 1, 1)), 0.0)
    lip = estimate_lipschitz(dist, cfg, 500, 1, np.random.default_rng(0))
    # |d/dp 1/(1+p)| <= 1 with the supremum at p = 0
    assert 0.9 <= lip <= 1.0


def test_lipschitz_deterministic_and_nested(weak):
    dist = weak.dist.with_perturbation(0.0)
    a = estimate_lipschitz(dist, weak.cfg, 50, 1, np.random.default_rng(4))
    b = estimate_lipschitz(dist, weak.cfg, 50, 1, np.random.default_rng(4))
    assert a == b
    vals = [estimate_lipschitz(dist, weak.cfg, n, 1, np.random.default_rng(4)) for n in (10, 40, 160)]
    assert vals[0] <= vals[1] <= vals[2]
    with pytest.raises(ValueError):
        estimate_lipschitz(dist, weak.cfg, 0, 1, np.random.default_rng(4))


# ------------------------------------------------------------ PDS


def test_pds_constant_at_equilibrium(weak):
    dist = weak.dist.with_perturbation(0.0)
    p_star = solve_ne(weak.cfg, dist, "mean", tol=1e-14).p_star
    res = pds_integrate(weak.cfg, dist, p_star, 1.0, h=0.01, n_samples=1, p_star=p_star)
    assert np.max(res.distance) <= 1e-9


def test_pds_single_user_monotone():
    cfg = NetworkConfig.build(1, 3, [[0.2, 0.5, 1.0]], 1.0)
    dist = ChannelDistribution(np.ones((1, 1, 3)), 0.0)
    res = pds_integrate(cfg, dist, np.array([[0.0, 0.0, 1.0]]), 10.0, h=0.01, n_samples=1)
    ref = water_fill_bisect([0.2, 0.5, 1.0], [1, 1, 1], 1.0)
    np.testing.assert_allclose(res.p_star[0], ref, atol=1e-9)
    assert np.all(np.diff(res.distance) <= 1e-12)
    assert res.distance[-1] < 1e-3 * res.distance[0]
    assert res.bound_slack <= 1e-12


def test_pds_distance_nonincreasing(weak):
    dist = weak.dist.with_perturbation(0.0)
    res = pds_integrate(weak.cfg, dist, weak.cfg.uniform_profile(), 5.0, h=0.005, n_samples=1)
    assert res.tau_hat > 0
    assert np.all(np.diff(res.distance) <= 1e-12)


def test_pds_skips_bound_without_modulus(strong):
    res = pds_integrate(strong.cfg, strong.dist, strong.cfg.uniform_profile(), 0.5, h=0.1,
                        n_samples=10, rng=np.random.default_rng(0))
    assert res.tau_hat < 0 and res.bound is None and res.bound_slack is None


# ------------------------------------------------------------ recursion audit


def test_audit_zero_steps(weak, weak_ne):
    zero = StepSchedule("custom", func=lambda n: 0.0)
    run = run_sdla(weak.cfg, weak.dist, weak.cfg.uniform_profile(), 100, zero)
    audit = audit_recursion(run, weak_ne.p_star)
    assert audit.violations == 0
    np.testing.assert_allclose(audit.lhs, audit.rhs, rtol=1e-14)


def test_audit_noise_free_run(weak):
    dist = weak.dist.with_perturbation(0.0)
    p_star = solve_ne(weak.cfg, dist, "mean", tol=1e-13).p_star
    run = run_sdla(weak.cfg, dist, weak.cfg.uniform_profile(), 1000, StepSchedule("constant", 0.5))
    assert audit_recursion(run, p_star).violations == 0


def test_audit_detects_corruption(weak, weak_ne):
    run = run_sdla(weak.cfg, weak.dist, weak.cfg.uniform_profile(), 200, StepSchedule("harmonic", 0.5))
    run.p[120] += 1.0
    assert audit_recursion(run, weak_ne.p_star).violations >= 1


def test_audit_requires_fields(weak, weak_ne):
    from sdla.learners import iwfa_run
    run = iwfa_run(weak.cfg, weak.dist, weak.cfg.uniform_profile(), 5)
    with pytest.raises(AuditError):
        audit_recursion(run, weak_ne.p_star)


def test_audit_with_noise_models(weak, weak_ne):
    for noise in (NoiseModel("theta", sigma=0.01), NoiseModel("epsilon", bias_scale=0.5, bias_decay=1.0)):
        run = run_sdla(weak.cfg, weak.dist, weak.cfg.uniform_profile(), 300,
                       StepSchedule("harmonic", 0.5), noise, seed=3)
        audit = audit_recursion(run, weak_ne.p_star)
        assert audit.violations == 0
        assert audit.c_hat == pytest.approx(1.01 * run.grad_hat_norm.max())
    assert np.all(run.eps > 0)


# ------------------------------------------------------------ diagnostics report


def test_diagnose_weak(weak):
    rep = diagnose(weak.cfg, weak.dist, np.random.default_rng(0), n_samples=50, n_pairs=50)
    assert rep.gamma_pd_fraction == 1.0 and rep.tau > 0 and rep.tau_hat > 0
    assert rep.lipschitz_hat > 0 and rep.notices == []
    d = rep.to_dict()
    assert all(np.isfinite(v) for v in d.values() if isinstance(v, float))


def test_diagnose_strong_records_notice(strong):
    rep = diagnose(strong.cfg, strong.dist, np.random.default_rng(0), n_samples=20, n_pairs=20,
                   pds_horizon=1.0)
    assert rep.gamma_pd_fraction == 0.0 and rep.pds_bound_slack is None
    assert len(rep.notices) == 2
