"""Ground truth and diagnostics.

Nash-equilibrium oracle, the normalized error metric, coupling-matrix checks,
Lipschitz estimation, projected-dynamics integration and the per-step audit
of the distance recursion satisfied by every SDLA run.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .channel import (
    ChannelDistribution,
    NetworkConfig,
    gamma_min_eig,
    tau,
)
from .learners import RunLog, water_fill
from .projection import project_profile

log = logging.getLogger(__name__)

NE_METHODS = ("mean", "saa")


class OracleError(RuntimeError):
    """The best-response iteration did not reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class AuditError(ValueError):
    """A run log lacks the fields the recursion audit needs."""


@dataclass
class NeSolution:
    p_star: np.ndarray
    residual: float
    method: str
    samples_used: int
    sweeps: int = 0


def draw_pool(dist: ChannelDistribution, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """``(n_samples, N, N, K)`` i.i.d. realizations."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    g = dist.mean_gains
    if dist.perturbation == 0.0:
        return np.broadcast_to(g, (n_samples,) + g.shape).copy()
    v = dist.perturbation
    return rng.uniform(g * (1 - v), g * (1 + v), size=(n_samples,) + g.shape)


def mean_gradient(pool: np.ndarray, p: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Sample average of the rate gradients over a realization pool."""
    total = np.einsum("sjik,ik->sjk", pool, p) + noise
    own = np.einsum("sjjk->sjk", pool)
    return (own / total).mean(axis=0)


def _newton_inverse(own, intf, lam, cap, iters: int = 100):
    """Solve ``mean_s own/(intf + own x) = lam`` per channel, clipped to ``[0, cap]``.

    The left side is convex and decreasing in ``x``, so Newton started at 0
    (left of the root) increases monotonically to it.
    """
    x = np.zeros(own.shape[1])
    active = (own / intf).mean(axis=0) > lam
    for _ in range(iters):
        if not active.any():
            break
        d = intf[:, active] + own[:, active] * x[active]
        h = (own[:, active] / d).mean(axis=0)
        dh = -(own[:, active] ** 2 / d ** 2).mean(axis=0)
        step = (h - lam) / dh
        x_new = x[active] - step
        over = x_new >= cap[active]
        x_new = np.minimum(x_new, cap[active])
        done = over | (np.abs(step) <= 1e-15 * (1.0 + x_new))
        x[active] = x_new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return x


def saa_best_response(pool: np.ndarray, p: np.ndarray, j: int, cfg: NetworkConfig) -> np.ndarray:
    """Maximize the pool-averaged rate of user ``j`` over its strategy set.

    The objective is separable across channels, so the maximizer is
    ``x_k(lam)`` (the channel-wise inverse of the averaged derivative, clipped
    to the mask) with the budget multiplier ``lam`` found by Brent's method.
    """
    own = pool[:, j, j, :]
    cross = pool[:, j, :, :].copy()
    cross[:, j, :] = 0.0
    intf = np.einsum("sik,ik->sk", cross, p) + cfg.noise[j]
    cap = cfg.effective_mask[j]
    budget = cfg.p_max[j]
    if cap.sum() <= budget:
        return cap.copy()
    hi = float((own / intf).mean(axis=0).max())  # every channel off
    lo = float((own / (intf + own * cap)).mean(axis=0).min())  # every channel at cap

    def excess(lam):
        return _newton_inverse(own, intf, lam, cap).sum() - budget

    if excess(lo) <= 0:
        return cap.copy()
    lam = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    return _newton_inverse(own, intf, lam, cap)


def _best_response_iteration(br, p0: np.ndarray, n_users: int, tol: float, max_iter: int):
    p = np.array(p0, dtype=float)
    residual = np.inf
    for sweep in range(1, max_iter + 1):
        residual = 0.0
        for j in range(n_users):
            new = br(p, j)
            residual = max(residual, float(np.max(np.abs(new - p[j]))))
            p[j] = new
        if residual <= tol:
            return p, residual, sweep
    raise OracleError(f"best-response iteration did not converge in {max_iter} sweeps", residual)


def solve_ne_on_pool(pool: np.ndarray, cfg: NetworkConfig, tol: float = 1e-8,
                     max_iter: int = 500, p0=None) -> NeSolution:
    """Sample-average NE for a fixed pool of realizations."""
    p0 = cfg.uniform_profile() if p0 is None else p0
    p, res, sweeps = _best_response_iteration(
        lambda p, j: saa_best_response(pool, p, j, cfg), p0, cfg.n_users, tol, max_iter)
    return NeSolution(p_star=p, residual=res, method="saa", samples_used=pool.shape[0], sweeps=sweeps)


def solve_ne(cfg: NetworkConfig, dist: ChannelDistribution, method: str = "saa",
             tol: float = 1e-8, max_iter: int = 500, n_samples: int = 2000,
             rng: Optional[np.random.Generator] = None) -> NeSolution:
    """Nash equilibrium by sequential best responses.

    ``mean`` water-fills on the mean gains; ``saa`` best-responds on the
    average utility over a frozen pool of ``n_samples`` realizations.
    """
    if method not in NE_METHODS:
        raise ValueError(f"unknown NE method {method!r}")
    if method == "mean":
        g = dist.mean_gains
        p, res, sweeps = _best_response_iteration(
            lambda p, j: water_fill(g, p, cfg, j)[0], cfg.uniform_profile(), cfg.n_users, tol, max_iter)
        return NeSolution(p_star=p, residual=res, method="mean", samples_used=1, sweeps=sweeps)
    rng = np.random.default_rng(0) if rng is None else rng
    return solve_ne_on_pool(draw_pool(dist, n_samples, rng), cfg, tol, max_iter)


def nse(p, p_star) -> float:
    """Normalized error ``||p - p*|| / ||p*||`` over the flattened profile."""
    p_star = np.asarray(p_star, dtype=float)
    ref = np.linalg.norm(p_star)
    if ref == 0:
        raise ValueError("reference profile is zero")
    return float(np.linalg.norm(np.asarray(p, dtype=float) - p_star) / ref)


def nse_series(traj: np.ndarray, p_star) -> np.ndarray:
    """:func:`nse` for every profile of a ``(T, N, K)`` trajectory."""
    p_star = np.asarray(p_star, dtype=float)
    ref = np.linalg.norm(p_star)
    if ref == 0:
        raise ValueError("reference profile is zero")
    diff = traj.reshape(traj.shape[0], -1) - p_star.ravel()
    return np.linalg.norm(diff, axis=1) / ref


@dataclass
class GammaCheck:
    fraction_pd: float
    min_eig: float


def check_gamma_pd(dist: ChannelDistribution, cfg: NetworkConfig, n_samples: int,
                   rng: np.random.Generator) -> GammaCheck:
    """Fraction of sampled realizations whose coupling matrix is positive definite."""
    pool = draw_pool(dist, n_samples, rng)
    eigs = np.array([gamma_min_eig(g, cfg) for g in pool])
    return GammaCheck(fraction_pd=float(np.mean(eigs > 0)), min_eig=float(eigs.min()))


def pool_tau(pool: np.ndarray, cfg: NetworkConfig) -> float:
    """Smallest modulus over a pool: the finite-sample stand-in for min over realizations."""
    return float(min(tau(g, cfg) for g in pool))


def estimate_lipschitz(dist: ChannelDistribution, cfg: NetworkConfig, n_pairs: int,
                       n_samples: int, rng: np.random.Generator,
                       pool: Optional[np.ndarray] = None) -> float:
    """Empirical lower bound on the Lipschitz constant of the mean gradient map.

    Pair ``i`` only uses row ``i`` of one uniform draw, so the first ``m``
    pairs are the same for any ``n_pairs >= m`` and the estimate is
    nondecreasing in ``n_pairs``.  Points are skewed toward zero power, where
    the gradient is steepest, and partners sit at log-uniform distances.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if pool is None:
        pool = draw_pool(dist, n_samples, rng)
    N, K = cfg.shape
    mask = cfg.effective_mask
    u = rng.random((n_pairs, 3, N, K))
    floor = 1e-6 * float(np.max(cfg.diameter))
    best = 0.0
    for i in range(n_pairs):
        p = project_profile(mask * u[i, 0] ** 3, cfg)
        radius = 10.0 ** (-4.0 * u[i, 2, 0, 0])
        q = project_profile(p + radius * mask * (2.0 * u[i, 1] - 1.0), cfg)
        dist_pq = np.linalg.norm(p - q)
        if dist_pq < floor:  # difference quotient dominated by rounding
            continue
        ds = np.linalg.norm(mean_gradient(pool, p, cfg.noise) - mean_gradient(pool, q, cfg.noise))
        best = max(best, float(ds / dist_pq))
    return best


@dataclass
class PdsResult:
    times: np.ndarray
    trajectory: np.ndarray
    distance: np.ndarray
    p_star: np.ndarray
    tau_hat: float
    bound: Optional[np.ndarray]
    bound_gap: Optional[float]  # sup_t (distance - bound), absolute
    bound_slack: Optional[float]  # bound_gap / distance(0)


def pds_integrate(cfg: NetworkConfig, dist: ChannelDistribution, p0, horizon: float,
                  h: Optional[float] = None, n_samples: int = 200,
                  rng: Optional[np.random.Generator] = None, p_star=None,
                  pool: Optional[np.ndarray] = None) -> PdsResult:
    """Projected-Euler integration of the projected gradient flow.

    ``h`` defaults to ``0.01 / L_hat``.  The exponential envelope uses the
    smallest modulus over the pool; when that is not positive the envelope is
    skipped and ``bound`` is None.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if pool is None:
        pool = draw_pool(dist, n_samples, rng)
    if h is None:
        h = 0.01 / estimate_lipschitz(dist, cfg, 200, n_samples, rng, pool=pool)
    if h <= 0:
        raise ValueError("step h must be positive")
    p_star = solve_ne_on_pool(pool, cfg, tol=1e-12).p_star if p_star is None else np.asarray(p_star)
    n_steps = int(np.ceil(horizon / h))
    traj = np.empty((n_steps + 1,) + cfg.shape)
    traj[0] = p = np.array(p0, dtype=float)
    for m in range(n_steps):
        p = project_profile(p + h * mean_gradient(pool, p, cfg.noise), cfg)
        traj[m + 1] = p
    times = h * np.arange(n_steps + 1)
    distance = np.linalg.norm((traj - p_star).reshape(n_steps + 1, -1), axis=1)
    tau_hat = pool_tau(pool, cfg)
    bound = gap = slack = None
    if tau_hat > 0:
        bound = distance[0] * np.exp(-tau_hat * times)
        gap = float(np.max(distance - bound))
        slack = gap / distance[0] if distance[0] > 0 else 0.0
    else:
        log.info("modulus over the pool is %.3g <= 0; exponential envelope skipped", tau_hat)
    return PdsResult(times, traj, distance, p_star, tau_hat, bound, gap, slack)


@dataclass
class RecursionAudit:
    lhs: np.ndarray
    rhs: np.ndarray
    violations: int
    c_hat: float


def audit_recursion(run: RunLog, p_star, c_hat: Optional[float] = None,
                 rtol: float = 1e-9) -> RecursionAudit:
    """Check the one-step distance recursion along a logged SDLA run.

    For every step ``n``::

        ||p(n+1)-p*||^2 <= ||p(n)-p*||^2 + 5 C^2 a(n)^2
                           + 2 sum_i a_i eps_i - 2 sum_i a_i s_i(n+1)^T (p*_i - p_i(n))

    with ``a(n)^2 = sum_i a_i(n)^2`` and ``C`` defaulting to 1.01 times the
    largest logged ``||s_hat_i||``.
    """
    for name in ("steps", "grad", "grad_hat_norm", "eps"):
        if getattr(run, name) is None:
            raise AuditError(f"run log has no {name!r} field")
    p_star = np.asarray(p_star, dtype=float)
    if c_hat is None:
        c_hat = 1.01 * float(np.max(run.grad_hat_norm))
    prev = run.previous()
    d_prev = ((prev - p_star) ** 2).sum(axis=(1, 2))
    lhs = ((run.p - p_star) ** 2).sum(axis=(1, 2))
    a = run.steps
    inner = np.einsum("tjk,tjk->tj", run.grad, p_star[None] - prev)
    rhs = (d_prev + 5.0 * c_hat ** 2 * (a ** 2).sum(axis=1)
           + 2.0 * (a * run.eps).sum(axis=1) - 2.0 * (a * inner).sum(axis=1))
    violations = int(np.sum(lhs > rhs + rtol * (1.0 + np.abs(rhs))))
    return RecursionAudit(lhs=lhs, rhs=rhs, violations=violations, c_hat=c_hat)


@dataclass
class DiagnosticsReport:
    gamma_pd_fraction: float
    gamma_min_eig: float
    tau: float
    tau_hat: float
    lipschitz_hat: float
    recursion_violations: int = 0
    pds_bound_slack: Optional[float] = None
    notices: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def diagnose(cfg: NetworkConfig, dist: ChannelDistribution, rng: np.random.Generator,
             n_samples: int = 200, n_pairs: int = 200, pds_horizon: Optional[float] = None,
             p_star=None) -> DiagnosticsReport:
    """Coupling-matrix, modulus, Lipschitz and (optionally) envelope diagnostics."""
    pool = draw_pool(dist, n_samples, rng)
    eigs = np.array([gamma_min_eig(g, cfg) for g in pool])
    t_hat = pool_tau(pool, cfg)
    lip = estimate_lipschitz(dist, cfg, n_pairs, n_samples, rng, pool=pool)
    rep = DiagnosticsReport(
        gamma_pd_fraction=float(np.mean(eigs > 0)),
        gamma_min_eig=float(eigs.min()),
        tau=tau(dist.mean_gains, cfg),
        tau_hat=t_hat,
        lipschitz_hat=lip,
    )
    if rep.gamma_pd_fraction < 1.0:
        rep.notices.append("coupling matrix not positive definite on every sampled realization")
    if pds_horizon is not None:
        if t_hat > 0:
            res = pds_integrate(cfg, dist, cfg.uniform_profile(), pds_horizon, h=0.01 / lip,
                                pool=pool, p_star=p_star)
            rep.pds_bound_slack = res.bound_slack
        else:
            rep.notices.append("modulus over the pool is not positive; exponential envelope skipped")
    return rep

