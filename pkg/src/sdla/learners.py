"""Distributed learners: SDLA-I, SDLA-II (iterate averaging) and IWFA.

All learners share the same timing convention: at iteration ``n`` the gain
tensor ``g(n+1)`` is drawn first and the update from ``p(n)`` to ``p(n+1)``
uses feedback measured on it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .channel import (
    ChannelDistribution,
    NetworkConfig,
    gradient,
    interference,
    rate,
    sample_realization,
    signal_fraction,
)
from .projection import project_profile, water_level
from .rng import Streams

_ONE_MINUS = np.nextafter(1.0, 0.0)

SCHEDULE_KINDS = ("constant", "harmonic", "shifted-harmonic", "custom")
NOISE_KINDS = ("none", "theta", "epsilon")
_NOISE_ALIASES = {"theta-gradient-noise": "theta", "epsilon-bias": "epsilon"}


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``a(n)``.

    constant:          ``a0``
    harmonic:          ``a0 / (n + 1)``
    shifted-harmonic:  ``a0 / (1 + n / offset)``
    custom:            ``func(n)``

    ``a0`` may be a per-user sequence; a scalar is shared by every user.
    """

    kind: str = "constant"
    a0: float | tuple = 0.5
    offset: float = 1.0
    func: Optional[Callable[[int], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "custom":
            if self.func is None:
                raise ValueError("custom schedule needs func")
        elif np.any(np.asarray(self.a0, dtype=float) <= 0):
            raise ValueError("a0 must be positive")
        if self.kind == "shifted-harmonic" and self.offset <= 0:
            raise ValueError("offset must be positive")
        if isinstance(self.a0, list):
            object.__setattr__(self, "a0", tuple(self.a0))

    def __call__(self, n: int):
        if self.kind == "custom":
            return self.func(n)
        a0 = np.asarray(self.a0, dtype=float)
        if self.kind == "constant":
            out = a0
        elif self.kind == "harmonic":
            out = a0 / (n + 1)
        else:
            out = a0 / (1.0 + n / self.offset)
        return float(out) if out.ndim == 0 else out

    def steps(self, n: int, n_users: int) -> np.ndarray:
        a = np.broadcast_to(np.asarray(self(n), dtype=float), (n_users,)).copy()
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError(f"invalid step size at n={n}: {a}")
        return a

    @property
    def is_common_constant(self) -> bool:
        return self.kind == "constant" and np.ndim(self.a0) == 0

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom schedules cannot be serialized")
        a0 = list(self.a0) if isinstance(self.a0, tuple) else float(self.a0)
        d = {"kind": self.kind, "a0": a0}
        if self.kind == "shifted-harmonic":
            d["offset"] = float(self.offset)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> StepSchedule:
        a0 = d.get("a0", 0.5)
        return cls(kind=d.get("kind", "constant"),
                   a0=tuple(a0) if isinstance(a0, list) else float(a0),
                   offset=float(d.get("offset", 1.0)))

    def label(self) -> str:
        if self.kind == "constant":
            return f"constant {self.to_dict()['a0']}"
        if self.kind == "harmonic":
            return f"harmonic {self.to_dict()['a0']}/(n+1)"
        return self.kind


@dataclass(frozen=True)
class NoiseModel:
    """Feedback-error generator.

    theta:   the gradient estimate is ``s + theta`` with ``theta`` i.i.d.
             ``N(0, sigma^2)`` per entry, so ``E||theta_j||^2 = sigma^2 K``.
    epsilon: a vanishing relative bias, ``f_hat = f (1 + beta(n))`` with
             ``beta(n) = bias_scale / (n + 1)**bias_decay``.

    In every case the reported signal fraction is clamped to ``[0, 1)``.
    """

    kind: str = "none"
    sigma: float = 0.0
    bias_scale: float = 0.0
    bias_decay: float = 1.0

    def __post_init__(self):
        kind = _NOISE_ALIASES.get(self.kind, self.kind)
        if kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.sigma < 0 or self.bias_scale < 0 or self.bias_decay < 0:
            raise ValueError("noise parameters must be nonnegative")

    def bias(self, n: int) -> float:
        return self.bias_scale / (n + 1) ** self.bias_decay

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "theta":
            d["sigma"] = float(self.sigma)
        elif self.kind == "epsilon":
            d.update(bias_scale=float(self.bias_scale), bias_decay=float(self.bias_decay))
        return d

    @classmethod
    def from_dict(cls, d: dict | None) -> NoiseModel:
        d = d or {}
        return cls(kind=d.get("kind", "none"), sigma=float(d.get("sigma", 0.0)),
                   bias_scale=float(d.get("bias_scale", 0.0)),
                   bias_decay=float(d.get("bias_decay", 1.0)))


def _feedback(g, p, cfg: NetworkConfig, noise: NoiseModel, n: int, rng):
    """Return ``(f_hat, s, s_hat)``: reported fractions, exact and estimated gradients."""
    f = signal_fraction(g, p, cfg.noise)
    s = gradient(g, p, cfg.noise)
    if noise.kind == "none":
        return f, s, s
    if noise.kind == "theta":
        theta = noise.sigma * rng.standard_normal(p.shape)
        s_hat = s + theta
        f_hat = f + p * theta
    else:
        b = noise.bias(n)
        s_hat = s * (1.0 + b)
        f_hat = f * (1.0 + b)
    f_hat = np.clip(f_hat, 0.0, _ONE_MINUS)
    # the same [0, 1) clamp expressed on the gradient scale; zero powers are uncapped
    pos = p > 0
    upper = np.full(p.shape, np.inf)
    upper[pos] = _ONE_MINUS / p[pos]
    s_hat = np.clip(s_hat, 0.0, upper)
    return f_hat, s, s_hat


def estimate_feedback(g_next, p, cfg: NetworkConfig, noise: NoiseModel, n: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Signal-fraction feedback ``f_hat(n)`` measured on ``g(n+1)``."""
    return _feedback(g_next, np.asarray(p, dtype=float), cfg, noise, n, rng)[0]


@dataclass
class StepTrace:
    """Per-step quantities needed for logging and the recursion audit."""

    steps: np.ndarray          # a_j(n)
    grad: np.ndarray           # s_j(n+1): exact gradient at p(n) on g(n+1)
    grad_hat_norm: np.ndarray  # ||s_hat_j(n)||
    eps: np.ndarray            # upper bound on the estimation error eps_j(n)
    rate: np.ndarray           # R_j(p(n) | g(n+1))


@dataclass
class LearnerState:
    """Iterate ``p(n)``, running average ``p_avg(n)`` and index ``n``.

    Before averaging starts ``p_avg`` simply mirrors ``p``, so ``p_avg`` is
    always the profile a user would transmit.
    """

    p: np.ndarray
    p_avg: np.ndarray
    n: int = 0
    trace: Optional[StepTrace] = None

    @classmethod
    def initial(cls, p0) -> LearnerState:
        p0 = np.array(p0, dtype=float)
        return cls(p=p0, p_avg=p0.copy(), n=0)


def _check_feasible(cfg: NetworkConfig, p, what: str):
    if not cfg.contains(p):
        raise AssertionError(f"{what} left the strategy space")


def sdla1_step(state: LearnerState, cfg: NetworkConfig, dist: ChannelDistribution,
               schedule: StepSchedule, noise: NoiseModel, streams: Streams) -> LearnerState:
    """One projected stochastic-gradient step for every user."""
    n, p = state.n, state.p
    g = sample_realization(dist, streams.channel)
    _, s, s_hat = _feedback(g, p, cfg, noise, n, streams.noise)
    a = schedule.steps(n, cfg.n_users)
    p_next = project_profile(p + a[:, None] * s_hat, cfg)
    _check_feasible(cfg, p_next, "SDLA iterate")
    trace = StepTrace(
        steps=a,
        grad=s,
        grad_hat_norm=np.linalg.norm(s_hat, axis=1),
        eps=np.linalg.norm(s_hat - s, axis=1) * cfg.diameter,
        rate=rate(g, p, cfg.noise),
    )
    return LearnerState(p=p_next, p_avg=p_next, n=n + 1, trace=trace)


def update_average(p_avg, count: int, p_new):
    """Running mean after one more sample: ``(count * p_avg + p_new) / (count + 1)``."""
    return (count * p_avg + p_new) / (count + 1)


def sdla2_step(state: LearnerState, cfg: NetworkConfig, dist: ChannelDistribution,
               schedule: StepSchedule, noise: NoiseModel, streams: Streams,
               average_from: int = 0) -> LearnerState:
    """SDLA-I step followed by the running average of ``p(m)`` for ``m > average_from``.

    With ``average_from=0`` this is plain SDLA-II and ``p_avg(n)`` is the mean
    of ``p(1) .. p(n)``.  A positive value gives the mixed scheme that
    transmits the raw iterate first and the average afterwards.
    """
    nxt = sdla1_step(state, cfg, dist, schedule, noise, streams)
    c = state.n - average_from  # iterates already in the average
    if c > 0:
        nxt.p_avg = update_average(state.p_avg, c, nxt.p)
        _check_feasible(cfg, nxt.p_avg, "averaged iterate")
    return nxt


def water_fill(g, p, cfg: NetworkConfig, users=None) -> np.ndarray:
    """Exact best responses ``clip(mu_j - I_j / g_jj, 0, mask)`` for the given users."""
    users = np.arange(cfg.n_users) if users is None else np.atleast_1d(users)
    own = np.einsum("jjk->jk", g)[users]
    floor = interference(g, p, cfg.noise)[users] / own
    mask = cfg.effective_mask[users]
    budget = cfg.p_max[users]
    out = mask.copy()
    binding = mask.sum(axis=1) > budget
    if binding.any():
        mu = -water_level(-floor[binding], mask[binding], budget[binding])
        out[binding] = np.clip(mu[:, None] - floor[binding], 0.0, mask[binding])
    return out


def iwfa_best_response(g, p, user: int, cfg: NetworkConfig) -> np.ndarray:
    """Water-filling best response of ``user`` to the others' current powers."""
    return water_fill(g, np.asarray(p, dtype=float), cfg, user)[0]


@dataclass
class RunLog:
    """Trajectory of one run.  Row ``t`` describes the transition ``t -> t+1``
    and holds ``p(t+1)``; ``p0`` is stored separately."""

    algorithm: str
    p0: np.ndarray
    p: np.ndarray
    rate: np.ndarray
    steps: Optional[np.ndarray] = None
    grad: Optional[np.ndarray] = None
    grad_hat_norm: Optional[np.ndarray] = None
    eps: Optional[np.ndarray] = None
    p_avg: Optional[np.ndarray] = None
    average_from: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.p.shape[0]

    @property
    def transmitted(self) -> np.ndarray:
        return self.p if self.p_avg is None else self.p_avg

    def previous(self) -> np.ndarray:
        """``p(t)`` aligned with row ``t``."""
        return np.concatenate([self.p0[None], self.p[:-1]], axis=0)


def run_sdla(cfg: NetworkConfig, dist: ChannelDistribution, p0, iterations: int,
             schedule: StepSchedule, noise: NoiseModel = NoiseModel(), seed: int = 0,
             average_from: Optional[int] = None) -> RunLog:
    """Run SDLA-I (``average_from=None``), SDLA-II (``0``) or the mixed scheme."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if average_from is not None and average_from < 0:
        raise ValueError("average_from must be >= 0")
    p0 = np.array(p0, dtype=float)
    _check_feasible(cfg, p0, "initial profile")
    streams = Streams.from_seed(seed)
    N, K = cfg.shape
    p = np.empty((iterations, N, K))
    p_avg = None if average_from is None else np.empty((iterations, N, K))
    steps = np.empty((iterations, N))
    grad = np.empty((iterations, N, K))
    ghat = np.empty((iterations, N))
    eps = np.empty((iterations, N))
    rates = np.empty((iterations, N))
    state = LearnerState.initial(p0)
    for t in range(iterations):
        if average_from is None:
            state = sdla1_step(state, cfg, dist, schedule, noise, streams)
        else:
            state = sdla2_step(state, cfg, dist, schedule, noise, streams, average_from)
            p_avg[t] = state.p_avg
        tr = state.trace
        p[t], steps[t], grad[t] = state.p, tr.steps, tr.grad
        ghat[t], eps[t], rates[t] = tr.grad_hat_norm, tr.eps, tr.rate
    if average_from is None:
        name = "sdla1"
    else:
        name = "sdla2" if average_from == 0 else "sdla-mixed"
    return RunLog(algorithm=name, p0=p0, p=p, rate=rates, steps=steps, grad=grad,
                  grad_hat_norm=ghat, eps=eps, p_avg=p_avg, average_from=average_from,
                  meta={"seed": int(seed)})


def iwfa_run(cfg: NetworkConfig, dist: ChannelDistribution, p0, iterations: int,
             update_order: str = "sequential", seed: int = 0) -> RunLog:
    """Iterative water-filling with perfect knowledge of every fresh realization."""
    if update_order not in ("sequential", "simultaneous"):
        raise ValueError(f"unknown update order {update_order!r}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    p_cur = np.array(p0, dtype=float)
    _check_feasible(cfg, p_cur, "initial profile")
    streams = Streams.from_seed(seed)
    p = np.empty((iterations,) + cfg.shape)
    rates = np.empty((iterations, cfg.n_users))
    for t in range(iterations):
        g = sample_realization(dist, streams.channel)
        rates[t] = rate(g, p_cur, cfg.noise)
        if update_order == "simultaneous":
            p_cur = water_fill(g, p_cur, cfg)
        else:
            p_cur = p_cur.copy()
            for j in range(cfg.n_users):
                p_cur[j] = water_fill(g, p_cur, cfg, j)[0]
        _check_feasible(cfg, p_cur, "IWFA iterate")
        p[t] = p_cur
    return RunLog(algorithm="iwfa", p0=np.array(p0, dtype=float), p=p, rate=rates,
                  meta={"seed": int(seed), "update_order": update_order})


def check_step_condition(schedule: StepSchedule, tau_bar: float, lipschitz: float) -> bool:
    """Warn when a common constant step exceeds ``2 tau / L^2``.

    Only constant common schedules are checked; returns True when the
    condition holds or does not apply.
    """
    if not schedule.is_common_constant:
        return True
    if tau_bar <= 0 or lipschitz <= 0:
        warnings.warn("step-size condition not certifiable: modulus is not positive", stacklevel=2)
        return False
    bound = 2.0 * tau_bar / lipschitz ** 2
    if float(schedule.a0) > bound:
        warnings.warn(f"constant step {schedule.a0} exceeds 2*tau/L^2 = {bound:.4g}", stacklevel=2)
        return False
    return True


__all__ = [
    "StepSchedule",
    "NoiseModel",
    "StepTrace",
    "LearnerState",
    "RunLog",
    "estimate_feedback",
    "sdla1_step",
    "sdla2_step",
    "update_average",
    "water_fill",
    "iwfa_best_response",
    "run_sdla",
    "iwfa_run",
    "check_step_condition",
]
