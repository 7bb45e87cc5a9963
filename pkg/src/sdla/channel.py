"""Physical model of the stochastic parallel Gaussian interference channel.

Gain tensors use the layout ``g[receiver, transmitter, channel]``: ``g[j, i, k]``
is the power gain from source ``i`` to destination ``j`` on channel ``k``.
Power profiles are ``(n_users, n_channels)`` arrays.  Rates are in nats.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "ConfigError",
    "NetworkConfig",
    "ChannelDistribution",
    "sample_realization",
    "received_power",
    "interference",
    "sinr",
    "rate",
    "signal_fraction",
    "gradient",
    "gamma_matrix",
    "gamma_min_eig",
    "tau",
]


class ConfigError(ValueError):
    """Raised when a network or channel configuration is malformed."""


def _broadcast(value, shape, name) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1 and len(shape) == 2 and arr.shape[0] == shape[0]:
        arr = arr[:, None]
    try:
        return np.broadcast_to(arr, shape).copy()
    except ValueError:
        raise ConfigError(f"{name} of shape {arr.shape} does not fit {shape}") from None


@dataclass(frozen=True, eq=False)
class NetworkConfig:
    """Static problem data: noise floors, power budgets and spectral masks.

    ``mask`` may hold ``np.inf`` for unbounded entries.  Everything that needs
    a finite per-channel cap uses :attr:`effective_mask`, which is
    ``min(mask, p_max)``; the budget already caps every single channel.
    """

    noise: np.ndarray
    p_max: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.noise.ndim != 2:
            raise ConfigError("noise must be an (n_users, n_channels) matrix")
        if self.p_max.shape != (self.noise.shape[0],):
            raise ConfigError("p_max must have one entry per user")
        if self.mask.shape != self.noise.shape:
            raise ConfigError("mask must match the noise shape")
        if not np.all(np.isfinite(self.noise)) or np.any(self.noise <= 0):
            raise ConfigError("noise levels must be finite and positive")
        if not np.all(np.isfinite(self.p_max)) or np.any(self.p_max <= 0):
            raise ConfigError("power budgets must be finite and positive")
        if np.any(np.isnan(self.mask)) or np.any(self.mask <= 0):
            raise ConfigError("spectral masks must be positive (inf allowed)")
        finite = np.isfinite(self.mask)
        if np.any(self.mask[finite] >= np.broadcast_to(self.p_max[:, None], self.mask.shape)[finite]):
            warnings.warn("a finite spectral mask is not below the user's power budget", stacklevel=3)
        if finite.all() and np.any(self.p_max >= self.mask.sum(axis=1)):
            warnings.warn("a power budget is not below the sum of the user's masks", stacklevel=3)

    @classmethod
    def build(cls, n_users: int, n_channels: int, noise, p_max, mask=None) -> NetworkConfig:
        """Broadcast scalars / per-user vectors to full arrays and validate."""
        if n_users < 1 or n_channels < 1:
            raise ConfigError("n_users and n_channels must be positive")
        shape = (n_users, n_channels)
        mask = np.inf if mask is None else mask
        return cls(
            noise=_broadcast(noise, shape, "noise"),
            p_max=_broadcast(p_max, (n_users,), "p_max"),
            mask=_broadcast(mask, shape, "mask"),
        )

    @property
    def n_users(self) -> int:
        return self.noise.shape[0]

    @property
    def n_channels(self) -> int:
        return self.noise.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.noise.shape

    @cached_property
    def effective_mask(self) -> np.ndarray:
        m = np.minimum(self.mask, self.p_max[:, None])
        m.flags.writeable = False
        return m

    @cached_property
    def diameter(self) -> np.ndarray:
        """Upper bound on the Euclidean diameter of each user's strategy set."""
        d = np.minimum(np.sqrt(2.0) * self.p_max, np.linalg.norm(self.effective_mask, axis=1))
        d.flags.writeable = False
        return d

    def uniform_profile(self) -> np.ndarray:
        """``p_max / K`` on every channel, clipped to the mask."""
        p = np.broadcast_to(self.p_max[:, None] / self.n_channels, self.shape)
        return np.minimum(p, self.effective_mask)

    def contains(self, p, atol: float = 1e-9) -> bool:
        """Membership test for the strategy space (product of per-user sets)."""
        p = np.asarray(p, dtype=float)
        if p.shape != self.shape or not np.all(np.isfinite(p)):
            return False
        return bool(
            (p >= -atol).all()
            and (p <= self.effective_mask + atol).all()
            and (p.sum(axis=1) <= self.p_max + atol).all()
        )


@dataclass(frozen=True, eq=False)
class ChannelDistribution:
    """Elementwise uniform gains on ``(mean*(1-v), mean*(1+v))``, i.i.d. over time."""

    mean_gains: np.ndarray
    perturbation: float = 0.0

    def __post_init__(self):
        g = self.mean_gains
        if g.ndim != 3 or g.shape[0] != g.shape[1]:
            raise ConfigError("mean gains must be an (N, N, K) tensor")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ConfigError("mean gains must be finite and nonnegative")
        if np.any(np.einsum("jjk->jk", g) <= 0):
            raise ConfigError("direct-link mean gains must be strictly positive")
        if not 0.0 <= self.perturbation < 1.0:
            raise ConfigError("perturbation must lie in [0, 1)")

    @classmethod
    def from_shorthand(cls, n_users: int, n_channels: int, diag: float, offdiag: float,
                       perturbation: float = 0.0) -> ChannelDistribution:
        g = np.full((n_users, n_users, n_channels), float(offdiag))
        idx = np.arange(n_users)
        g[idx, idx, :] = float(diag)
        return cls(g, float(perturbation))

    @property
    def n_users(self) -> int:
        return self.mean_gains.shape[0]

    @property
    def n_channels(self) -> int:
        return self.mean_gains.shape[2]

    def with_perturbation(self, perturbation: float) -> ChannelDistribution:
        return ChannelDistribution(self.mean_gains, float(perturbation))


def sample_realization(dist: ChannelDistribution, rng: np.random.Generator) -> np.ndarray:
    """Draw one gain tensor.  Zero perturbation returns the mean exactly
    without consuming random numbers."""
    g = dist.mean_gains
    if dist.perturbation == 0.0:
        return g.copy()
    v = dist.perturbation
    return rng.uniform(g * (1.0 - v), g * (1.0 + v))


def _direct(g: np.ndarray) -> np.ndarray:
    return np.einsum("jjk->jk", g)


def received_power(g: np.ndarray, p: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Total received energy ``sum_i g[j,i,k] p[i,k] + n[j,k]`` at each destination."""
    return np.einsum("jik,ik->jk", g, p) + noise


def interference(g: np.ndarray, p: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Interference plus noise ``sum_{i != j} g[j,i,k] p[i,k] + n[j,k]``."""
    cross = g.copy()
    idx = np.arange(g.shape[0])
    cross[idx, idx, :] = 0.0
    return received_power(cross, p, noise)


def sinr(g: np.ndarray, p: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """SINR matrix ``gamma[j, k]``; interference from other users is treated as noise."""
    p = np.asarray(p, dtype=float)
    return _direct(g) * p / interference(g, p, noise)


def rate(g: np.ndarray, p: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Per-user Shannon rate ``sum_k ln(1 + gamma[j, k])`` (nats)."""
    return np.log1p(sinr(g, p, noise)).sum(axis=1)


def signal_fraction(g: np.ndarray, p: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Own received energy over total received energy (own signal included)."""
    p = np.asarray(p, dtype=float)
    return _direct(g) * p / received_power(g, p, noise)


def gradient(g: np.ndarray, p: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Gradient of each user's rate with respect to its own powers.

    Evaluated as ``g[j,j,k] / total[j,k]`` so that zero powers are harmless;
    wherever ``p > 0`` this equals ``signal_fraction / p``.
    """
    return _direct(g) / received_power(g, np.asarray(p, dtype=float), noise)


def _coupling_terms(g: np.ndarray, cfg: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    pbar = cfg.effective_mask
    worst_total = received_power(g, pbar, cfg.noise)  # n_j + sum_i g_ji pbar_i
    return worst_total, _direct(g)


def gamma_matrix(g: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """Interference-coupling matrix; unit diagonal, nonpositive off-diagonal."""
    worst_total, own = _coupling_terms(g, cfg)
    # ratio[i, j, k] = (g_ij / g_jj) * (worst_total_j / n_i)
    ratio = g / own[None, :, :] * worst_total[None, :, :] / cfg.noise[:, None, :]
    gam = -ratio.max(axis=2)
    np.fill_diagonal(gam, 1.0)
    return gam


def gamma_min_eig(g: np.ndarray, cfg: NetworkConfig) -> float:
    """Smallest eigenvalue of the symmetric part of the coupling matrix."""
    gam = gamma_matrix(g, cfg)
    return float(np.linalg.eigvalsh(0.5 * (gam + gam.T))[0])


def tau(g: np.ndarray, cfg: NetworkConfig) -> float:
    """Strong-monotonicity modulus of the gradient map for one realization.

    Negative values mean the coupling matrix is not positive definite and no
    modulus is certified.
    """
    worst_total, own = _coupling_terms(g, cfg)
    kappa = worst_total / own
    return gamma_min_eig(g, cfg) / float(np.max(kappa) ** 2)
