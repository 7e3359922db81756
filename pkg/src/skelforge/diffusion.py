"""Noise schedule, closed-form forward corruption, reverse posterior step,
and the combined reconstruction + classification training loss.

Conventions: step t = 0 is the least-noised step of the chain, t = T-1 the
most; alpha_bar[t] is the cumulative signal retention through step t, with
alpha_bar before the chain starts defined as 1.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ConfigError


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta/alpha tables plus the derived posterior coefficients."""

    t_steps: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    alpha_bar_prev: np.ndarray
    posterior_variance: np.ndarray
    posterior_mean_coef_x0: np.ndarray
    posterior_mean_coef_xt: np.ndarray

    @property
    def sqrt_alpha_bar(self) -> np.ndarray:
        return np.sqrt(self.alpha_bar)

    @property
    def sqrt_one_minus_alpha_bar(self) -> np.ndarray:
        return np.sqrt(1.0 - self.alpha_bar)


def make_linear_schedule(t_steps: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Linear beta schedule inclusive of both endpoints."""
    if t_steps < 1:
        raise ConfigError(f"t_steps must be >= 1, got {t_steps}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ConfigError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    beta = np.linspace(beta_start, beta_end, t_steps, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    alpha_bar_prev = np.concatenate([[1.0], alpha_bar[:-1]])
    one_minus = 1.0 - alpha_bar
    posterior_variance = beta * (1.0 - alpha_bar_prev) / one_minus
    coef_x0 = np.sqrt(alpha_bar_prev) * beta / one_minus
    coef_xt = np.sqrt(alpha) * (1.0 - alpha_bar_prev) / one_minus
    return NoiseSchedule(
        t_steps=t_steps,
        beta=beta,
        alpha=alpha,
        alpha_bar=alpha_bar,
        alpha_bar_prev=alpha_bar_prev,
        posterior_variance=posterior_variance,
        posterior_mean_coef_x0=coef_x0,
        posterior_mean_coef_xt=coef_xt,
    )


def _gather(table: np.ndarray, t, like) -> "np.ndarray | torch.Tensor":
    """Schedule coefficients for step(s) t, broadcastable against `like`."""
    if isinstance(like, torch.Tensor):
        coef = torch.as_tensor(table, dtype=like.dtype, device=like.device)
        idx = torch.as_tensor(t, dtype=torch.long, device=like.device)
        out = coef[idx]
        while out.dim() < like.dim():
            out = out.unsqueeze(-1)
        return out
    out = np.asarray(table, dtype=np.float64)[np.asarray(t)]
    return np.reshape(out, np.shape(out) + (1,) * (np.ndim(like) - np.ndim(out)))


def q_sample(x0, t, epsilon, schedule: NoiseSchedule):
    """Closed-form forward draw: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.

    Works on torch tensors or numpy arrays; t may be a scalar step or a
    per-example vector.
    """
    a = _gather(schedule.sqrt_alpha_bar, t, x0)
    b = _gather(schedule.sqrt_one_minus_alpha_bar, t, x0)
    return a * x0 + b * epsilon


def posterior_step(x_t, x0_hat, t: int, schedule: NoiseSchedule, rng=None):
    """One reverse step: posterior mean of x_{t-1} given (x_t, x0_hat) plus
    posterior-variance noise; the t = 0 step is deterministic.

    `rng` is a torch.Generator for torch inputs or numpy Generator for
    numpy inputs; only used when t > 0.
    """
    if not 0 <= t < schedule.t_steps:
        raise ValueError(f"step {t} outside [0, {schedule.t_steps})")
    c0 = float(schedule.posterior_mean_coef_x0[t])
    ct = float(schedule.posterior_mean_coef_xt[t])
    mean = c0 * x0_hat + ct * x_t
    if t == 0:
        return mean
    sigma = math.sqrt(float(schedule.posterior_variance[t]))
    if isinstance(x_t, torch.Tensor):
        noise = torch.randn(x_t.shape, generator=rng, dtype=x_t.dtype, device=x_t.device)
    else:
        gen = rng if rng is not None else np.random.default_rng()
        noise = gen.standard_normal(np.shape(x_t))
    return mean + sigma * noise


def training_loss(
    x0_hat: torch.Tensor,
    logits: torch.Tensor,
    x0: torch.Tensor,
    labels: torch.Tensor,
    lambda_cls: float,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Total = reconstruction MSE + lambda_cls * classification cross-entropy.

    Reconstruction averages the squared error over every element of the
    batch; classification is the mean negative log-probability of the true
    class. Returns (total, rec, cls).
    """
    rec = torch.mean((x0_hat - x0) ** 2)
    cls = F.cross_entropy(logits, labels)
    total = rec + lambda_cls * cls
    return total, rec, cls
