"""Training objectives: Wasserstein critic pair with gradient penalty,
attribute regression terms, and the L1 reconstruction term.

Sign convention: every function returns the quantity its optimizer
*minimizes*. The critic minimizes mean(fake) - mean(real) + penalty; the
generator minimizes -mean(fake scores).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import torch
from torch import Tensor

from .errors import CapabilityError, DomainError

ArrayLike = Union[Tensor, list, tuple, float]


@dataclass(frozen=True)
class LossWeights:
    """Trade-off weights between the objective terms."""

    gradient_penalty: float = 10.0
    d_attribute: float = 50.0
    g_attribute: float = 100.0
    reconstruction: float = 1000.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise DomainError(f"loss weight '{name}' must be strictly positive, got {value}")


def _as_tensor(x: ArrayLike) -> Tensor:
    return x if torch.is_tensor(x) else torch.as_tensor(x, dtype=torch.float64)


def interpolate_samples(x_real: Tensor, x_fake: Tensor, epsilon: Tensor) -> Tensor:
    """Per-sample convex mix eps*real + (1-eps)*fake used by the penalty."""
    eps = epsilon.view(-1, *([1] * (x_real.dim() - 1)))
    return eps * x_real + (1.0 - eps) * x_fake


def gradient_penalty(
    critic: Callable[[Tensor], Tensor],
    x_real: Tensor,
    x_fake: Tensor,
    weight: float,
    *,
    rng: Optional[torch.Generator] = None,
    epsilon: Optional[Tensor] = None,
) -> Tensor:
    """weight * E[(||grad critic at the interpolant||_2 - 1)^2].

    The norm is taken over all pixels and channels of each sample jointly.
    `epsilon` can be supplied for reproducible tests; otherwise it is drawn
    uniform per sample from `rng`.
    """
    if x_real.shape != x_fake.shape:
        raise DomainError(f"batch shapes differ: {tuple(x_real.shape)} vs {tuple(x_fake.shape)}")
    if not weight > 0:
        raise DomainError(f"penalty weight must be strictly positive, got {weight}")
    b = x_real.shape[0]
    if epsilon is None:
        epsilon = torch.rand(b, dtype=x_real.dtype, device=x_real.device, generator=rng)
    x_hat = interpolate_samples(x_real.detach(), x_fake.detach(), epsilon).requires_grad_(True)
    scores = critic(x_hat)
    if not scores.requires_grad:
        raise CapabilityError("critic output carries no autograd graph; input gradients unavailable")
    try:
        (grads,) = torch.autograd.grad(scores.sum(), x_hat, create_graph=True)
    except RuntimeError as exc:
        raise CapabilityError(f"input gradients unavailable: {exc}") from exc
    norms = grads.flatten(1).norm(2, dim=1)
    return weight * ((norms - 1.0) ** 2).mean()


def d_adv_loss(scores_real: ArrayLike, scores_fake: ArrayLike, gp: ArrayLike = 0.0) -> Tensor:
    """Critic objective: mean(fake) - mean(real) + gradient penalty."""
    return _as_tensor(scores_fake).mean() - _as_tensor(scores_real).mean() + _as_tensor(gp)


def g_adv_loss(scores_fake: ArrayLike) -> Tensor:
    """Generator adversarial objective: -mean(critic scores on fakes)."""
    return -_as_tensor(scores_fake).mean()


def d_att_loss(att_true: ArrayLike, att_pred: ArrayLike) -> Tensor:
    """Mean absolute error between source attributes and the attribute head on real images."""
    return (_as_tensor(att_true) - _as_tensor(att_pred)).abs().mean()


def g_att_loss(att_target: ArrayLike, att_pred_on_fake: ArrayLike) -> Tensor:
    """Mean absolute error between target attributes and the attribute head on edits."""
    return (_as_tensor(att_target) - _as_tensor(att_pred_on_fake)).abs().mean()


def rec_loss(x: ArrayLike, x_rec: ArrayLike) -> Tensor:
    """Mean absolute error over all pixels and channels."""
    return (_as_tensor(x) - _as_tensor(x_rec)).abs().mean()


def total_d_loss(adv: ArrayLike, att: ArrayLike, weights: LossWeights) -> Tensor:
    """Full critic objective; `adv` already includes the gradient penalty."""
    return _as_tensor(adv) + weights.d_attribute * _as_tensor(att)


def total_g_loss(adv: ArrayLike, att: ArrayLike, rec: ArrayLike, weights: LossWeights) -> Tensor:
    """Full generator objective."""
    return (
        _as_tensor(adv)
        + weights.g_attribute * _as_tensor(att)
        + weights.reconstruction * _as_tensor(rec)
    )
