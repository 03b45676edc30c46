"""Group-relative policy optimization arithmetic.

Pure numeric functions over a group of G scored responses. Advantages are
mean-centered only (no standard-deviation normalization), and the clipped
surrogate is summed over tokens without per-sequence length normalization:

    A_i = r_i - mean(r)
    J = (1/G) sum_i sum_t [ min(rho*A_i, clip(rho, 1-eps, 1+eps)*A_i) - beta*kl ]

A reference variant that does divide by the group standard deviation is
provided so tests can demonstrate the difference. Summation order is fixed
left-to-right for bit-reproducibility; the KL estimator is the caller's
choice — this module consumes precomputed per-token values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ShapeMismatch, ZeroVariance

#: Shipped defaults for trainers; the math itself takes them as arguments.
DEFAULT_BETA_KL = 0.01
DEFAULT_GROUP_SIZE = 16


@dataclass(frozen=True)
class SurrogateInputs:
    """Token-level ratios/KL per response, one advantage per response."""

    ratios: Sequence[Sequence[float]]
    advantages: Sequence[float]
    kl: Sequence[Sequence[float]]
    epsilon_clip: float
    beta_kl: float


def group_advantages(rewards: Sequence[float]) -> list[float]:
    """Mean-centered advantages; no variance division."""
    if not rewards:
        raise ValueError("group must contain at least one reward")
    first = rewards[0]
    if all(r == first for r in rewards):
        return [0.0] * len(rewards)  # keep the degenerate group exactly zero
    mean = sum(rewards) / len(rewards)
    return [r - mean for r in rewards]


def clipped_term(ratio: float, advantage: float, epsilon_clip: float) -> float:
    """min(rho*A, clip(rho, 1-eps, 1+eps)*A); the pessimistic surrogate."""
    if not ratio > 0:
        raise ValueError("probability ratio must be positive")
    if not 0 < epsilon_clip < 1:
        raise ValueError("clip range must lie in (0, 1)")
    clipped = min(max(ratio, 1.0 - epsilon_clip), 1.0 + epsilon_clip)
    return min(ratio * advantage, clipped * advantage)


def objective(s: SurrogateInputs) -> float:
    """Aggregate surrogate: token sums (not means) averaged over the group."""
    g = len(s.advantages)
    if len(s.ratios) != g or len(s.kl) != g:
        raise ShapeMismatch("ratios, advantages and kl must agree on the response count")
    total = 0.0
    for ratios_i, kl_i, a_i in zip(s.ratios, s.kl, s.advantages):
        if len(ratios_i) != len(kl_i):
            raise ShapeMismatch("ratios and kl must share token counts per response")
        for rho, kl in zip(ratios_i, kl_i):
            total += clipped_term(rho, a_i, s.epsilon_clip) - s.beta_kl * kl
    return total / g


def grpo_advantages_reference(rewards: Sequence[float]) -> list[float]:
    """Standard-GRPO advantages: centered and divided by the population
    standard deviation. Ablation reference only."""
    if len(rewards) < 2:
        raise ValueError("reference advantages need a group of at least two")
    mean = sum(rewards) / len(rewards)
    variance = sum((r - mean) ** 2 for r in rewards) / len(rewards)
    if variance == 0.0:
        raise ZeroVariance("rewards are constant across the group")
    std = math.sqrt(variance)
    return [(r - mean) / std for r in rewards]
