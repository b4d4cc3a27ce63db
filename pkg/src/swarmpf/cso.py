"""Chicken-swarm rejuvenation of a weighted particle set.

Normalized weights act as fitness. Each round splits the population into
roosters (top weights, Gaussian jitter), hens (move toward a rooster and a
second leader with fitness-derived step sizes) and chicks (interpolate toward
a mother hen), then re-evaluates likelihoods at the moved positions and
renormalizes. All moves within a round reference the pre-round positions, so
the role updates are order-independent.

Weight refresh by likelihood re-evaluation is a modeling choice: moving
particles without reweighting would bias the posterior, and the refreshed
weights feed both the next round's fitness and the downstream KLD draw.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import AllZeroWeights, ParticleSet, normalize_weights
from .models import StateSpaceModel

log = logging.getLogger(__name__)

ROOSTER, HEN, CHICK = 0, 1, 2


class TooFewParticles(ValueError):
    """Role assignment needs at least three particles."""


@dataclass(frozen=True)
class CsoConfig:
    """Role fractions, jitter scale, step-size law, and interpolation cap.

    s1_override / s2_override pin the hen step sizes instead of deriving
    them from fitness; pinning both to zero together with rooster_sigma = 0
    and lambda_max = 0 makes the kernel the identity, which must reproduce
    the plain PF bit-for-bit.
    """

    rooster_frac: float = 0.2
    hen_frac: float = 0.4
    rooster_sigma: float = 0.1
    lambda_max: float = 0.5
    fitness_eps: float = 1e-9
    rounds: int = 1
    s1_override: float | None = None
    s2_override: float | None = None

    def __post_init__(self):
        if not (0.0 < self.rooster_frac < 1.0 and 0.0 < self.hen_frac < 1.0):
            raise ValueError("role fractions must be in (0, 1)")
        if self.rooster_frac + self.hen_frac >= 1.0:
            raise ValueError("rooster_frac + hen_frac must be < 1")
        # lambda_max == 0 is the degenerate identity kernel used for the
        # PF-equivalence check; normal operation uses (0, 1).
        if not 0.0 <= self.lambda_max < 1.0:
            raise ValueError("lambda_max must be in [0, 1)")
        if self.rooster_sigma < 0:
            raise ValueError("rooster_sigma must be >= 0")
        if self.fitness_eps <= 0:
            raise ValueError("fitness_eps must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class RoleAssignment:
    """Partition of the population plus leader wiring.

    All index arrays refer to original particle positions. rooster_leader
    and other_leader align with `hens`; mother aligns with `chicks`. The
    second leader is another hen when one exists, otherwise a rooster.
    """

    role: np.ndarray
    roosters: np.ndarray
    hens: np.ndarray
    chicks: np.ndarray
    rooster_leader: np.ndarray
    other_leader: np.ndarray
    mother: np.ndarray


def assign_roles(weights: np.ndarray, config: CsoConfig, rng: np.random.Generator) -> RoleAssignment:
    """Rank by weight (ties broken by particle index) and wire up leaders."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    if n < 3:
        raise TooFewParticles(f"need at least 3 particles, got {n}")
    order = np.lexsort((np.arange(n), -w))
    n_roosters = min(math.ceil(config.rooster_frac * n), n)
    n_hens = min(math.ceil(config.hen_frac * n), n - n_roosters)

    roosters = order[:n_roosters]
    hens = order[n_roosters : n_roosters + n_hens]
    chicks = order[n_roosters + n_hens :]
    role = np.empty(n, dtype=np.int8)
    role[roosters] = ROOSTER
    role[hens] = HEN
    role[chicks] = CHICK

    n_chicks = chicks.size
    if n_hens > 0:
        rooster_leader = roosters[rng.integers(0, n_roosters, size=n_hens)]
        if n_hens > 1:
            pick = rng.integers(0, n_hens - 1, size=n_hens)
            pick += pick >= np.arange(n_hens)  # skip self
            other_leader = hens[pick]
        else:
            other_leader = roosters[rng.integers(0, n_roosters, size=1)]
    else:
        rooster_leader = np.empty(0, dtype=np.int64)
        other_leader = np.empty(0, dtype=np.int64)
    if n_chicks > 0:
        mother = hens[rng.integers(0, n_hens, size=n_chicks)]
    else:
        mother = np.empty(0, dtype=np.int64)
    return RoleAssignment(role, roosters, hens, chicks, rooster_leader, other_leader, mother)


def rooster_update(x, config: CsoConfig, rng: np.random.Generator):
    """Zero-mean Gaussian jitter with per-dimension std rooster_sigma."""
    x = np.asarray(x, dtype=float)
    return x + config.rooster_sigma * rng.standard_normal(x.shape)


def hen_update(x_i, x_r, x_h, f_i, f_r, f_h, config: CsoConfig, rng: np.random.Generator,
               r1=None, r2=None):
    """Move toward the rooster and second leader.

    x' = x + S1 r1 (x_r - x) + S2 r2 (x_h - x) with r1, r2 uniform on [0, 1],
    S1 = exp((f_i - f_r) / (|f_i| + eps)) and S2 = exp(f_h - f_i) unless the
    config pins them. r1/r2 can be fixed for tests. Accepts single states or
    (n, dim) blocks.
    """
    x_i = np.asarray(x_i, dtype=float)
    single = x_i.ndim == 1
    xi, xr, xh = np.atleast_2d(x_i), np.atleast_2d(x_r), np.atleast_2d(x_h)
    fi = np.atleast_1d(np.asarray(f_i, dtype=float))
    fr = np.atleast_1d(np.asarray(f_r, dtype=float))
    fh = np.atleast_1d(np.asarray(f_h, dtype=float))
    n = xi.shape[0]
    if r1 is None:
        r1 = rng.random(n)
    if r2 is None:
        r2 = rng.random(n)
    r1 = np.atleast_1d(np.asarray(r1, dtype=float))
    r2 = np.atleast_1d(np.asarray(r2, dtype=float))
    if config.s1_override is not None:
        s1 = np.full(n, config.s1_override)
    else:
        s1 = np.exp((fi - fr) / (np.abs(fi) + config.fitness_eps))
    if config.s2_override is not None:
        s2 = np.full(n, config.s2_override)
    else:
        s2 = np.exp(fh - fi)
    out = xi + (s1 * r1)[:, None] * (xr - xi) + (s2 * r2)[:, None] * (xh - xi)
    return out[0] if single else out


def chick_update(x_i, x_m, config: CsoConfig, rng: np.random.Generator, lam=None):
    """Convex interpolation toward the mother: x + lambda (x_m - x), lambda ~ U[0, L]."""
    x_i = np.asarray(x_i, dtype=float)
    single = x_i.ndim == 1
    xi, xm = np.atleast_2d(x_i), np.atleast_2d(x_m)
    if lam is None:
        lam = rng.uniform(0.0, config.lambda_max, size=xi.shape[0])
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = xi + lam[:, None] * (xm - xi)
    return out[0] if single else out


def cso_rejuvenate(
    pset: ParticleSet,
    z: np.ndarray,
    model: StateSpaceModel,
    config: CsoConfig,
    rng: np.random.Generator,
) -> ParticleSet:
    """Apply `rounds` swarm rounds and refresh weights from the likelihood.

    If a round's moves drive every likelihood to zero, that round is reverted
    (pre-round positions and weights kept) and the event logged.
    """
    states = pset.states
    weights = pset.weights
    for _ in range(config.rounds):
        ra = assign_roles(weights, config, rng)
        moved = states.copy()
        if ra.roosters.size:
            moved[ra.roosters] = rooster_update(states[ra.roosters], config, rng)
        if ra.hens.size:
            moved[ra.hens] = hen_update(
                states[ra.hens],
                states[ra.rooster_leader],
                states[ra.other_leader],
                weights[ra.hens],
                weights[ra.rooster_leader],
                weights[ra.other_leader],
                config,
                rng,
            )
        if ra.chicks.size:
            moved[ra.chicks] = chick_update(states[ra.chicks], states[ra.mother], config, rng)
        lik = np.asarray(model.likelihood(moved, z), dtype=float)
        try:
            refreshed = normalize_weights(lik)
        except AllZeroWeights:
            log.warning("rejuvenation round collapsed all likelihoods; round reverted")
            continue
        states, weights = moved, refreshed
    return ParticleSet(states, weights)
