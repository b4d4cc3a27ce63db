"""Bootstrap particle filter step: predict, weight, resample, estimate.

The fixed-size recursion lives in pf_step. When the filter runs with
KLD-adaptive sizing instead, the resampling draw is replaced by
kld.kld_sample and the per-step pipeline is composed in the bench module;
pf_step is the fixed-N baseline API.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import AllZeroWeights, ParticleSet, normalize_weights, weighted_mean
from .models import StateSpaceModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PfConfig:
    """Bootstrap PF settings. Only systematic resampling is supported."""

    resample_scheme: str = "systematic"
    ess_threshold: float = 0.5

    def __post_init__(self):
        if self.resample_scheme != "systematic":
            raise ValueError("only systematic resampling is supported")
        if not 0.0 < self.ess_threshold <= 1.0:
            raise ValueError("ess_threshold must be in (0, 1]")


def effective_sample_size(weights: np.ndarray) -> float:
    return 1.0 / float(np.sum(np.square(weights)))


def predict(pset: ParticleSet, model: StateSpaceModel, rng: np.random.Generator) -> ParticleSet:
    """Advance every particle through the transition prior; weights unchanged."""
    return ParticleSet(model.transition_sample(pset.states, rng), pset.weights)


def reweight(pset: ParticleSet, z: np.ndarray, model: StateSpaceModel) -> ParticleSet:
    """Bayesian update: w_i proportional to w_i * p(z | x_i), renormalized.

    Raises AllZeroWeights when the total updated mass vanishes; the filter
    layer decides how to recover.
    """
    lik = model.likelihood(pset.states, z)
    return ParticleSet(pset.states, normalize_weights(pset.weights * lik))


def systematic_resample(weights: np.ndarray, n_out: int, rng: np.random.Generator) -> np.ndarray:
    """Ancestor indices from a stratified comb with a single uniform offset.

    Per-index copy counts deviate from n_out * w_i by less than one.
    """
    if n_out < 1:
        raise ValueError("n_out must be >= 1")
    positions = (rng.random() + np.arange(n_out)) / n_out
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right")


def pf_step(
    pset: ParticleSet,
    z: np.ndarray,
    model: StateSpaceModel,
    config: PfConfig,
    rng: np.random.Generator,
):
    """One fixed-N bootstrap step; returns (new set, weighted-mean estimate).

    Resampling (to the same size, equal weights) triggers when the ESS
    fraction drops below the configured threshold. A total weight collapse
    resets to uniform weights and is logged rather than raised.
    """
    predicted = predict(pset, model, rng)
    try:
        updated = reweight(predicted, z, model)
    except AllZeroWeights:
        log.warning("likelihood collapsed to zero for all particles; resetting to uniform")
        updated = ParticleSet.uniform(predicted.states)
    n = updated.size
    # <= so a threshold of 1.0 resamples every step (ESS fraction is <= 1).
    if effective_sample_size(updated.weights) / n <= config.ess_threshold:
        idx = systematic_resample(updated.weights, n, rng)
        updated = ParticleSet.uniform(updated.states[idx])
    return updated, weighted_mean(updated)
