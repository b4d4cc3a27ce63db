"""Shared numeric primitives: weighted particle sets, weight handling, RNG streams.

States are plain 1-D float64 arrays; a population is stored row-wise in a
ParticleSet. Weights live in linear scale (the Gaussian likelihoods used by
the bundled models do not underflow at the noise levels of interest); a total
likelihood collapse is signalled explicitly via AllZeroWeights instead of
being papered over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_SUM_TOL = 1e-12


class AllZeroWeights(ValueError):
    """Every weight is zero: the likelihood collapsed and the caller must react."""


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return an independent Generator for (seed, stream).

    Streams are derived through Philox (counter-based), so identical
    (seed, stream) pairs reproduce the same draw sequence and distinct
    stream ids are safe to use concurrently.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


def normalize_weights(weights: np.ndarray) -> np.ndarray:
    """Rescale nonnegative weights to sum to one.

    Raises AllZeroWeights when the total mass is zero, and ValueError on
    negative or non-finite input.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-D array")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if total == 0.0:
        raise AllZeroWeights("all weights are zero")
    return w / total


@dataclass(frozen=True)
class Particle:
    """A single weighted state sample."""

    state: np.ndarray
    weight: float


@dataclass(frozen=True)
class ParticleSet:
    """Weighted samples approximating a posterior.

    states has shape (n, dim), weights shape (n,). Instances are treated as
    immutable values: every filter operation builds a new set.
    """

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ValueError("states must have shape (n, dim) with n >= 1")
        if weights.shape != (states.shape[0],):
            raise ValueError("weights must have shape (n,)")
        if not np.all(np.isfinite(states)):
            raise ValueError("states must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def particle(self, i: int) -> Particle:
        return Particle(self.states[i].copy(), float(self.weights[i]))

    def normalized(self) -> "ParticleSet":
        return ParticleSet(self.states, normalize_weights(self.weights))

    @staticmethod
    def uniform(states: np.ndarray) -> "ParticleSet":
        states = np.asarray(states, dtype=float)
        n = states.shape[0]
        return ParticleSet(states, np.full(n, 1.0 / n))


def weighted_mean(pset: ParticleSet) -> np.ndarray:
    """Componentwise sum_i w_i x_i; expects normalized weights."""
    return pset.weights @ pset.states


def weighted_covariance(pset: ParticleSet, dims=None) -> np.ndarray:
    """Weighted covariance sum_i w_i (x_i - mu)(x_i - mu)^T over selected dims.

    The result may be singular (e.g. all particles identical); consumers that
    invert it are responsible for regularization.
    """
    x = pset.states if dims is None else pset.states[:, list(dims)]
    mu = pset.weights @ x
    centered = x - mu
    return (centered * pset.weights[:, None]).T @ centered
