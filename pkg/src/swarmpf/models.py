"""State-space models used by the experiments, behind one interface.

Two models are provided:

* LinearGauss1D - random-walk state with additive Gaussian measurement noise.
* ConstantVelocity2D - planar constant-velocity motion ([px, vx, py, vy])
  observed by a fixed sensor at the origin through noisy range and bearing.

Both expose vectorized transition sampling and likelihood evaluation over
(n, dim) state blocks so filters can run without per-particle Python loops.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def wrap_angle(theta):
    """Wrap angles into (-pi, pi]."""
    r = np.mod(theta, 2.0 * np.pi)
    return np.where(r > np.pi, r - 2.0 * np.pi, r)


def _gauss_pdf(residual, sigma):
    z = residual / sigma
    return np.exp(-0.5 * z * z) / (sigma * _SQRT_2PI)


class StateSpaceModel(ABC):
    """Transition sampler + likelihood evaluator + observation generator."""

    dim_x: int
    dim_z: int

    @abstractmethod
    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        """Draw the ground-truth initial state."""

    @abstractmethod
    def transition_sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Advance states one step through the transition prior.

        Accepts a single state (dim_x,) or a block (n, dim_x) and returns
        the same shape.
        """

    @abstractmethod
    def observe(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Generate a noisy observation of a single state (dim_x,)."""

    @abstractmethod
    def likelihood(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Observation density p(z | x), vectorized over state rows."""

    @abstractmethod
    def initial_cloud(self, z0: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n particle states around the first observation (shape (n, dim_x))."""


@dataclass
class LinearGauss1D(StateSpaceModel):
    """x_k = x_{k-1} + N(0, sigma1^2); z_k = x_k + N(0, sigma2^2)."""

    sigma1: float = 0.5
    sigma2: float = 1.0
    x0_mean: float = 0.0
    x0_std: float = 1.0

    dim_x = 1
    dim_z = 1

    def __post_init__(self):
        # Zero is the deterministic noise-free limit used by degeneracy
        # tests; likelihood evaluation then requires sigma2 > 0.
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("noise stds must be nonnegative")

    def initial_state(self, rng):
        return np.array([self.x0_mean + self.x0_std * rng.standard_normal()])

    def transition_sample(self, x, rng):
        x = np.asarray(x, dtype=float)
        return x + self.sigma1 * rng.standard_normal(x.shape)

    def observe(self, x, rng):
        return np.asarray(x, dtype=float) + self.sigma2 * rng.standard_normal(1)

    def likelihood(self, x, z):
        x = np.asarray(x, dtype=float)
        residual = np.atleast_2d(x)[:, 0] - z[0]
        out = _gauss_pdf(residual, self.sigma2)
        return out if x.ndim == 2 else float(out[0])

    def initial_cloud(self, z0, n, rng):
        return z0[0] + self.sigma2 * rng.standard_normal((n, 1))


@dataclass
class ConstantVelocity2D(StateSpaceModel):
    """Constant-velocity motion with range/bearing observations.

    State layout is [px, vx, py, vy]. Process noise follows the discrete
    white-noise-acceleration construction: an independent accel a ~ N(0,
    sigma_a^2) per axis enters as (dt^2/2 * a, dt * a). The sensor sits at
    the origin; bearing noise is configured in degrees and converted to
    radians internally. Bearings are wrapped into (-pi, pi].
    """

    dt: float = 1.0
    sigma_a: float = 0.1
    sigma_r: float = 1.0
    sigma_theta_deg: float = 1.0
    x0: tuple = (0.0, 1.0, 0.0, 1.0)
    velocity_prior_std: float = 2.0

    dim_x = 4
    dim_z = 2

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if min(self.sigma_a, self.sigma_r, self.sigma_theta_deg) < 0:
            raise ValueError("noise stds must be nonnegative")

    @property
    def sigma_theta(self) -> float:
        return math.radians(self.sigma_theta_deg)

    def initial_state(self, rng):
        return np.asarray(self.x0, dtype=float).copy()

    def transition_sample(self, x, rng):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xs = np.atleast_2d(x)
        dt = self.dt
        out = np.empty_like(xs)
        accel = self.sigma_a * rng.standard_normal((xs.shape[0], 2))
        out[:, 0] = xs[:, 0] + xs[:, 1] * dt + 0.5 * dt * dt * accel[:, 0]
        out[:, 1] = xs[:, 1] + dt * accel[:, 0]
        out[:, 2] = xs[:, 2] + xs[:, 3] * dt + 0.5 * dt * dt * accel[:, 1]
        out[:, 3] = xs[:, 3] + dt * accel[:, 1]
        return out[0] if single else out

    def _range_bearing(self, xs):
        r = np.hypot(xs[:, 0], xs[:, 2])
        theta = np.arctan2(xs[:, 2], xs[:, 0])
        return r, theta

    def observe(self, x, rng):
        xs = np.atleast_2d(np.asarray(x, dtype=float))
        r, theta = self._range_bearing(xs)
        z_r = r[0] + self.sigma_r * rng.standard_normal()
        z_theta = wrap_angle(theta[0] + self.sigma_theta * rng.standard_normal())
        return np.array([z_r, float(z_theta)])

    def likelihood(self, x, z):
        x = np.asarray(x, dtype=float)
        xs = np.atleast_2d(x)
        r, theta = self._range_bearing(xs)
        lik = _gauss_pdf(z[0] - r, self.sigma_r) * _gauss_pdf(
            wrap_angle(z[1] - theta), self.sigma_theta
        )
        return lik if x.ndim == 2 else float(lik[0])

    def initial_cloud(self, z0, n, rng):
        # Position implied by the range/bearing fix, spread consistent with
        # the measurement noise; broad zero-mean velocity prior.
        px = z0[0] * math.cos(z0[1])
        py = z0[0] * math.sin(z0[1])
        pos_std = math.hypot(self.sigma_r, z0[0] * self.sigma_theta)
        cloud = np.empty((n, 4))
        cloud[:, 0] = px + pos_std * rng.standard_normal(n)
        cloud[:, 2] = py + pos_std * rng.standard_normal(n)
        cloud[:, 1] = self.velocity_prior_std * rng.standard_normal(n)
        cloud[:, 3] = self.velocity_prior_std * rng.standard_normal(n)
        return cloud


def simulate_trajectory(model: StateSpaceModel, T: int, rng: np.random.Generator):
    """Generate T ground-truth states and matching observations.

    Returns (states, observations) with shapes (T, dim_x) and (T, dim_z).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    states = np.empty((T, model.dim_x))
    obs = np.empty((T, model.dim_z))
    states[0] = model.initial_state(rng)
    obs[0] = model.observe(states[0], rng)
    for t in range(1, T):
        states[t] = model.transition_sample(states[t - 1], rng)
        obs[t] = model.observe(states[t], rng)
    return states, obs
