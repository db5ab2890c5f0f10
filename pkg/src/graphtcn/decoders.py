"""Decoders from spatio-temporal embeddings to future displacement sets.

Two heads share the convention that the network predicts offsets from
each pedestrian's last observed position, converted to absolute
coordinates in one step at the end:

* the sampling head concatenates one shared noise block (identical for
  every pedestrian within a draw, fresh per draw) to the embedding and
  applies an affine map;
* the latent head encodes the ground-truth future into a Gaussian
  posterior during training, reparameterizes, and decodes the latent
  concatenated with the flattened embedding. At inference the latent
  comes from the standard normal prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ContractError, ShapeError
from .init import add_affine


@dataclass
class PredictionSet:
    """M sampled future trajectories in absolute world coordinates."""

    trajectories: np.ndarray  # [M, N, T_pred, 2]
    origin: np.ndarray        # [N, 2], last observed position
    sample_count: int

    def __post_init__(self):
        self.trajectories = np.asarray(self.trajectories, dtype=np.float64)
        self.origin = np.asarray(self.origin, dtype=np.float64)
        if self.sample_count < 1 or self.trajectories.shape[0] != self.sample_count:
            raise ContractError(
                f"{self.trajectories.shape[0]} trajectories for sample_count {self.sample_count}"
            )
        if not np.isfinite(self.trajectories).all():
            raise ContractError("non-finite prediction")


def sample_shared_noise(rng: np.random.Generator, t_obs: int, noise_dim: int) -> np.ndarray:
    """One standard-normal noise block, shared by all pedestrians in a draw."""
    return rng.standard_normal((t_obs, noise_dim))


def reparameterize(mu: T.Tensor, sigma: T.Tensor, eps) -> T.Tensor:
    """z = mu + sigma * eps with gradients into mu and sigma.

    ``eps`` is either a Generator (drawn here) or a pre-drawn array, which
    keeps gradient checks deterministic.
    """
    if isinstance(eps, np.random.Generator):
        eps = eps.standard_normal(mu.data.shape)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != mu.data.shape:
        raise ShapeError(f"eps {eps.shape} vs mu {mu.data.shape}")
    return T.add(mu, T.mul(sigma, T.Tensor(eps)))


def relative_to_absolute(delta: T.Tensor, origin: np.ndarray) -> T.Tensor:
    """Offsets-from-origin [N, T_pred, 2] -> absolute positions."""
    n, t_pred = delta.data.shape[0], delta.data.shape[1]
    if origin.shape != (n, 2):
        raise ShapeError(f"origin {origin.shape} for {n} pedestrians")
    tiled = np.repeat(origin[:, None, :], t_pred, axis=1)
    return T.add(delta, T.Tensor(tiled))


class _Head:
    """Affine head, optionally with one hidden layer when configured."""

    def __init__(self, store, prefix: str, in_dim: int, out_dim: int,
                 hidden: int, slope: float, rng):
        self.slope = slope
        if hidden > 0:
            self.h_W, self.h_b = add_affine(store, f"{prefix}.hidden", in_dim, hidden, rng)
            in_dim = hidden
        else:
            self.h_W = None
        self.W, self.b = add_affine(store, prefix, in_dim, out_dim, rng)

    def forward(self, x: T.Tensor) -> T.Tensor:
        if self.h_W is not None:
            x = T.leaky_relu(T.affine(x, self.h_W, self.h_b), self.slope)
        return T.affine(x, self.W, self.b)


class MlpDecoder:
    """Shared-noise decoder: concat(embedding, noise) -> offsets."""

    def __init__(self, store, prefix: str, t_obs: int, t_pred: int,
                 feat_dim: int, noise_dim: int, rng, hidden: int = 0, slope: float = 0.2):
        self.t_obs = t_obs
        self.t_pred = t_pred
        self.feat_dim = feat_dim
        self.noise_dim = noise_dim
        self.head = _Head(store, f"{prefix}.out", t_obs * (feat_dim + noise_dim),
                          t_pred * 2, hidden, slope, rng)

    def forward(self, h: T.Tensor, noise: np.ndarray) -> T.Tensor:
        """h [N, T_obs, F2], noise [T_obs, F3] -> offsets [N, T_pred, 2]."""
        n = h.data.shape[0]
        if h.data.shape != (n, self.t_obs, self.feat_dim):
            raise ShapeError(f"embedding {h.shape}, expected [N, {self.t_obs}, {self.feat_dim}]")
        if noise.shape != (self.t_obs, self.noise_dim):
            raise ShapeError(f"noise {noise.shape}, expected {(self.t_obs, self.noise_dim)}")
        z = T.repeat_axis(T.Tensor(noise[None, :, :]), axis=0, times=n)
        joint = T.concat([h, z], axis=2)
        flat = T.reshape(joint, (n, self.t_obs * (self.feat_dim + self.noise_dim)))
        out = self.head.forward(flat)
        return T.reshape(out, (n, self.t_pred, 2))


class CvaeDecoder:
    """Latent-variable decoder with a ground-truth-future posterior."""

    def __init__(self, store, prefix: str, t_obs: int, t_pred: int,
                 feat_dim: int, latent_dim: int, rng, hidden: int = 0, slope: float = 0.2):
        self.t_obs = t_obs
        self.t_pred = t_pred
        self.feat_dim = feat_dim
        self.latent_dim = latent_dim
        self.flat_dim = t_obs * feat_dim
        self.fut_W, self.fut_b = add_affine(store, f"{prefix}.future", t_pred * 2, latent_dim, rng)
        # One affine produces both moments; zero bias starts sigma at 1.
        self.post_W, self.post_b = add_affine(
            store, f"{prefix}.posterior", self.flat_dim + latent_dim, 2 * latent_dim, rng
        )
        self.head = _Head(store, f"{prefix}.out", self.flat_dim + latent_dim,
                          t_pred * 2, hidden, slope, rng)

    def flatten_embedding(self, h: T.Tensor) -> T.Tensor:
        n = h.data.shape[0]
        if h.data.shape != (n, self.t_obs, self.feat_dim):
            raise ShapeError(f"embedding {h.shape}, expected [N, {self.t_obs}, {self.feat_dim}]")
        return T.reshape(h, (n, self.flat_dim))

    def encode_posterior(self, h_flat: T.Tensor, future_delta: T.Tensor):
        """Returns (mu, sigma, logvar), each [N, latent_dim]."""
        n = h_flat.data.shape[0]
        fut_flat = T.reshape(future_delta, (n, self.t_pred * 2))
        fut_enc = T.affine(fut_flat, self.fut_W, self.fut_b)
        moments = T.affine(T.concat([h_flat, fut_enc], axis=1), self.post_W, self.post_b)
        mu = T.slice_axis(moments, 1, 0, self.latent_dim)
        logvar = T.slice_axis(moments, 1, self.latent_dim, 2 * self.latent_dim)
        sigma = T.exp(T.mul(logvar, 0.5))
        return mu, sigma, logvar

    def decode(self, h_flat: T.Tensor, z: T.Tensor) -> T.Tensor:
        n = h_flat.data.shape[0]
        if z.data.shape != (n, self.latent_dim):
            raise ShapeError(f"latent {z.shape}, expected [N, {self.latent_dim}]")
        out = self.head.forward(T.concat([h_flat, z], axis=1))
        return T.reshape(out, (n, self.t_pred, 2))
