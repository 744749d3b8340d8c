"""Streamline artificial diffusion.

The stabilized tensor is ``mu * I + mu * Phi(Pe) * beta beta^T`` where
``beta`` is the unit vector along the element advection velocity and
``Pe`` the local Peclet number. Two stabilization functions are provided:
the exponentially fitted one, ``Phi(X) = X - 1 + Be(2X)``, and upwind,
``Phi(X) = X``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import Stabilization

# below this |t| the Bernoulli function is evaluated by its Taylor series
BERNOULLI_SERIES = 1e-4
# below this X the SG function is evaluated by its Taylor series
PHI_SERIES = 1e-3
# advection speeds below this are treated as zero
ZERO_VELOCITY = 1e-14


def bernoulli(t):
    """Be(t) = t / (exp(t) - 1), with Be(0) = 1."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < BERNOULLI_SERIES
    ts = np.where(small, 1.0, t)
    with np.errstate(over="ignore"):
        # t e^{-t} / (1 - e^{-t}) for t > 0 keeps e^{-t} bounded
        pos = ts * np.exp(-ts) / -np.expm1(-ts)
        neg = ts / np.expm1(ts)
    out = np.where(ts > 0, pos, neg)
    series = 1.0 - t / 2.0 + t**2 / 12.0 - t**4 / 720.0
    out = np.where(small, series, out)
    return out[()] if out.ndim == 0 else out


def phi(x, mode: Stabilization):
    """Stabilization function. ``x`` must be nonnegative."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("stabilization function is defined for X >= 0 only")
    mode = Stabilization(mode)
    if mode is Stabilization.NONE:
        out = np.zeros_like(x)
    elif mode is Stabilization.UPWIND:
        out = x.copy()
    else:
        series = x**2 / 3.0 - x**4 / 45.0 + 2.0 * x**6 / 945.0
        out = np.where(x < PHI_SERIES, series, x - 1.0 + bernoulli(2.0 * x))
    return out[()] if out.ndim == 0 else out


def local_peclet(edges, v, mu):
    """Pe_K = max over the six edges of |v . e| / (2 mu).

    ``edges`` is (..., 6, 3), ``v`` (..., 3), ``mu`` (...).
    """
    edges = np.asarray(edges, dtype=float)
    v = np.asarray(v, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("mu must be positive")
    proj = np.abs(np.einsum("...ek,...k->...e", edges, v))
    return proj.max(axis=-1) / (2.0 * mu)


def diameter_peclet(h, v, mu):
    """|v| h / (2 mu): the Peclet number based on the element diameter."""
    return np.linalg.norm(np.asarray(v, dtype=float), axis=-1) * np.asarray(h) / (
        2.0 * np.asarray(mu)
    )


@dataclass(frozen=True)
class StabTensor:
    """Stabilized diffusion tensor of one element (or a stack of elements)."""

    tensor: np.ndarray
    mu: np.ndarray
    peclet: np.ndarray
    beta: np.ndarray
    phi: np.ndarray


def streamline(v):
    v = np.asarray(v, dtype=float)
    speed = np.linalg.norm(v, axis=-1)
    moving = speed >= ZERO_VELOCITY
    safe = np.where(moving, speed, 1.0)
    return np.where(moving[..., None], v / safe[..., None], 0.0)


def stabilized_tensor(mu, v, peclet, mode: Stabilization) -> StabTensor:
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("mu must be positive")
    beta = streamline(v)
    f = phi(peclet, mode)
    f = np.where(np.linalg.norm(beta, axis=-1) > 0, f, 0.0)
    eye = np.broadcast_to(np.eye(3), mu.shape + (3, 3))
    tensor = mu[..., None, None] * (
        eye + f[..., None, None] * np.einsum("...i,...j->...ij", beta, beta)
    )
    return StabTensor(
        tensor=tensor, mu=mu, peclet=np.asarray(peclet, dtype=float), beta=beta, phi=f
    )


def tensor_spectrum(stab: StabTensor) -> np.ndarray:
    """Eigenvalues in ascending order, (..., 3): (mu, mu, mu (1 + Phi))."""
    mu = stab.mu
    return np.stack([mu, mu, mu * (1.0 + stab.phi)], axis=-1)
