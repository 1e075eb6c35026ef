"""Constructors for common channel specs.

Component laws are indexed ``[x1, x2, out]``; ``compose`` multiplies them
into a relay-eavesdropper law with conditionally independent outputs.
"""

from __future__ import annotations

import numpy as np

from .prob import ChannelSpec


def bsc(flip: float) -> np.ndarray:
    return np.array([[1.0 - flip, flip], [flip, 1.0 - flip]])


def bec(erasure: float) -> np.ndarray:
    """Binary erasure channel; output 2 is the erasure symbol."""
    return np.array([[1.0 - erasure, 0.0, erasure], [0.0, 1.0 - erasure, erasure]])


def from_x1(kernel, n_x2: int) -> np.ndarray:
    """Lift ``kernel[x1, out]`` to a component that ignores x2."""
    kernel = np.asarray(kernel, dtype=float)
    return np.repeat(kernel[:, None, :], n_x2, axis=1)


def constant(n_x1: int, n_x2: int, dist) -> np.ndarray:
    """Output drawn from ``dist`` regardless of the inputs."""
    dist = np.asarray(dist, dtype=float)
    return np.broadcast_to(dist, (n_x1, n_x2, dist.size)).copy()


def compose(relay, bob, eve) -> ChannelSpec:
    """Law with ``y2``, ``y3``, ``z`` independent given ``(x1, x2)``."""
    relay, bob, eve = (np.asarray(a, dtype=float) for a in (relay, bob, eve))
    return ChannelSpec(np.einsum("abc,abd,abe->abcde", relay, bob, eve))


def random_channel(rng: np.random.Generator, sizes: dict[str, int], concentration=1.0) -> ChannelSpec:
    """Dirichlet-distributed joint law of ``(y2, y3, z)`` for each input pair."""
    shape = (sizes["x1"], sizes["x2"], sizes["y2"], sizes["y3"], sizes["z"])
    nout = shape[2] * shape[3] * shape[4]
    rows = rng.dirichlet(np.full(nout, concentration), size=shape[0] * shape[1])
    return ChannelSpec(rows.reshape(shape))


def wiretap(bob_kernel, eve_kernel) -> ChannelSpec:
    """Relay-free wiretap channel: ``|X2| = |Y2| = 1``."""
    bob = from_x1(bob_kernel, 1)
    eve = from_x1(eve_kernel, 1)
    return compose(np.ones(bob.shape[:2] + (1,)), bob, eve)
