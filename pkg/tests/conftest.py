"""Shared numeric helpers for the test suite.

The dense builders here are deliberately independent of the package's
sparse machinery so they can serve as brute-force oracles.
"""

from __future__ import annotations

import numpy as np


def dense_destroy(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def dense_embed(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def dense_mode_op(dims: tuple[int, ...], axis: int, op: np.ndarray) -> np.ndarray:
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[axis] = op
    return dense_embed(mats)


def random_pure(rng: np.random.Generator, dim: int) -> np.ndarray:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vec / np.linalg.norm(vec)
