"""Shared sampling helpers for the test suite."""

import numpy as np


def random_ball_points(rng: np.random.Generator, count: int, n: int, radius: float) -> np.ndarray:
    y = rng.normal(size=(count, n))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return y * rng.uniform(0.0, radius, size=(count, 1))


def random_orthogonal(rng: np.random.Generator, m: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(m, m)))
    return q * np.sign(np.diag(r))
