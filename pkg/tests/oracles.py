"""Independent reference computations used only by the tests."""

from __future__ import annotations

import numpy as np


def charpoly(m: np.ndarray) -> np.ndarray:
    """Characteristic polynomial coefficients (highest degree first) by Faddeev-LeVerrier."""
    n = m.shape[0]
    coeffs = [1.0]
    mk = np.zeros_like(m, dtype=float)
    eye = np.eye(n)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[-1] * eye
        coeffs.append(-np.trace(m @ mk) / k)
    return np.array(coeffs)


def _polish(coeffs: np.ndarray, x: float, steps: int = 50) -> float:
    p = np.poly1d(coeffs)
    dp = p.deriv()
    for _ in range(steps):
        d = dp(x)
        if d == 0:
            break
        step = p(x) / d
        x -= step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    return x


def charpoly_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Sorted real roots of the characteristic polynomial, Newton-polished."""
    c = charpoly(np.asarray(m, dtype=float))
    roots = np.sort(np.roots(c).real)
    return np.sort([_polish(c, r) for r in roots])


def random_symmetric(rng: np.random.Generator, order: int) -> np.ndarray:
    a = rng.uniform(-1.0, 1.0, (order, order))
    return (a + a.T) / 2.0
