"""Shared numeric oracles for the test suite.

The quadrature oracle is deliberately independent of the library: fixed
high-order Gauss-Legendre nodes, exact for polynomial integrands of the
degrees used here and spectrally accurate for the trigonometric ones.
"""

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(256)


def integrate(fn) -> float:
    """Gauss-Legendre quadrature of fn over (-1, 1) with 256 nodes."""
    return float(np.sum(_WEIGHTS * fn(_NODES)))


def integrate_2d(fn, nodes: int = 128) -> float:
    """Tensor-product Gauss-Legendre quadrature over (-1, 1)^2."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    g1, g2 = np.meshgrid(x, x, indexing="ij")
    vals = fn(g1.ravel(), g2.ravel()).reshape(nodes, nodes)
    return float(w @ vals @ w)


def sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values[values != 0.0])
    return int(np.sum(signs[1:] != signs[:-1]))


def brute_force_rank(reference: np.ndarray, value: float) -> float:
    """Mid-rank of value among reference, by explicit counting."""
    below = int(np.sum(reference < value))
    equal = int(np.sum(reference == value))
    if equal == 0:
        rank = float(below)
    else:
        rank = below + (equal + 1) / 2.0
    return max(rank, 0.5)
