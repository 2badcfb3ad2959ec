"""One-dimensional pseudospectral building blocks.

Gauss-Legendre and Legendre-Gauss-Lobatto nodes, barycentric interpolation,
and collocation differentiation matrices, all deterministic.  Used for the
nonperiodic coordinate of cylinder parametrizations; the periodic coordinate
is always handled by equispaced grids and FFTs.
"""

from __future__ import annotations

import numpy as np


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def lobatto(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Legendre-Gauss-Lobatto nodes and weights on [a, b] (n >= 2 points).

    Interior nodes are the roots of P'_{n-1}; weights use the standard
    closed form 2 / (n (n-1) P_{n-1}(x)^2).
    """
    if n < 2:
        raise ValueError("need at least two Lobatto points")
    interior = np.polynomial.Legendre.basis(n - 1).deriv().roots()
    x = np.concatenate(([-1.0], np.real(interior), [1.0]))
    Pn1 = np.polynomial.Legendre.basis(n - 1)(x)
    w = 2.0 / (n * (n - 1) * Pn1**2)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def barycentric_weights(x: np.ndarray) -> np.ndarray:
    """Barycentric weights of distinct nodes, normalized to unit max.

    Computed through log-magnitudes so that n ~ 100 node sets do not overflow.
    """
    x = np.asarray(x, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    logs = -np.sum(np.log(np.abs(diff)), axis=1)
    signs = np.prod(np.sign(diff), axis=1)
    b = signs * np.exp(logs - np.max(logs))
    return b


def diff_matrix(x: np.ndarray) -> np.ndarray:
    """Polynomial collocation differentiation matrix on arbitrary nodes."""
    x = np.asarray(x, dtype=float)
    b = barycentric_weights(x)
    n = len(x)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (b[j] / b[i]) / (x[i] - x[j])
    # negative-sum trick keeps row sums exactly zero
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


def interp_matrix(x: np.ndarray, xq: np.ndarray) -> np.ndarray:
    """Barycentric interpolation matrix from nodes x to query points xq."""
    x = np.asarray(x, dtype=float)
    xq = np.atleast_1d(np.asarray(xq, dtype=float))
    b = barycentric_weights(x)
    P = np.zeros((len(xq), len(x)))
    for q, t in enumerate(xq):
        hit = np.flatnonzero(np.isclose(t, x, rtol=0.0, atol=1e-14))
        if hit.size:
            P[q, hit[0]] = 1.0
            continue
        terms = b / (t - x)
        P[q] = terms / np.sum(terms)
    return P


def fourier_diff(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Spectral derivative along an equispaced periodic axis of period 2*pi."""
    n = values.shape[axis]
    freq = np.fft.fftfreq(n, d=1.0 / n)
    coeff = np.fft.fft(values, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = n
    coeff *= (1j * freq).reshape(shape)
    out = np.fft.ifft(coeff, axis=axis)
    return out.real if np.isrealobj(values) else out
