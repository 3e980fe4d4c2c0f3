"""Scalar special functions and Rayleigh primitives.

Everything delegates to `scipy.special` (Cephes). `bessel_j0` uses a rational
approximation for |x| <= 5 and the Hankel asymptotic expansion beyond it; the
incomplete gamma pair switches from the power series to the continued fraction
at x = a + 1. Both are well inside the accuracy the Monte-Carlo tolerances need.

All functions accept scalars or numpy arrays and broadcast like numpy ufuncs.
"""

from __future__ import annotations

from typing import Union
from typing_extensions import TypeAlias

import numpy as np
from scipy import special

ArrayLike: TypeAlias = Union[float, np.ndarray]


def _check_positive(name: str, value: ArrayLike) -> None:
    if np.any(np.asarray(value) <= 0):
        raise ValueError(f"`{name}` must be > 0, got {value!r}.")


def _check_nonnegative(name: str, value: ArrayLike) -> None:
    if np.any(np.asarray(value) < 0):
        raise ValueError(f"`{name}` must be >= 0, got {value!r}.")


def si(x: ArrayLike) -> ArrayLike:
    """Unnormalized sinc, sin(x)/x with si(0) = 1."""
    return np.sinc(np.asarray(x, dtype=np.float64) / np.pi)[()]


def phase_error_char(p: int, L: int) -> float:
    """Characteristic function of the uniform phase error on [-pi/L, pi/L].

    Args:
        p: Order of the characteristic function. The function is even in `p`.
        L: Number of phase quantization levels.

    Returns:
        E[exp(j p dphi)] = si(p pi / L), which is real.
    """
    if L < 1:
        raise ValueError(f"`L` must be >= 1, got {L}.")
    return float(si(p * np.pi / L))


def bessel_j0(x: ArrayLike) -> ArrayLike:
    """Zero-order Bessel function of the first kind."""
    return special.j0(x)


def gamma_fn(a: ArrayLike) -> ArrayLike:
    """Gamma function, restricted to positive arguments."""
    _check_positive("a", a)
    return special.gamma(a)


def upper_incomplete_gamma(a: ArrayLike, x: ArrayLike) -> ArrayLike:
    """Non-regularized upper incomplete gamma function Gamma(a, x)."""
    _check_positive("a", a)
    _check_nonnegative("x", x)
    return special.gammaincc(a, x) * special.gamma(a)


def regularized_lower_gamma(a: ArrayLike, x: ArrayLike) -> ArrayLike:
    """P(a, x), the CDF of a unit-scale Gamma(a) variable evaluated at x."""
    _check_positive("a", a)
    _check_nonnegative("x", x)
    return special.gammainc(a, x)


def rayleigh_cdf(x: ArrayLike, beta: float) -> ArrayLike:
    """CDF of |h| for h ~ CN(0, beta)."""
    _check_positive("beta", beta)
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    return (-np.expm1(-(x**2) / beta))[()]


def rayleigh_pdf(x: ArrayLike, beta: float) -> ArrayLike:
    """Density 2x/beta exp(-x^2/beta) of |h| for h ~ CN(0, beta)."""
    _check_positive("beta", beta)
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0, 0.0, 2 * x / beta * np.exp(-(x**2) / beta))[()]


def rayleigh_quantile(q: ArrayLike, beta: float) -> ArrayLike:
    """Inverse of `rayleigh_cdf`: sqrt(-beta ln(1 - q)).

    Raises:
        ValueError: If `q` lies outside [0, 1) or `beta` is not positive.
    """
    _check_positive("beta", beta)
    q = np.asarray(q, dtype=np.float64)
    if np.any((q < 0) | (q >= 1)):
        raise ValueError(f"`q` must lie in [0, 1), got {q!r}.")
    return np.sqrt(-beta * np.log1p(-q))[()]
