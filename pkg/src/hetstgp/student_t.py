"""Student-t observation model for the two-process regression.

The model for one response is ``y = f1 + eps * exp(f2)`` with ``eps``
standard Student-t with ``nu`` degrees of freedom, i.e. location ``f1``,
scale ``exp(f2)``.  This module provides the log-likelihood together with
every derivative the Laplace machinery needs: the score in the latent
values, the two-diagonal banded negative Hessian (stored as three
n-vectors, never dense), its expectation (the Fisher diagonals), all third
derivatives, and the degrees-of-freedom derivatives.

Writing ``u = exp(f2)``, ``z = (y - f1)/u``, ``g = 1 + z^2/nu`` and
``A = 1 + 1/nu``, the per-point identities implemented below are

    d logp/df1          =  A z / (u g)
    d logp/df2          =  (z^2 - 1) / g
    -d2 logp/df1^2      =  A/u^2 (2/g^2 - 1/g)
    -d2 logp/df1 df2    =  2 A z / (u g^2)
    -d2 logp/df2^2      =  2 A z^2 / g^2

all validated against central finite differences of the log-density in the
test suite.  Note the f2 curvature vanishes at z = 0: with a zero residual
the log-density is exactly linear in f2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "LatentState", "LikelihoodDerivatives", "digamma", "t_logpdf",
    "log_likelihood", "derivatives", "response_moments",
    "fisher_diagonals", "fisher_dnu",
]

_EULER_GAMMA = 0.5772156649015328606


def digamma(x):
    """Digamma via upward recurrence into the asymptotic regime.

    Accurate to ~1e-13 for positive arguments, which is all this model needs
    (arguments are nu/2, (nu+1)/2 and 1).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("digamma implemented for positive arguments only")
    scalar = x.ndim == 0
    x = np.atleast_1d(x).copy()
    acc = np.zeros_like(x)
    # shift up until x >= 10 so the asymptotic series converges fast
    while np.any(x < 10.0):
        small = x < 10.0
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
    inv2 = 1.0 / (x * x)
    # Bernoulli-number tail of the asymptotic expansion
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132 - inv2 * 691.0 / 32760)))))
    out = acc + np.log(x) - 0.5 / x - series
    return float(out[0]) if scalar else out


def t_logpdf(x, loc, scale, nu):
    """Log-density of the three-parameter Student-t, vectorized."""
    z = (np.asarray(x, float) - loc) / scale
    return (gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0)
            - 0.5 * np.log(np.pi * nu) - np.log(scale)
            - (nu + 1.0) / 2.0 * np.log1p(z * z / nu))


@dataclass
class LatentState:
    """Per-point location values f1 and log-scale values f2."""

    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        self.f1 = np.atleast_1d(np.asarray(self.f1, dtype=float))
        self.f2 = np.atleast_1d(np.asarray(self.f2, dtype=float))
        if self.f1.shape != self.f2.shape or self.f1.ndim != 1:
            raise ValueError("f1 and f2 must be vectors of equal length")
        if not (np.all(np.isfinite(self.f1)) and np.all(np.isfinite(self.f2))):
            raise ValueError("latent values must be finite")

    @property
    def n(self) -> int:
        return self.f1.shape[0]

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.f1, self.f2])

    @classmethod
    def from_stacked(cls, f: np.ndarray) -> "LatentState":
        f = np.asarray(f, dtype=float)
        n = f.shape[0] // 2
        return cls(f[:n], f[n:])

    @classmethod
    def constant(cls, n: int, f1: float = 0.0, f2: float = 0.0) -> "LatentState":
        return cls(np.full(n, f1), np.full(n, f2))


@dataclass
class LikelihoodDerivatives:
    """Everything the Laplace fits need at one latent state.

    The negative-Hessian bands are ``w_f1f1``, ``w_f1f2`` (the cross band)
    and ``w_f2f2``; third derivatives follow the naming ``d<band>_d<arg>``.
    ``fisher_f1``/``fisher_f2`` are the diagonals of the expected negative
    Hessian and are strictly positive for every nu > 0.
    """

    loglik: float
    grad: np.ndarray
    w_f1f1: np.ndarray
    w_f1f2: np.ndarray
    w_f2f2: np.ndarray
    fisher_f1: np.ndarray
    fisher_f2: np.ndarray
    dw1_df1: np.ndarray
    dwc_df1: np.ndarray
    dw2_df1: np.ndarray
    dw1_df2: np.ndarray
    dwc_df2: np.ndarray
    dw2_df2: np.ndarray
    dw1_dnu: np.ndarray
    dwc_dnu: np.ndarray
    dw2_dnu: np.ndarray
    dgrad_dnu: np.ndarray
    dloglik_dnu: float

    @property
    def n(self) -> int:
        return self.w_f1f1.shape[0]


def _validate(y, state, nu):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != state.f1.shape:
        raise ValueError(f"response length {y.shape} != latent length {state.f1.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite values")
    if not np.isfinite(nu) or nu <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    return y


def log_likelihood(y: np.ndarray, state: LatentState, nu: float) -> float:
    """Summed log-density of the responses given the latent values."""
    y = _validate(y, state, nu)
    return float(np.sum(t_logpdf(y, state.f1, np.exp(state.f2), nu)))


def derivatives(y: np.ndarray, state: LatentState, nu: float) -> LikelihoodDerivatives:
    """Log-likelihood with its full derivative stack at one latent state."""
    y = _validate(y, state, nu)
    u = np.exp(state.f2)
    z = (y - state.f1) / u
    g = 1.0 + z * z / nu
    A = 1.0 + 1.0 / nu
    n = y.shape[0]

    loglik = float(n * (gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * np.log(np.pi * nu))
                   - np.sum(state.f2) - (nu + 1) / 2 * np.sum(np.log1p(z * z / nu)))

    grad1 = A * z / (u * g)
    grad2 = (z * z - 1.0) / g

    w1 = A / u**2 * (2.0 / g**2 - 1.0 / g)
    wc = 2.0 * A * z / (u * g**2)
    w2 = 2.0 * A * z**2 / g**2

    fisher_f1, fisher_f2 = fisher_diagonals(state.f2, nu)

    dw1_df1 = 2.0 * A * z / (nu * u**3 * g**2) * (4.0 / g - 1.0)
    dwc_df1 = -2.0 * A / (u**2 * g**2) * (1.0 - 4.0 * z**2 / (nu * g))
    dw2_df1 = -4.0 * A * z / (u * g**2) * (1.0 - 2.0 * z**2 / (nu * g))
    # mixed third derivatives are symmetric in the differentiation order
    dw1_df2 = dwc_df1
    dwc_df2 = dw2_df1
    dw2_df2 = -4.0 * A * z**2 / g**2 * (1.0 - 2.0 * z**2 / (nu * g))

    dw1_dnu = (1.0 / (nu**2 * u**2)) * (1.0 / g - 2.0 / g**2
                                        + A * z**2 * (4.0 / g**3 - 1.0 / g**2))
    dwc_dnu = (2.0 * z / (nu**2 * u * g**2)) * (2.0 * A * z**2 / g - 1.0)
    dw2_dnu = (2.0 * z**2 / (nu**2 * g**2)) * (2.0 * A * z**2 / g - 1.0)

    dgrad1_dnu = z * (z * z - 1.0) / (u * nu**2 * g**2)
    dgrad2_dnu = z * z * (z * z - 1.0) / (nu**2 * g**2)

    dll_dnu = 0.5 * float(np.sum(digamma((nu + 1) / 2) - digamma(nu / 2) - 1.0 / nu
                                 - np.log(g) + A * z**2 / (nu * g)))

    return LikelihoodDerivatives(
        loglik=loglik,
        grad=np.concatenate([grad1, grad2]),
        w_f1f1=w1, w_f1f2=wc, w_f2f2=w2,
        fisher_f1=fisher_f1, fisher_f2=fisher_f2,
        dw1_df1=dw1_df1, dwc_df1=dwc_df1, dw2_df1=dw2_df1,
        dw1_df2=dw1_df2, dwc_df2=dwc_df2, dw2_df2=dw2_df2,
        dw1_dnu=dw1_dnu, dwc_dnu=dwc_dnu, dw2_dnu=dw2_dnu,
        dgrad_dnu=np.concatenate([dgrad1_dnu, dgrad2_dnu]),
        dloglik_dnu=dll_dnu,
    )


def fisher_diagonals(f2: np.ndarray, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of the expected negative Hessian.

    The f1 block is ``(nu+1)/(nu+3) * exp(-2 f2)``, the f2 block the
    constant ``2 nu/(nu+3)``; the cross band has zero expectation because
    location and scale are orthogonal in this model.
    """
    f2 = np.atleast_1d(np.asarray(f2, dtype=float))
    if nu <= 0:
        raise ValueError("degrees of freedom must be positive")
    return ((nu + 1.0) / (nu + 3.0) * np.exp(-2.0 * f2),
            np.full(f2.shape, 2.0 * nu / (nu + 3.0)))


def fisher_dnu(f2: np.ndarray, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of the Fisher diagonals w.r.t. nu."""
    f2 = np.atleast_1d(np.asarray(f2, dtype=float))
    return (2.0 * np.exp(-2.0 * f2) / (nu + 3.0) ** 2,
            np.full(f2.shape, 6.0 / (nu + 3.0) ** 2))


def response_moments(f1: float, f2: float, nu: float) -> tuple[float | None, float | None]:
    """Mean and variance of one response given its latent values.

    The mean exists only for nu > 1 and the variance only for nu > 2;
    nonexistent moments are returned as None rather than NaN.
    """
    if nu <= 0:
        raise ValueError("degrees of freedom must be positive")
    mean = float(f1) if nu > 1.0 else None
    var = float(np.exp(2.0 * f2) * nu / (nu - 2.0)) if nu > 2.0 else None
    return mean, var
