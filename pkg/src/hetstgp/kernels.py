"""Squared-exponential covariances and the positive-definite linear algebra layer.

The latent prior covariance of the two-process model is block diagonal,
``diag(K1, K2)``; it is kept as two n-by-n blocks throughout and is never
materialized as a dense 2n-by-2n matrix.  All prior solves, quadratic forms
and log-determinants dispatch to the blocks, which is what keeps the
per-iteration cost of mode finding at two n-cubed factorizations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

#: relative (to the signal variance) jitter added to every training gram matrix
JITTER_REL = 1e-8
#: factorization retries escalate the jitter by x10 up to this relative level
JITTER_REL_MAX = 1e-2


class FactorizationError(RuntimeError):
    """Cholesky failed even after jitter escalation (ill-conditioned kernel)."""


@dataclass(frozen=True)
class KernelSpec:
    """Squared-exponential kernel: signal variance, ARD length-scales, jitter.

    ``jitter`` is the absolute value added to the diagonal of a same-inputs
    covariance matrix.  Under the default policy it is ``JITTER_REL`` times
    the signal variance.
    """

    signal_variance: float
    length_scales: np.ndarray
    jitter: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", ls)
        if not np.isfinite(self.signal_variance) or self.signal_variance <= 0:
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")
        if ls.ndim != 1 or not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ValueError("length_scales must be a vector of positive reals")
        if not np.isfinite(self.jitter) or self.jitter < 0:
            raise ValueError(f"jitter must be nonnegative, got {self.jitter}")

    @property
    def input_dim(self) -> int:
        return self.length_scales.shape[0]


def default_spec(signal_variance: float, length_scales) -> KernelSpec:
    """KernelSpec with the default relative jitter."""
    return KernelSpec(signal_variance, np.asarray(length_scales, dtype=float),
                      jitter=JITTER_REL * signal_variance)


def _check_inputs(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.input_dim:
        raise ValueError(
            f"covariate matrix has {X.shape[1]} columns, kernel expects {spec.input_dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError("covariate matrix contains non-finite entries")
    return X


def covariance_matrix(spec: KernelSpec, X: np.ndarray, X2: np.ndarray | None = None) -> np.ndarray:
    """Evaluate the squared-exponential covariance.

    Entry (i, j) is ``sv * exp(-0.5 * sum_d (x_id - x2_jd)^2 / ls_d^2)``.
    With ``X2`` omitted the result is symmetric with ``spec.jitter`` added to
    the diagonal; with ``X2`` given no jitter is added.
    """
    X = _check_inputs(spec, X)
    if X2 is None:
        diff = (X[:, None, :] - X[None, :, :]) / spec.length_scales
        K = spec.signal_variance * np.exp(-0.5 * np.einsum("ijd,ijd->ij", diff, diff))
        K = 0.5 * (K + K.T)
        K[np.diag_indices_from(K)] += spec.jitter
        return K
    X2 = _check_inputs(spec, X2)
    diff = (X[:, None, :] - X2[None, :, :]) / spec.length_scales
    return spec.signal_variance * np.exp(-0.5 * np.einsum("ijd,ijd->ij", diff, diff))


def covariance_gradients(spec: KernelSpec, X: np.ndarray) -> list[np.ndarray]:
    """Derivatives of the training gram matrix w.r.t. log hyperparameters.

    Returns ``[dK/dlog(sv), dK/dlog(ls_1), ..., dK/dlog(ls_p)]``.  The jitter
    is assumed proportional to the signal variance (the default policy), so
    it rides along in the signal-variance derivative and drops out of the
    length-scale ones.
    """
    X = _check_inputs(spec, X)
    K = covariance_matrix(spec, X)
    grads = [K.copy()]
    Kbare = K.copy()
    Kbare[np.diag_indices_from(Kbare)] -= spec.jitter
    for d in range(spec.input_dim):
        sq = (X[:, d, None] - X[None, :, d]) ** 2 / spec.length_scales[d] ** 2
        grads.append(Kbare * sq)
    return grads


class PosDefMatrix:
    """Dense symmetric positive-definite matrix with a cached Cholesky factor.

    Factorization retries with geometrically escalating diagonal jitter
    (relative to ``jitter_scale``, by default the mean diagonal) before
    raising :class:`FactorizationError`.
    """

    def __init__(self, mat: np.ndarray, jitter_scale: float | None = None):
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("expected a square matrix")
        scale = np.max(np.abs(mat)) if mat.size else 1.0
        if scale > 0 and np.max(np.abs(mat - mat.T)) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric to 1e-12 relative")
        self.mat = 0.5 * (mat + mat.T)
        if jitter_scale is None:
            jitter_scale = float(np.mean(np.abs(np.diag(self.mat)))) or 1.0
        self.added_jitter = 0.0
        rel = JITTER_REL
        work = self.mat
        while True:
            try:
                self._chol = cho_factor(work, lower=True, check_finite=False)
                break
            except np.linalg.LinAlgError:
                if rel > JITTER_REL_MAX:
                    raise FactorizationError(
                        "Cholesky failed after escalating jitter to "
                        f"{JITTER_REL_MAX:g} of the diagonal scale") from None
                self.added_jitter = rel * jitter_scale
                work = self.mat + self.added_jitter * np.eye(self.mat.shape[0])
                rel *= 10.0

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def diag(self) -> np.ndarray:
        return np.diag(self.mat)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b using the cached factor."""
        return cho_solve(self._chol, b, check_finite=False)

    def matmul(self, b: np.ndarray) -> np.ndarray:
        return self.mat @ b

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol[0]))))

    def quad_inv(self, b: np.ndarray) -> float:
        """Quadratic form b^T A^{-1} b."""
        return float(b @ self.solve(b))


def chol_solve(A: PosDefMatrix, B: np.ndarray) -> np.ndarray:
    return A.solve(B)


def logdet(A: PosDefMatrix) -> float:
    return A.logdet()


@dataclass
class KernelBlocks:
    """The block-diagonal latent prior covariance, held as its two blocks."""

    k1: PosDefMatrix
    k2: PosDefMatrix

    def __post_init__(self):
        if self.k1.n != self.k2.n:
            raise ValueError("blocks must have matching size")

    @property
    def n(self) -> int:
        return self.k1.n

    def apply(self, f: np.ndarray) -> np.ndarray:
        """K f for a stacked 2n-vector f."""
        n = self.n
        return np.concatenate([self.k1.matmul(f[:n]), self.k2.matmul(f[n:])])

    def solve(self, f: np.ndarray) -> np.ndarray:
        """K^{-1} f for a stacked 2n-vector f."""
        n = self.n
        return np.concatenate([self.k1.solve(f[:n]), self.k2.solve(f[n:])])

    def quad_inv(self, f: np.ndarray) -> float:
        n = self.n
        return self.k1.quad_inv(f[:n]) + self.k2.quad_inv(f[n:])

    def diag(self) -> np.ndarray:
        return np.concatenate([self.k1.diag, self.k2.diag])
