"""Model parameter vector: degrees of freedom plus the two kernels' hyperparameters.

Everything is stored in log space, which is also the space the MAP
optimizer works in.  The stacking order of the flat vector is
``[log_nu, log_sv1, log_ls1 (p), log_sv2, log_ls2 (p)]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, default_spec


@dataclass(frozen=True)
class HyperParams:
    log_nu: float
    log_sigma1_sq: float
    log_ell1: np.ndarray
    log_sigma2_sq: float
    log_ell2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "log_ell1", np.atleast_1d(np.asarray(self.log_ell1, float)))
        object.__setattr__(self, "log_ell2", np.atleast_1d(np.asarray(self.log_ell2, float)))
        if self.log_ell1.shape != self.log_ell2.shape:
            raise ValueError("length-scale vectors must have equal dimension")
        if not np.all(np.isfinite(self.to_vector())):
            raise ValueError("hyperparameters must be finite in log space")

    @property
    def input_dim(self) -> int:
        return self.log_ell1.shape[0]

    @property
    def nu(self) -> float:
        return float(np.exp(self.log_nu))

    @property
    def sigma1_sq(self) -> float:
        return float(np.exp(self.log_sigma1_sq))

    @property
    def sigma2_sq(self) -> float:
        return float(np.exp(self.log_sigma2_sq))

    @property
    def ell1(self) -> np.ndarray:
        return np.exp(self.log_ell1)

    @property
    def ell2(self) -> np.ndarray:
        return np.exp(self.log_ell2)

    def kernel_specs(self) -> tuple[KernelSpec, KernelSpec]:
        return (default_spec(self.sigma1_sq, self.ell1),
                default_spec(self.sigma2_sq, self.ell2))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.log_nu, self.log_sigma1_sq], self.log_ell1,
                               [self.log_sigma2_sq], self.log_ell2])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "HyperParams":
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.shape[0] < 5 or (v.shape[0] - 3) % 2 != 0:
            raise ValueError(f"expected a vector of length 3 + 2p, got shape {v.shape}")
        p = (v.shape[0] - 3) // 2
        return cls(log_nu=float(v[0]), log_sigma1_sq=float(v[1]), log_ell1=v[2:2 + p],
                   log_sigma2_sq=float(v[2 + p]), log_ell2=v[3 + p:])

    @classmethod
    def from_natural(cls, nu, sigma1_sq, ell1, sigma2_sq, ell2) -> "HyperParams":
        return cls(np.log(nu), np.log(sigma1_sq), np.log(np.atleast_1d(ell1)),
                   np.log(sigma2_sq), np.log(np.atleast_1d(ell2)))


def vector_labels(p: int) -> list[str]:
    """Coordinate names matching the flat log-space layout."""
    labels = ["log_nu", "log_sigma1_sq"]
    labels += [f"log_ell1_{d}" for d in range(p)]
    labels += ["log_sigma2_sq"]
    labels += [f"log_ell2_{d}" for d in range(p)]
    return labels
