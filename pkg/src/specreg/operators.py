"""Gram matrices, spectral calculus and the filter estimator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DataError, UnsupportedOperationError, ValidationError
from .filters import FilterFamily

__all__ = [
    "Kernel",
    "GramSpectrum",
    "Estimator",
    "linear_kernel",
    "gaussian_kernel",
    "gram",
    "eigh",
    "fit",
    "fit_coordinates",
    "second_moment_spectrum",
    "predict",
    "coordinates",
    "effective_dimension",
    "check_lambda_admissible",
]

SYMMETRY_TOL = 1e-12
CLAMP_RTOL = 1e-10


@dataclass(frozen=True)
class Kernel:
    """A symmetric kernel with ``K(w, w) <= kappa**2`` almost surely.

    ``evaluator(A, B)`` returns the matrix ``[K(a_i, b_j)]`` for row-stacked
    points ``A`` and ``B``.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    kappa: float
    label: str = "kernel"
    linear: bool = False

    def __call__(self, a, b):
        return self.evaluator(np.atleast_2d(a), np.atleast_2d(b))


def linear_kernel(kappa: float = math.inf) -> Kernel:
    return Kernel(lambda a, b: a @ b.T, kappa=kappa, label="linear", linear=True)


def gaussian_kernel(width: float) -> Kernel:
    if not width > 0:
        raise ValidationError("kernel width must be positive")

    def ev(a, b):
        sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * width ** 2))

    return Kernel(ev, kappa=1.0, label=f"gaussian(width={width:g})")


@dataclass(frozen=True)
class GramSpectrum:
    """Eigenpairs of a scaled Gram (or second-moment) matrix, eigenvalues nonincreasing."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n: int

    def apply(self, fn: Callable[[np.ndarray], np.ndarray], v: np.ndarray) -> np.ndarray:
        """Return ``U fn(Sigma) U^T v``."""
        U = self.eigenvectors
        return U @ (np.asarray(fn(self.eigenvalues), dtype=float) * (U.T @ v))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, ev in enumerate(self.eigenvalues, start=1):
                w.writerow([i, repr(float(ev))])


@dataclass(frozen=True)
class Estimator:
    coefficients: np.ndarray
    training_points: np.ndarray | None
    lam: float
    filter_label: str


def gram(kernel: Kernel, points) -> np.ndarray:
    """Scaled Gram matrix ``M_ij = K(w_i, w_j) / n``."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n = X.shape[0]
    if n < 1:
        raise ValidationError("need at least one point")
    K = np.asarray(kernel.evaluator(X, X), dtype=float)
    if not np.all(np.isfinite(K)):
        raise DataError("kernel produced non-finite values")
    M = K / n
    return 0.5 * (M + M.T)


def eigh(M) -> GramSpectrum:
    """Symmetric eigendecomposition with tiny negative eigenvalues clamped to zero.

    Eigenvalues below ``-1e-10 * trace`` mean the matrix is not PSD and are
    rejected.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and float(np.max(np.abs(M - M.T))) > SYMMETRY_TOL * scale:
        raise ValidationError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(M)
    vals, vecs = vals[::-1].copy(), vecs[:, ::-1].copy()
    floor = -CLAMP_RTOL * float(np.trace(M))
    if vals.size and vals[-1] < min(floor, 0.0):
        raise ValidationError(f"matrix is not positive semidefinite (eigenvalue {vals[-1]:.3e})")
    vals = np.maximum(vals, 0.0)
    return GramSpectrum(vals, vecs, M.shape[0])


def _check_fit_args(lam, y, n):
    if not lam > 0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n:
        raise ValidationError(f"expected {n} responses, got {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise DataError("responses contain non-finite values")
    return y


def fit(f: FilterFamily, lam: float, spectrum: GramSpectrum, y, points=None) -> Estimator:
    """Dual coefficients ``c = (1/n) U g_lambda(Sigma) U^T y``.

    The estimator is ``x -> sum_i c_i K(w_i, x)``.
    """
    n = spectrum.n
    y = _check_fit_args(lam, y, n)
    c = spectrum.apply(lambda s: f.g(lam, s), y) / n
    if not np.all(np.isfinite(c)):
        raise DataError("non-finite coefficients")
    pts = None if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    return Estimator(c, pts, float(lam), f.label)


def fit_coordinates(f: FilterFamily, lam: float, covariates, y,
                    spectrum: GramSpectrum | None = None) -> np.ndarray:
    """Estimator coordinates ``g_lambda(T_x) S_x^* y`` for the linear kernel.

    Works in the ``d x d`` representation ``T_x = W^T W / n``, whose nonzero
    spectrum coincides with that of the scaled Gram matrix; the result equals
    ``coordinates(fit(...))`` but costs ``O(n d^2)`` instead of ``O(n^3)``.
    """
    W = np.atleast_2d(np.asarray(covariates, dtype=float))
    n = W.shape[0]
    y = _check_fit_args(lam, y, n)
    if spectrum is None:
        spectrum = second_moment_spectrum(W)
    rhs = W.T @ y / n
    # null directions of T_x carry no data; keep them out of g(0)
    return spectrum.apply(lambda s: np.where(s > 0, f.g(lam, s), 0.0), rhs)


def second_moment_spectrum(covariates) -> GramSpectrum:
    """Spectrum of the empirical operator ``T_x = W^T W / n`` (``d x d``), tagged with ``n``."""
    W = np.atleast_2d(np.asarray(covariates, dtype=float))
    n = W.shape[0]
    C = W.T @ W / n
    spec = eigh(0.5 * (C + C.T))
    return GramSpectrum(spec.eigenvalues, spec.eigenvectors, n)


def predict(e: Estimator, kernel: Kernel, x) -> np.ndarray | float:
    if e.training_points is None:
        raise ValidationError("estimator has no training points")
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1 and e.training_points.shape[1] == X.shape[0]
    if X.ndim == 0:
        single, X = True, X.reshape(1)
    K = kernel.evaluator(np.atleast_2d(X), e.training_points)
    out = K @ e.coefficients
    return float(out[0]) if single else out


def coordinates(e: Estimator, kernel: Kernel | None = None) -> np.ndarray:
    """Hilbert-space element ``sum_i c_i w_i``; linear kernel only."""
    if kernel is not None and not kernel.linear:
        raise UnsupportedOperationError(f"coordinates need the linear kernel, not {kernel.label}")
    if e.training_points is None:
        raise ValidationError("estimator has no training points")
    return e.training_points.T @ e.coefficients


def effective_dimension(eigenvalues, lam: float) -> float:
    """``N(lambda) = sum_i mu_i / (mu_i + lambda)``."""
    if not lam > 0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    mu = np.asarray(eigenvalues, dtype=float)
    if np.any(mu < 0):
        raise ValidationError("eigenvalues must be nonnegative")
    return float(np.sum(mu / (mu + lam)))


def check_lambda_admissible(kappa: float, n_lambda: float, n: int, eta: float, lam: float) -> bool:
    """``sqrt(lambda) >= 16 kappa sqrt(N(lambda)/n) log(4/eta)``."""
    if not eta > 0:
        raise ValidationError("eta must be positive")
    if n < 1 or not lam > 0:
        raise ValidationError("need n >= 1 and lambda > 0")
    return math.sqrt(lam) >= 16.0 * kappa * math.sqrt(n_lambda / n) * math.log(4.0 / eta)
