"""Synthetic spectral models with known ground truth.

Covariates live in the eigenbasis of the population covariance, so the
covariance operator is exactly ``diag(mu)`` with ``mu_i = i**(-b)``. Each
coordinate is ``sqrt(mu_i) * xi`` with ``xi`` uniform on ``[-sqrt 3, sqrt 3]``
(unit variance, bounded), which gives ``||w||**2 <= 3 * sum(mu) = kappa**2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import index_fn
from .errors import DomainError, ValidationError
from .index_fn import IndexFunction

__all__ = [
    "SourceSpec",
    "first_axis",
    "random_unit",
    "custom",
    "power_decay",
    "SpectralModel",
    "Sample",
    "power_law_eigenvalues",
    "build_model",
    "draw_sample",
    "oracle_errors",
    "verify_source_condition",
    "to_rho_basis",
    "model_from_config",
]

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class SourceSpec:
    """How to pick the source element ``v`` with ``||v|| <= R``."""

    kind: str
    R: float = 1.0
    seed: int | None = None
    values: tuple[float, ...] | None = None
    exponent: float | None = None

    def to_config(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "R": self.R}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.values is not None:
            out["values"] = list(self.values)
        if self.exponent is not None:
            out["exponent"] = self.exponent
        return out

    @classmethod
    def from_config(cls, block: Mapping[str, Any]) -> "SourceSpec":
        kind = block["kind"]
        R = float(block.get("R", 1.0))
        if kind == "first_axis":
            return first_axis(R)
        if kind == "random_unit":
            return random_unit(R, int(block.get("seed", 0)))
        if kind == "custom":
            return custom(block["values"], R)
        if kind == "power_decay":
            return power_decay(R, float(block["exponent"]))
        raise ValidationError(f"unknown source kind {kind!r}")


def first_axis(R: float = 1.0) -> SourceSpec:
    return SourceSpec("first_axis", R=R)


def random_unit(R: float = 1.0, seed: int = 0) -> SourceSpec:
    return SourceSpec("random_unit", R=R, seed=seed)


def custom(values: Sequence[float], R: float = 1.0) -> SourceSpec:
    return SourceSpec("custom", R=R, values=tuple(float(v) for v in values))


def power_decay(R: float = 1.0, exponent: float = 0.5) -> SourceSpec:
    """``v_i`` proportional to ``i**(-exponent)``, scaled to norm ``R``."""
    return SourceSpec("power_decay", R=R, exponent=exponent)


def _source_vector(spec: SourceSpec, d: int) -> np.ndarray:
    if not spec.R > 0:
        raise ValidationError("source radius R must be positive")
    if spec.kind == "first_axis":
        v = np.zeros(d)
        v[0] = spec.R
        return v
    if spec.kind == "random_unit":
        g = np.random.default_rng(spec.seed).standard_normal(d)
        return spec.R * g / np.linalg.norm(g)
    if spec.kind == "power_decay":
        v = np.arange(1, d + 1, dtype=float) ** (-spec.exponent)
        return spec.R * v / np.linalg.norm(v)
    if spec.kind == "custom":
        v = np.asarray(spec.values, dtype=float)
        if v.shape != (d,):
            raise ValidationError(f"custom source needs {d} entries, got {v.size}")
        if np.linalg.norm(v) > spec.R * (1 + 1e-12):
            raise ValidationError(f"||v|| = {np.linalg.norm(v):.6g} exceeds R = {spec.R:g}")
        return v
    raise ValidationError(f"unknown source kind {spec.kind!r}")


@dataclass(frozen=True)
class SpectralModel:
    """Ground truth: covariance ``diag(eigenvalues)``, target ``a_i = phi(mu_i) v_i``.

    ``scale`` is 1 unless the covariates were shrunk to fit the domain of
    ``phi``, in which case ``eigenvalues = scale * i**(-b)``.
    """

    b: float
    d: int
    eigenvalues: np.ndarray
    kappa: float
    phi: IndexFunction
    source_v: np.ndarray
    R: float
    target_coords: np.ndarray
    noise_M: float
    noise_Sigma: float
    noise_shape: str
    noise_sd: float
    source: SourceSpec
    scale: float = 1.0
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def to_config(self) -> dict:
        return {
            "b": self.b, "d": self.d, "phi": self.phi.to_config(),
            "source": self.source.to_config(), "noise_sd": self.noise_sd,
            "noise_shape": self.noise_shape, "scale": self.scale,
        }


@dataclass(frozen=True)
class Sample:
    covariates: np.ndarray
    y: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    def to_csv(self, path) -> None:
        d = self.covariates.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"coord_{j}" for j in range(1, d + 1)] + ["y"])
            for row, yi in zip(self.covariates, self.y):
                w.writerow([repr(float(x)) for x in row] + [repr(float(yi))])

    @classmethod
    def from_csv(cls, path, seed: int = -1) -> "Sample":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[-1] != "y":
            raise ValidationError("last CSV column must be 'y'")
        data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
        return cls(data[:, :-1], data[:, -1], seed)


def power_law_eigenvalues(b: float, d: int) -> np.ndarray:
    return np.arange(1, d + 1, dtype=float) ** (-float(b))


def build_model(b: float, d: int, phi: IndexFunction, source: SourceSpec | None = None,
                noise_sd: float = 0.0, noise_shape: str = "uniform",
                allow_rescale: bool = False) -> SpectralModel:
    """Construct a model satisfying the boundedness, source and decay assumptions.

    If ``phi.s`` is smaller than ``kappa**2 = 3 * sum(mu)``, the covariates
    are shrunk by ``sqrt(phi.s) / kappa`` when ``allow_rescale`` is set, and
    a :class:`DomainError` is raised otherwise.
    """
    if not b > 1:
        raise ValidationError(f"decay exponent b must exceed 1, got {b}")
    if d < 2:
        raise ValidationError("dimension d must be at least 2")
    if not noise_sd >= 0:
        raise ValidationError("noise_sd must be nonnegative")
    if noise_shape not in ("uniform", "rademacher"):
        raise ValidationError(f"unknown noise shape {noise_shape!r}")
    source = source or first_axis(1.0)
    mu = power_law_eigenvalues(b, d)
    kappa2 = 3.0 * float(np.sum(mu))
    scale = 1.0
    if phi.s < kappa2:
        if not allow_rescale:
            raise DomainError(f"phi is defined on [0, {phi.s:g}] but kappa^2 = {kappa2:.6g}")
        scale = phi.s / kappa2
        mu = mu * scale
        kappa2 = phi.s
    v = _source_vector(source, d)
    a = np.asarray(phi(mu), dtype=float) * v
    if noise_shape == "uniform":
        M = SQRT3 * noise_sd
    else:
        M = noise_sd
    return SpectralModel(
        b=float(b), d=int(d), eigenvalues=mu, kappa=math.sqrt(kappa2), phi=phi,
        source_v=v, R=source.R, target_coords=a, noise_M=M, noise_Sigma=noise_sd,
        noise_shape=noise_shape, noise_sd=noise_sd, source=source, scale=scale,
    )


def draw_sample(model: SpectralModel, n: int, seed: int) -> Sample:
    """Draw ``n`` i.i.d. pairs; bit-identical for equal ``(seed, n)``."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-SQRT3, SQRT3, size=(n, model.d))
    W = xi * np.sqrt(model.eigenvalues)
    if model.noise_shape == "uniform":
        eps = rng.uniform(-SQRT3, SQRT3, size=n) * model.noise_sd
    else:
        eps = rng.choice(np.array([-1.0, 1.0]), size=n) * model.noise_sd
    y = W @ model.target_coords + eps
    return Sample(W, y, seed)


def oracle_errors(model: SpectralModel, w_hat) -> dict[str, float]:
    """H-norm and prediction-norm distances from the target."""
    w = np.asarray(w_hat, dtype=float)
    if w.shape != (model.d,):
        raise ValidationError(f"expected {model.d} coordinates, got shape {w.shape}")
    diff = w - model.target_coords
    return {
        "h_norm": float(np.sqrt(np.sum(diff ** 2))),
        "pred_norm": float(np.sqrt(np.sum(model.eigenvalues * diff ** 2))),
    }


def to_rho_basis(model: SpectralModel, coords) -> np.ndarray:
    """Map eigenbasis coordinates of ``f`` to its ``L^2(rho)`` Fourier coefficients."""
    return np.sqrt(model.eigenvalues) * np.asarray(coords, dtype=float)


def verify_source_condition(coeffs, mu, phi: IndexFunction, R: float) -> dict:
    """Norm ``sqrt(sum coeffs_i**2 / phi(mu_i)**2)`` with ``0/0 = 0``; member iff ``<= R``."""
    c = np.asarray(coeffs, dtype=float)
    m = np.asarray(mu, dtype=float)
    if c.shape != m.shape:
        raise ValidationError("coefficient and eigenvalue lists differ in length")
    p = np.asarray(phi(m), dtype=float)
    if np.any((p == 0) & (c != 0)):
        return {"member": False, "norm": math.inf}
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(c == 0, 0.0, (c / np.where(p == 0, 1.0, p)) ** 2)
    norm = float(np.sqrt(np.sum(terms)))
    return {"member": bool(norm <= R * (1 + 1e-12)), "norm": norm}


def model_from_config(block: Mapping[str, Any]) -> SpectralModel:
    """Build a model from ``{"b", "d", "phi", "source", "noise_sd", ...}``.

    A ``phi`` block without ``s`` gets ``s = kappa**2`` of the model.
    """
    b, d = float(block["b"]), int(block["d"])
    kappa2 = 3.0 * float(np.sum(power_law_eigenvalues(b, d)))
    phi_block = dict(block["phi"])
    phi_block.setdefault("s", kappa2)
    phi = index_fn.from_config(phi_block)
    source = SourceSpec.from_config(block.get("source", {"kind": "first_axis", "R": 1.0}))
    return build_model(b, d, phi, source, noise_sd=float(block.get("noise_sd", 0.0)),
                       noise_shape=block.get("noise_shape", "uniform"),
                       allow_rescale=bool(block.get("allow_rescale", False)))
