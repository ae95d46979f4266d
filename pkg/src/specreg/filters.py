"""Spectral regularization families ``g_lambda`` and a numerical auditor.

A family approximates ``sigma -> 1/sigma`` and has residual
``r_lambda(sigma) = 1 - sigma * g_lambda(sigma)``. The auditor measures, on
finite grids, the constants bounding ``|sigma g|``, ``lambda |g|``, ``|r|``
and ``|r| sigma**nu / lambda**nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "FilterFamily",
    "AuditReport",
    "tikhonov",
    "spectral_cutoff",
    "iterated_tikhonov",
    "landweber",
    "from_config",
    "audit_filter",
    "default_lambda_grid",
    "default_sigma_grid",
]

UNBOUNDED = math.inf
FLAG_RTOL = 1e-9


@dataclass(frozen=True)
class FilterFamily:
    """A regularization family with its declared constants.

    ``g(lam, sigma)`` broadcasts over numpy arrays. ``qualification`` is
    ``math.inf`` for families with arbitrary qualification.
    """

    g: Callable[[Any, Any], np.ndarray]
    declared_A: float
    declared_B: float
    declared_D: float
    qualification: float
    gamma: Callable[[float], float]
    label: str
    config: Mapping[str, Any] = field(default_factory=dict, compare=False)
    # closed-form residual; avoids the cancellation in 1 - sigma*g near 1
    residual_fn: Callable[[Any, Any], np.ndarray] | None = field(default=None, compare=False)

    def __call__(self, lam, sigma):
        return self.g(lam, sigma)

    def residual(self, lam, sigma):
        sigma = np.asarray(sigma, dtype=float)
        if self.residual_fn is not None:
            return self.residual_fn(lam, sigma)
        return 1.0 - sigma * self.g(lam, sigma)

    @property
    def qualification_unbounded(self) -> bool:
        return math.isinf(self.qualification)


def tikhonov() -> FilterFamily:
    def g(lam, sigma):
        return 1.0 / (np.asarray(sigma, dtype=float) + lam)

    def r(lam, sigma):
        return lam / (np.asarray(sigma, dtype=float) + lam)

    return FilterFamily(g, 1.0, 1.0, 1.0, 1.0, lambda nu: 1.0, "tikhonov",
                        {"filter": "tikhonov"}, r)


def spectral_cutoff() -> FilterFamily:
    """``g(sigma) = 1/sigma`` for ``sigma >= lambda``, else 0 (boundary kept)."""

    def g(lam, sigma):
        sigma = np.asarray(sigma, dtype=float)
        keep = sigma >= lam
        with np.errstate(divide="ignore"):
            return np.where(keep, 1.0 / np.where(keep, sigma, 1.0), 0.0)

    def r(lam, sigma):
        return np.where(np.asarray(sigma, dtype=float) >= lam, 0.0, 1.0)

    return FilterFamily(g, 1.0, 1.0, 1.0, UNBOUNDED, lambda nu: 1.0, "cutoff",
                        {"filter": "cutoff"}, r)


def iterated_tikhonov(m: int) -> FilterFamily:
    """m-fold iterated Tikhonov, ``g = (1 - (lam/(sigma+lam))**m) / sigma``."""
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValidationError(f"iteration count m must be an integer >= 1, got {m!r}")
    m = int(m)

    def g(lam, sigma):
        sigma = np.asarray(sigma, dtype=float)
        x = sigma / lam
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -np.expm1(-m * np.log1p(x)) / sigma
        return np.where(sigma > 0, val, m / lam)

    def r(lam, sigma):
        return np.exp(-m * np.log1p(np.asarray(sigma, dtype=float) / lam))

    return FilterFamily(g, 1.0, float(m), 1.0, float(m), lambda nu: 1.0,
                        f"iterated_tikhonov(m={m})", {"filter": "iterated_tikhonov", "m": m}, r)


def landweber(step: float, s: float = 1.0,
              iteration_rule: Callable[[float], int] | None = None) -> FilterFamily:
    """Landweber iteration with ``t = ceil(1/(step*lambda))`` steps.

    ``g = step * sum_{j<t} (1 - step*sigma)**j``, evaluated in closed form.
    The geometric factor is at most ``sigma * e**(-t*step*sigma)``, which
    gives ``gamma_nu = (nu/e)**nu``; ``lambda*step*t <= 2`` gives ``B = 2``.
    """
    if not (step > 0 and step * s <= 1.0 + 1e-15):
        raise ValidationError(f"step must lie in (0, 1/s] = (0, {1.0 / s:g}], got {step}")
    if iteration_rule is None:
        def iteration_rule(lam):
            return int(math.ceil(1.0 / (step * lam)))

    def steps(lam):
        lam_arr = np.asarray(lam, dtype=float)
        if lam_arr.ndim:
            return np.vectorize(iteration_rule, otypes=[float])(lam_arr)
        return float(iteration_rule(float(lam_arr)))

    def g(lam, sigma):
        sigma = np.asarray(sigma, dtype=float)
        t = steps(lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -np.expm1(t * np.log1p(-step * sigma)) / sigma
        return np.where(sigma > 0, val, step * t)

    def r(lam, sigma):
        with np.errstate(divide="ignore"):
            return np.exp(steps(lam) * np.log1p(-step * np.asarray(sigma, dtype=float)))

    def gamma(nu):
        return 1.0 if nu == 0 else (nu / math.e) ** nu

    return FilterFamily(g, 1.0, 2.0, 1.0, UNBOUNDED, gamma, f"landweber(step={step:g})",
                        {"filter": "landweber", "step": step}, r)


def from_config(block: Mapping[str, Any], s: float = 1.0) -> FilterFamily:
    """Build from ``{"filter": "tikhonov"}``, ``{"filter": "cutoff"}``,
    ``{"filter": "iterated_tikhonov", "m": 3}`` or ``{"filter": "landweber", "step": 0.9}``."""
    name = block["filter"]
    if name == "tikhonov":
        return tikhonov()
    if name in ("cutoff", "spectral_cutoff"):
        return spectral_cutoff()
    if name == "iterated_tikhonov":
        return iterated_tikhonov(block["m"])
    if name == "landweber":
        return landweber(float(block["step"]), s=float(block.get("s", s)))
    raise ValidationError(f"unknown filter {name!r}")


# -- audit ------------------------------------------------------------------

@dataclass
class AuditReport:
    label: str
    measured_A: float
    measured_B: float
    measured_D: float
    measured_gamma: dict[float, float]
    declared_A: float
    declared_B: float
    declared_D: float
    declared_gamma: dict[float, float | None]
    supported: dict[float, bool]
    flags: list[str]

    @property
    def passed(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "filter": self.label,
            "measured": {"A": self.measured_A, "B": self.measured_B, "D": self.measured_D,
                         "gamma": {str(k): v for k, v in self.measured_gamma.items()}},
            "declared": {"A": self.declared_A, "B": self.declared_B, "D": self.declared_D,
                         "gamma": {str(k): v for k, v in self.declared_gamma.items()}},
            "supported": {str(k): v for k, v in self.supported.items()},
            "flags": list(self.flags),
            "pass": self.passed,
        }


def default_lambda_grid(s: float = 1.0, size: int = 50) -> np.ndarray:
    return np.geomspace(1e-6 * s, s, size)


def default_sigma_grid(s: float = 1.0, size: int = 400) -> np.ndarray:
    return np.geomspace(1e-9 * s, s, size)


def audit_filter(f: FilterFamily, lambda_grid: Sequence[float] | None = None,
                 sigma_grid: Sequence[float] | None = None,
                 nu_list: Sequence[float] = (1.0,), s: float = 1.0) -> AuditReport:
    """Measure the family constants on a ``(lambda, sigma)`` grid.

    Measured constants exceeding the declared ones by more than ``1e-9``
    relative are flagged. Orders ``nu`` above the declared qualification
    have no declared ``gamma`` and are reported as unsupported.
    """
    lam = np.asarray(default_lambda_grid(s) if lambda_grid is None else lambda_grid, dtype=float)
    sig = np.asarray(default_sigma_grid(s) if sigma_grid is None else sigma_grid, dtype=float)
    if lam.size == 0 or sig.size == 0:
        raise ValidationError("audit grids must be nonempty")
    L, S = np.meshgrid(lam, sig, indexing="ij")
    G = _eval_grid(f.g, lam, sig)
    sg = S * G
    r = _eval_grid(f.residual, lam, sig)
    A = float(np.max(np.abs(sg)))
    B = float(np.max(L * np.abs(G)))
    D = float(np.max(np.abs(r)))

    flags = []
    for name, meas, decl in (("A", A, f.declared_A), ("B", B, f.declared_B), ("D", D, f.declared_D)):
        if meas > decl * (1 + FLAG_RTOL):
            flags.append(f"{name}: measured {meas!r} exceeds declared {decl!r}")

    measured_gamma, declared_gamma, supported = {}, {}, {}
    for nu in nu_list:
        nu = float(nu)
        gam = float(np.max(np.abs(r) * (S / L) ** nu))
        measured_gamma[nu] = gam
        if nu <= f.qualification:
            decl = float(f.gamma(nu))
            declared_gamma[nu] = decl
            ok = gam <= decl * (1 + FLAG_RTOL)
            supported[nu] = ok
            if not ok:
                flags.append(f"gamma_{nu:g}: measured {gam!r} exceeds declared {decl!r}")
        else:
            declared_gamma[nu] = None
            supported[nu] = False
    return AuditReport(f.label, A, B, D, measured_gamma, f.declared_A, f.declared_B, f.declared_D,
                       declared_gamma, supported, flags)


def _eval_grid(fn, lam: np.ndarray, sig: np.ndarray) -> np.ndarray:
    # per-lambda rows keep the Landweber iteration rule scalar
    return np.stack([np.asarray(fn(float(l), sig), dtype=float) for l in lam])
