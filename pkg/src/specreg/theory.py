"""A-priori parameter choice, theoretical rates, and executable lemma checks.

The lemma checks are numerical property tests: deterministic inequalities
and identities are checked on grids or random matrices; probabilistic ones
are checked by Monte Carlo event frequencies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import index_fn
from .errors import PreconditionError, ValidationError
from .index_fn import IndexFunction
from .operators import check_lambda_admissible, effective_dimension
from .synthetic import SpectralModel, draw_sample

__all__ = [
    "LambdaClipWarning",
    "RatePrediction",
    "CheckReport",
    "apriori_lambda",
    "theoretical_rate",
    "rate_prediction",
    "holder_prediction_exponent",
    "floor_qualification",
    "check_sup_lemma",
    "check_cordes",
    "check_resolvent_identity",
    "check_power_comparison",
    "power_comparison_norm",
    "random_psd",
    "run_theory_checks",
]


class LambdaClipWarning(UserWarning):
    """``n**-0.5`` exceeds ``Psi(1)``; the a-priori rule was clipped to 1."""


@dataclass(frozen=True)
class RatePrediction:
    n: int
    lam: float
    rate_H: float
    rate_pred: float
    admissible: bool | None = None
    clipped: bool = False


@dataclass
class CheckReport:
    check: str
    trials: int
    max_discrepancy: float
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.max_discrepancy = float(self.max_discrepancy)
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return {"check": self.check, "trials": self.trials,
                "max_discrepancy": self.max_discrepancy, "pass": self.passed,
                **({"details": self.details} if self.details else {})}


def floor_qualification(nu: float) -> int:
    """Integer part of the qualification used when splitting resolvent powers."""
    return int(math.floor(nu))


# -- parameter choice and rates ---------------------------------------------

def _apriori(phi: IndexFunction, b: float, n: int) -> tuple[float, bool]:
    if n < 1:
        raise ValidationError("n must be at least 1")
    psi = index_fn.psi_of(phi, b)
    upper = min(1.0, phi.s)
    y = n ** -0.5
    if y > float(psi(upper)):
        return upper, True
    return index_fn.invert_monotone(psi, y, upper=upper), False


def apriori_lambda(phi: IndexFunction, b: float, n: int) -> float:
    """``lambda_n = Psi^{-1}(n**-0.5)`` clipped to ``(0, 1]``."""
    lam, clipped = _apriori(phi, b, n)
    if clipped:
        warnings.warn(f"n = {n}: n^-1/2 exceeds Psi(1); lambda clipped to {lam:g}",
                      LambdaClipWarning, stacklevel=2)
    return lam


def theoretical_rate(phi: IndexFunction, b: float, n: int, norm: str = "prediction") -> float:
    """Rate shape at the a-priori ``lambda_n``: ``phi(lam)`` or ``sqrt(lam) phi(lam)``."""
    lam, _ = _apriori(phi, b, n)
    if norm in ("H", "h"):
        return float(phi(lam))
    if norm in ("prediction", "pred"):
        return math.sqrt(lam) * float(phi(lam))
    raise ValidationError(f"unknown norm {norm!r}")


def rate_prediction(phi: IndexFunction, b: float, n: int, model: SpectralModel | None = None,
                    eta: float | None = None) -> RatePrediction:
    lam, clipped = _apriori(phi, b, n)
    ph = float(phi(lam))
    adm = None
    if model is not None and eta is not None:
        adm = check_lambda_admissible(model.kappa, effective_dimension(model.eigenvalues, lam),
                                      n, eta, lam)
    return RatePrediction(n, lam, ph, math.sqrt(lam) * ph, adm, clipped)


def holder_prediction_exponent(r: float, b: float) -> float:
    """Asymptotic log-log slope of ``sqrt(lam_n) phi(lam_n)`` for ``phi = t**r``."""
    return -b * (2 * r + 1) / (2 * (2 * b * r + b + 1))


# -- lemma checks -----------------------------------------------------------

def check_sup_lemma(phi: IndexFunction, nu: float, lambda_grid: Sequence[float],
                    c: float | None = None, grid_size: int = 512) -> CheckReport:
    """``sup_sigma phi(sigma)/(sigma+lam)**nu <= max(1, 1/c) phi(lam)/lam**nu``.

    ``c`` defaults to the grid estimate from :func:`index_fn.covering_check`.
    """
    if c is None:
        c = index_fn.covering_check(phi, nu).c_estimate
    if not c > 0:
        raise ValidationError("covering constant must be positive")
    sig = index_fn.composite_grid(phi.s, grid_size, grid_size)
    pv = np.asarray(phi(sig), dtype=float)
    worst = -math.inf
    for lam in np.asarray(lambda_grid, dtype=float):
        lhs = float(np.max(pv / (sig + lam) ** nu))
        rhs = max(1.0, 1.0 / c) * float(phi(lam)) / lam ** nu
        worst = max(worst, lhs / rhs - 1.0 if rhs > 0 else (math.inf if lhs > 0 else -1.0))
    return CheckReport("sup_lemma", len(lambda_grid), worst, worst <= 1e-9,
                       {"phi": phi.label, "nu": nu, "c": c})


def random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    G = rng.standard_normal((dim, dim))
    return G @ G.T


def _psd_power(A: np.ndarray, p: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(A)
    vals = np.maximum(vals, 0.0)
    powered = np.ones_like(vals) if p == 0 else vals ** p
    return (vecs * powered) @ vecs.T


def check_cordes(dim: int = 10, p: float | Sequence[float] = 0.5, trials: int = 1000,
                 seed: int = 0, slack: float = 1e-9) -> CheckReport:
    """``||A^p B^p|| <= ||A B||^p`` for random PSD pairs, ``0 <= p <= 1``."""
    ps = [p] if np.isscalar(p) else list(p)
    if any(not 0 <= q <= 1 for q in ps):
        raise ValidationError("p must lie in [0, 1]")
    if dim > 50:
        raise ValidationError("dim must be at most 50")
    rng = np.random.default_rng(seed)
    worst, violations = -math.inf, 0
    for _ in range(trials):
        A, B = random_psd(rng, dim), random_psd(rng, dim)
        rhs_base = np.linalg.norm(A @ B, 2)
        for q in ps:
            lhs = np.linalg.norm(_psd_power(A, q) @ _psd_power(B, q), 2)
            rel = lhs / rhs_base ** q - 1.0
            worst = max(worst, rel)
            violations += rel > slack
    return CheckReport("cordes", trials * len(ps), float(worst), violations == 0,
                       {"p": ps, "dim": dim, "violations": int(violations)})


def _resolvent_sides(L: np.ndarray, Lh: np.ndarray, lam: float, order: int):
    eye = np.eye(L.shape[0])
    P = np.linalg.inv(Lh + lam * eye)
    Q = np.linalg.inv(L + lam * eye)
    mp = np.linalg.matrix_power
    lhs = mp(P, order) - mp(Q, order)
    rhs = mp(P, order - 1) @ (P - Q)
    for i in range(1, order):
        rhs = rhs + mp(P, i) @ (L - Lh) @ mp(Q, order + 1 - i)
    scale = max(1.0, np.linalg.norm(mp(P, order)) + np.linalg.norm(mp(Q, order)))
    return lhs, rhs, scale


def check_resolvent_identity(dim: int = 8, lam: float = 0.5, order_n: int | Sequence[int] = 4,
                             trials: int = 100, seed: int = 0, atol: float = 1e-10) -> CheckReport:
    """Telescoping identity for ``(Lh + lam)^-n - (L + lam)^-n``.

    The discrepancy is the Frobenius norm of ``lhs - rhs`` divided by
    ``max(1, ||P^n|| + ||Q^n||)``.
    """
    orders = [order_n] if np.isscalar(order_n) else list(order_n)
    if any(o < 1 for o in orders) or not lam > 0:
        raise ValidationError("need order >= 1 and lambda > 0")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        L = random_psd(rng, dim) / dim
        Lh = random_psd(rng, dim) / dim
        for o in orders:
            lhs, rhs, scale = _resolvent_sides(L, Lh, lam, int(o))
            worst = max(worst, float(np.linalg.norm(lhs - rhs)) / scale)
    return CheckReport("resolvent_identity", trials * len(orders), worst, worst <= atol,
                       {"orders": orders, "dim": dim, "lambda": lam})


def power_comparison_norm(mu, Tx, lam: float, l: float) -> float:
    """Operator norm of ``(T + lam)^l (T_x + lam)^{-l}`` with ``T = diag(mu)``."""
    mu = np.asarray(mu, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (Tx + Tx.T))
    vals = np.maximum(vals, 0.0)
    inv_pow = (vecs * (vals + lam) ** (-l)) @ vecs.T
    return float(np.linalg.norm(((mu + lam) ** l)[:, None] * inv_pow, 2))


def check_power_comparison(model: SpectralModel, lam: float, l: float = 0.5, n: int = 20000,
                           trials: int = 200, eta: float = 0.1, seed: int = 0) -> CheckReport:
    """Monte Carlo frequency of ``||(T+lam)^l (T_x+lam)^{-l}|| <= 2^l``; pass iff ``>= 1 - eta``."""
    if not 0 < l < 1:
        raise ValidationError("l must lie in (0, 1)")
    n_lam = effective_dimension(model.eigenvalues, lam)
    if not check_lambda_admissible(model.kappa, n_lam, n, eta, lam):
        raise PreconditionError(
            f"lambda = {lam:g} is not admissible for n = {n}, kappa = {model.kappa:.4g}, N = {n_lam:.4g}")
    bound = 2.0 ** l
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    norms = []
    for s in seeds:
        W = draw_sample(model, n, int(s)).covariates
        norms.append(power_comparison_norm(model.eigenvalues, W.T @ W / n, lam, l))
    norms = np.asarray(norms)
    freq = float(np.mean(norms <= bound))
    return CheckReport("power_comparison", trials, float(np.max(norms) - bound), freq >= 1 - eta,
                       {"frequency": freq, "bound": bound, "lambda": lam, "l": l, "n": n, "eta": eta})


def run_theory_checks(seed: int = 0) -> list[CheckReport]:
    """The full lemma suite at default settings."""
    from .synthetic import build_model, first_axis

    reports = [
        check_cordes(10, (0.1, 0.3, 0.5, 0.9), 1000, seed),
        check_resolvent_identity(8, 0.5, (1, 2, 3, 4), 100, seed),
    ]
    lam_grid = np.geomspace(1e-6, 1.0, 60)
    for phi in (index_fn.holder(0.5), index_fn.holder(1.0),
                index_fn.piecewise_linear([(0, 0), (0.5, 0.1), (1, 1)])):
        reports.append(check_sup_lemma(phi, 1.0, lam_grid))
    model = build_model(2.0, 3, index_fn.holder(1.0, s=5.0), first_axis(1.0), noise_sd=0.0)
    reports.append(check_power_comparison(model, 1.0, 0.5, 20000, 200, 0.1, seed))
    return reports
