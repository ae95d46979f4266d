"""Index functions: construction, validation, covering and inversion.

An index function is a continuous, non-decreasing map ``phi: [0, s] -> R``
with ``phi(0) = 0``. It measures the smoothness of a target relative to the
spectrum of a positive operator. Every index function is handled the same
way here, whether or not it factors into simpler pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import RangeError, ValidationError

__all__ = [
    "IndexFunction",
    "ValidationReport",
    "CoveringResult",
    "composite_grid",
    "make_builtin",
    "holder",
    "holder_log",
    "piecewise_linear",
    "from_config",
    "validate_index",
    "covering_check",
    "psi_of",
    "invert_monotone",
]

GEOMETRIC_POINTS = 512
UNIFORM_POINTS = 512
GEOMETRIC_FLOOR = 1e-12
MONOTONE_TOL = 1e-12
DEFAULT_C_FLOOR = 1e-6
BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200


@dataclass(frozen=True)
class IndexFunction:
    """A monotone function on ``[0, s]`` vanishing at the origin.

    Parameters
    ----------
    evaluator : callable
        Vectorized map from an array of ``t`` values to ``phi(t)``.
    s : float
        Right endpoint of the domain.
    label : str
        Human-readable descriptor.
    covering_constant_c : float, optional
        A known constant ``c`` for the covering inequality, if any.
    config : dict, optional
        Serializable description, used to round-trip through config files.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    s: float
    label: str = "phi"
    covering_constant_c: float | None = None
    config: Mapping[str, Any] | None = field(default=None, compare=False)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.asarray(self.evaluator(arr), dtype=float)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).copy()
        if out.ndim == 0:
            return float(out)
        return out

    def to_config(self) -> dict:
        if self.config is None:
            raise ValidationError(f"index function {self.label!r} has no config form")
        return {**self.config, "s": self.s}


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    zero_ok: bool
    monotone_ok: bool
    finite_ok: bool
    nonnegative_ok: bool
    value_at_zero: float
    max_decrease: float
    failures: tuple[str, ...] = ()


@dataclass(frozen=True)
class CoveringResult:
    covered: bool
    c_estimate: float
    decaying: bool = False


def composite_grid(s: float, n_geometric: int = GEOMETRIC_POINTS,
                   n_uniform: int = UNIFORM_POINTS, include_zero: bool = True) -> np.ndarray:
    """Sorted union of a geometric grid on ``[1e-12 s, s]`` and a uniform grid on ``[0, s]``."""
    geo = np.geomspace(GEOMETRIC_FLOOR * s, s, n_geometric) if n_geometric > 0 else np.empty(0)
    uni = np.linspace(0.0, s, n_uniform) if n_uniform > 0 else np.empty(0)
    grid = np.unique(np.concatenate([geo, uni, [s]]))
    if not include_zero:
        grid = grid[grid > 0]
    elif grid[0] != 0.0:
        grid = np.concatenate([[0.0], grid])
    return grid


# -- builtins ---------------------------------------------------------------

def holder(r: float, s: float = 1.0) -> IndexFunction:
    """``phi(t) = t**r``."""
    if not r > 0:
        raise ValidationError(f"Hölder exponent must be positive, got {r}")
    _check_s(s)
    return IndexFunction(lambda t: np.power(t, r), s=s, label=f"holder(r={r:g})",
                         config={"kind": "holder", "r": r})


def holder_log(r: float, p: float, s: float = 1.0) -> IndexFunction:
    """``phi(t) = t**r * log(e + 1/t)**(-p)`` with ``phi(0) = 0``."""
    if not r > 0:
        raise ValidationError(f"Hölder exponent must be positive, got {r}")
    if not p >= 0:
        raise ValidationError(f"log exponent must be nonnegative, got {p}")
    _check_s(s)

    def ev(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = np.power(t, r) * np.power(np.log(math.e + 1.0 / t), -p)
        return np.where(t > 0, val, 0.0)

    return IndexFunction(ev, s=s, label=f"holder_log(r={r:g}, p={p:g})",
                         config={"kind": "holder_log", "r": r, "p": p})


def piecewise_linear(knots: Sequence[Sequence[float]], s: float | None = None) -> IndexFunction:
    """Linear interpolation through ``knots``, constant beyond the last knot.

    The first knot must be ``(0, 0)``; abscissae strictly increase and
    ordinates never decrease.
    """
    pts = np.asarray(knots, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValidationError("knots must be a list of at least two (t, phi) pairs")
    xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
    if xs[0] != 0.0 or ys[0] != 0.0:
        raise ValidationError("first knot must be (0, 0)")
    if np.any(np.diff(xs) <= 0):
        raise ValidationError("knot abscissae must be strictly increasing")
    if np.any(np.diff(ys) < 0):
        raise ValidationError("knot ordinates must be non-decreasing")
    if s is None:
        s = float(xs[-1])
    _check_s(s)
    return IndexFunction(lambda t: np.interp(t, xs, ys), s=s,
                         label=f"piecewise_linear({len(xs)} knots)",
                         config={"kind": "piecewise_linear", "knots": pts.tolist()})


def make_builtin(kind: str, s: float, **params) -> IndexFunction:
    """Build a named index function: ``holder``, ``holder_log`` or ``piecewise_linear``."""
    if kind == "holder":
        return holder(params["r"], s)
    if kind == "holder_log":
        return holder_log(params["r"], params.get("p", 0.0), s)
    if kind == "piecewise_linear":
        return piecewise_linear(params["knots"], s)
    raise ValidationError(f"unknown index function kind {kind!r}")


def from_config(block: Mapping[str, Any], s: float | None = None) -> IndexFunction:
    """Build from a config block like ``{"kind": "holder", "r": 0.5}``.

    An ``"s"`` entry in the block takes precedence over the ``s`` argument.
    """
    params = dict(block)
    kind = params.pop("kind")
    s_val = params.pop("s", s)
    if s_val is None:
        if kind == "piecewise_linear":
            s_val = float(params["knots"][-1][0])
        else:
            s_val = 1.0
    return make_builtin(kind, float(s_val), **params)


def _check_s(s):
    if not (s > 0 and math.isfinite(s)):
        raise ValidationError(f"domain endpoint s must be positive and finite, got {s}")


# -- checks -----------------------------------------------------------------

def validate_index(phi: IndexFunction, grid_size: int = GEOMETRIC_POINTS + UNIFORM_POINTS) -> ValidationReport:
    """Check the index-function axioms on a composite grid of ``[0, s]``."""
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")
    n_geo = grid_size // 2
    grid = composite_grid(phi.s, n_geo, grid_size - n_geo)
    with np.errstate(all="ignore"):
        vals = np.asarray(phi(grid), dtype=float)
    finite_ok = bool(np.all(np.isfinite(vals)))
    v0 = float(vals[0])
    zero_ok = v0 == 0.0
    nonneg_ok = bool(np.all(vals[np.isfinite(vals)] >= 0))
    drops = -np.diff(vals)
    max_drop = float(np.nanmax(drops)) if drops.size else 0.0
    monotone_ok = finite_ok and max_drop <= MONOTONE_TOL
    failures = []
    if not zero_ok:
        failures.append(f"phi(0) = {v0!r}, expected 0")
    if not monotone_ok:
        failures.append(f"decrease of {max_drop:.3e} between consecutive grid points")
    if not finite_ok:
        failures.append("non-finite values on the grid")
    if not nonneg_ok:
        failures.append("negative values on the grid")
    return ValidationReport(
        passed=zero_ok and monotone_ok and finite_ok and nonneg_ok,
        zero_ok=zero_ok, monotone_ok=monotone_ok, finite_ok=finite_ok,
        nonnegative_ok=nonneg_ok, value_at_zero=v0, max_decrease=max_drop,
        failures=tuple(failures),
    )


def covering_check(phi: IndexFunction, nu0: float, grid_size: int = GEOMETRIC_POINTS,
                   c_floor: float = DEFAULT_C_FLOOR) -> CoveringResult:
    """Decide whether the qualification ``nu0`` covers ``phi`` on a grid.

    For each grid point ``t`` the ratio
    ``inf_{t <= sigma <= s} q(sigma) / q(t)`` with ``q(x) = x**nu0 / phi(x)``
    is computed; its minimum is the estimate of ``c``. Since the defining
    inequality quantifies over all of ``(0, s]``, a finite grid cannot
    certify it. The operational rule is: covered iff the estimate is at least
    ``c_floor`` and the ratio does not shrink monotonically over the
    smallest decade of the grid.
    """
    if not nu0 > 0:
        raise ValidationError(f"nu0 must be positive, got {nu0}")
    grid = composite_grid(phi.s, grid_size, grid_size, include_zero=False)
    vals = np.asarray(phi(grid), dtype=float)
    if not np.any(vals > 0):
        raise ValidationError(f"{phi.label} vanishes identically on (0, s]")
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(vals > 0, np.power(grid, nu0) / vals, np.inf)
    suffix_inf = np.minimum.accumulate(q[::-1])[::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.isinf(q), np.where(np.isinf(suffix_inf), 1.0, 0.0), suffix_inf / q)
    c_est = float(np.min(ratio))

    # smallest decade of t, read from larger to smaller t
    decade = ratio[grid <= 10 * grid[0]][::-1]
    decaying = False
    if decade.size >= 2 and decade[0] > 0:
        steps = np.diff(decade)
        monotone = bool(np.all(steps <= MONOTONE_TOL * decade[:-1]))
        decaying = monotone and decade[-1] < 0.99 * decade[0]
    covered = c_est >= c_floor and not decaying
    return CoveringResult(covered=bool(covered), c_estimate=c_est, decaying=bool(decaying))


# -- composition and inversion ----------------------------------------------

def psi_of(phi: IndexFunction, b: float) -> IndexFunction:
    """Return ``t -> t**(1/2 + 1/(2b)) * phi(t)`` on the domain of ``phi``."""
    if not b > 1:
        raise ValidationError(f"decay exponent b must exceed 1, got {b}")
    expo = 0.5 + 0.5 / b
    return IndexFunction(lambda t: np.power(t, expo) * phi(t), s=phi.s,
                         label=f"psi[{phi.label}, b={b:g}]")


def invert_monotone(psi: IndexFunction, y: float, tol: float = BISECTION_TOL,
                    upper: float | None = None) -> float:
    """Solve ``psi(t) = y`` by bisection on ``[0, upper]`` (default ``psi.s``).

    Returns ``t`` with ``|psi(t) - y| <= tol * max(y, 1e-300)``.
    """
    hi = float(psi.s if upper is None else upper)
    lo = 0.0
    f_lo, f_hi = float(psi(lo)), float(psi(hi))
    if not (f_lo <= y <= f_hi) or not math.isfinite(y):
        raise RangeError(f"y = {y!r} outside [{f_lo!r}, {f_hi!r}]")
    if y == f_lo:
        return lo
    atol = tol * max(y, 1e-300)
    if abs(f_hi - y) <= atol:
        return hi
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = float(psi(mid))
        if f_mid < f_lo or f_mid > f_hi:
            raise ValidationError(f"{psi.label} is not monotone on [{lo!r}, {hi!r}]")
        if abs(f_mid - y) <= atol:
            return mid
        if f_mid < y:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            return lo if y - f_lo <= f_hi - y else hi
    raise ValidationError(f"bisection did not converge for y = {y!r}")
