"""Optimal subsidised loading, optimal barrier, and grid sweeps.

Both optimisers bisect a monotone difference of trapping probabilities.
A household whose capital sits below a candidate scheme's critical capital
is treated as trapped with certainty, so the objectives stay defined on the
whole bracket.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

from .analytics import expected_trapping_time, laplace_trapping, trapping_probability
from .barrier import barrier_trapping_probability
from .errors import BracketFailure, MicrotrapError, MonotonicityViolation
from .model import ModelParams, SchemeSpec
from .welfare import WelfareParams, cost_of_social_protection, subsidy_value

__all__ = [
    "RootConfig",
    "Verdict",
    "RootResult",
    "optimal_theta",
    "optimal_barrier",
    "default_b_max",
    "QUANTITIES",
    "CellError",
    "SweepTable",
    "sweep",
]


@dataclass(frozen=True)
class RootConfig:
    """Bisection controls.

    ``bracket_expansion`` widens a user-supplied barrier bracket that turns
    out too narrow: ``b_max - x_A`` is multiplied by it until the objective
    changes sign or the default ceiling is reached.
    """

    abs_tol: float = 1e-10
    max_iter: int = 200
    bracket_expansion: float = 2.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.bracket_expansion > 1:
            raise ValueError("bracket_expansion must exceed 1")


class Verdict(enum.Enum):
    INTERIOR = "Interior"
    ALL_SUBSIDY_INSUFFICIENT = "AllSubsidyInsufficient"
    NO_SUBSIDY_NEEDED = "NoSubsidyNeeded"
    NO_BARRIER_NEEDED = "NoBarrierNeeded"
    BARRIER_INSUFFICIENT = "BarrierInsufficient"


@dataclass(frozen=True)
class RootResult:
    value: Optional[float]
    verdict: Verdict
    residual: float
    iterations: int


def _bisect(f: Callable[[float], float], lo: float, hi: float, cfg: RootConfig, f_lo: float):
    """Root of an increasing-or-decreasing ``f`` with ``f(lo) <= 0 < f(hi)`` orientation kept."""
    cap = min(cfg.max_iter, math.ceil(math.log2(max((hi - lo) / cfg.abs_tol, 1.0))) + 2)
    it = 0
    while hi - lo > cfg.abs_tol and it < cap:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        it += 1
        if (fm <= 0) == (f_lo <= 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return root, f(root), it


def _safe(f: Callable[[float], float], at: float, what: str) -> float:
    try:
        v = f(at)
    except (MicrotrapError, ArithmeticError, ValueError) as exc:
        raise BracketFailure(f"{what} not evaluable at {at!r}: {exc}") from exc
    if not math.isfinite(v):
        raise BracketFailure(f"{what} is not finite at {at!r}")
    return v


def _psi_or_one(params, scheme, x):
    if x < scheme.critical_capital(params):
        return 1.0
    return trapping_probability(params, scheme, x)


def optimal_theta(
    params: ModelParams,
    kappa: float,
    theta: float,
    x: float,
    cfg: RootConfig = RootConfig(),
    mapping: str = "drift",
) -> RootResult:
    """Largest loading the household can face and still do no worse than uninsured.

    Solves ``psi(kappa, t; x) = psi(x)`` for ``t`` in ``[0, theta]``.
    """
    target = trapping_probability(params, SchemeSpec.uninsured(params), x)

    def f(t):
        s = SchemeSpec.subsidised(params, kappa, theta, t, mapping=mapping)
        return _psi_or_one(params, s, x) - target

    f_lo = _safe(f, 0.0, "theta objective")
    f_hi = _safe(f, theta, "theta objective")
    if f_lo > f_hi:
        raise MonotonicityViolation(f"F(0)={f_lo!r} exceeds F(theta)={f_hi!r}")
    if f_hi <= 0:
        return RootResult(theta, Verdict.NO_SUBSIDY_NEEDED, f_hi, 0)
    if f_lo > 0:
        return RootResult(None, Verdict.ALL_SUBSIDY_INSUFFICIENT, f_lo, 0)
    root, res, it = _bisect(f, 0.0, theta, cfg, f_lo)
    return RootResult(root, Verdict.INTERIOR, res, it)


def default_b_max(params: ModelParams, scheme: SchemeSpec) -> float:
    """Barrier beyond which the trapping probability has settled on its limit."""
    return scheme.x_star_ins + 60.0 / scheme.loss_rate(params)


def optimal_barrier(
    params: ModelParams,
    kappa: float,
    theta: float,
    x: float,
    b_max: Optional[float] = None,
    cfg: Optional[RootConfig] = None,
    mapping: str = "drift",
    pasting: str = "flux",
) -> RootResult:
    """Lowest barrier that makes the household no worse off than uninsured.

    Solves ``psi_A(x; B) = psi(x)`` for ``B`` in ``[x_A, b_max]``; the
    left-hand side falls as ``B`` rises.
    """
    base = SchemeSpec.barrier_scheme(params, kappa, theta, math.inf, mapping=mapping)
    x_a = base.x_star_ins
    if cfg is None:
        cfg = RootConfig(abs_tol=1e-10 * params.x_star)
    ceiling = default_b_max(params, base)
    if b_max is None:
        b_max = ceiling
    if b_max < x_a:
        raise ValueError("b_max must be >= the critical capital")
    target = trapping_probability(params, SchemeSpec.uninsured(params), x)

    def g(b):
        if x < x_a:
            return 1.0 - target
        return barrier_trapping_probability(params, base.with_barrier(b), x, pasting) - target

    g_lo = _safe(g, x_a, "barrier objective")
    if g_lo <= 0:
        return RootResult(x_a, Verdict.NO_BARRIER_NEEDED, g_lo, 0)
    g_hi = _safe(g, b_max, "barrier objective")
    while g_hi > 0 and b_max < ceiling:
        b_max = min(ceiling, x_a + (b_max - x_a) * cfg.bracket_expansion)
        g_hi = _safe(g, b_max, "barrier objective")
    if g_hi > 0:
        return RootResult(None, Verdict.BARRIER_INSUFFICIENT, g_hi, 0)
    root, res, it = _bisect(g, x_a, b_max, cfg, g_lo)
    return RootResult(root, Verdict.INTERIOR, res, it)


# --- sweeps -------------------------------------------------------------------

QUANTITIES = ("psi", "laplace", "expected_time", "subsidy", "cost", "theta_star", "barrier_star")


@dataclass(frozen=True)
class CellError:
    x: float
    scheme: str
    kind: str
    message: str


@dataclass
class SweepTable:
    """Rows follow the x grid, columns follow the scheme list; ``None`` marks failures."""

    quantity: str
    x: List[float]
    columns: List[str]
    values: List[List[Optional[float]]]
    errors: List[CellError] = field(default_factory=list)

    def column(self, label: str) -> List[Optional[float]]:
        j = self.columns.index(label)
        return [row[j] for row in self.values]


def _cell(quantity, params, scheme, x, welfare, delta, root_cfg):
    if quantity == "psi":
        return trapping_probability(params, scheme, x)
    if quantity == "laplace":
        return laplace_trapping(params, scheme, x, delta)
    if quantity == "expected_time":
        return expected_trapping_time(params, scheme, x, perturb=True)
    if quantity == "subsidy":
        return subsidy_value(params, scheme, x, welfare)
    if quantity == "cost":
        return cost_of_social_protection(params, scheme, x, welfare)
    if quantity == "theta_star":
        return optimal_theta(params, scheme.kappa, scheme.theta, x, root_cfg or RootConfig(),
                             mapping=scheme.mapping).value
    if quantity == "barrier_star":
        return optimal_barrier(params, scheme.kappa, scheme.theta, x, cfg=root_cfg,
                               mapping=scheme.mapping).value
    raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")


def sweep(
    params: ModelParams,
    schemes: Sequence[SchemeSpec],
    x_grid: Sequence[float],
    quantity: str,
    welfare: Optional[WelfareParams] = None,
    delta: float = 0.0,
    root_cfg: Optional[RootConfig] = None,
) -> SweepTable:
    """Evaluate one quantity for every (x, scheme) cell.

    Failures are caught per cell and recorded; the sweep itself only raises
    for malformed input.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    if not schemes:
        raise ValueError("at least one scheme is required")
    xs = [float(v) for v in x_grid]
    if not xs or any(b < a for a, b in zip(xs, xs[1:])):
        raise ValueError("x_grid must be non-empty and ascending")
    if quantity in ("subsidy", "cost") and welfare is None:
        raise ValueError(f"{quantity} needs welfare parameters")
    labels = [s.label for s in schemes]
    if len(set(labels)) != len(labels):
        raise ValueError("scheme labels must be unique")
    table = SweepTable(quantity, xs, labels, [])
    for x in xs:
        row = []
        for s in schemes:
            try:
                v = _cell(quantity, params, s, x, welfare, delta, root_cfg)
                if v is not None and not math.isfinite(v):
                    raise ArithmeticError(f"non-finite value {v!r}")
            except (MicrotrapError, ArithmeticError, ValueError) as exc:
                table.errors.append(CellError(x, s.label, type(exc).__name__, str(exc)))
                v = None
            row.append(v)
        table.values.append(row)
    return table
