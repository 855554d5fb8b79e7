"""Premiums, government subsidy present values and the cost of social protection."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .analytics import laplace_trapping, trapping_probability
from .barrier import _Basis, _degenerate, _setup, _below
from .errors import InvalidInitialCapital
from .model import ModelParams, SchemeSpec, SchemeTag, premium
from .specfun import DEFAULT_POLICY, SeriesPolicy

__all__ = [
    "SubsidyRateMode",
    "WelfareParams",
    "premium",
    "subsidy_rate",
    "subsidy_value_constant",
    "subsidy_value_barrier",
    "subsidy_value_barrier_derivative",
    "subsidy_value",
    "cost_of_social_protection",
]


class SubsidyRateMode(enum.Enum):
    # rate = theta - theta_star, the loading difference taken literally
    LITERAL = "literal"
    # rate = (theta - theta_star)(1 - kappa) lam / alpha, a currency flow
    DIMENSIONAL = "dimensional"


@dataclass(frozen=True)
class WelfareParams:
    delta: float = 0.9
    m_cost: float = 8.0
    subsidy_rate_mode: SubsidyRateMode = SubsidyRateMode.LITERAL

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.m_cost > 0:
            raise ValueError("m_cost must be positive")


def subsidy_rate(params: ModelParams, scheme: SchemeSpec, w: WelfareParams) -> float:
    """Per-unit-time subsidy of the constant scheme."""
    if scheme.tag is not SchemeTag.SUBSIDISED:
        raise ValueError("only the subsidised scheme has a constant subsidy rate")
    beta = scheme.theta - scheme.theta_star
    if w.subsidy_rate_mode is SubsidyRateMode.DIMENSIONAL:
        return beta * (1.0 - scheme.kappa) * params.lam / params.alpha
    return beta


def subsidy_value_constant(
    params: ModelParams,
    scheme: SchemeSpec,
    x: float,
    w: WelfareParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
) -> float:
    """``rate / delta * (1 - m_delta(x))`` for the subsidised household."""
    rate = subsidy_rate(params, scheme, w)
    if rate == 0:
        return 0.0
    return rate / w.delta * (1.0 - laplace_trapping(params, scheme, x, w.delta, policy))


def _barrier_value_parts(params, scheme, w, policy, pasting):
    s = _setup(params, scheme, w.delta, pasting)
    basis = _Basis(s, policy)
    prem = premium(params, scheme.kappa, scheme.theta)
    d = w.delta
    q = s.lam * prem / ((s.lam + d) * d)
    # the premium flow adds pi/(B - x_A) to the drift term below the barrier
    jump = prem / (s.r * (s.barrier - s.x_a)) if pasting == "flux" else 0.0
    coef = (q * basis.g1 + s.omega * basis.lx * prem / d - jump) / basis.g2
    at_b = -q * basis.f1 + coef * basis.f2 + prem / d
    return s, basis, prem, q, coef, at_b


def subsidy_value_barrier(
    params: ModelParams,
    scheme: SchemeSpec,
    x: float,
    w: WelfareParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
    pasting: str = "flux",
    side: str = "auto",
) -> float:
    """Present value of premiums paid by the government while capital is below B.

    Below the barrier the value is ``pi/delta`` plus a homogeneous part that
    brings it down to ``pi/(lam + delta)`` at the critical capital; above it
    only the decaying solution survives.  The premium flow switching off at
    B makes the slope jump by ``pi / (r (B - x_A))`` on top of the rate
    ratio seen by the trapping transform.
    """
    s = _setup(params, scheme, w.delta, pasting)
    if not x >= s.x_a:
        raise InvalidInitialCapital(f"x={x!r} is below the critical capital {s.x_a!r}")
    prem = premium(params, scheme.kappa, scheme.theta)
    if prem == 0:
        return 0.0
    if x == s.x_a:
        return prem / (s.lam + w.delta)
    if _degenerate(s):
        return 0.0
    s, basis, prem, q, coef, at_b = _barrier_value_parts(params, scheme, w, policy, pasting)
    if _below(x, s.barrier, side):
        f1, f2 = basis.lower(x)
        return -q * f1 + coef * f2 + prem / w.delta
    return at_b * basis.upper_ratio(x)


def subsidy_value_barrier_derivative(
    params, scheme, x, w, policy=DEFAULT_POLICY, pasting="flux", side="auto"
) -> float:
    """Analytic x-derivative of :func:`subsidy_value_barrier` (one-sided at B)."""
    s, basis, prem, q, coef, at_b = _barrier_value_parts(params, scheme, w, policy, pasting)
    if _below(x, s.barrier, side):
        f1_x, f2_x = basis.lower_x(x)
        return -q * f1_x + coef * f2_x
    return at_b * basis.upper_ratio_x(x)


def subsidy_value(
    params: ModelParams, scheme: SchemeSpec, x: float, w: WelfareParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
) -> float:
    """Government outlay for any scheme; zero when no subsidy flows."""
    if scheme.tag is SchemeTag.SUBSIDISED:
        return subsidy_value_constant(params, scheme, x, w, policy)
    if scheme.tag is SchemeTag.BARRIER:
        return subsidy_value_barrier(params, scheme, x, w, policy)
    x_c = scheme.critical_capital(params)
    if not x >= x_c:
        raise InvalidInitialCapital(f"x={x!r} is below the critical capital {x_c!r}")
    return 0.0


def cost_of_social_protection(
    params: ModelParams, scheme: SchemeSpec, x: float, w: WelfareParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
) -> float:
    """Subsidy outlay plus the expected lift-out cost ``M psi(x)``."""
    v = subsidy_value(params, scheme, x, w, policy)
    psi = trapping_probability(params, scheme, x)
    out = v + w.m_cost * psi
    if not math.isfinite(out):
        raise ArithmeticError(f"non-finite cost {out!r}")
    return out
