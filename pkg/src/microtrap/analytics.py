"""Closed forms for the uninsured and proportionally insured processes.

With ``rho`` the growth rate, ``x_c`` the critical capital and ``alpha_k``
the rate of the retained loss, write ``z = alpha_k (x - x_c)``.  Then

    m_delta(x) = lam / ((lam + delta) U(a, c; 0)) * exp(-z) U(a, c; z),
    a = 1 - lam/rho,  c = 1 - (lam + delta)/rho,

and at ``delta = 0`` this collapses to ``Q(lam/rho, z)``, the regularised
upper incomplete gamma function.  Barrier schemes are forwarded to
:mod:`microtrap.barrier`.
"""

from __future__ import annotations

import math
import warnings
from typing import Tuple

from .errors import IntegerC, InvalidInitialCapital
from .model import ModelParams, SchemeSpec, SchemeTag
from .specfun import DEFAULT_POLICY, SeriesPolicy, gamma_pq, tricomi_u, tricomi_u_dc

__all__ = [
    "process_constants",
    "laplace_trapping",
    "laplace_trapping_u",
    "trapping_probability",
    "expected_trapping_time",
]

# half-width of the symmetric shift applied to an integer lam/rho before
# the expected-time formula is averaged over both sides
INTEGER_SHIFT = 1e-4


def process_constants(params: ModelParams, scheme: SchemeSpec) -> Tuple[float, float, float]:
    """``(rho, x_c, alpha_k)`` of a single-regime scheme."""
    if scheme.tag is SchemeTag.BARRIER:
        raise ValueError("barrier schemes have two regimes; use microtrap.barrier")
    return scheme.growth_rate(params), scheme.critical_capital(params), scheme.loss_rate(params)


def _start(params, scheme, x):
    rho, x_c, alpha_k = process_constants(params, scheme)
    if not x >= x_c:
        raise InvalidInitialCapital(f"x={x!r} is below the critical capital {x_c!r}")
    return rho, x_c, alpha_k


def trapping_probability(params: ModelParams, scheme: SchemeSpec, x: float) -> float:
    """Infinite-horizon trapping probability ``Q(lam/rho, alpha_k (x - x_c))``.

    With full cover (``kappa = 0``) no loss can push capital down: the value
    is 1 on the critical capital itself and 0 above it.
    """
    if scheme.tag is SchemeTag.BARRIER:
        from .barrier import barrier_trapping_probability

        return barrier_trapping_probability(params, scheme, x)
    rho, x_c, alpha_k = _start(params, scheme, x)
    if x == x_c:
        return 1.0
    if math.isinf(alpha_k):
        return 0.0
    return gamma_pq(params.lam / rho, alpha_k * (x - x_c))[1]


def laplace_trapping(
    params: ModelParams,
    scheme: SchemeSpec,
    x: float,
    delta: float,
    policy: SeriesPolicy = DEFAULT_POLICY,
) -> float:
    """Laplace transform ``E[exp(-delta tau) 1{tau < inf}]`` of the trapping time.

    ``delta = 0`` is answered by :func:`trapping_probability`.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        return trapping_probability(params, scheme, x)
    if scheme.tag is SchemeTag.BARRIER:
        from .barrier import barrier_laplace

        return barrier_laplace(params, scheme, x, delta, policy)
    return laplace_trapping_u(params, scheme, x, delta, policy)


def laplace_trapping_u(params, scheme, x, delta, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """The Tricomi-function route, usable at ``delta = 0`` as well."""
    rho, x_c, alpha_k = _start(params, scheme, x)
    lam = params.lam
    edge = lam / (lam + delta)
    if x == x_c:
        return edge
    if math.isinf(alpha_k):
        return 0.0
    a = 1.0 - lam / rho
    c = 1.0 - (lam + delta) / rho
    z = alpha_k * (x - x_c)
    u0 = tricomi_u(a, c, 0.0, policy)
    return edge * math.exp(-z) * tricomi_u(a, c, z, policy) / u0


def expected_trapping_time(
    params: ModelParams,
    scheme: SchemeSpec,
    x: float,
    policy: SeriesPolicy = DEFAULT_POLICY,
    perturb: bool = False,
) -> float:
    """Defective mean ``E[tau 1{tau < inf}] = -d m_delta / d delta`` at ``delta = 0``.

    The c-derivative of U is only available off the integers, so an integer
    ``lam/rho`` raises :class:`IntegerC` unless ``perturb`` is set; then the
    result is the average at ``lam/rho -/+ INTEGER_SHIFT`` and a warning is
    emitted.
    """
    if scheme.tag is SchemeTag.BARRIER:
        from .barrier import barrier_expected_trapping_time

        return barrier_expected_trapping_time(params, scheme, x, policy=policy)
    rho, x_c, alpha_k = _start(params, scheme, x)
    lam = params.lam
    if x == x_c:
        return 1.0 / lam
    if math.isinf(alpha_k):
        return 0.0
    shape = lam / rho
    z = alpha_k * (x - x_c)
    n = round(shape)
    if abs(shape - n) <= policy.integer_guard:
        if not perturb:
            raise IntegerC(f"lam/rho={shape!r} is an integer; pass perturb=True")
        warnings.warn(
            f"lam/rho={shape!r} is an integer; averaging over lam/rho = {n} -/+ {INTEGER_SHIFT}",
            RuntimeWarning,
            stacklevel=2,
        )
        lo = _expected_time(lam, lam / (n - INTEGER_SHIFT), z, policy)
        hi = _expected_time(lam, lam / (n + INTEGER_SHIFT), z, policy)
        return 0.5 * (lo + hi)
    return _expected_time(lam, rho, z, policy)


def _expected_time(lam, rho, z, policy):
    shape = lam / rho
    a = 1.0 - shape
    q = gamma_pq(shape, z)[1]
    u0 = math.gamma(shape)  # U(a, a; 0) = Gamma(1 - a)
    du0 = tricomi_u_dc(a, a, 0.0, policy)
    duz = tricomi_u_dc(a, a, z, policy)
    return q / lam - q * du0 / (rho * u0) + math.exp(-z) * duz / (rho * u0)
