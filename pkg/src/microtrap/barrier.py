"""Two-regime closed forms for the barrier-subsidised scheme.

Below the barrier ``B`` the household pays nothing and grows at ``r``; above
it pays its own premium and grows at ``r_k``.  Both regimes share the
critical capital ``x_A`` and the retained-loss rate ``alpha_k``.  With
``y = -alpha_k (x - x_A)`` the Laplace transform is

    x <= B:  C1 M(-delta/r, c1; y) + C2 exp(y) U(b1, c1; -y)
    x >= B:  C4 exp(y) U(b2, c2; -y)

with ``b = 1 - lam/rho`` and ``c = 1 - (lam + delta)/rho`` for the regime's
``rho``.  ``C1 + C2 U(b1, c1; 0) = lam/(lam + delta)`` fixes the boundary.

Matching at B.  ``m`` is continuous.  Writing the integro-differential
equation on both sides of ``B`` and subtracting leaves only the drift terms,
so the first derivative jumps: ``r m'(B-) = r_k m'(B+)``.  This flux
condition is the default (``pasting="flux"``); ``pasting="smooth"`` imposes
plain C1 continuity instead, which agrees with it only when ``r_k = r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInitialCapital, SingularMatching
from .model import ModelParams, SchemeSpec, SchemeTag
from .specfun import DEFAULT_POLICY, SeriesPolicy, _gamma_ratio_log, gamma_pq, kummer_m, tricomi_u

__all__ = [
    "PASTINGS",
    "BarrierConstants",
    "barrier_constants",
    "barrier_laplace",
    "barrier_laplace_derivative",
    "barrier_trapping_probability",
    "barrier_expected_trapping_time",
]

PASTINGS = ("flux", "smooth")
# barriers this close to the critical capital use the insured formulas
DEGENERATE_GAP = 1e-9


@dataclass(frozen=True)
class BarrierConstants:
    c1: float
    c2: float
    c3: float
    c4: float
    d_term: float
    k_term: float


@dataclass(frozen=True)
class _Setup:
    lam: float
    r: float
    r_k: float
    alpha_k: float
    x_a: float
    barrier: float
    delta: float
    omega: float

    def y(self, x):
        return -self.alpha_k * (x - self.x_a)


def _setup(params: ModelParams, scheme: SchemeSpec, delta: float, pasting: str) -> _Setup:
    if scheme.tag is not SchemeTag.BARRIER:
        raise ValueError("barrier formulas need a barrier scheme")
    if pasting not in PASTINGS:
        raise ValueError(f"pasting must be one of {PASTINGS}")
    omega = scheme.r_ins / params.r if pasting == "flux" else 1.0
    return _Setup(
        params.lam, params.r, scheme.r_ins, scheme.loss_rate(params), scheme.x_star_ins,
        scheme.barrier, delta, omega,
    )


def _degenerate(s: _Setup) -> bool:
    return s.barrier - s.x_a <= DEGENERATE_GAP * max(1.0, abs(s.x_a))


def _insured_twin(scheme: SchemeSpec) -> SchemeSpec:
    return SchemeSpec(
        SchemeTag.INSURED, scheme.r_ins, scheme.x_star_ins, scheme.kappa, scheme.theta,
        label=scheme.label, mapping=scheme.mapping,
    )


class _Basis:
    """Homogeneous solutions of both regimes, evaluated around the barrier.

    The lower regime uses the pair ``f1 = M(-delta/r, c1; y)`` and
    ``f2 = exp(-w) w**(1 - c1) M(1 + b1 - c1, 2 - c1; w)`` with
    ``w = -y``.  They stay independent for every parameter set, unlike the
    ``(M, exp(y) U)`` pair, which collapses when ``lam/r`` is an integer
    because ``U(-n, c; w)`` is then a multiple of ``M(-n, c; w)``.  Since
    ``f2`` vanishes at the critical capital, the boundary value fixes the
    ``f1`` coefficient on its own.
    """

    def __init__(self, s: _Setup, policy: SeriesPolicy):
        lam, r, r_k, d, ak = s.lam, s.r, s.r_k, s.delta, s.alpha_k
        self.s = s
        self.policy = policy
        self.a1 = -d / r
        self.b1, self.c1 = 1.0 - lam / r, 1.0 - (lam + d) / r
        self.b2, self.c2 = 1.0 - lam / r_k, 1.0 - (lam + d) / r_k
        self.f1, self.f2 = self.lower(s.barrier)
        self.f1_x, self.f2_x = self.lower_x(s.barrier)
        u2 = tricomi_u(self.b2, self.c2, s.alpha_k * (s.barrier - s.x_a), policy)
        w_b = ak * (s.barrier - s.x_a)
        self.d_term = ak * (lam / r_k - 1.0) * tricomi_u(1.0 + self.b2, 1.0 + self.c2, w_b, policy) / u2
        # logarithmic x-derivative of the upper solution at B
        self.lx = self.d_term - ak
        # residuals of each lower solution against the flux condition
        self.g1 = self.f1_x - s.omega * self.lx * self.f1
        self.g2 = self.f2_x - s.omega * self.lx * self.f2
        scale = max(abs(self.f2_x), abs(s.omega * self.lx * self.f2))
        if not abs(self.g2) > 1e-12 * scale:
            raise SingularMatching(f"matching residual {self.g2!r} against scale {scale!r}")

    def lower(self, x):
        s = self.s
        w = s.alpha_k * (x - s.x_a)
        f1 = kummer_m(self.a1, self.c1, -w, self.policy, guard=False)
        if w == 0:
            return f1, 0.0
        f2 = math.exp(-w + (1.0 - self.c1) * math.log(w)) * kummer_m(
            1.0 + self.b1 - self.c1, 2.0 - self.c1, w, self.policy)
        return f1, f2

    def lower_x(self, x):
        s, ak = self.s, self.s.alpha_k
        w = ak * (x - s.x_a)
        f1_x = ak * s.delta / (s.r - s.lam - s.delta) * kummer_m(
            1.0 + self.a1, 1.0 + self.c1, -w, self.policy, guard=False)
        sh, aa, cc = 1.0 - self.c1, 1.0 + self.b1 - self.c1, 2.0 - self.c1
        if w == 0:
            return f1_x, (ak if sh == 1.0 else 0.0)
        pre = math.exp(-w + sh * math.log(w))
        f2_w = pre * ((sh / w - 1.0) * kummer_m(aa, cc, w, self.policy)
                      + aa / cc * kummer_m(aa + 1.0, cc + 1.0, w, self.policy))
        return f1_x, ak * f2_w

    def upper_ratio(self, x):
        """``E2(x) / E2(B)`` for the decaying upper solution ``E2 = exp(y) U(b2, c2; -y)``."""
        s = self.s
        w, wb = s.alpha_k * (x - s.x_a), s.alpha_k * (s.barrier - s.x_a)
        return math.exp(wb - w) * tricomi_u(self.b2, self.c2, w, self.policy) / tricomi_u(
            self.b2, self.c2, wb, self.policy)

    def upper_ratio_x(self, x):
        s, ak = self.s, self.s.alpha_k
        w, wb = ak * (x - s.x_a), ak * (s.barrier - s.x_a)
        u2 = tricomi_u(self.b2, self.c2, w, self.policy)
        du = ak * (s.lam / s.r_k - 1.0) * tricomi_u(1.0 + self.b2, 1.0 + self.c2, w, self.policy)
        return math.exp(wb - w) * (du - ak * u2) / tricomi_u(self.b2, self.c2, wb, self.policy)


def _lower_coefficients(basis: _Basis):
    """``(A, C)`` with ``m = A f1 + C f2`` below the barrier."""
    s = basis.s
    p = s.lam / (s.lam + s.delta)
    return p, -p * basis.g1 / basis.g2


def _constants(basis: _Basis) -> BarrierConstants:
    s = basis.s
    p, c_f2 = _lower_coefficients(basis)
    # exp(y) U(b1, c1; -y) = U(b1, c1; 0) f1 + gamma(c1 - 1)/gamma(b1) f2
    u10 = tricomi_u(basis.b1, basis.c1, 0.0, basis.policy)
    sign, log_g = _gamma_ratio_log([basis.c1 - 1.0], [basis.b1])
    if sign == 0:
        raise SingularMatching(
            f"lam/r={s.lam / s.r!r} is an integer: the Tricomi solution is a multiple of the "
            "Kummer one and the two-constant form does not exist"
        )
    g_u = sign * math.exp(log_g)
    c2 = c_f2 / g_u
    c1 = p - c2 * u10
    w_b = s.alpha_k * (s.barrier - s.x_a)
    e2 = math.exp(-w_b) * tricomi_u(basis.b2, basis.c2, w_b, basis.policy)
    c4 = (p * basis.f1 + c_f2 * basis.f2) / e2
    return BarrierConstants(c1, c2, 0.0, c4, basis.d_term, -g_u * basis.g2)


def barrier_constants(
    params: ModelParams,
    scheme: SchemeSpec,
    delta: float,
    policy: SeriesPolicy = DEFAULT_POLICY,
    pasting: str = "flux",
) -> BarrierConstants:
    """Coefficients of the piecewise Laplace transform.

    ``c3`` is always zero (the upper regime's Kummer solution is unbounded).

    Raises:
        SingularMatching: the 2x2 matching system is numerically singular.
    """
    if not delta > 0:
        raise ValueError("delta must be positive; use barrier_trapping_probability at 0")
    return _constants(_Basis(_setup(params, scheme, delta, pasting), policy))


def barrier_laplace(
    params: ModelParams,
    scheme: SchemeSpec,
    x: float,
    delta: float,
    policy: SeriesPolicy = DEFAULT_POLICY,
    pasting: str = "flux",
    side: str = "auto",
) -> float:
    """Laplace transform of the trapping time under the barrier scheme.

    ``side`` forces the lower (``"below"``) or upper (``"above"``) branch,
    which is only meaningful at ``x = B``.
    """
    if delta == 0:
        return barrier_trapping_probability(params, scheme, x, pasting)
    s = _setup(params, scheme, delta, pasting)
    if not x >= s.x_a:
        raise InvalidInitialCapital(f"x={x!r} is below the critical capital {s.x_a!r}")
    if _degenerate(s):
        from .analytics import laplace_trapping

        return laplace_trapping(params, _insured_twin(scheme), x, delta, policy)
    if x == s.x_a:
        return s.lam / (s.lam + delta)
    basis = _Basis(s, policy)
    a, c = _lower_coefficients(basis)
    if _below(x, s.barrier, side):
        f1, f2 = basis.lower(x)
        return a * f1 + c * f2
    return (a * basis.f1 + c * basis.f2) * basis.upper_ratio(x)


def barrier_laplace_derivative(
    params, scheme, x, delta, policy=DEFAULT_POLICY, pasting="flux", side="auto"
) -> float:
    """Analytic x-derivative of :func:`barrier_laplace` (one-sided at ``B``)."""
    s = _setup(params, scheme, delta, pasting)
    basis = _Basis(s, policy)
    a, c = _lower_coefficients(basis)
    if _below(x, s.barrier, side):
        f1_x, f2_x = basis.lower_x(x)
        return a * f1_x + c * f2_x
    return (a * basis.f1 + c * basis.f2) * basis.upper_ratio_x(x)


def _below(x, barrier, side):
    if side == "below":
        return True
    if side == "above":
        return False
    if side != "auto":
        raise ValueError("side must be 'auto', 'below' or 'above'")
    return x <= barrier


def barrier_trapping_probability(
    params: ModelParams, scheme: SchemeSpec, x: float, pasting: str = "flux"
) -> float:
    """Trapping probability under the barrier scheme.

    With ``a = lam/r``, ``b = lam/r_k``, ``z = alpha_k (x - x_A)`` and
    ``w = r_k / r`` (1 for smooth pasting),

        x <= B:  1 - w gamma(a, z) / D
        x >= B:  z_B**(a - b) Gamma(b, z) / D
        D = z_B**(a - b) Gamma(b, z_B) + w gamma(a, z_B)

    evaluated in log space through the regularised P and Q.
    """
    s = _setup(params, scheme, 0.0, pasting)
    if not x >= s.x_a:
        raise InvalidInitialCapital(f"x={x!r} is below the critical capital {s.x_a!r}")
    if x == s.x_a:
        return 1.0
    if math.isinf(s.alpha_k):
        return 0.0
    if _degenerate(s):
        from .analytics import trapping_probability

        return trapping_probability(params, _insured_twin(scheme), x)
    a, b = s.lam / s.r, s.lam / s.r_k
    z = s.alpha_k * (x - s.x_a)
    zb = s.alpha_k * (s.barrier - s.x_a)
    p_ab, _ = gamma_pq(a, zb)
    _, q_bb = gamma_pq(b, zb)
    log_up = (a - b) * math.log(zb) + math.lgamma(b)  # weight of the upper branch
    log_lo = math.log(s.omega) + math.lgamma(a)
    terms = [t for t in (log_up + _log(q_bb), log_lo + _log(p_ab)) if t > -math.inf]
    top = max(terms)
    log_den = top + math.log(sum(math.exp(t - top) for t in terms))
    if x <= s.barrier:
        p_a, _ = gamma_pq(a, z)
        return 1.0 - math.exp(log_lo + _log(p_a) - log_den)
    _, q_b = gamma_pq(b, z)
    return math.exp(log_up + _log(q_b) - log_den)


def _log(v):
    return math.log(v) if v > 0 else -math.inf


def barrier_expected_trapping_time(
    params: ModelParams,
    scheme: SchemeSpec,
    x: float,
    h: float = 1e-3,
    policy: SeriesPolicy = DEFAULT_POLICY,
    pasting: str = "flux",
) -> float:
    """``-d m_delta / d delta`` at 0 by a Richardson-extrapolated one-sided difference.

    The exact value at ``delta = 0`` comes from the closed trapping
    probability; the two steps ``h`` and ``h/2`` cancel the O(h) term.
    """
    psi = barrier_trapping_probability(params, scheme, x, pasting)

    def slope(step):
        return (psi - barrier_laplace(params, scheme, x, step, policy, pasting)) / step

    return 2.0 * slope(0.5 * h) - slope(h)
