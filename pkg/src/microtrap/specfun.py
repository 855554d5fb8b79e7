"""Real-valued confluent hypergeometric kernel.

Kummer's M, Tricomi's U (via the two-M connection formula), the derivative of
U with respect to its second parameter, incomplete gamma functions, digamma
and the Pochhammer symbol.  Everything here is a pure function of float
arguments.

Only non-negative arguments of U are supported; the closed forms downstream
always use the real pair ``M(a, c; y)`` and ``exp(y) U(c - a, c; -y)`` with
``y <= 0``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .errors import (
    DivergentAtZero,
    DivergentIntegral,
    IntegerC,
    NonConvergence,
    PoleAtC,
    PoleAtNonPositiveInteger,
)

__all__ = [
    "SeriesPolicy",
    "DEFAULT_POLICY",
    "pochhammer",
    "kummer_m",
    "tricomi_u",
    "tricomi_u_dc",
    "upper_inc_gamma",
    "gamma_pq",
    "digamma",
]

_EPS = sys.float_info.epsilon
_TINY = sys.float_info.min / _EPS
# peak-term / |sum| ratio above which an M series with negative argument is
# re-summed through Kummer's transformation
_CANCELLATION_LIMIT = 1.0e2


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation controls for every series and continued fraction.

    Attributes:
        rel_tol: a series stops once two consecutive terms fall below
            ``rel_tol * |partial sum|``.
        max_terms: hard cap; reaching it raises :class:`NonConvergence`.
        integer_guard: half-width used both to detect an integer second
            parameter and as the perturbation for the integer-limit of U.
    """

    rel_tol: float = 1e-14
    max_terms: int = 20000
    integer_guard: float = 1e-5

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not 0 < self.integer_guard <= 1e-3:
            raise ValueError("integer_guard must lie in (0, 1e-3]")


DEFAULT_POLICY = SeriesPolicy()


def pochhammer(a: float, n: int) -> float:
    """Rising factorial ``a (a+1) ... (a+n-1)``; ``(a)_0 = 1``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def _near_integer(x: float, guard: float) -> int | None:
    n = round(x)
    return int(n) if abs(x - n) <= guard else None


def _log_abs_gamma(x: float) -> tuple[float, float]:
    """Return ``(sign, log|Gamma(x)|)``; x must not be a pole."""
    if x > 0:
        return 1.0, math.lgamma(x)
    sign = -1.0 if int(math.floor(x)) % 2 else 1.0
    return sign, math.lgamma(x)


def _gamma_ratio_log(num, den) -> tuple[float, float]:
    """Sign and log-magnitude of prod Gamma(num) / prod Gamma(den).

    A pole in the denominator yields sign 0 (the ratio vanishes).
    """
    sign, logv = 1.0, 0.0
    for x in den:
        if _is_nonpos_int(x):
            return 0.0, -math.inf
        s, lg = _log_abs_gamma(x)
        sign *= s
        logv -= lg
    for x in num:
        if _is_nonpos_int(x):
            raise OverflowError(f"Gamma pole at {x!r} in numerator")
        s, lg = _log_abs_gamma(x)
        sign *= s
        logv += lg
    return sign, logv


def _gamma_cm1_ratio_log(c, a) -> tuple[float, float]:
    """``Gamma(c - 1) / Gamma(a)`` via ``Gamma(c) / (c - 1)``.

    Rounding ``c - 1`` next to a pole of Gamma would cost digits.
    """
    if c == 1.0:
        return _gamma_ratio_log([0.0], [a])
    s, lg = _gamma_ratio_log([c], [a])
    return (-s if c < 1.0 else s), lg - math.log(abs(c - 1.0))


def _series(a, c, z, policy, weight=None):
    """Sum ``sum_n w(n) (a)_n/(c)_n z^n/n!``.

    Returns ``(total, peak)`` where ``peak`` is the largest absolute
    contribution (used as a cancellation diagnostic).
    """
    term = 1.0
    total = weight(0) if weight else 1.0
    peak = abs(total)
    # terms may still grow while n is below |z| or inside the pole region
    n_free = max(abs(z), -c, -a, 0.0)
    quiet = 0
    for n in range(policy.max_terms):
        term *= (a + n) / (c + n) * z / (n + 1)
        if term == 0.0:
            return total, peak
        contrib = term * weight(n + 1) if weight else term
        total += contrib
        mag = abs(contrib)
        if mag > peak:
            peak = mag
        if n + 1 > n_free and mag <= policy.rel_tol * max(abs(total), peak * _EPS):
            quiet += 1
            if quiet >= 2:
                return total, peak
        else:
            quiet = 0
        if not math.isfinite(total):
            raise NonConvergence(f"series overflow at n={n} (a={a}, c={c}, z={z})")
    raise NonConvergence(
        f"series did not converge in {policy.max_terms} terms (a={a}, c={c}, z={z})"
    )


def _terminates_first(a, c) -> bool:
    # a = -m stops the series after z^m, before (c)_n can reach zero
    return _is_nonpos_int(a) and round(c) < a


def _check_c(c: float, policy: SeriesPolicy, a: float = 0.5) -> None:
    n = _near_integer(c, policy.integer_guard)
    if n is not None and n <= 0 and not _terminates_first(a, c):
        raise PoleAtC(f"c={c!r} is within {policy.integer_guard} of a non-positive integer")


def _m_raw(a, c, z, policy):
    if _terminates_first(a, c):
        # a polynomial; Kummer's transformation does not hold for it
        return _series(a, c, z, policy)[0]
    if _is_nonpos_int(c):
        raise PoleAtC(f"c={c!r} is a non-positive integer")
    if z == 0.0:
        return 1.0
    if z < -50.0:
        s, _ = _series(c - a, c, -z, policy)
        return math.exp(z) * s
    s, peak = _series(a, c, z, policy)
    if z < 0 and peak > _CANCELLATION_LIMIT * abs(s):
        s2, peak2 = _series(c - a, c, -z, policy)
        if peak2 / max(abs(s2), _TINY) < peak / max(abs(s), _TINY):
            return math.exp(z) * s2
    return s


def kummer_m(
    a: float, c: float, z: float, policy: SeriesPolicy = DEFAULT_POLICY, guard: bool = True
) -> float:
    """Kummer's confluent hypergeometric function ``M(a, c; z) = 1F1(a; c; z)``.

    Direct power series.  For negative ``z`` the series alternates; when the
    largest term dwarfs the sum (or ``z < -50``) the value is re-summed as
    ``exp(z) M(c - a, c; -z)``, whichever form is better conditioned.

    When ``a`` is a non-positive integer above ``c`` the series is a
    polynomial that ends before the pole, and is returned as such.

    ``guard=False`` only rejects exact poles; callers use it when ``a``
    approaches a non-positive integer together with ``c`` and the ratio of
    Pochhammer symbols stays finite.

    Raises:
        PoleAtC: ``c`` within ``policy.integer_guard`` of a non-positive integer.
    """
    if guard:
        _check_c(c, policy, a)
    return _m_raw(a, c, z, policy)


def _u_connection(a, c, z, policy):
    """Connection formula for non-integer c; returns (value, condition number)."""
    s1, l1 = _gamma_ratio_log([1.0 - c], [1.0 + a - c])
    first = s1 * math.exp(l1) * _m_raw(a, c, z, policy) if s1 else 0.0
    s2, l2 = _gamma_cm1_ratio_log(c, a)
    if s2 == 0.0:
        return first, 1.0
    if z == 0.0:
        if c < 1.0:
            return first, 1.0
        raise DivergentAtZero(f"U({a}, {c}; 0) is infinite")
    second = s2 * math.exp(l2 + (1.0 - c) * math.log(z)) * _m_raw(1.0 + a - c, 2.0 - c, z, policy)
    value = first + second
    return value, (abs(first) + abs(second)) / max(abs(value), _TINY)


def _laplace_integral(shape, power, z, log_weight=None):
    """``int_0^inf exp(-s) s^(shape-1) (1 + s/z)^power w(s/z) ds`` in scaled form.

    Returns ``(mantissa, log_scale)``; the integrand is rescaled by its peak
    so large exponents do not overflow.
    """
    from scipy import integrate

    def logf(s):
        return -s + (shape - 1.0) * math.log(s) + power * math.log1p(s / z)

    # peak of the log-integrand on a coarse log grid
    grid = [10.0 ** (k / 4.0) for k in range(-40, 13)]
    lmax = max(logf(s) for s in grid)

    if log_weight is None:
        def f(s):
            return math.exp(logf(s) - lmax) if s > 0 else 0.0
    else:
        def f(s):
            return math.exp(logf(s) - lmax) * log_weight(s / z) if s > 0 else 0.0

    head, _ = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    tail, _ = integrate.quad(f, 1.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return head + tail, lmax


def _u_integral_params(a, c):
    # U(a,c;z) = z^(1-c) U(1+a-c, 2-c; z): pick a form with positive first parameter
    if 1.0 + a - c > 0:
        return 1.0 + a - c, 2.0 - c, True
    if a > 0:
        return a, c, False
    return None


def _u_integral(a, c, z):
    """Laplace-integral representation; needs ``z > 0`` and a positive shape."""
    shape, cc, shifted = _u_integral_params(a, c)
    power = cc - shape - 1.0
    mant, lmax = _laplace_integral(shape, power, z)
    logv = lmax - shape * math.log(z) - math.lgamma(shape)
    if shifted:
        logv += (1.0 - c) * math.log(z)
    return mant * math.exp(logv)


# condition number beyond which the connection formula gives way to quadrature
_COND_LIMIT = 1.0e4


def tricomi_u(a: float, c: float, z: float, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Tricomi's confluent hypergeometric function ``U(a, c; z)`` for ``z >= 0``.

    Non-integer ``c`` uses the connection formula with two Kummer functions.
    For ``c`` within ``policy.integer_guard`` of an integer ``n`` the
    function is evaluated at ``n - eps`` and ``n + eps`` (eps = guard) and
    linearly interpolated to ``c``; at ``c = n`` this is the symmetric
    average, accurate to O(eps**2).

    When the two connection terms cancel by more than seven digits (large
    ``z`` against the parameters) and ``z > 0``, the value is taken from the
    Laplace-integral representation instead.

    Raises:
        DivergentAtZero: ``z == 0`` and ``U`` is infinite there (``c >= 1``).
    """
    if z < 0:
        raise ValueError("tricomi_u is only defined here for z >= 0")
    n = _near_integer(c, policy.integer_guard)
    if n is None:
        value, cond = _u_connection(a, c, z, policy)
    else:
        if z == 0.0 and n >= 1:
            # Gamma(c-1) z^(1-c) diverges (log singularity at n = 1)
            s2, _ = _gamma_ratio_log([], [a])
            if s2 != 0.0:
                raise DivergentAtZero(f"U({a}, {c}; 0) is infinite")
        eps = policy.integer_guard
        lo, cond_lo = _u_connection(a, n - eps, z, policy)
        hi, cond_hi = _u_connection(a, n + eps, z, policy)
        value = 0.5 * (lo + hi) + (c - n) / (2.0 * eps) * (hi - lo)
        cond = max(cond_lo * abs(lo), cond_hi * abs(hi)) / max(abs(value), _TINY)
    if cond > _COND_LIMIT and z > 0:
        if _u_integral_params(a, c) is not None:
            return _u_integral(a, c, z)
        return _u_recurrence(a, c, z)
    return value


def _u_recurrence(a, c, z):
    """Step down in ``a`` from a pair with an integral representation.

    U is the minimal solution of its three-term recurrence as ``a`` grows,
    so the downward direction is stable.
    """
    k = math.floor(max(-a, c - 1.0 - a)) + 1
    hi = _u_integral(a + k + 1, c, z)
    mid = _u_integral(a + k, c, z)
    for j in range(k, 0, -1):
        b = a + j
        # U(b-1) = (2b - c + z) U(b) - b (b - c + 1) U(b+1)
        hi, mid = mid, (2.0 * b - c + z) * mid - b * (b - c + 1.0) * hi
    return mid


def _u_dc_integral(a, c, z):
    # U = z^(1-c)/Gamma(A) int e^(-zt) t^(A-1) (1+t)^(-a) dt with A = 1+a-c
    shape = 1.0 + a - c
    mant, lmax = _laplace_integral(shape, -a, z)
    mant_log, _ = _laplace_integral(shape, -a, z, log_weight=lambda t: -math.log(t))
    scale = math.exp(lmax - shape * math.log(z) - math.lgamma(shape) + (1.0 - c) * math.log(z))
    u = mant * scale
    return u * (digamma(shape) - math.log(z)) + mant_log * scale


def tricomi_u_dc(a: float, c: float, z: float, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Derivative ``dU(a, c; z)/dc`` for non-integer ``c`` and ``z >= 0``.

    Four-part series form: the digamma-weighted correction to each Kummer
    series of the connection formula, the ``log z`` term from ``z**(1-c)``,
    and the ``pi cot(pi c)`` term from the gamma prefactors.  Falls back to
    differentiating the Laplace integral under the sign when those parts
    cancel badly.

    Raises:
        IntegerC: ``c`` within the integer guard; perturb ``c`` instead.
    """
    if z < 0:
        raise ValueError("tricomi_u_dc is only defined here for z >= 0")
    if _near_integer(c, policy.integer_guard) is not None:
        raise IntegerC(f"c={c!r} is (numerically) an integer")
    b = a - c + 1.0
    u, _ = _u_connection(a, c, z, policy)
    parts = [(digamma(b) - math.pi / math.tan(math.pi * c)) * u]

    sa, la = _gamma_ratio_log([1.0 - c], [b])
    if sa:
        s4, _ = _series(a, c, z, policy, weight=lambda k: digamma(c + k))
        parts.append(-sa * math.exp(la) * s4)

    sb, lb = _gamma_cm1_ratio_log(c, a)
    if sb:
        if z == 0.0:
            if c >= 1.0:
                raise DivergentAtZero(f"dU/dc({a}, {c}; 0) is infinite")
        else:
            coef = sb * math.exp(lb + (1.0 - c) * math.log(z))
            parts.append(-coef * math.log(z) * _m_raw(b, 2.0 - c, z, policy))
            s3, _ = _series(
                b, 2.0 - c, z, policy, weight=lambda k: digamma(b + k) - digamma(2.0 - c + k)
            )
            parts.append(-coef * s3)
    total = math.fsum(parts)
    cond = sum(abs(p) for p in parts) / max(abs(total), _TINY)
    if cond > _COND_LIMIT and z > 0 and b > 0:
        return _u_dc_integral(a, c, z)
    return total


_DIGAMMA_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(z: float) -> float:
    """Logarithmic derivative of the gamma function."""
    if _is_nonpos_int(z):
        raise PoleAtNonPositiveInteger(f"digamma pole at {z!r}")
    if z < 0:
        return digamma(1.0 - z) - math.pi / math.tan(math.pi * z)
    acc = 0.0
    while z < 10.0:
        acc -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    poly = 0.0
    for coef in reversed(_DIGAMMA_ASYMPTOTIC):
        poly = poly * inv2 + coef
    return acc + math.log(z) - 0.5 / z - poly * inv2


def _gamma_series_p(a, z, lpref, policy):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(policy.max_terms):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return math.exp(lpref) * total
    raise NonConvergence(f"incomplete gamma series (a={a}, z={z})")


def _gamma_cf(a, z, policy):
    """Lentz evaluation of the continued fraction for exp(z) z^-a Gamma(a, z)."""
    b = z + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b if b != 0.0 else 1.0 / _TINY
    h = d
    for i in range(1, policy.max_terms + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _EPS:
            return h
    raise NonConvergence(f"incomplete gamma continued fraction (a={a}, z={z})")


def gamma_pq(a: float, z: float, policy: SeriesPolicy = DEFAULT_POLICY) -> tuple[float, float]:
    """Regularized lower and upper incomplete gamma ``(P(a, z), Q(a, z))`` for ``a > 0``.

    Series for ``z < a + 1``, continued fraction otherwise; the smaller of
    the two is always computed directly so neither loses relative accuracy.
    """
    if a <= 0:
        raise ValueError("gamma_pq needs a > 0")
    if z < 0:
        raise ValueError("z must be non-negative")
    if z == 0.0:
        return 0.0, 1.0
    if math.isinf(z):
        return 1.0, 0.0
    lpref = -z + a * math.log(z) - math.lgamma(a)
    if z < a + 1.0:
        p = _gamma_series_p(a, z, lpref, policy)
        return p, 1.0 - p
    q = math.exp(lpref) * _gamma_cf(a, z, policy)
    return 1.0 - q, q


def _e1_small(z, policy):
    # E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
    total = 0.0
    term = 1.0
    for k in range(1, policy.max_terms + 1):
        term *= -z / k
        contrib = term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            return -0.5772156649015329 - math.log(z) - total
    raise NonConvergence(f"E1 series (z={z})")


def upper_inc_gamma(a: float, z: float, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Upper incomplete gamma ``Gamma(a; z) = int_z^inf exp(-t) t^(a-1) dt``.

    Independent of :func:`tricomi_u` (series / continued fraction only), so
    it can cross-check the identity ``Gamma(a; z) = exp(-z) U(1-a, 1-a; z)``.
    Negative and zero ``a`` are supported for ``z > 0``.
    """
    if z < 0:
        raise ValueError("z must be non-negative")
    if z == 0.0:
        if a <= 0:
            raise DivergentIntegral(f"Gamma({a}; 0) diverges")
        return math.gamma(a)
    if a > 0:
        _, q = gamma_pq(a, z, policy)
        return q * math.gamma(a) if a < 170.0 else math.exp(math.log(q) + math.lgamma(a))
    if z >= 1.0:
        return math.exp(-z + a * math.log(z)) * _gamma_cf(a, z, policy)
    if a == 0.0:
        return _e1_small(z, policy)
    if a != math.floor(a):
        # Gamma(a) - sum_k (-1)^k z^(a+k) / (k! (a+k))
        total = 0.0
        term = 1.0
        for k in range(policy.max_terms):
            if k:
                term *= -z / k
            contrib = term / (a + k)
            total += contrib
            if k > -a and abs(contrib) < _EPS * abs(total):
                return math.gamma(a) - total * z**a
        raise NonConvergence(f"incomplete gamma series (a={a}, z={z})")
    # negative integer: recur down from E1 = Gamma(0; z)
    val = _e1_small(z, policy)
    ez = math.exp(-z)
    s = 0
    while s > a:
        s -= 1
        val = (val - z**s * ez) / s
    return val
