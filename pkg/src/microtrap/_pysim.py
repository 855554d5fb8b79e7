"""Vectorised numpy fallback for the path kernel, plus the shared RNG.

Streams are counter based: draw ``k`` of path ``i`` is
``mix64(stream_key(seed, i) + (k + 1) * GOLDEN)``, a splitmix64 output, so
any path can be regenerated on its own without touching the others.
"""

import math

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_PATH_SALT = 0x632BE59BD9B4E019
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0


def mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def stream_key(seed, index):
    return mix64(seed ^ mix64(index + _PATH_SALT))


def uniform_scalar(key, k):
    """Draw ``k`` of a stream as a double in [0, 1)."""
    return (mix64(key + (k + 1) * GOLDEN) >> 11) * _INV53


def _mix64_arr(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_keys(seed, offset, n):
    idx = np.arange(n, dtype=np.uint64) + np.uint64(offset) + np.uint64(_PATH_SALT)
    return _mix64_arr(np.uint64(seed) ^ _mix64_arr(idx))


def uniforms(keys, k):
    bits = _mix64_arr(keys + np.uint64(((k + 1) * GOLDEN) & MASK))
    return (bits >> np.uint64(11)).astype(np.float64) * _INV53


def _accrue(s, t0, dt, delta):
    # s * int_{t0}^{t0+dt} exp(-delta u) du
    if delta == 0.0:
        return s * dt
    return s * np.exp(-delta * t0) * -np.expm1(-delta * dt) / delta


def _advance(x, t0, dt, x_c, barrier, rho_lo, rho_hi, s_lo, s_hi, delta):
    lo = x < barrier
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tc = np.where(lo & (x > x_c), np.log((barrier - x_c) / (x - x_c)) / rho_lo, np.inf)
    cross = lo & (tc < dt)
    tc = np.where(cross, tc, 0.0)
    x_lo = (x - x_c) * np.exp(rho_lo * dt) + x_c
    x_hi = (x - x_c) * np.exp(rho_hi * dt) + x_c
    x_cr = (barrier - x_c) * np.exp(rho_hi * (dt - tc)) + x_c if math.isfinite(barrier) else x_hi
    x_new = np.where(cross, x_cr, np.where(lo, x_lo, x_hi))
    if s_lo == 0.0 and s_hi == 0.0:
        return x_new, np.zeros_like(x)
    sub = np.where(
        cross,
        _accrue(s_lo, t0, tc, delta) + _accrue(s_hi, t0 + tc, dt - tc, delta),
        np.where(lo, _accrue(s_lo, t0, dt, delta), _accrue(s_hi, t0, dt, delta)),
    )
    return x_new, sub


def simulate(x0, lam, loss_rate, x_c, barrier, rho_lo, rho_hi, s_lo, s_hi, tail, delta,
             t_max, escape, seed, offset, n):
    """Return ``(trapped, tau, subsidy, truncated)`` arrays for ``n`` paths."""
    keys = stream_keys(seed, offset, n)
    x = np.full(n, x0, dtype=np.float64)
    t = np.zeros(n)
    subsidy = np.zeros(n)
    trapped = np.zeros(n, dtype=np.uint8)
    truncated = np.zeros(n, dtype=np.uint8)
    tau = np.full(n, np.nan)
    idx = np.arange(n)
    no_loss = math.isinf(loss_rate)
    k = 0
    while idx.size:
        kk = keys[idx]
        w = -np.log1p(-uniforms(kk, k)) / lam
        u2 = uniforms(kk, k + 1)
        k += 2
        ti, xi = t[idx], x[idx]
        t_next = ti + w
        over = t_next > t_max
        dt = np.where(over, t_max - ti, w)
        xi, sub = _advance(xi, ti, dt, x_c, barrier, rho_lo, rho_hi, s_lo, s_hi, delta)
        subsidy[idx] += sub

        # horizon reached before the next loss
        if over.any():
            j = idx[over]
            truncated[j] = 1
            if tail and delta > 0:
                rate = np.where(xi[over] < barrier, s_lo, s_hi)
                subsidy[j] += rate * math.exp(-delta * t_max) / delta

        if not no_loss:
            xi = xi + np.log1p(-u2) / loss_rate
        hit = ~over & (xi < x_c)
        if hit.any():
            j = idx[hit]
            trapped[j] = 1
            tau[j] = t_next[hit]

        esc = ~over & ~hit & (xi > escape)
        if esc.any() and tail and delta > 0:
            rate = np.where(xi[esc] < barrier, s_lo, s_hi)
            subsidy[idx[esc]] += rate * np.exp(-delta * t_next[esc]) / delta

        keep = ~(over | hit | esc)
        t[idx] = t_next
        x[idx] = xi
        idx = idx[keep]
    return trapped, tau, subsidy, truncated
