"""Parameter types, scheme definitions and the Monte Carlo capital simulator.

Between loss events the capital follows ``X(t) = (X0 - x_c) exp(rho t) + x_c``;
losses arrive at Poisson rate ``lam`` and are exponential with rate ``alpha``
(``alpha / kappa`` once a proportion ``1 - kappa`` is insured).  A path is
trapped the first time its capital drops strictly below the critical level
``x_c``.

The batch kernel lives in a compiled extension when available and in a
vectorised numpy module otherwise; see :data:`BACKEND`.  Setting
``MICROTRAP_BACKEND=numpy`` in the environment forces the fallback.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidInitialCapital
from . import _pysim

_csim = None
if os.environ.get("MICROTRAP_BACKEND", "").lower() != "numpy":
    try:
        from . import _csim
    except ImportError:  # pragma: no cover - depends on the build
        _csim = None

BACKEND = "cython" if _csim is not None else "numpy"

__all__ = [
    "ModelParams",
    "SchemeTag",
    "SchemeSpec",
    "SimConfig",
    "PathOutcome",
    "MCEstimate",
    "BatchResult",
    "premium",
    "drift_absorption",
    "rate_reduction",
    "PREMIUM_MAPPINGS",
    "BACKEND",
    "flow",
    "simulate_batch",
    "simulate_path",
    "simulate_trajectory",
    "estimate_trapping_probability",
    "estimate_laplace",
    "estimate_expected_trapping_time",
    "estimate_subsidy_value",
]


@dataclass(frozen=True)
class ModelParams:
    """Uninsured dynamics: growth rate, loss intensity, loss rate, poverty line."""

    r: float
    lam: float
    alpha: float
    x_star: float

    def __post_init__(self):
        for name in ("r", "lam", "alpha", "x_star"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


def premium(params: ModelParams, kappa: float, theta: float) -> float:
    """Expected-value premium ``(1 + theta)(1 - kappa) lam E[Z]`` with ``E[Z] = 1/alpha``."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    if theta < -1.0:
        raise ValueError("theta must be >= -1")
    return (1.0 + theta) * (1.0 - kappa) * params.lam / params.alpha


# A premium-adjustment mapping turns a premium rate into the insured
# (growth rate, critical capital) pair.
PremiumMapping = Callable[[ModelParams, float], Tuple[float, float]]


def drift_absorption(params: ModelParams, prem: float) -> Tuple[float, float]:
    """Premium paid out of the drift: same rate, stationary point moves up by ``prem / r``."""
    return params.r, params.x_star + prem / params.r


def rate_reduction(params: ModelParams, prem: float) -> Tuple[float, float]:
    """Premium paid as a share of growth: ``r (1 - prem alpha / lam)``, same critical capital."""
    r_ins = params.r * (1.0 - prem * params.alpha / params.lam)
    if not r_ins > 0:
        raise ValueError(f"premium {prem!r} leaves a non-positive insured growth rate")
    return r_ins, params.x_star


PREMIUM_MAPPINGS: Dict[str, PremiumMapping] = {
    "drift": drift_absorption,
    "rate": rate_reduction,
}


class SchemeTag(enum.Enum):
    UNINSURED = "uninsured"
    INSURED = "insured"
    SUBSIDISED = "subsidised"
    BARRIER = "barrier"


@dataclass(frozen=True)
class SchemeSpec:
    """One household scheme.

    ``r_ins`` and ``x_star_ins`` are the growth rate and critical capital
    while the household pays its own premium.  For the subsidised scheme they
    already reflect the reduced loading ``theta_star``; for the barrier
    scheme they apply above ``barrier`` and the household grows at the
    uninsured rate below it, with ``x_star_ins`` as critical capital in both
    regimes.
    """

    tag: SchemeTag
    r_ins: float
    x_star_ins: float
    kappa: float = 1.0
    theta: float = 0.0
    theta_star: Optional[float] = None
    barrier: Optional[float] = None
    label: str = ""
    mapping: str = "explicit"

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if not self.r_ins > 0:
            raise ValueError("r_ins must be positive")
        if self.tag is SchemeTag.SUBSIDISED:
            if self.theta_star is None or not 0.0 <= self.theta_star <= self.theta:
                raise ValueError("subsidised scheme needs 0 <= theta_star <= theta")
        if self.tag is SchemeTag.BARRIER:
            if self.barrier is None or self.barrier < self.x_star_ins:
                raise ValueError("barrier must be >= the scheme's critical capital")
        if not self.label:
            object.__setattr__(self, "label", self.tag.value)

    # constructors -------------------------------------------------------

    @classmethod
    def uninsured(cls, params: ModelParams, label: str = "") -> "SchemeSpec":
        return cls(SchemeTag.UNINSURED, params.r, params.x_star, label=label, mapping="none")

    @classmethod
    def insured(cls, params, kappa, theta, mapping="drift", r_ins=None, x_star_ins=None, label=""):
        r_i, x_i = _mapped(params, kappa, theta, mapping, r_ins, x_star_ins)
        return cls(SchemeTag.INSURED, r_i, x_i, kappa, theta, label=label, mapping=mapping)

    @classmethod
    def subsidised(
        cls, params, kappa, theta, theta_star, mapping="drift", r_ins=None, x_star_ins=None, label=""
    ):
        r_i, x_i = _mapped(params, kappa, theta_star, mapping, r_ins, x_star_ins)
        return cls(
            SchemeTag.SUBSIDISED, r_i, x_i, kappa, theta, theta_star=theta_star, label=label,
            mapping=mapping,
        )

    @classmethod
    def barrier_scheme(
        cls, params, kappa, theta, barrier, mapping="drift", r_ins=None, x_star_ins=None, label=""
    ):
        r_i, x_i = _mapped(params, kappa, theta, mapping, r_ins, x_star_ins)
        return cls(
            SchemeTag.BARRIER, r_i, x_i, kappa, theta, barrier=barrier, label=label, mapping=mapping
        )

    # derived quantities ---------------------------------------------------

    def critical_capital(self, params: ModelParams) -> float:
        return params.x_star if self.tag is SchemeTag.UNINSURED else self.x_star_ins

    def loss_rate(self, params: ModelParams) -> float:
        """Exponential rate of the retained loss; ``inf`` when nothing is retained."""
        if self.tag is SchemeTag.UNINSURED:
            return params.alpha
        return math.inf if self.kappa == 0 else params.alpha / self.kappa

    def growth_rate(self, params: ModelParams) -> float:
        return params.r if self.tag is SchemeTag.UNINSURED else self.r_ins

    def with_barrier(self, barrier: float) -> "SchemeSpec":
        return replace(self, barrier=barrier)

    def validate(self, params: ModelParams) -> None:
        """Check the invariants that involve the uninsured parameters."""
        if self.tag is SchemeTag.UNINSURED:
            if self.r_ins != params.r or self.x_star_ins != params.x_star or self.kappa != 1.0:
                raise ValueError("uninsured scheme must carry the uninsured parameters")
            return
        if self.r_ins > params.r * (1 + 1e-12):
            raise ValueError("insured growth rate cannot exceed r")
        if self.x_star_ins < params.x_star * (1 - 1e-12):
            raise ValueError("insured critical capital cannot sit below x_star")


def _mapped(params, kappa, theta, mapping, r_ins, x_star_ins):
    if r_ins is not None and x_star_ins is not None:
        return float(r_ins), float(x_star_ins)
    try:
        fn = PREMIUM_MAPPINGS[mapping]
    except KeyError:
        raise ValueError(f"unknown premium mapping {mapping!r}") from None
    r_m, x_m = fn(params, premium(params, kappa, theta))
    return (r_m if r_ins is None else float(r_ins)), (x_m if x_star_ins is None else float(x_star_ins))


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    t_max: float = 200.0
    seed: int = 20240101
    escape_level: Optional[float] = None
    workers: Optional[int] = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class PathOutcome:
    trapped: bool
    tau: Optional[float]
    discounted_subsidy: float
    truncated: bool


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_err: float
    n_paths: int
    truncated_fraction: float

    def z_score(self, reference: float) -> float:
        if self.std_err == 0:
            return 0.0 if self.mean == reference else math.copysign(math.inf, self.mean - reference)
        return (self.mean - reference) / self.std_err


@dataclass
class BatchResult:
    trapped: np.ndarray
    tau: np.ndarray
    subsidy: np.ndarray
    truncated: np.ndarray


# --- kernel plumbing ------------------------------------------------------


@dataclass(frozen=True)
class _Dynamics:
    """Flat description of a scheme that the kernels understand."""

    x_c: float
    lam: float
    loss_rate: float
    barrier: float
    rho_lo: float
    rho_hi: float
    s_lo: float = 0.0
    s_hi: float = 0.0
    tail: bool = False


def _dynamics(params: ModelParams, scheme: SchemeSpec, subsidy_rate: float = 0.0) -> _Dynamics:
    tag = scheme.tag
    x_c = scheme.critical_capital(params)
    rate = scheme.loss_rate(params)
    if tag is SchemeTag.BARRIER:
        prem = premium(params, scheme.kappa, scheme.theta)
        return _Dynamics(x_c, params.lam, rate, scheme.barrier, params.r, scheme.r_ins, prem, 0.0)
    rho = scheme.growth_rate(params)
    s = subsidy_rate if tag is SchemeTag.SUBSIDISED else 0.0
    return _Dynamics(x_c, params.lam, rate, math.inf, rho, rho, s, s, tail=s > 0)


def flow(x0: float, dt: float, rho: float, x_c: float) -> float:
    """Deterministic capital after ``dt`` time units without losses."""
    return (x0 - x_c) * math.exp(rho * dt) + x_c


def simulate_batch(
    params: ModelParams,
    scheme: SchemeSpec,
    x0: float,
    cfg: SimConfig,
    delta: float = 0.0,
    subsidy_rate: float = 0.0,
    offset: int = 0,
    backend: Optional[str] = None,
) -> BatchResult:
    """Simulate ``cfg.n_paths`` paths with stream indices ``offset, offset+1, ...``.

    Each path reads its own counter-based stream keyed by ``(cfg.seed,
    index)``, so results do not depend on how the paths are split across
    workers.
    """
    x_c = scheme.critical_capital(params)
    if not x0 >= x_c:
        raise InvalidInitialCapital(f"x0={x0!r} is below the critical capital {x_c!r}")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if cfg.escape_level is not None and not cfg.escape_level > x_c:
        raise ValueError("escape_level must exceed the critical capital")
    d = _dynamics(params, scheme, subsidy_rate)
    args = (
        float(x0), d.lam, d.loss_rate, d.x_c, d.barrier, d.rho_lo, d.rho_hi, d.s_lo, d.s_hi,
        bool(d.tail), float(delta), float(cfg.t_max),
        math.inf if cfg.escape_level is None else float(cfg.escape_level),
        int(cfg.seed), int(offset), int(cfg.n_paths),
    )
    name = backend or BACKEND
    if name == "cython":
        if _csim is None:
            raise RuntimeError("compiled backend is not available")
        out = _csim.simulate(*args, workers=cfg.workers or 0)
    elif name == "numpy":
        out = _pysim.simulate(*args)
    else:
        raise ValueError(f"unknown backend {name!r}")
    trapped, tau, subsidy, truncated = out
    return BatchResult(trapped.astype(bool), tau, subsidy, truncated.astype(bool))


def simulate_path(
    params: ModelParams,
    scheme: SchemeSpec,
    x0: float,
    delta: float,
    cfg: SimConfig,
    path_index: int = 0,
    subsidy_rate: float = 0.0,
) -> PathOutcome:
    """Single path ``path_index`` of the stream family defined by ``cfg.seed``."""
    one = replace(cfg, n_paths=1)
    b = simulate_batch(params, scheme, x0, one, delta, subsidy_rate, offset=path_index)
    trapped = bool(b.trapped[0])
    return PathOutcome(
        trapped, float(b.tau[0]) if trapped else None, float(b.subsidy[0]), bool(b.truncated[0])
    )


def simulate_trajectory(
    params: ModelParams,
    scheme: SchemeSpec,
    x0: float,
    cfg: SimConfig,
    path_index: int = 0,
    max_jumps: Optional[int] = None,
) -> List[Tuple[float, float, float]]:
    """Jump-by-jump record ``(time, capital before loss, capital after loss)``.

    Pure Python, reads the same stream as the batch kernels; intended for
    inspection and coupling tests rather than estimation.
    """
    d = _dynamics(params, scheme)
    key = _pysim.stream_key(cfg.seed, path_index)
    t, x, k = 0.0, float(x0), 0
    rows = []
    while max_jumps is None or len(rows) < max_jumps:
        w = -math.log1p(-_pysim.uniform_scalar(key, k)) / d.lam
        u2 = _pysim.uniform_scalar(key, k + 1)
        k += 2
        if t + w > cfg.t_max:
            break
        t += w
        x = _advance_scalar(x, w, d)
        loss = 0.0 if math.isinf(d.loss_rate) else -math.log1p(-u2) / d.loss_rate
        rows.append((t, x, x - loss))
        x -= loss
        if x < d.x_c:
            break
    return rows


def _advance_scalar(x, w, d):
    if x < d.barrier:
        if x > d.x_c:
            tc = math.log((d.barrier - d.x_c) / (x - d.x_c)) / d.rho_lo
        else:
            tc = math.inf
        if w <= tc:
            return flow(x, w, d.rho_lo, d.x_c)
        return flow(d.barrier, w - tc, d.rho_hi, d.x_c)
    return flow(x, w, d.rho_hi, d.x_c)


# --- estimators -------------------------------------------------------------


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    n = values.size
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


def _estimate(values: np.ndarray, batch: BatchResult) -> MCEstimate:
    mean, se = _mean_se(values)
    return MCEstimate(mean, se, values.size, float(np.mean(batch.truncated)))


def estimate_trapping_probability(params, scheme, x0, cfg: SimConfig) -> MCEstimate:
    """Trapped fraction; truncated paths count as survivors."""
    b = simulate_batch(params, scheme, x0, cfg)
    frac = float(np.mean(b.trapped))
    se = math.sqrt(frac * (1.0 - frac) / cfg.n_paths)
    return MCEstimate(frac, se, cfg.n_paths, float(np.mean(b.truncated)))


def estimate_laplace(params, scheme, x0, delta, cfg: SimConfig) -> MCEstimate:
    """Mean of ``exp(-delta tau)`` with zero for paths that are not trapped."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    b = simulate_batch(params, scheme, x0, cfg)
    return _estimate(np.where(b.trapped, np.exp(-delta * np.nan_to_num(b.tau)), 0.0), b)


def estimate_expected_trapping_time(params, scheme, x0, cfg: SimConfig) -> MCEstimate:
    """Mean of ``tau * 1{trapped}``, the defective expectation."""
    b = simulate_batch(params, scheme, x0, cfg)
    return _estimate(np.where(b.trapped, np.nan_to_num(b.tau), 0.0), b)


def estimate_subsidy_value(
    params, scheme, x0, delta, cfg: SimConfig, subsidy_rate: Optional[float] = None
) -> MCEstimate:
    """Present value of the subsidy stream along each path.

    The constant scheme pays ``subsidy_rate`` (default ``theta - theta_star``)
    until trapping, forever for survivors: a path alive at the horizon adds
    the analytic tail ``rate exp(-delta t_max) / delta``.  The barrier scheme
    pays the full premium only while capital is below the barrier.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if scheme.tag is SchemeTag.SUBSIDISED:
        rate = scheme.theta - scheme.theta_star if subsidy_rate is None else subsidy_rate
    elif scheme.tag is SchemeTag.BARRIER:
        rate = 0.0
    else:
        raise ValueError("subsidy values exist only for the subsidised and barrier schemes")
    b = simulate_batch(params, scheme, x0, cfg, delta=delta, subsidy_rate=rate)
    return _estimate(b.subsidy, b)
