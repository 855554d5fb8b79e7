import math

import pytest

from microtrap.analytics import trapping_probability
from microtrap.errors import MonotonicityViolation
from microtrap.model import ModelParams, SchemeSpec
from microtrap.optimize import (
    RootConfig,
    Verdict,
    _bisect,
    default_b_max,
    optimal_barrier,
    optimal_theta,
    sweep,
)
from microtrap.welfare import WelfareParams

P = ModelParams(r=0.5, lam=1.0, alpha=1.0, x_star=1.0)
U = SchemeSpec.uninsured(P)


def test_root_config_validation():
    for kw in ({"abs_tol": 0}, {"max_iter": 0}, {"bracket_expansion": 1.0}):
        with pytest.raises(ValueError):
            RootConfig(**kw)


def test_bisect_iteration_cap():
    cfg = RootConfig(abs_tol=1e-12)
    root, res, it = _bisect(lambda t: t - 0.3, 0.0, 1.0, cfg, -0.3)
    assert abs(root - 0.3) < 1e-12
    assert it <= math.ceil(math.log2(1.0 / 1e-12)) + 2


@pytest.mark.parametrize("x", [4.0, 7.0, 10.0])
def test_theta_fixed_point(x):
    r = optimal_theta(P, 0.5, 0.5, x, mapping="rate")
    assert r.verdict is Verdict.INTERIOR and 0 <= r.value <= 0.5
    s = SchemeSpec.subsidised(P, 0.5, 0.5, r.value, mapping="rate")
    assert abs(trapping_probability(P, s, x) - trapping_probability(P, U, x)) < 1e-9


def test_theta_plateau_and_insufficient():
    assert optimal_theta(P, 0.5, 0.5, 15.0, mapping="rate").verdict is Verdict.NO_SUBSIDY_NEEDED
    r = optimal_theta(P, 0.5, 0.5, 2.0, mapping="rate")
    assert r.verdict is Verdict.ALL_SUBSIDY_INSUFFICIENT and r.value is None


def test_theta_rejects_non_monotone_objective():
    # a mapping under which a lower loading slows growth breaks the premise
    from microtrap import model

    model.PREMIUM_MAPPINGS["inverted"] = lambda p, prem: (p.r * min(1.0, 0.1 + prem), p.x_star)
    try:
        with pytest.raises(MonotonicityViolation):
            optimal_theta(P, 0.5, 0.5, 4.0, mapping="inverted")
    finally:
        del model.PREMIUM_MAPPINGS["inverted"]


@pytest.mark.parametrize("x", [1.5, 2.5, 5.0])
def test_barrier_fixed_point(x):
    r = optimal_barrier(P, 0.5, 0.5, x, mapping="rate")
    assert r.verdict is Verdict.INTERIOR
    s = SchemeSpec.barrier_scheme(P, 0.5, 0.5, r.value, mapping="rate")
    assert abs(trapping_probability(P, s, x) - trapping_probability(P, U, x)) < 1e-9


def test_barrier_verdicts():
    r = optimal_barrier(P, 0.5, 0.5, 15.0, mapping="rate")
    assert r.verdict is Verdict.NO_BARRIER_NEEDED and r.value == 1.0
    # a bracket that is too narrow is widened until the root is inside
    r = optimal_barrier(P, 0.5, 0.5, 1.5, b_max=1.2, mapping="rate")
    assert r.verdict is Verdict.INTERIOR and r.value > 1.5
    with pytest.raises(ValueError):
        optimal_barrier(P, 0.5, 0.5, 1.5, b_max=0.5, mapping="rate")
    ins = SchemeSpec.barrier_scheme(P, 0.5, 0.5, math.inf, mapping="rate")
    assert default_b_max(P, ins) == pytest.approx(1.0 + 30.0)


def test_sweep_records_cell_errors():
    ins = SchemeSpec.insured(P, 0.5, 0.5, mapping="drift")
    t = sweep(P, [U, ins], [1.0, 2.0, 3.0], "psi")
    assert t.columns == ["uninsured", "insured"]
    assert t.column("uninsured")[0] == 1.0
    # drift mapping moves the critical capital above 1 and 2
    assert t.column("insured")[:2] == [None, None]
    assert {e.x for e in t.errors} == {1.0, 2.0}
    assert t.errors[0].kind == "InvalidInitialCapital"


def test_sweep_validation():
    with pytest.raises(ValueError):
        sweep(P, [U], [1.0], "bogus")
    with pytest.raises(ValueError):
        sweep(P, [U], [2.0, 1.0], "psi")
    with pytest.raises(ValueError):
        sweep(P, [U], [1.0], "cost")
    with pytest.raises(ValueError):
        sweep(P, [U, U], [1.0], "psi")
    t = sweep(P, [U], [1.0, 2.0], "cost", welfare=WelfareParams())
    assert t.values[0][0] == 8.0
