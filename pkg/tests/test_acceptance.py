"""Acceptance suite: twelve criteria, each printed as one PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the summary alone,
or through pytest, where the lines are repeated in the terminal summary.
Runtime budgets are part of each criterion.
"""

import filecmp
import math
import os
import sys
import tempfile
import time
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from microtrap.analytics import (
    expected_trapping_time,
    laplace_trapping,
    laplace_trapping_u,
    trapping_probability,
)
from microtrap.barrier import barrier_laplace, barrier_laplace_derivative
from microtrap.cli import main as cli_main
from microtrap.model import (
    ModelParams,
    SchemeSpec,
    SimConfig,
    estimate_subsidy_value,
    estimate_trapping_probability,
    premium,
)
from microtrap.optimize import Verdict, optimal_barrier, optimal_theta
from microtrap.specfun import gamma_pq, tricomi_u
from microtrap.welfare import (
    WelfareParams,
    cost_of_social_protection,
    subsidy_value,
    subsidy_value_barrier,
    subsidy_value_barrier_derivative,
)

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(os.path.dirname(HERE), "configs")

BASE = ModelParams(r=0.5, lam=1.0, alpha=1.0, x_star=1.0)
KAPPA, THETA = 0.5, 0.5
MAP = "rate"
MC = SimConfig(n_paths=100_000, t_max=200.0, seed=20240101)
MC_POINTS = (1.5, 2.0, 3.0, 5.0, 8.0)
Z_MAX = 4.0

RESULTS = {}


def _insured(p=BASE):
    return SchemeSpec.insured(p, KAPPA, THETA, mapping=MAP)


def _subsidised(p=BASE, theta_star=0.0):
    return SchemeSpec.subsidised(p, KAPPA, THETA, theta_star, mapping=MAP)


def _barrier(b, p=BASE):
    return SchemeSpec.barrier_scheme(p, KAPPA, THETA, b, mapping=MAP)


def _report(num, title, ok, detail, elapsed, budget):
    in_time = elapsed < budget
    passed = bool(ok) and in_time
    line = (f"criterion {num:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}; "
            f"{elapsed:.2f}s of {budget:g}s")
    RESULTS[num] = line
    print(line)
    return passed, line


def _run(num, title, budget, body):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ok, detail = body()
    return _report(num, title, ok, detail, time.perf_counter() - t0, budget)


# --- criteria -----------------------------------------------------------------


def c1():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        p = ModelParams(r=rng.uniform(0.02, 2.0), lam=rng.uniform(0.1, 5.0),
                        alpha=rng.uniform(0.2, 5.0), x_star=rng.uniform(0.1, 10.0))
        s = SchemeSpec.uninsured(p)
        d = rng.uniform(0.01, 2.0)
        worst = max(worst, abs(trapping_probability(p, s, p.x_star) - 1.0),
                    abs(laplace_trapping(p, s, p.x_star, d) - p.lam / (p.lam + d)))
    return worst < 1e-12, f"max boundary error {worst:.2e} (tol 1e-12)"


def c2():
    worst = 0.0
    for alpha in (0.8, 1.0, 1.5, 2.0):
        p = ModelParams(0.5, 1.0, alpha, 1.0)
        s = SchemeSpec.uninsured(p)
        for x in np.linspace(1.0, 10.0, 181):
            worst = max(worst, abs(laplace_trapping_u(p, s, x, 0.0) - trapping_probability(p, s, x)))
    return worst < 1e-7, f"max |U route - gamma route| {worst:.2e} (tol 1e-7)"


def c3():
    zs = []
    anchor = trapping_probability(BASE, SchemeSpec.uninsured(BASE), 2.0)
    anchor_ok = abs(anchor - 2.0 * math.exp(-1.0)) < 1e-12
    for alpha in (0.8, 1.0, 1.5, 2.0):
        p = ModelParams(0.5, 1.0, alpha, 1.0)
        s = SchemeSpec.uninsured(p)
        for x in MC_POINTS:
            est = estimate_trapping_probability(p, s, x, MC)
            zs.append(est.z_score(trapping_probability(p, s, x)))
    worst = max(abs(z) for z in zs)
    return (worst <= Z_MAX and anchor_ok,
            f"max |z| {worst:.2f} over {len(zs)} points; psi(2) = {anchor:.6f}")


def c4():
    cases = [("insured", _insured(), MC_POINTS),
             ("subsidised", _subsidised(), MC_POINTS),
             ("barrier B=2", _barrier(2.0), (1.5, 2.0, 2.5, 4.0, 6.0)),
             ("barrier B=4", _barrier(4.0), (1.5, 3.0, 4.0, 5.0, 8.0))]
    worst, where = 0.0, ""
    for name, s, xs in cases:
        for x in xs:
            z = estimate_trapping_probability(BASE, s, x, MC).z_score(
                trapping_probability(BASE, s, x))
            if abs(z) >= worst:
                worst, where = abs(z), f"{name} x={x:g}"
    return worst <= Z_MAX, f"max |z| {worst:.2f} at {where}"


def c5():
    worst = 0.0
    h = 1e-6
    for r in (0.02, 0.05, 0.08):
        p = ModelParams(r, 1.0, 1.0, 1.0)
        s = SchemeSpec.uninsured(p)
        for x in np.linspace(1.5, 10.0, 10):
            fd = -(laplace_trapping(p, s, x, h) - trapping_probability(p, s, x)) / h
            exact = expected_trapping_time(p, s, x, perturb=True)
            worst = max(worst, abs(fd - exact) / abs(exact))
    return worst < 1e-3, f"max relative gap {worst:.2e} (tol 1e-3)"


def ide_residual(f, f_x, x, rho, x_c, alpha, lam, delta, source=0.0, penalty=1.0):
    """Relative residual of rho (x - x_c) f' - (lam + delta) f + lam E[f(x - Y)] + source."""
    integ = quad(lambda y: f(x - y) * alpha * math.exp(-alpha * y), 0.0, x - x_c,
                 epsabs=0.0, epsrel=1e-12, limit=200)[0]
    terms = [rho * (x - x_c) * f_x(x), -(lam + delta) * f(x), lam * integ,
             lam * penalty * math.exp(-alpha * (x - x_c)), source]
    return abs(sum(terms)) / max(abs(t) for t in terms)


def c6():
    d = 0.125
    s = SchemeSpec.uninsured(BASE)
    a, c = 1.0 - BASE.lam / BASE.r, 1.0 - (BASE.lam + d) / BASE.r
    u0 = tricomi_u(a, c, 0.0)
    edge = BASE.lam / (BASE.lam + d)

    def m(x):
        return laplace_trapping(BASE, s, x, d)

    def m_x(x):
        z = BASE.alpha * (x - BASE.x_star)
        return -BASE.alpha * edge / u0 * math.exp(-z) * (tricomi_u(a, c, z) + a * tricomi_u(a + 1, c + 1, z))

    xs = np.linspace(1.2, 10.0, 20)
    r_m = max(ide_residual(m, m_x, x, BASE.r, 1.0, BASE.alpha, BASE.lam, d) for x in xs)

    sb = _barrier(3.0)
    x_a, a_k, b = sb.x_star_ins, sb.loss_rate(BASE), sb.barrier
    xs_b = [x for x in np.linspace(1.2, 8.0, 21) if abs(x - b) > 1e-9][:20]

    def rho(x):
        return BASE.r if x < b else sb.r_ins

    r_ma = max(ide_residual(lambda y: barrier_laplace(BASE, sb, y, d),
                            lambda y: barrier_laplace_derivative(BASE, sb, y, d),
                            x, rho(x), x_a, a_k, BASE.lam, d) for x in xs_b)
    w = WelfareParams()
    prem = premium(BASE, KAPPA, THETA)
    r_v = max(ide_residual(lambda y: subsidy_value_barrier(BASE, sb, y, w),
                           lambda y: subsidy_value_barrier_derivative(BASE, sb, y, w),
                           x, rho(x), x_a, a_k, BASE.lam, w.delta,
                           source=prem if x < b else 0.0, penalty=0.0) for x in xs_b)
    worst = max(r_m, r_ma, r_v)
    return worst < 1e-5, f"residuals m {r_m:.1e}, m_A {r_ma:.1e}, V_A {r_v:.1e} (tol 1e-5)"


def c7():
    ins = _insured()
    x_a = ins.x_star_ins
    a_k = ins.loss_rate(BASE)
    near = _barrier(x_a + 1e-9)
    far = _barrier(x_a + 60.0 / a_k)
    e_near = e_far = 0.0
    for x in np.linspace(1.0, 10.0, 181):
        e_near = max(e_near, abs(trapping_probability(BASE, near, x) - trapping_probability(BASE, ins, x)))
        limit = gamma_pq(BASE.lam / BASE.r, a_k * (x - x_a))[1]
        e_far = max(e_far, abs(trapping_probability(BASE, far, x) - limit))
    return max(e_near, e_far) < 1e-6, f"B->x_A gap {e_near:.1e}, B->inf gap {e_far:.1e} (tol 1e-6)"


def c8():
    sb = _barrier(3.0)
    b = sb.barrier
    w = WelfareParams()
    d = 0.125

    def rel(lo, hi):
        return abs(lo - hi) / max(abs(lo), abs(hi))

    m_val = rel(barrier_laplace(BASE, sb, b, d, side="below"),
                barrier_laplace(BASE, sb, b, d, side="above"))
    m_der = rel(barrier_laplace_derivative(BASE, sb, b, d, side="below"),
                barrier_laplace_derivative(BASE, sb, b, d, side="above"))
    v_val = rel(subsidy_value_barrier(BASE, sb, b, w, side="below"),
                subsidy_value_barrier(BASE, sb, b, w, side="above"))
    v_der = rel(subsidy_value_barrier_derivative(BASE, sb, b, w, side="below"),
                subsidy_value_barrier_derivative(BASE, sb, b, w, side="above"))
    ok = max(m_val, v_val) < 1e-8 and max(m_der, v_der) < 1e-5
    return ok, (f"value gaps m_A {m_val:.1e}, V_A {v_val:.1e} (tol 1e-8); "
                f"slope gaps m_A {m_der:.1e}, V_A {v_der:.1e} (tol 1e-5)")


def c9():
    unins = SchemeSpec.uninsured(BASE)
    res_t = res_b = 0.0
    plateau = signs = True
    for x in (4.0, 6.0, 8.0, 10.0):
        t = optimal_theta(BASE, KAPPA, THETA, x, mapping=MAP)
        if t.verdict is Verdict.INTERIOR:
            diff = trapping_probability(BASE, _subsidised(theta_star=t.value), x) - \
                trapping_probability(BASE, unins, x)
            res_t = max(res_t, abs(diff))
        else:
            plateau = False
    for x in (14.0, 17.0, 20.0):
        t = optimal_theta(BASE, KAPPA, THETA, x, mapping=MAP)
        plateau &= t.verdict is Verdict.NO_SUBSIDY_NEEDED and t.value == THETA
    x_a = _insured().x_star_ins
    for x in (1.5, 2.0, 2.5, 3.0):
        r = optimal_barrier(BASE, KAPPA, THETA, x, mapping=MAP)
        signs &= r.verdict is Verdict.INTERIOR and r.value > x
        if r.value is not None:
            diff = trapping_probability(BASE, _barrier(r.value), x) - trapping_probability(BASE, unins, x)
            res_b = max(res_b, abs(diff))
    for x in (14.0, 17.0, 20.0):
        r = optimal_barrier(BASE, KAPPA, THETA, x, mapping=MAP)
        signs &= r.verdict is Verdict.NO_BARRIER_NEEDED and r.value == x_a
    ok = res_t < 1e-9 and res_b < 1e-9 and plateau and signs
    return ok, (f"theta* residual {res_t:.1e}, B* residual {res_b:.1e}, "
                f"theta plateau {'ok' if plateau else 'missing'}, "
                f"B* signs {'ok' if signs else 'wrong'}")


def _grid(lo, hi, n):
    return [float(v) for v in np.linspace(lo, hi, n)]


def _non_increasing(rows):
    """Each row (one x) must not increase along its entries."""
    return all(b <= a + 1e-12 for row in rows for a, b in zip(row, row[1:]))


def c10():
    checks = {}
    deltas = (0.0, 0.0078125, 0.03125, 0.125)
    xs = _grid(1.0, 10.0, 181)
    for name, s in (("1a", SchemeSpec.uninsured(BASE)), ("4a", _insured())):
        checks[f"fig {name} delta"] = _non_increasing(
            [[laplace_trapping(BASE, s, x, d) for d in deltas] for x in xs])
    alphas = (0.8, 1.0, 1.5, 2.0)
    ps = [ModelParams(0.5, 1.0, a, 1.0) for a in alphas]
    # more frequent large losses trap more often: psi falls as alpha rises
    checks["fig 1b alpha"] = _non_increasing(
        [[trapping_probability(p, SchemeSpec.uninsured(p), x) for p in ps] for x in xs])
    wide = _grid(1.0, 20.0, 381)
    gap = [trapping_probability(BASE, _insured(), x)
           - trapping_probability(BASE, SchemeSpec.uninsured(BASE), x) for x in wide[1:]]
    checks["crossing"] = min(gap) < 0 < max(gap)
    checks["fig 6a B"] = _non_increasing(
        [[trapping_probability(BASE, _barrier(b), x) for b in (2.0, 3.0, 4.0)] for x in wide])
    w = WelfareParams(delta=0.9, m_cost=8.0)
    cost = {name: [cost_of_social_protection(BASE, s, x, w) for x in wide]
            for name, s in (("u", SchemeSpec.uninsured(BASE)), ("s", _subsidised()),
                            ("b", _barrier(3.0)))}
    below = [x for x, b, u in zip(wide, cost["b"], cost["u"]) if b < u]
    checks["fig 8 barrier cheaper"] = bool(below)
    near = [i for i, x in enumerate(wide) if x <= 2.0]
    checks["fig 8 subsidy dearer"] = all(cost["s"][i] > cost["u"][i] for i in near)
    bad = [k for k, v in checks.items() if not v]
    return not bad, (f"{len(checks) - len(bad)}/{len(checks)} orderings hold"
                     + (f"; broken: {', '.join(bad)}" if bad else "")
                     + (f"; barrier cheaper on [{below[0]:g}, {below[-1]:g}]" if below else ""))


def c11():
    w = WelfareParams(delta=0.9, m_cost=8.0)
    worst, where = 0.0, ""
    for name, s, xs in (("subsidised", _subsidised(), (1.5, 2.0, 3.0, 5.0, 8.0)),
                        ("barrier B=3", _barrier(3.0), (1.5, 2.0, 3.0, 4.0, 6.0))):
        for x in xs:
            est = estimate_subsidy_value(BASE, s, x, w.delta, MC)
            z = est.z_score(subsidy_value(BASE, s, x, w))
            if abs(z) >= worst:
                worst, where = abs(z), f"{name} x={x:g}"
    return worst <= Z_MAX, f"max |z| {worst:.2f} at {where}"


def c12():
    cfg = os.path.join(CONFIGS, "fig6a.cfg")
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for k in range(2):
            out = os.path.join(tmp, f"run{k}")
            code = cli_main(["validate", cfg, "--out", out, "--seed", "99", "--paths", "20000"])
            outs.append((code, os.path.join(out, "validation_report.csv")))
        same = filecmp.cmp(outs[0][1], outs[1][1], shallow=False)
        codes = [c for c, _ in outs]
    return same and codes[0] == codes[1], f"reports identical: {same}; exit codes {codes}"


CRITERIA = [
    (1, "boundary exactness", 1.0, c1),
    (2, "U route vs incomplete gamma", 5.0, c2),
    (3, "MC oracle, uninsured", 60.0, c3),
    (4, "MC oracle, insured/subsidised/barrier", 180.0, c4),
    (5, "Laplace gradient vs expected time", 10.0, c5),
    (6, "IDE residuals", 10.0, c6),
    (7, "barrier limits", 5.0, c7),
    (8, "pasting at the barrier", 5.0, c8),
    (9, "optimizer fixed points", 30.0, c9),
    (10, "qualitative orderings", 30.0, c10),
    (11, "subsidy value vs MC", 120.0, c11),
    (12, "determinism", 120.0, c12),
]


@pytest.mark.parametrize("num,title,budget,body", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, title, budget, body):
    passed, line = _run(num, title, budget, body)
    assert passed, line


if __name__ == "__main__":
    status = [_run(*c)[0] for c in CRITERIA]
    print(f"{sum(status)}/{len(status)} criteria passed")
    sys.exit(0 if all(status) else 1)
