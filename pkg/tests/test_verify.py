import json
import math

import numpy as np
import pytest

from scottshift.discretize import build_grid
from scottshift.errors import DomainError
from scottshift.special import energy_dispersion, phi
from scottshift.verify import (SUITES, comparison_margin, critical_positivity,
                               decomposition_check, gsr_residual, kernel_tail_integral,
                               run_suite, twisting_inequalities)

SMALL = build_grid(1e-4, 1e4, 600, "log-uniform")


def test_twisting_bounds_and_determinism():
    a = twisting_inequalities(20000, seed=3)
    b = twisting_inequalities(20000, seed=3)
    assert a.passed and a.details["violations"] == 0
    assert a.to_dict() == b.to_dict()
    # the phi_0 bound is sharp near p = q -> 0 (ratio close to 1)
    assert 0.5 < a.details["max_ratio_phi0"] <= 1 + 1e-14
    with pytest.raises(DomainError):
        twisting_inequalities(0)


def test_twisting_formula_against_direct_evaluation():
    # cancellation-free differences agree with naive ones where the latter are accurate
    rng = np.random.default_rng(1)
    p, q = rng.uniform(0.5, 5, 50), rng.uniform(6, 50, 50)
    ep, eq = energy_dispersion(p), energy_dispersion(q)
    lhs = (phi(0, p) - phi(0, q)) ** 2
    assert np.all(lhs <= (p - q) ** 2 / (8 * ep ** 2 * eq ** 2))
    assert np.all((phi(1, p) - phi(1, q)) ** 2 <= (p - q) ** 2 / (ep * eq))


def test_decomposition_check():
    rep = decomposition_check(2000)
    assert rep.passed and rep.max_residual < 1e-12


def test_comparison_margin_passes_and_detects_violation():
    rep = comparison_margin(SMALL)
    assert rep.passed
    # c = 1 is too large: the difference operator has a negative direction
    bad = comparison_margin(SMALL, c=1.0)
    assert not bad.passed and bad.details["min_eigenvalue"] < 0


@pytest.mark.parametrize("kind,index", [("b0", 1), ("b0", 3), ("c0", 0), ("c0", 1)])
def test_ground_state_representation(kind, index):
    rep = gsr_residual(kind, index)
    assert rep.passed, rep.details["functions"]
    for row in rep.details["functions"].values():
        assert row["form"] > 0 and row["boundary"] >= 0


def test_gsr_rejects_vanishing_test_function():
    with pytest.raises(DomainError):
        gsr_residual("b0", 1, test_functions=[("zero", lambda p: 0.0 * p)], grid=SMALL)


def test_kernel_tail_integral_closed_form():
    # Q_0(cosh s) = -ln tanh(s/2) = 2 sum_k exp(-(2k+1) s) / (2k+1)
    k = np.arange(4000)
    for d in (0.01, 0.5, 2.0):
        ref = float(np.sum(2 * np.exp(-(2 * k + 1) * d) / (2 * k + 1) ** 2))
        assert kernel_tail_integral(0, d)[0] == pytest.approx(ref, rel=1e-10)
    with pytest.raises(DomainError):
        kernel_tail_integral(0, 0.0)


def test_critical_positivity():
    rep = critical_positivity()
    assert rep.passed
    assert len(rep.details["cases"]) == 4
    for case in rep.details["cases"]:
        assert case["relative"] <= 1e-8
        assert case["kinetic_ratio"] >= -1e-8
        assert case["supercritical_negative"] and case["supercritical_ratio"] < 0


def test_run_suite_order_and_serialization():
    reps = run_suite("decomposition")
    assert [r.name for r in reps] == ["decomposition"]
    json.dumps([r.to_dict() for r in reps])
    assert SUITES == ("comparison", "critical", "decomposition", "gsr", "twisting")
    with pytest.raises(DomainError):
        run_suite("bogus")
    assert not math.isnan(reps[0].max_residual)
