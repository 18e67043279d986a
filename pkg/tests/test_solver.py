from dataclasses import replace

import numpy as np
import pytest

from soecredit.calibration import SCENARIOS, Calibration, scenario
from soecredit.model import ModelSystem, build_system
from soecredit.solver import (
    ConvergenceError,
    IndeterminacyError,
    NoStableSolutionError,
    solve,
    spectral_report,
)


def scalar(A, B, C, D=-1.0):
    return ModelSystem.from_matrices([[A]], [[B]], [[C]], [[D]])


def test_forward_scalar_stable_coefficient():
    # x = 0.5 E x' + e: the only bounded solution is x = e
    sol = solve(scalar(-0.5, 1.0, 0.0))
    assert sol.determinacy == "unique"
    assert sol.P[0, 0] == 0.0
    assert sol.Q[0, 0] == pytest.approx(1.0, abs=1e-14)


def test_backward_scalar():
    sol = solve(scalar(0.0, 1.0, -0.9))
    assert sol.P[0, 0] == pytest.approx(0.9, abs=1e-12)
    assert sol.Q[0, 0] == pytest.approx(1.0, abs=1e-12)
    rep = spectral_report(sol)
    assert rep.moduli == pytest.approx((0.9,))
    assert rep.n_outside == 0 and rep.n_inside == 1


def test_explosive_predetermined_scalar():
    # x = 1.5 x_{-1} + e: the single root 1.5 is unstable but x is predetermined
    with pytest.raises(NoStableSolutionError, match="no stable solution") as info:
        solve(scalar(0.0, 1.0, -1.5))
    assert info.value.report.moduli == pytest.approx((1.5,))
    assert info.value.code == "explosive"


def test_jump_scalar_with_unstable_root_is_unique():
    # E x' = 1.5 x + e: the root 1.5 pins the jump variable to x = -e/1.5
    sol = solve(scalar(1.0, -1.5, 0.0))
    assert sol.determinacy == "unique"
    assert sol.P[0, 0] == 0.0
    assert sol.Q[0, 0] == pytest.approx(-1 / 1.5)
    rep = spectral_report(sol)
    assert rep.moduli == pytest.approx((1.5,))
    assert rep.n_outside == rep.n_jump == 1


def test_forward_scalar_with_coefficient_above_one_is_indeterminate():
    # x = 1.5 E x' + e has the stable root 1/1.5 and nothing predetermined
    with pytest.raises(IndeterminacyError, match="multiple stable solutions") as info:
        solve(scalar(-1.5, 1.0, 0.0))
    assert info.value.report.moduli == pytest.approx((1 / 1.5,))


def test_unit_root_band_counts_as_unstable():
    with pytest.raises(NoStableSolutionError):
        solve(scalar(0.0, 1.0, -(1.0 - 1e-7)))
    assert solve(scalar(0.0, 1.0, -(1.0 - 1e-5))).P[0, 0] == pytest.approx(1 - 1e-5)


@pytest.mark.parametrize("name", [s for s in SCENARIOS])
@pytest.mark.parametrize("policy", ["fi", "pi"])
def test_presets_unique_and_stable(name, policy):
    sys = build_system(scenario(name).apply(Calibration()), policy)
    sol = solve(sys)
    assert sol.determinacy == "unique"
    assert sol.residual < 1e-10
    assert sol.spectral_radius < 1.0
    assert sol.P.shape == (sys.n, sys.n) and sol.Q.shape == (sys.n, len(sys.shocks))


def test_baseline_outside_count_equals_jumps(baseline):
    rep = spectral_report(baseline)
    assert rep.n_outside == rep.n_jump == baseline.system.n_jump
    assert rep.n_inside == rep.n_predetermined
    assert list(rep.moduli) == sorted(rep.moduli, reverse=True)


def test_iterative_route_agrees(baseline):
    alt = solve(baseline.system, method="iterate")
    assert np.max(np.abs(alt.P - baseline.P)) < 1e-8
    assert np.max(np.abs(alt.Q - baseline.Q)) < 1e-8


def test_row_rescaling_invariance(baseline):
    sys = baseline.system
    k = 3.7
    scaled = replace(sys, A=sys.A * k, B=sys.B * k, C=sys.C * k, D=sys.D * k)
    sol = solve(scaled)
    assert np.max(np.abs(sol.P - baseline.P)) < 1e-10
    assert np.max(np.abs(sol.Q - baseline.Q)) < 1e-10


def test_certainty_equivalence():
    cal = Calibration()
    flat = {f"shocks.{s}.std_dev": 2 * spec.std_dev for s, spec in cal.shocks.items()}
    a = solve(build_system(cal))
    b = solve(build_system(cal.with_overrides(flat)))
    assert np.array_equal(a.P, b.P)
    assert np.array_equal(a.Q, b.Q)


def test_convergence_failure_reports_last_residual():
    with pytest.raises(ConvergenceError, match="last residual") as info:
        solve(scalar(0.0, 1.0, -0.9), tol=0.0, method="iterate")
    assert info.value.residual is not None


def test_unknown_method():
    with pytest.raises(ValueError):
        solve(scalar(0.0, 1.0, -0.5), method="newton")
