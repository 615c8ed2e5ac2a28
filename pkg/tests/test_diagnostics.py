import math

import numpy as np
import pytest

from nematic.coefficients import LeslieCoefficients
from nematic.diagnostics import (
    CSV_COLUMNS,
    TimePolynomial,
    cancellation_check,
    dissipation_rhs,
    dissipation_terms,
    energy_balance,
    make_report,
    max_principle_monitor,
    norm_ratios,
    phi_squared,
    total_energy,
    weak_residual,
    weak_strong_distance,
)
from nematic.galerkin import basis
from nematic.grid import Field, PeriodicGrid
from nematic.initial import make_initial_data, random_modes, random_pair, random_solenoidal
from nematic.solver import State, StepperConfig, run

PARODI = LeslieCoefficients(1.0, -1.5, 0.5, 2.0, 1.0, 0.0, eta=0.5)
TWO_PI = 2 * np.pi

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def _state(seed=0, n=16, rho=1.0, M=(1.0, 1.0)):
    g = PeriodicGrid(2, n)
    rng = np.random.default_rng(seed)
    return State.from_physical(g, rho, 0.5 * random_solenoidal(g, rng, 2, 2), random_modes(g, rng, 3, 2, 1),
                               M1=M[0], M2=M[1])


def test_dissipation_of_pure_director_matches_quadrature():
    # u = 0, lambda1 = -1, only mu4 otherwise: rhs = -||lap d - f(d)||^2
    c = LeslieCoefficients(0, -0.5, 0.5, 1, 0, 0, eta=0.7)
    g = PeriodicGrid(2, 16)
    a = 1.3
    x = g.mesh()[0]
    d = np.stack([a * np.cos(TWO_PI * x), 0 * x, 0 * x])
    rhs = dissipation_rhs(g, c, g.fft(np.zeros((2,) + g.shape)), g.fft(d))
    xf = np.arange(64) / 64
    cf = a * np.cos(TWO_PI * xf)
    h = -TWO_PI**2 * cf - (cf**2 - 1) * cf / c.eta**2
    assert rhs == pytest.approx(-np.mean(h**2), rel=1e-12)


def test_dissipation_terms_are_sign_definite_when_admissible():
    s = _state(1)
    terms = dissipation_terms(s.grid, PARODI, s.u_hat, s.d_hat)
    assert set(terms) == {"mu1", "mu4", "h", "Ad"}
    assert all(v <= 0 for v in terms.values())


def test_energy_balance_residual_shrinks_with_dt():
    s = _state(2)
    from nematic.solver import Stepper

    res = []
    for dt in (4e-4, 2e-4, 1e-4):
        s1 = Stepper(s.grid, PARODI, StepperConfig(dt=dt), 1.0, 1.0).step(s)
        res.append(abs(energy_balance(s, s1, PARODI, dt)[2]))
    assert res[0] / res[1] > 3.0 and res[1] / res[2] > 3.0


def test_total_energy_components():
    s = _state(3)
    k, e, p, tot = total_energy(s, PARODI)
    assert tot == pytest.approx(k + e + p) and min(k, e, p) >= 0


def test_phi_squared_and_norm_ratios():
    s = _state(4)
    phi2, comps = phi_squared(s, PARODI)
    assert phi2 > 0 and all(c_ >= 0 for c_ in comps)
    r = norm_ratios(s.d)
    assert r["gagliardo_nirenberg_l4"] > 0 and np.isfinite(r["agmon_linf"])


def test_report_row_matches_columns():
    s = _state(5)
    rep = make_report(s, PARODI)
    row = rep.csv_row()
    assert len(row) == len(CSV_COLUMNS)
    assert math.isnan(rep.energy_residual)
    assert rep.div_u_inf <= 1e-12 and rep.mass == pytest.approx(1.0)


def test_cancellation_identities_single_pair():
    g = PeriodicGrid(2, 16)
    u, d = random_pair(g, np.random.default_rng(6), 2)
    out = cancellation_check(Field(g, u), Field(g, d), PARODI)
    for k in ("r32_61", "r33_51", "r35_52", "antisym"):
        assert abs(out[k]) <= 1e-10
    # the individual terms are far from zero, so the pairing is not vacuous
    assert max(abs(v) for v in out["terms"].values()) > 1.0


def test_time_polynomial():
    psi = TimePolynomial.vanishing_at(0.4)
    assert psi(0.0) == pytest.approx(1.0) and abs(psi(0.4)) < 1e-15
    assert psi.deriv(0.4) == pytest.approx(0.0, abs=1e-14)
    assert TimePolynomial.vanishing_at(0.0).coef == (0.0,)


def _stationary_trajectory(nsamples=9, dt=0.01):
    g = PeriodicGrid(2, 16)
    x, y = g.mesh()
    rho = 1 + 0.2 * np.cos(TWO_PI * x) * np.sin(TWO_PI * y)
    d = np.stack([np.full(g.shape, 0.6), np.full(g.shape, 0.8), np.zeros(g.shape)])
    s = State.from_physical(g, rho, np.zeros((2,) + g.shape), d, M1=0.7, M2=1.3)
    return [s.with_arrays(s.rho_hat, s.u_hat, s.d_hat, i * dt) for i in range(nsamples)]


def _phi(g, i=0):
    md = basis(2, 5)[i]
    return Field(g, md.values(g.coords)[0] + np.zeros((2,) + g.shape))


def test_weak_residual_vanishes_on_stationary_solution():
    traj = _stationary_trajectory()
    g = traj[0].grid
    psi = TimePolynomial.vanishing_at(traj[-1].t)
    for i in range(5):
        res = weak_residual(traj, _phi(g, i), psi, PARODI)
        assert max(abs(r) for r in res) <= 1e-13


def test_weak_residual_input_checks():
    traj = _stationary_trajectory()
    g = traj[0].grid
    T = traj[-1].t
    assert weak_residual(traj[:1], _phi(g), TimePolynomial.vanishing_at(0.0), PARODI) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        weak_residual(traj[:5], _phi(g), TimePolynomial.vanishing_at(traj[4].t), PARODI)
    with pytest.raises(ValueError):
        weak_residual(traj, _phi(g), TimePolynomial((1.0,)), PARODI)
    bent = traj[:-1] + [traj[-1].with_arrays(traj[0].rho_hat, traj[0].u_hat, traj[0].d_hat, T * 1.5)]
    with pytest.raises(ValueError):
        weak_residual(bent, _phi(g), TimePolynomial.vanishing_at(T * 1.5), PARODI)


def test_weak_residual_separates_true_dynamics():
    # the same states with a stretched time axis are not a solution
    s = make_initial_data("director-wave+shear-wave", PeriodicGrid(2, 16))
    res = run(s, PARODI, StepperConfig(dt=5e-4, cadence=10), 0.02, keep_trajectory=True, trajectory_cadence=4)
    T = res.final.t
    fake = [x.with_arrays(x.rho_hat, x.u_hat, x.d_hat, 2 * x.t) for x in res.trajectory]
    for i in (1, 3, 4):
        phi = _phi(s.grid, i)
        good = max(abs(v) for v in weak_residual(res.trajectory, phi, TimePolynomial.vanishing_at(T), PARODI))
        bad = max(abs(v) for v in weak_residual(fake, phi, TimePolynomial.vanishing_at(2 * T), PARODI))
        assert good * 20 < bad


def test_weak_strong_distance():
    s = _state(8)
    assert weak_strong_distance(s, s) == 0.0
    g = s.grid
    delta = 0.1 * random_solenoidal(g, np.random.default_rng(9), 2, 2)
    s2 = State.from_physical(g, 1.0, s.u.values + delta, s.d.values, project=False)
    expected = 0.5 * g.spectral_inner(g.fft(delta), g.fft(delta))
    assert weak_strong_distance(s2, s) == pytest.approx(expected, rel=1e-12)
    # lifting to the finer grid leaves the value unchanged for resolved fields
    fine = s2.resample(PeriodicGrid(2, 32))
    assert weak_strong_distance(fine, s) == pytest.approx(expected, rel=1e-12)


def test_max_principle_monitor():
    s = _state(10)
    running, violated = max_principle_monitor([s, s, s])
    assert running == sorted(running) and not violated
    d_big = s.d_hat * 3.0
    grown = s.with_arrays(s.rho_hat, s.u_hat, d_big, 0.1)
    low = s.with_arrays(s.rho_hat, s.u_hat, s.d_hat * 0.1, 0.0)
    _, violated = max_principle_monitor([low, grown])
    assert violated
