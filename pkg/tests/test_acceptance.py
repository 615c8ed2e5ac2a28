"""Acceptance criteria, each run at its stated tolerance.

Every test records one ``PASS``/``FAIL`` line, repeated in the pytest
terminal summary.  ``python tests/test_acceptance.py`` runs them without pytest.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from nematic import Field, LeslieCoefficients, PeriodicGrid, State, StepperConfig, run
from nematic.constitutive import energies, penalty_force
from nematic.diagnostics import (
    TimePolynomial,
    cancellation_check,
    max_principle_monitor,
    weak_residual,
    weak_strong_distance,
)
from nematic.galerkin import basis, compare
from nematic.initial import InitialSpec, make_initial_data, random_modes, random_pair

PARODI = LeslieCoefficients(1.0, -1.5, 0.5, 2.0, 1.0, 0.0, eta=0.5)
LAMBDA2_ZERO = LeslieCoefficients(1.0, -1.0, 1.0, 2.0, 0.5, 0.5, eta=0.5)
M1, M2 = 0.8, 1.2
STAB_U = 3.0

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")

_RUNS: dict = {}


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _wave_state(n: int, rho_amplitude: float, m1: float = M1, m2: float = M2) -> State:
    spec = InitialSpec(preset="director-wave+shear-wave", rho_amplitude=rho_amplitude)
    return make_initial_data(spec.preset, PeriodicGrid(2, n), 0, spec, m1, m2)


def _wave_run(dt: float, T: float = 1.0, keep=False, cadence=10, n=64):
    key = (dt, T, keep, cadence, n)
    if key not in _RUNS:
        s0 = _wave_state(n, 0.15)
        cfg = StepperConfig(dt=dt, cadence=cadence, stab_u=STAB_U)
        t0 = time.perf_counter()
        res = run(s0, PARODI, cfg, T, keep_trajectory=keep)
        _RUNS[key] = (res, time.perf_counter() - t0)
    return _RUNS[key]


def _order(errs) -> float:
    errs = np.asarray(errs, dtype=float)
    return float(np.min(np.log2(errs[:-1] / errs[1:])))


def test_criterion_01_energy_dissipation(record_line):
    res, secs = _wave_run(5e-4)
    E = np.array([r.total for r in res.reports])
    jumps = np.diff(E)
    worst = float(jumps.max()) / E[0]
    ok = worst <= 1e-9 and secs <= 120.0
    record_line(f"{_verdict(ok)} criterion 1 energy dissipation: max relative increase {worst:.3e} "
                f"(tol 1e-9), E(0)={E[0]:.6g} E(T)={E[-1]:.6g}, {secs:.1f}s (limit 120s)")
    assert worst <= 1e-9
    assert secs <= 120.0


def test_criterion_02_energy_residual_convergence(record_line):
    # every step is reported, so the maximum is taken over the same continuum of steps at each dt
    dts = (1e-3, 5e-4, 2.5e-4)
    worst = [max(abs(r.energy_residual) for r in _wave_run(dt, cadence=1)[0].reports[1:]) for dt in dts]
    order = _order(worst)
    ok = order >= 0.9
    record_line(f"{_verdict(ok)} criterion 2 energy residual order: residuals "
                + ", ".join(f"{w:.3e}" for w in worst) + f", order {order:.2f} (min 0.9)")
    assert ok


def test_criterion_03_cancellation_identities(record_line):
    t0 = time.perf_counter()
    worst = {}
    for n in (16, 32):
        g = PeriodicGrid(2, n)
        rng = np.random.default_rng(2024 + n)
        for _ in range(100):
            u, d = random_pair(g, rng, int(rng.integers(1, 4)))
            res = cancellation_check(Field(g, u), Field(g, d), PARODI)
            for k in ("r32_61", "r33_51", "r35_52", "antisym"):
                worst[k] = max(worst.get(k, 0.0), abs(res[k]))
    secs = time.perf_counter() - t0
    top = max(worst.values())
    ok = top <= 1e-10 and secs <= 30.0
    record_line(f"{_verdict(ok)} criterion 3 cancellation identities: "
                + ", ".join(f"{k}={v:.2e}" for k, v in worst.items()) + f" (tol 1e-10), {secs:.1f}s (limit 30s)")
    assert top <= 1e-10
    assert secs <= 30.0


def _oracle_state() -> State:
    """Director wave with all four oracle modes excited in the velocity, rho = 1."""
    g = PeriodicGrid(2, 16)
    d = _wave_state(16, 0.0, 1.0, 1.0).physical_arrays()[2]
    rng = np.random.default_rng(4)
    u = sum(0.5 * rng.normal() * md.values(g.coords)[0] for md in basis(2, 4))
    return State.from_physical(g, 1.0, u, d)


def test_criterion_04_galerkin_oracle(record_line):
    t0 = time.perf_counter()
    rep = compare(_oracle_state(), PARODI, m=4, dt=1e-4, T=0.1, reading="eqL2", substeps=4)
    secs = time.perf_counter() - t0
    disc = rep.max_discrepancy
    ok = disc <= 1e-6 and secs <= 60.0
    record_line(f"{_verdict(ok)} criterion 4 galerkin oracle: max amplitude discrepancy {disc:.3e} "
                f"(tol 1e-6), {secs:.1f}s (limit 60s)")
    assert disc <= 1e-6
    assert secs <= 60.0


def test_criterion_05_variational_consistency(record_line):
    g = PeriodicGrid(2, 16)
    rng = np.random.default_rng(5)
    one = Field(g, np.ones(g.shape))
    zero_u = Field(g, np.zeros((2,) + g.shape))
    worst = 0.0
    for _ in range(20):
        d = random_modes(g, rng, 3, 3, 2)
        dd = random_modes(g, rng, 3, 3, 2)
        eps = 1e-5
        ep = energies(one, zero_u, Field(g, d + eps * dd), PARODI.eta)[2]
        em = energies(one, zero_u, Field(g, d - eps * dd), PARODI.eta)[2]
        fd = (ep - em) / (2 * eps)
        an = g.spectral_inner(penalty_force(Field(g, d), PARODI.eta).hat(), g.fft(dd))
        worst = max(worst, abs(fd - an) / abs(an))
    ok = worst <= 1e-6
    record_line(f"{_verdict(ok)} criterion 5 variational consistency: max relative error {worst:.3e} (tol 1e-6)")
    assert ok


def test_criterion_06_conservation(record_line):
    res, _ = _wave_run(5e-4)
    m0 = res.reports[0].mass
    drift = max(abs(r.mass - m0) for r in res.reports)
    div = max(r.div_u_inf for r in res.reports)
    lo = min(r.rho_min for r in res.reports)
    hi = max(r.rho_max for r in res.reports)
    ok = drift <= 1e-12 and div <= 1e-11 and lo >= M1 - 1e-6 and hi <= M2 + 1e-6
    record_line(f"{_verdict(ok)} criterion 6 conservation: mass drift {drift:.2e} (tol 1e-12), "
                f"div_u_inf {div:.2e} (tol 1e-11), rho in [{lo:.6f}, {hi:.6f}] vs [{M1}, {M2}] +- 1e-6")
    assert drift <= 1e-12
    assert div <= 1e-11
    assert M1 - 1e-6 <= lo and hi <= M2 + 1e-6


def test_criterion_07_maximum_principle(record_line):
    assert LAMBDA2_ZERO.lambda2 == 0.0
    s0 = _wave_state(64, 0.0, 1.0, 1.0)
    res = run(s0, LAMBDA2_ZERO, StepperConfig(dt=5e-4, cadence=10, stab_u=STAB_U), 1.0)
    running, violated = max_principle_monitor(res.reports, slack=1e-3)
    bound = max(1.0, res.reports[0].sobolev["linf_d"]) + 1e-3
    ok = not violated
    record_line(f"{_verdict(ok)} criterion 7 maximum principle: running max |d| {running[-1]:.6f} "
                f"(bound {bound:.6f})")
    assert ok


def _weak_runs():
    # director wave, random velocity and density: no symmetry zeroes any of the three defects
    out = []
    g = PeriodicGrid(2, 32)
    spec = InitialSpec(preset="director-wave+random-smooth", kmax=4, decay=1.0, velocity_amplitude=0.5)
    s0 = make_initial_data(spec.preset, g, 8, spec, M1, M2)
    for dt in (1e-3, 5e-4, 2.5e-4):
        res = run(s0, PARODI, StepperConfig(dt=dt, cadence=10, stab_u=STAB_U), 0.1,
                  keep_trajectory=True, trajectory_cadence=10)
        out.append(res.trajectory)
    return g, out


def test_criterion_08_weak_form_residual(record_line):
    g, trajs = _weak_runs()
    T = trajs[0][-1].t
    psi = TimePolynomial.vanishing_at(T)
    worst_order = math.inf
    detail = []
    for md in basis(2, 5):
        vec = md.values(g.coords)[0] + np.zeros((2,) + g.shape)
        # scalar test: the mode's own profile sqrt(2) cos or sin of 2 pi k.x
        prof = np.einsum("a,a...->...", np.asarray(md.e), vec)
        resid = np.array([np.abs(weak_residual(tr, Field(g, vec), psi, PARODI, scalar_test=Field(g, prof)))
                          for tr in trajs])
        orders = [_order(resid[:, j]) for j in range(3)]
        worst_order = min(worst_order, *orders)
        detail.append("/".join(f"{o:.2f}" for o in orders))
    ok = worst_order >= 0.9
    record_line(f"{_verdict(ok)} criterion 8 weak-form residual: min order {worst_order:.2f} (min 0.9); "
                f"mass/momentum/director orders per test function: {', '.join(detail)}")
    assert ok


def test_criterion_09_weak_strong_consistency(record_line):
    spec = InitialSpec(preset="random-smooth", kmax=48, decay=0.5, rho_amplitude=0.0,
                       velocity_amplitude=0.5, director_amplitude=0.5)
    finals = {}
    for n in (32, 64, 128):
        g = PeriodicGrid(2, n)
        s0 = make_initial_data("random-smooth", g, 9, spec, M1, M2)
        # the rough director needs more stabilisation than the smooth acceptance data
        finals[n] = run(s0, PARODI, StepperConfig(dt=1e-3, cadence=50, stab_u=10.0), 0.1).final
    d1 = weak_strong_distance(finals[32], finals[64])
    d2 = weak_strong_distance(finals[64], finals[128])
    ratio = d1 / d2
    ok = ratio >= 4.0
    record_line(f"{_verdict(ok)} criterion 9 weak-strong distance: (32,64) {d1:.3e}, (64,128) {d2:.3e}, "
                f"ratio {ratio:.3g} (min 4)")
    assert ok


def test_criterion_10_three_dimensional_smoke(record_line):
    g = PeriodicGrid(3, 32)
    spec = InitialSpec(preset="small-data", epsilon=0.01, rho_amplitude=0.0)
    s0 = make_initial_data("small-data", g, 10, spec, M1, M2, PARODI)
    t0 = time.perf_counter()
    res = run(s0, PARODI, StepperConfig(dt=1e-3, cadence=10, stab_u=STAB_U), 0.1)
    secs = time.perf_counter() - t0
    E = np.array([r.total for r in res.reports])
    worst = float(np.diff(E).max()) / E[0]
    finite = bool(np.all(np.isfinite(E)))
    ok = finite and worst <= 1e-9 and secs <= 600.0 and math.isclose(res.final.t, 0.1)
    record_line(f"{_verdict(ok)} criterion 10 3D smoke: t={res.final.t:.3g}, max relative energy increase "
                f"{worst:.3e} (tol 1e-9), {secs:.1f}s (limit 600s)")
    assert finite and worst <= 1e-9
    assert secs <= 600.0


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
