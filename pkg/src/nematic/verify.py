"""Seeded property checks across the library, run by ``nematic verify``."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coefficients import LeslieCoefficients, check_dissipation, check_parodi
from .constitutive import energies, kinematics, penalty_force
from .diagnostics import cancellation_check, energy_balance, weak_strong_distance
from .galerkin import GalerkinSystem, assemble
from .grid import Field, PeriodicGrid, leray_project
from .initial import random_modes, random_pair, random_solenoidal
from .io import decode_checkpoint, encode_checkpoint
from .solver import State, Stepper, StepperConfig

PARODI_SET = LeslieCoefficients(1.0, -1.5, 0.5, 2.0, 1.0, 0.0, eta=0.5)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float
    seconds: float

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.value:.3e} (tol {self.tol:.1e}, {self.seconds:.2f}s)"


def _roundtrip(rng):
    g = PeriodicGrid(2, 32)
    a = rng.standard_normal((3,) + g.shape)
    return float(np.max(np.abs(g.ifft(g.fft(a)) - a)) / np.max(np.abs(a)))


def _leray(rng):
    g = PeriodicGrid(3, 8)
    v = Field(g, rng.standard_normal((3,) + g.shape))
    p = leray_project(v)
    pp = leray_project(p)
    div = np.max(np.abs(g.ifft(g.div_hat(p.hat()))))
    orth = abs(g.spectral_inner(v.hat() - p.hat(), p.hat()))
    return float(max(div, np.max(np.abs(pp.values - p.values)), orth))


def _ibp(rng):
    g = PeriodicGrid(2, 32)
    f = g.fft(random_modes(g, rng, 1, 3, 4)[0])
    h = g.fft(random_modes(g, rng, 1, 3, 4)[0])
    worst = 0.0
    for j in range(2):
        a = g.spectral_inner(f, 1j * g.kd[j] * h)
        b = -g.spectral_inner(1j * g.kd[j] * f, h)
        worst = max(worst, abs(a - b))
    return worst


def _parodi(rng):
    worst = 0.0
    for _ in range(50):
        mu2, mu3, mu5 = rng.integers(-8, 8, size=3) / 4.0
        mu6 = mu5 + mu2 + mu3
        c = LeslieCoefficients(0.0, mu2, mu3, 1.0, mu5, mu6)
        worst = max(worst, abs(check_parodi(c)[0]))
    return worst


def _mu4_monotone(rng):
    bad = 0
    for _ in range(50):
        mu = rng.uniform(-2, 2, size=6)
        c = LeslieCoefficients(*mu)
        if check_dissipation(c).dissipation_ok and not check_dissipation(c.with_(mu4=c.mu4 + 1)).dissipation_ok:
            bad += 1
    return float(bad)


def _kinematics(rng):
    g = PeriodicGrid(2, 16)
    u = Field(g, random_solenoidal(g, rng, 3, 3))
    kin = kinematics(u)
    A, Om = kin.A.values, kin.Omega.values
    grad = g.ifft(g.grad_hat(u.hat()))
    return float(max(np.max(np.abs(A + Om - grad)), np.max(np.abs(Om + np.swapaxes(Om, 0, 1))),
                     np.max(np.abs(A[0, 0] + A[1, 1]))))


def _variational(rng):
    g = PeriodicGrid(2, 16)
    worst = 0.0
    for _ in range(5):
        d = random_modes(g, rng, 3, 2, 2)
        dd = random_modes(g, rng, 3, 2, 2)
        eps = 1e-5
        z = Field(g, np.ones(g.shape))
        uz = Field(g, np.zeros((2,) + g.shape))
        ep = energies(z, uz, Field(g, d + eps * dd), 0.5)[2]
        em = energies(z, uz, Field(g, d - eps * dd), 0.5)[2]
        fd = (ep - em) / (2 * eps)
        an = g.spectral_inner(penalty_force(Field(g, d), 0.5).hat(), g.fft(dd))
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
    return worst


def _cancellation(rng):
    worst = 0.0
    for n in (16, 32):
        g = PeriodicGrid(2, n)
        r = np.random.default_rng(rng.integers(2**31))
        for _ in range(10):
            u, d = random_pair(g, r, int(r.integers(1, 4)))
            res = cancellation_check(Field(g, u), Field(g, d), PARODI_SET)
            worst = max(worst, *(abs(res[k]) for k in ("r32_61", "r33_51", "r35_52", "antisym")))
    return worst


def _equilibrium(rng):
    g = PeriodicGrid(2, 16)
    s = State.from_physical(g, 1.0, np.zeros((2,) + g.shape), np.stack([np.ones(g.shape), 0 * g.mesh()[0], 0 * g.mesh()[0]]))
    st = Stepper(g, PARODI_SET, StepperConfig(dt=1e-3), 1.0, 1.0)
    s1 = st.step(s)
    lhs, rhs, _ = energy_balance(s, s1, PARODI_SET, 1e-3)
    return float(max(np.max(np.abs(s1.u_hat)), np.max(np.abs(s1.d_hat - s.d_hat)), abs(lhs), abs(rhs)))


def _mass(rng):
    g = PeriodicGrid(2, 16)
    x, y = g.mesh()
    rho = 1 + 0.2 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
    u = 0.5 * random_solenoidal(g, rng, 2, 1)
    d = np.stack([np.ones(g.shape), 0 * x, 0 * x])
    s = State.from_physical(g, rho, u, d, M1=0.7, M2=1.3)
    st = Stepper(g, PARODI_SET, StepperConfig(dt=1e-3, stab_u=3.0), 0.7, 1.3)
    m0 = float(s.rho_hat[0, 0].real)
    for _ in range(20):
        s = st.step(s)
    return abs(float(s.rho_hat[0, 0].real) - m0)


def _galerkin(rng):
    g = PeriodicGrid(2, 16)
    s = State.from_physical(g, 1.0, np.zeros((2,) + g.shape), random_modes(g, rng, 3, 2, 2))
    sysm = GalerkinSystem.from_state(s, PARODI_SET, 4)
    A, _, C, _ = assemble(sysm)
    return float(max(np.max(np.abs(A - np.eye(4))), np.max(np.abs(C - np.diag(sysm.eigenvalues))) / C.max()))


def _checkpoint(rng):
    g = PeriodicGrid(2, 8)
    s = State.from_physical(g, 1 + 0.1 * rng.random(g.shape), random_solenoidal(g, rng, 2, 2),
                            random_modes(g, rng, 3, 2, 2), t=0.25)
    buf = encode_checkpoint(s)
    s2 = decode_checkpoint(buf)
    return float(encode_checkpoint(s2) != buf)


def _distance(rng):
    g = PeriodicGrid(2, 16)
    s = State.from_physical(g, 1.0, random_solenoidal(g, rng, 2, 2), random_modes(g, rng, 3, 2, 2))
    delta = random_solenoidal(g, rng, 2, 2)
    s2 = State.from_physical(g, 1.0, s.u.values + delta, s.d.values, project=False)
    expected = 0.5 * g.spectral_inner(g.fft(delta), g.fft(delta))
    return float(abs(weak_strong_distance(s, s)) + abs(weak_strong_distance(s2, s) - expected))


CHECKS: list[tuple[str, Callable, float]] = [
    ("transform round trip", _roundtrip, 1e-13),
    ("leray idempotent, orthogonal, solenoidal", _leray, 1e-12),
    ("integration by parts", _ibp, 1e-12),
    ("parodi residual exact", _parodi, 0.0),
    ("dissipation monotone in mu4", _mu4_monotone, 0.0),
    ("kinematic tensors", _kinematics, 1e-11),
    ("penalty force variational", _variational, 1e-6),
    ("cancellation identities", _cancellation, 1e-10),
    ("equilibrium fixed point", _equilibrium, 1e-13),
    ("mass conservation", _mass, 1e-12),
    ("galerkin mass and stiffness", _galerkin, 1e-12),
    ("checkpoint round trip", _checkpoint, 0.0),
    ("weak-strong distance", _distance, 1e-12),
]


def run_all(seed: int = 0, echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    out = []
    for i, (name, fn, tol) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            val = float(fn(rng))
        except Exception as exc:  # a crashing check is a failed check
            val = float("inf")
            name = f"{name} ({type(exc).__name__}: {exc})"
        res = CheckResult(name, val, tol, time.perf_counter() - t0)
        out.append(res)
        if echo:
            echo(res.line())
    return out
