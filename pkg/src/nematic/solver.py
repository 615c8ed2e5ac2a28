"""Pseudo-spectral IMEX integration of the variable-density nematic flow equations.

The unknowns are kept as rfft coefficients on a :class:`PeriodicGrid`.  Every
tendency is evaluated in full by :func:`tendencies`; the time stepper then
moves a constant-coefficient diagonal part to the implicit side:

* velocity:  ``-nu_u |k|^2`` with ``nu_u = mu4 / (2 rho_ref) + stab_u``
* director:  ``-(gamma + stab_d) |k|^2`` with ``gamma = -1 / lambda1``

and treats the remainder explicitly.  The stabilisation constants damp the
explicit anisotropic viscosity and the stiff velocity/director coupling.

Pressure is removed by solving ``div(rho^-1 grad P) = div G`` (conjugate
gradients with a constant-density preconditioner) followed by a Leray
projection that mops up the solver residual.  For constant density this
reduces to the plain Leray projection.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .coefficients import LeslieCoefficients, check_dissipation, warn_regime
from .constitutive import (
    apply_tensor,
    corotational_from_director,
    ericksen_phys,
    leslie_stress_phys,
    penalty_force_phys,
    split_gradient,
    velocity_gradient_hat,
)
from .grid import Field, PeriodicGrid

log = logging.getLogger(__name__)

SCHEMES = ("IMEX1", "IMEX2")


class SolverError(RuntimeError):
    pass


class CFLError(SolverError):
    pass


class BlowUpError(SolverError):
    pass


class DensityBoundError(SolverError):
    pass


class AdmissibilityError(SolverError):
    pass


@dataclass(frozen=True)
class State:
    """Density, velocity and director (spectral) at time ``t``.

    ``M1``/``M2`` are the density bounds carried as metadata.
    """

    grid: PeriodicGrid
    rho_hat: np.ndarray
    u_hat: np.ndarray
    d_hat: np.ndarray
    t: float = 0.0
    M1: float = 1.0
    M2: float = 1.0
    # exact physical samples when the state was read from disk
    phys: Optional[tuple] = field(default=None, compare=False, repr=False)

    @classmethod
    def from_physical(cls, grid, rho, u, d, t=0.0, M1=None, M2=None, project=True):
        rho = np.asarray(rho, dtype=float)
        if rho.ndim == 0:
            rho = np.full(grid.shape, float(rho))
        u = np.asarray(u, dtype=float)
        d = np.asarray(d, dtype=float)
        if u.shape != (grid.dim,) + grid.shape or d.shape != (3,) + grid.shape or rho.shape != grid.shape:
            raise ValueError("field shapes do not match the grid")
        uh = grid.fft(u)
        if project:
            uh = grid.leray_hat(uh)
            uh[(slice(None),) + (0,) * grid.dim] = 0.0
        M1 = float(rho.min()) if M1 is None else float(M1)
        M2 = float(rho.max()) if M2 is None else float(M2)
        return cls(grid, grid.fft(rho), uh, grid.fft(d), float(t), M1, M2)

    def physical_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.phys is not None:
            return self.phys
        g = self.grid
        return g.ifft(self.rho_hat), g.ifft(self.u_hat), g.ifft(self.d_hat)

    @property
    def rho(self) -> Field:
        return Field(self.grid, self.physical_arrays()[0])

    @property
    def u(self) -> Field:
        return Field(self.grid, self.physical_arrays()[1])

    @property
    def d(self) -> Field:
        return Field(self.grid, self.physical_arrays()[2])

    def with_arrays(self, rho_hat, u_hat, d_hat, t) -> "State":
        return replace(self, rho_hat=rho_hat, u_hat=u_hat, d_hat=d_hat, t=float(t), phys=None)

    def pack(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.rho_hat, self.u_hat, self.d_hat

    def resample(self, grid: PeriodicGrid) -> "State":
        g = self.grid
        return State(grid, g.resample_hat(self.rho_hat, grid), g.resample_hat(self.u_hat, grid),
                     g.resample_hat(self.d_hat, grid), self.t, self.M1, self.M2)


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: str = "IMEX2"
    dealias: float = 2.0
    cfl_safety: float = 0.5
    max_steps: int = 10**9
    cadence: int = 10
    convention: str = "ij"
    stab_u: float = 0.0
    stab_d: float = 0.0
    rho_tol: Optional[float] = None
    pressure_rtol: float = 1e-12
    force: bool = False
    truncation: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")
        if self.stab_u < 0 or self.stab_d < 0:
            raise ValueError("stabilisation constants must be non-negative")


def density_tolerance(M1: float, M2: float, rho_tol: Optional[float] = None) -> float:
    if rho_tol is not None:
        return float(rho_tol)
    return max(1e-6 * (M2 - M1), 1e-12 * max(1.0, abs(M2)))


# ------------------------------------------------------------------ physics
class Tendencies:
    """Evaluates the full right-hand side for one coefficient set and grid.

    Keeps the last pressure as the warm start of the next solve.
    """

    def __init__(self, grid: PeriodicGrid, c: LeslieCoefficients, convention: str = "ij",
                 pressure_rtol: float = 1e-12):
        if c.lambda1 == 0:
            raise AdmissibilityError("lambda1 = 0 makes the director equation singular")
        self.grid = grid
        self.c = c
        self.convention = convention
        self.pressure_rtol = pressure_rtol
        self._p_prev: Optional[np.ndarray] = None
        self.last_pressure_hat: Optional[np.ndarray] = None
        self.cg_iterations = 0

    # -- pressure
    def _solve_pressure(self, rinv_p: np.ndarray, Gh: np.ndarray) -> np.ndarray:
        grid = self.grid
        rhs_hat = grid.div_hat(Gh)
        rhs = grid.ifft(rhs_hat).ravel()
        scale = float(np.linalg.norm(rhs))
        if scale == 0.0:
            return np.zeros(grid.spectral_shape, dtype=complex)
        kdsq = grid.kdsq
        inv_lap = np.divide(1.0, kdsq, out=np.zeros_like(kdsq), where=kdsq > 0)
        rho_h = 1.0 / float(np.mean(rinv_p))

        def op(x):
            ph = grid.fft(x.reshape(grid.shape))
            flux = grid.from_padded(rinv_p * grid.to_padded(grid.grad_hat(ph)))
            return -grid.ifft(grid.div_hat(flux)).ravel()

        def prec(x):
            return grid.ifft(rho_h * inv_lap * grid.fft(x.reshape(grid.shape))).ravel()

        N = grid.size
        A = LinearOperator((N, N), matvec=op, dtype=float)
        M = LinearOperator((N, N), matvec=prec, dtype=float)
        x0 = self._p_prev if self._p_prev is not None else prec(-rhs)
        iters = [0]

        def count(_):
            iters[0] += 1

        x, info = cg(A, -rhs, x0=x0, rtol=self.pressure_rtol, atol=1e-15 * scale, maxiter=500, M=M,
                     callback=count)
        self.cg_iterations = iters[0]
        if info > 0:
            log.warning("pressure solve stopped after %d iterations", info)
        self._p_prev = x
        ph = grid.fft(x.reshape(grid.shape))
        ph[(0,) * grid.dim] = 0.0
        return ph

    def __call__(self, rho_hat, u_hat, d_hat):
        """Return ``(rho_t, u_t, d_t)`` spectral tendencies."""
        grid, c = self.grid, self.c
        dim = grid.dim
        lam1, lam2 = c.lambda1, c.lambda2

        Gh = velocity_gradient_hat(grid, u_hat, self.convention)
        gdh = grid.grad_hat(d_hat)
        stack = np.concatenate(
            [rho_hat[None], u_hat, Gh.reshape((dim * dim,) + grid.spectral_shape), d_hat,
             gdh.reshape((3 * dim,) + grid.spectral_shape)]
        )
        P = grid.to_padded(stack)
        rho_p = P[0]
        u_p = P[1:1 + dim]
        G_p = P[1 + dim:1 + dim + dim * dim].reshape((dim, dim) + rho_p.shape)
        o = 1 + dim + dim * dim
        d_p = P[o:o + 3]
        gd_p = P[o + 3:].reshape((3, dim) + rho_p.shape)

        f_hat = grid.from_padded(penalty_force_phys(d_p, c.eta))
        h_hat = grid.lap_hat(d_hat) - f_hat
        h_p = grid.to_padded(h_hat)

        A_p, Om_p = split_gradient(G_p)
        Ad_p = apply_tensor(A_p, d_p)
        N_p = corotational_from_director(c, A_p, h_p, d_p)
        T_p = leslie_stress_phys(c, A_p, N_p, d_p) - ericksen_phys(gd_p)

        # director: -u.grad d + Omega d - (lambda2/lambda1) A d, plus h/(-lambda1)
        adv_d = np.einsum("j...,aj...->a...", u_p, gd_p)
        d_expl = -adv_d + apply_tensor(Om_p, d_p) - (lam2 / lam1) * Ad_p
        d_t = grid.from_padded(d_expl) - h_hat / lam1

        # density in conservative form so the mean is untouched
        rho_t = -grid.div_hat(grid.from_padded(rho_p * u_p))

        adv_u = np.einsum("j...,ij...->i...", u_p, G_p)
        divT = grid.div_hat(grid.from_padded(T_p))
        rho_mean = float(rho_hat[(0,) * dim].real)
        rho_var = rho_hat.copy()
        rho_var[(0,) * dim] = 0.0
        if np.max(np.abs(rho_var)) <= 1e-15 * abs(rho_mean):
            Gv = -grid.from_padded(adv_u) + divT / rho_mean
            a = grid.leray_hat(Gv)
            self.last_pressure_hat = None
        else:
            rinv_p = 1.0 / rho_p
            Gv = grid.from_padded(-adv_u + rinv_p * grid.to_padded(divT))
            ph = self._solve_pressure(rinv_p, Gv)
            self.last_pressure_hat = ph
            a = grid.leray_hat(Gv - grid.from_padded(rinv_p * grid.to_padded(grid.grad_hat(ph))))
        return rho_t, a, d_t


# ------------------------------------------------------------------ stepper
class Stepper:
    """Owns the implicit operators and the tendency evaluator for fixed (grid, coefficients, config)."""

    def __init__(self, grid: PeriodicGrid, c: LeslieCoefficients, cfg: StepperConfig, M1: float, M2: float):
        self.grid, self.c, self.cfg = grid, c, cfg
        self.M1, self.M2 = M1, M2
        self.F = Tendencies(grid, c, cfg.convention, cfg.pressure_rtol)
        rho_ref = 0.5 * (M1 + M2)
        self.nu_u = c.mu4 / (2.0 * rho_ref) + cfg.stab_u
        self.nu_d = -1.0 / c.lambda1 + cfg.stab_d
        self.Lu = -self.nu_u * grid.ksq
        self.Ld = -self.nu_d * grid.ksq
        self.rho_tol = density_tolerance(M1, M2, cfg.rho_tol)

    def _trunc(self, uh):
        t = self.cfg.truncation
        return uh if t is None else t(uh)

    def explicit(self, y):
        r, u, d = y
        rt, ut, dt_ = self.F(r, u, d)
        ut = self._trunc(ut)
        return rt, ut - self.Lu * u, dt_ - self.Ld * d

    def _solve(self, rhs, coef):
        r, u, d = rhs
        return r, u / (1.0 - coef * self.Lu), d / (1.0 - coef * self.Ld)

    def advance(self, y, dt):
        if self.cfg.scheme == "IMEX1":
            K = self.explicit(y)
            return self._solve(tuple(a + dt * k for a, k in zip(y, K)), dt)
        g = 1.0 - 1.0 / math.sqrt(2.0)
        delta = 1.0 - 1.0 / (2.0 * g)
        K1 = self.explicit(y)
        Y2 = self._solve(tuple(a + g * dt * k for a, k in zip(y, K1)), g * dt)
        K2 = self.explicit(Y2)
        L2 = (0.0, self.Lu * Y2[1], self.Ld * Y2[2])
        rhs = tuple(a + dt * (delta * k1 + (1.0 - delta) * k2) + dt * (1.0 - g) * l
                    for a, k1, k2, l in zip(y, K1, K2, L2))
        return self._solve(rhs, g * dt)

    def check_cfl(self, s: State, dt: float) -> None:
        umax = float(np.max(np.abs(self.grid.ifft(s.u_hat)))) if s.u_hat.size else 0.0
        cfl = umax * dt * max(self.grid.n)
        if cfl > self.cfg.cfl_safety:
            raise CFLError(f"CFL number {cfl:.3g} exceeds {self.cfg.cfl_safety} at t={s.t:.6g}")

    def check_state(self, s: State) -> None:
        grid = self.grid
        for name, arr in (("rho", s.rho_hat), ("u", s.u_hat), ("d", s.d_hat)):
            if not np.all(np.isfinite(arr)):
                norms = {k: float(np.sqrt(grid.spectral_inner(v, v))) if np.all(np.isfinite(v)) else math.inf
                         for k, v in (("rho", s.rho_hat), ("u", s.u_hat), ("d", s.d_hat))}
                raise BlowUpError(f"non-finite {name} at t={s.t:.6g}; L2 norms {norms}")
        rho = grid.ifft(s.rho_hat)
        lo, hi = float(rho.min()), float(rho.max())
        if lo < self.M1 - self.rho_tol or hi > self.M2 + self.rho_tol:
            raise DensityBoundError(
                f"density range [{lo:.12g}, {hi:.12g}] left [{self.M1}, {self.M2}] "
                f"by more than {self.rho_tol:.3g} at t={s.t:.6g}"
            )

    def step(self, s: State, dt: Optional[float] = None) -> State:
        dt = self.cfg.dt if dt is None else dt
        self.check_cfl(s, dt)
        r, u, d = self.advance(s.pack(), dt)
        out = s.with_arrays(r, u, d, s.t + dt)
        self.check_state(out)
        return out


def admissibility_gate(c: LeslieCoefficients, dim: int, force: bool = False):
    rep = check_dissipation(c)
    if not rep.ok and not force:
        raise AdmissibilityError("inadmissible coefficients: " + ", ".join(
            rep.violations + ([] if rep.parodi_ok else ["parodi"])))
    if c.lambda1 == 0:
        raise AdmissibilityError("lambda1 = 0 cannot be simulated")
    warn_regime(rep, dim)
    return rep


def step(s: State, c: LeslieCoefficients, cfg: StepperConfig) -> State:
    """One IMEX step; builds a throwaway :class:`Stepper`."""
    admissibility_gate(c, s.grid.dim, cfg.force)
    return Stepper(s.grid, c, cfg, s.M1, s.M2).step(s)


@dataclass
class RunResult:
    reports: list
    final: State
    steps: int
    trajectory: list = field(default_factory=list)


def run(initial: State, c: LeslieCoefficients, cfg: StepperConfig, T: float,
        on_report: Optional[Callable] = None, keep_trajectory: bool = False,
        trajectory_cadence: Optional[int] = None, on_checkpoint: Optional[Callable] = None,
        checkpoint_every: int = 0) -> RunResult:
    """Advance ``initial`` to time ``T``, reporting every ``cfg.cadence`` steps.

    The final step is shortened so the run lands on ``T``.  ``on_report``
    receives each :class:`~nematic.diagnostics.EnergyReport` as it is made.
    """
    from .diagnostics import make_report

    admissibility_gate(c, initial.grid.dim, cfg.force)
    st = Stepper(initial.grid, c, cfg, initial.M1, initial.M2)
    s = initial
    reports = [make_report(s, c, None, None)]
    if on_report:
        on_report(reports[-1])
    traj = [s] if keep_trajectory else []
    tc = trajectory_cadence or cfg.cadence
    n_steps = max(0, int(math.ceil((T - s.t) / cfg.dt - 1e-9)))
    if n_steps > cfg.max_steps:
        raise SolverError(f"run needs {n_steps} steps, max_steps is {cfg.max_steps}")
    for k in range(1, n_steps + 1):
        dt = min(cfg.dt, T - s.t) if k == n_steps else cfg.dt
        prev = s
        s = st.step(s, dt)
        if keep_trajectory and (k % tc == 0 or k == n_steps):
            traj.append(s)
        if k % cfg.cadence == 0 or k == n_steps:
            # the previous report is reusable when it was taken at ``prev``
            known = reports[-1].total if reports[-1].t == prev.t else None
            reports.append(make_report(s, c, prev, dt, known))
            if on_report:
                on_report(reports[-1])
        if on_checkpoint and checkpoint_every > 0 and k % checkpoint_every == 0:
            on_checkpoint(s)
    if on_checkpoint:
        on_checkpoint(s)
    return RunResult(reports, s, n_steps, traj)


def pressure_recover(s: State, c: LeslieCoefficients, convention: str = "ij") -> Field:
    """Zero-mean pressure consistent with the current fields."""
    grid = s.grid
    F = Tendencies(grid, c, convention)
    F(*s.pack())
    ph = F.last_pressure_hat
    if ph is None:
        # constant density: P solves lap P = div G directly
        dim = grid.dim
        rho_mean = float(s.rho_hat[(0,) * dim].real)
        Gh = velocity_gradient_hat(grid, s.u_hat, convention)
        u_p = grid.to_padded(s.u_hat)
        G_p = grid.to_padded(Gh)
        d_p = grid.to_padded(s.d_hat)
        gd_p = grid.to_padded(grid.grad_hat(s.d_hat))
        h_p = grid.to_padded(grid.lap_hat(s.d_hat) - grid.from_padded(penalty_force_phys(d_p, c.eta)))
        A_p, _ = split_gradient(G_p)
        N_p = corotational_from_director(c, A_p, h_p, d_p)
        T_p = leslie_stress_phys(c, A_p, N_p, d_p) - ericksen_phys(gd_p)
        rhs = rho_mean * grid.div_hat(
            -grid.from_padded(np.einsum("j...,ij...->i...", u_p, G_p))
        ) + grid.div_hat(grid.div_hat(grid.from_padded(T_p)))
        kdsq = grid.kdsq
        inv = np.divide(1.0, kdsq, out=np.zeros_like(kdsq), where=kdsq > 0)
        ph = -rhs * inv
        ph[(0,) * dim] = 0.0
    return Field(grid, grid.ifft(ph))
