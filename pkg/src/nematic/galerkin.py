"""Small Galerkin system on divergence-free Fourier modes.

The velocity is ``u = sum_i g_i phi_i`` with real, zero-mean, unit-L2
divergence-free trigonometric modes.  Density and director live on a
companion grid and are advanced together with the amplitudes by classical
RK4.  The basis and its gradients are evaluated analytically at the
quadrature points, independently of the pseudo-spectral stepper.

Two readings of the amplitude equation are available:

``eqL2``
    ``A g' = -B g g - (mu4/2) C g + D`` with
    ``D_j = int (grad d (x) grad d - sigma') : grad phi_j`` where ``sigma'``
    is the Leslie stress without its ``mu4 A`` part and ``N`` follows the
    director equation.  This is the momentum balance projected on the modes.
``verbatim``
    ``A g' = -B g g - C g + D`` with ``D_j = int (grad d (x) grad d + sigma) : grad phi_j``
    and ``N = d_t + (u . grad) d + Omega d``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .coefficients import LeslieCoefficients
from .constitutive import (
    apply_tensor,
    corotational_from_director,
    ericksen_phys,
    leslie_stress_phys,
    penalty_density_phys,
    penalty_force_phys,
)
from .grid import PeriodicGrid

READINGS = ("eqL2", "verbatim")
DEFAULT_CAP = 8


class SingularMassMatrix(np.linalg.LinAlgError):
    pass


class NonFiniteAmplitudes(FloatingPointError):
    pass


@dataclass(frozen=True)
class Mode:
    """``sqrt(2) e cos(2 pi k.x)`` or ``sqrt(2) e sin(2 pi k.x)``."""

    k: tuple[int, ...]
    e: tuple[float, ...]
    kind: str  # "cos" or "sin"

    @property
    def eigenvalue(self) -> float:
        return (2 * math.pi) ** 2 * sum(v * v for v in self.k)

    def values(self, coords) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(dim, ...)`` and gradient ``(dim, dim, ...)`` with ``G[a, b] = d_b phi_a``."""
        kx = sum(2 * math.pi * kv * c for kv, c in zip(self.k, coords))
        r2 = math.sqrt(2.0)
        if self.kind == "cos":
            s, ds = r2 * np.cos(kx), -r2 * np.sin(kx)
        else:
            s, ds = r2 * np.sin(kx), r2 * np.cos(kx)
        e = np.asarray(self.e)
        shape = np.broadcast(*coords).shape
        s = np.broadcast_to(s, shape)
        ds = np.broadcast_to(ds, shape)
        val = e.reshape((-1,) + (1,) * len(shape)) * s
        kk = 2 * math.pi * np.asarray(self.k, dtype=float)
        grad = np.einsum("a,b->ab", e, kk).reshape(e.shape + kk.shape + (1,) * len(shape)) * ds
        return val, grad


def _half_space(k) -> bool:
    for v in k:
        if v != 0:
            return v > 0
    return False


def _polarizations(k) -> list[np.ndarray]:
    kv = np.asarray(k, dtype=float)
    kn = kv / np.linalg.norm(kv)
    if kv.size == 2:
        return [np.array([-kn[1], kn[0]])]
    axis = int(np.argmin(np.abs(kv)))
    a = np.zeros(3)
    a[axis] = 1.0
    e1 = np.cross(a, kn)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(kn, e1)
    return [e1, e2]


def basis(dim: int, m: int) -> list[Mode]:
    """First ``m`` modes ordered by ``|k|^2``, then ``k`` lexicographically, then polarization."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if m < 1:
        raise ValueError("m must be positive")
    modes: list[Mode] = []
    radius = 1
    while True:
        ks = [k for k in itertools.product(range(-radius, radius + 1), repeat=dim) if _half_space(k)]
        ks.sort(key=lambda k: (sum(v * v for v in k), k))
        modes = []
        for k in ks:
            for e in _polarizations(k):
                for kind in ("cos", "sin"):
                    modes.append(Mode(tuple(int(v) for v in k), tuple(float(x) for x in e), kind))
        # every |k|^2 <= radius^2 shell is complete inside the cube of this radius
        complete = [md for md in modes if sum(v * v for v in md.k) <= radius**2]
        if len(complete) >= m:
            return complete[:m]
        radius += 1


def mode_hats(grid: PeriodicGrid, modes: list[Mode]) -> np.ndarray:
    """Spectral coefficients of each mode on ``grid`` (shape ``(m, dim, ...)``)."""
    for md in modes:
        if any(2 * abs(v) >= n for v, n in zip(md.k, grid.n)):
            raise ValueError(f"mode {md.k} not resolved on grid {grid.n}")
    return np.stack([grid.fft(md.values(grid.mesh())[0]) for md in modes])


def make_truncation(grid: PeriodicGrid, modes: list[Mode]):
    """L2-orthogonal projector onto ``span{phi_i}`` acting on velocity coefficients."""
    hats = mode_hats(grid, modes)

    def project(uh: np.ndarray) -> np.ndarray:
        coef = [grid.spectral_inner(uh, ph) for ph in hats]
        return np.tensordot(np.asarray(coef), hats, axes=(0, 0))

    return project


def amplitudes(grid: PeriodicGrid, uh: np.ndarray, modes: list[Mode]) -> np.ndarray:
    hats = mode_hats(grid, modes)
    return np.array([grid.spectral_inner(uh, ph) for ph in hats])


@dataclass
class GalerkinSystem:
    m: int
    grid: PeriodicGrid
    coefficients: LeslieCoefficients
    modes: list[Mode]
    g: np.ndarray
    rho_hat: np.ndarray
    d_hat: np.ndarray
    t: float = 0.0
    reading: str = "eqL2"
    cap: int = DEFAULT_CAP
    M1: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.m > self.cap:
            raise ValueError(f"m={self.m} exceeds the cap {self.cap}")
        if self.reading not in READINGS:
            raise ValueError(f"reading must be one of {READINGS}")
        if len(self.modes) != self.m:
            raise ValueError("mode list does not have m entries")

    @classmethod
    def from_state(cls, state, c: LeslieCoefficients, m: int, reading: str = "eqL2",
                   cap: int = DEFAULT_CAP) -> "GalerkinSystem":
        modes = basis(state.grid.dim, m)
        g = amplitudes(state.grid, state.u_hat, modes)
        return cls(m, state.grid, c, modes, g, state.rho_hat.copy(), state.d_hat.copy(), state.t,
                   reading, cap, state.M1)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([md.eigenvalue for md in self.modes])

    def _basis_padded(self):
        if "phi" not in self._cache:
            M = self.grid.padded_shape
            coords = []
            for ax, n in enumerate(M):
                s = [1] * len(M)
                s[ax] = n
                coords.append((np.arange(n) / n).reshape(s))
            vals = [md.values(coords) for md in self.modes]
            self._cache["phi"] = np.stack([v for v, _ in vals])
            self._cache["gphi"] = np.stack([gr for _, gr in vals])
        return self._cache["phi"], self._cache["gphi"]


def assemble(s: GalerkinSystem, g: Optional[np.ndarray] = None, rho_hat=None, d_hat=None):
    """Return ``(A, B, C, D)``; ``B[i, k, j] = int rho (phi_i . grad phi_k) . phi_j``."""
    grid = s.grid
    g = s.g if g is None else g
    rho_hat = s.rho_hat if rho_hat is None else rho_hat
    d_hat = s.d_hat if d_hat is None else d_hat
    phi, gphi = s._basis_padded()
    rho = grid.to_padded(rho_hat)
    Amat = np.einsum("iax,jax->ij", _flat(phi), _flat(phi) * _flat1(rho)) / _npts(rho)
    conv = np.einsum("ib...,kab...->ika...", phi, gphi)
    Bmat = np.einsum("ikax,jax->ikj", _flat(conv, 3), _flat(phi) * _flat1(rho)) / _npts(rho)
    Cmat = np.einsum("iabx,jabx->ij", _flat(gphi, 3), _flat(gphi, 3)) / _npts(rho)
    Dvec = _forcing(s, g, d_hat, phi, gphi)
    return Amat, Bmat, Cmat, Dvec


def _flat(a, lead=2):
    return a.reshape(a.shape[:lead] + (-1,))


def _flat1(a):
    return a.reshape(1, 1, -1)


def _npts(a):
    return a.size


def _director_pieces(s: GalerkinSystem, g, d_hat, phi, gphi):
    grid, c = s.grid, s.coefficients
    u = np.tensordot(g, phi, axes=(0, 0))
    G = np.tensordot(g, gphi, axes=(0, 0))
    A = 0.5 * (G + np.swapaxes(G, 0, 1))
    Om = 0.5 * (G - np.swapaxes(G, 0, 1))
    d = grid.to_padded(d_hat)
    gd = grid.to_padded(grid.grad_hat(d_hat))
    f_hat = grid.from_padded(penalty_force_phys(d, c.eta))
    h_hat = grid.lap_hat(d_hat) - f_hat
    h = grid.to_padded(h_hat)
    return u, A, Om, d, gd, h, h_hat


def _forcing(s: GalerkinSystem, g, d_hat, phi, gphi):
    c = s.coefficients
    u, A, Om, d, gd, h, _ = _director_pieces(s, g, d_hat, phi, gphi)
    E = ericksen_phys(gd)
    N = corotational_from_director(c, A, h, d)
    if s.reading == "eqL2":
        sig = leslie_stress_phys(c.with_(mu4=0.0), A, N, d)
        T = E - sig
    else:
        N = N + 2.0 * apply_tensor(Om, d)
        T = E + leslie_stress_phys(c, A, N, d)
    return np.einsum("abx,jabx->j", _flat(T, 2), _flat(gphi, 3)) / T[0, 0].size


def _rhs(s: GalerkinSystem, g, rho_hat, d_hat):
    grid, c = s.grid, s.coefficients
    Amat, Bmat, Cmat, Dvec = assemble(s, g, rho_hat, d_hat)
    visc = 0.5 * c.mu4 if s.reading == "eqL2" else 1.0
    force = -np.einsum("ikj,i,k->j", Bmat, g, g) - visc * Cmat @ g + Dvec
    try:
        w = np.linalg.eigvalsh(Amat)
        if w.min() <= 0:
            raise SingularMassMatrix("mass matrix not positive definite")
        gdot = np.linalg.solve(Amat, force)
    except np.linalg.LinAlgError as exc:
        raise SingularMassMatrix(str(exc)) from exc
    phi, gphi = s._basis_padded()
    u, A, Om, d, gd, h, h_hat = _director_pieces(s, g, d_hat, phi, gphi)
    grho = grid.to_padded(grid.grad_hat(rho_hat))
    rho_t = -grid.from_padded(np.sum(u * grho, axis=0))
    lam1, lam2 = c.lambda1, c.lambda2
    expl = -np.einsum("j...,aj...->a...", u, gd) + apply_tensor(Om, d) - (lam2 / lam1) * apply_tensor(A, d)
    d_t = grid.from_padded(expl) - h_hat / lam1
    return gdot, rho_t, d_t


def oracle_energy(s: GalerkinSystem) -> float:
    grid = s.grid
    phi, _ = s._basis_padded()
    u = np.tensordot(s.g, phi, axes=(0, 0))
    rho = grid.to_padded(s.rho_hat)
    d = grid.to_padded(s.d_hat)
    gdh = grid.grad_hat(s.d_hat)
    return (
        0.5 * float(grid.padded_mean(rho * np.sum(u * u, axis=0)))
        + 0.5 * grid.spectral_inner(gdh, gdh)
        + float(grid.padded_mean(penalty_density_phys(d, s.coefficients.eta)))
    )


def integrate_ode(s: GalerkinSystem, dt: float, T: float, sample_every: int = 1):
    """RK4 in time; returns ``(times, amplitudes, energies, final_system)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    nsteps = int(math.ceil((T - s.t) / dt - 1e-9)) if T > s.t else 0
    g, r, d, t = s.g.copy(), s.rho_hat.copy(), s.d_hat.copy(), s.t
    times, gs, es = [t], [g.copy()], [oracle_energy(s)]
    for k in range(1, nsteps + 1):
        h = min(dt, T - t) if k == nsteps else dt
        k1 = _rhs(s, g, r, d)
        k2 = _rhs(s, g + 0.5 * h * k1[0], r + 0.5 * h * k1[1], d + 0.5 * h * k1[2])
        k3 = _rhs(s, g + 0.5 * h * k2[0], r + 0.5 * h * k2[1], d + 0.5 * h * k2[2])
        k4 = _rhs(s, g + h * k3[0], r + h * k3[1], d + h * k3[2])
        g = g + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        r = r + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        d = d + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        t = t + h
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(d)) and np.all(np.isfinite(r))):
            raise NonFiniteAmplitudes(f"non-finite amplitudes at t={t:.6g}")
        if k % sample_every == 0 or k == nsteps:
            cur = replace(s, g=g, rho_hat=r, d_hat=d, t=t)
            cur._cache = s._cache
            times.append(t)
            gs.append(g.copy())
            es.append(oracle_energy(cur))
    final = replace(s, g=g, rho_hat=r, d_hat=d, t=t)
    final._cache = s._cache
    return np.array(times), np.array(gs), np.array(es), final


@dataclass(frozen=True)
class DiscrepancyReport:
    times: np.ndarray
    oracle: np.ndarray
    solver: np.ndarray

    @property
    def per_mode_max(self) -> np.ndarray:
        return np.max(np.abs(self.oracle - self.solver), axis=0)

    @property
    def per_mode_l2(self) -> np.ndarray:
        dif = self.oracle - self.solver
        if len(self.times) < 2:
            return np.abs(dif[0])
        return np.sqrt(np.trapezoid(dif**2, self.times, axis=0))

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.per_mode_max))

    def lines(self) -> list[str]:
        out = [f"max_discrepancy={self.max_discrepancy!r}"]
        for i, (mx, l2) in enumerate(zip(self.per_mode_max, self.per_mode_l2)):
            out.append(f"mode[{i}] max={mx!r} l2={l2!r}")
        return out


def compare(state, c: LeslieCoefficients, m: int, dt: float, T: float, reading: str = "eqL2",
            sample_every: int = 10, scheme: str = "IMEX2", substeps: int = 1) -> DiscrepancyReport:
    """Integrate the oracle and the mode-truncated stepper from ``state`` and compare amplitudes.

    The stepper takes ``substeps`` steps per oracle step, since its second-order
    error dominates the comparison otherwise.
    """
    from .solver import Stepper, StepperConfig, State

    sysm = GalerkinSystem.from_state(state, c, m, reading)
    times, go, _, _ = integrate_ode(sysm, dt, T, sample_every)
    grid = state.grid
    proj = make_truncation(grid, sysm.modes)
    s0 = State(grid, state.rho_hat, proj(state.u_hat), state.d_hat, state.t, state.M1, state.M2)
    h = dt / substeps
    cfg = StepperConfig(dt=h, scheme=scheme, truncation=proj, force=True, cfl_safety=1.0)
    st = Stepper(grid, c, cfg, state.M1, state.M2)
    gs = [amplitudes(grid, s0.u_hat, sysm.modes)]
    s = s0
    for t_next in times[1:]:
        while s.t < t_next - 1e-12 * max(1.0, abs(t_next)):
            s = st.step(s, min(h, t_next - s.t))
        gs.append(amplitudes(grid, s.u_hat, sysm.modes))
    return DiscrepancyReport(times, go, np.array(gs))
