"""Energy law, higher-order norms, weak-form defects and related observables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .coefficients import LeslieCoefficients
from .constitutive import (
    apply_tensor,
    corotational_from_director,
    director_field_h,
    energies,
    ericksen_phys,
    leslie_stress_phys,
    split_gradient,
    velocity_gradient_hat,
)
from .grid import Field, GridMismatchError, PeriodicGrid, sobolev_norm

CSV_COLUMNS = (
    "t", "E_kin", "E_el", "E_pen", "E_tot", "diss_rhs", "e_resid", "phi2", "h1_u", "h1_d",
    "l2_lapd_f", "linf_d", "mass", "rho_min", "rho_max", "div_u_inf",
)


@dataclass(frozen=True)
class EnergyReport:
    t: float
    kinetic: float
    elastic: float
    penalty: float
    total: float
    dissipation_rhs: float
    energy_residual: float
    phi2: float
    sobolev: dict = field(default_factory=dict)
    mass: float = 0.0
    rho_min: float = 0.0
    rho_max: float = 0.0
    div_u_inf: float = 0.0

    def csv_row(self) -> tuple[float, ...]:
        s = self.sobolev
        return (
            self.t, self.kinetic, self.elastic, self.penalty, self.total, self.dissipation_rhs,
            self.energy_residual, self.phi2, s["h1_u"], s["h1_d"], s["l2_lapd_f"], s["linf_d"],
            self.mass, self.rho_min, self.rho_max, self.div_u_inf,
        )


# ---------------------------------------------------------------- helpers
def _hats(s):
    return s.rho_hat, s.u_hat, s.d_hat


def _avg(s, s_next):
    return tuple(0.5 * (a + b) for a, b in zip(_hats(s), _hats(s_next)))


def total_energy(s, c: LeslieCoefficients) -> tuple[float, float, float, float]:
    g = s.grid
    k, e, p = energies(Field(g, s.rho_hat, True), Field(g, s.u_hat, True), Field(g, s.d_hat, True), c.eta)
    return k, e, p, k + e + p


def dissipation_terms(grid: PeriodicGrid, c: LeslieCoefficients, u_hat, d_hat) -> dict:
    """The four sign-definite pieces of the energy law at one state.

    ``-mu1 int (d^T A d)^2``, ``-mu4 int |A|^2``, ``(1/lambda1) ||h||^2`` and
    ``-(mu5 + mu6 + lambda2^2/lambda1) ||A d||^2``.
    """
    A_p, _ = split_gradient(grid.to_padded(velocity_gradient_hat(grid, u_hat)))
    d_p = grid.to_padded(d_hat)
    Ad = apply_tensor(A_p, d_p)
    dAd = np.sum(d_p * Ad, axis=0)
    hh = director_field_h(grid, d_hat, c.eta)
    lam1, lam2 = c.lambda1, c.lambda2
    return {
        "mu1": -c.mu1 * float(grid.padded_mean(dAd**2)),
        "mu4": -c.mu4 * float(grid.padded_mean(np.sum(A_p**2, axis=(0, 1)))),
        "h": grid.spectral_inner(hh, hh) / lam1,
        "Ad": -(c.mu5 + c.mu6 + lam2**2 / lam1) * float(grid.padded_mean(np.sum(Ad**2, axis=0))),
    }


def dissipation_rhs(grid, c, u_hat, d_hat) -> float:
    return float(sum(dissipation_terms(grid, c, u_hat, d_hat).values()))


def energy_balance(s, s_next, c: LeslieCoefficients, dt: float,
                   totals: Optional[tuple[float, float]] = None) -> tuple[float, float, float]:
    """Finite-difference energy rate against the dissipation at the averaged state.

    ``totals`` may carry already computed total energies of ``(s, s_next)``.
    """
    if not s.grid.same_as(s_next.grid):
        raise GridMismatchError("states on different grids")
    e0, e1 = totals if totals is not None else (total_energy(s, c)[3], total_energy(s_next, c)[3])
    lhs = (e1 - e0) / dt
    _, ua, da = _avg(s, s_next)
    rhs = dissipation_rhs(s.grid, c, ua, da)
    return lhs, rhs, lhs - rhs


def phi_squared(s, c: LeslieCoefficients, hh=None) -> tuple[float, tuple[float, float, float]]:
    """``||sqrt(rho) grad u||^2 + ||lap d - f||^2`` and the three companion integrands.

    The companions are ``||lap u||^2``, ``||grad(lap d - f)||^2`` and
    ``||d^T (grad A) d||^2``.
    """
    g = s.grid
    Gh = velocity_gradient_hat(g, s.u_hat)
    rho_p = g.to_padded(s.rho_hat)
    G_p = g.to_padded(Gh)
    grad_part = float(g.padded_mean(rho_p * np.sum(G_p**2, axis=(0, 1))))
    if hh is None:
        hh = director_field_h(g, s.d_hat, c.eta)
    h2 = g.spectral_inner(hh, hh)
    lap_u = g.lap_hat(s.u_hat)
    gh = g.grad_hat(hh)
    A_h, _ = split_gradient(Gh)
    gA_p = g.to_padded(g.grad_hat(A_h))  # (dim, dim, dim_l, ...)
    d_p = g.to_padded(s.d_hat)
    dim = g.dim
    dd = d_p[:dim]
    dgAd = np.einsum("i...,ijl...,j...->l...", dd, gA_p, dd)
    comp = (
        g.spectral_inner(lap_u, lap_u),
        g.spectral_inner(gh, gh),
        float(g.padded_mean(np.sum(dgAd**2, axis=0))),
    )
    return grad_part + h2, comp


def norm_ratios(f: Field) -> dict:
    """Observed ratios behind the interpolation inequalities (no constants asserted)."""
    g = f.grid
    fh = f.hat()
    l2 = g.spectral_inner(fh, fh)
    gr = g.spectral_inner(g.grad_hat(fh), g.grad_hat(fh))
    lap = g.spectral_inner(g.lap_hat(fh), g.lap_hat(fh))
    fp = g.to_padded(fh)
    l4 = float(g.padded_mean(np.sum(fp * fp, axis=0) ** 2)) if f.rank else float(g.padded_mean(fp**4))
    if g.dim == 2:
        gn = l4 / (l2 * (gr + l2)) if l2 > 0 else 0.0
    else:
        gn = l4 / (math.sqrt(l2) * (gr + l2) ** 1.5) if l2 > 0 else 0.0
    linf = float(np.max(np.abs(f.physical())))
    denom = (gr * lap) ** 0.25
    return {"gagliardo_nirenberg_l4": gn, "agmon_linf": linf / denom if denom > 0 else math.inf}


def make_report(s, c: LeslieCoefficients, prev=None, dt: Optional[float] = None,
                prev_total: Optional[float] = None) -> EnergyReport:
    """Diagnostics row at ``s``; the energy residual needs the preceding state ``prev``."""
    g = s.grid
    kin, el, pen, tot = total_energy(s, c)
    if prev is not None and dt:
        e0 = total_energy(prev, c)[3] if prev_total is None else prev_total
        _, rhs, resid = energy_balance(prev, s, c, dt, (e0, tot))
    else:
        rhs, resid = dissipation_rhs(g, c, s.u_hat, s.d_hat), math.nan
    hh = director_field_h(g, s.d_hat, c.eta)
    phi2, _ = phi_squared(s, c, hh)
    u, d = Field(g, s.u_hat, True), Field(g, s.d_hat, True)
    d_phys = g.ifft(s.d_hat)
    rho = g.ifft(s.rho_hat)
    sob = {
        "h1_u": sobolev_norm(u, 1),
        "h1_d": sobolev_norm(d, 1),
        "l2_lapd_f": math.sqrt(max(g.spectral_inner(hh, hh), 0.0)),
        "grad_lapd_f": math.sqrt(max(g.spectral_inner(g.grad_hat(hh), g.grad_hat(hh)), 0.0)),
        "l2_lap_u": math.sqrt(max(g.spectral_inner(g.lap_hat(s.u_hat), g.lap_hat(s.u_hat)), 0.0)),
        "linf_d": float(np.max(np.sqrt(np.sum(d_phys**2, axis=0)))),
    }
    return EnergyReport(
        t=s.t, kinetic=kin, elastic=el, penalty=pen, total=tot, dissipation_rhs=rhs,
        energy_residual=resid, phi2=phi2, sobolev=sob,
        mass=float(s.rho_hat[(0,) * g.dim].real), rho_min=float(rho.min()), rho_max=float(rho.max()),
        div_u_inf=float(np.max(np.abs(g.ifft(g.div_hat(s.u_hat))))),
    )


# ------------------------------------------------------- cancellation identities
def cancellation_check(u: Field, d: Field, c: LeslieCoefficients) -> dict:
    """Paired integrals whose sums vanish under the coefficient relations.

    ``N`` is taken from the director equation.  The divergence-form viscous
    integrals are split by integration by parts, so the residuals test the
    discrete product rule as well as the algebra.  Keys ``r32_61``,
    ``r33_51``, ``r35_52`` and ``antisym`` should vanish; ``s36_64`` should be
    non-positive.
    """
    g = d.grid
    if not u.grid.same_as(g):
        raise GridMismatchError("u and d on different grids")
    dim = g.dim
    uh, dh = u.hat(), d.hat()
    Gh = velocity_gradient_hat(g, uh)
    A_h, Om_h = split_gradient(Gh)
    hh = director_field_h(g, dh, c.eta)
    mean = g.padded_mean
    P = g.to_padded
    A, dp, hp = P(A_h), P(dh), P(hh)
    lapA, lapOm = P(g.lap_hat(A_h)), P(g.lap_hat(Om_h))
    lap_u = P(g.lap_hat(uh))
    N = corotational_from_director(c, A, hp, dp)
    Ad = apply_tensor(A, dp)
    dd, Nd, Add = dp[:dim], N[:dim], Ad[:dim]
    outer = lambda a, b: np.einsum("i...,j...->ij...", a, b)  # noqa: E731
    contract = lambda T, S: float(mean(np.sum(T * S, axis=(0, 1))))  # noqa: E731
    lam1, lam2 = c.lambda1, c.lambda2

    def div_form(T_p):
        # -int d_j(T_ij) lap u_i with the divergence taken spectrally
        return -float(mean(np.sum(P(g.div_hat(g.from_padded(T_p))) * lap_u, axis=0)))

    I32 = (c.mu2 + c.mu3) * contract(outer(Nd, dd), lapA)
    orig23 = c.mu2 * div_form(outer(Nd, dd)) + c.mu3 * div_form(outer(dd, Nd))
    I33 = orig23 - I32

    Ad_h = g.from_padded(Ad)
    lap_Ad = P(g.lap_hat(Ad_h))
    gA = P(g.grad_hat(A_h))  # [i, k, l]
    gd = P(g.grad_hat(dh))  # [a, l]
    I62 = 2.0 * lam2 * float(mean(np.einsum("i...,ikl...,kl...->...", Nd, gA, gd[:dim])))
    I63 = lam2 * float(mean(np.einsum("i...,ik...,k...->...", Nd, A, P(g.lap_hat(dh))[:dim])))
    I61 = lam2 * float(mean(np.sum(N * lap_Ad, axis=0))) - I62 - I63

    lapOm_d = apply_tensor(lapOm, dp)
    I51 = -lam1 * float(mean(np.sum(N * lapOm_d, axis=0)))
    I52 = -lam2 * float(mean(np.sum(Ad * lapOm_d, axis=0)))
    orig56 = c.mu5 * div_form(outer(Add, dd)) + c.mu6 * div_form(outer(dd, Add))
    I35 = orig56 - (c.mu5 + c.mu6) * contract(outer(Add, dd), lapA)

    dAd = np.sum(dp * Ad, axis=0)
    antisym = contract(dAd * outer(dd, dd), lapOm)
    dgA = np.einsum("ikl...,k...->il...", gA, dd)
    s36_64 = -(c.mu5 + c.mu6 + lam2**2 / lam1) * float(mean(np.sum(dgA**2, axis=(0, 1))))
    return {
        "r32_61": I32 + I61,
        "r33_51": I33 + I51,
        "r35_52": I35 + I52,
        "antisym": antisym,
        "s36_64": s36_64,
        "terms": {"I32": I32, "I33": I33, "I35": I35, "I51": I51, "I52": I52, "I61": I61},
    }


# ------------------------------------------------------------- weak residual
@dataclass(frozen=True)
class TimePolynomial:
    """``psi(t)`` given by coefficients in ascending powers; ``psi(T) = 0`` is checked by the caller."""

    coef: tuple[float, ...]

    @classmethod
    def vanishing_at(cls, T: float, degree: int = 2) -> "TimePolynomial":
        if T <= 0:
            return cls((0.0,))
        p = np.polynomial.Polynomial([1.0, -1.0 / T]) ** degree
        return cls(tuple(p.coef))

    def __call__(self, t):
        return np.polynomial.Polynomial(self.coef)(t)

    def deriv(self, t):
        return np.polynomial.Polynomial(self.coef).deriv()(t)


def _director_test(phi_h: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    out = np.zeros((3,) + grid.spectral_shape, dtype=complex)
    out[: grid.dim] = phi_h
    out[2] = phi_h[0]
    return out


def weak_residual(trajectory: Sequence, phi: Field, psi: TimePolynomial, c: LeslieCoefficients,
                  scalar_test: Optional[Field] = None, director_test: Optional[Field] = None):
    """Defects of the mass, momentum and director integral identities.

    ``trajectory`` is a sequence of states at uniform spacing, ``phi`` a
    divergence-free vector test field.  The scalar and director tests default
    to the first component of ``phi`` and ``(phi_1, phi_2[, phi_3], phi_1)``.
    Time integrals use the trapezoidal rule.
    """
    traj = list(trajectory)
    if not traj:
        raise ValueError("empty trajectory")
    T = traj[-1].t - traj[0].t
    s0 = traj[0]
    g = s0.grid
    dim = g.dim
    if abs(float(psi(traj[-1].t))) > 1e-12 * max(1.0, max(abs(v) for v in psi.coef)):
        raise ValueError("psi must vanish at the final time")
    if T == 0:
        return 0.0, 0.0, 0.0
    if len(traj) < 8:
        raise ValueError("weak residual needs at least 8 trajectory samples")
    times = np.array([s.t for s in traj])
    steps = np.diff(times)
    if np.max(np.abs(steps - steps.mean())) > 1e-9 * steps.mean():
        raise ValueError("trajectory samples must be uniformly spaced")

    phi_h = phi.hat()
    if phi_h.shape[0] != dim:
        raise ValueError("momentum test field needs dim components")
    sc_h = scalar_test.hat() if scalar_test is not None else phi_h[0]
    dt_h = director_test.hat() if director_test is not None else _director_test(phi_h, g)
    P = g.to_padded
    phi_p, gphi_p = P(phi_h), P(g.grad_hat(phi_h))
    sc_p, gsc_p = P(sc_h), P(g.grad_hat(sc_h))
    dtest_p = P(dt_h)
    lam1, lam2 = c.lambda1, c.lambda2

    mass_ins, mom_ins, dir_ins = [], [], []
    for s in traj:
        pt, pd = float(psi(s.t)), float(psi.deriv(s.t))
        rho, u = P(s.rho_hat), P(s.u_hat)
        Gh = velocity_gradient_hat(g, s.u_hat)
        G = P(Gh)
        A, Om = split_gradient(G)
        d = P(s.d_hat)
        gd = P(g.grad_hat(s.d_hat))
        h = P(director_field_h(g, s.d_hat, c.eta))
        m = g.padded_mean
        mass_ins.append(
            -float(m(rho * sc_p)) * pd - float(m(rho * np.sum(u * gsc_p, axis=0))) * pt
        )
        N = corotational_from_director(c, A, h, d)
        T_stress = ericksen_phys(gd) - leslie_stress_phys(c, A, N, d)
        conv = rho * np.einsum("i...,j...,ij...->...", u, u, gphi_p)
        mom_ins.append(
            float(m(rho * np.sum(u * phi_p, axis=0))) * pd
            + float(m(conv + np.sum(T_stress * gphi_p, axis=(0, 1)))) * pt
        )
        adv = np.einsum("j...,aj...->a...", u, gd)
        drive = -adv + apply_tensor(Om, d) - (lam2 / lam1) * apply_tensor(A, d) - h / lam1
        dir_ins.append(
            float(m(np.sum(d * dtest_p, axis=0))) * pd + float(m(np.sum(drive * dtest_p, axis=0))) * pt
        )

    def trap(vals):
        return float(np.trapezoid(np.asarray(vals), times))

    psi0 = float(psi(s0.t))
    rho0, u0, d0 = P(s0.rho_hat), P(s0.u_hat), P(s0.d_hat)
    m = g.padded_mean
    mass = -float(m(rho0 * sc_p)) * psi0 + trap(mass_ins)
    mom = float(m(rho0 * np.sum(u0 * phi_p, axis=0))) * psi0 + trap(mom_ins)
    dirc = float(m(np.sum(d0 * dtest_p, axis=0))) * psi0 + trap(dir_ins)
    return mass, mom, dirc


# ------------------------------------------------------------ weak-strong
def weak_strong_distance(s, s_bar) -> float:
    """``1/2 int |rho - rho_bar|^2 + rho_bar |u - u_bar|^2 + |grad d - grad d_bar|^2``.

    The coarser state is lifted spectrally to the finer grid.  ``s_bar``
    supplies the density weight, so the functional is not symmetric.
    """
    g1, g2 = s.grid, s_bar.grid
    if g1.dim != g2.dim:
        raise GridMismatchError("states of different dimension")
    if g1.same_as(g2):
        g = g1
    else:
        g = g1 if g1.size >= g2.size else g2
        s = s.resample(g) if not g1.same_as(g) else s
        s_bar = s_bar.resample(g) if not g2.same_as(g) else s_bar
    dr = s.rho_hat - s_bar.rho_hat
    du = s.u_hat - s_bar.u_hat
    dgd = g.grad_hat(s.d_hat - s_bar.d_hat)
    rb = g.to_padded(s_bar.rho_hat)
    du_p = g.to_padded(du)
    return 0.5 * (
        g.spectral_inner(dr, dr)
        + float(g.padded_mean(rb * np.sum(du_p**2, axis=0)))
        + g.spectral_inner(dgd, dgd)
    )


# ------------------------------------------------------------ max principle
def max_principle_monitor(trajectory: Iterable, slack: float = 1e-3):
    """Running max of ``||d||_inf`` and whether it ever exceeds ``max(1, ||d0||_inf) + slack``.

    Accepts states or :class:`EnergyReport` rows.  The grid max is a lower
    bound of the true supremum.
    """
    running, cur, bound = [], -math.inf, None
    for item in trajectory:
        if isinstance(item, EnergyReport):
            v = item.sobolev["linf_d"]
        else:
            dp = item.grid.ifft(item.d_hat)
            v = float(np.max(np.sqrt(np.sum(dp**2, axis=0))))
        if bound is None:
            bound = max(1.0, v) + slack
        cur = max(cur, v)
        running.append(cur)
    violated = bool(running) and running[-1] > bound
    return running, violated
