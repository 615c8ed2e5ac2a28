"""Pointwise constitutive relations of the nematic model.

The array kernels (``*_phys``) act on physical samples, normally taken on the
padded grid, and are shared with the stepper.  The :class:`Field` level
wrappers pad, evaluate and truncate once.

Conventions
-----------
``(grad u)[i, j] = d_j u_i``; ``A`` and ``Omega`` are its symmetric and
antisymmetric parts.  The director keeps three components in 2D and the
2x2 ``A``/``Omega`` act on its first two, so ``(A d)_3 = (Omega d)_3 = 0``.
``N = d_t + (u . grad) d - Omega d``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import LeslieCoefficients
from .grid import Field, GridMismatchError, PeriodicGrid

CONVENTIONS = ("ij", "ji")


@dataclass(frozen=True)
class KinematicTensors:
    A: Field
    Omega: Field


@dataclass(frozen=True)
class StressFields:
    ericksen: Field
    leslie: Field
    N: Field


# ----------------------------------------------------------------- kernels
def velocity_gradient_hat(grid: PeriodicGrid, uh: np.ndarray, convention: str = "ij") -> np.ndarray:
    G = grid.grad_hat(uh)
    if convention == "ji":
        G = np.swapaxes(G, 0, 1)
    elif convention != "ij":
        raise ValueError(f"unknown gradient convention {convention!r}")
    return G


def split_gradient(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Gt = np.swapaxes(G, 0, 1)
    return 0.5 * (G + Gt), 0.5 * (G - Gt)


def apply_tensor(T: np.ndarray, d: np.ndarray) -> np.ndarray:
    """``(T d)_i = T_ik d_k`` with a dim x dim tensor acting on a 3-vector."""
    dim = T.shape[0]
    out = np.zeros_like(d)
    out[:dim] = np.einsum("ik...,k...->i...", T, d[:dim])
    return out


def penalty_force_phys(d: np.ndarray, eta: float) -> np.ndarray:
    return (np.sum(d * d, axis=0) - 1.0) * d / eta**2


def penalty_density_phys(d: np.ndarray, eta: float) -> np.ndarray:
    return (np.sum(d * d, axis=0) - 1.0) ** 2 / (4.0 * eta**2)


def ericksen_phys(gd: np.ndarray) -> np.ndarray:
    """``E_ij = d_i d . d_j d`` from ``gd[a, j] = d_j d_a``."""
    return np.einsum("ai...,aj...->ij...", gd, gd)


def leslie_stress_phys(c: LeslieCoefficients, A: np.ndarray, N: np.ndarray, d: np.ndarray) -> np.ndarray:
    dim = A.shape[0]
    dd = d[:dim]
    Ad = apply_tensor(A, d)[:dim]
    Nd = N[:dim]
    dAd = np.einsum("k...,k...->...", dd, Ad)
    outer = lambda a, b: np.einsum("i...,j...->ij...", a, b)  # noqa: E731
    sigma = c.mu4 * A
    if c.mu1:
        sigma = sigma + c.mu1 * dAd * outer(dd, dd)
    if c.mu2:
        sigma = sigma + c.mu2 * outer(Nd, dd)
    if c.mu3:
        sigma = sigma + c.mu3 * outer(dd, Nd)
    if c.mu5:
        sigma = sigma + c.mu5 * outer(Ad, dd)
    if c.mu6:
        sigma = sigma + c.mu6 * outer(dd, Ad)
    return sigma


def corotational_from_director(c: LeslieCoefficients, A: np.ndarray, h: np.ndarray, d: np.ndarray) -> np.ndarray:
    """``N`` implied by the director equation: ``-(lambda2/lambda1) A d - h/lambda1``."""
    lam1 = c.lambda1
    if lam1 == 0:
        raise ZeroDivisionError("lambda1 = 0")
    return -(c.lambda2 / lam1) * apply_tensor(A, d) - h / lam1


def director_field_h(grid: PeriodicGrid, dh: np.ndarray, eta: float) -> np.ndarray:
    """Spectral ``h = lap d - f(d)``, the negative variational derivative of the director energy."""
    f = grid.from_padded(penalty_force_phys(grid.to_padded(dh), eta))
    return grid.lap_hat(dh) - f


# ------------------------------------------------------------ field level
def _wrap(like: Field, hat: np.ndarray) -> Field:
    return like._like(hat)


def kinematics(u: Field, convention: str = "ij") -> KinematicTensors:
    G = velocity_gradient_hat(u.grid, u.hat(), convention)
    A, Om = split_gradient(G)
    return KinematicTensors(_wrap(u, A), _wrap(u, Om))


def penalty_force(d: Field, eta: float) -> Field:
    if not eta > 0:
        raise ValueError("eta must be positive")
    g = d.grid
    return _wrap(d, g.from_padded(penalty_force_phys(g.to_padded(d.hat()), eta)))


def corotational_rate(d_t: Field, u: Field, d: Field, Omega: Field) -> Field:
    g = d.grid
    for f in (d_t, u, Omega):
        if not f.grid.same_as(g):
            raise GridMismatchError("corotational_rate inputs on different grids")
    dh = d.hat()
    up = g.to_padded(u.hat())
    gdp = g.to_padded(g.grad_hat(dh))
    adv = np.einsum("j...,aj...->a...", up, gdp)
    rot = apply_tensor(g.to_padded(Omega.hat()), g.to_padded(dh))
    return _wrap(d, d_t.hat() + g.from_padded(adv - rot))


def leslie_stress(c: LeslieCoefficients, A: Field, N: Field, d: Field) -> Field:
    g = d.grid
    sig = leslie_stress_phys(c, g.to_padded(A.hat()), g.to_padded(N.hat()), g.to_padded(d.hat()))
    return _wrap(A, g.from_padded(sig))


def ericksen_stress(d: Field) -> Field:
    g = d.grid
    return _wrap(d, g.from_padded(ericksen_phys(g.to_padded(g.grad_hat(d.hat())))))


def ericksen_force(d: Field) -> Field:
    """``-div(grad d (x) grad d)`` with divergence on the second index."""
    E = ericksen_stress(d)
    return _wrap(d, -d.grid.div_hat(E.hat()))


def energies(rho: Field, u: Field, d: Field, eta: float) -> tuple[float, float, float]:
    """Kinetic, elastic and penalty energy over the unit torus."""
    g = d.grid
    for f in (rho, u):
        if not f.grid.same_as(g):
            raise GridMismatchError("energies inputs on different grids")
    up = g.to_padded(u.hat())
    rp = g.to_padded(rho.hat())
    kinetic = 0.5 * float(g.padded_mean(rp * np.sum(up * up, axis=0)))
    dh = d.hat()
    elastic = 0.5 * g.spectral_inner(g.grad_hat(dh), g.grad_hat(dh))
    penalty = float(g.padded_mean(penalty_density_phys(g.to_padded(dh), eta)))
    return kinetic, elastic, penalty


def stresses(c: LeslieCoefficients, u: Field, d: Field, convention: str = "ij") -> StressFields:
    """Ericksen and Leslie stresses with ``N`` taken from the director equation."""
    g = d.grid
    kin = kinematics(u, convention)
    dh = d.hat()
    h = director_field_h(g, dh, c.eta)
    Ap, dp = g.to_padded(kin.A.hat()), g.to_padded(dh)
    Np = corotational_from_director(c, Ap, g.to_padded(h), dp)
    sig = leslie_stress_phys(c, Ap, Np, dp)
    return StressFields(
        ericksen=_wrap(d, g.from_padded(ericksen_phys(g.to_padded(g.grad_hat(dh))))),
        leslie=_wrap(d, g.from_padded(sig)),
        N=_wrap(d, g.from_padded(Np)),
    )
