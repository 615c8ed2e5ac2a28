"""Leslie viscosity coefficients and their thermodynamic admissibility."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

PARODI_TOL = 1e-12


class Regime(str, enum.Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    NEITHER = "Neither"


@dataclass(frozen=True)
class LeslieCoefficients:
    """Viscosities ``mu1..mu6`` and penalty scale ``eta``.

    ``lambda1`` and ``lambda2`` are derived on access and never stored.
    """

    mu1: float = 0.0
    mu2: float = 0.0
    mu3: float = 0.0
    mu4: float = 1.0
    mu5: float = 0.0
    mu6: float = 0.0
    eta: float = 0.5

    def __post_init__(self):
        for name in ("mu1", "mu2", "mu3", "mu4", "mu5", "mu6", "eta"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    @classmethod
    def from_sequence(cls, mu, eta: float = 0.5) -> "LeslieCoefficients":
        mu = tuple(mu)
        if len(mu) != 6:
            raise ValueError("expected six viscosities")
        return cls(*mu, eta=eta)

    @property
    def mu(self) -> tuple[float, ...]:
        return (self.mu1, self.mu2, self.mu3, self.mu4, self.mu5, self.mu6)

    @property
    def lambda1(self) -> float:
        return self.mu2 - self.mu3

    @property
    def lambda2(self) -> float:
        return self.mu5 - self.mu6

    def with_(self, **kw) -> "LeslieCoefficients":
        d = dict(zip(("mu1", "mu2", "mu3", "mu4", "mu5", "mu6"), self.mu), eta=self.eta)
        d.update(kw)
        return LeslieCoefficients(**d)


@dataclass(frozen=True)
class AdmissibilityReport:
    parodi_residual: float
    parodi_ok: bool
    dissipation_ok: bool
    regime_2d: Regime
    lambda1: float
    lambda2: float
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.parodi_ok and self.dissipation_ok

    def lines(self) -> list[str]:
        return [
            f"lambda1={self.lambda1!r}",
            f"lambda2={self.lambda2!r}",
            f"parodi_residual={self.parodi_residual!r}",
            f"parodi_ok={str(self.parodi_ok).lower()}",
            f"dissipation_ok={str(self.dissipation_ok).lower()}",
            f"regime={self.regime_2d.value}",
            "violations=" + ",".join(self.violations),
        ]


def derive_lambdas(mu) -> tuple[float, float]:
    mu1, mu2, mu3, mu4, mu5, mu6 = (float(v) for v in mu)
    return mu2 - mu3, mu5 - mu6


def check_parodi(c: LeslieCoefficients, tol: float = PARODI_TOL) -> tuple[float, bool]:
    residual = (c.mu5 - c.mu6) + (c.mu2 + c.mu3)
    return residual, bool(abs(residual) <= tol)


def classify_regime(c: LeslieCoefficients) -> Regime:
    # CaseI wins the overlap mu1 = 0, lambda2 = 0
    if c.mu1 >= 0 and c.lambda2 == 0:
        return Regime.CASE_I
    if c.mu1 == 0 and c.lambda2 != 0:
        return Regime.CASE_II
    return Regime.NEITHER


def check_dissipation(c: LeslieCoefficients, parodi_tol: float = PARODI_TOL) -> AdmissibilityReport:
    """Collect every failed admissibility condition by name."""
    lam1, lam2 = c.lambda1, c.lambda2
    violations = []
    if lam1 == 0:
        violations.append("lambda1 != 0")
    elif lam1 > 0:
        violations.append("lambda1 < 0")
    if not c.mu1 >= 0:
        violations.append("mu1 >= 0")
    if not c.mu4 > 0:
        violations.append("mu4 > 0")
    if not c.mu5 + c.mu6 >= 0:
        violations.append("mu5 + mu6 >= 0")
    if lam1 < 0 and not lam2**2 / (-lam1) <= c.mu5 + c.mu6:
        violations.append("lambda2^2/(-lambda1) <= mu5 + mu6")
    residual, pok = check_parodi(c, parodi_tol)
    return AdmissibilityReport(
        parodi_residual=residual,
        parodi_ok=pok,
        dissipation_ok=not violations,
        regime_2d=classify_regime(c),
        lambda1=lam1,
        lambda2=lam2,
        violations=violations,
    )


def warn_regime(report: AdmissibilityReport, dim: int) -> None:
    if dim == 2 and report.regime_2d is Regime.NEITHER:
        warnings.warn(
            "coefficients fall in neither 2D regime (mu1>=0, lambda2=0) nor (mu1=0, lambda2!=0)",
            RuntimeWarning,
            stacklevel=2,
        )


def small_data_functional(c: LeslieCoefficients, M2: float, rho0, u0, d0) -> float:
    """Smallness measure of initial data.

    ``(M2/mu4 + 1) * int rho0 (|u0|^2 + |grad u0|^2) + ||d0||_{H1}^2 + ||lap d0 - f(d0)||^2``.
    The density enters as a weight on the velocity H1 integrand.
    """
    from .constitutive import director_field_h
    from .grid import GridMismatchError

    grid = rho0.grid
    for f in (u0, d0):
        if not f.grid.same_as(grid):
            raise GridMismatchError("initial fields live on different grids")
    if not c.mu4 > 0:
        raise ValueError("small-data functional needs mu4 > 0")
    uh = u0.hat()
    guh = grid.grad_hat(uh)
    dens = np.sum(grid.to_padded(uh) ** 2, axis=0) + np.sum(grid.to_padded(guh) ** 2, axis=(0, 1))
    rho_p = grid.to_padded(rho0.hat())
    u_part = float(grid.padded_mean(rho_p * dens))
    dh = d0.hat()
    d_part = grid.spectral_inner(dh * (1.0 + grid.kdsq), dh)
    hh = director_field_h(grid, dh, c.eta)
    h_part = grid.spectral_inner(hh, hh)
    return (M2 / c.mu4 + 1.0) * u_part + d_part + h_part
