"""Initial-data presets.

Presets compose with ``+``: ``director-wave+shear-wave`` takes the director of
the first and the velocity of the second.  Random data are drawn once on a
fixed spectral box ``|k_i| <= kmax`` and then truncated to each target grid,
so runs at different resolutions start from the same continuous fields.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .coefficients import LeslieCoefficients, small_data_functional
from .grid import Field, PeriodicGrid
from .solver import State

PRESETS = ("equilibrium", "shear-wave", "director-wave", "random-smooth", "small-data")


class PresetError(ValueError):
    pass


@dataclass(frozen=True)
class InitialSpec:
    preset: str = "equilibrium"
    rho_amplitude: float = 0.0
    shear_amplitude: float = 1.0
    director_amplitude: float = 0.5
    velocity_amplitude: float = 0.5
    decay: float = 1.0
    kmax: int = 8
    epsilon: float = 0.01


def _box_grid(dim: int, kmax: int) -> PeriodicGrid:
    return PeriodicGrid(dim, 2 * kmax + 2)


def _random_box(rng: np.random.Generator, box: PeriodicGrid, ncomp: int, decay: float) -> np.ndarray:
    """Random smooth spectral coefficients on the box grid (leading component axis)."""
    a = rng.standard_normal((ncomp,) + box.shape)
    ah = box.fft(a)
    kmag = np.sqrt(sum(np.broadcast_to(m**2, box.spectral_shape) for m in box._int_wavenumbers))
    ah *= np.exp(-decay * kmag)
    ah = box.drop_nyquist(ah)
    return ah


def _l2(grid: PeriodicGrid, ah: np.ndarray) -> float:
    return float(np.sqrt(grid.spectral_inner(ah, ah)))


@dataclass
class _Parts:
    rho: np.ndarray  # spectral, on the target grid
    u: np.ndarray
    d: np.ndarray


def _rho_modulation(grid: PeriodicGrid, amp: float) -> np.ndarray:
    r = np.ones(grid.shape)
    prod = np.ones(grid.shape)
    for c in grid.coords:
        prod = prod * np.sin(2 * np.pi * c)
    return grid.fft(r + amp * prod)


def _random_parts(grid, spec: InitialSpec, seed: int, M1: float, M2: float, with_base: bool) -> _Parts:
    dim = grid.dim
    if spec.kmax < 1:
        raise PresetError("kmax must be at least 1")
    box = _box_grid(dim, spec.kmax)
    rng = np.random.default_rng(seed)
    rh = _random_box(rng, box, 1, spec.decay)[0]
    uh = _random_box(rng, box, dim, spec.decay)
    dh = _random_box(rng, box, 3, spec.decay)
    zero = (0,) * dim
    rh[zero] = 0.0
    uh = box.leray_hat(uh)
    uh[(slice(None),) + zero] = 0.0
    dh[(slice(None),) + zero] = 0.0

    mid, half = 0.5 * (M1 + M2), 0.5 * (M2 - M1)
    rmax = float(np.max(np.abs(box.ifft(rh))))
    rh = rh * (0.9 * half / rmax) if rmax > 0 and half > 0 else 0.0 * rh
    rh[zero] = mid
    un = _l2(box, uh)
    uh = uh * (spec.velocity_amplitude / un) if un > 0 else uh
    dn = _l2(box, dh)
    dh = dh * (spec.director_amplitude / dn) if dn > 0 else dh
    if with_base:
        dh[(0,) + zero] += 1.0
    return _Parts(box.resample_hat(rh, grid), box.resample_hat(uh, grid), box.resample_hat(dh, grid))


def _simple_parts(name: str, grid: PeriodicGrid, spec: InitialSpec) -> _Parts:
    dim = grid.dim
    x = grid.coords
    zeros = np.zeros(grid.shape)
    d = np.stack([np.ones(grid.shape), zeros, zeros])
    u = np.zeros((dim,) + grid.shape)
    if name == "shear-wave":
        u[0] = spec.shear_amplitude * np.sin(2 * np.pi * x[1]) + zeros
    elif name == "director-wave":
        d = np.stack([np.cos(2 * np.pi * x[0]) + zeros, np.sin(2 * np.pi * x[0]) + zeros, zeros])
    elif name != "equilibrium":
        raise PresetError(f"unknown preset {name!r}")
    return _Parts(_rho_modulation(grid, spec.rho_amplitude), grid.fft(u), grid.fft(d))


def _assemble(grid, parts: _Parts, M1, M2) -> State:
    uh = grid.leray_hat(parts.u)
    uh[(slice(None),) + (0,) * grid.dim] = 0.0
    s = State(grid, parts.rho, uh, parts.d, 0.0, M1, M2)
    rho = grid.ifft(s.rho_hat)
    if rho.min() < M1 or rho.max() > M2:
        raise PresetError(f"initial density range [{rho.min():.6g}, {rho.max():.6g}] violates [{M1}, {M2}]")
    return s


def make_initial_data(preset: str, grid: PeriodicGrid, seed: int = 0, spec: InitialSpec | None = None,
                      M1: float = 1.0, M2: float = 1.0, coefficients: LeslieCoefficients | None = None) -> State:
    """Build the initial :class:`State` for a (possibly composite) preset."""
    spec = spec or InitialSpec(preset=preset)
    names = [p.strip() for p in preset.split("+") if p.strip()]
    if not names:
        raise PresetError("empty preset")
    for n in names:
        if n not in PRESETS:
            raise PresetError(f"unknown preset {n!r}; expected one of {PRESETS}")
    if not 0 < M1 <= M2:
        raise PresetError("density bounds need 0 < M1 <= M2")
    if "small-data" in names:
        if len(names) > 1:
            raise PresetError("small-data cannot be combined with other presets")
        return _small_data(grid, seed, spec, M1, M2, coefficients or LeslieCoefficients())

    parts = []
    for n in names:
        if n == "random-smooth":
            parts.append(_random_parts(grid, spec, seed, M1, M2, with_base=True))
        else:
            parts.append(_simple_parts(n, grid, spec))
    if len(parts) == 1:
        merged = parts[0]
    else:
        # director from the first, velocity from the last, density from any random member
        rho = next((p.rho for n, p in zip(names, parts) if n == "random-smooth"), parts[0].rho)
        merged = _Parts(rho, parts[-1].u, parts[0].d)
    return _assemble(grid, merged, M1, M2)


def _small_data(grid, seed, spec: InitialSpec, M1, M2, c: LeslieCoefficients) -> State:
    if not spec.epsilon > 0:
        raise PresetError("small-data epsilon must be positive")
    base = _random_parts(grid, spec, seed, M1, M2, with_base=False)

    def state(a):
        return _assemble(grid, _Parts(base.rho, a * base.u, a * base.d), M1, M2)

    def F(a):
        s = state(a)
        return small_data_functional(
            c, M2, Field(grid, s.rho_hat, True), Field(grid, s.u_hat, True), Field(grid, s.d_hat, True)
        ) - spec.epsilon

    hi = 1.0
    while F(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise PresetError("small-data target unreachable")
    # the functional behaves like a^2 near zero; bracket away from the root of multiplicity two
    lo = hi
    while F(lo) > 0:
        lo *= 0.5
        if lo < 1e-30:
            raise PresetError("small-data target too small to bracket")
    a = brentq(F, lo, hi, xtol=1e-15, rtol=1e-14)
    return state(a)


def random_modes(grid: PeriodicGrid, rng: np.random.Generator, ncomp: int, nmodes: int = 3,
                 kmax: int = 2, mean: bool = True) -> np.ndarray:
    """Physical samples of a sum of ``nmodes`` random tones per component, ``|k_i| <= kmax``."""
    x = grid.coords
    out = np.zeros((ncomp,) + grid.shape)
    for a in range(ncomp):
        if mean:
            out[a] += rng.normal()
        for _ in range(nmodes):
            k = rng.integers(-kmax, kmax + 1, size=grid.dim)
            phase = rng.uniform(0, 2 * np.pi)
            out[a] += rng.normal() * np.cos(2 * np.pi * sum(kv * c for kv, c in zip(k, x)) + phase)
    return out


def random_solenoidal(grid: PeriodicGrid, rng: np.random.Generator, nmodes: int = 3, kmax: int = 2) -> np.ndarray:
    """Divergence-free zero-mean velocity built from a few random tones."""
    uh = grid.leray_hat(grid.fft(random_modes(grid, rng, grid.dim, nmodes, kmax, mean=False)))
    uh[(slice(None),) + (0,) * grid.dim] = 0.0
    return grid.ifft(uh)


def random_pair(grid: PeriodicGrid, rng: np.random.Generator, nmodes: int, kmax: int = 2,
                amplitude: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Few-tone ``(u, d)``: solenoidal velocity and a director fluctuating about a random mean."""
    u = amplitude * random_solenoidal(grid, rng, nmodes, kmax)
    d = random_modes(grid, rng, 3, nmodes, kmax)
    mean = d.mean(axis=grid.axes, keepdims=True)
    return u, mean + amplitude * (d - mean)
