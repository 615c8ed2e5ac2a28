"""Periodic grids on the unit torus and spectral calculus on them.

Arrays are stored component-major: a scalar has shape ``grid.shape``, a
vector ``(ncomp, *grid.shape)`` and a tensor ``(a, b, *grid.shape)``.  The
spectral layout is the real-to-complex one of :func:`scipy.fft.rfftn` taken
over the trailing ``dim`` axes with ``norm="forward"``, so the zero mode of a
field is its mean, which on the unit torus is also its integral.

Nyquist modes carry no derivative and are dropped by every dealiased product.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class GridMismatchError(ValueError):
    pass


class RepresentationError(ValueError):
    pass


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NEMATIC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform tensor grid on ``[0, 1)^dim``.

    ``dealias`` is the padding factor used for nonlinear products (2 by
    default, 1.5 is the classical 3/2 rule).
    """

    dim: int
    n: tuple[int, ...]
    dealias: float = 2.0

    def __init__(self, dim: int, n, dealias: float = 2.0):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        if np.isscalar(n):
            n = (int(n),) * dim
        n = tuple(int(v) for v in n)
        if len(n) != dim:
            raise ValueError(f"expected {dim} axis sizes, got {len(n)}")
        for v in n:
            if v < 4 or v % 2:
                raise ValueError(f"axis sizes must be even and >= 4, got {v}")
        padded = tuple(int(round(v * dealias)) for v in n)
        if dealias < 1.5 or any(p % 2 for p in padded) or any(
            abs(p - v * dealias) > 1e-9 for p, v in zip(padded, n)
        ):
            raise ValueError(f"dealias factor {dealias} incompatible with n={n}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "dealias", float(dealias))

    # ------------------------------------------------------------------ shapes
    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.n[:-1] + (self.n[-1] // 2 + 1,)

    @cached_property
    def padded_shape(self) -> tuple[int, ...]:
        return tuple(int(round(v * self.dealias)) for v in self.n)

    def same_as(self, other: "PeriodicGrid") -> bool:
        return self.dim == other.dim and self.n == other.n

    # ------------------------------------------------------------ coordinates
    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable physical coordinates ``x_i = j / n_i`` ('ij' order)."""
        out = []
        for ax, v in enumerate(self.n):
            s = [1] * self.dim
            s[ax] = v
            out.append((np.arange(v) / v).reshape(s))
        return tuple(out)

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.broadcast_to(c, self.shape) for c in self.coords)

    # ------------------------------------------------------------ wavenumbers
    @cached_property
    def _int_wavenumbers(self) -> tuple[np.ndarray, ...]:
        out = []
        for ax, v in enumerate(self.n):
            if ax == self.dim - 1:
                k = np.arange(v // 2 + 1, dtype=float)
            else:
                k = np.fft.fftfreq(v, 1.0 / v)
            s = [1] * self.dim
            s[ax] = k.size
            out.append(k.reshape(s))
        return tuple(out)

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers ``2 pi m`` per axis."""
        return tuple(2.0 * np.pi * m for m in self._int_wavenumbers)

    @cached_property
    def kd(self) -> tuple[np.ndarray, ...]:
        """Derivative wavenumbers: as :attr:`k` with the Nyquist entry zeroed."""
        out = []
        for m, v in zip(self._int_wavenumbers, self.n):
            kk = 2.0 * np.pi * m
            out.append(np.where(np.abs(m) == v // 2, 0.0, kk))
        return tuple(out)

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(np.broadcast_to(kk**2, self.spectral_shape) for kk in self.k)

    @cached_property
    def kdsq(self) -> np.ndarray:
        return sum(np.broadcast_to(kk**2, self.spectral_shape) for kk in self.kd)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """Boolean mask of modes lying on a Nyquist plane of any axis."""
        mask = np.zeros(self.spectral_shape, dtype=bool)
        for m, v in zip(self._int_wavenumbers, self.n):
            mask |= np.broadcast_to(np.abs(m) == v // 2, self.spectral_shape)
        return mask

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored rfft mode in a full-spectrum sum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        if self.n[-1] % 2 == 0:
            w[..., -1] = 1.0
        return w

    # -------------------------------------------------------------- transforms
    def fft(self, a: np.ndarray) -> np.ndarray:
        return sfft.rfftn(a, axes=self.axes, norm="forward", workers=_workers())

    def ifft(self, ah: np.ndarray) -> np.ndarray:
        return sfft.irfftn(ah, s=self.shape, axes=self.axes, norm="forward", workers=_workers())

    def drop_nyquist(self, ah: np.ndarray) -> np.ndarray:
        return np.where(self.nyquist, 0.0, ah)

    # --------------------------------------------------------------- padding
    @cached_property
    def _pad_index(self):
        src, dst = [], []
        for ax, (v, p) in enumerate(zip(self.n, self.padded_shape)):
            h = v // 2
            if ax == self.dim - 1:
                src.append(np.arange(h))
                dst.append(np.arange(h))
            else:
                neg = np.arange(-h + 1, 0)
                src.append(np.concatenate([np.arange(h), neg % v]))
                dst.append(np.concatenate([np.arange(h), neg % p]))
        return np.ix_(*src), np.ix_(*dst)

    @property
    def padded_spectral_shape(self) -> tuple[int, ...]:
        p = self.padded_shape
        return p[:-1] + (p[-1] // 2 + 1,)

    def pad(self, ah: np.ndarray) -> np.ndarray:
        lead = ah.shape[: ah.ndim - self.dim]
        out = np.zeros(lead + self.padded_spectral_shape, dtype=complex)
        src, dst = self._pad_index
        out[(Ellipsis,) + dst] = ah[(Ellipsis,) + src]
        return out

    def truncate(self, ah_pad: np.ndarray) -> np.ndarray:
        lead = ah_pad.shape[: ah_pad.ndim - self.dim]
        out = np.zeros(lead + self.spectral_shape, dtype=complex)
        src, dst = self._pad_index
        out[(Ellipsis,) + src] = ah_pad[(Ellipsis,) + dst]
        return out

    def to_padded(self, ah: np.ndarray) -> np.ndarray:
        """Spectral coefficients on this grid -> physical samples on the padded grid."""
        return sfft.irfftn(
            self.pad(ah), s=self.padded_shape, axes=self.axes, norm="forward", workers=_workers()
        )

    def from_padded(self, a_pad: np.ndarray) -> np.ndarray:
        """Physical samples on the padded grid -> truncated spectral coefficients."""
        return self.truncate(sfft.rfftn(a_pad, axes=self.axes, norm="forward", workers=_workers()))

    def padded_mean(self, a_pad: np.ndarray) -> np.ndarray:
        return a_pad.mean(axis=self.axes)

    # ---------------------------------------------------------------- calculus
    def grad_hat(self, ah: np.ndarray) -> np.ndarray:
        """Spectral gradient; a trailing derivative index is appended to the component axes.

        For a vector ``v`` the result ``G`` has ``G[a, j] = d_j v_a``.
        """
        lead = ah.shape[: ah.ndim - self.dim]
        out = np.empty(lead + (self.dim,) + self.spectral_shape, dtype=complex)
        for j, kk in enumerate(self.kd):
            out[(Ellipsis, j) + (slice(None),) * self.dim] = 1j * kk * ah
        return out

    def div_hat(self, vh: np.ndarray) -> np.ndarray:
        """Contract the last component index with the derivative: ``sum_j d_j v_{..., j}``."""
        if vh.shape[vh.ndim - self.dim - 1] != self.dim:
            raise ValueError("divergence needs dim components in the last component axis")
        out = 0.0
        for j, kk in enumerate(self.kd):
            out = out + 1j * kk * vh[(Ellipsis, j) + (slice(None),) * self.dim]
        return out

    def lap_hat(self, ah: np.ndarray) -> np.ndarray:
        return -self.ksq * ah

    def leray_hat(self, vh: np.ndarray) -> np.ndarray:
        """Remove the gradient part mode by mode: ``(I - k k^T/|k|^2) v``."""
        if vh.shape[0] != self.dim:
            raise ValueError("Leray projection acts on dim-component vectors")
        ksq = self.kdsq
        inv = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
        kdotv = sum(kk * vh[j] for j, kk in enumerate(self.kd))
        out = np.array(vh, dtype=complex, copy=True)
        for j, kk in enumerate(self.kd):
            out[j] -= kk * kdotv * inv
        return out

    def spectral_inner(self, ah: np.ndarray, bh: np.ndarray) -> float:
        """``int a b dx`` for real fields from their rfft coefficients (summed over components)."""
        prod = (ah * np.conj(bh)).real * self.weights
        return float(prod.sum())

    def integrate(self, a: np.ndarray) -> np.ndarray:
        """Integral over the unit torus of physical samples (trailing axes)."""
        return a.mean(axis=self.axes)

    def resample_hat(self, ah: np.ndarray, other: "PeriodicGrid") -> np.ndarray:
        """Map spectral coefficients to ``other`` (zero padding or truncation, Nyquist dropped)."""
        if other.dim != self.dim:
            raise GridMismatchError("cannot resample across dimensions")
        lead = ah.shape[: ah.ndim - self.dim]
        out = np.zeros(lead + other.spectral_shape, dtype=complex)
        src, dst = [], []
        for ax, (a, b) in enumerate(zip(self.n, other.n)):
            h = min(a, b) // 2
            if ax == self.dim - 1:
                src.append(np.arange(h))
                dst.append(np.arange(h))
            else:
                neg = np.arange(-h + 1, 0)
                src.append(np.concatenate([np.arange(h), neg % a]))
                dst.append(np.concatenate([np.arange(h), neg % b]))
        out[(Ellipsis,) + np.ix_(*dst)] = ah[(Ellipsis,) + np.ix_(*src)]
        return out


@dataclass(frozen=True)
class Field:
    """A scalar, vector or tensor field on a grid, tagged with its representation."""

    grid: PeriodicGrid
    values: np.ndarray
    spectral: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def rank(self) -> int:
        return self.values.ndim - self.grid.dim

    @property
    def ncomp(self) -> int:
        return 1 if self.rank == 0 else self.values.shape[0]

    def physical(self) -> np.ndarray:
        return self.grid.ifft(self.values) if self.spectral else self.values

    def hat(self) -> np.ndarray:
        return self.values if self.spectral else self.grid.fft(self.values)

    def _like(self, hat: np.ndarray) -> "Field":
        if self.spectral:
            return Field(self.grid, hat, True)
        return Field(self.grid, self.grid.ifft(hat), False)


def _check_same(f: Field, g: Field) -> None:
    if not f.grid.same_as(g.grid):
        raise GridMismatchError(f"grid {f.grid.n} does not match {g.grid.n}")


def transform_forward(f: Field) -> Field:
    if f.spectral:
        raise RepresentationError("field is already spectral")
    return Field(f.grid, f.grid.fft(f.values), True)


def transform_backward(f: Field) -> Field:
    if not f.spectral:
        raise RepresentationError("field is already physical")
    return Field(f.grid, f.grid.ifft(f.values), False)


def gradient(f: Field) -> Field:
    return f._like(f.grid.grad_hat(f.hat()))


def divergence(v: Field) -> Field:
    return v._like(v.grid.div_hat(v.hat()))


def laplacian(f: Field) -> Field:
    return f._like(f.grid.lap_hat(f.hat()))


def leray_project(v: Field) -> Field:
    return v._like(v.grid.leray_hat(v.hat()))


def dealias_multiply(f: Field, g: Field) -> Field:
    """Pointwise product evaluated on the padded grid and truncated back.

    Leading component axes broadcast numpy-style, so a scalar times a vector
    scales every component.
    """
    _check_same(f, g)
    grid = f.grid
    fp = grid.to_padded(f.hat())
    gp = grid.to_padded(g.hat())
    fr, gr = f.rank, g.rank
    if fr < gr:
        fp = fp.reshape(fp.shape[:fr] + (1,) * (gr - fr) + fp.shape[fr:])
    elif gr < fr:
        gp = gp.reshape(gp.shape[:gr] + (1,) * (fr - gr) + gp.shape[gr:])
    hat = grid.from_padded(fp * gp)
    out = Field(grid, hat, True)
    return out if f.spectral else transform_backward(out)


def integrate(f: Field) -> float:
    if f.rank != 0:
        raise ValueError("integrate expects a scalar field")
    if f.spectral:
        return float(f.values[(0,) * f.grid.dim].real)
    return float(f.grid.integrate(f.values))


def sobolev_norm(f: Field, m: int = 1, flavor: str = "L2") -> float:
    """H^m norm from spectral coefficients, or the grid max for ``flavor="Linf"``.

    The H^m norm sums the squared L2 norms of every partial derivative of
    order up to ``m``; on the torus that is ``sum_k (sum_{j<=m} |k|^{2j}) |f_k|^2``
    summed over components.
    """
    if flavor.lower() in ("linf", "l_inf", "inf"):
        return float(np.max(np.abs(f.physical())))
    if flavor.upper() != "L2":
        raise ValueError(f"unknown norm flavor {flavor!r}")
    if m < 0:
        raise ValueError("m must be non-negative")
    grid = f.grid
    fh = f.hat()
    # first derivatives see the Nyquist-free wavenumbers, like gradient()
    weight = sum(grid.kdsq if j == 1 else grid.ksq**j for j in range(m + 1))
    val = grid.spectral_inner(fh * weight, fh)
    return float(np.sqrt(max(val, 0.0)))
