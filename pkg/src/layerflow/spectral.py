"""Discrete Fourier machinery shared by the form calculus and the potentials.

All spatial derivatives and convolutions act on the periodic truncation
[-L,L]^n. The Nyquist wavenumber is zeroed in the derivative symbols so that
odd-order operators stay skew-adjoint on real fields; corpus fields carry no
energy there.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
import scipy.fft

from .geometry import GridSpec

_workers = 1


def set_workers(workers: int) -> None:
    """Set the transform worker count (0 = all available cores)."""
    global _workers
    _workers = os.cpu_count() or 1 if workers == 0 else max(1, int(workers))


def get_workers() -> int:
    return _workers


def _spatial_axes(grid: GridSpec) -> tuple[int, ...]:
    return tuple(range(-grid.n, 0))


@lru_cache(maxsize=16)
def wavenumbers(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """Angular wavenumber arrays k_i, each shaped to broadcast over the grid."""
    k1 = 2.0 * np.pi * np.fft.fftfreq(grid.N, d=grid.h)
    k1[grid.N // 2] = 0.0  # drop the unpaired Nyquist mode
    out = []
    for i in range(grid.n):
        shape = [1] * grid.n
        shape[i] = grid.N
        out.append(k1.reshape(shape))
    return tuple(out)


@lru_cache(maxsize=16)
def ksq(grid: GridSpec) -> np.ndarray:
    k2 = np.zeros(grid.spatial_shape)
    for ki in wavenumbers(grid):
        k2 = k2 + ki ** 2
    return k2


@lru_cache(maxsize=16)
def inv_ksq(grid: GridSpec) -> np.ndarray:
    """1/|k|^2 with dropped (zeroed) entries wherever |k|^2 vanishes."""
    k2 = ksq(grid)
    out = np.zeros_like(k2)
    nz = k2 > 0.0
    out[nz] = 1.0 / k2[nz]
    return out


def fft_spatial(arr: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.fftn(arr, axes=_spatial_axes(grid), workers=_workers)


def ifft_spatial(arr: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.ifftn(arr, axes=_spatial_axes(grid), workers=_workers).real


def derivative(arr: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    """Spectral partial derivative along spatial axis `axis` (0-based)."""
    ki = wavenumbers(grid)[axis]
    return ifft_spatial(1j * ki * fft_spatial(arr, grid), grid)


def laplacian(arr: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Componentwise scalar Laplacian sum_i d^2/dx_i^2 (spectral)."""
    return ifft_spatial(-ksq(grid) * fft_spatial(arr, grid), grid)
