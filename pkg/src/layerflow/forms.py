"""Exterior algebra and calculus on differential forms sampled over the grid.

Forms of degree q carry binom(n,q) component arrays indexed by increasing
multi-indices. Spatial derivatives are spectral on the periodic truncation,
time derivatives are second-order finite differences, so the continuum
identities (d^2 = 0, the de Rham Laplacian factorization, commutation with the
heat operator) hold to rounding in space and to O(dt^2) in time.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import GridSpec
from . import spectral

# Sign multiplier for the codifferential; flipped only by the verification
# driver's mutation control to prove the de Rham Laplacian check has teeth.
_CODIFF_SIGN = 1.0


def set_codifferential_sign_flipped(flag: bool) -> None:
    global _CODIFF_SIGN
    _CODIFF_SIGN = -1.0 if flag else 1.0


def multi_indices(n: int, q: int) -> tuple[tuple[int, ...], ...]:
    """Increasing multi-indices of length q from {0,...,n-1}."""
    return tuple(itertools.combinations(range(n), q))


def form_rank(n: int, q: int) -> int:
    return math.comb(n, q)


def _perm_sign(seq) -> int:
    """Sign of the permutation sorting `seq` (distinct entries)."""
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv % 2 else 1


def _wedge_sign(I: tuple[int, ...], J: tuple[int, ...]):
    """Merged index and sign of dx^I ^ dx^J, or (None, 0) if they collide."""
    if set(I) & set(J):
        return None, 0
    concat = I + J
    return tuple(sorted(concat)), _perm_sign(concat)


def _insert_sign(i: int, I: tuple[int, ...]) -> int:
    """Sign of dx^i ^ dx^I relative to the sorted basis element."""
    return -1 if sum(1 for j in I if j < i) % 2 else 1


def _star_pair(n: int, I: tuple[int, ...]):
    """Complement index I^c and sign with dx^I ^ (star dx^I) = dx."""
    comp = tuple(j for j in range(n) if j not in I)
    return comp, _perm_sign(I + comp)


@dataclass
class FormField:
    """Degree-q differential form sampled on a grid.

    data has shape (binom(n,q), N, ..., N) for static fields and
    (binom(n,q), M+1, N, ..., N) for time-dependent ones; component order
    follows increasing multi-indices.
    """

    grid: GridSpec
    degree: int
    data: np.ndarray
    time_dependent: bool = False

    def __post_init__(self) -> None:
        n = self.grid.n
        if not 0 <= self.degree <= n:
            raise ValueError(f"degree must lie in 0..{n}, got {self.degree}")
        want = (form_rank(n, self.degree),)
        if self.time_dependent:
            want += (self.grid.M + 1,)
        want += self.grid.spatial_shape
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != want:
            raise ValueError(f"component array shape {self.data.shape}, expected {want}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, grid: GridSpec, degree: int, time_dependent: bool = False) -> "FormField":
        shape = (form_rank(grid.n, degree),)
        if time_dependent:
            shape += (grid.M + 1,)
        shape += grid.spatial_shape
        return cls(grid, degree, np.zeros(shape), time_dependent)

    @classmethod
    def from_components(cls, grid: GridSpec, degree: int, comps, time_dependent: bool = False) -> "FormField":
        return cls(grid, degree, np.stack([np.asarray(c, dtype=float) for c in comps]), time_dependent)

    # -- access -------------------------------------------------------------

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return multi_indices(self.grid.n, self.degree)

    def component(self, I: tuple[int, ...]) -> np.ndarray:
        return self.data[self.indices.index(tuple(I))]

    def copy(self) -> "FormField":
        return FormField(self.grid, self.degree, self.data.copy(), self.time_dependent)

    def slice_at(self, j: int) -> "FormField":
        """Static field holding time slice j."""
        if not self.time_dependent:
            raise ValueError("slice_at needs a time-dependent field")
        return FormField(self.grid, self.degree, self.data[:, j].copy(), False)

    # -- algebra ------------------------------------------------------------

    def _check_compatible(self, other: "FormField") -> None:
        if self.grid != other.grid:
            raise ValueError("grid mismatch")
        if self.time_dependent != other.time_dependent:
            raise ValueError("time extent mismatch")

    def __add__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return FormField(self.grid, self.degree, self.data + other.data, self.time_dependent)

    def __sub__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return FormField(self.grid, self.degree, self.data - other.data, self.time_dependent)

    def __mul__(self, a: float) -> "FormField":
        return FormField(self.grid, self.degree, self.data * float(a), self.time_dependent)

    __rmul__ = __mul__

    def __neg__(self) -> "FormField":
        return self * -1.0

    # -- measures -----------------------------------------------------------

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def l2_slices(self) -> np.ndarray:
        """Plain Riemann-sum L2 norm per time slice, summed over components."""
        hn = self.grid.h ** self.grid.n
        axes = tuple(range(-self.grid.n, 0))
        sq = np.sum(self.data ** 2, axis=axes) * hn
        per_slice = np.sum(sq, axis=0) if self.time_dependent else np.array([np.sum(sq)])
        return np.sqrt(per_slice)

    def l2_norm(self) -> float:
        return float(np.max(self.l2_slices()))


def rel_err(a: FormField, b: FormField) -> float:
    """sup|a-b| / sup|b| (or absolute sup when b vanishes)."""
    denom = b.sup_norm()
    diff = (a - b).sup_norm()
    return diff / denom if denom > 0 else diff


# ---------------------------------------------------------------------------
# exterior calculus
# ---------------------------------------------------------------------------


def wedge(u: FormField, v: FormField) -> FormField:
    """Pointwise exterior product of a q-form and an r-form."""
    u._check_compatible(v)
    q, r = u.degree, v.degree
    if q + r > u.grid.n:
        raise ValueError(f"degree overflow: {q} + {r} > {u.grid.n}")
    out = FormField.zero(u.grid, q + r, u.time_dependent)
    pos = {I: c for c, I in enumerate(out.indices)}
    for I, uI in zip(u.indices, u.data):
        for J, vJ in zip(v.indices, v.data):
            K, s = _wedge_sign(I, J)
            if s:
                out.data[pos[K]] += s * uI * vJ
    return out


def hodge_star(u: FormField) -> FormField:
    """Hodge star: component permutation with signs, dx^I ^ (star dx^I) = dx."""
    n = u.grid.n
    out = FormField.zero(u.grid, n - u.degree, u.time_dependent)
    pos = {I: c for c, I in enumerate(out.indices)}
    for I, uI in zip(u.indices, u.data):
        comp, s = _star_pair(n, I)
        out.data[pos[comp]] = s * uI
    return out


def exterior_derivative(u: FormField) -> FormField:
    """Exterior derivative with spectral spatial derivatives."""
    n = u.grid.n
    if u.degree == n:
        raise ValueError("cannot raise degree beyond n")
    ks = spectral.wavenumbers(u.grid)
    out = FormField.zero(u.grid, u.degree + 1, u.time_dependent)
    pos = {I: c for c, I in enumerate(out.indices)}
    out_hat = np.zeros(out.data.shape, dtype=complex)
    for I, uI in zip(u.indices, u.data):
        uhat = spectral.fft_spatial(uI, u.grid)
        for i in range(n):
            if i in I:
                continue
            K = tuple(sorted((i,) + I))
            out_hat[pos[K]] += _insert_sign(i, I) * (1j * ks[i]) * uhat
    out.data = spectral.ifft_spatial(out_hat, u.grid)
    return out


def codifferential(u: FormField) -> FormField:
    """Formal adjoint of d for the flat metric; on 1-forms equals -div."""
    n = u.grid.n
    if u.degree == 0:
        raise ValueError("cannot lower degree below 0")
    ks = spectral.wavenumbers(u.grid)
    out = FormField.zero(u.grid, u.degree - 1, u.time_dependent)
    hats = {I: spectral.fft_spatial(uI, u.grid) for I, uI in zip(u.indices, u.data)}
    out_hat = np.zeros(out.data.shape, dtype=complex)
    for c, J in enumerate(out.indices):
        acc = out_hat[c]
        for i in range(n):
            if i in J:
                continue
            K = tuple(sorted((i,) + J))
            acc += (-_CODIFF_SIGN * _insert_sign(i, J)) * (1j * ks[i]) * hats[K]
    out.data = spectral.ifft_spatial(out_hat, u.grid)
    return out


def componentwise_laplacian(u: FormField) -> FormField:
    """Scalar Laplacian applied to every component (spectral)."""
    return FormField(u.grid, u.degree, spectral.ifft_spatial(
        -spectral.ksq(u.grid) * spectral.fft_spatial(u.data, u.grid), u.grid), u.time_dependent)


def laplacian_form(u: FormField) -> FormField:
    """Form Laplacian d*d + dd* (equals minus the componentwise Laplacian)."""
    n = u.grid.n
    out = FormField.zero(u.grid, u.degree, u.time_dependent)
    if u.degree < n:
        out = out + codifferential(exterior_derivative(u))
    if u.degree > 0:
        out = out + exterior_derivative(codifferential(u))
    return out


def time_derivative(u: FormField) -> FormField:
    """d/dt by second-order central differences, one-sided at t = 0, T."""
    if not u.time_dependent:
        return FormField.zero(u.grid, u.degree, False)
    if u.grid.M < 4:
        raise ValueError("need M >= 4 time intervals for the time stencil")
    dt = u.grid.dt
    d = np.empty_like(u.data)
    a = u.data
    d[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * dt)
    d[:, 0] = (-3.0 * a[:, 0] + 4.0 * a[:, 1] - a[:, 2]) / (2.0 * dt)
    d[:, -1] = (3.0 * a[:, -1] - 4.0 * a[:, -2] + a[:, -3]) / (2.0 * dt)
    return FormField(u.grid, u.degree, d, True)


def heat_operator(u: FormField, mu: float) -> FormField:
    """Heat operator d/dt - mu*Laplacian, applied componentwise."""
    if u.time_dependent and u.grid.M < 4:
        raise ValueError("need M >= 4 time intervals for the heat operator")
    return time_derivative(u) - mu * componentwise_laplacian(u)


def substantial_derivative(u: FormField) -> FormField:
    """Advective derivative of a 1-form in Lamb form: d(|u|^2/2) + *(*du ^ u).

    The kinetic term is evaluated as *(u ^ *u)/2, the ordering for which the
    pairing equals |u|^2 pointwise in every dimension (the commuted order
    picks up (-1)^(n-1) for 1-forms, so the two agree only in odd dimension).
    """
    if u.degree != 1:
        raise ValueError("substantial derivative is defined on 1-forms")
    kinetic = hodge_star(wedge(u, hodge_star(u))) * 0.5
    rotational = hodge_star(wedge(hodge_star(exterior_derivative(u)), u))
    return exterior_derivative(kinetic) + rotational


def bilinear_advective(u: FormField, v: FormField) -> FormField:
    """Symmetrized advection of two 1-forms:
    d*(u ^ *v) + *((*du)^v) + *((*dv)^u) = (v.grad)u + (u.grad)v."""
    if u.degree != 1 or v.degree != 1:
        raise ValueError("both arguments must be 1-forms")
    u._check_compatible(v)
    t1 = exterior_derivative(hodge_star(wedge(u, hodge_star(v))))
    t2 = hodge_star(wedge(hodge_star(exterior_derivative(u)), v))
    t3 = hodge_star(wedge(hodge_star(exterior_derivative(v)), u))
    return t1 + t2 + t3


def verify_factorization(u: FormField, p: FormField, mu: float) -> dict:
    """Apply both factor orders of the block matrices around the Stokes-type
    linear part to (u,p) and report deviations from the diagonal target
    (Lap^1 H_mu u, Lap^0 H_mu p).

    Returns relative sup-norm residuals: left/right products vs the target and
    the two products against each other.
    """
    if u.degree != 1 or p.degree != 0:
        raise ValueError("expected a (1-form, 0-form) pair")

    def block_a(pair):
        uu, pp = pair
        return (heat_operator(uu, mu) + exterior_derivative(pp), codifferential(uu))

    def block_b(pair):
        uu, pp = pair
        top = codifferential(exterior_derivative(uu)) + heat_operator(exterior_derivative(pp), mu)
        bot = codifferential(heat_operator(uu, mu)) - heat_operator(heat_operator(pp, mu), mu)
        return (top, bot)

    left = block_a(block_b((u, p)))
    right = block_b(block_a((u, p)))
    target = (laplacian_form(heat_operator(u, mu)), laplacian_form(heat_operator(p, mu)))

    scale = max(target[0].sup_norm(), target[1].sup_norm(), 1e-300)

    def dev(pair):
        return max((pair[0] - target[0]).sup_norm(), (pair[1] - target[1]).sup_norm()) / scale

    return {
        "left_vs_diag": dev(left),
        "right_vs_diag": dev(right),
        "left_vs_right": max((left[0] - right[0]).sup_norm(), (left[1] - right[1]).sup_norm()) / scale,
        "scale": scale,
    }
