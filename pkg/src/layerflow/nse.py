"""The Navier-Stokes reduction: quadratic vorticity operators, their
linearizations, the fixed-point solve of the reduced equation
g + Psi_mu D2 g = g0, recovery of velocity and pressure, and diagnostics.

The solver treats the whole space-time vorticity field as one unknown; Picard
mirrors the contraction structure for small data, Newton mode the invertible
derivative, with matrix-free Krylov linear solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg

from .forms import (FormField, codifferential, exterior_derivative, heat_operator,
                    hodge_star, substantial_derivative, time_derivative, wedge,
                    componentwise_laplacian)
from .holder import HolderParams, f_norm, spatial_norm
from .potentials import PotentialConfig, grad_newton, poisson_potential, volume_potential
from . import spectral


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "picard"
    damping: float = 1.0
    tol: float = 1e-8
    max_iter: int = 50
    krylov_tol: float = 1e-10
    krylov_max: int = 200
    potential: PotentialConfig = field(default_factory=lambda: PotentialConfig(mu=0.1))

    def __post_init__(self) -> None:
        if self.mode not in ("picard", "newton"):
            raise ValueError("mode must be 'picard' or 'newton'")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class LinearizationData:
    """Frozen coefficients (g0_form, v1, v2) of the first-order linearization."""

    g0_form: FormField
    v1: FormField
    v2: FormField | None = None

    @classmethod
    def from_base_velocity(cls, u0: FormField) -> "LinearizationData":
        """Base-point data g0 = du0, v1 = v2 = u0 (the linearization of the
        advective term at u0)."""
        return cls(g0_form=exterior_derivative(u0), v1=u0, v2=u0)

    @classmethod
    def from_base_vorticity(cls, g0: FormField, cfg: PotentialConfig) -> "LinearizationData":
        """Base-point data built from a vorticity 2-form: v1 is its
        divergence-free primitive."""
        return cls(g0_form=g0, v1=grad_newton(g0, cfg), v2=None)


@dataclass
class FlowState:
    """Solution triple (u, p, g = du) plus diagnostics; carries its data."""

    u: FormField
    p: FormField
    g: FormField
    f: FormField | None = None
    u0: FormField | None = None
    diagnostics: dict = field(default_factory=dict)


class ReducedSolveError(RuntimeError):
    def __init__(self, message: str, last_g: FormField, history: list[dict]):
        super().__init__(message)
        self.last_g = last_g
        self.history = history
        self.residual = history[-1]["residual"] if history else float("nan")


def leray_project(u: FormField) -> FormField:
    """Divergence-free projection on the nonzero modes (the zero mode, a
    constant field, is already divergence-free and passes through)."""
    if u.degree != 1:
        raise ValueError("Leray projection acts on 1-forms")
    grid = u.grid
    ks = spectral.wavenumbers(grid)
    inv = spectral.inv_ksq(grid)
    hats = spectral.fft_spatial(u.data, grid)
    kdot = np.zeros_like(hats[0])
    for i in range(grid.n):
        kdot = kdot + ks[i] * hats[i]
    kdot = kdot * inv
    out = np.empty_like(hats)
    for i in range(grid.n):
        out[i] = hats[i] - ks[i] * kdot
    return FormField(grid, 1, spectral.ifft_spatial(out, grid), u.time_dependent)


def op_Q(g: FormField, cfg: PotentialConfig) -> FormField:
    """Quadratic operator *(*g ^ grad_newton(g)) taking 2-forms to 1-forms."""
    if g.degree != 2:
        raise ValueError("op_Q acts on 2-forms")
    return hodge_star(wedge(hodge_star(g), grad_newton(g, cfg)))


def op_D2(g: FormField, cfg: PotentialConfig) -> FormField:
    """Quadratic vorticity operator d(op_Q(g)); the degree-2 face of the
    advective nonlinearity."""
    return exterior_derivative(op_Q(g, cfg))


def op_V0(u: FormField, lin: LinearizationData) -> FormField:
    """First-order linearization *(*g0 ^ u) + *(*du ^ v1) + d*(v2 ^ *u).

    The gradient term pairs v2 with u in the ordering that equals (v2 . u)
    pointwise in every dimension; it is annihilated by d in the homomorphism
    identity either way.
    """
    if u.degree != 1:
        raise ValueError("op_V0 acts on 1-forms")
    if u.grid != lin.g0_form.grid:
        raise ValueError("grid mismatch")
    out = hodge_star(wedge(hodge_star(lin.g0_form), u))
    out = out + hodge_star(wedge(hodge_star(exterior_derivative(u)), lin.v1))
    v2 = lin.v2 if lin.v2 is not None else lin.v1
    out = out + exterior_derivative(hodge_star(wedge(v2, hodge_star(u))))
    return out


def op_U0(f: FormField, lin: LinearizationData, cfg: PotentialConfig) -> FormField:
    """Linearized transfer *(*g0 ^ grad_newton(f)) + *(*f ^ v1) on 2-forms."""
    if f.degree != 2:
        raise ValueError("op_U0 acts on 2-forms")
    if f.grid != lin.g0_form.grid:
        raise ValueError("grid mismatch")
    out = hodge_star(wedge(hodge_star(lin.g0_form), grad_newton(f, cfg)))
    return out + hodge_star(wedge(hodge_star(f), lin.v1))


def op_W0(f: FormField, lin: LinearizationData, cfg: PotentialConfig) -> FormField:
    """d comp op_U0: the 2-form side of the linearized homomorphism."""
    return exterior_derivative(op_U0(f, lin, cfg))


def assemble_g0(f: FormField | None, u0: FormField, cfg: PotentialConfig) -> FormField:
    """Right-hand side of the reduced equation: the heat evolution of du0 plus
    the Duhamel integral of df."""
    g0 = poisson_potential(exterior_derivative(u0), cfg)
    if f is not None:
        g0 = g0 + volume_potential(exterior_derivative(f), cfg)
    return g0


def _reduced_residual(g: FormField, g0: FormField, cfg: PotentialConfig) -> FormField:
    return g + volume_potential(op_D2(g, cfg), cfg) - g0


def frechet_apply(h: FormField, base_g: FormField, cfg: PotentialConfig) -> FormField:
    """Derivative of the reduced map at base_g applied to h:
    h + Psi_mu W0 h with the linearization frozen at base_g."""
    lin = LinearizationData.from_base_vorticity(base_g, cfg)
    return h + volume_potential(op_W0(h, lin, cfg), cfg)


def _gmres_solve(matvec, rhs: FormField, cfg: SolverConfig) -> FormField:
    shape = rhs.data.shape
    grid, degree, td = rhs.grid, rhs.degree, rhs.time_dependent

    def mv(vec):
        h = FormField(grid, degree, vec.reshape(shape).copy(), td)
        return matvec(h).data.ravel()

    op = scipy.sparse.linalg.LinearOperator(
        (rhs.data.size, rhs.data.size), matvec=mv, dtype=float)
    sol, info = scipy.sparse.linalg.gmres(
        op, rhs.data.ravel(), rtol=cfg.krylov_tol, atol=0.0,
        restart=min(cfg.krylov_max, 60), maxiter=cfg.krylov_max)
    if info != 0:
        raise ReducedSolveError(f"Krylov solve stagnated (info={info})",
                                FormField(grid, degree, sol.reshape(shape), td), [])
    return FormField(grid, degree, sol.reshape(shape), td)


def solve_linear_reduced(g0: FormField, lin: LinearizationData, cfg: SolverConfig) -> FormField:
    """Krylov solve of the linear reduced equation (I + Psi_mu W0) g = g0."""
    pot = cfg.potential

    def matvec(h):
        return h + volume_potential(op_W0(h, lin, pot), pot)

    return _gmres_solve(matvec, g0, cfg)


def solve_reduced(g0: FormField, base: FlowState | FormField | None,
                  cfg: SolverConfig) -> tuple[FormField, list[dict]]:
    """Fixed-point solve of g + Psi_mu D2 g = g0 in the discrete sup norm.

    Picard iterates g <- (1-damping) g + damping (g0 - Psi_mu D2 g) with the
    damping halved whenever the residual grows; Newton solves the linearized
    update by matrix-free Krylov iteration. Returns the solution and the
    iteration history.
    """
    pot = cfg.potential
    if isinstance(base, FlowState):
        g = base.g.copy()
    elif isinstance(base, FormField):
        g = base.copy()
    else:
        g = g0.copy()
    damping = cfg.damping
    history: list[dict] = []
    res = _reduced_residual(g, g0, pot)
    res_norm = res.sup_norm()
    history.append({"iteration": 0, "residual": res_norm, "damping": damping})
    for it in range(1, cfg.max_iter + 1):
        if res_norm <= cfg.tol:
            return g, history
        if cfg.mode == "picard":
            g_new = (1.0 - damping) * g + damping * (g0 - volume_potential(op_D2(g, pot), pot))
        else:
            lin = LinearizationData.from_base_vorticity(g, pot)

            def matvec(h, _lin=lin):
                return h + volume_potential(op_W0(h, _lin, pot), pot)

            delta = _gmres_solve(matvec, -1.0 * res, cfg)
            g_new = g + damping * delta
        res_new = _reduced_residual(g_new, g0, pot)
        res_new_norm = res_new.sup_norm()
        if res_new_norm > res_norm and damping > 1.0 / 64.0:
            damping *= 0.5
            history.append({"iteration": it, "residual": res_norm, "damping": damping})
            continue
        g, res, res_norm = g_new, res_new, res_new_norm
        history.append({"iteration": it, "residual": res_norm, "damping": damping})
    if res_norm <= cfg.tol:
        return g, history
    raise ReducedSolveError(
        f"no convergence after {cfg.max_iter} iterations (residual {res_norm:.3e})",
        g, history)


def recover_velocity(g: FormField, cfg: PotentialConfig) -> FormField:
    """Divergence-free velocity d*(Phi x I)g of a closed vorticity 2-form."""
    return grad_newton(g, cfg)


def recover_pressure(u: FormField, f: FormField | None, cfg: PotentialConfig) -> FormField:
    """Pressure d*(Phi x I)(f - H_mu u - D1 u), zero mode fixed to 0."""
    rhs = -1.0 * heat_operator(u, cfg.mu) - substantial_derivative(u)
    if f is not None:
        rhs = rhs + f
    return grad_newton(rhs, cfg)


def solve_nse(f: FormField | None, u0: FormField, cfg: SolverConfig) -> FlowState:
    """Full pipeline: project the initial velocity, assemble g0, solve the
    reduced equation, recover (u, p), attach residual diagnostics."""
    pot = cfg.potential
    u0p = leray_project(u0)
    g0 = assemble_g0(f, u0p, pot)
    g, history = solve_reduced(g0, None, cfg)
    u = recover_velocity(g, pot)
    p = recover_pressure(u, f, pot)
    state = FlowState(u=u, p=p, g=g, f=f, u0=u0p,
                      diagnostics={"iterations": history, "mu": pot.mu})
    state.diagnostics["residuals"] = nse_residual(state, f, u0p)
    return state


def nse_residual(state: FlowState, f: FormField | None, u0: FormField,
                 mu: float | None = None) -> dict:
    """Sup and L2 norms of the momentum, divergence and initial-condition
    residuals, per time slice."""
    u, p = state.u, state.p
    if mu is None:
        mu = state.diagnostics.get("mu")
    if mu is None:
        raise ValueError("viscosity unknown: pass mu or solve through solve_nse")
    mom = time_derivative(u) - mu * componentwise_laplacian(u) \
        + substantial_derivative(u) + exterior_derivative(p)
    if f is not None:
        mom = mom - f
    div = codifferential(u)
    ic = u.slice_at(0) - (u0 if not u0.time_dependent else u0.slice_at(0))
    axes = tuple(range(-u.grid.n, 0))
    hn = u.grid.h ** u.grid.n

    def per_slice(g: FormField):
        sup = np.max(np.abs(g.data), axis=(0,) + axes)
        l2 = np.sqrt(np.sum(g.data ** 2, axis=(0,) + axes) * hn)
        return sup, l2

    mom_sup, mom_l2 = per_slice(mom)
    div_sup, div_l2 = per_slice(div)
    return {
        "momentum_sup": mom_sup, "momentum_l2": mom_l2,
        "divergence_sup": div_sup, "divergence_l2": div_l2,
        "initial_sup": ic.sup_norm(), "initial_l2": float(ic.l2_slices()[0]),
    }


def energy_report(u: FormField, f: FormField | None, mu: float) -> dict:
    """Per-slice energy table: E = ||u||^2/2, dissipation D = mu sum ||d_i u||^2,
    power P = (f, u), and the defect |dE/dt + D - P|."""
    grid = u.grid
    hn = grid.h ** grid.n
    axes = (0,) + tuple(range(-grid.n, 0))
    energy = 0.5 * np.sum(u.data ** 2, axis=axes) * hn
    diss = np.zeros(grid.M + 1)
    hats = spectral.fft_spatial(u.data, grid)
    for i, ki in enumerate(spectral.wavenumbers(grid)):
        di = spectral.ifft_spatial(1j * ki * hats, grid)
        diss += mu * np.sum(di ** 2, axis=axes) * hn
    power = np.zeros(grid.M + 1)
    if f is not None:
        power = np.sum(f.data * u.data, axis=axes) * hn
    dt = grid.dt
    dEdt = np.gradient(energy, dt, edge_order=2)
    return {"t": grid.times(), "energy": energy, "dissipation": diss,
            "power": power, "defect": np.abs(dEdt + diss - power)}


def momentum_operator(state: FlowState, mu: float) -> tuple[FormField, FormField]:
    """The flow map applied to a state: (H_mu u + D1 u + dp, trace of u at 0)."""
    mom = heat_operator(state.u, mu) + substantial_derivative(state.u) \
        + exterior_derivative(state.p)
    return mom, state.u.slice_at(0)


def solution_metric(a: FlowState, b: FlowState, params: HolderParams, mu: float,
                    seed: int = 0, n_random: int = 20_000) -> float:
    """Metric on solved states: two-norm distances of (u, p), of the vorticity
    forms, and of the flow-map images (momentum part in the two-norm scale,
    initial trace in the spatial scale).

    Weight shifts follow the solution-space convention: pressure one below,
    vorticity one above the velocity weight (clamped at zero).
    """
    if a.u.grid != b.u.grid:
        raise ValueError("grid mismatch")
    p_lo = replace(params, delta=max(params.delta - 1.0, 0.0))
    p_hi = replace(params, delta=params.delta + 1.0)
    term_state = f_norm(a.u - b.u, params, seed, n_random) \
        + f_norm(a.p - b.p, p_lo, seed, n_random)
    term_vort = f_norm(a.g - b.g, p_hi, seed, n_random)
    mom_a, ic_a = momentum_operator(a, mu)
    mom_b, ic_b = momentum_operator(b, mu)
    term_map = f_norm(mom_a - mom_b, params, seed, n_random) \
        + spatial_norm(ic_a - ic_b, replace(params, lam_prime=None), seed, n_random).total
    return term_state + term_vort + term_map
