"""Traveling-front computation on a truncated line.

The front phi and its speed c solve

    phi'' + c phi' + f(phi) = 0,   phi(-inf) = phi_-,  phi(+inf) = phi_+,

discretized with second-order centered differences, Dirichlet clamping to
the equilibria at z = -+L, and the speed solved simultaneously with a
phase condition pinning the first component's mid-value at z = 0 (the
problem is translation invariant, so the Jacobian is singular without a
gauge).  The scalar bistable front is available in closed form as oracle.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, InputError
from .grids import Grid1D
from .reaction import ReactionModel, equilibrium_tail_rates


@dataclass(frozen=True)
class WaveProfile:
    grid: Grid1D
    phi: np.ndarray                # (m, N)
    phi_prime: np.ndarray          # (m, N)
    phi_double_prime: np.ndarray   # (m, N)
    speed: float
    tail_rate: float
    residual: float = 0.0

    @property
    def components(self) -> int:
        return self.phi.shape[0]

    def to_csv(self, csv_path, header_path=None):
        """Write the tabulated profile plus a JSON header (c, tail rate, residual)."""
        m, n = self.phi.shape
        cols = [self.grid.nodes]
        names = ["z"]
        for label, arr in (("phi", self.phi), ("dphi", self.phi_prime),
                           ("d2phi", self.phi_double_prime)):
            for i in range(m):
                cols.append(arr[i])
                names.append(f"{label}{i}")
        data = np.column_stack(cols)
        np.savetxt(csv_path, data, delimiter=",", header=",".join(names), comments="")
        header = {
            "speed": self.speed,
            "tail_rate": self.tail_rate,
            "residual": self.residual,
            "half_length": self.grid.half_length,
            "node_count": self.grid.node_count,
            "components": m,
        }
        if header_path is not None:
            with open(header_path, "w") as fh:
                json.dump(header, fh, indent=2, sort_keys=True)
        return header


def _phase_value(values: np.ndarray, grid: Grid1D) -> tuple:
    """Linear interpolation of a nodal array at z = 0.

    Returns (value, (index weights)) so the Newton row stays linear.  When
    the node count is odd z = 0 is a node and the value is exact.
    """
    n = grid.node_count
    if n % 2 == 1:
        i = (n - 1) // 2
        return values[i], ((i, 1.0),)
    i = n // 2 - 1
    return 0.5 * (values[i] + values[i + 1]), ((i, 0.5), (i + 1, 0.5))


def _stencil_residual(phi, c, model, grid):
    """Interior residual of the discrete profile equation, shape (m, N-2)."""
    h = grid.spacing
    d2 = (phi[:, :-2] - 2.0 * phi[:, 1:-1] + phi[:, 2:]) / h**2
    d1 = (phi[:, 2:] - phi[:, :-2]) / (2.0 * h)
    return d2 + c * d1 + model.f(phi[:, 1:-1])


def profile_residual(profile: WaveProfile, model: ReactionModel) -> float:
    """Max-norm of the discrete profile-equation residual on interior nodes."""
    if profile.phi.shape[0] != model.components:
        raise InputError("profile/model component mismatch")
    res = _stencil_residual(profile.phi, profile.speed, model, profile.grid)
    return float(np.max(np.abs(res)))


def _central_derivatives(phi, grid, equilibria):
    """Second-order phi' and phi'' using equilibrium ghost values at the ends."""
    h = grid.spacing
    m = phi.shape[0]
    ext = np.empty((m, phi.shape[1] + 2))
    ext[:, 1:-1] = phi
    ext[:, 0] = equilibria[0]
    ext[:, -1] = equilibria[1]
    d1 = (ext[:, 2:] - ext[:, :-2]) / (2.0 * h)
    d2 = (ext[:, 2:] - 2.0 * ext[:, 1:-1] + ext[:, :-2]) / h**2
    return d1, d2


def exact_bistable_profile(a: float, grid: Grid1D) -> WaveProfile:
    """Closed-form bistable front sampled on ``grid`` (oracle object)."""
    if not 0.0 < a < 0.5:
        raise InputError(f"bistable parameter must satisfy 0 < a < 1/2, got {a}")
    from .reaction import bistable_model

    model = bistable_model(a)
    front = model.exact_front
    z = grid.nodes
    return WaveProfile(
        grid=grid,
        phi=front.phi(z),
        phi_prime=front.phi_prime(z),
        phi_double_prime=front.phi_double_prime(z),
        speed=front.speed,
        tail_rate=front.tail_rate,
        residual=0.0,
    )


def solve_profile(
    model: ReactionModel,
    grid: Grid1D,
    initial_guess,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> WaveProfile:
    """Newton solve for (phi, c) with Dirichlet tails and the phase gauge.

    ``initial_guess`` is a (phi, c) pair or a WaveProfile.  The guess must
    connect the model equilibria; tails are clamped exactly to them.
    """
    if isinstance(initial_guess, WaveProfile):
        phi0, c0 = initial_guess.phi, initial_guess.speed
    else:
        phi0, c0 = initial_guess
    phi = np.array(phi0, dtype=float)
    c = float(c0)
    m = model.components
    n = grid.node_count
    if phi.shape != (m, n):
        raise InputError(f"guess shape {phi.shape} != ({m}, {n})")

    phi_minus, phi_plus = (np.asarray(e, dtype=float) for e in model.equilibria)
    span = max(np.max(np.abs(phi_minus - phi_plus)), 1e-30)
    if (np.max(np.abs(phi[:, 0] - phi_minus)) > 0.2 * span
            or np.max(np.abs(phi[:, -1] - phi_plus)) > 0.2 * span):
        raise InputError("initial guess does not connect the model equilibria")

    phi[:, 0] = phi_minus
    phi[:, -1] = phi_plus
    target = 0.5 * (phi_minus[0] + phi_plus[0])
    h = grid.spacing
    n_int = n - 2
    n_unknown = m * n_int + 1  # interior values plus the speed

    def full_residual(phi, c):
        res = _stencil_residual(phi, c, model, grid).reshape(-1)
        phase, _ = _phase_value(phi[0], grid)
        return np.concatenate([res, [phase - target]])

    # Interior-unknown index helper: component i, interior node j
    def idx(i, j):
        return i * n_int + j

    last_norm = np.inf
    for iteration in range(max_iter):
        res = full_residual(phi, c)
        res_norm = float(np.max(np.abs(res)))
        if res_norm <= tol:
            break
        # Banded block A = d_phi(residual) on interior unknowns, assembled
        # in COO form; the speed column and phase row are eliminated by a
        # Schur complement so the factorization stays banded.
        jac = model.jacobian(phi[:, 1:-1])  # (m, m, n_int)
        d1 = (phi[:, 2:] - phi[:, :-2]) / (2.0 * h)
        j_arange = np.arange(n_int)
        rows, cols, vals = [], [], []
        for i in range(m):
            base = i * n_int
            rows.append(base + j_arange)
            cols.append(base + j_arange)
            vals.append(np.full(n_int, -2.0 / h**2))
            rows.append(base + j_arange[1:])
            cols.append(base + j_arange[:-1])
            vals.append(np.full(n_int - 1, 1.0 / h**2 - c / (2.0 * h)))
            rows.append(base + j_arange[:-1])
            cols.append(base + j_arange[1:])
            vals.append(np.full(n_int - 1, 1.0 / h**2 + c / (2.0 * h)))
            for l in range(m):
                rows.append(base + j_arange)
                cols.append(l * n_int + j_arange)
                vals.append(jac[i, l])
        a_mat = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_unknown - 1, n_unknown - 1),
        )
        # phase-condition row p (component 0 only; clamped ends carry no unknowns)
        p_vec = np.zeros(n_unknown - 1)
        _, weights = _phase_value(phi[0], grid)
        for node, w in weights:
            if 0 < node < n - 1:
                p_vec[idx(0, node - 1)] = w
        b_vec = d1.reshape(-1)  # d(residual)/dc
        try:
            lu = spla.splu(a_mat)
            u_sol = lu.solve(-res[:-1])
            w_sol = lu.solve(b_vec)
        except RuntimeError as exc:  # pragma: no cover - singular factorization
            raise ConvergenceError(
                f"Newton linear solve failed: {exc}", residual=res_norm
            ) from exc
        denom = p_vec @ w_sol
        if abs(denom) < 1e-14:
            raise ConvergenceError(
                "phase-condition Schur complement is singular", residual=res_norm
            )
        dc = (p_vec @ u_sol + res[-1]) / denom
        delta = np.concatenate([u_sol - dc * w_sol, [dc]])

        # Damped update: halve the step while the residual grows.
        step = 1.0
        for _ in range(30):
            phi_try = phi.copy()
            phi_try[:, 1:-1] += step * delta[:-1].reshape(m, n_int)
            c_try = c + step * delta[-1]
            try_norm = float(np.max(np.abs(full_residual(phi_try, c_try))))
            if try_norm < res_norm or try_norm <= tol:
                break
            step *= 0.5
        phi, c = phi_try, c_try
        last_norm = try_norm
    else:
        raise ConvergenceError(
            f"profile Newton did not reach tol={tol} in {max_iter} iterations",
            residual=last_norm,
        )

    d1, d2 = _central_derivatives(phi, grid, (phi_minus, phi_plus))
    rate_minus, rate_plus = equilibrium_tail_rates(model, c)
    res_final = float(np.max(np.abs(_stencil_residual(phi, c, model, grid))))
    return WaveProfile(
        grid=grid,
        phi=phi,
        phi_prime=d1,
        phi_double_prime=d2,
        speed=c,
        tail_rate=min(rate_minus, rate_plus),
        residual=res_final,
    )
