"""Discretized linearization about the front and its spectral objects.

The operator is

    L1 = d_zz + c d_z + Df(phi(z))

on the profile grid with Dirichlet clamping.  This module builds the
matrix, the adjoint zero mode psi (kernel of the transpose, normalized so
<psi, phi'> = 1 in the trapezoid inner product), the spectral gap, the
rank-one projections P0/Q0, the semigroup e^{s L1} by implicit stepping,
the inverse of L1 on the range of Q0, and a resolvent-norm sweep along a
vertical line (the Gearhart-Pruss style uniform bound, measured).

Spectral gap convention: the matrix eigenvalues on a clamped interval see
the absolute spectrum, which can sit strictly left of the infinite-line
essential-spectrum edge determined by the equilibria.  The reported gap is
the smaller of the matrix gap and the essential-edge distance, which is
the honest decay constant for the underlying operator.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssumptionError, InputError, SingularityError
from .grids import Grid1D
from .profile import WaveProfile
from .reaction import ReactionModel

#: eigenvalues with |lambda| below this are treated as the translation mode
ZERO_TOL = 1e-6


@dataclass
class DiscreteOperator1D:
    """Banded discretization of L1 with Dirichlet rows.

    ``matrix`` is (m N) x (m N); rows at the clamped end nodes carry the
    boundary condition as a pure diagonal entry beta < 0, which keeps the
    matrix block triangular: its eigenvalues are the interior-block
    eigenvalues plus 2m copies of beta far in the left half-plane.
    """

    grid: Grid1D
    components: int
    speed: float
    matrix: sp.spmatrix
    potential: np.ndarray  # Df(phi), shape (m, m, N)
    bc: str = "dirichlet"
    boundary_diagonal: float = 0.0

    _interior: Optional[sp.spmatrix] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.components * self.grid.node_count

    def interior_matrix(self) -> sp.spmatrix:
        """Operator restricted to interior nodes (boundary DOFs eliminated)."""
        if self._interior is None:
            n = self.grid.node_count
            keep = np.ones(self.size, dtype=bool)
            for i in range(self.components):
                keep[i * n] = keep[i * n + n - 1] = False
            csr = self.matrix.tocsr()
            self._interior = csr[keep][:, keep].tocsc()
        return self._interior

    def interior_indices(self) -> np.ndarray:
        n = self.grid.node_count
        keep = np.ones(self.size, dtype=bool)
        for i in range(self.components):
            keep[i * n] = keep[i * n + n - 1] = False
        return np.flatnonzero(keep)

    def apply(self, g: np.ndarray) -> np.ndarray:
        """Apply the interior stencil to a full field; boundary rows give 0."""
        g = np.asarray(g, dtype=float)
        squeeze = g.ndim == 1
        if squeeze:
            g = g[None]
        m, n = self.components, self.grid.node_count
        if g.shape[:2] != (m, n) and g.shape[0] != m:
            raise InputError(f"field shape {g.shape} incompatible with operator")
        h = self.grid.spacing
        out = np.zeros_like(g)
        d2 = (g[:, :-2] - 2.0 * g[:, 1:-1] + g[:, 2:]) / h**2
        d1 = (g[:, 2:] - g[:, :-2]) / (2.0 * h)
        out[:, 1:-1] = d2 + self.speed * d1
        out[:, 1:-1] += np.einsum("il...,l...->i...", self.potential[:, :, 1:-1], g[:, 1:-1])
        return out[0] if squeeze else out

    def scalar_tridiagonal(self):
        """(diag, upper, lower) of the interior matrix for m = 1."""
        if self.components != 1:
            raise InputError("tridiagonal form only exists for scalar models")
        h = self.grid.spacing
        diag = -2.0 / h**2 + self.potential[0, 0, 1:-1]
        up = 1.0 / h**2 + self.speed / (2.0 * h)
        lo = 1.0 / h**2 - self.speed / (2.0 * h)
        return diag, up, lo


@dataclass
class SpectralData1D:
    psi: np.ndarray                 # (m, N), zero at clamped nodes
    gap: float                      # reported delta (see module docstring)
    eigenvalues_near_zero: np.ndarray
    normalization_check: float      # <psi, phi'>
    zero_eigenvalue: float
    matrix_gap: float
    essential_gap: float
    adjoint_residual: float         # ||L1^T psi||_inf / ||psi||_inf
    eigenvalues: Optional[np.ndarray] = None

    def summary(self) -> dict:
        near = np.asarray(self.eigenvalues_near_zero)
        return {
            "gap": self.gap,
            "matrix_gap": self.matrix_gap,
            "essential_gap": self.essential_gap,
            "zero_eigenvalue": self.zero_eigenvalue,
            "normalization_check": self.normalization_check,
            "adjoint_residual": self.adjoint_residual,
            "eigenvalues_near_zero_real": near.real.tolist(),
            "eigenvalues_near_zero_imag": near.imag.tolist(),
        }


def assemble_L1(profile: WaveProfile, model: ReactionModel) -> DiscreteOperator1D:
    """Banded matrix for L1 on the profile grid with Dirichlet rows."""
    if profile.components != model.components:
        raise InputError("profile/model component mismatch")
    grid = profile.grid
    m, n = model.components, grid.node_count
    h = grid.spacing
    c = profile.speed
    pot = model.jacobian(profile.phi)  # (m, m, N)

    beta = -(2.0 / h**2 + 1.0)
    rows, cols, vals = [], [], []
    j = np.arange(1, n - 1)
    for i in range(m):
        base = i * n
        rows.append(base + j); cols.append(base + j)
        vals.append(np.full(n - 2, -2.0 / h**2))
        rows.append(base + j); cols.append(base + j - 1)
        vals.append(np.full(n - 2, 1.0 / h**2 - c / (2.0 * h)))
        rows.append(base + j); cols.append(base + j + 1)
        vals.append(np.full(n - 2, 1.0 / h**2 + c / (2.0 * h)))
        for l in range(m):
            rows.append(base + j); cols.append(l * n + j)
            vals.append(pot[i, l, 1:-1])
        # Dirichlet rows
        rows.append(np.array([base, base + n - 1]))
        cols.append(np.array([base, base + n - 1]))
        vals.append(np.array([beta, beta]))
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m * n, m * n),
    )
    return DiscreteOperator1D(
        grid=grid,
        components=m,
        speed=c,
        matrix=mat,
        potential=pot,
        boundary_diagonal=beta,
    )


def _symmetrize_scalar(op: DiscreteOperator1D):
    """Diagonal similarity making the scalar interior matrix symmetric.

    Returns (diag, offdiag, log_d) with d_i = exp(log_d[i]) the similarity
    weights; eigenvalues are exactly those of the nonsymmetric matrix.
    """
    diag, up, lo = op.scalar_tridiagonal()
    if up <= 0 or lo <= 0:
        raise InputError("advection too strong for this spacing (|c| h / 2 >= 1/h)")
    n_int = diag.size
    # d_{i+1}/d_i = sqrt(up/lo) makes D A D^{-1} symmetric with off-diagonal
    # sqrt(up*lo); in the continuum limit d ~ e^{c z / 2}.
    log_ratio = 0.5 * np.log(up / lo)
    log_d = log_ratio * np.arange(n_int)
    off = np.full(n_int - 1, np.sqrt(up * lo))
    return diag, off, log_d


def eigenvalues_L1(op: DiscreteOperator1D, dense_limit: int = 2400) -> np.ndarray:
    """All eigenvalues of the interior operator, sorted by descending real part.

    Scalar models use the exact tridiagonal symmetrization (fast, all-real
    spectrum); systems fall back to dense eigensolves up to ``dense_limit``.
    """
    if op.components == 1:
        diag, off, _ = _symmetrize_scalar(op)
        vals = sla.eigvalsh_tridiagonal(diag, off)
        return vals[::-1].astype(complex)
    n_int = op.size - 2 * op.components
    if n_int > dense_limit:
        raise InputError(
            f"dense eigensolve restricted to {dense_limit} interior nodes; "
            f"got {n_int} (use a coarser grid for system models)"
        )
    vals = sla.eigvals(op.interior_matrix().toarray())
    return vals[np.argsort(-vals.real)]


def essential_edge_gap(op: DiscreteOperator1D) -> float:
    """Distance from 0 to the infinite-line essential-spectrum right edge.

    The symbol at each equilibrium is -k^2 + i c k + Df(eq); its real-part
    maximum over k is attained at k = 0, so the edge is the largest real
    part of the equilibrium Jacobian eigenvalues (taken from the clamped
    end values of the potential).
    """
    edge = -np.inf
    for sl in (0, -1):
        jac = op.potential[:, :, sl]
        edge = max(edge, float(np.max(np.linalg.eigvals(jac).real)))
    return -edge


def compute_adjoint_zero_mode(
    op: DiscreteOperator1D,
    profile: WaveProfile,
    zero_tol: float = ZERO_TOL,
    keep_spectrum: bool = True,
) -> SpectralData1D:
    """Adjoint zero mode, normalization and spectral-gap measurement.

    Raises AssumptionError when the discrete eigenvalue at zero is not
    simple (the standing spectral assumption fails for this model/grid).
    """
    grid = op.grid
    m, n = op.components, grid.node_count
    eigs = eigenvalues_L1(op)
    near_zero = eigs[np.abs(eigs) <= zero_tol]
    if near_zero.size != 1:
        raise AssumptionError(
            f"eigenvalue at zero must be simple; found {near_zero.size} "
            f"eigenvalues with |lambda| <= {zero_tol}"
        )
    zero_eig = float(near_zero[0].real)
    others = eigs[np.abs(eigs) > zero_tol]
    matrix_gap = float(-others.real.max()) if others.size else np.inf
    ess_gap = essential_edge_gap(op)
    gap = min(matrix_gap, ess_gap)
    if gap <= 0:
        raise AssumptionError(f"no spectral gap: measured gap {gap}")

    interior = op.interior_indices()
    if op.components == 1:
        diag, off, log_d = _symmetrize_scalar(op)
        n_int = diag.size
        vals, vecs = sla.eigh_tridiagonal(
            diag, off, select="i", select_range=(n_int - 1, n_int - 1)
        )
        v_sym = vecs[:, 0]
        # A^T = D A_sym D^{-1}, so the left eigenvector is D v_sym.
        log_psi = log_d - log_d.max()
        psi_int = v_sym * np.exp(log_psi)
    else:
        a_t = op.interior_matrix().T.tocsc()
        shift = 1e-12 * abs(op.boundary_diagonal)
        try:
            lu = spla.splu(a_t + shift * sp.identity(a_t.shape[0], format="csc"))
        except RuntimeError as exc:
            raise SingularityError(f"adjoint factorization failed: {exc}") from exc
        x = profile.phi_prime.reshape(-1)[interior].copy()
        x /= np.linalg.norm(x)
        for _ in range(3):
            x = lu.solve(x)
            x /= np.linalg.norm(x)
        psi_int = x

    psi = np.zeros(m * n)
    psi[interior] = psi_int
    psi = psi.reshape(m, n)
    scale = grid.inner(psi, profile.phi_prime)
    if abs(scale) < 1e-14:
        raise AssumptionError("adjoint zero mode is orthogonal to phi'")
    psi = psi / scale

    resid = op_transpose_apply(op, psi)
    adj_res = float(np.max(np.abs(resid)) / np.max(np.abs(psi)))
    near = eigs[np.argsort(np.abs(eigs))][:16]
    return SpectralData1D(
        psi=psi,
        gap=gap,
        eigenvalues_near_zero=np.asarray(near),
        normalization_check=float(grid.inner(psi, profile.phi_prime)),
        zero_eigenvalue=zero_eig,
        matrix_gap=matrix_gap,
        essential_gap=ess_gap,
        adjoint_residual=adj_res,
        eigenvalues=eigs if keep_spectrum else None,
    )


def op_transpose_apply(op: DiscreteOperator1D, g: np.ndarray) -> np.ndarray:
    """Apply the transpose of the interior matrix to a full field."""
    m, n = op.components, op.grid.node_count
    g = np.asarray(g, dtype=float).reshape(m * n)
    interior = op.interior_indices()
    out = np.zeros(m * n)
    out[interior] = op.interior_matrix().T @ g[interior]
    return out.reshape(m, n)


def project_Q0(spec: SpectralData1D, g: np.ndarray, profile: WaveProfile) -> np.ndarray:
    """Spectral complement Q0 g = g - <psi, g> phi' (columnwise over trailing axes)."""
    g = np.asarray(g, dtype=float)
    squeeze = g.ndim == 1
    if squeeze:
        g = g[None]
    w = profile.grid.trapezoid_weights
    coef = np.einsum("iz...,iz,z->...", g, spec.psi, w)
    out = g - np.multiply.outer(profile.phi_prime, coef).reshape(g.shape)
    return out[0] if squeeze else out


def project_P0(spec: SpectralData1D, g: np.ndarray, profile: WaveProfile) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    return g - project_Q0(spec, g, profile)


class _ImplicitPropagator:
    """Backward-Euler propagator for e^{s L1} with a cached factorization."""

    def __init__(self, op: DiscreteOperator1D, dt: float):
        self.op = op
        self.dt = dt
        n_int = op.size - 2 * op.components
        eye = sp.identity(n_int, format="csc")
        self.lu = spla.splu((eye - dt * op.interior_matrix()).tocsc())

    def advance(self, g_int: np.ndarray, nsteps: int) -> np.ndarray:
        for _ in range(nsteps):
            g_int = self.lu.solve(g_int)
        return g_int


def apply_semigroup_L1(
    op: DiscreteOperator1D, s: float, g: np.ndarray, dt_target: float = 0.01
) -> np.ndarray:
    """e^{s L1} g by one-sided theta stepping (theta = 1), step adapted to s."""
    if s < 0:
        raise InputError("semigroup time must be nonnegative")
    g = np.asarray(g, dtype=float)
    if s == 0:
        return g.copy()
    traj = semigroup_trajectory(op, [s], g, dt_target=dt_target)
    return traj[0]


def semigroup_trajectory(
    op: DiscreteOperator1D, s_points, g: np.ndarray, dt_target: float = 0.01
) -> list:
    """e^{s L1} g at each requested s, integrating a single path."""
    s_points = list(s_points)
    if any(s < 0 for s in s_points):
        raise InputError("semigroup times must be nonnegative")
    order = np.argsort(s_points)
    m, n = op.components, op.grid.node_count
    g = np.asarray(g, dtype=float).reshape(m * n)
    interior = op.interior_indices()
    cur = g[interior].copy()
    out = [None] * len(s_points)
    s_prev = 0.0
    cache = {}
    for k in order:
        seg = s_points[k] - s_prev
        if seg > 0:
            nsteps = max(1, int(np.ceil(seg / dt_target)))
            dt = seg / nsteps
            key = round(dt, 14)
            if key not in cache:
                cache[key] = _ImplicitPropagator(op, dt)
            cur = cache[key].advance(cur, nsteps)
        full = np.zeros(m * n)
        full[interior] = cur
        out[k] = full.reshape(m, n)
        s_prev = s_points[k]
    return out


def solve_L1_inverse_Q0(
    op: DiscreteOperator1D, spec: SpectralData1D, g: np.ndarray, profile: WaveProfile
) -> np.ndarray:
    """The unique h with L1 h = Q0 g and <psi, h> = 0.

    Solved through a bordered system that deflates the translation mode, so
    the near-null direction cannot be amplified by the tiny discrete zero
    eigenvalue.
    """
    m, n = op.components, op.grid.node_count
    rhs_full = project_Q0(spec, np.asarray(g, dtype=float).reshape(m, n), profile)
    interior = op.interior_indices()
    a_int = op.interior_matrix()
    n_int = a_int.shape[0]
    w = profile.grid.trapezoid_weights
    psi_w = (spec.psi * w).reshape(-1)[interior]
    phi_p = profile.phi_prime.reshape(-1)[interior]
    bordered = sp.bmat(
        [[a_int, phi_p[:, None]], [psi_w[None, :], None]], format="csc"
    )
    rhs = np.concatenate([rhs_full.reshape(-1)[interior], [0.0]])
    try:
        sol = spla.splu(bordered).solve(rhs)
    except RuntimeError as exc:
        raise SingularityError(f"deflated solve failed: {exc}") from exc
    h = np.zeros(m * n)
    h[interior] = sol[:-1]
    return h.reshape(m, n)


def _h1_cholesky(op: DiscreteOperator1D):
    """Upper Cholesky factor of the discrete (1 - d_zz) weight on the interior."""
    n_int = op.size - 2 * op.components
    if op.components != 1:
        raise InputError("resolvent sweep implemented for scalar models")
    h = op.grid.spacing
    main = np.full(n_int, 1.0 + 2.0 / h**2)
    off = np.full(n_int - 1, -1.0 / h**2)
    ab = np.zeros((2, n_int))
    ab[0, 1:] = off
    ab[1] = main
    return sla.cholesky_banded(ab, lower=False)


def resolvent_norm_sweep(
    op: DiscreteOperator1D,
    delta1: float,
    mu_grid,
    dense_limit: int = 1300,
    singular_threshold: float = 1e8,
) -> np.ndarray:
    """H1 -> H1 norms of (L1 + delta1 + i mu)^{-1} over a grid of mu.

    The H1 operator norm is the largest singular value of the resolvent
    conjugated by the Cholesky factor of the discrete (1 - d_zz) weight.
    """
    mu_grid = np.asarray(mu_grid, dtype=float)
    n_int = op.size - 2 * op.components
    if n_int > dense_limit:
        raise InputError(
            f"resolvent sweep uses dense factorizations; interior size {n_int} "
            f"exceeds {dense_limit}"
        )
    a_dense = op.interior_matrix().toarray()
    rb = _h1_cholesky(op)
    # Expand the banded Cholesky factor to dense triangular form once.
    r_dense = np.zeros((n_int, n_int))
    r_dense[np.arange(n_int), np.arange(n_int)] = rb[1]
    r_dense[np.arange(n_int - 1), np.arange(1, n_int)] = rb[0, 1:]
    out = np.empty(mu_grid.size)
    eye = np.eye(n_int)
    r_inv = sla.solve_triangular(r_dense, eye, lower=False)
    for k, mu in enumerate(mu_grid):
        shifted = a_dense + (delta1 + 1j * mu) * eye
        try:
            res = np.linalg.solve(shifted, eye)
        except np.linalg.LinAlgError:
            warnings.warn(f"resolvent shift mu={mu} is singular", stacklevel=2)
            out[k] = np.inf
            continue
        conj = r_dense @ res @ r_inv
        out[k] = sla.svdvals(conj)[0]
        if out[k] > singular_threshold:
            warnings.warn(
                f"resolvent norm {out[k]:.2e} at mu={mu}: shift nearly on the spectrum",
                stacklevel=2,
            )
    return out


def resolvent_norm_sup(op: DiscreteOperator1D, delta1: float, mu_grid) -> float:
    """Sup over the mu grid of the H1 resolvent norm along Re = -delta1."""
    return float(np.max(resolvent_norm_sweep(op, delta1, mu_grid)))
