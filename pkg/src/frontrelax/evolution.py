"""Time integration of the moving-frame PDE and modulation diagnostics.

The full equation  u_t = Delta u + c u_z + f(u)  is evolved for n = 2 (one
transverse axis) in the deviation w = u - phi, which makes the unperturbed
front an exact fixed point of the discrete step.

Two splitting schemes are available:

  * "strang" (default): the banded implicit z-solve carries the full
    frozen linearization d_zz + c d_z + Df(phi(z)) by Crank-Nicolson, the
    transverse diffusion is the exact Fourier multiplier, and only the
    quadratic reaction remainder f(phi+w) - f(phi) - Df(phi) w is stepped
    explicitly, wrapped Strang-style.  Keeping the linearization in one
    rational solve preserves the neutral translation mode exactly: split
    any linear piece into the explicit stage and its commutator with the
    diffusion gives every front translate a spurious O(dt^2) phase
    relaxation, which cuts off the measured power laws long before the
    fit window ends.

  * "imex1": plain first-order splitting with the whole reaction f(u)
    explicit and only diffusion/advection implicit (backward Euler).  Kept
    as the step-halving cross-check; its Richardson ratio is 2.

Snapshots are decomposed into (sigma, v) and a norm ledger is recorded;
the modulation nonlinearities are evaluated only as diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .decomposition import (
    DEFAULT_ADMISSIBILITY,
    DecompositionResult,
    Field,
    ProfileInterpolant,
    column_h1_norms,
    column_inner,
    decompose,
)
from .errors import (
    ConfigError,
    DegenerateDenominatorError,
    InputError,
    StabilityError,
    ValidityError,
)
from .grids import Grid1D, TransverseGrid
from .profile import WaveProfile
from .reaction import ReactionModel
from .spectral import SpectralData1D, project_Q0

SCHEMES = ("strang", "imex1")


def geometric_ladder(t_final: float, t_start: float = 1.0, ratio: float = 2.0**0.25):
    """Snapshot times t_start * ratio^k up to t_final."""
    if t_final < t_start:
        raise InputError("t_final must be >= t_start")
    count = int(np.floor(np.log(t_final / t_start) / np.log(ratio) + 1e-12)) + 1
    return t_start * ratio ** np.arange(count)


@dataclass
class EvolutionConfig:
    dt: float
    t_final: float
    snapshot_times: np.ndarray = None
    scheme: str = "strang"
    epsilon: float = 0.01
    sigma0_shape: dict = field(default_factory=lambda: {"kind": "gaussian", "width": 3.0})
    v0_shape: dict = field(default_factory=lambda: {"kind": "none"})
    weight_m: float = 2.5          # L^2(m) weight for the v ledger
    weight_m_tilde: tuple = (0.0, 0.25)  # sigma weighted-ledger exponents
    admissibility: float = DEFAULT_ADMISSIBILITY

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}", path="evolution.scheme")
        if self.dt <= 0:
            raise ConfigError("dt must be positive", path="evolution.dt")
        if self.snapshot_times is None:
            self.snapshot_times = geometric_ladder(self.t_final)
        self.snapshot_times = np.asarray(self.snapshot_times, dtype=float)
        if np.any(np.diff(self.snapshot_times) <= 0):
            raise ConfigError("snapshot times must increase", path="evolution.snapshot_times")
        if self.snapshot_times[-1] > self.t_final * (1 + 1e-12):
            raise ConfigError("snapshots exceed t_final", path="evolution.snapshot_times")

    def validate_against(self, grid_y: TransverseGrid, model: ReactionModel):
        horizon = grid_y.validity_horizon()
        if self.t_final > horizon:
            raise ConfigError(
                f"t_final {self.t_final} beyond torus validity horizon {horizon:.1f} "
                "(diffusive width reaches the box scale)",
                path="evolution.t_final",
            )
        lip = _reaction_lipschitz(model)
        if self.dt * lip > 0.5:
            raise ConfigError(
                f"dt {self.dt} exceeds the explicit-reaction bound {0.5 / lip:.3g}",
                path="evolution.dt",
            )


def _reaction_lipschitz(model: ReactionModel) -> float:
    """Crude bound on |Df| over the range spanned by the equilibria."""
    lo = np.minimum(*model.equilibria) - 0.5
    hi = np.maximum(*model.equilibria) + 0.5
    samples = np.linspace(lo, hi, 64).T  # (m, 64)
    jac = model.jacobian(samples)
    return float(np.max(np.sum(np.abs(jac), axis=1)))


def make_transverse_bump(grid_y: TransverseGrid, shape: dict) -> np.ndarray:
    """Perturbation profile on the transverse grid from a config descriptor.

    Kinds: ``gaussian`` (unit mass after discrete normalization),
    ``dgaussian`` (derivative of a Gaussian: exactly mean-zero),
    ``none`` (zeros).  ``normalize`` may be "mass" (default for gaussian)
    or "sup".
    """
    kind = shape.get("kind", "gaussian")
    if kind == "none":
        return np.zeros(grid_y.shape)
    width = float(shape.get("width", 3.0))
    center = float(shape.get("center", 0.0))
    r2 = sum((ax - center) ** 2 for ax in grid_y.meshgrid())
    bump = np.exp(-r2 / (2.0 * width**2))
    if kind == "gaussian":
        norm = shape.get("normalize", "mass")
    elif kind == "dgaussian":
        axis0 = grid_y.meshgrid()[0] - center
        bump = -axis0 / width**2 * bump
        norm = shape.get("normalize", "sup")
    else:
        raise ConfigError(f"unknown bump kind {kind!r}", path="sigma0_shape.kind")
    if norm == "mass":
        mass = grid_y.integrate(bump)
        if abs(mass) < 1e-14:
            raise InputError("cannot mass-normalize a mean-zero bump")
        return bump / mass
    if norm == "sup":
        return bump / np.max(np.abs(bump))
    raise ConfigError(f"unknown normalization {norm!r}", path="sigma0_shape.normalize")


def make_initial_data(
    profile: WaveProfile,
    spec: SpectralData1D,
    sigma0: np.ndarray,
    v0: Optional[np.ndarray],
    eps: float,
    grid_y: TransverseGrid,
    interpolant: Optional[ProfileInterpolant] = None,
    model: Optional[ReactionModel] = None,
    admissibility: float = DEFAULT_ADMISSIBILITY,
) -> Field:
    """u0 - phi = phi(z - eps sigma0(y)) - phi(z) + eps Q0 v0.

    The shapes arrive O(1)-normalized; eps carries the smallness.  v0 is
    projected onto the Q0 range columnwise before scaling.
    """
    if interpolant is None:
        if model is None:
            raise InputError("make_initial_data needs an interpolant or the model")
        interpolant = ProfileInterpolant(profile, model)
    sigma0 = np.asarray(sigma0, dtype=float)
    if sigma0.shape != grid_y.shape:
        raise InputError(f"sigma0 shape {sigma0.shape} != {grid_y.shape}")
    if eps < 0 or eps * np.max(np.abs(sigma0)) >= admissibility:
        raise InputError(
            f"eps {eps} with |sigma0| {np.max(np.abs(sigma0)):.3g} exceeds the "
            f"admissibility threshold {admissibility}"
        )
    if eps == 0.0:
        w = np.zeros((profile.components, profile.grid.node_count) + grid_y.shape)
    else:
        w = (interpolant.shifted(eps * sigma0)
             - profile.phi[(...,) + (None,) * sigma0.ndim])
    if v0 is not None:
        v0 = np.asarray(v0, dtype=float)
        if v0.shape != (profile.components, profile.grid.node_count) + grid_y.shape:
            raise InputError("v0 shape mismatch")
        w = w + eps * project_Q0(spec, v0, profile)
    out = Field(w, profile.grid, grid_y)
    smallness = float(np.max(column_h1_norms(profile.grid, out.values)))
    if smallness >= admissibility:
        raise InputError(
            f"initial data outside the admissible ball: {smallness:.3g}"
        )
    return out


class _Stepper:
    """Cached factorizations for one (profile, grid_y, dt, scheme) combination."""

    def __init__(self, profile, model, grid_y, dt, scheme):
        if grid_y.dimension != 1:
            raise InputError("full-field evolution is implemented for one transverse axis")
        self.profile = profile
        self.model = model
        self.grid_y = grid_y
        self.dt = dt
        self.scheme = scheme
        gz = profile.grid
        nz = gz.node_count
        h = gz.spacing
        c = profile.speed
        m = profile.components

        j = np.arange(1, nz - 1)
        rows = [np.repeat(np.arange(m) * nz, nz - 2) + np.tile(j, m)] * 3
        cols = [rows[0] - 1, rows[0], rows[0] + 1]
        vals = [
            np.full(m * (nz - 2), 1.0 / h**2 - c / (2.0 * h)),
            np.full(m * (nz - 2), -2.0 / h**2),
            np.full(m * (nz - 2), 1.0 / h**2 + c / (2.0 * h)),
        ]
        self.jac_phi = model.jacobian(profile.phi)  # (m, m, nz)
        if scheme == "strang":
            # frozen linearization rides in the implicit solve
            for i in range(m):
                for l in range(m):
                    rows.append(i * nz + j)
                    cols.append(l * nz + j)
                    vals.append(self.jac_phi[i, l, 1:-1])
        a_z = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m * nz, m * nz),
        )
        eye = sp.identity(m * nz, format="csc")
        if scheme == "imex1":
            self.solve_z = spla.splu((eye - dt * a_z).tocsc())
            self.rhs_z = None
        else:
            self.solve_z = spla.splu((eye - 0.5 * dt * a_z).tocsc())
            self.rhs_z = (eye + 0.5 * dt * a_z).tocsr()

        k = 2.0 * np.pi * np.fft.rfftfreq(grid_y.node_count, d=grid_y.spacing)
        self.y_mult = np.exp(-dt * k**2)
        self.f_phi = model.f(profile.phi)  # (m, nz)
        eq_scale = max(1.0, max(np.max(np.abs(e)) for e in model.equilibria))
        self.blowup_level = 10.0 * eq_scale

    def _reaction(self, w, dt):
        full = (self.model.f(self.profile.phi[..., None] + w)
                - self.f_phi[..., None])
        if self.scheme == "strang":
            full = full - np.einsum("ilz,lzy->izy", self.jac_phi, w)
        return dt * full

    def _linear(self, w):
        w = np.fft.irfft(self.y_mult[None, None, :] * np.fft.rfft(w, axis=2),
                         n=self.grid_y.node_count, axis=2)
        m, nz, ny = w.shape
        flat = w.reshape(m * nz, ny)
        if self.rhs_z is not None:
            flat = self.rhs_z @ flat
        flat = self.solve_z.solve(flat)
        return flat.reshape(m, nz, ny)

    def step(self, w):
        if self.scheme == "imex1":
            w = w + self._reaction(w, self.dt)
            w = self._linear(w)
        else:
            w = w + self._reaction(w, 0.5 * self.dt)
            w = self._linear(w)
            w = w + self._reaction(w, 0.5 * self.dt)
        peak = float(np.max(np.abs(self.profile.phi[..., None] + w)))
        if peak > self.blowup_level:
            raise StabilityError(
                f"solution reached {peak:.3g}, beyond {self.blowup_level:.3g}"
            )
        return w


_STEPPER_CACHE: dict = {}


def _stepper_for(profile, model, grid_y, dt, scheme):
    key = (id(profile), id(model), grid_y, round(dt, 15), scheme)
    stepper = _STEPPER_CACHE.get(key)
    if stepper is None:
        stepper = _Stepper(profile, model, grid_y, dt, scheme)
        if len(_STEPPER_CACHE) > 64:
            _STEPPER_CACHE.clear()
        _STEPPER_CACHE[key] = stepper
    return stepper


def step(state: Field, profile: WaveProfile, model: ReactionModel, dt: float,
         scheme: str = "strang") -> Field:
    """Advance u - phi by one splitting step."""
    if scheme not in SCHEMES:
        raise InputError(f"unknown scheme {scheme!r}")
    stepper = _stepper_for(profile, model, state.grid_y, dt, scheme)
    return Field(stepper.step(state.values), state.grid_z, state.grid_y)


@dataclass
class Snapshot:
    t: float
    ledger: dict
    decomposition: Optional[DecompositionResult] = None
    w: Optional[Field] = None


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list

    def ledger_table(self) -> dict:
        keys = self.snapshots[0].ledger.keys()
        return {k: np.array([s.ledger[k] for s in self.snapshots]) for k in keys}


def _snapshot_ledger(dec: DecompositionResult, grid_z, grid_y, cfg: EvolutionConfig):
    sigma = dec.sigma
    v = dec.v.values
    k = 2.0 * np.pi * np.fft.rfftfreq(grid_y.node_count, d=grid_y.spacing)
    grad_sigma = np.fft.irfft(1j * k * np.fft.rfft(sigma), n=grid_y.node_count)
    y2 = grid_y.radius_squared()
    h1_cols = column_h1_norms(grid_z, v)
    weight = (1.0 + y2) ** cfg.weight_m
    ledger = {
        "sup_sigma": float(np.max(np.abs(sigma))),
        "sup_grad_sigma": float(np.max(np.abs(grad_sigma))),
        "sup_v": float(np.max(np.abs(v))),
        "v_l2m_h1z": float(np.sqrt(np.sum(weight * h1_cols**2) * grid_y.cell_volume)),
        "v_supy_h1z": float(np.max(h1_cols)),
    }
    for mt in cfg.weight_m_tilde:
        wmt = (1.0 + y2) ** mt
        ledger[f"sigma_l2_m{mt:g}"] = float(
            np.sqrt(np.sum(wmt * sigma**2) * grid_y.cell_volume)
        )
    return ledger


def evolve(
    w0: Field,
    config: EvolutionConfig,
    profile: WaveProfile,
    model: ReactionModel,
    spec: SpectralData1D,
    interpolant: Optional[ProfileInterpolant] = None,
    keep_fields: bool = False,
    callback: Optional[Callable] = None,
) -> Trajectory:
    """March to every snapshot time, decompose and record the norm ledger.

    ``callback(snapshot)`` runs after each snapshot is assembled (the rate
    experiments compute their scaling ledgers there).  Step and
    decomposition failures are re-raised with the failing time attached.
    """
    config.validate_against(w0.grid_y, model)
    if interpolant is None:
        interpolant = ProfileInterpolant(profile, model)
    stepper_args = (profile, model, w0.grid_y)
    w = w0.values.copy()
    t = 0.0
    snapshots = []
    for t_snap in config.snapshot_times:
        seg = t_snap - t
        nsteps = max(1, int(np.ceil(seg / config.dt - 1e-9)))
        dt = seg / nsteps
        stepper = _stepper_for(*stepper_args, dt, config.scheme)
        try:
            for _ in range(nsteps):
                w = stepper.step(w)
        except StabilityError as exc:
            raise StabilityError(f"t={t_snap:g}: {exc}") from exc
        t = t_snap
        w_field = Field(w, w0.grid_z, w0.grid_y)
        try:
            dec = decompose(
                profile, spec, w_field, interpolant=interpolant,
                admissibility=config.admissibility,
            )
        except InputError as exc:
            raise ValidityError(f"t={t:g}: decomposition inadmissible: {exc}") from exc
        ledger = _snapshot_ledger(dec, w0.grid_z, w0.grid_y, config)
        snap = Snapshot(
            t=t, ledger=ledger, decomposition=dec,
            w=w_field if keep_fields else None,
        )
        if callback is not None:
            callback(snap)
        if not keep_fields:
            snap.w = None
        snapshots.append(snap)
    return Trajectory(times=config.snapshot_times.copy(), snapshots=snapshots)


def eval_nonlinearities(
    profile: WaveProfile,
    spec: SpectralData1D,
    model: ReactionModel,
    sigma: np.ndarray,
    v: Field,
    interpolant: Optional[ProfileInterpolant] = None,
):
    """Modulation nonlinearities (H, N1, N2) at one snapshot.

    H(phi_s, v) = f(v + phi_s) - f(phi_s) - Df(phi_s) v,
    N2 = K1(sigma) |grad_y sigma|^2
         - K2(sigma) ( <psi, H> + <psi, (Df(phi_s) - Df(phi)) v> ),
    N1 = N2 phi'_s + (Df(phi_s) - Df(phi)) v + |grad_y sigma|^2 phi''_s,

    with K1 = -<psi, phi''_s>/<psi, phi'_s> and K2 = 1/<psi, phi'_s>.
    The sign of the K2 bracket in N2 follows from projecting the modulated
    equation with psi (the constraint d/dt <psi, v> = 0).
    """
    if interpolant is None:
        interpolant = ProfileInterpolant(profile, model)
    grid_z = profile.grid
    grid_y = v.grid_y
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != grid_y.shape:
        raise InputError(f"sigma shape {sigma.shape} != {grid_y.shape}")
    phi_s = interpolant.shifted(sigma)
    dphi_s = interpolant.shifted(sigma, deriv=1)
    d2phi_s = interpolant.shifted(sigma, deriv=2)

    denom = column_inner(grid_z, spec.psi, dphi_s)
    if np.min(np.abs(denom)) < 0.5 * abs(spec.normalization_check):
        raise DegenerateDenominatorError(
            "modulation denominator <psi, phi'(. - sigma)> below 1/2"
        )
    k1 = -column_inner(grid_z, spec.psi, d2phi_s) / denom
    k2 = 1.0 / denom

    vv = v.values
    jac_s = model.jacobian(phi_s)
    jac_0 = model.jacobian(profile.phi)[(...,) + (None,) * sigma.ndim]
    h_field = (model.f(vv + phi_s) - model.f(phi_s)
               - np.einsum("il...,l...->i...", jac_s, vv))
    delta_jac_v = np.einsum("il...,l...->i...", jac_s - jac_0, vv)

    grads = _transverse_gradient(grid_y, sigma)
    grad_sq = sum(g**2 for g in grads)

    n2 = k1 * grad_sq - k2 * (
        column_inner(grid_z, spec.psi, h_field)
        + column_inner(grid_z, spec.psi, delta_jac_v)
    )
    n1 = n2 * dphi_s + delta_jac_v + grad_sq * d2phi_s
    return h_field, n1, n2


def _transverse_gradient(grid_y: TransverseGrid, f: np.ndarray) -> list:
    k = 2.0 * np.pi * np.fft.fftfreq(grid_y.node_count, d=grid_y.spacing)
    grads = []
    for ax in range(-grid_y.dimension, 0):
        fhat = np.fft.fft(f, axis=ax)
        shape = [1] * f.ndim
        shape[ax] = k.size
        grads.append(np.fft.ifft(fhat * (1j * k).reshape(shape), axis=ax).real)
    return grads
