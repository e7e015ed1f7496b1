"""Reaction nonlinearities with analytic derivatives up to third order.

A model bundles f, Df, the quadratic form D2f(u)[v,v] and the cubic form
D3f(u)[v,v,v], the two equilibria the front connects, and (when available)
a closed-form front used as an oracle.  All maps are vectorized over
trailing axes: states are shaped (m, ...) with the component axis first.

Derivatives are supplied analytically per model; finite differences are
used only as cross-checks in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class ExactFront:
    """Closed-form front (phi, phi', phi'') with its speed and tail rate."""

    phi: Callable[[np.ndarray], np.ndarray]
    phi_prime: Callable[[np.ndarray], np.ndarray]
    phi_double_prime: Callable[[np.ndarray], np.ndarray]
    speed: float
    tail_rate: float


@dataclass(frozen=True)
class ReactionModel:
    components: int
    f: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    hessian_form: Callable[[np.ndarray, np.ndarray], np.ndarray]
    third_form: Callable[[np.ndarray, np.ndarray], np.ndarray]
    equilibria: tuple  # (phi_minus, phi_plus), each shape (m,)
    exact_front: Optional[ExactFront] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def check_state(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.ndim == 0 or u.shape[0] != self.components:
            raise InputError(
                f"state must have leading component axis of size {self.components}, "
                f"got shape {u.shape}"
            )
        return u


def eval_reaction(model: ReactionModel, u) -> np.ndarray:
    """Evaluate f(u); the right-hand-side reaction term."""
    return model.f(model.check_state(u))


def eval_taylor_error(model: ReactionModel, base, v) -> np.ndarray:
    """Cubic-and-higher Taylor remainder of f at ``base``.

    E(v) = f(base+v) - f(base) - Df(base) v - (1/2) D2f(base)[v,v].
    For a cubic scalar reaction this is the exact cubic term.
    """
    base = model.check_state(base)
    v = model.check_state(v)
    jac = model.jacobian(base)
    lin = np.einsum("ij...,j...->i...", jac, v)
    return model.f(base + v) - model.f(base) - lin - 0.5 * model.hessian_form(base, v)


def _poly_eval(c, u):
    """Evaluate sum_k c[k] u^k with c ordered by ascending power."""
    out = np.zeros_like(u)
    for ck in reversed(c):
        out = out * u + ck
    return out


def bistable_model(a: float) -> ReactionModel:
    """Scalar bistable reaction f(u) = u(1-u)(u-a) with 0 < a < 1/2.

    The front connecting 1 to 0 is exactly phi(z) = (1 + exp(z/sqrt2))^(-1)
    with speed c = sqrt2 (1/2 - a); both tails decay at exactly 1/sqrt2.
    a = 1/2 is the symmetric zero-speed case (self-adjoint linearization).
    """
    if not 0.0 < a <= 0.5:
        raise InputError(f"bistable parameter must satisfy 0 < a <= 1/2, got {a}")

    # f expanded: -u^3 + (1+a) u^2 - a u
    coeffs = np.array([0.0, -a, 1.0 + a, -1.0])
    dcoeffs = np.array([-a, 2.0 * (1.0 + a), -3.0])
    ddcoeffs = np.array([2.0 * (1.0 + a), -6.0])

    def f(u):
        return _poly_eval(coeffs, u)

    def jacobian(u):
        return _poly_eval(dcoeffs, u)[None]

    def hessian_form(u, v):
        return _poly_eval(ddcoeffs, u) * v * v

    def third_form(u, v):
        return -6.0 * v * v * v

    s = 1.0 / np.sqrt(2.0)

    def phi(z):
        # (1 + e^{z/sqrt2})^{-1} written through tanh for overflow safety
        return 0.5 * (1.0 - np.tanh(0.5 * s * z))[None]

    def phi_prime(z):
        return (-0.25 * s / np.cosh(0.5 * s * z) ** 2)[None]

    def phi_double_prime(z):
        x = 0.5 * s * z
        return (0.125 * np.tanh(x) / np.cosh(x) ** 2)[None]

    front = ExactFront(
        phi=phi,
        phi_prime=phi_prime,
        phi_double_prime=phi_double_prime,
        speed=float(np.sqrt(2.0) * (0.5 - a)),
        tail_rate=s,
    )
    return ReactionModel(
        components=1,
        f=f,
        jacobian=jacobian,
        hessian_form=hessian_form,
        third_form=third_form,
        equilibria=(np.array([1.0]), np.array([0.0])),
        exact_front=front,
        name="bistable",
        params={"a": a},
    )


def polynomial_model(
    components: int,
    terms: list,
    equilibria: tuple,
    name: str = "polynomial",
) -> ReactionModel:
    """Reaction from a monomial table, one entry per term.

    Each term is a dict {"target": i, "coeff": c, "powers": [p_1..p_m]}
    contributing c * prod_j u_j^{p_j} to component i.  Derivatives are
    assembled analytically from the monomials.
    """
    m = components
    parsed = []
    for k, term in enumerate(terms):
        try:
            tgt = int(term["target"])
            coeff = float(term["coeff"])
            powers = np.asarray(term["powers"], dtype=int)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"terms[{k}] malformed: {exc}") from exc
        if not 0 <= tgt < m:
            raise InputError(f"terms[{k}].target out of range for m={m}")
        if powers.shape != (m,) or np.any(powers < 0):
            raise InputError(f"terms[{k}].powers must be {m} nonnegative integers")
        parsed.append((tgt, coeff, powers))

    def _monomial(u, powers):
        out = np.ones_like(u[0])
        for j in range(m):
            if powers[j]:
                out = out * u[j] ** powers[j]
        return out

    def f(u):
        out = np.zeros_like(u)
        for tgt, coeff, powers in parsed:
            out[tgt] += coeff * _monomial(u, powers)
        return out

    def jacobian(u):
        out = np.zeros((m,) + u.shape, dtype=float)
        for tgt, coeff, powers in parsed:
            for j in range(m):
                if powers[j]:
                    dp = powers.copy()
                    dp[j] -= 1
                    out[tgt, j] += coeff * powers[j] * _monomial(u, dp)
        return out

    def hessian_form(u, v):
        out = np.zeros_like(u)
        for tgt, coeff, powers in parsed:
            for j in range(m):
                if not powers[j]:
                    continue
                for l in range(m):
                    pl = powers[l] - (1 if l == j else 0)
                    if pl <= 0:
                        continue
                    dp = powers.copy()
                    dp[j] -= 1
                    dp[l] -= 1
                    out[tgt] += coeff * powers[j] * pl * _monomial(u, dp) * v[j] * v[l]
        return out

    def third_form(u, v):
        out = np.zeros_like(u)
        for tgt, coeff, powers in parsed:
            for j in range(m):
                if not powers[j]:
                    continue
                for l in range(m):
                    pl = powers[l] - (1 if l == j else 0)
                    if pl <= 0:
                        continue
                    for q in range(m):
                        pq = powers[q] - (1 if q == j else 0) - (1 if q == l else 0)
                        if pq <= 0:
                            continue
                        dp = powers.copy()
                        dp[j] -= 1
                        dp[l] -= 1
                        dp[q] -= 1
                        out[tgt] += (
                            coeff * powers[j] * pl * pq
                            * _monomial(u, dp) * v[j] * v[l] * v[q]
                        )
        return out

    phi_minus = np.asarray(equilibria[0], dtype=float).reshape(m)
    phi_plus = np.asarray(equilibria[1], dtype=float).reshape(m)
    return ReactionModel(
        components=m,
        f=f,
        jacobian=jacobian,
        hessian_form=hessian_form,
        third_form=third_form,
        equilibria=(phi_minus, phi_plus),
        name=name,
    )


def double_bistable_model(a: float) -> ReactionModel:
    """Two decoupled bistable components; used to exercise the m > 1 paths.

    Shares the scalar front componentwise, so (phi, phi) with the scalar
    speed is an exact profile; the linearization has a double eigenvalue
    at zero, which the spectral module must reject.
    """
    terms = []
    for i in range(2):
        for power, coeff in ((1, -a), (2, 1.0 + a), (3, -1.0)):
            p = [0, 0]
            p[i] = power
            terms.append({"target": i, "coeff": coeff, "powers": p})
    model = polynomial_model(
        2,
        terms,
        equilibria=(np.array([1.0, 1.0]), np.array([0.0, 0.0])),
        name="double_bistable",
    )
    scalar = bistable_model(a)

    def phi(z):
        return np.repeat(scalar.exact_front.phi(z), 2, axis=0)

    def phi_prime(z):
        return np.repeat(scalar.exact_front.phi_prime(z), 2, axis=0)

    def phi_double_prime(z):
        return np.repeat(scalar.exact_front.phi_double_prime(z), 2, axis=0)

    front = ExactFront(
        phi=phi,
        phi_prime=phi_prime,
        phi_double_prime=phi_double_prime,
        speed=scalar.exact_front.speed,
        tail_rate=scalar.exact_front.tail_rate,
    )
    return ReactionModel(
        components=2,
        f=model.f,
        jacobian=model.jacobian,
        hessian_form=model.hessian_form,
        third_form=model.third_form,
        equilibria=model.equilibria,
        exact_front=front,
        name="double_bistable",
        params={"a": a},
    )


def model_from_config(cfg: dict) -> ReactionModel:
    """Build a model from a config mapping (see the config schema)."""
    kind = cfg.get("name")
    if kind == "bistable":
        return bistable_model(float(cfg.get("a", 0.25)))
    if kind == "double_bistable":
        return double_bistable_model(float(cfg.get("a", 0.25)))
    if kind == "polynomial":
        for key in ("components", "terms", "equilibria"):
            if key not in cfg:
                raise InputError(f"polynomial model config missing '{key}'")
        return polynomial_model(
            int(cfg["components"]),
            cfg["terms"],
            (np.asarray(cfg["equilibria"][0]), np.asarray(cfg["equilibria"][1])),
        )
    raise InputError(f"unknown model name {kind!r}")


def equilibrium_tail_rates(model: ReactionModel, speed: float) -> tuple:
    """Spatial decay rates of the front tails from the equilibria linearization.

    Linearizing w'' + c w' + Df(eq) w = 0 gives a 2m x 2m first-order system;
    the tail at +inf decays at the slowest stable rate there, the tail at
    -inf at the slowest unstable rate.  Returns (rate_minus, rate_plus).
    """
    m = model.components
    rates = []
    for eq, want_negative in ((model.equilibria[0], False), (model.equilibria[1], True)):
        jac = model.jacobian(np.asarray(eq, dtype=float).reshape(m, 1))[:, :, 0]
        block = np.zeros((2 * m, 2 * m))
        block[:m, m:] = np.eye(m)
        block[m:, :m] = -jac
        block[m:, m:] = -speed * np.eye(m)
        mu = np.linalg.eigvals(block)
        if want_negative:
            stable = mu.real[mu.real < -1e-12]
            if stable.size == 0:
                raise InputError("no decaying direction at phi_plus")
            rates.append(float(-stable.max()))
        else:
            unstable = mu.real[mu.real > 1e-12]
            if unstable.size == 0:
                raise InputError("no decaying direction at phi_minus")
            rates.append(float(unstable.min()))
    return rates[0], rates[1]
