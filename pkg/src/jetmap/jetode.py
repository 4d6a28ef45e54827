"""Runge-Kutta integration generic over scalar and jet-valued states.

The marching code never inspects its state components beyond the arithmetic
the right side itself uses (+, scalar *), so the same :func:`rk4` and
:func:`rkf45` propagate plain floats and :class:`~jetmap.jet.Jet` components
alike.  Integrating a state of jets initialized as ``center + x_a`` yields
the Taylor expansion of the flow about ``center``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .jet import Jet

State = tuple  # components are floats or Jets


class DivergenceError(RuntimeError):
    """A non-finite value appeared during integration."""

    def __init__(self, message: str, step: int | None = None, t: float | None = None):
        super().__init__(message)
        self.step = step
        self.t = t


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed the configured minimum."""


@dataclass(frozen=True)
class OdeSystem:
    """Right-hand side of an autonomous-size first-order system.

    ``rhs(state, t)`` receives a tuple of ``dim`` components and returns the
    ``dim`` derivatives.  It must be polynomial in the state components (with
    arbitrary time-dependent scalar coefficients) so that the same callable
    works on floats and on jets.  Lifted parameters, if any, occupy the
    trailing ``n_params`` slots and have identically zero derivatives.
    """

    dim: int
    rhs: Callable[[State, float], Sequence]
    n_params: int = 0
    param_values: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"system dimension must be >= 1, got {self.dim}")
        if not 0 <= self.n_params <= self.dim:
            raise ValueError(f"n_params={self.n_params} outside [0, {self.dim}]")

    @property
    def n_dynamical(self) -> int:
        return self.dim - self.n_params

    def initial_state(self, dynamical: Sequence[float]) -> tuple[float, ...]:
        """Full initial state: dynamical values followed by parameter values."""
        if len(dynamical) != self.n_dynamical:
            raise ValueError(
                f"expected {self.n_dynamical} dynamical values, got {len(dynamical)}"
            )
        return tuple(float(v) for v in dynamical) + tuple(self.param_values)


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-control settings shared by the fixed and adaptive integrators.

    ``h`` is the step in fixed mode and the initial trial step in adaptive
    mode (default: the whole interval, so a quadrature-exact problem is done
    in one accepted step).  ``tol`` bounds the per-step error estimate, taken
    as the max absolute 4th/5th-order difference over every coefficient of
    every state component.
    """

    mode: str = "adaptive"
    h: float | None = None
    ns: int = 1
    tol: float = 1e-12
    safety: float = 0.9
    min_shrink: float = 0.1
    max_grow: float = 5.0
    h_min_frac: float = 1e-12
    max_steps: int = 500_000

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ValueError(f"mode must be 'fixed' or 'adaptive', got {self.mode!r}")
        if self.mode == "fixed":
            if self.h is None or self.h <= 0:
                raise ValueError("fixed mode needs a positive step h")
            if self.ns < 1:
                raise ValueError("fixed mode needs ns >= 1")
        else:
            if self.tol <= 0:
                raise ValueError("adaptive mode needs tol > 0")
            if self.h is not None and self.h <= 0:
                raise ValueError("initial step must be positive when given")


def fixed_step(h: float, ns: int) -> IntegratorConfig:
    return IntegratorConfig(mode="fixed", h=h, ns=ns)


def adaptive(tol: float = 1e-12, h0: float | None = None) -> IntegratorConfig:
    return IntegratorConfig(mode="adaptive", tol=tol, h=h0)


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    h_min: float = math.inf
    h_max: float = 0.0

    def record(self, h: float) -> None:
        self.accepted += 1
        self.h_min = min(self.h_min, h)
        self.h_max = max(self.h_max, h)


# -- generic state arithmetic -----------------------------------------------


def _axpy(state: State, c: float, incr: Sequence) -> State:
    return tuple(z + c * k for z, k in zip(state, incr))


def _combination(state: State, weights: Sequence[float], stages: Sequence) -> State:
    out = list(state)
    for w, ks in zip(weights, stages):
        if w == 0.0:
            continue
        out = [z + w * k for z, k in zip(out, ks)]
    return tuple(out)


def _is_finite(component) -> bool:
    if isinstance(component, Jet):
        return bool(np.isfinite(component.coeffs).all())
    return math.isfinite(component)


def state_is_finite(state: State) -> bool:
    return all(_is_finite(z) for z in state)


def _max_abs_combination(weights: Sequence[float], stages: Sequence) -> float:
    """max |sum_i w_i k_i| over all coefficients of all components."""
    worst = 0.0
    n_components = len(stages[0])
    for a in range(n_components):
        acc = None
        for w, ks in zip(weights, stages):
            if w == 0.0:
                continue
            term = w * ks[a]
            acc = term if acc is None else acc + term
        if isinstance(acc, Jet):
            worst = max(worst, float(np.max(np.abs(acc.coeffs))))
        else:
            worst = max(worst, abs(acc))
    return worst


# -- fixed-step RK4 ----------------------------------------------------------


def rk4(
    system: OdeSystem, state0: Sequence, t0: float, cfg: IntegratorConfig
) -> tuple[State, float]:
    """Classic fourth-order Runge-Kutta with ns steps of size h."""
    if cfg.mode != "fixed":
        raise ValueError("rk4 requires a fixed-mode config")
    h = cfg.h
    state = tuple(state0)
    t = t0
    for i in range(1, cfg.ns + 1):
        try:
            ka = tuple(h * f for f in system.rhs(state, t))
            kb = tuple(h * f for f in system.rhs(_axpy(state, 0.5, ka), t + h / 2))
            kc = tuple(h * f for f in system.rhs(_axpy(state, 0.5, kb), t + h / 2))
            kd = tuple(h * f for f in system.rhs(_axpy(state, 1.0, kc), t + h))
        except OverflowError as err:
            raise DivergenceError(f"float overflow during step {i} (t={t})", i, t) from err
        state = tuple(
            z + (a + 2 * b + 2 * c + d) / 6.0
            for z, a, b, c, d in zip(state, ka, kb, kc, kd)
        )
        t = t0 + i * h
        if not state_is_finite(state):
            raise DivergenceError(f"non-finite state after step {i} (t={t})", i, t)
    return state, t


# -- adaptive Runge-Kutta-Fehlberg 4(5) ---------------------------------------

# classical Fehlberg tableau
_RKF_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_RKF_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_RKF_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_RKF_DB = tuple(b4 - b5 for b4, b5 in zip(_RKF_B4, _RKF_B5))


def rkf45(
    system: OdeSystem,
    state0: Sequence,
    t0: float,
    tf: float,
    cfg: IntegratorConfig,
) -> tuple[State, float, StepStats]:
    """Adaptive Fehlberg 4(5) pair from t0 to tf (tf > t0).

    A step is accepted when the max-abs difference between the embedded
    fourth- and fifth-order results is at most ``cfg.tol``; the fifth-order
    solution is the one propagated.  The final step is clamped so that
    integration ends at exactly ``tf``.
    """
    if cfg.mode != "adaptive":
        raise ValueError("rkf45 requires an adaptive-mode config")
    if not tf > t0:
        raise ValueError(f"need tf > t0, got t0={t0}, tf={tf}")

    span = tf - t0
    h_min = cfg.h_min_frac * span
    h = min(cfg.h if cfg.h is not None else span, span)
    stats = StepStats()
    state = tuple(state0)
    t = t0

    while t < tf:
        h = min(h, tf - t)
        last_step = h >= (tf - t)

        try:
            stages = []
            for i in range(6):
                arg = state
                for coeff, ks in zip(_RKF_A[i], stages):
                    arg = _axpy(arg, h * coeff, ks)
                stages.append(tuple(system.rhs(arg, t + _RKF_C[i] * h)))
            finite = all(state_is_finite(ks) for ks in stages)
        except OverflowError:
            finite = False
        err = _max_abs_combination([h * w for w in _RKF_DB], stages) if finite else math.inf

        if finite and err <= cfg.tol:
            # local extrapolation: march the fifth-order solution while the
            # fourth/fifth difference controls the step
            state = _combination(state, [h * w for w in _RKF_B5], stages)
            if not state_is_finite(state):
                raise DivergenceError(f"non-finite state near t={t}", stats.accepted, t)
            stats.record(h)
            t = tf if last_step else t + h
        else:
            stats.rejected += 1

        if err > 0.0:
            factor = cfg.safety * (cfg.tol / err) ** 0.2 if math.isfinite(err) else cfg.min_shrink
            h *= min(max(factor, cfg.min_shrink), cfg.max_grow)
        else:
            h *= cfg.max_grow

        if t < tf and h < h_min:
            if not finite:
                raise DivergenceError(
                    f"step collapsed below {h_min} at t={t} chasing non-finite stages",
                    stats.accepted,
                    t,
                )
            raise StiffnessError(
                f"step size {h} fell below minimum {h_min} at t={t} "
                f"({stats.accepted} accepted, {stats.rejected} rejected)"
            )
        if stats.accepted + stats.rejected > cfg.max_steps:
            # a tolerance beneath the round-off floor of the error estimate
            # stalls instead of underflowing h; cap the work done
            raise StiffnessError(
                f"exceeded {cfg.max_steps} steps at t={t} of {tf}; the "
                f"tolerance {cfg.tol} appears unattainable for this state"
            )
    return state, t, stats


def integrate(
    system: OdeSystem,
    state0: Sequence,
    t0: float,
    tf: float,
    cfg: IntegratorConfig,
) -> tuple[State, float]:
    """Dispatch on cfg.mode; fixed mode derives ns*h from the config alone."""
    if cfg.mode == "fixed":
        return rk4(system, state0, t0, cfg)
    state, t, _ = rkf45(system, state0, t0, tf, cfg)
    return state, t
