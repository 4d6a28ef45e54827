"""Driven Duffing oscillator: stroboscopic maps, fixed points, and scans.

The scaled oscillator is ``q'' + 2 beta q' + q + q^3 = -eps sin(omega tau)``.
Substituting ``q = omega Q``, ``t = omega tau`` and ``sigma = 1/omega`` turns
the driving frequency into a polynomial parameter: the first-order system in
``(z1, z2, z3) = (Q, dQ/dt, sigma)`` is cubic in its variables and has period
``2 pi`` in ``t``, so its transfer map over one period is the stroboscopic
map, and expanding that map to order ``p`` in all three variables yields a
polynomial map that is iterated instead of re-integrating the flow.

Steady-state sweeps over ``omega`` (Feigenbaum diagrams), attractor sampling,
and Newton refinement of periodic points operate on either the exact
integrated map or the polynomial approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .jetode import IntegratorConfig, OdeSystem, adaptive, integrate
from .monoidx import build_table
from .vareq import TaylorMap, backward_solve, forward_solve, lift_parameters

TWO_PI = 2.0 * math.pi

#: defaults for steady-state sweeps; bifurcation structure is robust to
#: these, pixel-exact diagrams are not
DEFAULT_TRANSIENT = 2000
DEFAULT_RECORD = 200
DEFAULT_ESCAPE_RADIUS = 10.0
PERIOD_CLUSTER_TOL = 1e-6


class EscapeError(RuntimeError):
    """An iterated orbit left the configured trust region."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class NewtonConvergenceError(RuntimeError):
    """Newton iteration failed to converge within the allowed iterations."""


class SingularJacobianError(RuntimeError):
    """Newton linear system is singular (a unit multiplier)."""


@dataclass(frozen=True)
class DuffingParams:
    """Damping, driving strength, and driving frequency."""

    beta: float
    eps: float
    omega: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"damping must be >= 0, got {self.beta}")
        if self.eps < 0:
            raise ValueError(f"driving strength must be >= 0, got {self.eps}")
        if self.omega <= 0:
            raise ValueError(f"driving frequency must be > 0, got {self.omega}")

    @property
    def sigma(self) -> float:
        return 1.0 / self.omega

    @property
    def period(self) -> float:
        return TWO_PI / self.omega


# -- coordinate frames --------------------------------------------------------


def to_scaled(q: float, p: float, omega: float) -> tuple[float, float]:
    """(q, p) -> (z1, z2) = (q/omega, p/omega^2)."""
    return q / omega, p / omega**2


def to_qp(z1: float, z2: float, omega: float) -> tuple[float, float]:
    """(z1, z2) -> (q, p) = (omega z1, omega^2 z2)."""
    return omega * z1, omega**2 * z2


@dataclass(frozen=True)
class PhasePoint:
    """A phase-space point tagged with its frame ('qp' or 'scaled')."""

    x1: float
    x2: float
    frame: str = "qp"

    def __post_init__(self):
        if self.frame not in ("qp", "scaled"):
            raise ValueError(f"frame must be 'qp' or 'scaled', got {self.frame!r}")

    def as_qp(self, omega: float) -> "PhasePoint":
        if self.frame == "qp":
            return self
        q, p = to_qp(self.x1, self.x2, omega)
        return PhasePoint(q, p, "qp")

    def as_scaled(self, omega: float) -> "PhasePoint":
        if self.frame == "scaled":
            return self
        z1, z2 = to_scaled(self.x1, self.x2, omega)
        return PhasePoint(z1, z2, "scaled")


# -- right sides ----------------------------------------------------------------


def duffing_rhs(params: DuffingParams) -> OdeSystem:
    """First-order pair in the (q, p) frame; period 2 pi / omega in tau."""
    beta, eps, omega = params.beta, params.eps, params.omega

    def rhs(state, tau):
        q, p = state
        return (p, -2.0 * beta * p - q - q**3 - eps * math.sin(omega * tau))

    return OdeSystem(dim=2, rhs=rhs)


def duffing_scaled_rhs(beta: float, eps: float, sigma: float) -> OdeSystem:
    """Three-variable scaled system with sigma lifted; period 2 pi in t."""

    def core(state, t, params):
        z1, z2 = state
        (s,) = params
        return (
            z2,
            -2.0 * beta * (s * z2) - (s**2) * z1 - z1**3 - (eps * math.sin(t)) * s**3,
        )

    return lift_parameters(core, 2, (sigma,))


# -- exact stroboscopic map -------------------------------------------------------


@dataclass(frozen=True)
class ExactStroboscopicMap:
    """One-period transfer map of the (q, p) system by direct integration."""

    params: DuffingParams
    tol: float = 1e-12

    def __call__(self, point: Sequence[float]) -> np.ndarray:
        system = duffing_rhs(self.params)
        state, _ = integrate(
            system, tuple(point), 0.0, self.params.period, adaptive(self.tol)
        )
        return np.array(state, dtype=np.float64)


# -- polynomial map construction ---------------------------------------------------


def stroboscopic_taylor_map(
    beta: float,
    eps: float,
    expansion: Sequence[float],
    p: int,
    tol: float = 1e-12,
    cfg: IntegratorConfig | None = None,
    method: str = "forward",
) -> TaylorMap:
    """Order-p Taylor expansion of the stroboscopic map about ``expansion``.

    ``expansion`` is the scaled-frame point (z1, z2, sigma).  The default
    integrator is the adaptive pair at the given tolerance; pass a fixed
    config to reproduce plain RK4 runs.
    """
    if p < 1:
        raise ValueError(f"map order must be >= 1, got {p}")
    if len(expansion) != 3:
        raise ValueError("expansion point must be (z1, z2, sigma)")
    system = duffing_scaled_rhs(beta, eps, sigma=float(expansion[2]))
    table = build_table(3, p)
    if cfg is None:
        cfg = adaptive(tol)
    if method == "forward":
        return forward_solve(system, expansion, 0.0, TWO_PI, table, cfg)
    if method == "backward":
        return backward_solve(system, expansion, 0.0, TWO_PI, table, cfg)
    raise ValueError(f"method must be 'forward' or 'backward', got {method!r}")


# -- fast iteration of a polynomial map ---------------------------------------------


class _Poly2Map:
    """Dynamical rows of a TaylorMap with the parameter deviation folded in.

    Collapsing the fixed sigma-deviation turns the three-variable rows into
    two-variable polynomials of the same degree, evaluated per step from
    per-variable power tables.
    """

    def __init__(self, tmap: TaylorMap, dsigma: float):
        if tmap.m_dynamical != 2 or tmap.n_params != 1:
            raise ValueError("expected a 2-variable map with one lifted parameter")
        table = tmap.table
        p = table.p
        exps = table.exponents
        # integer-typed exponents keep negative dsigma legal under **
        sig_pow = dsigma ** exps[:, 2]
        # index of the (j1, j2) monomial in the 2-variable modified glex list
        pairs = {}
        order = 0
        for d in range(p + 1):
            for j1 in range(d, -1, -1):
                pairs[(j1, d - j1)] = order
                order += 1
        fold = np.array([pairs[(int(e[0]), int(e[1]))] for e in exps])
        rows = np.zeros((2, order))
        for a in range(2):
            np.add.at(rows[a], fold, tmap.rows[a].coeffs * sig_pow)
        two = [(j1, d - j1) for d in range(p + 1) for j1 in range(d, -1, -1)]
        self.rows = rows
        self.e1 = np.array([j for j, _ in two])
        self.e2 = np.array([k for _, k in two])
        self.p = p
        self.exp_range = np.arange(p + 1)
        self.offset = np.asarray(tmap.expansion_point[:2], dtype=np.float64)

    def step(self, zeta: np.ndarray) -> np.ndarray:
        """One application of the deviation map."""
        pw1 = zeta[0] ** self.exp_range
        pw2 = zeta[1] ** self.exp_range
        g = pw1[self.e1] * pw2[self.e2]
        return self.rows @ g - self.offset


def iterate_map(
    tmap: TaylorMap,
    zeta0: Sequence[float],
    dsigma: float,
    n: int,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> np.ndarray:
    """Iterate the polynomial stroboscopic map n times in deviation coordinates.

    Returns the (n + 1, 2) trajectory starting at ``zeta0``; the parameter
    deviation ``dsigma`` is held fixed.  Raises :class:`EscapeError` when an
    iterate leaves the ball of the given radius (the polynomial is no longer
    trustworthy outside its convergence region).
    """
    zeta = np.asarray(zeta0, dtype=np.float64)
    if zeta.shape != (2,):
        raise ValueError(f"expected a 2-component deviation, got shape {zeta.shape}")
    if float(np.hypot(zeta[0], zeta[1])) > escape_radius:
        raise EscapeError("starting deviation is outside the trust region", 0)
    poly = _Poly2Map(tmap, dsigma)
    out = np.empty((n + 1, 2))
    out[0] = zeta
    for i in range(1, n + 1):
        zeta = poly.step(zeta)
        if not np.all(np.isfinite(zeta)) or np.hypot(zeta[0], zeta[1]) > escape_radius:
            raise EscapeError(f"orbit escaped at iterate {i}", i)
        out[i] = zeta
    return out


# -- fixed points -------------------------------------------------------------------


def _poly_map_and_jacobian(tmap: TaylorMap, dsigma: float):
    table = tmap.table
    partials = [[tmap.rows[a].partial(b + 1) for b in range(2)] for a in range(2)]

    def apply_map(zeta: np.ndarray) -> np.ndarray:
        full = np.array([zeta[0], zeta[1], dsigma])
        final = tmap.final_state(full)
        return final[:2] - np.asarray(tmap.expansion_point[:2])

    def jacobian(zeta: np.ndarray) -> np.ndarray:
        full = np.array([zeta[0], zeta[1], dsigma])
        return np.array(
            [[partials[a][b].evaluate(full) for b in range(2)] for a in range(2)]
        )

    return apply_map, jacobian


def _exact_map_and_jacobian(exact: ExactStroboscopicMap, fd_step: float = 1e-6):
    def apply_map(point: np.ndarray) -> np.ndarray:
        return exact(point)

    def jacobian_of(fn, point: np.ndarray) -> np.ndarray:
        cols = []
        for b in range(2):
            bump = np.zeros(2)
            bump[b] = fd_step
            cols.append((fn(point + bump) - fn(point - bump)) / (2 * fd_step))
        return np.stack(cols, axis=1)

    return apply_map, jacobian_of


def fixed_point_newton(
    map_source: TaylorMap | ExactStroboscopicMap,
    guess: Sequence[float],
    dsigma: float = 0.0,
    k: int = 1,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> tuple[np.ndarray, np.ndarray]:
    """Newton refinement of a period-k point of the stroboscopic map.

    For a :class:`TaylorMap` the iteration runs in deviation coordinates and
    the Jacobian comes from differentiating the polynomial rows; for an
    :class:`ExactStroboscopicMap` it runs in (q, p) with a central-difference
    Jacobian.  Returns the refined point and the eigenvalues of the k-fold
    Jacobian (the stability multipliers).
    """
    if k < 1:
        raise ValueError(f"period must be >= 1, got {k}")
    x = np.asarray(guess, dtype=np.float64).copy()
    if x.shape != (2,):
        raise ValueError(f"expected a 2-component guess, got shape {x.shape}")

    polynomial = isinstance(map_source, TaylorMap)
    if polynomial:
        apply_map, jacobian = _poly_map_and_jacobian(map_source, dsigma)

        def residual_and_jacobian(x0):
            x_cur = x0
            jac = np.eye(2)
            for _ in range(k):
                jac = jacobian(x_cur) @ jac
                x_cur = apply_map(x_cur)
            return x_cur - x0, jac

    else:
        apply_map, jacobian_of = _exact_map_and_jacobian(map_source)

        def k_fold(x0):
            x_cur = x0
            for _ in range(k):
                x_cur = apply_map(x_cur)
            return x_cur

        def residual_and_jacobian(x0):
            return k_fold(x0) - x0, jacobian_of(k_fold, x0)

    for _ in range(max_iter):
        f, jac_k = residual_and_jacobian(x)
        if np.max(np.abs(f)) <= tol:
            return x, np.linalg.eigvals(jac_k)
        newton_matrix = jac_k - np.eye(2)
        if abs(np.linalg.det(newton_matrix)) < 1e-14 * max(1.0, np.abs(jac_k).max()) ** 2:
            raise SingularJacobianError(
                "Jacobian minus identity is singular (multiplier at 1); "
                "the fixed point is degenerate at this parameter"
            )
        x = x - np.linalg.solve(newton_matrix, f)
        if not np.all(np.isfinite(x)):
            raise NewtonConvergenceError("iterates became non-finite")
    raise NewtonConvergenceError(
        f"no convergence to {tol} within {max_iter} iterations (|F|={np.max(np.abs(f))})"
    )


# -- steady-state sweeps ---------------------------------------------------------


@dataclass
class ScanResult:
    """Recorded steady-state samples per driving frequency.

    ``samples[i]`` is a (record, 2) array of consecutive post-transient
    (q, p) iterates for ``omegas[i]``; rows that diverged are empty arrays.
    """

    omegas: np.ndarray
    samples: list
    source: str
    beta: float
    eps: float
    transient: int
    record: int
    seed_policy: str
    seed: tuple
    failures: list = field(default_factory=list)

    def periods(self, tol: float = PERIOD_CLUSTER_TOL, max_period: int = 64) -> list:
        return [
            detect_period(s, tol=tol, max_period=max_period) if len(s) else None
            for s in self.samples
        ]


def _run_exact(beta, eps, omega, state, transient, record, tol, escape_radius):
    exact = ExactStroboscopicMap(DuffingParams(beta, eps, omega), tol)
    out = np.empty((record, 2))
    for i in range(transient + record):
        state = exact(state)
        if not np.all(np.isfinite(state)) or np.hypot(state[0], state[1]) > escape_radius:
            raise EscapeError(f"orbit escaped at iterate {i + 1}", i + 1)
        if i >= transient:
            out[i - transient] = state
    return out, state


def _run_poly(tmap, omega, zeta, transient, record, escape_radius):
    dsigma = 1.0 / omega - tmap.expansion_point[2]
    poly = _Poly2Map(tmap, dsigma)
    out = np.empty((record, 2))
    for i in range(transient + record):
        zeta = poly.step(zeta)
        if not np.all(np.isfinite(zeta)) or np.hypot(zeta[0], zeta[1]) > escape_radius:
            raise EscapeError(f"orbit escaped at iterate {i + 1}", i + 1)
        if i >= transient:
            out[i - transient] = zeta
    # report in the physical (q, p) frame of this omega
    qp = np.empty_like(out)
    qp[:, 0] = omega * (tmap.expansion_point[0] + out[:, 0])
    qp[:, 1] = omega**2 * (tmap.expansion_point[1] + out[:, 1])
    return qp, zeta


def feigenbaum_scan(
    map_source: str | TaylorMap,
    beta: float,
    eps: float,
    omega_grid: Sequence[float],
    transient: int = DEFAULT_TRANSIENT,
    record: int = DEFAULT_RECORD,
    seed_policy: str = "continue",
    seed: Sequence[float] | None = None,
    tol: float = 1e-12,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    threads: int = 1,
) -> ScanResult:
    """Steady-state (q, p) samples over a monotonic omega grid.

    ``map_source`` is either the string ``"exact"`` (integrate the flow per
    application) or a :class:`TaylorMap` with lifted sigma (iterate the
    polynomial, shifting the parameter deviation per omega).  Under the
    default continuation policy each omega is seeded with the previous
    omega's final state, which follows attractor branches and exposes
    hysteresis; ``"fixed"`` reseeds every omega identically and may run
    omegas in parallel.  A diverging omega yields an empty sample row and
    the scan continues from the configured seed.
    """
    omegas = np.asarray(list(omega_grid), dtype=np.float64)
    if omegas.size == 0:
        raise ValueError("omega grid is empty")
    steps = np.diff(omegas)
    # either direction is allowed: downward sweeps expose hysteresis
    if omegas.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("omega grid must be strictly monotonic")
    if transient < 1 or record < 1:
        raise ValueError("transient and record must both be >= 1")
    if seed_policy not in ("continue", "fixed"):
        raise ValueError(f"seed_policy must be 'continue' or 'fixed', got {seed_policy!r}")

    exact = not isinstance(map_source, TaylorMap)
    if exact and map_source != "exact":
        raise ValueError("map_source must be 'exact' or a TaylorMap")
    seed = (0.0, 0.0) if seed is None else tuple(float(v) for v in seed)
    source = "exact" if exact else "taylor"

    def run_one(omega, state):
        if exact:
            return _run_exact(beta, eps, omega, np.asarray(state), transient, record, tol, escape_radius)
        return _run_poly(map_source, omega, np.asarray(state), transient, record, escape_radius)

    samples: list = [None] * omegas.size
    failures: list = []

    if seed_policy == "fixed" and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        def job(i):
            try:
                return i, run_one(omegas[i], seed)[0], None
            except EscapeError as err:
                return i, np.empty((0, 2)), str(err)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, block, failure in pool.map(job, range(omegas.size)):
                samples[i] = block
                if failure is not None:
                    failures.append((float(omegas[i]), failure))
    else:
        state = seed
        for i, omega in enumerate(omegas):
            try:
                block, final = run_one(omega, state)
                samples[i] = block
                if seed_policy == "continue":
                    state = tuple(final)
            except EscapeError as err:
                samples[i] = np.empty((0, 2))
                failures.append((float(omega), str(err)))
                state = seed  # restart the continuation from the configured seed

    return ScanResult(
        omegas=omegas,
        samples=samples,
        source=source,
        beta=beta,
        eps=eps,
        transient=transient,
        record=record,
        seed_policy=seed_policy,
        seed=seed,
        failures=failures,
    )


def attractor_sample(
    map_source: str | TaylorMap,
    beta: float,
    eps: float,
    omega: float,
    transient: int = DEFAULT_TRANSIENT,
    count: int = DEFAULT_RECORD,
    seed: Sequence[float] | None = None,
    tol: float = 1e-12,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> np.ndarray:
    """Post-transient (q, p) samples at a single driving frequency."""
    if count < 1:
        raise ValueError("count must be >= 1")
    result = feigenbaum_scan(
        map_source,
        beta,
        eps,
        [omega],
        transient=transient,
        record=count,
        seed_policy="fixed",
        seed=seed,
        tol=tol,
        escape_radius=escape_radius,
    )
    if result.failures:
        raise EscapeError(result.failures[0][1], -1)
    return result.samples[0]


def detect_period(
    samples: np.ndarray,
    tol: float = PERIOD_CLUSTER_TOL,
    max_period: int = 64,
) -> int | None:
    """Smallest k with samples[i + k] == samples[i] to within tol, else None.

    ``samples`` must be consecutive iterates; matching every k-shifted pair
    means the points fall into k clusters of diameter below tol that the map
    permutes cyclically.
    """
    samples = np.asarray(samples)
    n = len(samples)
    for k in range(1, max_period + 1):
        if n < 2 * k:
            return None
        gap = np.abs(samples[k:] - samples[:-k]).max()
        if gap < tol:
            return k
    return None
