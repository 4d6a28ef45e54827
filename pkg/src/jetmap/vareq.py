"""Transfer maps of polynomial ODEs via the variational equations.

Deviations from a reference ("design") trajectory obey ODEs whose right side
is the Taylor expansion of the system about that trajectory, retaining all
polynomial orders.  The time-dependent Taylor coefficients of the solution,
``h^r_a(t)``, assemble the transfer map sending initial deviations to final
deviations.  Two independent solution routes are provided:

* :func:`forward_solve` integrates the state as jets ``center_a + x_a``; the
  Taylor rule makes the final jets the transfer map directly.
* :func:`backward_solve` integrates the coefficient functions themselves
  backward in time.  Their equations are *linear* in the unknowns, with
  constant integer structure coefficients (:func:`c_coefficients`) contracted
  against the forcing terms of the expanded right side.

Both produce the same :class:`TaylorMap`, which makes either one an oracle
for the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .jet import Jet, constant, monomial_values, state_about
from .jetode import IntegratorConfig, OdeSystem, integrate
from .monoidx import MonomialTable, rank


# -- expansion of the right side ---------------------------------------------


def expand_rhs(
    system: OdeSystem, zd: Sequence[float], t: float, table: MonomialTable
) -> tuple[np.ndarray, np.ndarray]:
    """Split f(zd + zeta, t) into the design value and the forcing terms.

    Returns ``(fvals, g)`` where ``fvals[a] = f_a(zd, t)`` and ``g[a, r-1]``
    is the coefficient of the rank-r monomial in the deviation expansion of
    ``f_a`` (column 0, the constant, is zeroed: forcing terms have degree
    one or more).
    """
    if len(zd) != system.dim or table.m != system.dim:
        raise ValueError(
            f"system dim {system.dim}, table m {table.m}, design point "
            f"length {len(zd)} must all agree"
        )
    jets = system.rhs(state_about(table, zd), t)
    g = np.empty((system.dim, table.L))
    for a, component in enumerate(jets):
        if isinstance(component, Jet):
            g[a] = component.coeffs
        else:  # constant right side written as a plain number
            g[a] = 0.0
            g[a, 0] = float(component)
    fvals = g[:, 0].copy()
    g[:, 0] = 0.0
    return fvals, g


# -- the transfer map object ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class TaylorMap:
    """Polynomial transfer map about a design trajectory.

    ``rows[a]`` is the jet of the final value of variable ``a + 1`` as a
    polynomial in the initial deviations; its constant term is the design
    endpoint.  Trailing ``n_params`` variables are lifted parameters whose
    rows are exact identities.
    """

    table: MonomialTable
    t_i: float
    t_f: float
    expansion_point: tuple[float, ...]
    design_endpoint: tuple[float, ...]
    rows: tuple[Jet, ...]
    n_params: int = 0

    def __post_init__(self):
        if len(self.rows) != self.table.m:
            raise ValueError(
                f"need {self.table.m} rows, got {len(self.rows)}"
            )
        if len(self.expansion_point) != self.table.m:
            raise ValueError("expansion point length must match variable count")

    @property
    def m_dynamical(self) -> int:
        return self.table.m - self.n_params

    @property
    def order(self) -> int:
        return self.table.p

    def coefficient_matrix(self) -> np.ndarray:
        """(m, L) array of row coefficients."""
        return np.stack([row.coeffs for row in self.rows])

    def final_state(self, deviation: Sequence[float]) -> np.ndarray:
        """Absolute final coordinates for an initial deviation vector."""
        dev = np.asarray(deviation, dtype=np.float64)
        if dev.shape != (self.table.m,):
            raise ValueError(f"expected {self.table.m} deviations, got {dev.shape}")
        return self.coefficient_matrix() @ monomial_values(self.table, dev)

    def deviation_map(self, deviation: Sequence[float]) -> np.ndarray:
        """Final deviations (relative to the design endpoint)."""
        return self.final_state(deviation) - np.asarray(self.design_endpoint)

    def linear_matrix(self, dynamical_only: bool = True) -> np.ndarray:
        """Degree-1 block: d(final)/d(initial deviation)."""
        n = self.m_dynamical if dynamical_only else self.table.m
        out = np.empty((n, n))
        for a in range(n):
            for b in range(n):
                out[a, b] = self.rows[a].coeffs[self.table.variable_rank(b + 1) - 1]
        return out

    def jacobian(self, deviation: Sequence[float]) -> np.ndarray:
        """Exact Jacobian of final_state at the given deviation (m x m)."""
        dev = np.asarray(deviation, dtype=np.float64)
        cols = []
        for b in range(1, self.table.m + 1):
            block = np.stack([row.partial(b).coeffs for row in self.rows])
            cols.append(block @ monomial_values(self.table, dev))
        return np.stack(cols, axis=1)


def taylor_map_to_dict(tmap: TaylorMap, suppress_zeros: bool = False) -> dict:
    """JSON-ready description of a TaylorMap."""
    rows = []
    for a, row in enumerate(tmap.rows):
        entries = []
        for i, value in enumerate(row.coeffs):
            if suppress_zeros and value == 0.0:
                continue
            entries.append(
                {
                    "r": i + 1,
                    "exponents": [int(j) for j in tmap.table.exponents[i]],
                    "value": float(value),
                }
            )
        rows.append({"var": a + 1, "coeffs": entries})
    return {
        "m_dynamical": tmap.m_dynamical,
        "n_params": tmap.n_params,
        "p": tmap.table.p,
        "t_i": tmap.t_i,
        "t_f": tmap.t_f,
        "expansion_point": list(tmap.expansion_point),
        "design_endpoint": list(tmap.design_endpoint),
        "rows": rows,
    }


def taylor_map_from_dict(data: dict, table: MonomialTable | None = None) -> TaylorMap:
    from .monoidx import build_table

    m = data["m_dynamical"] + data["n_params"]
    if table is None:
        table = build_table(m, data["p"])
    if table.m != m or table.p != data["p"]:
        raise ValueError(
            f"table (m={table.m}, p={table.p}) does not match serialized map "
            f"(m={m}, p={data['p']})"
        )
    rows = []
    for row_data in data["rows"]:
        coeffs = np.zeros(table.L)
        for entry in row_data["coeffs"]:
            coeffs[entry["r"] - 1] = entry["value"]
        rows.append(Jet(table, coeffs))
    return TaylorMap(
        table=table,
        t_i=float(data["t_i"]),
        t_f=float(data["t_f"]),
        expansion_point=tuple(data["expansion_point"]),
        design_endpoint=tuple(data["design_endpoint"]),
        rows=tuple(rows),
        n_params=int(data["n_params"]),
    )


# -- forward route -------------------------------------------------------------


def forward_solve(
    system: OdeSystem,
    zd0: Sequence[float],
    t_i: float,
    t_f: float,
    table: MonomialTable,
    cfg: IntegratorConfig,
) -> TaylorMap:
    """Transfer map by integrating the jet state ``zd0_a + x_a`` forward."""
    if table.m != system.dim:
        raise ValueError(f"table has m={table.m}, system has dim={system.dim}")
    if len(zd0) != system.dim:
        raise ValueError(f"expected {system.dim} initial values, got {len(zd0)}")
    state0 = state_about(table, zd0)
    state, _ = integrate(system, state0, t_i, t_f, cfg)
    rows = tuple(state)
    endpoint = tuple(float(row.coeffs[0]) for row in rows)
    return TaylorMap(
        table=table,
        t_i=t_i,
        t_f=t_f,
        expansion_point=tuple(float(v) for v in zd0),
        design_endpoint=endpoint,
        rows=rows,
        n_params=system.n_params,
    )


# -- universal structure coefficients for the backward route -------------------


@dataclass(frozen=True, eq=False)
class CCoefficientTable:
    """Nonzero integer coefficients C^r_{b r' r''}.

    ``[(d/d zeta_b) G_{r'}] G_{r''} = sum_r C^r_{b r' r''} G_r`` with all
    ranks in jet labeling (constant = rank 1, so every stored rank is >= 2).
    Flat index arrays (0-based) back the time-stepping contraction.
    """

    m: int
    p: int
    entries: dict
    idx_r: np.ndarray
    idx_b: np.ndarray
    idx_rp: np.ndarray
    idx_rpp: np.ndarray
    values: np.ndarray

    def contraction_matrix(self, g: np.ndarray, out: np.ndarray) -> np.ndarray:
        """A[r, r'] = sum_{b, r''} C^r_{b r' r''} g[b, r''], written into out."""
        out[:] = 0.0
        np.add.at(
            out,
            (self.idx_r, self.idx_rp),
            self.values * g[self.idx_b, self.idx_rpp],
        )
        return out


def c_coefficients(m: int, p: int, table: MonomialTable) -> CCoefficientTable:
    """Enumerate all nonzero C^r_{b r' r''} for degree(r) <= p."""
    if table.m != m or table.p != p:
        raise ValueError(f"table is (m={table.m}, p={table.p}), asked for ({m}, {p})")
    entries: dict[tuple[int, int, int, int], int] = {}
    idx_r, idx_b, idx_rp, idx_rpp, values = [], [], [], [], []
    for b in range(1, m + 1):
        for ip in range(1, table.L):  # r' = ip + 1, degree >= 1
            jp = table.exponents[ip]
            if jp[b - 1] < 1:
                continue
            lowered = jp.copy()
            lowered[b - 1] -= 1
            d_lowered = int(table.degrees[ip]) - 1
            for ipp in range(1, table.L):  # r'' = ipp + 1, degree >= 1
                if d_lowered + int(table.degrees[ipp]) > p:
                    continue
                target = lowered + table.exponents[ipp]
                r = rank(target.tolist())
                value = int(jp[b - 1])
                entries[(r, b, ip + 1, ipp + 1)] = value
                idx_r.append(r - 1)
                idx_b.append(b - 1)
                idx_rp.append(ip)
                idx_rpp.append(ipp)
                values.append(float(value))
    return CCoefficientTable(
        m=m,
        p=p,
        entries=entries,
        idx_r=np.array(idx_r, dtype=np.intp),
        idx_b=np.array(idx_b, dtype=np.intp),
        idx_rp=np.array(idx_rp, dtype=np.intp),
        idx_rpp=np.array(idx_rpp, dtype=np.intp),
        values=np.array(values),
    )


# -- backward route -------------------------------------------------------------


def backward_solve(
    system: OdeSystem,
    zd0: Sequence[float],
    t_i: float,
    t_f: float,
    table: MonomialTable,
    cfg: IntegratorConfig,
) -> TaylorMap:
    """Transfer map via the linear coefficient equations, integrated backward.

    The design orbit is first run forward to the final time; the coefficient
    functions then march from their final-time identity values back to the
    initial time, co-integrating the design orbit in reverse.  The equations
    for the coefficients are linear, with right side assembled from the
    C-coefficient contraction of the current forcing terms.
    """
    if table.m != system.dim:
        raise ValueError(f"table has m={table.m}, system has dim={system.dim}")
    scalar_state0 = tuple(float(v) for v in zd0)
    endpoint_state, _ = integrate(system, scalar_state0, t_i, t_f, cfg)
    endpoint = tuple(float(v) for v in endpoint_state)

    ctab = c_coefficients(table.m, table.p, table)
    amat = np.empty((table.L, table.L))
    span = t_f - t_i

    def reversed_rhs(state: tuple, s: float):
        # s runs 0 -> span while the physical time runs t_f -> t_i
        tbar = t_f - s
        h = np.stack([component.coeffs for component in state])
        zd = h[:, 0]
        fvals, g = expand_rhs(system, zd, tbar, table)
        ctab.contraction_matrix(g, amat)
        dh = h @ amat.T  # -(d/dtbar) h, negated once more by ds = -dtbar
        dh[:, 0] = -fvals
        return tuple(Jet(table, dh[a]) for a in range(table.m))

    reversed_system = OdeSystem(dim=table.m, rhs=reversed_rhs)
    # final conditions: identity coefficients on top of the design endpoint
    state0 = state_about(table, endpoint)
    state, _ = integrate(reversed_system, state0, 0.0, span, cfg)

    rows = []
    for a, component in enumerate(state):
        coeffs = component.coeffs.copy()
        coeffs[0] = endpoint[a]  # constant slot holds the design endpoint
        rows.append(Jet(table, coeffs))
    return TaylorMap(
        table=table,
        t_i=t_i,
        t_f=t_f,
        expansion_point=scalar_state0,
        design_endpoint=endpoint,
        rows=tuple(rows),
        n_params=system.n_params,
    )


# -- explicit two-variable equations (test oracle) ------------------------------


def two_var_oracle_rhs(g: np.ndarray, h: np.ndarray, direction: str) -> np.ndarray:
    """Hand-transcribed coefficient equations for m=2 through degree 2.

    ``g`` and ``h`` are (2, 5) arrays indexed [a-1, r-1] in the degree->=1
    labeling r=1..5 for monomials z1, z2, z1^2, z1*z2, z2^2.  Returns the
    (2, 5) array of time derivatives of h, for the forward equations or for
    the backward (reversed-time) linear equations.
    """
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if g.shape != (2, 5) or h.shape != (2, 5):
        raise ValueError("g and h must have shape (2, 5)")
    (g11, g21, g31, g41, g51), (g12, g22, g32, g42, g52) = g
    (h11, h21, h31, h41, h51), (h12, h22, h32, h42, h52) = h
    out = np.empty((2, 5))
    if direction == "forward":
        out[0, 0] = g11 * h11 + g21 * h12
        out[1, 0] = g12 * h11 + g22 * h12
        out[0, 1] = g11 * h21 + g21 * h22
        out[1, 1] = g12 * h21 + g22 * h22
        out[0, 2] = g11 * h31 + g21 * h32 + g31 * h11**2 + g41 * h11 * h12 + g51 * h12**2
        out[1, 2] = g12 * h31 + g22 * h32 + g32 * h11**2 + g42 * h11 * h12 + g52 * h12**2
        out[0, 3] = (
            g11 * h41
            + g21 * h42
            + 2 * g31 * h11 * h21
            + g41 * (h11 * h22 + h21 * h12)
            + 2 * g51 * h12 * h22
        )
        out[1, 3] = (
            g12 * h41
            + g22 * h42
            + 2 * g32 * h11 * h21
            + g42 * (h11 * h22 + h21 * h12)
            + 2 * g52 * h12 * h22
        )
        out[0, 4] = g11 * h51 + g21 * h52 + g31 * h21**2 + g41 * h21 * h22 + g51 * h22**2
        out[1, 4] = g12 * h51 + g22 * h52 + g32 * h21**2 + g42 * h21 * h22 + g52 * h22**2
    elif direction == "backward":
        out[0, 0] = -g11 * h11 - g12 * h21
        out[1, 0] = -g11 * h12 - g12 * h22
        out[0, 1] = -g21 * h11 - g22 * h21
        out[1, 1] = -g21 * h12 - g22 * h22
        out[0, 2] = -2 * g11 * h31 - g31 * h11 - g12 * h41 - g32 * h21
        out[1, 2] = -2 * g11 * h32 - g31 * h12 - g12 * h42 - g32 * h22
        out[0, 3] = (
            -g11 * h41 - 2 * g21 * h31 - g41 * h11 - 2 * g12 * h51 - g22 * h41 - g42 * h21
        )
        out[1, 3] = (
            -g11 * h42 - 2 * g21 * h32 - g41 * h12 - 2 * g12 * h52 - g22 * h42 - g42 * h22
        )
        out[0, 4] = -g21 * h41 - g51 * h11 - 2 * g22 * h51 - g52 * h21
        out[1, 4] = -g21 * h42 - g51 * h12 - 2 * g22 * h52 - g52 * h22
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return out


def forward_variational_rhs(
    g: np.ndarray, h: np.ndarray, table: MonomialTable
) -> np.ndarray:
    """Generic forward coefficient derivatives for arbitrary forcing values.

    ``g`` and ``h`` are (m, L) arrays in jet ranks with column 0 ignored.
    Computes hdot_a = sum_r g[a, r] * (monomial r composed with the h series),
    the composition being evaluated with jet products.  Exists as the generic
    counterpart of :func:`two_var_oracle_rhs`; the production forward path in
    :func:`forward_solve` gets the same result implicitly.
    """
    m, L = g.shape
    if (m, L) != (table.m, table.L) or h.shape != (m, L):
        raise ValueError("g and h must have shape (table.m, table.L)")
    series = []
    for a in range(m):
        coeffs = h[a].copy()
        coeffs[0] = 0.0
        series.append(Jet(table, coeffs))
    out = np.zeros((m, L))
    for i in range(1, L):
        composed = constant(table, 1.0)
        for b, exponent in enumerate(table.exponents[i]):
            for _ in range(int(exponent)):
                composed = composed * series[b]
        for a in range(m):
            out[a] += g[a, i] * composed.coeffs
    out[:, 0] = 0.0
    return out


# -- parameter lifting -----------------------------------------------------------


def lift_parameters(
    rhs: Callable[[tuple, float, tuple], Sequence],
    m: int,
    param_values: Sequence[float],
) -> OdeSystem:
    """Adjoin parameters as trailing state variables with zero derivatives.

    ``rhs(state, t, params)`` defines the m dynamical derivatives and must be
    polynomial in both the state and the parameters.  The returned system has
    dimension ``m + len(param_values)``; maps expanded for it carry parameter
    deviations as extra initial-condition variables, and the parameter rows
    of any such map are exact identities.
    """
    values = tuple(float(v) for v in param_values)
    n = len(values)

    def lifted(state: tuple, t: float):
        dyn = rhs(tuple(state[:m]), t, tuple(state[m:]))
        return tuple(dyn) + tuple(0.0 * state[m + b] for b in range(n))

    return OdeSystem(dim=m + n, rhs=lifted, n_params=n, param_values=values)


def fix_parameters(system: OdeSystem) -> OdeSystem:
    """Freeze a lifted system's parameters at their design values.

    Returns the plain dynamical system (dimension ``m_dynamical``) whose
    right side sees the parameters as constants of the working algebra.
    """
    if system.n_params == 0:
        return system
    m = system.n_dynamical
    values = system.param_values

    def frozen(state: tuple, t: float):
        anchor = state[0]
        params = tuple(0.0 * anchor + v for v in values)
        return system.rhs(tuple(state) + params, t)[:m]

    return OdeSystem(dim=m, rhs=frozen)
