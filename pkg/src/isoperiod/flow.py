"""Isoperiodic deformation flows.

Moving the independent branch points x while forcing all periods of the
second-kind differential to stay constant determines u(x).  Two integration
modes are provided:

* ``implicit``: at every step the curve's periods are recomputed, the
  first-order system du_m/dx_j = -v_m(P_xj) Omega(P_xj) / Omega(P_um) is
  evaluated from fresh period data, and an optional Newton projection pulls
  the state back onto the constant-b-period manifold.
* ``rational``: the second-order system with rational coefficients is
  integrated directly; no period computations happen inside the stepper.

Multi-dimensional paths are integrated coordinate-by-coordinate along
axis-aligned legs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .curves import BranchConfig, idx_u, idx_x, idx_zero, v_polynomial
from .errors import (DriftExceeded, NoProgress, SingularJacobian, SingularLocus,
                     VanishingOmegaAtU)
from .periods import (OmegaDifferential, PeriodData, beta_from_evaluations,
                      build_omega, normalized_basis, w_constants, w_value)

IMPLICIT = "implicit"
RATIONAL = "rational"


# ---------------------------------------------------------------------------
# first-order system
# ---------------------------------------------------------------------------

def first_derivatives(cfg: BranchConfig, pd: PeriodData, om: OmegaDifferential,
                      zero_tol: float = 1e-11) -> np.ndarray:
    """du[m-1, j-1] = du_m/dx_j for the isoperiodic family through cfg.

    Requires Omega(P_{u_m}) != 0 for every m; a vanishing value means the
    constant-period manifold is not a graph over x there.
    """
    g = cfg.genus
    scale = float(np.max(np.abs(om.values_at))) or 1.0
    for m in range(1, g + 1):
        if abs(om.values_at[idx_u(m)]) < zero_tol * scale:
            raise VanishingOmegaAtU(m, om.values_at[idx_u(m)])
    du = np.empty((g, g), dtype=complex)
    for m in range(1, g + 1):
        vm = v_polynomial(cfg, m)
        for j in range(1, g + 1):
            xj = idx_x(g, j)
            v_at_xj = np.polyval(vm[::-1], cfg.point(xj)) * pd.phi_at[xj]
            du[m - 1, j - 1] = -v_at_xj * om.values_at[xj] / om.values_at[idx_u(m)]
    return du


# ---------------------------------------------------------------------------
# rational second-order system
# ---------------------------------------------------------------------------

def _check_regular(x: np.ndarray, u: np.ndarray, threshold: float):
    pts = np.concatenate(([0.0], np.asarray(x, dtype=complex), np.asarray(u, dtype=complex)))
    scale = max(1.0, float(np.max(np.abs(pts))))
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(pts[i] - pts[j]) < threshold * scale:
                raise SingularLocus(f"branch points {pts[i]} and {pts[j]} within {threshold * scale}")


def rhs_genus1(x: complex, u: complex, du: complex) -> complex:
    """Second derivative u'' of the genus-one isoperiodic deformation."""
    _check_regular(np.array([x]), np.array([u]), 1e-8)
    return (0.5 * (1.0 / x + 1.0 / (u - x))
            - 0.5 * du * (2.0 / x + 1.0 / (u - x))
            + 0.5 * du ** 2 * (2.0 / u + 1.0 / (x - u))
            - 0.5 * du ** 3 * (1.0 / u + 1.0 / (x - u)))


def rhs_genus_g(x, u, du) -> np.ndarray:
    """Full second-derivative tensor T[m, k, n] = d^2 u_{m+1} / dx_{k+1} dx_{n+1}.

    Rational in (x, u, du); the mixed entries are symmetric in (k, n) by
    construction.  Valid for every genus >= 1 (the genus-one diagonal entry
    reduces to :func:`rhs_genus1`).
    """
    x = np.asarray(x, dtype=complex)
    u = np.asarray(u, dtype=complex)
    du = np.asarray(du, dtype=complex)
    g = len(x)
    _check_regular(x, u, 1e-8)
    T = np.empty((g, g, g), dtype=complex)

    # per-m invariants
    S = du.sum(axis=1)                                   # sum_i du_m/dx_i
    lag = np.empty(g, dtype=complex)                     # prod_{s != j} u_s / (u_s - u_j)
    for j in range(g):
        others = np.delete(u, j)
        lag[j] = np.prod(others / (others - u[j]))

    for m in range(g):
        u_others = np.delete(u, m)
        um = u[m]
        P_m = np.prod((u_others - um) / u_others)
        G_m = 1.0 / um - sum(lag[j] / (um - u[j]) for j in range(g) if j != m)
        # H_m = sum_j du[m,j] * ( 1/(x_j - u_m) * prod_{i != m} (u_m - u_i)/(x_j - u_i)
        #       + sum_{i != m} (x_j - u_m) / ((x_j - u_i)(u_m - u_i)) * R_i )
        # with R_i = prod_{s != m}(u_m - u_s) / prod_{s != i}(u_i - u_s)
        prod_m = np.prod(um - u_others)
        H_m = 0.0 + 0.0j
        for j in range(g):
            term = (1.0 / (x[j] - um)) * np.prod((um - u_others) / (x[j] - u_others))
            inner = 0.0 + 0.0j
            for i in range(g):
                if i == m:
                    continue
                R_i = prod_m / np.prod(u[i] - np.delete(u, i))
                inner += (x[j] - um) / ((x[j] - u[i]) * (um - u[i])) * R_i
            H_m += du[m, j] * (term + inner)

        for k in range(g):
            # diagonal entry
            xk = x[k]
            x_others_k = np.delete(x, k)
            line1 = (-1.0 / xk - np.sum(1.0 / (xk - x_others_k))
                     + 2.0 * sum(1.0 / (xk - u[j]) for j in range(g) if j != m)
                     + 1.0 / (xk - um))
            line2 = (1.0 / um + np.sum(1.0 / (um - x_others_k))
                     - 2.0 * sum(1.0 / (um - u[j]) for j in range(g) if j != m)
                     + 1.0 / (xk - um))
            line3 = sum((1.0 / (um - u[j]) - 1.0 / (xk - u[j])) * du[j, k]
                        for j in range(g) if j != m)
            Px_mk = np.prod((u_others - xk) / u_others)
            Gx_k = 1.0 / xk - sum(lag[j] / (xk - u[j]) for j in range(g))
            line6 = sum((1.0 / (x[j] - xk)) * np.prod((xk - u_others) / (x[j] - u_others))
                        * du[m, j]
                        for j in range(g) if j != k)
            line7 = 0.0 + 0.0j
            for i in range(g):
                pref = np.prod((xk - np.delete(u, i)) / (u[i] - np.delete(u, i)))
                for j in range(g):
                    line7 += ((x[j] - um) / ((x[j] - u[i]) * (xk - um))) * pref * du[m, j]
            T[m, k, k] = (0.5 * du[m, k] * line1
                          + 0.5 * du[m, k] ** 2 * line2
                          + 0.5 * du[m, k] * line3
                          - 0.5 * (S[m] - 1.0) * Px_mk * Gx_k
                          - 0.5 * du[m, k] ** 2 * (S[m] - 1.0) * P_m * G_m
                          - 0.5 * line6
                          - 0.5 * line7
                          - 0.5 * du[m, k] ** 2 * H_m)
            # mixed entries
            for n in range(k + 1, g):
                xn = x[n]
                cross = (1.0 / um
                         + sum(1.0 / (um - x[i]) for i in range(g) if i not in (k, n))
                         - 2.0 * sum(1.0 / (um - u[i]) for i in range(g) if i != m))
                sym_k = sum((1.0 / (um - u[j]) - 1.0 / (xk - u[j])) * du[j, n]
                            for j in range(g) if j != m)
                sym_n = sum((1.0 / (um - u[j]) - 1.0 / (xn - u[j])) * du[j, k]
                            for j in range(g) if j != m)
                val = (0.5 * du[m, k] * (1.0 / (xk - xn) + 1.0 / (xn - um))
                       + 0.5 * du[m, n] * (1.0 / (xn - xk) + 1.0 / (xk - um))
                       + 0.5 * du[m, k] * du[m, n] * cross
                       + 0.25 * du[m, k] * sym_k
                       + 0.25 * du[m, n] * sym_n
                       - 0.5 * du[m, k] * du[m, n] * (S[m] - 1.0) * P_m * G_m
                       - 0.5 * du[m, k] * du[m, n] * H_m)
                T[m, k, n] = val
                T[m, n, k] = val
    return T


def rhs_genus2_example(x, u, du) -> np.ndarray:
    """Hard-coded genus-two closed forms, as a cross-check of rhs_genus_g."""
    x = np.asarray(x, dtype=complex)
    u = np.asarray(u, dtype=complex)
    du = np.asarray(du, dtype=complex)
    if len(x) != 2:
        raise ValueError("genus-two formulas")
    _check_regular(x, u, 1e-8)

    def mixed(x1, x2, u1, u2, d11, d12, d21, d22):
        # d^2 u_1 / dx_1 dx_2 in terms of du_a/dx_b = d_ab.
        # Third-line coefficient must be (2/u1 + 1/(u2 - u1)): anything else
        # breaks agreement with the general system and with finite
        # differences of the period-preserving flow.
        return (0.5 * d11 * (1.0 / (x1 - x2) + 1.0 / (x2 - u1))
                + 0.5 * d12 * (1.0 / (x2 - x1) + 1.0 / (x1 - u1))
                + 0.5 * d11 * d12 * (2.0 / u1 + 1.0 / (u2 - u1))
                + 0.25 * d11 * d22 * (1.0 / (u1 - u2) - 1.0 / (x1 - u2))
                + 0.25 * d12 * d21 * (1.0 / (u1 - u2) - 1.0 / (x2 - u2))
                - 0.5 * d11 ** 2 * d12 * (1.0 / u1 + 1.0 / (x1 - u1))
                - 0.5 * d11 * d12 ** 2 * (1.0 / u1 + 1.0 / (x2 - u1)))

    def diag(x1, x2, u1, u2, d11, d12, d21, d22):
        # d^2 u_1 / dx_1^2
        return (0.5 * (1.0 / x1 - 1.0 / (x1 - u1))
                + 0.5 * d11 * (-2.0 / x1 - 1.0 / (x1 - x2) + 1.0 / (x1 - u2) + 1.0 / (x1 - u1))
                - 0.5 * d12 * (1.0 / x1 + 1.0 / (x2 - x1))
                + 0.5 * d11 ** 2 * (2.0 / u1 + 1.0 / (u1 - x2) - 1.0 / (u1 - u2) + 1.0 / (x1 - u1))
                + 0.5 * d11 * d21 * (1.0 / (u1 - u2) - 1.0 / (x1 - u2))
                - 0.5 * d11 ** 3 * (1.0 / u1 + 1.0 / (x1 - u1))
                - 0.5 * d11 ** 2 * d12 * (1.0 / u1 + 1.0 / (x2 - u1)))

    x1, x2 = x
    u1, u2 = u
    T = np.empty((2, 2, 2), dtype=complex)
    # m = 1: as displayed; m = 2: swap u1 <-> u2 (rows of du)
    T[0, 0, 1] = T[0, 1, 0] = mixed(x1, x2, u1, u2, du[0, 0], du[0, 1], du[1, 0], du[1, 1])
    T[1, 0, 1] = T[1, 1, 0] = mixed(x1, x2, u2, u1, du[1, 0], du[1, 1], du[0, 0], du[0, 1])
    T[0, 0, 0] = diag(x1, x2, u1, u2, du[0, 0], du[0, 1], du[1, 0], du[1, 1])
    T[1, 0, 0] = diag(x1, x2, u2, u1, du[1, 0], du[1, 1], du[0, 0], du[0, 1])
    # swap x1 <-> x2 (columns of du) for the second diagonal
    T[0, 1, 1] = diag(x2, x1, u1, u2, du[0, 1], du[0, 0], du[1, 1], du[1, 0])
    T[1, 1, 1] = diag(x2, x1, u2, u1, du[1, 1], du[1, 0], du[0, 1], du[0, 0])
    return T


# ---------------------------------------------------------------------------
# Newton projection onto the constant-period manifold
# ---------------------------------------------------------------------------

def period_jacobian(cfg: BranchConfig, pd: PeriodData, om: OmegaDifferential) -> np.ndarray:
    """J[j-1, k-1] = d beta_k / d u_j = pi i Omega(P_{u_j}) omega_k(P_{u_j})."""
    g = cfg.genus
    J = np.empty((g, g), dtype=complex)
    for j in range(1, g + 1):
        J[j - 1, :] = 1j * math.pi * om.values_at[idx_u(j)] * pd.omega_at[:, idx_u(j)]
    return J


def newton_correct(cfg: BranchConfig, alpha, beta_target, basis=None,
                   tol: float = 1e-11, quad_tol: float = 1e-11,
                   max_iter: int = 5):
    """Newton-project u onto beta(x, u) = beta_target at fixed x.

    Returns (corrected cfg, final residual, iterations).  Raises
    SingularJacobian / NoProgress on failure.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta_target = np.asarray(beta_target, dtype=complex)
    u = np.asarray(cfg.u, dtype=complex)
    res_prev = None
    for it in range(max_iter + 1):
        work = cfg.replace(u=u)
        pd = normalized_basis(work, basis=basis, tol=quad_tol)
        om = build_omega(work, pd, alpha, need_beta=False)
        beta = beta_from_evaluations(pd, alpha)
        r = beta - beta_target
        res = float(np.max(np.abs(r)))
        if res <= tol:
            return work, res, it
        if res_prev is not None and res > res_prev and it >= 3:
            raise NoProgress(f"Newton residual stalled at {res:.3e}")
        res_prev = res
        J = period_jacobian(work, pd, om)
        if np.linalg.cond(J) > 1e13:
            raise SingularJacobian(f"period Jacobian condition {np.linalg.cond(J):.2e}")
        u = u - np.linalg.solve(J.T, r)
    work = cfg.replace(u=u)
    pd = normalized_basis(work, basis=basis, tol=quad_tol)
    beta = beta_from_evaluations(pd, alpha)
    res = float(np.max(np.abs(beta - beta_target)))
    if res > tol:
        raise NoProgress(f"Newton correction stopped above tolerance: {res:.3e}")
    return work, res, max_iter


# ---------------------------------------------------------------------------
# flow integration
# ---------------------------------------------------------------------------

@dataclass
class FlowControl:
    quad_tol: float = 1e-11
    rk_rtol: float = 1e-9
    rk_atol: float = 1e-12
    macro_step: float = 0.01
    correct: bool = True
    newton_tol: float = 1e-11
    drift_tol: float | None = None      # raise DriftExceeded beyond this
    verify_beta: bool = True            # recompute b-periods at every sample
    max_halvings: int = 40


@dataclass
class DeformationState:
    cfg: BranchConfig
    alpha: np.ndarray
    beta_target: np.ndarray | None = None
    mode: str = IMPLICIT
    du: np.ndarray | None = None
    basis: object = None

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=complex)


@dataclass
class FlowSample:
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    beta_drift: np.ndarray
    info: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    samples: list
    path: list
    beta_target: np.ndarray
    alpha: np.ndarray
    mode: str

    def max_drift(self) -> float:
        return max(float(np.max(np.abs(s.beta_drift))) for s in self.samples)

    def grid(self):
        xs = np.array([s.x for s in self.samples])
        us = np.array([s.u for s in self.samples])
        return xs, us


def _axis_legs(path):
    """Split a polyline in x-space into (coordinate, start, stop) legs."""
    path = [np.atleast_1d(np.asarray(p, dtype=complex)) for p in path]
    legs = []
    for p, q in zip(path, path[1:]):
        moved = np.nonzero(np.abs(q - p) > 0)[0]
        if len(moved) == 0:
            continue
        if len(moved) != 1:
            raise ValueError("flow paths must consist of axis-aligned legs; "
                             "split diagonal moves into per-coordinate legs")
        legs.append((int(moved[0]), p.copy(), q.copy()))
    return path, legs


def _implicit_rhs_factory(state: DeformationState, x_template, coord, control):
    def rhs(s, u):
        x = x_template.copy()
        x[coord] = s
        _check_regular(x, u, 1e-8)
        cfg = state.cfg.replace(x=x, u=u)
        pd = normalized_basis(cfg, basis=state.basis, tol=control.quad_tol, need_b=False)
        om = build_omega(cfg, pd, state.alpha, need_beta=False)
        du = first_derivatives(cfg, pd, om)
        return du[:, coord]
    return rhs


def _rational_rhs_factory(state: DeformationState, x_template, coord, genus):
    def rhs(s, y):
        x = x_template.copy()
        x[coord] = s
        u = y[:genus]
        du = y[genus:].reshape(genus, genus)
        T = rhs_genus_g(x, u, du)
        return np.concatenate((du[:, coord], T[:, :, coord].reshape(-1)))
    return rhs


def _solve_leg(rhs, s0, s1, y0, control):
    sol = solve_ivp(rhs, (s0, s1), y0, method="RK45",
                    rtol=control.rk_rtol, atol=control.rk_atol, dense_output=False)
    if not sol.success:
        raise SingularLocus(f"integrator failed on leg [{s0}, {s1}]: {sol.message}")
    return sol.y[:, -1]


def integrate_flow(state: DeformationState, path, control: FlowControl | None = None) -> Trajectory:
    """Integrate an isoperiodic deformation along an axis-aligned x-path.

    Samples are recorded at macro-step boundaries (spacing ``control.macro_step``
    along each leg).  In implicit mode each accepted macro step is optionally
    Newton-corrected back onto the constant-period manifold; in rational mode
    the state (u, du) evolves through the second-order rational system and
    b-periods are only recomputed for drift reporting.
    """
    control = control or FlowControl()
    cfg0 = state.cfg
    g = cfg0.genus
    path, legs = _axis_legs(path)
    if np.max(np.abs(path[0] - np.asarray(cfg0.x))) > 1e-12 * max(1.0, cfg0.scale()):
        raise ValueError("path must start at the configuration's x")

    pd0 = normalized_basis(cfg0, basis=state.basis, tol=control.quad_tol)
    om0 = build_omega(cfg0, pd0, state.alpha, need_beta=False)
    beta0 = beta_from_evaluations(pd0, state.alpha)
    beta_target = beta0 if state.beta_target is None else np.asarray(state.beta_target, dtype=complex)
    du0 = first_derivatives(cfg0, pd0, om0)
    if state.mode == RATIONAL and state.du is not None:
        du0 = np.asarray(state.du, dtype=complex)

    samples = [FlowSample(x=np.asarray(cfg0.x).copy(), u=np.asarray(cfg0.u).copy(),
                          du=du0.copy(), beta_drift=np.abs(beta0 - beta_target),
                          info={"leg": -1})]
    u = np.asarray(cfg0.u, dtype=complex)
    du = du0.copy()

    for leg_no, (coord, p, q) in enumerate(legs):
        s0, s1 = complex(p[coord]), complex(q[coord])
        length = abs(s1 - s0)
        nmacro = max(1, int(math.ceil(length / control.macro_step)))
        # real leg parameter tau in [0, 1]; s = s0 + tau * (s1 - s0)
        sgrid = [i / nmacro for i in range(nmacro + 1)]
        x_template = p.astype(complex).copy()
        if state.mode == IMPLICIT:
            rhs_s = _implicit_rhs_factory(state, x_template, coord, control)
        else:
            rhs_s = _rational_rhs_factory(state, x_template, coord, g)
        step = s1 - s0
        rhs = lambda tau, y: step * rhs_s(s0 + tau * step, y)  # noqa: E731

        for a, b in zip(sgrid, sgrid[1:]):
            # macro step with halving on singular-locus aborts
            done = False
            sub_from, target = a, b
            halvings = 0
            while not done:
                try:
                    if state.mode == IMPLICIT:
                        u = _solve_leg(rhs, sub_from, target, u, control)
                    else:
                        y = np.concatenate((u, du.reshape(-1)))
                        y = _solve_leg(rhs, sub_from, target, y, control)
                        u, du = y[:g], y[g:].reshape(g, g)
                    done = target == b
                    sub_from = target
                    target = b
                except SingularLocus:
                    halvings += 1
                    if halvings > control.max_halvings:
                        raise SingularLocus(
                            f"flow stopped near x[{coord}] = {s0 + sub_from * step}: singular locus")
                    target = sub_from + 0.5 * (target - sub_from)

            x_now = x_template.copy()
            x_now[coord] = s0 + b * step
            cfg_now = state.cfg.replace(x=x_now, u=u)
            info = {"leg": leg_no}
            if state.mode == IMPLICIT and control.correct:
                cfg_now, res, iters = newton_correct(
                    cfg_now, state.alpha, beta_target, basis=state.basis,
                    tol=control.newton_tol, quad_tol=control.quad_tol)
                u = np.asarray(cfg_now.u, dtype=complex)
                info.update(newton_residual=res, newton_iters=iters)

            pd = normalized_basis(cfg_now, basis=state.basis, tol=control.quad_tol,
                                  need_b=control.verify_beta)
            om = build_omega(cfg_now, pd, state.alpha, need_beta=False)
            du_fresh = first_derivatives(cfg_now, pd, om)
            if state.mode == IMPLICIT:
                du = du_fresh
            drift = (np.abs(beta_from_evaluations(pd, state.alpha) - beta_target)
                     if control.verify_beta else np.full(g, np.nan))
            if control.drift_tol is not None and np.max(drift) > control.drift_tol:
                raise DriftExceeded(f"period drift {np.max(drift):.3e} at x = {x_now}")
            info["du_consistency"] = float(np.max(np.abs(du_fresh - du)))
            samples.append(FlowSample(x=x_now.copy(), u=u.copy(), du=du.copy(),
                                      beta_drift=drift, info=info))
        # next leg continues from the leg's endpoint
    return Trajectory(samples=samples, path=path, beta_target=beta_target,
                      alpha=state.alpha, mode=state.mode)


# ---------------------------------------------------------------------------
# Hill condition
# ---------------------------------------------------------------------------

def _round_half_away(v: float) -> int:
    return int(math.floor(v + 0.5)) if v >= 0 else int(math.ceil(v - 0.5))


def hill_check(cfg: BranchConfig, pd: PeriodData, T, tol: float = 1e-8) -> dict:
    """Test whether the zero-a-period differential has b-periods 2 pi i n / T.

    Returns integer candidates n_j, their residuals, and ambiguity flags for
    residuals in (tol, 0.25).
    """
    beta = beta_from_evaluations(pd, None)
    n_exact = T * beta / (2j * math.pi)
    n = np.array([_round_half_away(v.real) for v in n_exact])
    residuals = np.abs(n_exact - n)
    return {
        "is_hill": bool(np.all(residuals < tol) and cfg.real),
        "n": n,
        "residuals": residuals,
        "ambiguous": [bool(tol < r < 0.25) for r in residuals],
        "T": T,
        "beta": beta,
    }


# ---------------------------------------------------------------------------
# identity verification harness
# ---------------------------------------------------------------------------

def verify_identities(cfg: BranchConfig, pd: PeriodData, om: OmegaDifferential,
                      tol: float = 1e-10) -> dict:
    """Evaluate both sides of the structural identities; report max mismatches.

    Covers the vanishing-residue sums, the coordinate expressions for the
    bidifferential at ramification-point pairs, and the genus-one relations
    between the bidifferential normalization constants.
    """
    g = cfg.genus
    x = np.asarray(cfg.x)
    u = np.asarray(cfg.u)
    report = {}
    om_at = om.values_at
    w_at = pd.omega_at

    v_at_tab = np.empty((g, 2 * g + 1), dtype=complex)
    for m in range(1, g + 1):
        poly = v_polynomial(cfg, m)
        v_at_tab[m - 1] = np.polyval(poly[::-1], cfg.points) * pd.phi_at

    if g == 1:
        report["omega_squares_sum"] = float(abs(np.sum(w_at[0, :-1] ** 2)))
        report["second_kind_residue_sum"] = float(abs(np.sum(w_at[0, :-1] * om_at)))

    # vanishing residue sum of the dual-basis-weighted second-kind values
    dual_residue = []
    slope_sum = []
    du = first_derivatives(cfg, pd, om)
    for m in range(1, g + 1):
        s = (om_at[idx_zero()] * v_at_tab[m - 1, idx_zero()]
             + sum(om_at[idx_x(g, i)] * v_at_tab[m - 1, idx_x(g, i)] for i in range(1, g + 1))
             + om_at[idx_u(m)])
        dual_residue.append(abs(s))
        lhs = om_at[idx_zero()] * v_at_tab[m - 1, idx_zero()] / om_at[idx_u(m)]
        slope_sum.append(abs(lhs - (np.sum(du[m - 1]) - 1.0)))
    report["dual_weighted_residue_sum"] = float(max(dual_residue))
    report["derivative_sum_rule"] = float(max(slope_sum))

    I_tab = {k: w_constants(cfg, pd, k, tol) for k in range(2 * g + 1)}

    def W(a, b):
        return w_value(cfg, pd, a, b, I_tab[b])

    sym = max(abs(W(a, b) - W(b, a)) for a in range(2 * g + 1) for b in range(a + 1, 2 * g + 1))
    report["W_symmetry"] = float(sym)
    report["beta_consistency"] = float(om.beta_residual)

    if g == 1:
        # genus-one normalization constants relative to omega
        w0, wu, wx = w_at[0, idx_zero()], w_at[0, idx_u(1)], w_at[0, idx_x(1, 1)]
        Iw = {k: I_tab[k][0] / wu for k in range(3)}
        I0, Iu, Ix = Iw[idx_zero()], Iw[idx_u(1)], Iw[idx_x(1, 1)]
        x1, u1 = x[0], u[0]
        rel0 = I0 - (-1.0 / (w0 * x1) + (Ix - 1.0 / (x1 * wx)) * w0 / wx)
        relu = Iu - ((1.0 / ((u1 - x1) * wx) + Ix) * wu / wx - 1.0 / ((x1 - u1) * wu))
        report["normalization_constant_relation"] = float(max(abs(rel0), abs(relu)))
        # both coordinate expressions for W(P_x, P_u)
        e1 = (1.0 / ((x1 - u1) * wu) + Iu) * wx
        e2 = (1.0 / ((u1 - x1) * wx) + Ix) * wu
        report["W_xu_two_forms"] = float(abs(e1 - e2))

    if g >= 2:
        t1 = []
        for k in range(1, g + 1):
            for n in range(1, g + 1):
                if n == k:
                    continue
                lhs = sum(W(idx_u(j), idx_x(g, k)) * v_at_tab[j - 1, idx_x(g, n)]
                          for j in range(1, g + 1))
                rational = (pd.phi_at[idx_x(g, n)] / pd.phi_at[idx_x(g, k)]
                            / (x[k - 1] - x[n - 1])
                            * np.prod(x[n - 1] - u) / np.prod(x[k - 1] - u))
                t1.append(abs(lhs - W(idx_x(g, n), idx_x(g, k)) - rational))
        report["w_dual_expansion_xx"] = float(max(t1))

        t2 = []
        for m in range(1, g + 1):
            for n in range(1, g + 1):
                lhs = sum(W(idx_u(j), idx_u(m)) * v_at_tab[j - 1, idx_x(g, n)]
                          for j in range(1, g + 1) if j != m)
                vmx = v_at_tab[m - 1, idx_x(g, n)]
                rhs = (W(idx_x(g, n), idx_u(m)) - vmx / (x[n - 1] - u[m - 1])
                       + vmx * sum(1.0 / (u[m - 1] - u[i - 1]) for i in range(1, g + 1) if i != m)
                       - vmx * I_tab[idx_u(m)][m - 1])
                t2.append(abs(lhs - rhs))
        report["w_dual_expansion_xu"] = float(max(t2))

        t3 = []
        for k in range(1, g + 1):
            xk = idx_x(g, k)
            lhs = sum(W(idx_u(j), xk) * v_at_tab[j - 1, xk] for j in range(1, g + 1))
            rhs = (sum(I_tab[xk][j - 1] * v_at_tab[j - 1, xk] for j in range(1, g + 1))
                   - np.sum(1.0 / (x[k - 1] - u)))
            t3.append(abs(lhs - rhs))
        report["w_dual_expansion_diag"] = float(max(t3))

    report["w_residue_sum_at_u"] = float(max(_w_residue_u_defect(cfg, pd, om, du, I_tab, W, m)
                                           for m in range(1, g + 1)))
    report["w_residue_sum_at_x"] = float(max(
        _w_residue_x_defect(cfg, pd, om, du, I_tab, W, v_at_tab, m, k)
        for m in range(1, g + 1) for k in range(1, g + 1)))
    return report


def _w_residue_u_defect(cfg, pd, om, du, I_tab, W, m):
    g = cfg.genus
    x = np.asarray(cfg.x)
    u = np.asarray(cfg.u)
    um = u[m - 1]
    u_others = np.delete(u, m - 1)
    O_um = om.values_at[idx_u(m)]
    lhs = (W(idx_u(m), idx_zero()) * om.values_at[idx_zero()] / O_um
           + sum(W(idx_u(m), idx_x(g, i)) * om.values_at[idx_x(g, i)] / O_um
                 for i in range(1, g + 1))
           + sum(W(idx_u(m), idx_u(j)) * om.values_at[idx_u(j)] / O_um
                 for j in range(1, g + 1) if j != m))
    S = np.sum(du[m - 1])
    prod_m = np.prod(um - u_others) if g > 1 else 1.0 + 0.0j
    term1 = prod_m / np.prod(-u)
    term2 = 0.0 + 0.0j
    for j in range(1, g + 1):
        if j == m:
            continue
        oth = np.delete(u, sorted({m - 1, j - 1}))
        num = um * (np.prod(um - oth) if len(oth) else 1.0)
        term2 += num / (u[j - 1] * np.prod(u[j - 1] - np.delete(u, j - 1)))
    rhs = (S - 1.0) * (term1 + term2)
    rhs -= sum(prod_m / np.prod(x[j - 1] - u) * du[m - 1, j - 1] for j in range(1, g + 1))
    for j in range(1, g + 1):
        if j == m:
            continue
        oth = np.delete(u, sorted({m - 1, j - 1}))
        for i in range(1, g + 1):
            num = (x[i - 1] - um) * (np.prod(um - oth) if len(oth) else 1.0)
            den = (x[i - 1] - u[j - 1]) * np.prod(u[j - 1] - np.delete(u, j - 1))
            rhs -= num / den * du[m - 1, i - 1]
    rhs -= I_tab[idx_u(m)][m - 1]
    return abs(lhs - rhs)


def _w_residue_x_defect(cfg, pd, om, du, I_tab, W, v_at_tab, m, k):
    g = cfg.genus
    x = np.asarray(cfg.x)
    u = np.asarray(cfg.u)
    um = u[m - 1]
    xk = x[k - 1]
    Oxk = om.values_at[idx_x(g, k)]
    T = (W(idx_x(g, k), idx_zero()) * om.values_at[idx_zero()] / Oxk
         + sum(W(idx_x(g, k), idx_x(g, j)) * om.values_at[idx_x(g, j)] / Oxk
               for j in range(1, g + 1) if j != k)
         + sum(W(idx_x(g, k), idx_u(j)) * om.values_at[idx_u(j)] / Oxk
               for j in range(1, g + 1)))
    lhs = du[m - 1, k - 1] * T
    S = np.sum(du[m - 1])
    u_others = np.delete(u, m - 1)
    term1 = np.prod(xk - u_others) / (xk * np.prod(-u_others))
    # uniform second group, valid including j = m (where the factored form
    # would otherwise drop its 1/(x_k - u_m))
    term2 = 0.0 + 0.0j
    for j in range(1, g + 1):
        term2 += ((um / u[j - 1]) * np.prod(xk - u_others)
                  / ((u[j - 1] - xk) * np.prod(u[j - 1] - np.delete(u, j - 1))))
    rhs = (S - 1.0) * (term1 + term2)
    rhs -= du[m - 1, k - 1] * sum(I_tab[idx_x(g, k)][j - 1] * v_at_tab[j - 1, idx_x(g, k)]
                                  for j in range(1, g + 1))
    for j in range(1, g + 1):
        if j == k:
            continue
        ratio = np.prod(xk - u_others) / np.prod(x[j - 1] - u_others)
        rhs += ratio / (x[j - 1] - xk) * du[m - 1, j - 1]
    for i in range(1, g + 1):
        for j in range(1, g + 1):
            num = (x[i - 1] - um) * np.prod(xk - u_others)
            den = (u[j - 1] - xk) * (x[i - 1] - u[j - 1]) * np.prod(u[j - 1] - np.delete(u, j - 1))
            rhs -= du[m - 1, i - 1] * num / den
    return abs(lhs - rhs)
