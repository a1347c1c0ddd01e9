"""Cycle integrals, normalized differentials, the Riemann matrix, and the
second-kind differential with a double pole at infinity.

All differentials handled here have the shape

    eta = (polynomial(lambda) + sum_p  c_p / (lambda - s_p)) * d(lambda) / mu,

which covers the holomorphic basis lambda^k * phi, the normalized basis
omega_j, the second-kind differential, and the bidifferential with one
argument frozen at a ramification point.  Contours are lifted ellipses with
spectrally convergent trapezoidal quadrature and adaptive node doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cycles as _cycles
from .curves import BranchConfig, phi_values, require_valid, v_polynomial
from .cycles import CanonicalBasis, CycleSpec, EllipseContour
from .errors import NoConvergence, SingularPeriodMatrix

_MAX_NODES = 1 << 17


@dataclass(frozen=True)
class DifferentialOverMu:
    """Coefficient description of (poly(lambda) + sum c/(lambda-s)) * dlambda / mu."""

    poly: tuple = ()          # ascending coefficients
    poles: tuple = ()         # ((s, c), ...) simple poles of the rational prefactor

    def rational_part(self, lam: np.ndarray) -> np.ndarray:
        out = np.zeros_like(lam, dtype=complex)
        if self.poly:
            out = out + np.polyval(np.asarray(self.poly)[::-1], lam)
        for s, c in self.poles:
            out = out + c / (lam - s)
        return out


def monomial(k: int) -> DifferentialOverMu:
    """lambda^k * dlambda / mu."""
    return DifferentialOverMu(poly=(0.0,) * k + (1.0,))


def integrate_contour(contour: EllipseContour, diffs, tol: float = 1e-10,
                      n_start: int = 64):
    """Integrate one or more differentials over a lifted contour.

    Doubles the node count until two successive trapezoidal values agree
    within ``tol`` (relative to max(1, magnitude)).  Returns (values, nodes,
    error_estimate).
    """
    single = isinstance(diffs, DifferentialOverMu)
    dlist = [diffs] if single else list(diffs)
    # make sure branch tracking resolves the closest approach to branch points
    ratio = (contour.semi_major + contour.semi_minor) / max(contour.min_clearance(), 1e-300)
    n = max(n_start, 8 * int(ratio))
    n = 1 << int(math.ceil(math.log2(n)))
    prev = None
    while n <= _MAX_NODES:
        lam, w, mu = contour.nodes(n)
        vals = np.array([np.sum(d.rational_part(lam) * w / mu) for d in dlist])
        if prev is not None:
            err = float(np.max(np.abs(vals - prev)))
            if err <= tol * max(1.0, float(np.max(np.abs(vals)))):
                return (vals[0] if single else vals), n, err
        prev = vals
        n *= 2
    raise NoConvergence(f"contour quadrature did not converge within {_MAX_NODES} nodes")


def cycle_integral(cfg: BranchConfig, diff: DifferentialOverMu, cycle: CycleSpec,
                   tol: float = 1e-10) -> complex:
    """Integral of a differential over one homology cycle of the curve."""
    require_valid(cfg)
    contour = _cycles.realize(cycle, cfg.points)
    val, _, _ = integrate_contour(contour, diff, tol)
    return complex(val)


def eval_at_infinity(points: np.ndarray, diff: DifferentialOverMu,
                     radius_factor: float = 10.0, n: int = 256):
    """Laurent data of a differential at the branch point at infinity.

    Expands eta / d(zeta) in the local parameter zeta = 1 / sqrt(lambda) on
    the sheet where mu ~ +lambda^(g + 1/2), by sampling on |lambda| = R with
    R = radius_factor * max|branch point| and Fourier transforming.  Returns
    (coефficients dict for zeta powers -2..2, value at infinity, double-pole
    coefficient, residual estimate from a Richardson check at 2R).
    """
    pts = np.asarray(points, dtype=complex)

    def fit(R):
        rho = 1.0 / math.sqrt(R)
        zeta = rho * np.exp(2j * math.pi * np.arange(n) / n)
        lam = zeta ** -2
        # principal sqrt of the product of (1 - p * zeta^2): analytic near zeta = 0
        prod = np.prod(1.0 - pts[None, :] * zeta[:, None] ** 2, axis=1)
        mu = zeta ** -(len(pts)) * np.sqrt(prod)
        h = -2.0 * zeta ** -3 * diff.rational_part(lam) / mu
        coef = np.fft.fft(h) / n
        out = {}
        for k in range(-4, 5):
            out[k] = complex(coef[k % n] / rho ** k)
        return out

    R = radius_factor * max(1.0, float(np.max(np.abs(pts))))
    c1 = fit(R)
    c2 = fit(2.0 * R)
    resid = max(abs(c1[k] - c2[k]) for k in (-2, -1, 0))
    return c2, c2[0], c2[-2], resid


@dataclass
class PeriodData:
    """Raw and normalized period data of a marked curve.

    ``A_raw[j, k]`` holds the a_j-period of lambda^(k-1) * phi; ``C[j, k]``
    the coefficients of omega_j = sum_k C[j, k] lambda^(k-1) phi; ``B`` the
    Riemann matrix.  ``omega_at[j, q]`` evaluates omega_j at ramification
    point q (columns follow the package point indexing; the final column is
    the point at infinity).
    """

    cfg: BranchConfig
    basis: CanonicalBasis
    A_raw: np.ndarray
    A_ext: np.ndarray
    C: np.ndarray
    B: np.ndarray
    omega_at: np.ndarray
    phi_at: np.ndarray
    tol: float
    quad_report: dict
    _contours_a: list = field(repr=False, default=None)
    _contours_b: list = field(repr=False, default=None)

    @property
    def genus(self) -> int:
        return self.cfg.genus

    def omega_at_infinity(self) -> np.ndarray:
        return self.omega_at[:, -1]


def _realize_basis(points, basis):
    ca = [_cycles.realize(s, points) for s in basis.a]
    cb = [_cycles.realize(s, points) for s in basis.b]
    return ca, cb


def normalized_basis(cfg: BranchConfig, basis: CanonicalBasis | None = None,
                     tol: float = 1e-10, need_b: bool = True) -> PeriodData:
    """Normalize the holomorphic differentials and assemble period data.

    Solves sum_k C[j, k] * A_raw[., k] = identity so that the a-periods of
    omega_j are delta_jk, fills the Riemann matrix from b-periods (skipped
    when ``need_b`` is false, for inner deformation steps that only require
    a-normalization), and tabulates evaluations at all ramification points.
    """
    require_valid(cfg)
    g = cfg.genus
    points = cfg.points
    if basis is None:
        basis = _cycles.gap_basis(points)
    ca, cb = _realize_basis(points, basis)

    mons = [monomial(k) for k in range(g + 1)]
    A_ext = np.empty((g, g + 1), dtype=complex)
    report = {"tol": tol, "a_nodes": [], "a_err": [], "b_nodes": [], "b_err": []}
    for j, contour in enumerate(ca):
        vals, n, err = integrate_contour(contour, mons, tol)
        A_ext[j] = vals
        report["a_nodes"].append(n)
        report["a_err"].append(err)
    A_raw = A_ext[:, :g]
    if not np.all(np.isfinite(A_raw)) or np.linalg.cond(A_raw) > 1e12:
        raise SingularPeriodMatrix(f"a-period matrix condition {np.linalg.cond(A_raw):.2e}")
    C = np.linalg.inv(A_raw).T
    report["cond_A"] = float(np.linalg.cond(A_raw))

    B = np.full((g, g), np.nan, dtype=complex)
    if need_b:
        B_raw = np.empty((g, g), dtype=complex)
        for j, contour in enumerate(cb):
            vals, n, err = integrate_contour(contour, mons[:g], tol)
            B_raw[j] = vals
            report["b_nodes"].append(n)
            report["b_err"].append(err)
        B = B_raw @ np.linalg.inv(A_raw)

    phis = phi_values(points)
    lam = points
    omega_at = np.empty((g, 2 * g + 2), dtype=complex)
    for j in range(g):
        poly = C[j]
        omega_at[j, :-1] = np.polyval(poly[::-1], lam) * phis
        # at infinity lambda^(g-1) phi -> -2 d(zeta) on the principal sheet
        omega_at[j, -1] = -2.0 * poly[g - 1]
    return PeriodData(cfg=cfg, basis=basis, A_raw=A_raw, A_ext=A_ext, C=C, B=B,
                      omega_at=omega_at, phi_at=phis, tol=tol, quad_report=report,
                      _contours_a=ca, _contours_b=cb)


@dataclass
class OmegaDifferential:
    """Second-kind differential with a double pole at infinity.

    Represented as -(lambda^g + c_{g-1} lambda^{g-1} + ... + c_0) * phi / 2
    plus the combination alpha . omega fixing the prescribed a-periods; the
    sign makes the local expansion (zeta^-2 + O(1)) d(zeta) at infinity on
    the principal sheet.
    """

    cfg: BranchConfig
    alpha: np.ndarray
    c: np.ndarray                 # ascending coefficients c_0..c_{g-1}
    beta: np.ndarray              # b-periods
    values_at: np.ndarray         # evaluations at finite ramification points
    beta_residual: float          # |beta - (2 pi i omega(inf) + alpha B)|

    @property
    def poly(self) -> np.ndarray:
        """Ascending coefficients of the full degree-g polynomial (monic)."""
        return np.concatenate((self.c, [1.0 + 0.0j]))

    def differential(self, pd: PeriodData) -> DifferentialOverMu:
        coeffs = (-0.5 * self.poly).astype(complex)
        if np.any(self.alpha != 0):
            coeffs[: len(self.c)] += self.alpha @ pd.C
        return DifferentialOverMu(poly=tuple(coeffs))


def build_omega(cfg: BranchConfig, pd: PeriodData, alpha=None,
                tol: float = 1e-10, need_beta: bool = True) -> OmegaDifferential:
    """Construct the second-kind differential with prescribed a-periods.

    The polynomial coefficients solve the g x g linear system that kills the
    a-periods of -(lambda^g + ...) phi / 2; adding alpha . omega then sets
    a-period j to alpha_j.  b-periods are computed by quadrature and checked
    against 2 pi i omega(infinity) + alpha B.
    """
    g = cfg.genus
    alpha = np.zeros(g, dtype=complex) if alpha is None else np.asarray(alpha, dtype=complex)
    try:
        c = np.linalg.solve(pd.A_raw, -pd.A_ext[:, g])
    except np.linalg.LinAlgError as exc:
        raise SingularPeriodMatrix(str(exc)) from exc

    poly_full = np.concatenate((c, [1.0 + 0.0j]))
    lam = cfg.points
    base_vals = -0.5 * np.polyval(poly_full[::-1], lam) * pd.phi_at
    values = base_vals + alpha @ pd.omega_at[:, :-1]

    om = OmegaDifferential(cfg=cfg, alpha=alpha, c=c, beta=np.full(g, np.nan, dtype=complex),
                           values_at=values, beta_residual=float("nan"))
    if need_beta:
        diff = om.differential(pd)
        beta = np.empty(g, dtype=complex)
        for k, contour in enumerate(pd._contours_b):
            val, _, _ = integrate_contour(contour, diff, tol)
            beta[k] = val
        expected = 2j * math.pi * pd.omega_at[:, -1] + alpha @ pd.B
        om.beta = beta
        om.beta_residual = float(np.max(np.abs(beta - expected)))
    return om


def beta_from_evaluations(pd: PeriodData, alpha=None) -> np.ndarray:
    """b-periods via 2 pi i omega(infinity) + alpha B (no extra quadrature)."""
    g = pd.genus
    base = 2j * math.pi * pd.omega_at[:, -1]
    if alpha is None or not np.any(np.asarray(alpha) != 0):
        return base
    return base + np.asarray(alpha, dtype=complex) @ pd.B


@dataclass
class WEvaluation:
    """The symmetric bidifferential evaluated at a pair of ramification points."""

    j: int
    k: int
    value: complex
    value_swapped: complex
    I_constants: np.ndarray       # normalization constants of the expansion at point k
    symmetry_defect: float


def _v_period_matrix(cfg: BranchConfig, pd: PeriodData) -> np.ndarray:
    """a-periods of the dual basis v_i (columns i, rows cycles)."""
    g = cfg.genus
    out = np.empty((g, g), dtype=complex)
    for i in range(1, g + 1):
        poly = v_polynomial(cfg, i)
        out[:, i - 1] = pd.A_ext[:, : len(poly)] @ poly
    return out


def w_constants(cfg: BranchConfig, pd: PeriodData, k: int, tol: float = 1e-10) -> np.ndarray:
    """Normalization constants of W(., P_k) in the dual-basis expansion.

    W(P, P_k) = phi(P) / (phi(P_k) (lambda(P) - lambda_k)) + sum_i I_i v_i(P),
    with the I vector fixed by vanishing a-periods of W.
    """
    g = cfg.genus
    lam_k = cfg.point(k)
    pole = DifferentialOverMu(poles=((lam_k, 1.0 / pd.phi_at[k]),))
    w = np.empty(g, dtype=complex)
    for n, contour in enumerate(pd._contours_a):
        val, _, _ = integrate_contour(contour, pole, tol)
        w[n] = val
    V = _v_period_matrix(cfg, pd)
    return np.linalg.solve(V, -w)


def w_value(cfg: BranchConfig, pd: PeriodData, j: int, k: int, I_k: np.ndarray) -> complex:
    """W(P_j, P_k) from the expansion based at point k."""
    lam_j, lam_k = cfg.point(j), cfg.point(k)
    val = pd.phi_at[j] / (pd.phi_at[k] * (lam_j - lam_k))
    for i in range(1, cfg.genus + 1):
        poly = v_polynomial(cfg, i)
        val += I_k[i - 1] * np.polyval(poly[::-1], lam_j) * pd.phi_at[j]
    return complex(val)


def eval_W_pair(cfg: BranchConfig, pd: PeriodData, j: int, k: int,
                tol: float = 1e-10) -> WEvaluation:
    """Evaluate the bidifferential at a pair of finite ramification points.

    Computes both expansion orders and reports the symmetry defect, a direct
    numerical check of W(P_j, P_k) = W(P_k, P_j).
    """
    if j == k:
        raise ValueError("the bidifferential has a pole on the diagonal; need j != k")
    I_k = w_constants(cfg, pd, k, tol)
    I_j = w_constants(cfg, pd, j, tol)
    v_jk = w_value(cfg, pd, j, k, I_k)
    v_kj = w_value(cfg, pd, k, j, I_j)
    scale = max(1.0, abs(v_jk))
    return WEvaluation(j=j, k=k, value=v_jk, value_swapped=v_kj, I_constants=I_k,
                       symmetry_defect=abs(v_jk - v_kj) / scale)


def wavevector_U(cfg: BranchConfig, pd: PeriodData) -> np.ndarray:
    """The vector omega(P_infinity) governing spatial quasi-periodicity.

    Equals the b-period vector of the zero-a-period second-kind differential
    divided by 2 pi i.
    """
    return pd.omega_at[:, -1].copy()
