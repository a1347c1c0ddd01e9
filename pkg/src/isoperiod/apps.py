"""Application layer: one- and two-gap elliptic potentials, cnoidal waves,
Neumann spectral curves, and wavevector reports for spatially periodic
finite-gap data.

The elliptic-curve applications live on the shifted family with branch points
{0, u, x, infinity}: for root ordering e1 < e2 < e3 of 4 t^3 - g2 t - g3 (with
e1 = -e2 - e3), shifting by -e1 sends the curve to u = 2 e2 + e3,
x = e2 + 2 e3.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import flow as _flow
from .curves import BranchConfig, validate_config
from .errors import DegenerateConfig, LatticePoint, OrderingViolation
from .periods import normalized_basis, wavevector_U
from . import cycles as _cycles


# ---------------------------------------------------------------------------
# genus one / Weierstrass layer
# ---------------------------------------------------------------------------

def weierstrass_to_config(e2, e3) -> BranchConfig:
    """Branch points of the curve shifted so that e1 = -e2 - e3 moves to 0."""
    e2, e3 = complex(e2), complex(e3)
    u = 2.0 * e2 + e3
    x = e2 + 2.0 * e3
    cfg = BranchConfig(x=(x,), u=(u,), real=(abs(e2.imag) + abs(e3.imag) == 0.0))
    bad = validate_config(cfg)
    if bad:
        raise DegenerateConfig("; ".join(bad))
    return cfg


def config_to_weierstrass(cfg: BranchConfig):
    """Inverse of :func:`weierstrass_to_config` (exact linear algebra)."""
    x, u = cfg.x[0], cfg.u[0]
    return (2.0 * u - x) / 3.0, (2.0 * x - u) / 3.0


def lame_two_gap_config(e2, e3):
    """Genus-two configuration of the two-gap elliptic potential 6 wp(X).

    Returns (config, recovered (e2, e3)); the recovery is the exact linear
    inverse e3 = (2 x1 - x2) / 9, e2 = (2 x2 - x1) / 9.
    """
    e2, e3 = complex(e2), complex(e3)
    g2 = 4.0 * (e2 ** 2 + e3 ** 2 + e2 * e3)
    s = cmath.sqrt(3.0 * g2)
    x1 = 3.0 * e2 + 6.0 * e3
    x2 = 6.0 * e2 + 3.0 * e3
    u1 = s + 3.0 * (e2 + e3)
    u2 = -s + 3.0 * (e2 + e3)
    cfg = BranchConfig(x=(x1, x2), u=(u1, u2),
                       real=(abs(e2.imag) + abs(e3.imag) == 0.0 and abs(s.imag) < 1e-14))
    bad = validate_config(cfg)
    if bad:
        raise DegenerateConfig("; ".join(bad))
    recovered = ((2.0 * x2 - x1) / 9.0, (2.0 * x1 - x2) / 9.0)
    return cfg, recovered


@dataclass
class WeierstrassData:
    """Invariants and half-periods of the elliptic curve for (e2, e3).

    Half-periods come from the a- and b-periods of d(lambda)/w on the shifted
    curve; for real e1 < e2 < e3 the a-half-period w1 is purely imaginary and
    w2 is real in this marking.
    """

    e2: complex
    e3: complex
    e1: complex
    g2: complex
    g3: complex
    w1: complex
    w2: complex
    cfg: BranchConfig

    @classmethod
    def from_roots(cls, e2, e3, tol: float = 1e-11) -> "WeierstrassData":
        e2, e3 = complex(e2), complex(e3)
        e1 = -e2 - e3
        cfg = weierstrass_to_config(e2, e3)
        pd = normalized_basis(cfg, tol=tol)
        # w^2 = 4 mu^2 on the shifted curve, so periods of dl/w are half ours
        two_w1 = complex(pd.A_raw[0, 0]) / 2.0
        two_w2 = complex(pd.B[0, 0] * pd.A_raw[0, 0]) / 2.0
        return cls(e2=e2, e3=e3, e1=e1,
                   g2=4.0 * (e2 ** 2 + e3 ** 2 + e2 * e3),
                   g3=-4.0 * e2 * e3 * (e2 + e3),
                   w1=two_w1 / 2.0, w2=two_w2 / 2.0, cfg=cfg)

    def lattice(self):
        return 2.0 * self.w1, 2.0 * self.w2


def _gauss_reduce(w1: complex, w2: complex):
    """Lagrange-reduced generators of the lattice spanned by w1, w2."""
    a, b = w1, w2
    for _ in range(64):
        if abs(a) < abs(b):
            a, b = b, a
        n = round((a * b.conjugate()).real / abs(b) ** 2)
        if n == 0:
            break
        a = a - n * b
    return a, b


def _wp_series_coeffs(g2, g3, nterms):
    # wp(z) = z^-2 + sum_{k>=1} c[k] z^(2k)
    c = np.zeros(nterms + 1, dtype=complex)
    if nterms >= 1:
        c[1] = g2 / 20.0
    if nterms >= 2:
        c[2] = g3 / 28.0
    for k in range(3, nterms + 1):
        c[k] = (3.0 / ((2.0 * k + 3.0) * (k - 2.0))) * sum(
            c[m] * c[k - 1 - m] for m in range(1, k - 1))
    return c


def wp_function(wd: WeierstrassData, z, nterms: int = 120):
    """Weierstrass elliptic function and its derivative at z.

    Reduces z modulo the period lattice to the Voronoi cell, then sums the
    Laurent series around the origin (radius = shortest lattice vector, so
    the reduced argument is well inside).  Raises LatticePoint at or too
    close to a pole.
    """
    z = complex(z)
    g1, gen2 = _gauss_reduce(*wd.lattice())
    # integer least squares via the reduced basis
    M = np.array([[g1.real, gen2.real], [g1.imag, gen2.imag]])
    mn = np.linalg.solve(M, np.array([z.real, z.imag]))
    best = None
    for dm in (-1, 0, 1):
        for dn in (-1, 0, 1):
            cand = z - (round(mn[0]) + dm) * g1 - (round(mn[1]) + dn) * gen2
            if best is None or abs(cand) < abs(best):
                best = cand
    zr = best
    r_min = min(abs(g1), abs(gen2), abs(g1 + gen2), abs(g1 - gen2))
    if abs(zr) < 1e-12 * r_min:
        raise LatticePoint(f"wp evaluated at a lattice point: {z}")
    c = _wp_series_coeffs(wd.g2, wd.g3, nterms)
    k = np.arange(1, nterms + 1)
    zk = zr ** (2 * k)
    wp = 1.0 / zr ** 2 + np.sum(c[1:] * zk)
    wp_prime = -2.0 / zr ** 3 + np.sum(c[1:] * 2 * k * zk / zr)
    return complex(wp), complex(wp_prime)


def wp_ode_residual(wd: WeierstrassData, z) -> float:
    """|wp'^2 - (4 wp^3 - g2 wp - g3)| at z, a self-consistency measure."""
    p, dp = wp_function(wd, z)
    return abs(dp ** 2 - (4.0 * p ** 3 - wd.g2 * p - wd.g3))


def cnoidal_period_report(e2, e3, x_end, n_grid: int = 512,
                          quad_tol: float = 1e-11, macro_step: float = 0.01) -> dict:
    """Deform the one-gap curve keeping the a-period of d(lambda)/w constant
    and verify the sampled wave stays periodic with the starting period.

    The wave v(X) = 2 wp(X) (phase and speed constants set to zero; the
    periodicity defect is independent of both) is sampled on a uniform grid
    over two real periods at every flow sample, and shifted by the flow-start
    half-period pair.
    """
    cfg0 = weierstrass_to_config(e2, e3)
    state = _flow.DeformationState(cfg=cfg0, alpha=np.zeros(1), mode=_flow.IMPLICIT)
    ctrl = _flow.FlowControl(quad_tol=quad_tol, macro_step=macro_step)
    traj = _flow.integrate_flow(state, [list(cfg0.x), [complex(x_end)]], ctrl)

    two_w1_0 = None
    rows = []
    wave = None
    for s in traj.samples:
        cfg = cfg0.replace(x=s.x, u=s.u)
        pd = normalized_basis(cfg, tol=quad_tol)
        two_w1 = complex(pd.A_raw[0, 0]) / 2.0
        if two_w1_0 is None:
            two_w1_0 = two_w1
        ee2, ee3 = config_to_weierstrass(cfg)
        wd = WeierstrassData.from_roots(ee2, ee3, tol=quad_tol)
        L = abs(2.0 * wd.w2)       # real period of the wave
        X = (np.arange(n_grid) + 0.5) * (2.0 * L / n_grid)
        v = np.array([2.0 * wp_function(wd, xx)[0] for xx in X])
        v_shift = np.array([2.0 * wp_function(wd, xx + two_w1_0)[0] for xx in X])
        defect = float(np.max(np.abs(v_shift - v)) / np.max(np.abs(v)))
        wave = (X, v)
        rows.append({
            "x": complex(s.x[0]), "u": complex(s.u[0]),
            "two_w1": two_w1,
            "two_w1_drift": abs(two_w1 - two_w1_0) / abs(two_w1_0),
            "wave_period_defect": defect,
        })
    return {
        "samples": rows,
        "max_two_w1_drift": max(r["two_w1_drift"] for r in rows),
        "max_wave_defect": max(r["wave_period_defect"] for r in rows),
        "beta_drift": traj.max_drift(),
        "trajectory": traj,
        "wave_X": wave[0],
        "wave_v": wave[1],
    }


# ---------------------------------------------------------------------------
# spectra: gap-edge bookkeeping and the Neumann system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapSpectrum:
    """Real band/gap edges in descending order, with an optional period."""

    edges: tuple                 # lambda_{2g+1} < ... < lambda_1 given descending
    period: float | None = None

    def __post_init__(self):
        e = tuple(float(v) for v in self.edges)
        if len(e) % 2 == 0 or len(e) < 3:
            raise OrderingViolation("need an odd number (2g+1) of edges")
        if not all(a > b for a, b in zip(e, e[1:])):
            raise OrderingViolation("edges must be strictly decreasing")
        object.__setattr__(self, "edges", e)

    @property
    def genus(self) -> int:
        return (len(self.edges) - 1) // 2

    def to_config(self) -> BranchConfig:
        """Shift so the smallest edge is 0; x_j, u_j are the j-th gap edges."""
        g = self.genus
        lo = self.edges[-1]
        shifted = [v - lo for v in self.edges]     # descending, last = 0
        x = [shifted[2 * j - 2] for j in range(1, g + 1)]
        u = [shifted[2 * j - 1] for j in range(1, g + 1)]
        return BranchConfig(x=tuple(x), u=tuple(u), real=True)


def neumann_config(A, z_even) -> BranchConfig:
    """Spectral-curve configuration of the Neumann system on the n-sphere.

    ``A`` holds the n distinct oscillator coefficients with x_j = -A_j
    (the final coefficient is normalized to zero and omitted); ``z_even``
    the interlaced gap edges u_j = z_{2j}.  Requires
    0 < u_n < x_n < ... < u_1 < x_1.
    """
    A = [float(v) for v in A]
    z_even = [float(v) for v in z_even]
    if len(A) != len(z_even):
        raise OrderingViolation("need as many gap edges as oscillator coefficients")
    x = [-a for a in A]
    u = list(z_even)
    seq = []
    for j in range(len(x) - 1, -1, -1):
        seq.extend([u[j], x[j]])
    if not all(0.0 < a for a in seq[:1]) or not all(a < b for a, b in zip(seq, seq[1:])):
        raise OrderingViolation(
            f"gap edges must interlace as 0 < u_n < x_n < ... < u_1 < x_1, got {seq}")
    return BranchConfig(x=tuple(x), u=tuple(u), real=True)


# ---------------------------------------------------------------------------
# wavevector preservation reports
# ---------------------------------------------------------------------------

def kdv_wavevector_report(cfg: BranchConfig, trajectory, quad_tol: float = 1e-11) -> dict:
    """Wavevector omega(P_infinity) at every trajectory sample.

    Reports the maximum componentwise drift in the trajectory's own marking
    and, for real configurations, the imaginary part of the wavevector in the
    involution-invariant band marking (where it is a real vector).
    """
    U_rows = []
    U_band_rows = []
    for s in trajectory.samples:
        c = cfg.replace(x=s.x, u=s.u)
        pd = normalized_basis(c, tol=quad_tol)
        U_rows.append(wavevector_U(c, pd))
        if c.real:
            bb = _cycles.band_basis(c.points)
            pdb = normalized_basis(c, basis=bb, tol=quad_tol, need_b=False)
            U_band_rows.append(pdb.omega_at[:, -1])
    U = np.array(U_rows)
    drift = float(np.max(np.abs(U - U[0])))
    out = {"U": U, "max_drift": drift}
    if U_band_rows:
        U_band = np.array(U_band_rows)
        out["U_band"] = U_band
        out["max_im_U_band"] = float(np.max(np.abs(U_band.imag)))
    return out
