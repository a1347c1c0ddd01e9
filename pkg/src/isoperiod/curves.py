"""Hyperelliptic curves mu^2 = lambda * prod(lambda - u_j) * prod(lambda - x_j).

The finite branch points are 0, u_1..u_g, x_1..x_g; the point at infinity is
also a branch point of the two-sheeted covering.  This module owns the
configuration type, branch tracking of mu along paths, and closed-form
evaluations of differentials at ramification points with respect to the
standard local parameters sqrt(lambda - lambda_j) and 1/sqrt(lambda).

Point indexing convention used across the package: the finite branch points of
a configuration are stored as

    points[0] = 0,  points[m] = u_m (1 <= m <= g),  points[g+j] = x_j (1 <= j <= g)

and the point at infinity is referred to by the index ``2g + 1``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfig, PathTooClose

INF_INDEX = -1  # ramification tag for the branch point at infinity


def idx_zero() -> int:
    return 0


def idx_u(m: int) -> int:
    """Point index of u_m, 1-based m."""
    return m


def idx_x(g: int, j: int) -> int:
    """Point index of x_j, 1-based j."""
    return g + j


def idx_inf(g: int) -> int:
    return 2 * g + 1


@dataclass(frozen=True)
class BranchConfig:
    """The 2g finite nonzero branch points of a curve in the family.

    ``x`` are the independently varying branch points, ``u`` the dependent
    ones.  ``real`` marks configurations with all branch points real, for
    which the interleaving 0 < u_1 < x_1 < ... < u_g < x_g may additionally
    be requested.
    """

    x: tuple
    u: tuple
    real: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(complex(v) for v in self.x))
        object.__setattr__(self, "u", tuple(complex(v) for v in self.u))
        if len(self.x) != len(self.u) or not self.x:
            raise DegenerateConfig("need equally many x and u branch points, at least one each")

    @property
    def genus(self) -> int:
        return len(self.x)

    @property
    def points(self) -> np.ndarray:
        """Finite branch points in index order (0, u_1..u_g, x_1..x_g)."""
        return np.concatenate(([0.0 + 0.0j], np.asarray(self.u), np.asarray(self.x)))

    def point(self, index: int) -> complex:
        return complex(self.points[index])

    def replace(self, x=None, u=None) -> "BranchConfig":
        return BranchConfig(
            x=tuple(x) if x is not None else self.x,
            u=tuple(u) if u is not None else self.u,
            real=self.real,
        )

    def scale(self) -> float:
        """Characteristic magnitude of the configuration."""
        return float(np.max(np.abs(self.points[1:])))

    def min_separation(self) -> float:
        pts = self.points
        n = len(pts)
        return min(abs(pts[i] - pts[j]) for i in range(n) for j in range(i + 1, n))


@dataclass(frozen=True)
class PointCurve:
    """A curve mu^2 = prod(lambda - p_i) over an arbitrary distinct point set.

    Used where the fixed-zero family is too rigid (for instance variational
    checks that move the branch point at the origin).  Exposes the same small
    surface the period engine needs from :class:`BranchConfig`.
    """

    pts: tuple
    real: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pts", tuple(complex(v) for v in self.pts))
        if len(self.pts) % 2 == 0:
            raise DegenerateConfig("need an odd number of finite branch points")

    @property
    def genus(self) -> int:
        return (len(self.pts) - 1) // 2

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.pts)

    def point(self, index: int) -> complex:
        return self.pts[index]

    def scale(self) -> float:
        return float(np.max(np.abs(self.points)))

    def min_separation(self) -> float:
        pts = self.points
        n = len(pts)
        return min(abs(pts[i] - pts[j]) for i in range(n) for j in range(i + 1, n))


def validate_config(cfg, ordered: bool = False) -> list:
    """Report invariant violations of a configuration.

    Returns an empty list iff the 2g+1 finite branch points are pairwise
    distinct (and, when ``ordered`` is requested for a real configuration,
    interleaved as 0 < u_1 < x_1 < ... < u_g < x_g).  Each violation is a
    human-readable string naming the offending pair.
    """
    violations = []
    pts = cfg.points
    if isinstance(cfg, PointCurve):
        names = [f"p_{i}" for i in range(len(pts))]
    else:
        names = ["0"] + [f"u_{m}" for m in range(1, cfg.genus + 1)] + [
            f"x_{j}" for j in range(1, cfg.genus + 1)
        ]
    n = len(pts)
    sep_scale = max(1.0, float(np.max(np.abs(pts)))) * 1e-14
    for i in range(n):
        for j in range(i + 1, n):
            if abs(pts[i] - pts[j]) <= sep_scale:
                violations.append(f"duplicate branch point {names[i]} = {names[j]} = {pts[j]}")
    if cfg.real:
        # matches the snapping threshold of effective_points
        for name, v in zip(names[1:], pts[1:]):
            if abs(v.imag) > 1e-9 * max(1.0, abs(v)):
                violations.append(f"real flag set but {name} = {v} is not real")
    if ordered:
        if not cfg.real or isinstance(cfg, PointCurve):
            violations.append("ordering requested for a non-real x/u configuration")
        else:
            seq = [0.0]
            for m in range(cfg.genus):
                seq.extend([cfg.u[m].real, cfg.x[m].real])
            for a, b in zip(seq, seq[1:]):
                if not a < b:
                    violations.append(f"ordering violated: {a} !< {b} in 0 < u_1 < x_1 < ...")
                    break
    return violations


def require_valid(cfg: BranchConfig):
    bad = validate_config(cfg)
    if bad:
        raise DegenerateConfig("; ".join(bad))


@dataclass(frozen=True)
class SurfacePoint:
    """A point of the two-sheeted covering.

    ``sheet`` = +1 is the branch on which mu agrees with the principal-branch
    product sqrt (positive for real lambda to the right of all real branch
    points).  For a ramification point set ``ramification_tag`` to the point
    index (INF_INDEX for infinity); the sheet is then irrelevant.
    """

    lam: complex
    sheet: int = +1
    ramification_tag: int | None = None


class BranchOfMu:
    """Analytic continuation state for mu along a path in the lambda plane.

    Tracks the unwrapped argument of every linear factor (lambda - p_i), so a
    closed loop around an even number of branch points returns the starting
    value exactly, and a loop around a single branch point flips the sign.
    """

    def __init__(self, points: np.ndarray, lam: complex, args: np.ndarray | None = None):
        self.points = np.asarray(points, dtype=complex)
        self.lam = complex(lam)
        if args is None:
            args = np.angle(self.lam - self.points)
        self.args = np.asarray(args, dtype=float)

    @classmethod
    def principal(cls, points, lam) -> "BranchOfMu":
        """Principal-branch start: every factor carries its principal argument."""
        return cls(points, lam)

    @property
    def mu(self) -> complex:
        d = self.lam - self.points
        return math.exp(0.5 * float(np.sum(np.log(np.abs(d))))) * cmath.exp(
            0.5j * float(np.sum(self.args))
        )

    def advance(self, lam_new: complex) -> "BranchOfMu":
        """Continue to ``lam_new`` along the straight segment from the current point.

        The segment must not pass through (or on the far side of) a branch
        point; callers are responsible for subdividing paths finely enough.
        """
        d_old = self.lam - self.points
        d_new = lam_new - self.points
        self.args = self.args + np.angle(d_new / d_old)
        self.lam = complex(lam_new)
        return self


def _seg_point_dist(a: complex, b: complex, p: complex) -> float:
    """Distance from point p to segment [a, b]."""
    ab = b - a
    denom = abs(ab) ** 2
    if denom == 0.0:
        return abs(p - a)
    t = ((p - a) * ab.conjugate()).real / denom
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * ab))


def mu_along_path(cfg: BranchConfig, path, start: BranchOfMu | None = None,
                  clearance: float | None = None) -> complex:
    """Continue mu along a polyline of lambda values and return the end value.

    ``path`` is a sequence of complex lambda values; continuation starts from
    ``start`` (principal branch at path[0] when omitted).  Raises
    :class:`PathTooClose` if any segment comes within ``clearance`` of a
    branch point (default 1e-3 times the minimal branch-point separation).
    """
    require_valid(cfg)
    pts = cfg.points
    path = [complex(z) for z in path]
    if clearance is None:
        clearance = 1e-3 * cfg.min_separation()
    for a, b in zip(path, path[1:]):
        for p in pts:
            if _seg_point_dist(a, b, p) < clearance:
                raise PathTooClose(f"path segment [{a}, {b}] within {clearance} of branch point {p}")
    state = BranchOfMu.principal(pts, path[0]) if start is None else start
    if abs(state.lam - path[0]) > 0:
        raise ValueError("start state must sit at the first path vertex")
    # subdivide each leg so per-factor argument increments stay well below pi
    for a, b in zip(path, path[1:]):
        max_turn = max(abs(b - a) / max(_seg_point_dist(a, b, p), clearance) for p in pts)
        nsub = max(1, int(math.ceil(max_turn / 1.0)))
        for k in range(1, nsub + 1):
            state.advance(a + (b - a) * k / nsub)
    return state.mu


def effective_points(points) -> np.ndarray:
    """Snap a nearly-real point set onto the real axis.

    Principal-branch square roots are discontinuous across the negative real
    axis, so imaginary noise of order 1e-15 on real configurations would flip
    evaluation signs erratically (for example inside Newton iterations).
    Points whose imaginary parts are below 1e-9 of the configuration scale
    are treated as exactly real; genuinely complex configurations pass
    through unchanged.
    """
    pts = np.asarray(points, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(pts))))
    if float(np.max(np.abs(pts.imag))) <= 1e-9 * scale:
        return pts.real + 0.0j
    return pts


def phi_values(points: np.ndarray) -> np.ndarray:
    """Evaluate phi = d(lambda)/mu at every finite ramification point.

    Entry j is 2 / sqrt(prod_{i != j} (p_j - p_i)) with the principal square
    root of the full product.  All other evaluation tables in the package are
    derived from these values, so sign conventions stay mutually consistent.
    """
    pts = effective_points(points)
    n = len(pts)
    out = np.empty(n, dtype=complex)
    for j in range(n):
        diff = pts[j] - np.delete(pts, j)
        prod = complex(np.prod(diff))
        if prod == 0:
            raise DegenerateConfig(f"coinciding branch points at {pts[j]}")
        out[j] = 2.0 / cmath.sqrt(prod)
    return out


def phi_at_ramification(cfg: BranchConfig, j: int) -> complex:
    """phi evaluated at the finite ramification point with point index j."""
    require_valid(cfg)
    return complex(phi_values(cfg.points)[j])


def v_polynomial(cfg: BranchConfig, m: int) -> np.ndarray:
    """Ascending coefficients of the polynomial part of v_m over phi.

    v_m = phi * prod_{i != m}(lambda - u_i) / (phi(P_{u_m}) * prod_{i != m}(u_m - u_i)),
    normalized so that v_m(P_{u_i}) = delta_{mi}.
    """
    u = np.asarray(cfg.u)
    others = np.delete(u, m - 1)
    denom = complex(phi_values(cfg.points)[idx_u(m)]) * complex(np.prod(u[m - 1] - others))
    poly = np.array([1.0 + 0.0j])
    for r in others:
        poly = np.convolve(poly, np.array([-r, 1.0 + 0.0j]))
    return poly / denom


def v_at(cfg: BranchConfig, m: int, q: int) -> complex:
    """Evaluate the dual-basis holomorphic differential v_m at ramification point q.

    q is a point index into the finite ramification points; the defining
    property v_m(P_{u_i}) = delta_{mi} holds exactly by construction.
    """
    require_valid(cfg)
    if not 1 <= m <= cfg.genus:
        raise ValueError(f"m must be in 1..{cfg.genus}")
    if q == idx_u(m):
        return 1.0 + 0.0j
    if 1 <= q <= cfg.genus:
        return 0.0 + 0.0j
    phis = phi_values(cfg.points)
    lam = cfg.point(q)
    u = np.asarray(cfg.u)
    others = np.delete(u, m - 1)
    num = complex(phis[q]) * complex(np.prod(lam - others))
    den = complex(phis[idx_u(m)]) * complex(np.prod(u[m - 1] - others))
    return num / den
