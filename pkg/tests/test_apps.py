import math

import numpy as np
import pytest

from isoperiod.apps import (GapSpectrum, WeierstrassData, cnoidal_period_report,
                            config_to_weierstrass, kdv_wavevector_report,
                            lame_two_gap_config, neumann_config,
                            weierstrass_to_config, wp_function, wp_ode_residual)
from isoperiod.curves import BranchConfig, validate_config
from isoperiod.errors import DegenerateConfig, LatticePoint, OrderingViolation
from isoperiod.flow import IMPLICIT, DeformationState, FlowControl, integrate_flow
from isoperiod.periods import normalized_basis


# -- root shifts ---------------------------------------------------------------

def test_weierstrass_shift_reference_values():
    cfg = weierstrass_to_config(0.0, 1.0)
    assert cfg.u == (1.0 + 0.0j,)
    assert cfg.x == (2.0 + 0.0j,)


def test_weierstrass_shift_double_root_rejected():
    with pytest.raises(DegenerateConfig):
        weierstrass_to_config(1.0, 1.0)


def test_weierstrass_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(20):
        e2 = rng.uniform(-1.0, 1.0)
        e3 = e2 + rng.uniform(0.1, 2.0)
        cfg = weierstrass_to_config(e2, e3)
        b2, b3 = config_to_weierstrass(cfg)
        assert abs(b2 - e2) < 1e-14 * max(1.0, abs(e2))
        assert abs(b3 - e3) < 1e-14 * max(1.0, abs(e3))


def test_lame_two_gap_reference_values():
    cfg, recovered = lame_two_gap_config(0.0, 1.0)
    s = math.sqrt(12.0)
    assert cfg.x == (6.0 + 0.0j, 3.0 + 0.0j)
    assert cfg.u[0] == pytest.approx(s + 3.0)
    assert cfg.u[1] == pytest.approx(3.0 - s)
    # u_2 < 0: a valid configuration, but the interleaving convention fails
    assert validate_config(cfg) == []
    assert validate_config(cfg, ordered=True)
    assert recovered[0] == pytest.approx(0.0, abs=1e-14)
    assert recovered[1] == pytest.approx(1.0, rel=1e-14)


def test_lame_two_gap_round_trip_random():
    rng = np.random.default_rng(4)
    for _ in range(10):
        e2 = rng.uniform(-0.5, 0.5)
        e3 = e2 + rng.uniform(0.2, 1.5)
        _, (b2, b3) = lame_two_gap_config(e2, e3)
        assert abs(b2 - e2) < 1e-14 * max(1.0, abs(e2))
        assert abs(b3 - e3) < 1e-14 * max(1.0, abs(e3))


# -- Weierstrass function ---------------------------------------------------------

@pytest.fixture(scope="module")
def wd():
    return WeierstrassData.from_roots(0.0, 1.0, tol=1e-12)


def test_wp_even(wd):
    z = 0.37 + 0.21j
    p1, _ = wp_function(wd, z)
    p2, _ = wp_function(wd, -z)
    assert abs(p1 - p2) < 1e-10 * max(1.0, abs(p1))


def test_wp_doubly_periodic(wd):
    z = 0.31 + 0.12j
    p0, _ = wp_function(wd, z)
    for w in wd.lattice():
        p1, _ = wp_function(wd, z + w)
        assert abs(p1 - p0) < 1e-8 * max(1.0, abs(p0))


def test_wp_ode_residual_random(wd):
    rng = np.random.default_rng(8)
    for _ in range(20):
        z = complex(rng.uniform(0.1, 1.1), rng.uniform(-0.5, 0.5))
        assert wp_ode_residual(wd, z) < 1e-8


def test_wp_half_period_values_are_roots(wd):
    vals = sorted(wp_function(wd, hp)[0].real
                  for hp in (wd.w1, wd.w2, wd.w1 + wd.w2))
    assert np.allclose(vals, [-1.0, 0.0, 1.0], atol=1e-10)


def test_wp_matches_jacobi_oracle(wd):
    mpm = pytest.importorskip("mpmath")
    # classical reduction wp(z) = E3 + (E1 - E3) / sn(z sqrt(E1 - E3) | m)^2
    E1, E2, E3 = 1.0, 0.0, -1.0
    m = (E2 - E3) / (E1 - E3)
    for z in (0.3 + 0.11j, 0.8 - 0.2j, 1.1 + 0.4j):
        sn = mpm.ellipfun("sn", mpm.mpc(z.real, z.imag) * mpm.sqrt(E1 - E3), m=m)
        ref = complex(E3 + (E1 - E3) / sn ** 2)
        val, _ = wp_function(wd, z)
        assert abs(val - ref) < 1e-10 * max(1.0, abs(ref))


def test_wp_lattice_point_rejected(wd):
    with pytest.raises(LatticePoint):
        wp_function(wd, 0.0)


# -- cnoidal report ------------------------------------------------------------------

def test_cnoidal_period_preservation_small():
    rep = cnoidal_period_report(0.0, 1.0, 2.06, n_grid=128, macro_step=0.03)
    assert rep["max_two_w1_drift"] < 1e-7
    assert rep["max_wave_defect"] < 1e-6
    assert rep["beta_drift"] < 1e-7


def test_cnoidal_zero_length_path():
    rep = cnoidal_period_report(0.0, 1.0, 2.0, n_grid=64)
    assert len(rep["samples"]) == 1
    assert rep["max_two_w1_drift"] == 0.0


# -- spectra and the Neumann system -----------------------------------------------

def test_gap_spectrum_to_config():
    spec = GapSpectrum(edges=(5.0, 4.0, 3.0, 2.0, 0.0))
    cfg = spec.to_config()
    assert cfg.x == (5.0 + 0.0j, 3.0 + 0.0j)
    assert cfg.u == (4.0 + 0.0j, 2.0 + 0.0j)


def test_gap_spectrum_rejects_unordered():
    with pytest.raises(OrderingViolation):
        GapSpectrum(edges=(5.0, 4.0, 4.5, 2.0, 0.0))


def test_neumann_reference_identification():
    cfg = neumann_config([-5.0, -3.0], [4.0, 2.0])
    assert cfg.x == (5.0 + 0.0j, 3.0 + 0.0j)
    assert cfg.u == (4.0 + 0.0j, 2.0 + 0.0j)


def test_neumann_degenerate_gap_rejected():
    with pytest.raises(OrderingViolation):
        neumann_config([-5.0, -3.0], [5.0, 2.0])


def test_neumann_flow_preserves_hill_condition():
    from isoperiod.flow import hill_check, newton_correct
    cfg = neumann_config([-5.0, -3.0], [4.0, 2.0])
    pd = normalized_basis(cfg, tol=1e-11)
    from isoperiod.periods import build_omega
    om = build_omega(cfg, pd, tol=1e-11)
    # adjust the gap edges so the periods resonate: beta = 2 pi i (3, 4) / T
    # (the starting ratio beta_2 / beta_1 is near 4/3, so the move is small)
    T = complex(2j * np.pi * 3.0 / om.beta[0])
    target = 2j * np.pi * np.array([3.0, 4.0]) / T
    hill_cfg, _, _ = newton_correct(cfg, np.zeros(2), target, tol=1e-11,
                                    quad_tol=1e-12, max_iter=10)
    out0 = hill_check(hill_cfg, normalized_basis(hill_cfg, tol=1e-11), T)
    assert out0["is_hill"]
    x0 = [complex(v) for v in hill_cfg.x]
    state = DeformationState(hill_cfg, np.zeros(2), mode=IMPLICIT)
    traj = integrate_flow(state, [x0, [x0[0] + 0.1, x0[1]]],
                          FlowControl(quad_tol=1e-11, macro_step=0.05))
    end = traj.samples[-1]
    cfg_end = hill_cfg.replace(x=end.x, u=end.u)
    out1 = hill_check(cfg_end, normalized_basis(cfg_end, tol=1e-11), T)
    assert out1["is_hill"]
    assert list(out1["n"]) == list(out0["n"])


# -- wavevector report ----------------------------------------------------------------

@pytest.fixture(scope="module")
def g2_traj():
    cfg = BranchConfig(x=[3.0, 5.0], u=[1.0, 4.0], real=True)
    state = DeformationState(cfg, np.zeros(2), mode=IMPLICIT)
    path = [[3.0, 5.0], [3.1, 5.0], [3.1, 5.1]]
    return cfg, integrate_flow(state, path, FlowControl(quad_tol=1e-11, macro_step=0.05))


def test_kdv_wavevector_preserved(g2_traj):
    cfg, traj = g2_traj
    rep = kdv_wavevector_report(cfg, traj)
    assert rep["max_drift"] < 1e-7
    assert rep["max_im_U_band"] < 1e-10


def test_kdv_wavevector_negative_control(g2_traj):
    cfg, traj = g2_traj

    class Frozen:
        # same x-legs but u pinned at the start: not isoperiodic
        samples = [type(s)(x=s.x, u=np.array([1.0, 4.0], dtype=complex),
                           du=s.du, beta_drift=s.beta_drift) for s in traj.samples]

    rep = kdv_wavevector_report(cfg, Frozen())
    assert rep["max_drift"] > 1e-3


def test_kdv_report_is_deterministic(g2_traj):
    cfg, traj = g2_traj
    r1 = kdv_wavevector_report(cfg, traj)
    r2 = kdv_wavevector_report(cfg, traj)
    assert np.array_equal(r1["U"], r2["U"])
