import numpy as np
import pytest

from isoperiod.comb import (boundary_trace, comb_invariance_check, comb_map,
                            omega_zeros)
from isoperiod.curves import BranchConfig
from isoperiod.errors import OrderingViolation
from isoperiod.flow import IMPLICIT, DeformationState, FlowControl, integrate_flow
from isoperiod.periods import build_omega, normalized_basis

G1 = BranchConfig(x=[2.0], u=[1.0], real=True)
G2 = BranchConfig(x=[3.0, 5.0], u=[1.0, 4.0], real=True)
TOL = 1e-11


def _setup(cfg):
    pd = normalized_basis(cfg, tol=TOL)
    om = build_omega(cfg, pd, tol=TOL)
    return pd, om


# -- zeros ------------------------------------------------------------------------

@pytest.mark.parametrize("cfg", [G1, G2])
def test_zeros_one_per_gap(cfg):
    _, om = _setup(cfg)
    zeros = omega_zeros(om)
    assert len(zeros) == cfg.genus
    for j, z in enumerate(sorted(zeros, key=lambda v: v.real)):
        assert abs(z.imag) < 1e-10
        assert cfg.u[j].real < z.real < cfg.x[j].real


def test_zeros_polished_residual():
    _, om = _setup(G2)
    zeros = omega_zeros(om)
    vals = np.polynomial.polynomial.polyval(zeros, om.poly)
    assert np.max(np.abs(vals)) < 1e-12


def test_zeros_perturbation_conditioning():
    _, om = _setup(G1)
    z0 = omega_zeros(om)[0]
    om.c = om.c + 1e-10
    z1 = omega_zeros(om)[0]
    dpoly = np.polynomial.polynomial.polyder(om.poly)
    deriv = abs(np.polynomial.polynomial.polyval(z1, dpoly))
    assert abs(z1 - z0) < 10.0 * 1e-10 / deriv + 1e-14


# -- the map ------------------------------------------------------------------------

@pytest.mark.parametrize("cfg", [G1, G2])
def test_comb_geometry(cfg):
    pd, om = _setup(cfg)
    region = comb_map(cfg, pd, om, tol=TOL)
    assert np.all(region.q > 0)
    assert np.all(np.diff(region.q) > 0) or cfg.genus == 1
    assert np.all(region.h > 0)
    assert region.base_residual < 1e-9
    assert region.q[-1] == pytest.approx(region.beta_ratio[-1].real
                                         * complex(_setup(cfg)[1].beta[-1]).real, rel=1e-8)


def test_theta_vanishes_at_origin_with_sqrt_rate():
    # Theta(0) = 0 by construction; near the corner |Theta| ~ C sqrt(lambda)
    pd, om = _setup(G1)
    trace = boundary_trace(G1, pd, om, n_per_segment=512)
    lam = trace[:4, 0].real
    scaled = np.abs(trace[:4, 1]) / np.sqrt(lam)
    assert np.max(scaled) / np.min(scaled) < 1.2


def test_boundary_trace_band_and_gap_structure():
    pd, om = _setup(G1)
    trace = boundary_trace(G1, pd, om, n_per_segment=24)
    lam = trace[:, 0].real
    th = trace[:, 1]
    band = th[lam <= 1.0]
    gap = th[(lam > 1.0) & (lam <= 2.0)]
    # bands map into the real base: imaginary part stays at 0, real part grows
    assert np.max(np.abs(band.imag)) < 1e-8
    assert np.all(np.diff(band.real) > 0)
    # gaps walk the slit: real part pinned at the mark
    assert np.max(np.abs(gap.real - gap.real[0])) < 1e-8
    assert np.max(gap.imag) > 1e-3


def test_ratio_constant_across_configs():
    ratios = []
    for cfg in (G1, BranchConfig(x=[2.4], u=[0.7], real=True), G2):
        pd, om = _setup(cfg)
        region = comb_map(cfg, pd, om, tol=TOL)
        ratios.extend(region.beta_ratio.tolist())
    ratios = np.array(ratios)
    assert np.max(np.abs(ratios - ratios[0])) < 1e-8


def test_comb_requires_ordered_real_config():
    cfg = BranchConfig(x=[3.0, 1.0], u=[2.0, 4.0], real=True)
    pd = normalized_basis(cfg, tol=TOL)
    om = build_omega(cfg, pd, tol=TOL)
    with pytest.raises(OrderingViolation):
        comb_map(cfg, pd, om)


# -- invariance along flows ------------------------------------------------------------

@pytest.fixture(scope="module")
def g1_reference_flow():
    state = DeformationState(G1, np.zeros(1), mode=IMPLICIT)
    return integrate_flow(state, [[2.0], [2.2]],
                          FlowControl(quad_tol=TOL, macro_step=0.04))


def test_comb_base_invariant_along_flow(g1_reference_flow):
    rep = comb_invariance_check(G1, g1_reference_flow, tol=1e-6, quad_tol=TOL)
    assert rep["base_invariant"]
    assert float(np.max(rep["q_drift"])) < 1e-6
    assert rep["slits_moved"]
    assert float(np.max(rep["h_variation"])) > 1e-4
    assert rep["ratio_spread"] < 1e-6


def test_comb_trivial_path(g1_reference_flow):
    state = DeformationState(G1, np.zeros(1), mode=IMPLICIT)
    traj = integrate_flow(state, [[2.0], [2.0]], FlowControl(quad_tol=TOL))
    rep = comb_invariance_check(G1, traj, tol=1e-10, quad_tol=TOL)
    assert float(np.max(rep["q_drift"])) < 1e-10
    assert float(np.max(rep["h_variation"])) < 1e-10


def test_comb_frozen_u_control(g1_reference_flow):
    traj = g1_reference_flow

    class Frozen:
        samples = [type(s)(x=s.x, u=np.array([1.0], dtype=complex), du=s.du,
                           beta_drift=s.beta_drift) for s in traj.samples]

    rep = comb_invariance_check(G1, Frozen(), tol=1e-6, quad_tol=TOL)
    assert not rep["base_invariant"]
    assert float(np.max(rep["q_drift"])) > 1e-3
