import math

import numpy as np
import pytest

from cqed_teleport.dispersive import phase_min_distance
from cqed_teleport.hilbert import unitarity_error
from cqed_teleport.lambda_atom import (
    LambdaParams,
    lambda_block,
    lambda_dispersive_phi,
    lambda_dispersive_propagator,
    lambda_exact_nondegenerate,
    lambda_exact_propagator,
    lower_sector,
    nondegenerate_layout,
    parity_projectors,
    printed_nondegenerate_matrix,
)
from cqed_teleport.oracle import lambda_coupling, nondegenerate_coupling, rk4_propagator

PI = math.pi


def test_phi_property():
    assert LambdaParams(1.0, 1.0, 4.0, 2.0).phi == pytest.approx(1.0)


def test_block_is_unitary_and_dark_state_fixed():
    u = lambda_block(0.8, 0.8, 2.5, 1.9)
    assert unitarity_error(u) < 1e-14
    dark = np.array([0, 1, -1]) / math.sqrt(2)
    np.testing.assert_allclose(u @ dark, dark, atol=1e-14)


def test_exact_matches_oracle_short_runs():
    n_max = 3
    g1, g2 = 1.0, 0.6 * np.exp(0.4j)
    deltas = np.array([2.0, 6.0])
    ts = np.array([0.9, 1.2])
    ref = rk4_propagator(lambda_coupling(g1, g2, n_max), deltas, ts)
    for k in range(2):
        u = lambda_exact_propagator(LambdaParams(g1, g2, deltas[k], ts[k]), n_max).matrix
        assert np.abs(u - ref[k]).max() < 1e-10


def test_nondegenerate_derived_matches_oracle():
    p = LambdaParams(1.0, 0.7, 3.0, 1.3)
    ref = rk4_propagator(nondegenerate_coupling(p.g1, p.g2, 2, 2), p.delta, p.t)
    u = lambda_exact_nondegenerate(p, 2, 2).matrix
    assert np.abs(u - ref).max() < 1e-10
    assert unitarity_error(u) < 1e-12


def test_literal_two_mode_forms_disagree_only_in_b_row():
    # The literal closed forms are off in u_bb and u_bc; every other entry
    # agrees with direct integration away from the cutoff.
    n1 = n2 = 3
    p = LambdaParams(1.0, 0.7, 3.0, 1.3)
    ref = rk4_propagator(nondegenerate_coupling(p.g1, p.g2, n1, n2), p.delta, p.t)
    lit = printed_nondegenerate_matrix(p, n1, n2)
    layout = nondegenerate_layout(n1, n2)
    bad = set()
    for i in range(layout.dim):
        for j in range(layout.dim):
            li, lj = layout.labels_of(i), layout.labels_of(j)
            interior = max(int(x) for x in li[1:] + lj[1:]) <= 2
            if interior and abs(lit[i, j] - ref[i, j]) > 1e-6:
                bad.add((li[0], lj[0]))
    assert bad == {("b", "b"), ("b", "c")}
    with pytest.raises(ValueError):
        lambda_exact_nondegenerate(p, 1, 1, form="other")


@pytest.mark.parametrize("gt", [0.5, 1.0, 5.0])
def test_dark_state_invariant_for_any_cavity_state(gt):
    n_max = 4
    u = lambda_exact_propagator(LambdaParams(1.0, 1.0, 3.0, gt), n_max).matrix
    rng = np.random.default_rng(7)
    field = rng.normal(size=n_max + 1) + 1j * rng.normal(size=n_max + 1)
    field /= np.linalg.norm(field)
    psi = np.kron(np.array([0, 1, -1]) / math.sqrt(2), field)
    assert np.abs(u @ psi - psi).max() < 1e-10


def test_dispersive_upper_level_phase():
    u = lambda_dispersive_phi(0.4, 3).matrix
    np.testing.assert_allclose(np.diag(u)[:4], np.exp(-0.4j * np.arange(1, 5)), atol=1e-15)


def test_dispersive_pi_swaps_lower_levels_on_odd_photons():
    low = lower_sector(lambda_dispersive_phi(PI, 2))
    assert low.unitary
    m = low.matrix  # order |b,0..2>, |c,0..2>
    expected = np.zeros((6, 6))
    expected[0, 0] = expected[3, 3] = 1
    expected[2, 2] = expected[5, 5] = 1
    expected[1, 4] = expected[4, 1] = -1
    assert np.array_equal(m, expected.astype(complex))


@pytest.mark.parametrize("dphi", [0.0, PI / 2, PI])
def test_dispersive_cross_term_phase(dphi):
    phi = 0.9
    u = lambda_dispersive_phi(phi, 2, phase1=0.0, phase2=dphi).matrix
    d = 3
    n = 1
    br = np.exp(1j * phi * n) - 1
    assert u[d + n, 2 * d + n] == pytest.approx(np.exp(1j * dphi) / 2 * br, abs=1e-15)
    assert u[2 * d + n, d + n] == pytest.approx(np.exp(-1j * dphi) / 2 * br, abs=1e-15)


def test_cross_term_phase_follows_exact_propagator():
    # Large detuning: the b/c block of the exact propagator should match the
    # dispersive one with this sign of the coupling phase, not the conjugate.
    ratio, phi, dphi, n_max = 200.0, 1.0, PI / 2, 4
    g1, g2 = 1.0, np.exp(1j * dphi)
    exact = lambda_exact_propagator(LambdaParams(g1, g2, ratio, phi * ratio / 2), n_max).matrix
    disp = lambda_dispersive_propagator(LambdaParams(g1, g2, ratio, phi * ratio / 2), n_max).matrix
    conj = lambda_dispersive_propagator(LambdaParams(g1, np.conj(g2), ratio, phi * ratio / 2), n_max).matrix
    d = n_max + 1
    idx = np.r_[d : d + 4, 2 * d : 2 * d + 4]
    sel = np.ix_(idx, idx)
    assert phase_min_distance(exact[sel], disp[sel]) < 0.02
    assert phase_min_distance(exact[sel], conj[sel]) > 0.5


def test_exact_lower_sector_is_contraction():
    low = lower_sector(lambda_exact_propagator(LambdaParams(1.0, 1.0, 200.0, 100 * PI), 4), unitary=False)
    assert np.linalg.norm(low.matrix, 2) <= 1 + 1e-12


def test_parity_projectors():
    pp = parity_projectors(3)
    np.testing.assert_array_equal(np.diag(pp.pi_plus.matrix), [1, 0, 1, 0])
    np.testing.assert_array_equal(np.diag(pp.pi_minus.matrix), [0, -1, 0, -1])
    with pytest.raises(ValueError):
        parity_projectors(0)
