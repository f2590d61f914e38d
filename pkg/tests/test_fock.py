"""Truncated-Fock engine: operators, codewords, orthonormalisation, gates."""

import math
from fractions import Fraction as F

import numpy as np
import pytest

from gkpphase import fock as fk
from gkpphase.polyalg import RationalPolynomial

T3 = RationalPolynomial([0, F(-1, 12), F(1, 8), F(1, 12)])


def test_quadrature_contracts():
    q, p = fk.quadratures(48)
    vac = np.zeros(48)
    vac[0] = 1.0
    assert abs(vac @ (q.matrix @ q.matrix) @ vac - 0.5) < 1e-12
    one = np.zeros(48)
    one[1] = 1.0
    assert abs(one @ q.matrix @ vac - 1.0 / math.sqrt(2.0)) < 1e-12
    comm = q.matrix @ p.matrix - p.matrix @ q.matrix
    # truncation breaks only the last diagonal entry of [q, p] = i
    assert np.allclose(np.diag(comm)[:-1], 1j, atol=1e-12)


def test_truncation_plan_defaults():
    plan = fk.TruncationPlan()
    assert (plan.d_init, plan.d_out, plan.d_temp(plan.d_out)) == (400, 1200, 3600)
    with pytest.raises(ValueError):
        fk.TruncationPlan(d_init=8)


def test_expm_contracts():
    plan = fk.TruncationPlan(d_init=64)
    zero = fk.expm(fk.FockOperator(np.zeros((64, 64))), plan)
    assert np.allclose(zero.matrix, np.eye(64))
    phases = fk.expm(fk.FockOperator(0.7j * np.diag(np.arange(64.0))), plan)
    assert np.allclose(phases.matrix, np.diag(np.exp(0.7j * np.arange(64))))
    rng = np.random.default_rng(3)
    h = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    h = 0.05 * (h + h.conj().T)
    fwd = fk.expm(fk.FockOperator(1j * h), plan)
    bwd = fk.expm(fk.FockOperator(-1j * h), plan)
    assert np.max(np.abs(fwd.matrix @ bwd.matrix - np.eye(64))) < 1e-10


def test_displacement_identity_and_unitarity():
    plan = fk.TruncationPlan(d_init=128)
    w0 = fk.displacement((0.0, 0.0), 128, plan)
    assert np.allclose(w0.matrix, np.eye(128))
    w = fk.displacement((0.3, 0.0), 128, plan)
    gram = w.matrix.conj().T @ w.matrix
    assert np.max(np.abs(gram[:96, :96] - np.eye(128)[:96, :96])) < 1e-10


def test_displacement_composition_rule():
    plan = fk.TruncationPlan(d_init=128)
    u, v = (0.3, 0.0), (0.0, 0.4)
    wu = fk.displacement(u, 128, plan).matrix
    wv = fk.displacement(v, 128, plan).matrix
    wuv = fk.displacement((0.3, 0.4), 128, plan).matrix
    phase = np.exp(-1j * math.pi * (u[0] * v[1] - u[1] * v[0]))
    resid = np.max(np.abs((wu @ wv - phase * wuv)[:96, :96]))
    assert resid < 1e-8


def test_displacement_composition_seeded_pairs():
    plan = fk.TruncationPlan(d_init=128)
    rng = np.random.default_rng(11)
    for _ in range(20):
        u = tuple(rng.uniform(-0.5, 0.5, size=2))
        v = tuple(rng.uniform(-0.5, 0.5, size=2))
        wu = fk.displacement(u, 128, plan).matrix
        wv = fk.displacement(v, 128, plan).matrix
        wuv = fk.displacement((u[0] + v[0], u[1] + v[1]), 128, plan).matrix
        phase = np.exp(-1j * math.pi * (u[0] * v[1] - u[1] * v[0]))
        assert np.max(np.abs((wu @ wv - phase * wuv)[:96, :96])) < 1e-8


def test_codeword_parity_and_diagnostics():
    for bit in (0, 1):
        vec = fk.gkp_codeword(bit, 0.3, 1.7, 128)
        assert np.max(np.abs(vec.amplitudes[1::2])) < 1e-12
        assert vec.meta["dropped_weight"] <= 1e-6 * vec.meta["total_weight"]


def test_codeword_vacuum_limit():
    vec = fk.gkp_codeword(0, 1.2, 1.0, 64).normalized()
    assert abs(vec.amplitudes[0]) ** 2 > 0.99


def test_codeword_overlap_decays_with_smaller_delta():
    o25 = abs(
        fk.gkp_codeword(0, 0.25, 1.0, 256)
        .normalized()
        .overlap(fk.gkp_codeword(1, 0.25, 1.0, 256).normalized())
    )
    o45 = abs(
        fk.gkp_codeword(0, 0.45, 1.0, 256)
        .normalized()
        .overlap(fk.gkp_codeword(1, 0.45, 1.0, 256).normalized())
    )
    assert o25 < o45


def test_codeword_matches_position_grid_oracle():
    for lam in (1.0, 2.0):
        lattice = fk.gkp_codeword(0, 0.35, lam, 256).normalized()
        oracle = fk.gkp_codeword_position_oracle(0, 0.35, lam, 256)
        assert abs(oracle.overlap(lattice)) ** 2 > 1.0 - 1e-6


def test_orthonormalize_contract():
    c0 = fk.gkp_codeword(0, 0.35, 1.0, 256)
    c1 = fk.gkp_codeword(1, 0.35, 1.0, 256)
    e0, e1 = fk.orthonormalize(c0, c1)
    assert abs(e0.overlap(e1)) < 1e-12
    assert abs(e0.norm() - 1.0) < 1e-12
    assert abs(e1.norm() - 1.0) < 1e-12
    # parity survives the symmetric orthogonalisation
    assert np.max(np.abs(e0.amplitudes[1::2])) < 1e-12


def test_orthonormalize_is_symmetric_up_to_phase():
    c0 = fk.gkp_codeword(0, 0.3, 1.0, 256)
    c1 = fk.gkp_codeword(1, 0.3, 1.0, 256)
    e0, e1 = fk.orthonormalize(c0, c1)
    f1, f0 = fk.orthonormalize(c1, c0)
    assert abs(abs(e0.overlap(f0)) - 1.0) < 1e-10
    assert abs(abs(e1.overlap(f1)) - 1.0) < 1e-10


def test_orthonormalize_rejects_parallel():
    c0 = fk.gkp_codeword(0, 0.3, 1.0, 128)
    with pytest.raises(fk.DegeneratePairError):
        fk.orthonormalize(c0, fk.FockVector(2.0 * c0.amplitudes))


def test_already_orthonormal_pair_unchanged():
    a = np.zeros(32, dtype=complex)
    b = np.zeros(32, dtype=complex)
    a[0] = 1.0
    b[3] = 1.0j
    e0, e1 = fk.orthonormalize(fk.FockVector(a), fk.FockVector(b))
    assert abs(abs(np.vdot(e0.amplitudes, a)) - 1.0) < 1e-12
    assert abs(abs(np.vdot(e1.amplitudes, b)) - 1.0) < 1e-12


def test_poly_phase_gate_zero_is_identity_embedding():
    plan = fk.TruncationPlan(d_init=32)
    gate = fk.poly_phase_gate(RationalPolynomial([]), 1.0, plan)
    assert gate.matrix.shape == (96, 32)
    assert np.max(np.abs(gate.matrix - np.eye(96, 32))) < 1e-10


def test_poly_phase_gate_linear_acts_as_logical_z():
    plan = fk.TruncationPlan(d_init=192)
    gate = fk.poly_phase_gate(RationalPolynomial([0, F(1, 2)]), 1.0, plan)
    c0 = fk.gkp_codeword(0, 0.25, 1.0, 192)
    c1 = fk.gkp_codeword(1, 0.25, 1.0, 192)
    e0, e1 = fk.orthonormalize(c0, c1)
    pad = plan.d_out - 192
    ip0 = np.vdot(np.pad(e0.amplitudes, (0, pad)), gate.matrix @ e0.amplitudes)
    ip1 = np.vdot(np.pad(e1.amplitudes, (0, pad)), gate.matrix @ e1.amplitudes)
    # +norm² / -norm² action up to the finite-Delta contraction; the logical
    # content is the relative phase, which must be pi to 1e-2
    assert ip0.real > 0.9
    assert ip1.real < -0.9
    assert abs(np.angle(-ip1 / ip0)) < 1e-2


def test_poly_phase_gate_columns_orthonormal():
    plan = fk.TruncationPlan(d_init=160)
    gate = fk.poly_phase_gate(T3, 2.0, plan)
    gram = gate.matrix.conj().T @ gate.matrix
    assert np.max(np.abs(gram - np.eye(160))) < 1e-6


def test_pauli_operator_validation():
    with pytest.raises(ValueError):
        fk.pauli_measurement_operator("Z", 1.0, None, 64, n_cut=10)
    with pytest.raises(ValueError):
        fk.pauli_measurement_operator("Q", 1.0, None, 64)


def test_pauli_operators_hermitian_and_contracting():
    for which in ("X", "Y", "Z"):
        op = fk.pauli_measurement_operator(which, 1.3, None, 96)
        assert np.max(np.abs(op.matrix - op.matrix.conj().T)) < 1e-10
        smear = math.tanh(0.25**2 / 2) * np.eye(2)
        sm = fk.pauli_measurement_operator(which, 1.3, smear, 96)
        assert np.linalg.norm(sm.matrix, 2) <= np.linalg.norm(op.matrix, 2) + 1e-9


def test_pauli_z_eigenstate_contract():
    delta, lam, d = 0.25, 1.0, 512
    zm = fk.pauli_measurement_operator("Z", lam, None, d)
    for bit, sign in ((0, 1.0), (1, -1.0)):
        c = fk.gkp_codeword(bit, delta, lam, d)
        val = np.vdot(c.amplitudes, zm.matrix @ c.amplitudes).real / c.norm() ** 2
        assert abs(val - sign) < 2e-3


def test_pauli_z_sign_stable_inside_patch():
    delta, lam, d = 0.25, 1.0, 360
    plan = fk.TruncationPlan(d_init=d)
    zm = fk.pauli_measurement_operator("Z", lam, None, d)
    w = fk.displacement((0.05, 0.08), d, plan)  # inside the correctable patch
    vec = fk.FockVector(w.matrix @ fk.gkp_codeword(0, delta, lam, d).normalized().amplitudes)
    val = np.vdot(vec.amplitudes, zm.matrix @ vec.amplitudes).real / vec.norm() ** 2
    assert val > 0.9


def test_smear_rescales_leading_coefficient():
    # Z_m leading terms W(0, ±1/sqrt(2 lam)) pick up exp(-pi tanh /(2 lam));
    # with n_cut = 1 only those two terms survive, so the profile ratio is
    # the rescaling factor pointwise.
    delta, lam = 0.25, 1.0
    smear = math.tanh(delta**2 / 2) * np.eye(2)
    x = np.linspace(-3.0, 3.0, 11)
    g_plain, h_plain = fk.pauli_profiles(lam, None, x, n_cut=1)
    g_smear, h_smear = fk.pauli_profiles(lam, smear, x, n_cut=1)
    expected = math.exp(-math.pi * math.tanh(delta**2 / 2) / (2 * lam))
    assert np.allclose(g_smear / g_plain, expected, atol=1e-12)
    assert np.allclose(h_smear / h_plain, expected, atol=1e-12)


def test_pauli_n_cut_convergence():
    # Doubling the displacement cut leaves smeared-operator expectations
    # unchanged at 1e-8 (the smear suppresses tail terms exponentially; the
    # unsmeared square-wave partial sum keeps a ~1e-5 Gibbs ripple instead).
    delta, lam, d = 0.25, 1.3, 256
    smear = math.tanh(delta**2 / 2) * np.diag([lam, 1 / lam])
    c0 = fk.gkp_codeword(0, delta, lam, d).normalized()
    vals = []
    ripple = []
    for n_cut in (59, 119):
        zm = fk.pauli_measurement_operator("Z", lam, smear, d, n_cut=n_cut)
        vals.append(np.vdot(c0.amplitudes, zm.matrix @ c0.amplitudes).real)
        zu = fk.pauli_measurement_operator("Z", lam, None, d, n_cut=n_cut)
        ripple.append(np.vdot(c0.amplitudes, zu.matrix @ c0.amplitudes).real)
    assert abs(vals[0] - vals[1]) < 1e-8
    assert abs(ripple[0] - ripple[1]) < 1e-4


def test_gkp_params():
    p = fk.GkpParams(0.25, 2.0)
    assert abs(p.n_bar - 7.5) < 1e-12
    assert abs(p.delta_db - 12.0411) < 1e-3
    assert abs(fk.GkpParams.from_n_bar(7.5).delta - 0.25) < 1e-12
    with pytest.raises(ValueError):
        fk.GkpParams(1.2, 1.0)
