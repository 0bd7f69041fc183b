import math

import numpy as np
import pytest

from homodyne_sim.fock import (
    annihilation,
    expectation,
    make_space,
    pure_state,
    quadrature,
    tensor_product,
)
from homodyne_sim.homodyne import (
    MeasurementBudget,
    MeasuredQuadrature,
    first_order_settings,
    fluctuation_delta_m,
    hz_lhs_first_order,
    lo_intensity,
    measured_quadrature,
    reconstruct_second_order,
    sample_first_order,
    sample_measurement,
    second_order_lhs,
    second_order_settings,
)
from homodyne_sim.states import StateSpec, build

from conftest import dense_destroy, dense_mode_op


def _coh(alpha, label):
    return build(StateSpec.coherent(alpha), label)


def _psi01():
    return build(StateSpec.single_excitation(), ("a", "b"))


def test_lo_intensity_from_state_and_value():
    lo = _coh(2.0, "c")
    assert lo_intensity(lo) == pytest.approx(4.0, abs=1e-9)
    assert lo_intensity(6.5) == 6.5
    with pytest.raises(ValueError, match="positive"):
        lo_intensity(0.0)
    vac = build(StateSpec.fock(0), "c")
    with pytest.raises(ValueError, match="positive"):
        lo_intensity(vac)


def test_operator_identity_x_plus_ip():
    space = make_space([("a", 3), ("c", 20)])
    xm = measured_quadrature(space, "a", "c", 0.0, 4.0)
    pm = measured_quadrature(space, "a", "c", math.pi / 2.0, 4.0)
    target = (annihilation(space, "a") @ annihilation(space, "c").dag()) * 0.5
    delta = (xm + 1j * pm).matrix - target.matrix
    assert abs(delta.toarray()).max() < 1e-14


def test_measured_quadrature_hermitian_and_descriptor():
    space = make_space([("a", 2), ("c", 10)])
    op = measured_quadrature(space, "a", "c", 0.7, 2.5)
    assert op.is_hermitian()
    desc = MeasuredQuadrature("a", "c", 0.7, 2.5)
    assert abs((desc.operator(space).matrix - op.matrix).toarray()).max() == 0.0


def test_vacuum_signal_mean_and_variance():
    # vacuum signal: <X^(m)> = 0 and the variance is exactly 1/4 at any LO size
    from homodyne_sim.fock import variance

    sig = build(StateSpec.fock(0), "a")
    for alpha in (2.0, 4.0, 8.0):
        lo = _coh(alpha, "c")
        state = tensor_product([sig, lo])
        op = measured_quadrature(state.space, "a", "c", 0.0, lo_intensity(lo))
        assert expectation(state, op) == pytest.approx(0.0, abs=1e-12)
        assert variance(state, op) == pytest.approx(0.25, abs=1e-10)


def test_coherent_signal_mean():
    beta = 0.6 + 0.3j
    alpha = 1.5 * np.exp(0.4j)
    sig = build(StateSpec.coherent(beta), "a")
    lo = build(StateSpec.coherent(alpha), "c")
    state = tensor_product([sig, lo])
    op = measured_quadrature(state.space, "a", "c", 0.0, lo_intensity(lo))
    expected = (beta * np.conj(alpha)).real / abs(alpha)
    assert expectation(state, op).real == pytest.approx(expected, abs=1e-9)


def test_strong_lo_limit_moment_convergence():
    # first four X^(m) moments approach the ideal X moments as the LO grows
    sig = build(StateSpec.fock(1), "a")
    ideal_space = sig.space
    x_ideal = quadrature(ideal_space, "a", 0.0)
    ideal = []
    op = x_ideal
    for _ in range(4):
        ideal.append(expectation(sig, op).real)
        op = op @ x_ideal
    errors = []
    for alpha in (4.0, 8.0, 16.0):
        lo = _coh(alpha, "c")
        state = tensor_product([sig, lo])
        xm = measured_quadrature(state.space, "a", "c", 0.0, lo_intensity(lo))
        worst = 0.0
        op = xm
        for k in range(4):
            got = expectation(state, op).real
            worst = max(worst, abs(got - ideal[k]))
            op = op @ xm
        errors.append(worst)
    assert errors[1] <= errors[0] + 1e-8
    assert errors[2] <= errors[1] + 1e-8
    assert errors[2] < 1e-2


def test_hz_lhs_full_equals_factored():
    cases = [
        (_psi01(), StateSpec.coherent(1.2), 1),
        (build(StateSpec.tmsv(0.4), ("a", "b")), StateSpec.coherent(0.8 + 0.5j), 2),
        (build(StateSpec.binomial(3), ("a", "b")), StateSpec.squeezed_vacuum(0.4), 1),
        (_psi01(), StateSpec.displaced_thermal(0.7, 0.2), 2),
    ]
    for sig, lo_spec, type_ in cases:
        lo_c = build(lo_spec, "c")
        lo_d = build(lo_spec, "d")
        full = hz_lhs_first_order(sig, lo_c, lo_d, type_, "full")
        fact = hz_lhs_first_order(sig, lo_c, lo_d, type_, "factored")
        assert full == pytest.approx(fact, abs=1e-10)


def test_hz_lhs_psi01_value():
    lo_c, lo_d = _coh(2.0, "c"), _coh(2.0, "d")
    val = hz_lhs_first_order(_psi01(), lo_c, lo_d, 1, "factored")
    assert abs(val) ** 2 == pytest.approx(0.25, abs=1e-10)


def test_phase_covariance_of_lhs_magnitude():
    # common LO phase rotation leaves |lhs| unchanged
    sig = build(StateSpec.tmsv(0.4), ("a", "b"))
    base = abs(hz_lhs_first_order(sig, _coh(1.5, "c"), _coh(1.5, "d"), 2, "factored"))
    for theta in (0.3, 1.1, 2.7):
        rot = 1.5 * np.exp(1j * theta)
        lo_c = build(StateSpec.coherent(rot), "c")
        lo_d = build(StateSpec.coherent(rot), "d")
        rotated = abs(hz_lhs_first_order(sig, lo_c, lo_d, 2, "factored"))
        assert rotated == pytest.approx(base, abs=1e-10)


def test_delta_m_vacuum_frozen_value():
    # derived by expanding the four product variances on vacuum signals:
    # each setting contributes (1/4)^2, so Delta_m^2 = 1/4 at any LO size
    vac = tensor_product(
        [build(StateSpec.fock(0), "a"), build(StateSpec.fock(0), "b")]
    )
    for alpha in (2.0, 5.0):
        val = fluctuation_delta_m(vac, _coh(alpha, "c"), _coh(alpha, "d"), 1)
        assert val == pytest.approx(0.25, abs=1e-10)


def test_delta_m_full_vs_factored_paths():
    cases = [
        (_psi01(), StateSpec.coherent(2.0)),
        (build(StateSpec.tmsv(1 / 3), ("a", "b")), StateSpec.coherent(1.5)),
        (_psi01(), StateSpec.displaced_thermal(0.7, 0.15)),
    ]
    for sig, lo_spec in cases:
        lo_c, lo_d = build(lo_spec, "c"), build(lo_spec, "d")
        full = fluctuation_delta_m(sig, lo_c, lo_d, 1, path="full")
        fact = fluctuation_delta_m(sig, lo_c, lo_d, 1, path="factored")
        assert full == pytest.approx(fact, abs=1e-10)


def test_delta_m_dense_oracle():
    # independent dense-matrix evaluation of the four product variances
    sig = _psi01()
    lo_c, lo_d = _coh(1.2, "c"), _coh(1.2, "d")
    got = fluctuation_delta_m(sig, lo_c, lo_d, 1, path="full")
    state = tensor_product([sig, lo_c, lo_d])
    dims = state.space.dims
    n_lo = lo_intensity(lo_c)
    a = dense_mode_op(dims, 0, dense_destroy(dims[0]))
    b = dense_mode_op(dims, 1, dense_destroy(dims[1]))
    c = dense_mode_op(dims, 2, dense_destroy(dims[2]))
    d = dense_mode_op(dims, 3, dense_destroy(dims[3]))
    scale = 1.0 / (2.0 * math.sqrt(n_lo))
    xa = scale * (a.conj().T @ c + a @ c.conj().T)
    pa = 1j * scale * (a.conj().T @ c - a @ c.conj().T)
    xb = scale * (b.conj().T @ d + b @ d.conj().T)
    pb = 1j * scale * (b.conj().T @ d - b @ d.conj().T)
    psi = state.data
    total = 0.0
    for left, right in ((xa, xb), (pa, pb), (xa, pb), (pa, xb)):
        op = left @ right
        mean = np.vdot(psi, op @ psi).real
        second = np.vdot(psi, op @ (op @ psi)).real
        total += second - mean * mean
    assert got == pytest.approx(total, abs=1e-10)


def test_reconstruction_matches_direct_operator():
    lo_c, lo_d = _coh(2.0, "c"), _coh(2.0, "d")
    for sig in (
        build(StateSpec.binomial(4), ("a", "b")),
        build(StateSpec.tmsv(0.35), ("a", "b")),
    ):
        settings = second_order_settings(sig, lo_c, lo_d)
        rec = reconstruct_second_order(settings)
        direct = second_order_lhs(sig, lo_c, lo_d, path="full")
        assert rec == pytest.approx(direct, abs=1e-10)
        fact = second_order_lhs(sig, lo_c, lo_d, path="factored")
        assert fact == pytest.approx(direct, abs=1e-10)


def test_reconstruction_vacuum_is_zero():
    vac = tensor_product(
        [build(StateSpec.fock(0, cutoff=2), "a"), build(StateSpec.fock(0, cutoff=2), "b")]
    )
    lo_c, lo_d = _coh(1.5, "c"), _coh(1.5, "d")
    rec = reconstruct_second_order(second_order_settings(vac, lo_c, lo_d))
    assert abs(rec) < 1e-12


def test_reconstruction_requires_nine_settings():
    with pytest.raises(ValueError, match="3x3"):
        reconstruct_second_order(np.zeros((2, 3)))


def test_sampling_mean_within_four_stderr():
    sig = build(StateSpec.fock(1, cutoff=1), "a")
    lo = build(StateSpec.coherent(1.2), "c")
    state = tensor_product([sig, lo])
    op = measured_quadrature(state.space, "a", "c", 0.0, lo_intensity(lo))
    res = sample_measurement(state, op, MeasurementBudget(samples=20000), seed=3)
    assert abs(res.mean - res.exact_mean) < 4.0 * res.stderr
    exact = expectation(state, op).real
    assert res.exact_mean == pytest.approx(exact, abs=1e-10)


def test_sampling_variance_matches_chi2_band():
    from homodyne_sim.fock import variance

    sig = build(StateSpec.fock(1, cutoff=1), "a")
    lo = build(StateSpec.coherent(1.2), "c")
    state = tensor_product([sig, lo])
    op = measured_quadrature(state.space, "a", "c", 0.0, lo_intensity(lo))
    m = 20000
    res = sample_measurement(state, op, MeasurementBudget(samples=m), seed=17)
    sample_var = res.outcomes.var(ddof=1)
    true_var = variance(state, op)
    # chi-squared: Var(s^2) ~ (mu4 - var^2)/m; use a generous 5-sigma band
    centered = res.outcomes - res.outcomes.mean()
    mu4 = np.mean(centered**4)
    band = 5.0 * math.sqrt(max(mu4 - true_var**2, 1e-30) / m)
    assert abs(sample_var - true_var) < band


def test_sampling_reproducible_and_noise_scale():
    sig = build(StateSpec.fock(1, cutoff=1), "a")
    lo = build(StateSpec.coherent(1.2), "c")
    state = tensor_product([sig, lo])
    op = measured_quadrature(state.space, "a", "c", 0.0, lo_intensity(lo))
    r1 = sample_measurement(state, op, MeasurementBudget(samples=500), seed=99)
    r2 = sample_measurement(state, op, MeasurementBudget(samples=500), seed=99)
    assert np.array_equal(r1.outcomes, r2.outcomes)
    # dN_ex = 4 at <n_c> = 100 adds std 0.02 in quadrature units
    noisy = sample_measurement(
        state,
        op,
        MeasurementBudget(samples=200000, excess_noise=4.0),
        seed=5,
        lo_mean_n=100.0,
    )
    clean = sample_measurement(state, op, MeasurementBudget(samples=200000), seed=5)
    extra = noisy.outcomes.var() - clean.outcomes.var()
    assert math.sqrt(max(extra, 0.0)) == pytest.approx(0.02, rel=0.05)


def test_sampling_rejects_bad_inputs():
    space = make_space([("a", 1), ("c", 3)])
    sig = build(StateSpec.fock(0, cutoff=1), "a")
    lo = build(StateSpec.fock(1, cutoff=3), "c")
    state = tensor_product([sig, lo])
    with pytest.raises(ValueError, match="Hermitian"):
        sample_measurement(state, annihilation(space, "a"), MeasurementBudget(1), 0)
    with pytest.raises(ValueError):
        MeasurementBudget(samples=0)
    op = measured_quadrature(space, "a", "c", 0.0, 1.0)
    with pytest.raises(ValueError, match="lo_mean_n"):
        sample_measurement(
            state, op, MeasurementBudget(samples=5, excess_noise=1.0), seed=1
        )


def test_sample_first_order_agrees_with_generic():
    sig = _psi01()
    lo_c = build(StateSpec.coherent(1.0), "c")
    lo_d = build(StateSpec.coherent(1.0), "d")
    fast = sample_first_order(sig, lo_c, lo_d, MeasurementBudget(samples=4000), seed=2)
    state = tensor_product([sig, lo_c, lo_d])
    ops = first_order_settings(sig, lo_c, lo_d)
    for name, res in fast.items():
        exact = expectation(state, ops[name]).real
        assert res.exact_mean == pytest.approx(exact, abs=1e-9)
        assert abs(res.mean - exact) < 5.0 * max(res.stderr, 1e-6)
    again = sample_first_order(sig, lo_c, lo_d, MeasurementBudget(samples=4000), seed=2)
    for name in fast:
        assert np.array_equal(fast[name].outcomes, again[name].outcomes)


def test_lhs_type_validation():
    sig = _psi01()
    lo_c, lo_d = _coh(1.0, "c"), _coh(1.0, "d")
    with pytest.raises(ValueError, match="type_"):
        hz_lhs_first_order(sig, lo_c, lo_d, 3)
    with pytest.raises(ValueError, match="path"):
        hz_lhs_first_order(sig, lo_c, lo_d, 1, path="nope")
