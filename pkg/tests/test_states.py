import math

import numpy as np
import pytest

from homodyne_sim.fock import expectation, number
from homodyne_sim.states import (
    StateSpec,
    auto_cutoff,
    build,
    coherent_cutoff,
    mandel_q,
    mean_photon_number,
    moments,
    state_digest,
)


def test_single_excitation_amplitudes():
    st = build(StateSpec.single_excitation(), ("a", "b"))
    # amplitudes 1/sqrt(2) on |01> and |10>
    assert st.data[1] == pytest.approx(1 / math.sqrt(2))
    assert st.data[2] == pytest.approx(1 / math.sqrt(2))
    assert st.data[0] == st.data[3] == 0.0


def test_binomial_amplitudes():
    st = build(StateSpec.binomial(4), ("a", "b"))
    d = st.space.dims[0]
    for j in range(5):
        amp = st.data[j * d + (4 - j)]
        assert amp == pytest.approx(math.sqrt(math.comb(4, j) / 16.0))
    assert np.vdot(st.data, st.data).real == pytest.approx(1.0, abs=1e-12)


def test_thermal_populations():
    st = build(StateSpec.thermal(1.0), "c")
    pops = np.real(np.diag(st.data))
    for n in range(5):
        assert pops[n] == pytest.approx(0.5 * 0.5**n, rel=1e-10)
    assert np.trace(st.data).real == pytest.approx(1.0, abs=1e-12)


def test_coherent_expectations():
    st = build(StateSpec.coherent(2.0), "c")
    assert moments(st, "c", (1, 0)) == pytest.approx(2.0, abs=1e-10)
    assert mean_photon_number(st, "c") == pytest.approx(4.0, abs=1e-10)
    ratio = abs(moments(st, "c", (1, 0))) ** 2 / mean_photon_number(st, "c")
    assert ratio == pytest.approx(1.0, abs=1e-10)


def test_coherent_number_distribution_poisson():
    alpha = 1.7 + 0.4j
    st = build(StateSpec.coherent(alpha), "c")
    mean = abs(alpha) ** 2
    n = np.arange(st.space.dims[0], dtype=float)
    from scipy.special import gammaln

    poisson = np.exp(n * math.log(mean) - gammaln(n + 1.0) - mean)
    tv = 0.5 * np.sum(np.abs(np.abs(st.data) ** 2 - poisson))
    assert tv < 1e-8


def test_displaced_thermal_first_moment_factor():
    st = build(StateSpec.displaced_thermal(2.0, 1.0), "c")
    factor = abs(moments(st, "c", (1, 0))) ** 2 / mean_photon_number(st, "c")
    assert factor == pytest.approx(0.8, abs=1e-8)
    assert moments(st, "c", (1, 0)) == pytest.approx(2.0, abs=1e-8)
    assert mean_photon_number(st, "c") == pytest.approx(5.0, abs=1e-8)


def test_displaced_thermal_zero_occupation_is_coherent():
    dt = build(StateSpec.displaced_thermal(1.5, 0.0), "c")
    coh = build(StateSpec.coherent(1.5), "c")
    k = min(dt.space.cutoff("c"), coh.space.cutoff("c"))
    delta = dt.density()[: k + 1, : k + 1] - coh.density()[: k + 1, : k + 1]
    assert np.linalg.norm(delta) < 1e-9


def test_squeezed_second_moment_identity():
    for r in (0.3, 0.8, 1.2):
        st = build(StateSpec.squeezed_vacuum(r), "c")
        second = moments(st, "c", (0, 2))
        expected = -math.sinh(r) * math.cosh(r)
        assert second == pytest.approx(expected, rel=1e-9)
        n = mean_photon_number(st, "c")
        assert abs(second) ** 2 == pytest.approx(n * n + n, rel=1e-9)
        assert n == pytest.approx(math.sinh(r) ** 2, rel=1e-9)


def test_tmsv_pair_moment_closed_form():
    x = 0.3
    st = build(StateSpec.tmsv(x), ("a", "b"))
    from homodyne_sim.fock import annihilation

    ab = annihilation(st.space, "a") @ annihilation(st.space, "b")
    val = expectation(st, ab)
    assert val.real == pytest.approx(x / (1 - x * x), rel=1e-8)
    assert val.imag == pytest.approx(0.0, abs=1e-12)


def test_tmsv_reduced_state_is_thermal():
    x = 0.5
    st = build(StateSpec.tmsv(x), ("a", "b"))
    d = st.space.dims[0]
    psi = st.data.reshape(d, d)
    reduced = psi @ psi.conj().T  # partial trace over mode b
    n_eff = x * x / (1 - x * x)
    target = np.diag((n_eff ** np.arange(d)) / (n_eff + 1.0) ** (np.arange(d) + 1.0))
    assert 0.5 * np.abs(np.linalg.eigvalsh(reduced - target)).sum() < 1e-8


def test_mandel_q_reference_values():
    assert mandel_q(build(StateSpec.thermal(1.5), "c"), "c") == pytest.approx(1.5, abs=1e-9)
    assert mandel_q(build(StateSpec.coherent(2.0), "c"), "c") == pytest.approx(0.0, abs=1e-9)
    assert mandel_q(build(StateSpec.fock(4), "c"), "c") == pytest.approx(-1.0, abs=1e-9)


def test_displaced_fock_mean_photon():
    st = build(StateSpec.displaced_fock(1.0, 2), "c")
    # displacement adds |alpha|^2 to the Fock occupation
    assert mean_photon_number(st, "c") == pytest.approx(3.0, abs=1e-8)


def test_displaced_squeezed_moments():
    alpha, r = 0.8, 0.5
    st = build(StateSpec.displaced_squeezed(alpha, r), "c")
    expected_n = abs(alpha) ** 2 + math.sinh(r) ** 2
    assert mean_photon_number(st, "c") == pytest.approx(expected_n, rel=1e-8)


def test_custom_state_normalizes():
    st = build(StateSpec.custom([1.0, 1.0, 1.0, 1.0]), "c")
    assert np.vdot(st.data, st.data).real == pytest.approx(1.0, abs=1e-12)
    assert st.space.cutoff("c") == 3


def test_parameter_range_errors():
    with pytest.raises(ValueError):
        build(StateSpec.tmsv(1.0), ("a", "b"))
    with pytest.raises(ValueError):
        build(StateSpec.thermal(-0.1), "c")
    with pytest.raises(ValueError):
        build(StateSpec.squeezed_vacuum(-1.0), "c")
    with pytest.raises(ValueError):
        build(StateSpec.binomial(0), ("a", "b"))


def test_explicit_cutoff_too_small_rejected():
    with pytest.raises(ValueError, match="defect"):
        build(StateSpec.coherent(3.0, cutoff=4), "c")
    with pytest.raises(ValueError, match="defect"):
        build(StateSpec.thermal(2.0, cutoff=3), "c")
    with pytest.raises(ValueError, match="defect"):
        build(StateSpec.tmsv(0.8, cutoff=5), ("a", "b"))


def test_explicit_cutoff_honored_when_adequate():
    st = build(StateSpec.coherent(0.5, cutoff=25), "c")
    assert st.space.cutoff("c") == 25
    assert mean_photon_number(st, "c") == pytest.approx(0.25, abs=1e-10)


def test_mode_label_count_enforced():
    with pytest.raises(ValueError, match="label"):
        build(StateSpec.coherent(1.0), ("a", "b"))
    with pytest.raises(ValueError, match="label"):
        build(StateSpec.tmsv(0.2), "a")


def test_moment_order_beyond_cutoff_rejected():
    st = build(StateSpec.fock(1), "c")
    with pytest.raises(ValueError, match="cutoff"):
        moments(st, "c", (2, 2))


def test_every_built_state_passes_invariants():
    specs = [
        (StateSpec.coherent(1.2 + 0.3j), "c"),
        (StateSpec.squeezed_vacuum(0.7, 1.1), "c"),
        (StateSpec.displaced_fock(0.5, 1), "c"),
        (StateSpec.tmsv(0.4), ("a", "b")),
        (StateSpec.binomial(3), ("a", "b")),
    ]
    for spec, labels in specs:
        st = build(spec, labels)
        assert st.kind == "pure"
        assert np.vdot(st.data, st.data).real == pytest.approx(1.0, abs=1e-10)
    rho = build(StateSpec.displaced_thermal(1.0, 0.5), "c")
    assert np.trace(rho.data).real == pytest.approx(1.0, abs=1e-10)
    evals = np.linalg.eigvalsh(rho.data)
    assert evals.min() > -1e-10


def test_spec_dict_roundtrip_and_digest():
    spec = StateSpec.displaced_thermal(1.0 + 2.0j, 0.5, cutoff=40)
    back = StateSpec.from_dict(spec.to_dict())
    assert back == spec
    assert back.digest() == spec.digest()
    other = StateSpec.displaced_thermal(1.0 + 2.0j, 0.6, cutoff=40)
    assert other.digest() != spec.digest()


def test_auto_cutoff_estimates():
    assert auto_cutoff(StateSpec.coherent(2.0)) == coherent_cutoff(2.0)
    assert auto_cutoff(StateSpec.binomial(4)) == 4
    assert auto_cutoff(StateSpec.single_excitation()) == 1
    assert auto_cutoff(StateSpec.fock(3, cutoff=9)) == 9


def test_state_digest_distinguishes_states():
    a = build(StateSpec.coherent(1.0), "c")
    b = build(StateSpec.coherent(1.0 + 1e-6), "c")
    assert state_digest(a) != state_digest(b)
    assert state_digest(a) == state_digest(build(StateSpec.coherent(1.0), "c"))
