"""Measured quadratures for homodyne detection with finite local oscillators.

The intensity difference behind a 50/50 beamsplitter realizes

    X^(m)      = (a^dag c + a c^dag) / (2 sqrt(<n_c>))
    P^(m)      = i (a^dag c - a c^dag) / (2 sqrt(<n_c>))
    X^(m,phi)  = (e^{i phi} a^dag c + e^{-i phi} a c^dag) / (2 sqrt(<n_c>))

where c is the local-oscillator mode and <n_c> its exact intensity.  These
reduce to the ideal quadratures only in the strong-coherent-LO limit; all
first/second-order combinations below keep the LO modes explicit.

Useful operator identities (exact on the truncated space):

    X^(m) + i P^(m)   = a c^dag / sqrt(<n_c>)
    (X^(m) + i P^(m))^2 = a^2 (c^dag)^2 / <n_c>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    HilbertSpace,
    LinearOperator,
    QuantumState,
    annihilation,
    expectation,
    make_space,
    tensor_product,
    variance,
)
from .states import mean_photon_number, moments

RECONSTRUCTION_PHASES = (0.0, math.pi / 4.0, math.pi / 2.0)


def lo_intensity(lo: QuantumState | float) -> float:
    """Mean boson number of the LO; accepts a measured value directly."""
    if isinstance(lo, QuantumState):
        if lo.space.n_modes != 1:
            raise ValueError("LO state must be single-mode")
        value = mean_photon_number(lo, lo.space.labels[0])
    else:
        value = float(lo)
    if value <= 0.0:
        raise ValueError(f"LO intensity must be positive, got {value}")
    return value


@dataclass(frozen=True)
class MeasuredQuadrature:
    """Descriptor of one intensity-difference setting."""

    signal_mode: str
    lo_mode: str
    phase: float
    lo_mean_n: float

    def operator(self, space: HilbertSpace) -> LinearOperator:
        return measured_quadrature(
            space, self.signal_mode, self.lo_mode, self.phase, self.lo_mean_n
        )


@dataclass(frozen=True)
class MeasurementBudget:
    """Shot budget and per-detector counting noise (atoms)."""

    samples: int
    excess_noise: float = 0.0

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if self.excess_noise < 0.0:
            raise ValueError("excess_noise must be >= 0")


def measured_quadrature(
    space: HilbertSpace,
    signal_mode: str,
    lo_mode: str,
    phi: float,
    lo: QuantumState | float,
) -> LinearOperator:
    """Two-mode Hermitian operator realized by the intensity difference."""
    n_lo = lo_intensity(lo)
    a = annihilation(space, signal_mode)
    c = annihilation(space, lo_mode)
    scale = 1.0 / (2.0 * math.sqrt(n_lo))
    term = a.dag() @ c
    return (scale * np.exp(1j * phi)) * term + (scale * np.exp(-1j * phi)) * term.dag()


def _signal_labels(rho_ab: QuantumState) -> tuple[str, str]:
    if rho_ab.space.n_modes != 2:
        raise ValueError("signal state must be two-mode")
    return rho_ab.space.labels[0], rho_ab.space.labels[1]


def _lo_label(lo: QuantumState) -> str:
    if lo.space.n_modes != 1:
        raise ValueError("LO state must be single-mode")
    return lo.space.labels[0]


def hz_lhs_first_order(
    rho_ab: QuantumState,
    lo_c: QuantumState,
    lo_d: QuantumState,
    type_: int = 1,
    path: str = "factored",
) -> complex:
    """First-order measured-quadrature combination.

    type 1: <X_a X_b + P_a P_b - i X_a P_b + i P_a X_b>  = <a b^dag c^dag d> / sqrt(n_c n_d)
    type 2: <X_a X_b - P_a P_b + i X_a P_b + i P_a X_b>  = <a b c^dag d^dag> / sqrt(n_c n_d)

    (all measured observables).  The full path evaluates the composite
    operator on the four-mode product state; the factored path multiplies
    the signal-pair moment by single-mode LO moments.  They agree because
    signal and LOs are prepared independently.
    """
    if type_ not in (1, 2):
        raise ValueError("type_ must be 1 or 2")
    n_c = lo_intensity(lo_c)
    n_d = lo_intensity(lo_d)
    scale = 1.0 / math.sqrt(n_c * n_d)
    la, lb = _signal_labels(rho_ab)
    if path == "factored":
        lc, ld = _lo_label(lo_c), _lo_label(lo_d)
        cdag = moments(lo_c, lc, (1, 0))
        if type_ == 1:
            sig = _pair_moment(rho_ab, la, lb, dag_b=True)
            return sig * cdag * moments(lo_d, ld, (0, 1)) * scale
        sig = _pair_moment(rho_ab, la, lb, dag_b=False)
        return sig * cdag * moments(lo_d, ld, (1, 0)) * scale
    if path != "full":
        raise ValueError("path must be 'factored' or 'full'")
    state = tensor_product([rho_ab, lo_c, lo_d])
    space = state.space
    lc, ld = _lo_label(lo_c), _lo_label(lo_d)
    a = annihilation(space, la)
    b = annihilation(space, lb)
    c = annihilation(space, lc)
    d = annihilation(space, ld)
    if type_ == 1:
        op = a @ b.dag() @ c.dag() @ d
    else:
        op = a @ b @ c.dag() @ d.dag()
    return expectation(state, op) * scale


def _pair_moment(rho_ab: QuantumState, la: str, lb: str, *, dag_b: bool) -> complex:
    space = rho_ab.space
    a = annihilation(space, la)
    b = annihilation(space, lb)
    op = a @ (b.dag() if dag_b else b)
    return expectation(rho_ab, op)


_SETTING_PHASES = (
    (0.0, 0.0),
    (math.pi / 2.0, math.pi / 2.0),
    (0.0, math.pi / 2.0),
    (math.pi / 2.0, 0.0),
)


def fluctuation_delta_m(
    rho_ab: QuantumState,
    lo_c: QuantumState,
    lo_d: QuantumState,
    type_: int = 1,
    path: str = "factored",
) -> float:
    """Sum of the four quadrature-product variances on signal x LOs.

    This is the shot-to-shot fluctuation of the first-order combination;
    the statistical precision after M shots is sqrt(result / M).  The four
    product observables (XX, PP, XP, PX) are the same for both criterion
    types, so `type_` only documents intent.

    The factored path expands each product variance into joint signal-pair
    moments times single-mode LO moments, which is exact here because the
    overall state is a product; the full path builds the composite
    operators on the four-mode state.
    """
    if type_ not in (1, 2):
        raise ValueError("type_ must be 1 or 2")
    if path == "factored":
        return _delta_m_factored(rho_ab, lo_c, lo_d)
    if path != "full":
        raise ValueError("path must be 'factored' or 'full'")
    state = tensor_product([rho_ab, lo_c, lo_d])
    space = state.space
    la, lb = _signal_labels(rho_ab)
    lc, ld = _lo_label(lo_c), _lo_label(lo_d)
    n_c, n_d = lo_intensity(lo_c), lo_intensity(lo_d)
    total = 0.0
    for phi_a, phi_b in _SETTING_PHASES:
        qa = measured_quadrature(space, la, lc, phi_a, n_c)
        qb = measured_quadrature(space, lb, ld, phi_b, n_d)
        total += _product_variance(state, qa, qb)
    return total


def _product_variance(state: QuantumState, left: LinearOperator, right: LinearOperator) -> float:
    """Variance of the Hermitian product of two commuting Hermitian factors."""
    if state.kind == "pure":
        w = left.matrix @ (right.matrix @ state.data)
        mean = float(np.vdot(state.data, w).real)
        second = float(np.vdot(w, w).real)
        return second - mean * mean
    return variance(state, left @ right)


def _delta_m_factored(
    rho_ab: QuantumState, lo_c: QuantumState, lo_d: QuantumState
) -> float:
    # Per setting (phi_a, phi_b), with u = a^dag c:
    #   Q_a   = (e^{i phi} u + e^{-i phi} u^dag) / (2 sqrt(n_c))
    #   Q_a^2 = [e^{2i phi} a^dag^2 c^2 + a^dag a . c c^dag
    #            + a a^dag . c^dag c + e^{-2i phi} a^2 c^dag^2] / (4 n_c)
    # so <Q_a Q_b> and <Q_a^2 Q_b^2> reduce to joint signal-pair moments
    # weighted by single-mode LO moments.
    la, lb = _signal_labels(rho_ab)
    lc, ld = _lo_label(lo_c), _lo_label(lo_d)
    n_c, n_d = lo_intensity(lo_c), lo_intensity(lo_d)
    space = rho_ab.space
    a = annihilation(space, la)
    b = annihilation(space, lb)
    mons_a = (a.dag() @ a.dag(), a.dag() @ a, a @ a.dag(), a @ a)
    mons_b = (b.dag() @ b.dag(), b.dag() @ b, b @ b.dag(), b @ b)
    joint2 = np.array(
        [[expectation(rho_ab, ma @ mb) for mb in mons_b] for ma in mons_a]
    )
    first_a = (a.dag(), a)
    first_b = (b.dag(), b)
    joint1 = np.array(
        [[expectation(rho_ab, fa @ fb) for fb in first_b] for fa in first_a]
    )
    lo2_c = np.array(
        [moments(lo_c, lc, (0, 2)), n_c + 1.0, n_c, moments(lo_c, lc, (2, 0))]
    )
    lo2_d = np.array(
        [moments(lo_d, ld, (0, 2)), n_d + 1.0, n_d, moments(lo_d, ld, (2, 0))]
    )
    lo1_c = np.array([moments(lo_c, lc, (0, 1)), moments(lo_c, lc, (1, 0))])
    lo1_d = np.array([moments(lo_d, ld, (0, 1)), moments(lo_d, ld, (1, 0))])
    total = 0.0
    for phi_a, phi_b in _SETTING_PHASES:
        w2a = np.array(
            [np.exp(2j * phi_a), 1.0, 1.0, np.exp(-2j * phi_a)]
        ) / (4.0 * n_c)
        w2b = np.array(
            [np.exp(2j * phi_b), 1.0, 1.0, np.exp(-2j * phi_b)]
        ) / (4.0 * n_d)
        second = ((w2a * lo2_c) @ joint2 @ (w2b * lo2_d)).real
        w1a = np.array([np.exp(1j * phi_a), np.exp(-1j * phi_a)]) / (2.0 * math.sqrt(n_c))
        w1b = np.array([np.exp(1j * phi_b), np.exp(-1j * phi_b)]) / (2.0 * math.sqrt(n_d))
        mean = ((w1a * lo1_c) @ joint1 @ (w1b * lo1_d)).real
        total += second - mean * mean
    return total


# ---------------------------------------------------------------------------
# second order: three phases per mode, nine joint settings


def second_order_settings(
    rho_ab: QuantumState, lo_c: QuantumState, lo_d: QuantumState
) -> np.ndarray:
    """Joint second moments <(X_a^{m,phi_i})^2 (X_b^{m,phi_j})^2>.

    Rows index the mode-a phase, columns the mode-b phase, both over
    (0, pi/4, pi/2).  These nine numbers are what an experiment records.
    """
    state = tensor_product([rho_ab, lo_c, lo_d])
    space = state.space
    la, lb = _signal_labels(rho_ab)
    lc, ld = _lo_label(lo_c), _lo_label(lo_d)
    n_c, n_d = lo_intensity(lo_c), lo_intensity(lo_d)
    ops_a = [measured_quadrature(space, la, lc, phi, n_c) for phi in RECONSTRUCTION_PHASES]
    ops_b = [measured_quadrature(space, lb, ld, phi, n_d) for phi in RECONSTRUCTION_PHASES]
    out = np.zeros((3, 3))
    for i, qa in enumerate(ops_a):
        for j, qb in enumerate(ops_b):
            val = expectation(state, qa @ qa @ qb @ qb)
            out[i, j] = val.real
    return out


# (X + iP)^2 and (X - iP)^2 over the phase-ordered settings
# {(X^{0})^2, (X^{pi/4})^2, (X^{pi/2})^2} = {X^2, (X+P)^2/2, P^2},
# using X P + P X = 2 (X^{pi/4})^2 - X^2 - P^2.
_COEFF_PLUS = np.array([1.0 - 1.0j, 2.0j, -(1.0 + 1.0j)])
_COEFF_MINUS = np.array([1.0 + 1.0j, -2.0j, -(1.0 - 1.0j)])


def reconstruct_second_order(settings: np.ndarray) -> complex:
    """Assemble <(X_a+iP_a)^2 (X_b-iP_b)^2> from the nine joint settings."""
    settings = np.asarray(settings, dtype=float)
    if settings.shape != (3, 3):
        raise ValueError(
            "need the 3x3 joint second moments at phases (0, pi/4, pi/2); "
            f"got shape {settings.shape}"
        )
    return complex(_COEFF_PLUS @ settings @ _COEFF_MINUS)


def second_order_lhs(
    rho_ab: QuantumState,
    lo_c: QuantumState,
    lo_d: QuantumState,
    path: str = "factored",
) -> complex:
    """<(X_a+iP_a)^2 (X_b-iP_b)^2> = <a^2 (c^dag)^2 b^dag^2 d^2> / (n_c n_d)."""
    n_c, n_d = lo_intensity(lo_c), lo_intensity(lo_d)
    la, lb = _signal_labels(rho_ab)
    if path == "factored":
        lc, ld = _lo_label(lo_c), _lo_label(lo_d)
        space = rho_ab.space
        a = annihilation(space, la)
        b = annihilation(space, lb)
        sig = expectation(rho_ab, a @ a @ b.dag() @ b.dag())
        return sig * moments(lo_c, lc, (2, 0)) * moments(lo_d, ld, (0, 2)) / (n_c * n_d)
    if path != "full":
        raise ValueError("path must be 'factored' or 'full'")
    state = tensor_product([rho_ab, lo_c, lo_d])
    space = state.space
    lc, ld = _lo_label(lo_c), _lo_label(lo_d)
    a = annihilation(space, la)
    b = annihilation(space, lb)
    c = annihilation(space, lc)
    d = annihilation(space, ld)
    op = a @ a @ c.dag() @ c.dag() @ b.dag() @ b.dag() @ d @ d
    return expectation(state, op) / (n_c * n_d)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SampleResult:
    """Outcome record of one sampled setting."""

    outcomes: np.ndarray = field(repr=False)
    mean: float
    stderr: float
    samples: int
    excess_noise: float
    exact_mean: float


def _finish_samples(
    outcomes: np.ndarray,
    exact_mean: float,
    budget: MeasurementBudget,
    rng: np.random.Generator,
    lo_mean_n: float | None,
) -> SampleResult:
    if budget.excess_noise > 0.0:
        if lo_mean_n is None or lo_mean_n <= 0.0:
            raise ValueError("excess noise needs a positive lo_mean_n")
        noise_std = budget.excess_noise / (2.0 * lo_mean_n)
        outcomes = outcomes + rng.normal(0.0, noise_std, size=budget.samples)
    mean = float(outcomes.mean())
    stderr = (
        float(outcomes.std(ddof=1) / math.sqrt(budget.samples))
        if budget.samples > 1
        else 0.0
    )
    return SampleResult(
        outcomes, mean, stderr, budget.samples, budget.excess_noise, exact_mean
    )


def sample_measurement(
    state: QuantumState,
    observable: LinearOperator,
    budget: MeasurementBudget,
    seed: int,
    lo_mean_n: float | None = None,
) -> SampleResult:
    """Draw shots from the observable's spectral distribution.

    Outcomes follow the exact eigenvalue distribution of the observable in
    `state`.  With a nonzero excess-noise budget, independent Gaussian
    counting noise of standard deviation dN_ex / (2 <n_c>) is added to each
    shot, i.e. the intensity-difference error divided by the quadrature
    normalization.  Fixed seeds reproduce bit-identical output.
    """
    if not observable.is_hermitian():
        raise ValueError("can only sample Hermitian observables")
    if state.space.modes != observable.space.modes:
        raise ValueError("state and observable live on different spaces")
    eigvals, eigvecs = np.linalg.eigh(observable.dense())
    if state.kind == "pure":
        probs = np.abs(eigvecs.conj().T @ state.data) ** 2
    else:
        probs = np.real(np.einsum("ij,jk,ki->i", eigvecs.conj().T, state.data, eigvecs))
        probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(eigvals, size=budget.samples, p=probs)
    exact = float(probs @ eigvals)
    return _finish_samples(outcomes, exact, budget, rng, lo_mean_n)


FIRST_ORDER_SETTING_PHASES: dict[str, tuple[float, float]] = {
    "xx": (0.0, 0.0),
    "pp": (math.pi / 2.0, math.pi / 2.0),
    "xp": (0.0, math.pi / 2.0),
    "px": (math.pi / 2.0, 0.0),
}


def first_order_settings(
    rho_ab: QuantumState, lo_c: QuantumState, lo_d: QuantumState
) -> dict[str, LinearOperator]:
    """The four product observables entering the first-order combination."""
    state_space = tensor_product([rho_ab, lo_c, lo_d]).space
    la, lb = _signal_labels(rho_ab)
    lc, ld = _lo_label(lo_c), _lo_label(lo_d)
    n_c, n_d = lo_intensity(lo_c), lo_intensity(lo_d)
    out = {}
    for name, (phi_a, phi_b) in FIRST_ORDER_SETTING_PHASES.items():
        qa = measured_quadrature(state_space, la, lc, phi_a, n_c)
        qb = measured_quadrature(state_space, lb, ld, phi_b, n_d)
        out[name] = qa @ qb
    return out


def sample_first_order(
    rho_ab: QuantumState,
    lo_c: QuantumState,
    lo_d: QuantumState,
    budget: MeasurementBudget,
    seed: int,
) -> dict[str, SampleResult]:
    """Sample the four first-order settings.

    Each setting is a product of two commuting two-mode observables (one
    per signal/LO pair), so only the small two-mode factors are ever
    diagonalized; a joint outcome is the product of the factor outcomes.
    Setting k uses seed + k so the four streams stay independent.
    """
    la, lb = _signal_labels(rho_ab)
    lc, ld = _lo_label(lo_c), _lo_label(lo_d)
    n_c, n_d = lo_intensity(lo_c), lo_intensity(lo_d)
    state = tensor_product([rho_ab, lo_c, lo_d])
    if state.kind != "pure":
        # generic fallback: diagonalize the composite operators
        ops = first_order_settings(rho_ab, lo_c, lo_d)
        return {
            name: sample_measurement(state, op, budget, seed + k, lo_mean_n=n_c)
            for k, (name, op) in enumerate(sorted(ops.items()))
        }
    space_ac = make_space([(la, rho_ab.space.cutoff(la)), (lc, lo_c.space.cutoff(lc))])
    space_bd = make_space([(lb, rho_ab.space.cutoff(lb)), (ld, lo_d.space.cutoff(ld))])
    eig_a = {}
    eig_b = {}
    for phi in (0.0, math.pi / 2.0):
        eig_a[phi] = np.linalg.eigh(
            measured_quadrature(space_ac, la, lc, phi, n_c).dense()
        )
        eig_b[phi] = np.linalg.eigh(
            measured_quadrature(space_bd, lb, ld, phi, n_d).dense()
        )
    da, db, dc, dd = state.space.dims
    psi = state.data.reshape(da, db, dc, dd).transpose(0, 2, 1, 3).reshape(da * dc, db * dd)
    results = {}
    for k, (name, (phi_a, phi_b)) in enumerate(sorted(FIRST_ORDER_SETTING_PHASES.items())):
        vals_a, vecs_a = eig_a[phi_a]
        vals_b, vecs_b = eig_b[phi_b]
        amps = vecs_a.conj().T @ psi @ vecs_b.conj()
        probs = np.abs(amps) ** 2
        probs = (probs / probs.sum()).ravel()
        outcome_grid = np.outer(vals_a, vals_b).ravel()
        rng = np.random.default_rng(seed + k)
        outcomes = rng.choice(outcome_grid, size=budget.samples, p=probs)
        exact = float(probs @ outcome_grid)
        results[name] = _finish_samples(outcomes, exact, budget, rng, n_c)
    return results
