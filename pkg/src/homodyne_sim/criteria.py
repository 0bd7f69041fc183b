"""Moment-based entanglement criteria and local-oscillator bounds.

Six tests are implemented, all of the form lhs <= rhs for separable
states, so a positive margin certifies entanglement:

  HZ1(s,t)  |<a^s b^dag^t>|^2              <= <a^dag^s a^s b^dag^t b^t>
  HZ2(s,t)  |<a^s b^t>|^2                  <= <a^dag^s a^s><b^dag^t b^t>
  M1        |measured type-1 combination|^2 <= <n_a n_b>
  M2        |measured type-2 combination|^2 <= <n_a><n_b>
  S1        |measured 2nd-order lhs|^2      <= <a^dag^2 a^2 b^dag^2 b^2> * f16(c) f16(d)
  S2        same lhs                        <= <a^dag^2 a^2 b^dag^2 b^2> * f18(c) f18(d)

with f16 = (<n^2>-<n>)/<n>^2 (tight for coherent LOs) and
f18 = (<n>+1)/<n> (tight for squeezed LOs).  M1/M2 need nothing but the
LO intensity; S1 additionally needs <n^2> of the LO number distribution.
Which of S1/S2 is tighter is decided by the Mandel Q factor alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    CutoffConvergenceError,
    LinearOperator,
    QuantumState,
    annihilation,
    expectation,
)
from .homodyne import hz_lhs_first_order, second_order_lhs
from .states import mandel_q, moments, state_digest

VIOLATION_TOL = 1e-10
CONVERGENCE_TOL = 1e-8


@dataclass(frozen=True)
class CriterionResult:
    """One evaluated inequality."""

    criterion_id: str
    s: int
    t: int
    lhs: float
    rhs: float
    margin: float
    violated: bool
    inputs: dict = field(default_factory=dict)
    tolerance: float = VIOLATION_TOL
    converged: bool | None = None

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "s": self.s,
            "t": self.t,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "violated": self.violated,
            "tolerance": self.tolerance,
            "converged": self.converged,
            "inputs": dict(self.inputs),
        }

    def csv_row(self) -> list:
        return [
            self.criterion_id,
            self.s,
            self.t,
            self.lhs,
            self.rhs,
            self.margin,
            int(self.violated),
        ]


CSV_HEADER = ["criterion_id", "s", "t", "lhs", "rhs", "margin", "violated"]


@dataclass(frozen=True)
class LOBoundReport:
    """Field-moment bounds of a candidate LO state."""

    mean_n: float
    mean_n_sq: float
    first_moment_sq: float
    second_moment_sq: float
    bound_a: float
    bound_16: float
    bound_18: float
    mandel_q: float


def _result(
    criterion_id: str,
    s: int,
    t: int,
    lhs: float,
    rhs: float,
    inputs: dict,
    tol: float,
    converged: bool | None = None,
) -> CriterionResult:
    margin = lhs - rhs
    return CriterionResult(
        criterion_id, s, t, lhs, rhs, margin, margin > tol, inputs, tol, converged
    )


def _power(op: LinearOperator, k: int) -> LinearOperator:
    out = op
    for _ in range(k - 1):
        out = out @ op
    return out


def _boundary_mass(state: QuantumState, label: str, levels: int) -> float:
    """Population within `levels` of one mode's cutoff."""
    dims = state.space.dims
    axis = state.space.axis(label)
    if state.kind == "pure":
        probs = np.abs(state.data.reshape(dims)) ** 2
    else:
        probs = np.real(np.diagonal(state.data)).reshape(dims)
    take = min(levels, dims[axis])
    return float(probs.take(range(dims[axis] - take, dims[axis]), axis=axis).sum())


def _check_truncation(states_orders: list[tuple[QuantumState, int]], what: str) -> bool:
    """Moments are truncation-insensitive only if nothing lives near the
    cutoffs; enlarging the cutoffs by 5 would otherwise move the result.

    Raises when any involved mode carries more than CONVERGENCE_TOL of
    population within (order + 1) levels of its cutoff.
    """
    for state, order in states_orders:
        for label in state.space.labels:
            mass = _boundary_mass(state, label, order + 1)
            if mass > CONVERGENCE_TOL:
                raise CutoffConvergenceError(
                    f"{what}: mode {label!r} holds population {mass:.3e} within "
                    f"{order + 1} levels of its cutoff; a larger cutoff would "
                    f"change the result by more than {CONVERGENCE_TOL}"
                )
    return True


def _hz_values(rho_ab: QuantumState, type_: int, s: int, t: int) -> tuple[float, float]:
    la, lb = rho_ab.space.labels
    a = _power(annihilation(rho_ab.space, la), s)
    b = _power(annihilation(rho_ab.space, lb), t)
    if type_ == 1:
        lhs = abs(expectation(rho_ab, a @ b.dag())) ** 2
        rhs = expectation(rho_ab, a.dag() @ a @ b.dag() @ b).real
    else:
        lhs = abs(expectation(rho_ab, a @ b)) ** 2
        rhs = expectation(rho_ab, a.dag() @ a).real * expectation(rho_ab, b.dag() @ b).real
    return lhs, rhs


def hz_original(
    rho_ab: QuantumState,
    type_: int,
    s: int = 1,
    t: int = 1,
    *,
    tol: float = VIOLATION_TOL,
    check_convergence: bool = False,
) -> CriterionResult:
    """Original moment inequality on the signal pair (no LOs involved)."""
    if type_ not in (1, 2):
        raise ValueError("type_ must be 1 or 2")
    if s < 1 or t < 1:
        raise ValueError("s and t must be >= 1")
    for label, order in zip(rho_ab.space.labels, (s, t)):
        if 2 * order > rho_ab.space.cutoff(label) + 1:
            raise CutoffConvergenceError(
                f"cutoff of mode {label!r} too small for moment order {order}"
            )
    lhs, rhs = _hz_values(rho_ab, type_, s, t)
    converged = None
    if check_convergence:
        converged = _check_truncation([(rho_ab, max(s, t))], f"HZ{type_}")
    inputs = {"signal": state_digest(rho_ab)}
    return _result(f"HZ{type_}", s, t, lhs, rhs, inputs, tol, converged)


def measured_first_order(
    rho_ab: QuantumState,
    lo_c: QuantumState,
    lo_d: QuantumState,
    type_: int,
    *,
    path: str = "factored",
    tol: float = VIOLATION_TOL,
    check_convergence: bool = False,
) -> CriterionResult:
    """First-order criterion on measured quadratures (M1/M2).

    The right-hand side uses signal number moments only; no statistics of
    the LOs enter -- that is the whole point of the measured form.
    """
    if type_ not in (1, 2):
        raise ValueError("type_ must be 1 or 2")
    la, lb = rho_ab.space.labels

    def values(rho: QuantumState) -> tuple[float, float]:
        lhs = abs(hz_lhs_first_order(rho, lo_c, lo_d, type_, path)) ** 2
        space = rho.space
        na = annihilation(space, la)
        nb = annihilation(space, lb)
        if type_ == 1:
            rhs = expectation(rho, na.dag() @ na @ nb.dag() @ nb).real
        else:
            rhs = expectation(rho, na.dag() @ na).real * expectation(rho, nb.dag() @ nb).real
        return lhs, rhs

    lhs, rhs = values(rho_ab)
    converged = None
    if check_convergence:
        converged = _check_truncation(
            [(rho_ab, 1), (lo_c, 1), (lo_d, 1)], f"M{type_}"
        )
    inputs = {
        "signal": state_digest(rho_ab),
        "lo_c": state_digest(lo_c),
        "lo_d": state_digest(lo_d),
    }
    return _result(f"M{type_}", 1, 1, lhs, rhs, inputs, tol, converged)


def measured_second_order(
    rho_ab: QuantumState,
    lo_c: QuantumState,
    lo_d: QuantumState,
    bound: str = "eq16",
    *,
    path: str = "factored",
    tol: float = VIOLATION_TOL,
    check_convergence: bool = False,
) -> CriterionResult:
    """Second-order criterion (S1 with the number-moment bound, S2 with the
    intensity-only bound)."""
    if bound not in ("eq16", "eq18"):
        raise ValueError("bound must be 'eq16' or 'eq18'")
    la, lb = rho_ab.space.labels
    lo_factor = 1.0
    for lo in (lo_c, lo_d):
        label = lo.space.labels[0]
        n1 = moments(lo, label, (1, 1)).real
        if n1 <= 0.0:
            raise ValueError("LO intensity must be positive")
        if bound == "eq16":
            lo_factor *= moments(lo, label, (2, 2)).real / (n1 * n1)  # (<n^2>-<n>)/<n>^2
        else:
            lo_factor *= (n1 + 1.0) / n1

    def values(rho: QuantumState) -> tuple[float, float]:
        lhs = abs(second_order_lhs(rho, lo_c, lo_d, path)) ** 2
        space = rho.space
        a = annihilation(space, la)
        b = annihilation(space, lb)
        a2, b2 = a @ a, b @ b
        joint = expectation(rho, a2.dag() @ a2 @ b2.dag() @ b2).real
        return lhs, joint * lo_factor

    lhs, rhs = values(rho_ab)
    converged = None
    if check_convergence:
        converged = _check_truncation(
            [(rho_ab, 2), (lo_c, 2), (lo_d, 2)], f"S ({bound})"
        )
    inputs = {
        "signal": state_digest(rho_ab),
        "lo_c": state_digest(lo_c),
        "lo_d": state_digest(lo_d),
        "bound": bound,
    }
    name = "S1" if bound == "eq16" else "S2"
    return _result(name, 2, 2, lhs, rhs, inputs, tol, converged)


def lo_bounds(lo_state: QuantumState) -> LOBoundReport:
    """Moment bounds of a single-mode LO candidate.

    first_moment_sq never exceeds bound_a = <n>; second_moment_sq never
    exceeds either bound_16 = <n^2> - <n> or bound_18 = <n>^2 + <n>.
    Coherent states saturate bound_a and bound_16, squeezed vacua
    saturate bound_18.
    """
    if lo_state.space.n_modes != 1:
        raise ValueError("LO state must be single-mode")
    label = lo_state.space.labels[0]
    n1 = moments(lo_state, label, (1, 1)).real
    n2 = moments(lo_state, label, (2, 2)).real + n1
    first = abs(moments(lo_state, label, (1, 0))) ** 2
    second = abs(moments(lo_state, label, (0, 2))) ** 2
    return LOBoundReport(
        mean_n=n1,
        mean_n_sq=n2,
        first_moment_sq=first,
        second_moment_sq=second,
        bound_a=n1,
        bound_16=n2 - n1,
        bound_18=n1 * n1 + n1,
        mandel_q=mandel_q(lo_state, label),
    )


def select_bound(report: LOBoundReport, *, tie_tol: float = 1e-12) -> str:
    """eq16 is tighter exactly when Q < 1; ties fall back to the
    knowledge-light eq18."""
    if math.isnan(report.mandel_q):
        raise ValueError("Mandel Q undefined for zero-intensity LO")
    if abs(report.mandel_q - 1.0) <= tie_tol:
        return "eq18"
    return "eq16" if report.mandel_q < 1.0 else "eq18"


def settings_count(s: int, t: int) -> int:
    """Number of joint homodyne settings needed at order (s, t)."""
    if s < 1 or t < 1:
        raise ValueError("s and t must be >= 1")
    return (s + 1) * (t + 1)
