"""Spin-changing-collision dynamics of a spin-1 condensate.

The three Zeeman modes (m_F = -1, 0, +1) interact through pair conversion
0 + 0 <-> (+1) + (-1).  With the angular-momentum-like ladder operators

    L_+ = sqrt(2) (a_0^dag a_1 + a_-1^dag a_0)
    L_- = sqrt(2) (a_1^dag a_0 + a_0^dag a_-1)
    L_z = n_-1 - n_1

the interaction Hamiltonian takes the form H = lambda (L^2 - 2 N), which
is block-diagonal in the total atom number N.  Starting from a pure pump
(coherent state in m_F = 0, vacuum sidemodes) the dynamics stays in the
n_1 = n_-1 subspace, whose basis kets |k, N-2k, k> make L^2 a real
symmetric tridiagonal matrix per block.  Blocks are built and
diagonalized independently; time evolution is then exact phase rotation
in each block's eigenbasis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

_PUMP_TAIL_BOUND = 1e-10
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SpinBlock:
    """One total-atom-number sector of the pair-conversion dynamics."""

    n_atoms: int
    diagonal: np.ndarray = field(repr=False)
    offdiagonal: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n_atoms // 2 + 1


@dataclass(frozen=True)
class BECTrajectory:
    """Observables of the evolved state on a dimensionless-time grid."""

    lambda_t: np.ndarray
    population: np.ndarray  # <n_1> = <n_-1>
    pair_corr: np.ndarray  # <a_1 a_-1>, complex
    number_dist: np.ndarray  # P(k | t), rows are times
    criterion_margin: np.ndarray  # |<a_1 a_-1>|^2 - <n_1><n_-1>


Ket = tuple[int, int, int]  # occupations (n_-1, n_0, n_1)


def _apply_lowering(vec: dict[Ket, float]) -> dict[Ket, float]:
    # L_- = sqrt(2) (a_1^dag a_0 + a_0^dag a_-1)
    out: dict[Ket, float] = {}
    for (nm, n0, np_), amp in vec.items():
        if n0 > 0:
            key = (nm, n0 - 1, np_ + 1)
            out[key] = out.get(key, 0.0) + amp * _SQRT2 * math.sqrt(n0 * (np_ + 1))
        if nm > 0:
            key = (nm - 1, n0 + 1, np_)
            out[key] = out.get(key, 0.0) + amp * _SQRT2 * math.sqrt(nm * (n0 + 1))
    return out


def _apply_raising(vec: dict[Ket, float]) -> dict[Ket, float]:
    # L_+ = sqrt(2) (a_0^dag a_1 + a_-1^dag a_0)
    out: dict[Ket, float] = {}
    for (nm, n0, np_), amp in vec.items():
        if np_ > 0:
            key = (nm, n0 + 1, np_ - 1)
            out[key] = out.get(key, 0.0) + amp * _SQRT2 * math.sqrt(np_ * (n0 + 1))
        if n0 > 0:
            key = (nm + 1, n0 - 1, np_)
            out[key] = out.get(key, 0.0) + amp * _SQRT2 * math.sqrt(n0 * (nm + 1))
    return out


def _l_squared_column(ket: Ket) -> dict[Ket, float]:
    """L^2 |ket> for an m_l = 0 ket, via 0.5 (L+L- + L-L+) + L_z^2."""
    nm, n0, np_ = ket
    start = {ket: 1.0}
    out: dict[Ket, float] = {}
    for amp_map in (
        _apply_raising(_apply_lowering(start)),
        _apply_lowering(_apply_raising(start)),
    ):
        for key, amp in amp_map.items():
            out[key] = out.get(key, 0.0) + 0.5 * amp
    lz = nm - np_
    if lz:
        out[ket] = out.get(ket, 0.0) + float(lz * lz)
    return out


def build_block(n_atoms: int) -> SpinBlock:
    """Assemble and diagonalize L^2 on the basis |k, N-2k, k>, k = 0..N//2."""
    if n_atoms < 0:
        raise ValueError("atom number must be >= 0")
    size = n_atoms // 2 + 1
    diag = np.zeros(size)
    offdiag = np.zeros(max(size - 1, 0))
    for k in range(size):
        col = _l_squared_column((k, n_atoms - 2 * k, k))
        for (nm, n0, np_), amp in col.items():
            if nm != np_ or nm + n0 + np_ != n_atoms:
                raise AssertionError("L^2 left the m_l = 0 sector")
            if nm == k:
                diag[k] += amp
            elif nm == k + 1:
                offdiag[k] += amp
            elif nm != k - 1:
                raise AssertionError("L^2 is not tridiagonal in k")
    if size == 1:
        evals = diag.copy()
        evecs = np.ones((1, 1))
    else:
        evals, evecs = eigh_tridiagonal(diag, offdiag)
    return SpinBlock(n_atoms, diag, offdiag, evals, evecs)


def angular_momentum_spectrum(n_atoms: int) -> np.ndarray:
    """Expected L^2 eigenvalues {l(l+1)}, l stepping by 2 from N's parity."""
    ls = np.arange(n_atoms % 2, n_atoms + 1, 2, dtype=float)
    return ls * (ls + 1.0)


def _pump_log_amplitudes(mean_n: float, n_max: int) -> np.ndarray:
    """Log-magnitude Poisson amplitudes of the coherent pump per block N."""
    n = np.arange(n_max + 1, dtype=float)
    if mean_n == 0.0:
        out = np.full(n_max + 1, -np.inf)
        out[0] = 0.0
        return out
    return 0.5 * (n * math.log(mean_n) - gammaln(n + 1.0) - mean_n)


def pump_tail(mean_n: float, n_max: int) -> float:
    """Poisson probability mass beyond n_max."""
    if mean_n == 0.0:
        return 0.0
    log_probs = np.arange(n_max + 1, dtype=float) * math.log(mean_n)
    log_probs -= gammaln(np.arange(n_max + 1, dtype=float) + 1.0) + mean_n
    return max(0.0, 1.0 - float(np.exp(log_probs).sum()))


def evolve_amplitudes(
    pump_alpha: complex,
    lambda_t: np.ndarray,
    n_max: int,
    *,
    blocks: list[SpinBlock] | None = None,
) -> tuple[list[SpinBlock], list[list[np.ndarray]]]:
    """Block-resolved amplitudes of the evolved state.

    Returns the blocks and, per grid time, the complex amplitude vector of
    every block in the |k, N-2k, k> basis.  Phases are
    exp(-i lambda_t (l(l+1) - 2N)) in each block's eigenbasis.
    """
    lambda_t = np.asarray(lambda_t, dtype=float)
    if lambda_t.size == 0:
        raise ValueError("time grid must be nonempty")
    if np.any(np.diff(lambda_t) < 0.0):
        raise ValueError("time grid must be nondecreasing")
    mean_n = abs(pump_alpha) ** 2
    tail = pump_tail(mean_n, n_max)
    if tail > _PUMP_TAIL_BOUND:
        raise ValueError(
            f"pump tail beyond N={n_max} is {tail:.3e} > {_PUMP_TAIL_BOUND}; raise n_max"
        )
    if blocks is None:
        blocks = [build_block(n) for n in range(n_max + 1)]
    log_amp = _pump_log_amplitudes(mean_n, n_max)
    phase_arg = np.angle(pump_alpha) * np.arange(n_max + 1)
    weights = np.exp(log_amp)
    weights = weights / math.sqrt(float(np.sum(weights**2)))  # renormalize kept blocks
    amp_n = weights * np.exp(1j * phase_arg)

    # initial ket of block N is |k=0> = |0, N, 0>; project once per block
    seeds = [blk.eigenvectors[0, :].conj() * amp_n[blk.n_atoms] for blk in blocks]
    amps_per_time: list[list[np.ndarray]] = []
    for t in lambda_t:
        this_t: list[np.ndarray] = []
        for blk, seed in zip(blocks, seeds):
            phases = np.exp(-1j * t * (blk.eigenvalues - 2.0 * blk.n_atoms))
            this_t.append(blk.eigenvectors @ (phases * seed))
        amps_per_time.append(this_t)
    return blocks, amps_per_time


def evolve(pump_alpha: complex, lambda_t: np.ndarray, n_max: int) -> BECTrajectory:
    """Evolve the pumped condensate and collect the trajectory observables."""
    lambda_t = np.asarray(lambda_t, dtype=float)
    blocks, amps = evolve_amplitudes(pump_alpha, lambda_t, n_max)
    k_max = n_max // 2
    n_times = lambda_t.size
    population = np.zeros(n_times)
    pair_corr = np.zeros(n_times, dtype=complex)
    number_dist = np.zeros((n_times, k_max + 1))
    for it in range(n_times):
        for blk, vec in zip(blocks, amps[it]):
            probs = np.abs(vec) ** 2
            ks = np.arange(blk.size)
            population[it] += float(np.sum(ks * probs))
            number_dist[it, : blk.size] += probs
            # <a_1 a_-1> couples block N to block N-2:
            # a_1 a_-1 |k, N-2k, k> = k |k-1, N-2k, k-1>
            if blk.n_atoms >= 2:
                lower = amps[it][blk.n_atoms - 2]
                k = np.arange(1, blk.size)
                usable = k[k - 1 < lower.size]
                pair_corr[it] += complex(
                    np.sum(lower[usable - 1].conj() * usable * vec[usable])
                )
    margin = np.abs(pair_corr) ** 2 - population**2
    return BECTrajectory(lambda_t, population, pair_corr, number_dist, margin)


def lo_budget_check(mean_n_c: float, delta_n_ex: float) -> float:
    """Added quadrature noise scale dN_ex / <n_c> for budget planning."""
    if mean_n_c <= 0.0:
        raise ValueError("LO intensity must be positive")
    return delta_n_ex / mean_n_c
