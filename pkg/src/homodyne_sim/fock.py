"""Truncated Fock-space states, operators and expectation values.

Conventions used throughout the package:

* a mode with cutoff K keeps levels 0..K (dimension K+1); the creation
  operator maps the top level to nothing, truncation is explicit and
  never wraps around,
* multimode indices are row-major with the *last* declared mode varying
  fastest, so serialized states are portable,
* quadratures are X = (a^dag + a)/2 and P = i(a^dag - a)/2, which makes
  the vacuum variance 1/4.  Many texts insert factors of sqrt(2); none
  appear here.

Everything is immutable after construction and safe to share between
threads; parallelism happens above this module.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_DIM = 1 << 24
MAX_DIM_ENV = "HOMODYNE_SIM_MAX_DIM"

TAU_NORM = 1e-10
TAU_PSD = 1e-10


class SpaceMismatchError(ValueError):
    """Operands live on different Hilbert spaces."""


class DimensionLimitError(ValueError):
    """Requested space exceeds the configured amplitude budget."""


class CutoffConvergenceError(RuntimeError):
    """A result moved when cutoffs were enlarged; the cutoff is too small."""


def max_dimension() -> int:
    """Hard cap on total dimension; override with HOMODYNE_SIM_MAX_DIM."""
    raw = os.environ.get(MAX_DIM_ENV)
    return int(raw) if raw else DEFAULT_MAX_DIM


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered modes, each a (label, cutoff) pair."""

    modes: tuple[tuple[str, int], ...]

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.modes)

    @cached_property
    def dims(self) -> tuple[int, ...]:
        return tuple(cutoff + 1 for _, cutoff in self.modes)

    @cached_property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode {label!r}; space has {self.labels}") from None

    def cutoff(self, label: str) -> int:
        return self.modes[self.axis(label)][1]


def make_space(modes: Iterable[tuple[str, int]]) -> HilbertSpace:
    """Build a Hilbert space from (label, cutoff) pairs.

    The last declared mode varies fastest in the flat index.
    """
    modes = tuple((str(label), int(cutoff)) for label, cutoff in modes)
    if not modes:
        raise ValueError("a space needs at least one mode")
    labels = [label for label, _ in modes]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate mode labels in {labels}")
    for label, cutoff in modes:
        if cutoff < 1:
            raise ValueError(f"mode {label!r}: cutoff must be >= 1, got {cutoff}")
    dim = math.prod(cutoff + 1 for _, cutoff in modes)
    limit = max_dimension()
    if dim > limit:
        raise DimensionLimitError(
            f"total dimension {dim} exceeds limit {limit} "
            f"(set {MAX_DIM_ENV} to raise it)"
        )
    return HilbertSpace(modes)


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class LinearOperator:
    """Sparse complex matrix bound to a HilbertSpace."""

    space: HilbertSpace
    matrix: sp.csr_matrix

    def dag(self) -> "LinearOperator":
        return LinearOperator(self.space, self.matrix.conjugate().transpose().tocsr())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_hermitian(self, tol: float = TAU_NORM) -> bool:
        delta = (self.matrix - self.matrix.getH()).tocoo()
        return delta.nnz == 0 or float(np.abs(delta.data).max()) <= tol

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        _check_same_space(self.space, other.space)
        return LinearOperator(self.space, (self.matrix @ other.matrix).tocsr())

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        _check_same_space(self.space, other.space)
        return LinearOperator(self.space, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        _check_same_space(self.space, other.space)
        return LinearOperator(self.space, (self.matrix - other.matrix).tocsr())

    def __mul__(self, scalar: complex) -> "LinearOperator":
        return LinearOperator(self.space, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def __neg__(self) -> "LinearOperator":
        return self * (-1.0)


def _check_same_space(a: HilbertSpace, b: HilbertSpace) -> None:
    if a.modes != b.modes:
        raise SpaceMismatchError(f"space mismatch: {a.modes} vs {b.modes}")


def _single_mode_annihilation(dim: int) -> sp.csr_matrix:
    # <n-1| a |n> = sqrt(n)
    return sp.diags(
        np.sqrt(np.arange(1, dim, dtype=float)), 1, shape=(dim, dim), dtype=complex
    ).tocsr()


def lift(space: HilbertSpace, label: str, small: np.ndarray | sp.spmatrix) -> LinearOperator:
    """Embed a single-mode matrix into the full space (identity elsewhere)."""
    axis = space.axis(label)
    d = space.dims[axis]
    small = sp.csr_matrix(small, dtype=complex)
    if small.shape != (d, d):
        raise ValueError(f"matrix shape {small.shape} does not match mode dimension {d}")
    factors: list[sp.spmatrix] = [
        small if k == axis else sp.identity(space.dims[k], dtype=complex, format="csr")
        for k in range(space.n_modes)
    ]
    full = reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)
    return LinearOperator(space, full.tocsr())


def identity(space: HilbertSpace) -> LinearOperator:
    return LinearOperator(space, sp.identity(space.dim, dtype=complex, format="csr"))


def annihilation(space: HilbertSpace, label: str) -> LinearOperator:
    """Mode annihilation operator; at the cutoff the ladder simply ends."""
    d = space.dims[space.axis(label)]
    return lift(space, label, _single_mode_annihilation(d))


def creation(space: HilbertSpace, label: str) -> LinearOperator:
    return annihilation(space, label).dag()


def number(space: HilbertSpace, label: str) -> LinearOperator:
    a = annihilation(space, label)
    return a.dag() @ a


def quadrature(space: HilbertSpace, label: str, phi: float) -> LinearOperator:
    """Rotated quadrature (a^dag e^{i phi} + a e^{-i phi})/2.

    phi = 0 gives X = (a^dag + a)/2, phi = pi/2 gives P = i(a^dag - a)/2.
    """
    a = annihilation(space, label)
    return lincomb([0.5 * np.exp(1j * phi), 0.5 * np.exp(-1j * phi)], [a.dag(), a])


def compose(a: LinearOperator, b: LinearOperator) -> LinearOperator:
    return a @ b


def adjoint(a: LinearOperator) -> LinearOperator:
    return a.dag()


def lincomb(coeffs: Sequence[complex], ops: Sequence[LinearOperator]) -> LinearOperator:
    if len(coeffs) != len(ops) or not ops:
        raise ValueError("need one coefficient per operator")
    space = ops[0].space
    for op in ops[1:]:
        _check_same_space(space, op.space)
    acc = complex(coeffs[0]) * ops[0].matrix
    for c, op in zip(coeffs[1:], ops[1:]):
        acc = acc + complex(c) * op.matrix
    return LinearOperator(space, acc.tocsr())


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class QuantumState:
    """Pure amplitude vector or density matrix over a HilbertSpace."""

    space: HilbertSpace
    data: np.ndarray
    kind: str  # "pure" | "mixed"

    @property
    def dim(self) -> int:
        return self.space.dim

    def density(self) -> np.ndarray:
        """Density matrix view (outer product for pure states)."""
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return self.data


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


def pure_state(
    space: HilbertSpace, amplitudes: np.ndarray, *, normalize: bool = False
) -> QuantumState:
    vec = np.asarray(amplitudes, dtype=complex).ravel()
    if vec.shape != (space.dim,):
        raise ValueError(f"amplitude vector length {vec.size} != dimension {space.dim}")
    norm_sq = float(np.vdot(vec, vec).real)
    if normalize:
        if norm_sq == 0.0:
            raise ValueError("cannot normalize the zero vector")
        vec = vec / math.sqrt(norm_sq)
    elif abs(norm_sq - 1.0) > TAU_NORM:
        raise ValueError(f"pure state norm^2 = {norm_sq!r} deviates from 1 beyond {TAU_NORM}")
    return QuantumState(space, _freeze(vec), "pure")


def mixed_state(
    space: HilbertSpace, rho: np.ndarray, *, validate: bool = True
) -> QuantumState:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (space.dim, space.dim):
        raise ValueError(f"density matrix shape {rho.shape} != {(space.dim, space.dim)}")
    if validate:
        herm_defect = float(np.abs(rho - rho.conj().T).max())
        if herm_defect > TAU_NORM:
            raise ValueError(f"density matrix not Hermitian (defect {herm_defect:.3e})")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > TAU_NORM:
            raise ValueError(f"density matrix trace {tr!r} deviates from 1")
        eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if float(eigs.min()) < -TAU_PSD:
            raise ValueError(f"density matrix has eigenvalue {eigs.min():.3e} < -{TAU_PSD}")
    return QuantumState(space, _freeze(rho), "mixed")


def to_density(state: QuantumState) -> QuantumState:
    if state.kind == "mixed":
        return state
    return QuantumState(state.space, _freeze(state.density()), "mixed")


def tensor_product(states: Sequence[QuantumState]) -> QuantumState:
    """Composite state on the concatenated space.

    Pure factors stay pure; one mixed factor promotes everything to a
    density matrix.
    """
    if not states:
        raise ValueError("tensor_product needs at least one state")
    all_modes: list[tuple[str, int]] = []
    for st in states:
        all_modes.extend(st.space.modes)
    space = make_space(all_modes)  # raises on label collision / dim limit
    if all(st.kind == "pure" for st in states):
        vec = reduce(np.kron, [st.data for st in states])
        return QuantumState(space, _freeze(vec), "pure")
    rho = reduce(np.kron, [st.density() for st in states])
    return QuantumState(space, _freeze(rho), "mixed")


def pad_state(state: QuantumState, extra: int) -> QuantumState:
    """Re-embed a state into a space with every cutoff enlarged by `extra`."""
    if extra < 0:
        raise ValueError("extra must be >= 0")
    if extra == 0:
        return state
    new_space = make_space([(label, cut + extra) for label, cut in state.space.modes])
    old_dims = state.space.dims
    if state.kind == "pure":
        arr = state.data.reshape(old_dims)
        arr = np.pad(arr, [(0, extra)] * len(old_dims))
        return QuantumState(new_space, _freeze(arr.ravel()), "pure")
    arr = state.data.reshape(old_dims + old_dims)
    arr = np.pad(arr, [(0, extra)] * (2 * len(old_dims)))
    return QuantumState(new_space, _freeze(arr.reshape(new_space.dim, new_space.dim)), "mixed")


# ---------------------------------------------------------------------------
# expectation values


def expectation(state: QuantumState, op: LinearOperator) -> complex:
    """<psi|A|psi> for pure states, tr(rho A) for mixed ones."""
    _check_same_space(state.space, op.space)
    if state.kind == "pure":
        return complex(np.vdot(state.data, op.matrix @ state.data))
    coo = op.matrix.tocoo()
    return complex(np.sum(coo.data * state.data[coo.col, coo.row]))


def variance(state: QuantumState, op: LinearOperator, *, tol: float = TAU_NORM) -> float:
    """<A^2> - <A>^2 for Hermitian A."""
    _check_same_space(state.space, op.space)
    if not op.is_hermitian(tol):
        raise ValueError("variance requires a Hermitian operator")
    if state.kind == "pure":
        w = op.matrix @ state.data
        mean = float(np.vdot(state.data, w).real)
        second = float(np.vdot(w, w).real)
    else:
        b = op.matrix @ state.data  # dense
        mean = float(np.trace(b).real)
        coo = op.matrix.tocoo()
        second = float(np.sum(coo.data * b[coo.col, coo.row]).real)
    return second - mean * mean


# ---------------------------------------------------------------------------
# serialization (space descriptor + flat (index, re, im) entries)


def state_to_dict(state: QuantumState) -> dict:
    flat = state.data.ravel()
    nz = np.nonzero(flat)[0]
    return {
        "modes": [[label, cutoff] for label, cutoff in state.space.modes],
        "kind": state.kind,
        "entries": [[int(i), float(flat[i].real), float(flat[i].imag)] for i in nz],
    }


def state_from_dict(payload: dict) -> QuantumState:
    space = make_space([(m[0], int(m[1])) for m in payload["modes"]])
    kind = payload["kind"]
    if kind not in ("pure", "mixed"):
        raise ValueError(f"unknown state kind {kind!r}")
    size = space.dim if kind == "pure" else space.dim * space.dim
    flat = np.zeros(size, dtype=complex)
    for i, re, im in payload["entries"]:
        flat[int(i)] = complex(re, im)
    if kind == "pure":
        return pure_state(space, flat)
    return mixed_state(space, flat.reshape(space.dim, space.dim))


def operator_to_dict(op: LinearOperator) -> dict:
    coo = op.matrix.tocoo()
    dim = op.space.dim
    return {
        "modes": [[label, cutoff] for label, cutoff in op.space.modes],
        "kind": "operator",
        "entries": [
            [int(r) * dim + int(c), float(v.real), float(v.imag)]
            for r, c, v in zip(coo.row, coo.col, coo.data)
        ],
    }


def operator_from_dict(payload: dict) -> LinearOperator:
    if payload.get("kind") != "operator":
        raise ValueError("payload does not describe an operator")
    space = make_space([(m[0], int(m[1])) for m in payload["modes"]])
    dim = space.dim
    entries = payload["entries"]
    rows = [int(i) // dim for i, _, _ in entries]
    cols = [int(i) % dim for i, _, _ in entries]
    vals = [complex(re, im) for _, re, im in entries]
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    return LinearOperator(space, mat.tocsr())


def state_to_json(state: QuantumState) -> str:
    return json.dumps(state_to_dict(state))


def state_from_json(text: str) -> QuantumState:
    return state_from_dict(json.loads(text))
