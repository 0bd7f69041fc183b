"""Constructors for the signal and local-oscillator states.

Every constructor picks a cutoff automatically so that the neglected
population stays below the package-wide defect budget, then renormalizes.
An explicit cutoff override is honored only if it still meets the defect
bound; otherwise construction fails rather than silently truncating.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .fock import (
    QuantumState,
    expectation,
    lift,
    make_space,
    mixed_state,
    pure_state,
)

# Population allowed beyond the chosen cutoff.  The looser value is the
# construction contract; the tight values keep second number moments
# (hence Mandel Q and the saturation identities) accurate to ~1e-9 even
# though those moments weight the tail by n^2.
DEFECT_BOUND = 1e-10
_THERMAL_TAIL = 1e-14
_SQUEEZED_TAIL = 1e-13
_MIXED_TRIM_TAIL = 1e-12

_TWO_MODE_KINDS = frozenset({"tmsv", "binomial", "single_excitation"})
_KINDS = frozenset(
    {
        "fock",
        "coherent",
        "squeezed_vacuum",
        "displaced_squeezed",
        "thermal",
        "displaced_thermal",
        "displaced_fock",
        "tmsv",
        "binomial",
        "single_excitation",
        "custom",
    }
)


@dataclass(frozen=True)
class StateSpec:
    """Serializable recipe for a state; `build` turns it into amplitudes."""

    kind: str
    params: dict
    cutoff: int | None = None

    # -- constructors -------------------------------------------------

    @classmethod
    def fock(cls, n: int, cutoff: int | None = None) -> "StateSpec":
        return cls("fock", {"n": int(n)}, cutoff)

    @classmethod
    def coherent(cls, alpha: complex, cutoff: int | None = None) -> "StateSpec":
        return cls("coherent", {"alpha": complex(alpha)}, cutoff)

    @classmethod
    def squeezed_vacuum(cls, r: float, theta: float = 0.0, cutoff: int | None = None) -> "StateSpec":
        return cls("squeezed_vacuum", {"r": float(r), "theta": float(theta)}, cutoff)

    @classmethod
    def displaced_squeezed(
        cls, alpha: complex, r: float, theta: float = 0.0, cutoff: int | None = None
    ) -> "StateSpec":
        return cls(
            "displaced_squeezed",
            {"alpha": complex(alpha), "r": float(r), "theta": float(theta)},
            cutoff,
        )

    @classmethod
    def thermal(cls, n_th: float, cutoff: int | None = None) -> "StateSpec":
        return cls("thermal", {"n_th": float(n_th)}, cutoff)

    @classmethod
    def displaced_thermal(cls, alpha: complex, n_th: float, cutoff: int | None = None) -> "StateSpec":
        return cls("displaced_thermal", {"alpha": complex(alpha), "n_th": float(n_th)}, cutoff)

    @classmethod
    def displaced_fock(cls, alpha: complex, n: int, cutoff: int | None = None) -> "StateSpec":
        return cls("displaced_fock", {"alpha": complex(alpha), "n": int(n)}, cutoff)

    @classmethod
    def tmsv(cls, x: float, cutoff: int | None = None) -> "StateSpec":
        return cls("tmsv", {"x": float(x)}, cutoff)

    @classmethod
    def binomial(cls, n: int, cutoff: int | None = None) -> "StateSpec":
        return cls("binomial", {"n": int(n)}, cutoff)

    @classmethod
    def single_excitation(cls) -> "StateSpec":
        return cls("single_excitation", {})

    @classmethod
    def custom(cls, amplitudes: Sequence[complex]) -> "StateSpec":
        return cls("custom", {"amplitudes": [complex(a) for a in amplitudes]})

    # -- helpers -------------------------------------------------------

    @property
    def n_modes(self) -> int:
        return 2 if self.kind in _TWO_MODE_KINDS else 1

    def with_cutoff(self, cutoff: int | None) -> "StateSpec":
        return replace(self, cutoff=cutoff)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for key, val in self.params.items():
            if isinstance(val, complex):
                out[key] = [val.real, val.imag]
            elif isinstance(val, list):
                out[key] = [[a.real, a.imag] if isinstance(a, complex) else a for a in val]
            else:
                out[key] = val
        if self.cutoff is not None:
            out["cutoff"] = int(self.cutoff)
        return out

    @classmethod
    def from_dict(cls, payload: Mapping) -> "StateSpec":
        payload = dict(payload)
        kind = payload.pop("kind", None)
        if kind not in _KINDS:
            raise ValueError(f"unknown state kind {kind!r}")
        cutoff = payload.pop("cutoff", None)
        params: dict = {}
        for key, val in payload.items():
            if isinstance(val, (list, tuple)) and len(val) == 2 and all(
                isinstance(v, (int, float)) for v in val
            ) and key != "amplitudes":
                params[key] = complex(val[0], val[1])
            elif key == "amplitudes":
                params[key] = [
                    complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a)
                    for a in val
                ]
            else:
                params[key] = val
        return cls(kind, params, None if cutoff is None else int(cutoff))

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# cutoff rules


def coherent_cutoff(alpha: complex) -> int:
    a = abs(alpha)
    return max(1, math.ceil(a * a + 8.0 * a + 10.0))


def thermal_cutoff(n_th: float) -> int:
    if n_th <= 0.0:
        return 1
    # geometric tail (N/(N+1))^(m+1) below the tight budget
    ratio = n_th / (n_th + 1.0)
    m = math.ceil(math.log(_THERMAL_TAIL) / math.log(ratio)) - 1
    return max(1, m)


def squeezed_cutoff(r: float) -> int:
    if r <= 0.0:
        return 2
    amps = _squeezed_amplitudes(r, 0.0, None)
    return len(amps) - 1


def tmsv_cutoff(x: float) -> int:
    if x <= 0.0:
        return 1
    m = math.ceil(12.0 * math.log(10.0) / (2.0 * -math.log(x)))
    return max(1, m)


def auto_cutoff(spec: StateSpec) -> int:
    """Cutoff the builder would pick (estimate for mixed kinds, which trim)."""
    if spec.cutoff is not None:
        return spec.cutoff
    kind, p = spec.kind, spec.params
    if kind == "fock":
        return max(p["n"], 1)
    if kind == "coherent":
        return coherent_cutoff(p["alpha"])
    if kind == "squeezed_vacuum":
        return squeezed_cutoff(p["r"])
    if kind == "displaced_squeezed":
        return coherent_cutoff(p["alpha"]) + squeezed_cutoff(p["r"])
    if kind == "thermal":
        return thermal_cutoff(p["n_th"])
    if kind == "displaced_thermal":
        return thermal_cutoff(p["n_th"]) + coherent_cutoff(p["alpha"])
    if kind == "displaced_fock":
        return coherent_cutoff(p["alpha"]) + p["n"]
    if kind == "tmsv":
        return tmsv_cutoff(p["x"])
    if kind == "binomial":
        return p["n"]
    if kind == "single_excitation":
        return 1
    if kind == "custom":
        return len(p["amplitudes"]) - 1
    raise ValueError(f"unknown state kind {kind!r}")


# ---------------------------------------------------------------------------
# amplitude builders


def _coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    mag = abs(alpha)
    if mag == 0.0:
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    # log-domain to stay finite for large |alpha|
    log_abs = n * math.log(mag) - 0.5 * gammaln(n + 1.0) - 0.5 * mag * mag
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(log_abs) * phase


def _squeezed_amplitudes(r: float, theta: float, cutoff: int | None) -> np.ndarray:
    """Even-photon amplitudes of S(r, theta)|0>, <c^2> = -e^{i theta} sinh r cosh r."""
    if r == 0.0:
        size = 2 if cutoff is None else cutoff + 1
        amps = np.zeros(size, dtype=complex)
        amps[0] = 1.0
        return amps
    tanh_r = math.tanh(r)
    factor = -np.exp(1j * theta) * tanh_r
    max_m = 100000
    amps_list: list[complex] = []
    total = 0.0
    m = 0
    while True:
        log_abs = (
            0.5 * gammaln(2 * m + 1.0)
            - m * math.log(2.0)
            - gammaln(m + 1.0)
            + m * math.log(tanh_r)
            - 0.5 * math.log(math.cosh(r))
        )
        c = np.exp(log_abs) * (factor / tanh_r) ** m if m else np.exp(log_abs)
        amps_list.append(complex(c))
        total += abs(c) ** 2
        if cutoff is not None and 2 * m >= cutoff:
            break
        if cutoff is None and 1.0 - total < _SQUEEZED_TAIL and m > 0:
            break
        m += 1
        if m > max_m:
            raise RuntimeError("squeezed amplitude recursion failed to converge")
    out = np.zeros(2 * len(amps_list) - 1, dtype=complex)
    out[::2] = amps_list
    if cutoff is not None:
        full = np.zeros(cutoff + 1, dtype=complex)
        keep = min(len(out), cutoff + 1)
        full[:keep] = out[:keep]
        return full
    return out


@functools.lru_cache(maxsize=16)
def _displacement_matrix_cached(alpha: complex, cutoff: int) -> np.ndarray:
    d = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    out = scipy.linalg.expm(gen)
    out.flags.writeable = False
    return out


def displacement_matrix(alpha: complex, cutoff: int) -> np.ndarray:
    """Dense truncated D(alpha) = expm(alpha a^dag - conj(alpha) a)."""
    return _displacement_matrix_cached(complex(alpha), int(cutoff))


def _round_up_block(n: int, block: int = 32) -> int:
    return ((n + block - 1) // block) * block


def _thermal_populations(n_th: float, cutoff: int) -> np.ndarray:
    if n_th <= 0.0:
        p = np.zeros(cutoff + 1)
        p[0] = 1.0
        return p
    n = np.arange(cutoff + 1, dtype=float)
    return np.exp(n * math.log(n_th) - (n + 1.0) * math.log(n_th + 1.0))


def _truncate_pure(amps: np.ndarray, cutoff: int, *, what: str) -> np.ndarray:
    """Cut a pure amplitude vector at `cutoff`, checking the defect bound."""
    if cutoff + 1 >= amps.size:
        out = np.zeros(cutoff + 1, dtype=complex)
        out[: amps.size] = amps
        return out / math.sqrt(float(np.vdot(out, out).real))
    defect = float(np.sum(np.abs(amps[cutoff + 1 :]) ** 2))
    if defect > DEFECT_BOUND:
        raise ValueError(
            f"{what}: explicit cutoff {cutoff} leaves population {defect:.3e} "
            f"above the {DEFECT_BOUND} defect bound"
        )
    out = amps[: cutoff + 1].copy()
    return out / math.sqrt(float(np.vdot(out, out).real))


def _trim_mixed(rho: np.ndarray, explicit_cutoff: int | None, *, what: str) -> np.ndarray:
    """Trim a density matrix to the smallest cutoff meeting the tail budget."""
    pops = np.real(np.diag(rho))
    if explicit_cutoff is not None:
        k = explicit_cutoff
        defect = float(pops[k + 1 :].sum()) if k + 1 < pops.size else 0.0
        if defect > DEFECT_BOUND:
            raise ValueError(
                f"{what}: explicit cutoff {k} leaves population {defect:.3e} "
                f"above the {DEFECT_BOUND} defect bound"
            )
    else:
        tail = np.cumsum(pops[::-1])[::-1]
        ok = np.nonzero(tail <= _MIXED_TRIM_TAIL)[0]
        k = int(ok[0]) - 1 if ok.size else pops.size - 1
        k = max(1, min(k, pops.size - 1))
    out = rho[: k + 1, : k + 1].copy()
    return out / np.trace(out).real


# ---------------------------------------------------------------------------
# build


def build(spec: StateSpec, mode_labels: str | Sequence[str]) -> QuantumState:
    """Construct the normalized state described by `spec` on the given modes."""
    labels = [mode_labels] if isinstance(mode_labels, str) else list(mode_labels)
    if len(labels) != spec.n_modes:
        raise ValueError(
            f"{spec.kind} needs {spec.n_modes} mode label(s), got {len(labels)}"
        )
    builder = _BUILDERS.get(spec.kind)
    if builder is None:
        raise ValueError(f"unknown state kind {spec.kind!r}")
    return builder(spec, labels)


def _build_fock(spec: StateSpec, labels: list[str]) -> QuantumState:
    n = spec.params["n"]
    if n < 0:
        raise ValueError("fock: n must be >= 0")
    cutoff = spec.cutoff if spec.cutoff is not None else max(n, 1)
    if cutoff < n:
        raise ValueError(f"fock: cutoff {cutoff} < n {n}")
    space = make_space([(labels[0], cutoff)])
    vec = np.zeros(space.dim, dtype=complex)
    vec[n] = 1.0
    return pure_state(space, vec)


def _build_coherent(spec: StateSpec, labels: list[str]) -> QuantumState:
    alpha = spec.params["alpha"]
    auto = coherent_cutoff(alpha)
    work = max(auto, spec.cutoff or 0)
    amps = _coherent_amplitudes(alpha, work)
    cutoff = spec.cutoff if spec.cutoff is not None else auto
    amps = _truncate_pure(amps, cutoff, what="coherent")
    space = make_space([(labels[0], cutoff)])
    return pure_state(space, amps)


def _build_squeezed(spec: StateSpec, labels: list[str]) -> QuantumState:
    r, theta = spec.params["r"], spec.params["theta"]
    if r < 0:
        raise ValueError("squeezed_vacuum: r must be >= 0")
    amps = _squeezed_amplitudes(r, theta, None)
    cutoff = spec.cutoff if spec.cutoff is not None else max(2, len(amps) - 1)
    amps = _truncate_pure(amps, cutoff, what="squeezed_vacuum")
    space = make_space([(labels[0], cutoff)])
    return pure_state(space, amps)


def _build_displaced_squeezed(spec: StateSpec, labels: list[str]) -> QuantumState:
    alpha, r, theta = spec.params["alpha"], spec.params["r"], spec.params["theta"]
    if r < 0:
        raise ValueError("displaced_squeezed: r must be >= 0")
    sq = _squeezed_amplitudes(r, theta, None)
    work = coherent_cutoff(alpha) + len(sq) - 1
    padded = np.zeros(work + 1, dtype=complex)
    padded[: len(sq)] = sq
    vec = displacement_matrix(alpha, work) @ padded
    cutoff = spec.cutoff if spec.cutoff is not None else work
    vec = _truncate_pure(vec, cutoff, what="displaced_squeezed")
    space = make_space([(labels[0], cutoff)])
    return pure_state(space, vec)


def _build_thermal(spec: StateSpec, labels: list[str]) -> QuantumState:
    n_th = spec.params["n_th"]
    if n_th < 0:
        raise ValueError("thermal: n_th must be >= 0")
    auto = thermal_cutoff(n_th)
    cutoff = spec.cutoff if spec.cutoff is not None else auto
    work = max(auto, cutoff)
    pops = _thermal_populations(n_th, work)
    if cutoff + 1 < pops.size:
        defect = float(pops[cutoff + 1 :].sum())
        if defect > DEFECT_BOUND:
            raise ValueError(
                f"thermal: explicit cutoff {cutoff} leaves population {defect:.3e} "
                f"above the {DEFECT_BOUND} defect bound"
            )
    pops = pops[: cutoff + 1]
    rho = np.diag(pops / pops.sum()).astype(complex)
    space = make_space([(labels[0], cutoff)])
    return mixed_state(space, rho, validate=False)


def _displaced_thermal_work_cutoff(n_th: float) -> int:
    # the construction tail (1e-12) is looser than the thermal-moment rule;
    # rounding keeps the displacement-matrix cache effective across sweeps
    if n_th <= 0.0:
        return 0
    ratio = n_th / (n_th + 1.0)
    return math.ceil(math.log(_MIXED_TRIM_TAIL) / math.log(ratio))


def _build_displaced_thermal(spec: StateSpec, labels: list[str]) -> QuantumState:
    alpha, n_th = spec.params["alpha"], spec.params["n_th"]
    if n_th < 0:
        raise ValueError("displaced_thermal: n_th must be >= 0")
    work = _round_up_block(
        _displaced_thermal_work_cutoff(n_th) + coherent_cutoff(alpha)
    )
    disp = displacement_matrix(alpha, work)
    pops = _thermal_populations(n_th, work)
    # rho = D diag(p) D^dag, assembled only on the block that survives the trim
    diag_full = (np.abs(disp) ** 2) @ pops
    if spec.cutoff is not None:
        k = spec.cutoff
        defect = float(diag_full[k + 1 :].sum())
        if defect > DEFECT_BOUND:
            raise ValueError(
                f"displaced_thermal: explicit cutoff {k} leaves population "
                f"{defect:.3e} above the {DEFECT_BOUND} defect bound"
            )
    else:
        tail = np.cumsum(diag_full[::-1])[::-1]
        ok = np.nonzero(tail <= _MIXED_TRIM_TAIL)[0]
        k = int(ok[0]) - 1 if ok.size else diag_full.size - 1
        k = max(1, min(k, diag_full.size - 1))
    block = disp[: k + 1, :] * np.sqrt(pops)[None, :]
    rho = block @ block.conj().T
    rho = rho / np.trace(rho).real
    space = make_space([(labels[0], k)])
    return mixed_state(space, rho, validate=False)


def _build_displaced_fock(spec: StateSpec, labels: list[str]) -> QuantumState:
    alpha, n = spec.params["alpha"], spec.params["n"]
    if n < 0:
        raise ValueError("displaced_fock: n must be >= 0")
    work = coherent_cutoff(alpha) + n
    vec = np.zeros(work + 1, dtype=complex)
    vec[n] = 1.0
    vec = displacement_matrix(alpha, work) @ vec
    cutoff = spec.cutoff if spec.cutoff is not None else work
    vec = _truncate_pure(vec, cutoff, what="displaced_fock")
    space = make_space([(labels[0], cutoff)])
    return pure_state(space, vec)


def _build_tmsv(spec: StateSpec, labels: list[str]) -> QuantumState:
    x = spec.params["x"]
    if not 0.0 <= x < 1.0:
        raise ValueError("tmsv: need 0 <= x < 1")
    cutoff = spec.cutoff if spec.cutoff is not None else tmsv_cutoff(x)
    if spec.cutoff is not None and x > 0 and x ** (2 * cutoff) > DEFECT_BOUND:
        raise ValueError(
            f"tmsv: explicit cutoff {cutoff} leaves tail {x ** (2 * cutoff):.3e} "
            f"above the {DEFECT_BOUND} defect bound"
        )
    space = make_space([(labels[0], cutoff), (labels[1], cutoff)])
    vec = np.zeros(space.dim, dtype=complex)
    d = cutoff + 1
    for n in range(d):
        vec[n * d + n] = x**n
    return pure_state(space, vec, normalize=True)


def _build_binomial(spec: StateSpec, labels: list[str]) -> QuantumState:
    n = spec.params["n"]
    if n < 1:
        raise ValueError("binomial: n must be >= 1")
    cutoff = spec.cutoff if spec.cutoff is not None else n
    if cutoff < n:
        raise ValueError(f"binomial: cutoff {cutoff} < n {n}")
    space = make_space([(labels[0], cutoff), (labels[1], cutoff)])
    vec = np.zeros(space.dim, dtype=complex)
    d = cutoff + 1
    for j in range(n + 1):
        vec[j * d + (n - j)] = math.sqrt(math.comb(n, j) / 2.0**n)
    return pure_state(space, vec)


def _build_single_excitation(spec: StateSpec, labels: list[str]) -> QuantumState:
    space = make_space([(labels[0], 1), (labels[1], 1)])
    vec = np.zeros(4, dtype=complex)
    vec[1] = vec[2] = 1.0 / math.sqrt(2.0)  # |01> and |10>
    return pure_state(space, vec)


def _build_custom(spec: StateSpec, labels: list[str]) -> QuantumState:
    amps = np.asarray(spec.params["amplitudes"], dtype=complex)
    if amps.size < 2:
        raise ValueError("custom: need at least two amplitudes")
    space = make_space([(labels[0], amps.size - 1)])
    return pure_state(space, amps, normalize=True)


_BUILDERS = {
    "fock": _build_fock,
    "coherent": _build_coherent,
    "squeezed_vacuum": _build_squeezed,
    "displaced_squeezed": _build_displaced_squeezed,
    "thermal": _build_thermal,
    "displaced_thermal": _build_displaced_thermal,
    "displaced_fock": _build_displaced_fock,
    "tmsv": _build_tmsv,
    "binomial": _build_binomial,
    "single_excitation": _build_single_excitation,
    "custom": _build_custom,
}


# ---------------------------------------------------------------------------
# moments


def moments(state: QuantumState, mode: str, powers: tuple[int, int]) -> complex:
    """Normally ordered moment <(a^dag)^j a^k> of one mode."""
    j, k = powers
    if j < 0 or k < 0:
        raise ValueError("moment powers must be >= 0")
    cutoff = state.space.cutoff(mode)
    if max(j, k) > cutoff:
        raise ValueError(
            f"moment order ({j},{k}) exceeds cutoff {cutoff} of mode {mode!r}"
        )
    d = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    op = np.linalg.matrix_power(a.conj().T, j) @ np.linalg.matrix_power(a, k)
    return expectation(state, lift(state.space, mode, op))


def mean_photon_number(state: QuantumState, mode: str) -> float:
    return moments(state, mode, (1, 1)).real


def mandel_q(state: QuantumState, mode: str) -> float:
    """Q = <dn^2>/<n> - 1; nan for zero-intensity states."""
    n1 = moments(state, mode, (1, 1)).real
    if n1 == 0.0:
        return float("nan")
    n2 = moments(state, mode, (2, 2)).real + n1  # <n^2> from normal ordering
    return (n2 - n1 * n1) / n1 - 1.0


def state_digest(state: QuantumState) -> str:
    """Short content hash used to tag criterion results."""
    h = hashlib.sha256()
    h.update(repr(state.space.modes).encode())
    h.update(state.kind.encode())
    h.update(np.ascontiguousarray(state.data).tobytes())
    return h.hexdigest()[:12]
