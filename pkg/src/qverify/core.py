"""Dense complex linear algebra, pure-state simulation, and Pauli sampling.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a computational basis label, so the
  amplitude of ``|b0 b1 ... b_{n-1}>`` sits at index ``b0*2^(n-1) + ... + b_{n-1}``
  and ``np.kron(A, B)`` acts with A on qubit 0.
* Measurement outcomes are the Pauli eigenvalues +1/-1 (bit 0 -> +1).
* Pauli-basis readout rotates each qubit's axis onto Z before sampling the
  computational distribution: H for X, then-S-dagger-then-H for Y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateTarget,
    EmptyKeepSet,
    IndexOutOfRange,
    NonUnitary,
    NotNormalized,
    ZeroPurity,
)
from .rng import ensure_rng

ATOL = 1e-9

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)

# V |(+1 eigenstate)> = |0>; for Y this is H applied after S-dagger.
AXIS_ROTATIONS = {"X": _H, "Y": _H @ _SDG, "Z": np.eye(2, dtype=complex)}

AXES = ("X", "Y", "Z")


def _require_power_of_two(length: int) -> int:
    n = int(length).bit_length() - 1
    if length != (1 << n):
        raise DimensionMismatch(f"vector length {length} is not a power of two")
    return n


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol)


@dataclass(frozen=True)
class StateVec:
    """Pure state on ``n_qubits`` qubits; amplitudes are read-only."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.shape[0] != 1 << self.n_qubits:
            raise DimensionMismatch(
                f"expected {1 << self.n_qubits} amplitudes, got shape {amp.shape}"
            )
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > ATOL:
            raise NotNormalized(f"squared norm deviates from 1 by {abs(norm - 1)!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def computational(cls, n_qubits: int, index: int = 0) -> "StateVec":
        amp = np.zeros(1 << n_qubits, dtype=complex)
        amp[index] = 1.0
        return cls(n_qubits, amp)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian unit-trace matrix; PSD is checked lazily, not enforced.

    Raw tomography estimates are legitimate values of this type even when they
    have small negative eigenvalues; ``is_physical`` reports that state.
    """

    n_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        dim = 1 << self.n_qubits
        if m.shape != (dim, dim):
            raise DimensionMismatch(f"expected {dim}x{dim} matrix, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=ATOL):
            raise DimensionMismatch("matrix is not Hermitian within 1e-9")
        if abs(np.trace(m).real - 1.0) > 1e-9:
            raise NotNormalized(f"trace {np.trace(m)!r} is not 1")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def is_physical(self) -> bool:
        return bool(np.linalg.eigvalsh(self.entries).min() >= -ATOL)


@dataclass(frozen=True)
class PauliBasis:
    """One measurement axis (X, Y or Z) per qubit."""

    axes: tuple[str, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        for a in axes:
            if a not in AXES:
                raise DimensionMismatch(f"invalid axis {a!r}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_string(cls, s: str) -> "PauliBasis":
        return cls(tuple(s))

    def __len__(self) -> int:
        return len(self.axes)

    def __str__(self) -> str:
        return "".join(self.axes)


@dataclass(frozen=True)
class Outcome:
    """One +1/-1 value per qubit."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v not in (1, -1) for v in vals):
            raise DimensionMismatch("outcome entries must be +1 or -1")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


# -- state evolution ----------------------------------------------------------


def apply_unitary_array(
    amplitudes: np.ndarray, u: np.ndarray, targets: tuple[int, ...], n: int
) -> np.ndarray:
    """Apply ``u`` to ``targets`` of an n-qubit amplitude array (no checks).

    Also accepts a (2^n, batch) matrix of column states.
    """
    k = len(targets)
    batched = amplitudes.ndim == 2
    shape = [2] * n + ([amplitudes.shape[1]] if batched else [])
    psi = amplitudes.reshape(shape)
    u_t = np.asarray(u, dtype=complex).reshape([2] * (2 * k))
    out = np.tensordot(u_t, psi, axes=(tuple(range(k, 2 * k)), targets))
    out = np.moveaxis(out, tuple(range(k)), targets)
    return out.reshape(amplitudes.shape)


def apply_unitary(state: StateVec, u: np.ndarray, targets) -> StateVec:
    """Apply a unitary to an ordered tuple of target qubits."""
    targets = tuple(int(t) for t in targets)
    n = state.n_qubits
    if len(set(targets)) != len(targets):
        raise DuplicateTarget(f"repeated target in {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise IndexOutOfRange(f"targets {targets} out of range for {n} qubits")
    u = np.asarray(u, dtype=complex)
    if u.shape != (1 << len(targets), 1 << len(targets)):
        raise DimensionMismatch(
            f"unitary shape {u.shape} does not cover {len(targets)} qubits"
        )
    if not is_unitary(u):
        raise NonUnitary("matrix is not unitary within 1e-9")
    return StateVec(n, apply_unitary_array(state.amplitudes, u, targets, n))


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduce to the qubits in ``keep`` (ascending order in the result)."""
    n = rho.n_qubits
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise EmptyKeepSet("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexOutOfRange(f"keep {keep} out of range for {n} qubits")
    reduced = partial_trace_array(rho.entries, keep, n)
    return DensityMatrix(len(keep), reduced)


def partial_trace_array(rho: np.ndarray, keep: list[int], n: int) -> np.ndarray:
    """Partial trace on a raw 2^n x 2^n array; ``keep`` must be sorted."""
    tensor = rho.reshape([2] * (2 * n))
    row = list(range(n))
    col = [i if i not in keep else n + i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(tensor, row + col, out)
    dim = 1 << len(keep)
    return reduced.reshape(dim, dim)


# -- metrics ------------------------------------------------------------------


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of a-b, via Hermitian eigendecomposition."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatch("states act on different qubit counts")
    return trace_distance_array(a.entries, b.entries)


def trace_distance_array(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    eigs = np.linalg.eigvalsh(a - b)
    return float(0.5 * np.abs(eigs).sum())


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2); equals the squared Frobenius norm for Hermitian input."""
    if abs(np.trace(rho.entries).real - 1.0) > 1e-6:
        raise NotNormalized("purity requires unit trace")
    return float(np.einsum("ij,ji->", rho.entries, rho.entries).real)


def relative_fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """tr(ab) / sqrt(tr(aa) tr(bb)); equals 1 iff a and b are proportional."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatch("states act on different qubit counts")
    return relative_fidelity_array(a.entries, b.entries)


def relative_fidelity_array(a: np.ndarray, b: np.ndarray) -> float:
    pa = np.einsum("ij,ji->", a, a).real
    pb = np.einsum("ij,ji->", b, b).real
    if pa <= 1e-14 or pb <= 1e-14:
        raise ZeroPurity("relative fidelity undefined for zero-purity input")
    return float(np.einsum("ij,ji->", a, b).real / np.sqrt(pa * pb))


# -- Pauli-basis measurement ---------------------------------------------------


def _rotated_probabilities(state: StateVec, basis: PauliBasis) -> np.ndarray:
    if len(basis) != state.n_qubits:
        raise DimensionMismatch(
            f"basis covers {len(basis)} qubits, state has {state.n_qubits}"
        )
    amp = state.amplitudes
    for q, axis in enumerate(basis.axes):
        if axis != "Z":
            amp = apply_unitary_array(amp, AXIS_ROTATIONS[axis], (q,), state.n_qubits)
    return np.abs(amp) ** 2


def index_to_outcome(index: int, n: int) -> Outcome:
    bits = format(index, f"0{n}b")
    return Outcome(tuple(1 if b == "0" else -1 for b in bits))


def sample_pauli(state: StateVec, basis: PauliBasis, rng) -> Outcome:
    """Draw one joint outcome from the exact Born distribution."""
    return sample_pauli_many(state, basis, 1, rng)[0]


def sample_pauli_many(state: StateVec, basis: PauliBasis, shots: int, rng) -> list[Outcome]:
    """Draw ``shots`` independent joint outcomes (one stream, documented order)."""
    rng = ensure_rng(rng)
    probs = _rotated_probabilities(state, basis)
    probs = probs / probs.sum()
    draws = rng.choice(probs.shape[0], size=shots, p=probs)
    n = state.n_qubits
    return [index_to_outcome(int(d), n) for d in draws]


def exact_pauli_distribution(state: StateVec, basis: PauliBasis) -> dict[tuple[int, ...], float]:
    """Exact joint outcome distribution as {(+1/-1 per qubit): probability}."""
    probs = _rotated_probabilities(state, basis)
    n = state.n_qubits
    return {index_to_outcome(i, n).values: float(p) for i, p in enumerate(probs)}
