"""Black-box simulation of a layered interruptible quantum device.

A :class:`Device` hides its circuit behind a query interface: callers submit
shot requests (state preparation gates, an inverse-prefix circuit, the layer
index to interrupt at, and a measurement basis) and receive outcomes plus time
accounting. Executed time grows by one unit ``t`` per layer actually run, so a
request with a j-layer prefix interrupted at layer k costs (j + k) * t.

Depolarizing noise is simulated with stochastic pure-state trajectories: after
each gate of the hidden circuit, every touched qubit independently suffers a
uniformly random non-identity Pauli with the configured probability. Prefix
and preparation gates are exact unless ``noisy_prefix`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .circuits import (
    Layer,
    LayeredCircuit,
    choi_state,
    compose_unitary,
    identity_circuit,
    layer_unitary,
)
from .core import (
    Outcome,
    PauliBasis,
    StateVec,
    AXIS_ROTATIONS,
    apply_unitary_array,
    exact_pauli_distribution,
    index_to_outcome,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
)
from .errors import InvalidRequest
from .gates import BUILTIN_MATRICES
from .rng import ensure_rng

_PREP_MATRICES = {
    "X": BUILTIN_MATRICES["X"],
    "H": BUILTIN_MATRICES["H"],
    "S": BUILTIN_MATRICES["S"],
}
_PREP_ORDER = ("X", "H", "S")
_NOISE_PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class NoiseConfig:
    """depolarizing_p: per-gate, per-qubit Pauli error probability.

    rdm_gamma scales post-hoc perturbation of estimated density matrices by
    5^gamma * 1e-4 (gamma = 0 means no perturbation); it is consumed by the
    sweep tooling, not by shot execution.
    """

    depolarizing_p: float = 0.0
    rdm_gamma: int = 0
    noisy_prefix: bool = False

    def __post_init__(self):
        if not (0.0 <= self.depolarizing_p < 1.0):
            raise InvalidRequest(f"depolarizing_p={self.depolarizing_p} outside [0, 1)")
        if self.rdm_gamma not in range(6):
            raise InvalidRequest(f"rdm_gamma={self.rdm_gamma} outside [0, 5]")


@dataclass(frozen=True)
class ShotRequest:
    """One execution: prep, inverse prefix, interrupt layer, readout basis.

    ``undo`` is an optional exactly-executed layer appended after the hidden
    prefix (used by the hardware-style reconstruction to cancel a detected
    entangling gate before single-qubit readout); it costs one extra layer.
    """

    prep_gates: tuple[tuple[str, ...], ...]
    inverse_prefix: LayeredCircuit
    interrupt_at: int
    basis: PauliBasis
    undo: Layer | None = None

    def __post_init__(self):
        prep = tuple(tuple(names) for names in self.prep_gates)
        for names in prep:
            for g in names:
                if g not in _PREP_MATRICES:
                    raise InvalidRequest(f"prep gate {g!r} not in {{X, H, S}}")
            if tuple(sorted(names, key=_PREP_ORDER.index)) != names:
                raise InvalidRequest(f"prep gates {names} not in X, H, S order")
        object.__setattr__(self, "prep_gates", prep)

    def group_key(self):
        return (self.prep_gates, str(self.basis))


@dataclass(frozen=True)
class ShotRecord:
    """Principal measurement plus the classically generated ancilla half."""

    shot_id: int
    principal_basis: PauliBasis
    principal_outcome: Outcome
    ancilla_basis: PauliBasis
    ancilla_outcome: Outcome


@dataclass
class TimeLedger:
    """Accumulated device time in exact units of t."""

    t: Fraction = Fraction(1)
    layer_count: int = 0
    per_shot_layers: dict[int, int] = field(default_factory=dict)

    @property
    def total_time(self) -> Fraction:
        return self.layer_count * self.t

    def add_shot(self, layers: int) -> None:
        self.add_shots(layers, 1)

    def add_shots(self, layers: int, count: int) -> None:
        self.layer_count += layers * count
        self.per_shot_layers[layers] = self.per_shot_layers.get(layers, 0) + count

    def __add__(self, other: "TimeLedger") -> "TimeLedger":
        if self.t != other.t:
            raise InvalidRequest("cannot merge ledgers with different t")
        hist = dict(self.per_shot_layers)
        for k, v in other.per_shot_layers.items():
            hist[k] = hist.get(k, 0) + v
        return TimeLedger(self.t, self.layer_count + other.layer_count, hist)

    def render(self) -> str:
        if self.t == 1:
            return f"{self.layer_count}t"
        return f"{self.layer_count}*({self.t})t"


@dataclass(frozen=True)
class DeviceProfile:
    n: int
    d: int
    t: Fraction
    hidden_circuit: LayeredCircuit

    def __post_init__(self):
        if self.hidden_circuit.n != self.n or self.hidden_circuit.depth != self.d:
            raise InvalidRequest("hidden circuit does not match the profile shape")
        if self.t <= 0:
            raise InvalidRequest("t must be positive")


def device_time_for_learning(d: int, t: Fraction | int, N: int) -> Fraction:
    """Total device time for N shots at every interruption point 1..d."""
    return N * d * d * Fraction(t)


class Device:
    """Query handle for a hidden layered circuit.

    Public surface: ``n``, ``d``, ``t``, ``ledger``, :meth:`execute_shot`,
    :meth:`execute_batch`, and the infinite-shot oracles used by exact-mode
    verification and tests. The circuit itself is not reachable through this
    surface.
    """

    def __init__(self, profile: DeviceProfile, noise: NoiseConfig | None = None):
        self._hidden = profile.hidden_circuit
        self._noise = noise or NoiseConfig()
        self.n = profile.n
        self.d = profile.d
        self.t = Fraction(profile.t)
        self.ledger = TimeLedger(t=self.t)

    # -- request validation and bookkeeping -----------------------------------

    def _check(self, req: ShotRequest) -> None:
        if len(req.prep_gates) != self.n:
            raise InvalidRequest(f"prep covers {len(req.prep_gates)} of {self.n} qubits")
        if req.inverse_prefix.n != self.n:
            raise InvalidRequest("inverse prefix acts on the wrong qubit count")
        if not (0 <= req.interrupt_at <= self.d):
            raise InvalidRequest(f"interrupt_at={req.interrupt_at} outside [0, {self.d}]")
        if len(req.basis) != self.n:
            raise InvalidRequest("basis does not cover every qubit")
        if req.undo is not None:
            req.undo.validate_for(self.n)

    def _layers_executed(self, req: ShotRequest) -> int:
        return req.inverse_prefix.depth + req.interrupt_at + (1 if req.undo else 0)

    # -- execution -------------------------------------------------------------

    def execute_shot(self, req: ShotRequest, rng) -> tuple[Outcome, Fraction]:
        """Run one shot; returns the outcome and the ledger increment."""
        outcome = self.execute_batch([req], rng)[0]
        return outcome, self._layers_executed(req) * self.t

    def execute_batch(self, reqs: list[ShotRequest], rng) -> list[Outcome]:
        """Run many shots of one experiment; grouped for speed.

        All requests must share the same inverse prefix, interruption layer
        and undo layer (they may differ in prep and basis). Outcomes are drawn
        group-by-group in sorted key order from the single supplied stream,
        which makes batches bit-reproducible for a given seed.
        """
        if not reqs:
            return []
        first = reqs[0]
        for req in reqs:
            if (
                req.inverse_prefix is not first.inverse_prefix
                and req.inverse_prefix != first.inverse_prefix
            ) or req.interrupt_at != first.interrupt_at or req.undo != first.undo:
                raise InvalidRequest("batch mixes different circuit configurations")

        groups: dict[tuple, list[int]] = {}
        for idx, req in enumerate(reqs):
            groups.setdefault(req.group_key(), []).append(idx)

        ordered = sorted(groups)
        settings = [
            (reqs[groups[key][0]].prep_gates, reqs[groups[key][0]].basis, len(groups[key]))
            for key in ordered
        ]
        index_arrays = self.execute_settings(
            first.inverse_prefix, first.interrupt_at, settings, rng, undo=first.undo
        )
        outcomes: list[Outcome | None] = [None] * len(reqs)
        for key, draws in zip(ordered, index_arrays):
            for member, idx in zip(groups[key], draws):
                outcomes[member] = index_to_outcome(int(idx), self.n)
        return outcomes  # type: ignore[return-value]

    def execute_settings(
        self,
        inverse_prefix: LayeredCircuit,
        k: int,
        settings: list[tuple[tuple, PauliBasis, int]],
        rng,
        undo: Layer | None = None,
    ) -> list[np.ndarray]:
        """Array-level batch entry point: one (prep, basis, shots) per setting.

        Returns an int array of outcome indices (bit b of index i is qubit b's
        result, 0 meaning +1) for each setting, drawn in the order given.
        """
        rng = ensure_rng(rng)
        # Trajectory noise draws from its own child stream so the measurement
        # draws are identical across noise strengths for a given seed.
        noise_rng = np.random.default_rng(int(rng.integers(2**63)))
        prefix_u = compose_unitary(inverse_prefix)
        p = self._noise.depolarizing_p
        out: list[np.ndarray] = []
        total = 0
        for prep_gates, basis, count in settings:
            req = ShotRequest(prep_gates, inverse_prefix, k, basis, undo=undo)
            self._check(req)
            out.append(self._run_group(req, prefix_u, k, count, p, rng, noise_rng))
            total += count
        layers = inverse_prefix.depth + k + (1 if undo else 0)
        self.ledger.add_shots(layers, total)
        return out

    def _prep_state(self, prep_gates) -> np.ndarray:
        state = np.ones(1, dtype=complex)
        for names in prep_gates:
            q = np.array([1, 0], dtype=complex)
            for name in names:
                q = _PREP_MATRICES[name] @ q
            state = np.kron(state, q)
        return state

    def _run_group(
        self,
        req: ShotRequest,
        prefix_u: np.ndarray,
        k: int,
        batch: int,
        p: float,
        rng,
        noise_rng,
    ) -> np.ndarray:
        # Measurement randomness is drawn before any trajectory noise, and the
        # noise path consumes a p-independent number of variates. Runs that
        # share a seed therefore share their measurement draws across noise
        # strengths, and the sets of corrupted shots are nested in p.
        n = self.n
        u01 = rng.random(batch)
        psi = self._prep_state(req.prep_gates)
        if p == 0.0:
            psi = compose_unitary(self._hidden, k) @ (prefix_u @ psi)
            if req.undo is not None:
                psi = layer_unitary(req.undo, n) @ psi
            cols = psi[:, None]
        else:
            if self._noise.noisy_prefix:
                cols = np.repeat(psi[:, None], batch, axis=1)
                for layer in req.inverse_prefix.layers:
                    cols = self._apply_layer_noisy(cols, layer, p, noise_rng)
            else:
                cols = np.repeat((prefix_u @ psi)[:, None], batch, axis=1)
            for layer in self._hidden.layers[:k]:
                cols = self._apply_layer_noisy(cols, layer, p, noise_rng)
            if req.undo is not None:
                cols = layer_unitary(req.undo, n) @ cols
        for q, axis in enumerate(req.basis.axes):
            if axis != "Z":
                cols = apply_unitary_array(cols, AXIS_ROTATIONS[axis], (q,), n)
        probs = np.abs(cols) ** 2
        probs /= probs.sum(axis=0, keepdims=True)
        if cols.shape[1] == 1:
            draws = np.searchsorted(np.cumsum(probs[:, 0]), u01, side="right")
        else:
            draws = (np.cumsum(probs, axis=0) < u01[None, :]).sum(axis=0)
        return np.minimum(draws, probs.shape[0] - 1).astype(np.int64)

    def _apply_layer_noisy(self, cols: np.ndarray, layer: Layer, p: float, rng) -> np.ndarray:
        n = self.n
        for block, gate in zip(layer.blocks, layer.gates):
            cols = apply_unitary_array(cols, gate.matrix, block, n)
            for q in block:
                hit = rng.random(cols.shape[1]) < p
                which = rng.integers(0, 3, size=cols.shape[1])
                for pauli_idx in range(3):
                    mask = hit & (which == pauli_idx)
                    if mask.any():
                        cols[:, mask] = apply_unitary_array(
                            cols[:, mask], _NOISE_PAULIS[pauli_idx], (q,), n
                        )
        return cols

    # -- infinite-shot oracles ---------------------------------------------------

    def ideal_choi_state(self, inverse_prefix: LayeredCircuit, k: int) -> StateVec:
        """Choi state of prefix-then-first-k-layers, noiselessly (2n qubits)."""
        if not (0 <= k <= self.d):
            raise InvalidRequest(f"interrupt_at={k} outside [0, {self.d}]")
        if inverse_prefix.n != self.n:
            raise InvalidRequest("inverse prefix acts on the wrong qubit count")
        u = compose_unitary(self._hidden, k) @ compose_unitary(inverse_prefix)
        return choi_state(u, self.n)

    def exact_outcome_distribution(self, req: ShotRequest) -> dict:
        """Noiseless outcome distribution for one request."""
        self._check(req)
        psi = self._prep_state(req.prep_gates)
        psi = compose_unitary(req.inverse_prefix) @ psi
        psi = compose_unitary(self._hidden, req.interrupt_at) @ psi
        if req.undo is not None:
            psi = layer_unitary(req.undo, self.n) @ psi
        return exact_pauli_distribution(StateVec(self.n, psi), req.basis)


def blank_request(n: int, basis: PauliBasis, k: int = 0) -> ShotRequest:
    """No prep, empty prefix: measure the first k layers' output directly."""
    return ShotRequest(
        prep_gates=tuple(() for _ in range(n)),
        inverse_prefix=identity_circuit(n),
        interrupt_at=k,
        basis=basis,
    )
