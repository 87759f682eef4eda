"""Property-based checks over randomly drawn inputs."""

import numpy as np
from hypothesis import given, settings, strategies as st

from qverify.circuits import emit_circuit, parse_circuit, random_circuit
from qverify.core import DensityMatrix, partial_trace, purity, trace_distance
from qverify.gates import standard_gate_set
from qverify.tomography import project_to_physical, required_samples

from conftest import brute_partial_trace, random_density, random_state_vec

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(2, 4))
def test_partial_trace_agrees_with_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    v = random_state_vec(n, rng)
    rho = np.outer(v, v.conj())
    size = int(rng.integers(1, n))
    keep = sorted(rng.choice(n, size=size, replace=False))
    got = partial_trace(DensityMatrix(n, rho), keep)
    assert np.allclose(got.entries, brute_partial_trace(rho, keep, n), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_projection_is_idempotent_and_physical(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(2, rng)
    noise = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    noise = (noise + noise.conj().T) / 2
    noise -= np.trace(noise) / 4 * np.eye(4)
    raw = DensityMatrix(2, rho + 0.1 * noise)
    once = project_to_physical(raw)
    twice = project_to_physical(once)
    assert once.is_physical
    assert trace_distance(once, twice) < 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_purity_bounds(seed):
    rng = np.random.default_rng(seed)
    rho = DensityMatrix(2, random_density(2, rng, rank=3))
    p = purity(rho)
    assert 0.25 - 1e-12 <= p <= 1 + 1e-12


@settings(max_examples=30, deadline=None)
@given(
    eps=st.floats(0.01, 0.5),
    delta=st.floats(0.001, 0.5),
    n=st.integers(2, 8),
    d=st.integers(1, 10),
)
def test_required_samples_monotonicity(eps, delta, n, d):
    base = required_samples(4, n, d, eps, delta)
    assert required_samples(4, n, d, eps, delta / 2) > base
    assert required_samples(4, n, d, eps * 2, delta) < base
    assert required_samples(4, n + 1, d, eps, delta) >= base


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 4), d=st.integers(0, 4))
def test_circuit_round_trip(seed, n, d):
    circuit = random_circuit(n, d, standard_gate_set(), seed)
    assert parse_circuit(emit_circuit(circuit)) == circuit
