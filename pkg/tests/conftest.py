"""Shared fixtures and independent oracle implementations.

The oracles here deliberately avoid the library's vectorized code paths:
partial traces run as explicit double loops over bit strings, distributions
come from dense projector arithmetic, so they can certify the fast versions.
"""

import numpy as np
import pytest


def haar_unitary(dim: int, rng) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state_vec(n: int, rng) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_density(n: int, rng, rank: int = 2) -> np.ndarray:
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=complex)
    weights = rng.dirichlet(np.ones(rank))
    for w in weights:
        v = random_state_vec(n, rng)
        rho += w * np.outer(v, v.conj())
    return rho


def brute_partial_trace(rho: np.ndarray, keep, n: int) -> np.ndarray:
    """Reference partial trace: explicit loop over basis-label bit strings."""
    keep = sorted(keep)
    traced = [w for w in range(n) if w not in keep]
    dk = 1 << len(keep)
    out = np.zeros((dk, dk), dtype=complex)
    for r in range(1 << n):
        rb = format(r, f"0{n}b")
        for c in range(1 << n):
            cb = format(c, f"0{n}b")
            if any(rb[t] != cb[t] for t in traced):
                continue
            ri = int("".join(rb[w] for w in keep) or "0", 2)
            ci = int("".join(cb[w] for w in keep) or "0", 2)
            out[ri, ci] += rho[r, c]
    return out


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def brute_pauli_distribution(state: np.ndarray, axes: str) -> dict:
    """Joint outcome distribution via explicit eigenprojectors."""
    n = len(axes)
    out = {}
    for bits in range(1 << n):
        proj = np.ones((1, 1), dtype=complex)
        outcome = []
        for q in range(n):
            sign = 1 if not (bits >> (n - 1 - q)) & 1 else -1
            outcome.append(sign)
            proj = np.kron(proj, (PAULI["I"] + sign * PAULI[axes[q]]) / 2)
        out[tuple(outcome)] = float((state.conj() @ proj @ state).real)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
