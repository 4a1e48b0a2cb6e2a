"""Shared fixtures-in-functions for the spintomo tests."""
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))


def random_hermitian(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def random_density(n_qubits: int, seed: int, rank: Optional[int] = None) -> np.ndarray:
    """Random full-rank (or rank-`rank`) density matrix."""
    dim = 2**n_qubits
    rng = np.random.default_rng(seed)
    k = rank or dim
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(n_qubits: int, seed: int) -> np.ndarray:
    return random_density(n_qubits, seed, rank=1)


def bell_state_phi() -> np.ndarray:
    """Projector on (|down up> + |up down>)/sqrt(2)."""
    v = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
    return np.outer(v, v.conj())
