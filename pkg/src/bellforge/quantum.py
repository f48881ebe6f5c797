"""N-qubit states, Pauli correlation tensors and quantum correlation functions.

Conventions: |0> is the +1 eigenvector of sigma_z, party 1 is the most
significant qubit in the computational basis, and tensor index 0 is the
identity while 1, 2, 3 stand for x, y, z.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
UNIT_TOL = 1e-12

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
_PAULI.setflags(write=False)


def pauli_matrix(k: int) -> np.ndarray:
    """Return sigma_k for k in {0, 1, 2, 3} (identity, x, y, z)."""
    if not isinstance(k, (int, np.integer)) or not 0 <= k <= 3:
        raise ValueError(f"Pauli index must be 0..3, got {k!r}")
    return _PAULI[k].copy()


def _n_from_dim(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


@dataclass(frozen=True)
class QuantumState:
    """Density operator of ``n_parties`` qubits.

    Validated on construction: Hermitian, unit trace, positive semidefinite.
    """

    n_parties: int
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if self.n_parties < 1:
            raise ValueError("n_parties must be positive")
        dim = 2**self.n_parties
        if rho.shape != (dim, dim):
            raise ValueError(
                f"density matrix shape {rho.shape} does not match {self.n_parties} qubits"
            )
        if np.max(np.abs(rho - rho.conj().T)) >= HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise ValueError(f"trace {np.trace(rho).real!r} != 1")
        if np.linalg.eigvalsh(rho).min() <= -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return 2**self.n_parties

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def state_from_amplitudes(n: int, amps: Sequence[complex]) -> QuantumState:
    psi = np.asarray(amps, dtype=complex).ravel()
    if psi.size != 2**n:
        # also rejects lengths that are not powers of two
        _n_from_dim(psi.size)
        raise ValueError(f"{psi.size} amplitudes do not describe {n} qubits")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("zero state vector")
    psi = psi / norm
    rho = np.outer(psi, psi.conj())
    # exact Hermitian symmetrization; outer product can differ in the last ulp
    rho = (rho + rho.conj().T) / 2
    return QuantumState(n, rho)


def state_from_matrix(rho) -> QuantumState:
    rho = np.asarray(rho, dtype=complex)
    return QuantumState(_n_from_dim(rho.shape[0]), rho)


@dataclass(frozen=True)
class CorrelationTensor:
    """Real tensor T[k1, ..., kN] with every k in {0, 1, 2, 3}."""

    n_parties: int
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        if comps.shape != (4,) * self.n_parties:
            raise ValueError(
                f"tensor shape {comps.shape} does not match {self.n_parties} parties"
            )
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    def __getitem__(self, idx) -> float:
        return float(self.components[idx])

    @property
    def full(self) -> np.ndarray:
        """Restriction to indices 1..3 (the rank-N correlation block)."""
        return self.components[(slice(1, 4),) * self.n_parties]

    def nonzero(self, tol: float = 1e-12) -> list[tuple[tuple[int, ...], float]]:
        out = []
        for idx in itertools.product(range(4), repeat=self.n_parties):
            v = float(self.components[idx])
            if abs(v) > tol:
                out.append((idx, v))
        return out


def correlation_tensor(state: QuantumState) -> CorrelationTensor:
    """T[k1..kN] = Tr(rho sigma_k1 x ... x sigma_kN) for all 4^N index tuples."""
    n = state.n_parties
    if state.rho.shape != (2**n, 2**n):
        raise ValueError("state dimension does not match n_parties")
    # rho[a1..aN, b1..bN]; Tr(rho P) = sum rho[a, b] P[b, a]
    t = state.rho.reshape((2,) * (2 * n))
    for j in range(n):
        # contract ket axis j and bra axis (j+n) of the remaining tensor; the
        # new Pauli index goes to the end so party order is preserved after n steps
        a_ax, b_ax = 0, n - j
        t = np.tensordot(t, _PAULI, axes=([a_ax, b_ax], [2, 1]))
    return CorrelationTensor(n, np.real(t))


def _check_unit(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("setting vectors must be real 3-vectors")
    if abs(np.linalg.norm(v) - 1) > tol:
        raise ValueError(f"setting vector {v} is not unit norm")
    return v


def contract(block: np.ndarray, vectors: Sequence[np.ndarray]) -> float:
    """Full contraction of a rank-N 3x..x3 block with one vector per index."""
    out = block
    for v in reversed(vectors):
        out = out @ v
    return float(out)


def correlation_function(tensor: CorrelationTensor, settings: Sequence) -> float:
    """Quantum correlation E = (a_1 x ... x a_N) . T for unit Bloch vectors."""
    if len(settings) != tensor.n_parties:
        raise ValueError(
            f"need {tensor.n_parties} setting vectors, got {len(settings)}"
        )
    vecs = [_check_unit(v) for v in settings]
    return contract(tensor.full, vecs)


def add_white_noise(state: QuantumState, v: float) -> QuantumState:
    """Return (1 - v) * I / 2^N + v * rho."""
    if not 0 <= v <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    dim = state.dim
    rho = (1 - v) * np.eye(dim) / dim + v * state.rho
    return QuantumState(state.n_parties, rho)


def bloch_rotation(u: np.ndarray) -> np.ndarray:
    """3x3 rotation R with U sigma_b U^dag = sum_a R[a, b] sigma_a."""
    u = np.asarray(u, dtype=complex)
    r = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            r[a, b] = 0.5 * np.real(np.trace(_PAULI[a + 1] @ u @ _PAULI[b + 1] @ u.conj().T))
    return r


def apply_local_unitary(state: QuantumState, u: np.ndarray, party: int) -> QuantumState:
    """Apply a single-qubit unitary to ``party`` (0-based)."""
    n = state.n_parties
    ops = [np.eye(2)] * n
    ops[party] = np.asarray(u, dtype=complex)
    full = ops[0]
    for op in ops[1:]:
        full = np.kron(full, op)
    rho = full @ state.rho @ full.conj().T
    return QuantumState(n, (rho + rho.conj().T) / 2)


def rotate_block(block: np.ndarray, rotations: Sequence[np.ndarray]) -> np.ndarray:
    """Transform a rank-N block by one 3x3 matrix per index: T'_{a..} = R_{a b} T_{b..}."""
    out = block
    for j, r in enumerate(rotations):
        out = np.moveaxis(np.tensordot(r, out, axes=([1], [j])), 0, j)
    return out
