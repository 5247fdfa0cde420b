"""Dense complex linear algebra for small qubit registers.

Conventions used throughout the package:

* Qubit ordering is little-endian: qubit ``q`` contributes bit ``q`` of the
  basis-state integer, so qubit 0 is the least significant bit.
* ``kron(a, b)`` follows ``numpy.kron``: the *first* factor is the more
  significant block. A register state is therefore
  ``kron(q_{n-1}, ..., q_1, q_0)``.
* Register layout for networks: input-layer qubits occupy indices
  ``0 .. n_in-1``, hidden layers follow in order, the output layer sits last,
  so tracing out input and hidden qubits is a prefix trace.

All operations are pure functions; states and matrices are never mutated in
place. The ``QuantumState`` methods validate their inputs, while the bare
``*_vec`` / ``*_mat`` helpers skip validation and are meant for hot
Monte-Carlo loops.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATOL_UNITARY = 1e-10
ATOL_HERMITIAN = 1e-12
ATOL_STATE = 1e-10
EIG_FLOOR = -1e-9

# Single-qubit constants
ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": ID2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

SWAP2 = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, first factor most significant."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def is_unitary(u: np.ndarray, atol: float = ATOL_UNITARY) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol


def is_hermitian(h: np.ndarray, atol: float = ATOL_HERMITIAN) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return np.max(np.abs(h - h.conj().T)) <= atol


def _num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class QuantumState:
    """Pure state vector or density matrix over a little-endian qubit register."""

    num_qubits: int
    vector: np.ndarray | None = None
    matrix: np.ndarray | None = None

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    @classmethod
    def from_vector(cls, vec: Iterable[complex]) -> "QuantumState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        return cls(_num_qubits(vec.size), vector=vec)

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "QuantumState":
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got {mat.shape}")
        return cls(_num_qubits(mat.shape[0]), matrix=mat)

    @classmethod
    def basis(cls, bits: Sequence[int]) -> "QuantumState":
        """Computational basis state; ``bits[q]`` is the value of qubit q."""
        n = len(bits)
        idx = sum(int(b) << q for q, b in enumerate(bits))
        vec = np.zeros(2**n, dtype=complex)
        vec[idx] = 1.0
        return cls(n, vector=vec)

    @classmethod
    def zeros(cls, n: int) -> "QuantumState":
        return cls.basis([0] * n)

    def density(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return np.outer(self.vector, self.vector.conj())

    def validate(self) -> "QuantumState":
        """Check the state invariants; raise ValueError on violation."""
        if self.is_pure:
            if self.vector.size != self.dim:
                raise ValueError("state vector length does not match num_qubits")
            norm = np.linalg.norm(self.vector)
            if abs(norm - 1.0) > ATOL_STATE:
                raise ValueError(f"pure state norm {norm} deviates from 1")
        else:
            rho = self.matrix
            if rho.shape != (self.dim, self.dim):
                raise ValueError("density matrix shape does not match num_qubits")
            if not is_hermitian(rho, atol=ATOL_STATE):
                raise ValueError("density matrix is not Hermitian")
            tr = np.trace(rho)
            if abs(tr - 1.0) > ATOL_STATE:
                raise ValueError(f"density matrix trace {tr} deviates from 1")
            evals = np.linalg.eigvalsh(rho)
            if evals.min() < EIG_FLOOR:
                raise ValueError(f"density matrix has eigenvalue {evals.min()} < {EIG_FLOOR}")
        return self


# ---------------------------------------------------------------------------
# low-level tensor helpers (no validation; hot-loop safe)
# ---------------------------------------------------------------------------

def _apply_to_axes(tensor: np.ndarray, ut: np.ndarray, taxes: list[int], k: int) -> np.ndarray:
    # ut has rank 2k; its column axis for local qubit i is k + (k-1-i),
    # its row axis for local qubit i is (k-1-i). taxes[i] is the tensor axis
    # carrying local qubit i.
    cols = [k + (k - 1 - i) for i in range(k)]
    out = np.tensordot(ut, tensor, axes=(cols, taxes))
    dest = [taxes[k - 1 - a] for a in range(k)]
    return np.moveaxis(out, range(k), dest)


def apply_unitary_vec(psi: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply ``u`` to the target qubits of an n-qubit state vector."""
    k = len(targets)
    ut = u.reshape((2,) * (2 * k))
    taxes = [n - 1 - t for t in targets]
    out = _apply_to_axes(psi.reshape((2,) * n), ut, taxes, k)
    return out.reshape(-1)


def apply_unitary_mat(rho: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Conjugate an n-qubit density matrix by ``u`` on the target qubits."""
    k = len(targets)
    ut = u.reshape((2,) * (2 * k))
    rows = [n - 1 - t for t in targets]
    cols = [2 * n - 1 - t for t in targets]
    out = rho.reshape((2,) * (2 * n))
    out = _apply_to_axes(out, ut, rows, k)
    out = _apply_to_axes(out, np.conj(ut), cols, k)
    return out.reshape(2**n, 2**n)


def partial_trace_mat(rho: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Partial trace of an n-qubit density matrix keeping the listed qubits.

    Kept qubits are relabelled in ascending original order.
    """
    keep = sorted(keep)
    traced = [q for q in range(n) if q not in set(keep)]
    m = len(keep)
    row_perm = [n - 1 - q for q in reversed(keep)]
    col_perm = [2 * n - 1 - q for q in reversed(keep)]
    tr_rows = [n - 1 - q for q in traced]
    tr_cols = [2 * n - 1 - q for q in traced]
    t = rho.reshape((2,) * (2 * n)).transpose(row_perm + col_perm + tr_rows + tr_cols)
    t = t.reshape(2**m, 2**m, 2 ** len(traced), 2 ** len(traced))
    return np.einsum("ijkk->ij", t)


def partial_trace_vec(psi: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced density matrix of a pure n-qubit state on the kept qubits."""
    keep = sorted(keep)
    traced = [q for q in range(n) if q not in set(keep)]
    perm = [n - 1 - q for q in reversed(keep)] + [n - 1 - q for q in traced]
    t = psi.reshape((2,) * n).transpose(perm).reshape(2 ** len(keep), -1)
    return t @ t.conj().T


# ---------------------------------------------------------------------------
# contract operations on QuantumState
# ---------------------------------------------------------------------------

def apply_unitary(
    state: QuantumState,
    u: np.ndarray,
    targets: Sequence[int],
    validate: bool = True,
) -> QuantumState:
    """Apply a 2^k x 2^k unitary to the given target qubits, identity elsewhere.

    ``targets[i]`` carries local qubit i of ``u`` (little-endian on both sides).
    """
    targets = list(targets)
    k = len(targets)
    n = state.num_qubits
    u = np.asarray(u, dtype=complex)
    if u.shape != (2**k, 2**k):
        raise ValueError(f"unitary shape {u.shape} does not match {k} target qubits")
    if len(set(targets)) != k:
        raise ValueError(f"duplicate target qubits in {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise ValueError(f"target qubits {targets} out of range for {n} qubits")
    if validate and not is_unitary(u):
        raise ValueError("matrix is not unitary within 1e-10")
    if state.is_pure:
        return QuantumState(n, vector=apply_unitary_vec(state.vector, u, targets, n))
    return QuantumState(n, matrix=apply_unitary_mat(state.matrix, u, targets, n))


def partial_trace(state: QuantumState, keep: Iterable[int]) -> QuantumState:
    """Trace out every qubit not in ``keep``; result relabels kept qubits in
    ascending original order."""
    keep = sorted(set(keep))
    n = state.num_qubits
    if any(q < 0 or q >= n for q in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} qubits")
    if state.is_pure:
        reduced = partial_trace_vec(state.vector, keep, n)
    else:
        reduced = partial_trace_mat(state.matrix, keep, n)
    return QuantumState(len(keep), matrix=reduced)


def expectation(state: QuantumState, obs: np.ndarray, validate: bool = True) -> float:
    """Tr[obs rho] for a Hermitian observable; the imaginary part must vanish."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (state.dim, state.dim):
        raise ValueError(f"observable shape {obs.shape} does not match state dim {state.dim}")
    if validate and not is_hermitian(obs, atol=1e-10):
        raise ValueError("observable is not Hermitian")
    if state.is_pure:
        val = np.vdot(state.vector, obs @ state.vector)
    else:
        val = np.einsum("ij,ji->", obs, state.matrix)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation value has imaginary part {val.imag}")
    return float(val.real)


def herm_expm(h: np.ndarray, scale: float) -> np.ndarray:
    """exp(1j * scale * h) via Hermitian eigendecomposition.

    Eigendecomposition keeps the result unitary to roundoff even for long
    products, which series or Pade approximations do not guarantee.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, atol=1e-10):
        raise ValueError("herm_expm requires a Hermitian matrix")
    evals, vecs = np.linalg.eigh(h)
    phases = np.exp(1j * scale * evals)
    return (vecs * phases) @ vecs.conj().T


def embed_operator(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of ``op`` acting on the target qubits (op need
    not be unitary)."""
    k = len(targets)
    full = np.kron(op, np.eye(2 ** (n - k), dtype=complex))
    # full acts on (local qubits k-1..0, then fillers); permute into place.
    order = list(targets)[::-1] + [q for q in reversed(range(n)) if q not in set(targets)]
    # order[a] = qubit carried by axis a of the kron layout; build permutation
    # sending it to the standard layout (axis a carries qubit n-1-a).
    src = {q: a for a, q in enumerate(order)}
    perm = [src[n - 1 - a] for a in range(n)]
    t = full.reshape((2,) * (2 * n))
    t = t.transpose(perm + [p + n for p in perm])
    return t.reshape(2**n, 2**n)
