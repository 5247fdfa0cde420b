"""Seeded sampling: Haar-random unitaries, Pauli-basis Hermitian generators,
and random product training pairs.

Randomness is counter-based (Philox) so that a stream is a pure function of
``(seed, stream_id)``: the same pair reproduces the same draws on any machine
and under any worker count, and distinct stream ids give statistically
independent streams.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .linalg import PAULIS, kron

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming one deterministic random stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = [self.seed & _MASK64, self.stream_id & _MASK64]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Derive an independent sub-stream; used to fan one stream out."""
        mixed = _splitmix64((self.stream_id & _MASK64) ^ _splitmix64(index & _MASK64))
        return RngStream(self.seed, mixed)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; ``label[q]`` is qubit q's letter."""

    label: str

    def __post_init__(self):
        if not self.label or any(c not in "IXYZ" for c in self.label):
            raise ValueError(f"invalid Pauli label {self.label!r}")

    @property
    def num_qubits(self) -> int:
        return len(self.label)

    def matrix(self) -> np.ndarray:
        # little-endian: label[0] is qubit 0 = least significant kron factor
        return kron(*[PAULIS[c] for c in reversed(self.label)])


def _all_pauli_labels(num_qubits: int) -> list[str]:
    return ["".join(p) for p in product("IXYZ", repeat=num_qubits)]


def haar_unitary(dim: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Haar-random unitary on a dim-dimensional space.

    Ginibre matrix followed by QR, with the R diagonal phases pushed into Q so
    the distribution is exactly Haar rather than QR-convention dependent.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = (gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_haar_unitary(num_qubits: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Haar-random unitary on ``num_qubits`` qubits (exact t-design for all t)."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    return haar_unitary(2**num_qubits, rng)


# Per-qubit Pauli stack used by the vectorized Hermitian sampler.
_SIGMA = np.stack([PAULIS[c] for c in "IXYZ"])


def pauli_combination(coeffs: np.ndarray, num_qubits: int) -> np.ndarray:
    """sum_P coeffs[P] * P over all 4^k Pauli strings, vectorized.

    ``coeffs`` is indexed so that entry ``(p_{k-1}, ..., p_0)`` (after
    reshaping to (4,)*k) multiplies the string with letter ``p_q`` on qubit q.
    """
    k = num_qubits
    t = np.asarray(coeffs, dtype=complex).reshape((4,) * k)
    # contract each Pauli index with the (4, 2, 2) stack, building the
    # rank-2k tensor (r_{k-1}, c_{k-1}, ..., r_0, c_0)
    for _ in range(k):
        t = np.tensordot(t, _SIGMA, axes=([0], [0]))
    # axes now: (r_{k-1}, c_{k-1}, r_{k-2}, c_{k-2}, ...); split rows/cols
    rows = list(range(0, 2 * k, 2))
    cols = list(range(1, 2 * k, 2))
    return t.transpose(rows + cols).reshape(2**k, 2**k)


def sample_pauli_hermitian(
    num_qubits: int,
    trace_square_norm: float,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """Random Hermitian H = sum_P h_P P with Tr[H^2] = trace_square_norm exactly.

    Coefficients are i.i.d. standard normal over all 4^k Hermitian Pauli
    strings, then rescaled; Pauli orthogonality gives Tr[H^2] = 2^k sum h_P^2,
    so the rescale hits the target without re-diagonalizing.
    """
    if trace_square_norm <= 0:
        raise ValueError("trace_square_norm must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    k = num_qubits
    coeffs = gen.standard_normal(4**k)
    scale = np.sqrt(trace_square_norm / (2**k * np.sum(coeffs**2)))
    return pauli_combination(coeffs * scale, k)


def pauli_coefficient(h: np.ndarray, pauli: PauliString) -> float:
    """Recover h_P = Tr[H P] / 2^k."""
    p = pauli.matrix()
    val = np.einsum("ij,ji->", h, p) / p.shape[0]
    return complex(val).real


def haar_state_vector(dim: int, gen: np.random.Generator) -> np.ndarray:
    vec = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def sample_product_training_pair(
    n_in: int,
    n_out: int,
    rng: RngStream | np.random.Generator,
    entangled_input: bool = False,
):
    """Random training pair: Haar input state, uniform basis-string target.

    The input is a product of independent Haar single-qubit states unless
    ``entangled_input`` asks for a Haar state on the whole input register.
    The target is a uniformly random computational basis string on n_out
    qubits, stored per output qubit so both cost kinds accept it.
    """
    from .dqnn import TrainingPair  # local import to avoid a cycle

    if n_in < 1 or n_out < 1:
        raise ValueError("qubit counts must be >= 1")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if entangled_input:
        vec = haar_state_vector(2**n_in, gen)
    else:
        vec = np.ones(1, dtype=complex)
        for _ in range(n_in):
            vec = np.kron(haar_state_vector(2, gen), vec)
    bits = [int(b) for b in gen.integers(0, 2, size=n_out)]
    return TrainingPair.from_bits(vec, bits)


def sample_identity_task_pair(n: int, rng: RngStream | np.random.Generator):
    """Matched basis pair |z> -> z (uniform z); the toy-model training task."""
    from .dqnn import TrainingPair

    gen = rng.generator() if isinstance(rng, RngStream) else rng
    bits = [int(b) for b in gen.integers(0, 2, size=n)]
    vec = np.zeros(2**n, dtype=complex)
    vec[sum(b << q for q, b in enumerate(bits))] = 1.0
    return TrainingPair.from_bits(vec, bits)
