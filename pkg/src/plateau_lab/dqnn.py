"""Dissipative quantum neural networks: topology, forward pass, cost functions,
and the exact brick-to-layered-circuit mapping.

A network is a list of perceptrons applied in a fixed total order. Perceptron
``(l, j)`` couples ``m`` qubits of qubit-layer ``l-1`` to output qubit ``j``
of layer ``l``; after a whole perceptron layer has acted, layer ``l-1`` is
traced out, so the forward pass only ever holds two adjacent layers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .linalg import (
    ID2,
    SWAP2,
    PAULI_Y,
    QuantumState,
    apply_unitary_vec,
    apply_unitary_mat,
    embed_operator,
    expectation,
    herm_expm,
    is_unitary,
    kron,
    partial_trace_mat,
)

GLOBAL_DEEP = "global-deep"
LOCAL_M1 = "local-m1"
LOCAL_M2 = "local-m2"

COST_GLOBAL = "global"
COST_LOCAL = "local"


# ---------------------------------------------------------------------------
# training data and cost observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainingPair:
    """One (input state, target state) pair.

    The target is stored per output qubit when it is a declared product, which
    both cost kinds accept; a full target vector alone restricts the pair to
    the global cost.
    """

    input_vector: np.ndarray
    target_vector: np.ndarray | None = None
    target_qubit_states: tuple[np.ndarray, ...] | None = None

    @classmethod
    def from_bits(cls, input_vector: np.ndarray, bits: Sequence[int]) -> "TrainingPair":
        states = tuple(
            np.array([1.0, 0.0], dtype=complex) if b == 0 else np.array([0.0, 1.0], dtype=complex)
            for b in bits
        )
        return cls.from_product(input_vector, states)

    @classmethod
    def from_product(
        cls, input_vector: np.ndarray, qubit_states: Sequence[np.ndarray]
    ) -> "TrainingPair":
        full = np.ones(1, dtype=complex)
        for s in qubit_states:
            full = np.kron(np.asarray(s, dtype=complex), full)
        return cls(
            input_vector=np.asarray(input_vector, dtype=complex),
            target_vector=full,
            target_qubit_states=tuple(np.asarray(s, dtype=complex) for s in qubit_states),
        )

    @property
    def n_in(self) -> int:
        return self.input_vector.size.bit_length() - 1

    @property
    def n_out(self) -> int:
        return self.target_vector.size.bit_length() - 1

    def validate(self) -> "TrainingPair":
        if abs(np.linalg.norm(self.input_vector) - 1.0) > 1e-10:
            raise ValueError("input state is not normalized")
        if self.target_vector is None:
            raise ValueError("training pair has no target state")
        if abs(np.linalg.norm(self.target_vector) - 1.0) > 1e-10:
            raise ValueError("target state is not normalized")
        if self.target_qubit_states is not None:
            for s in self.target_qubit_states:
                if abs(np.linalg.norm(s) - 1.0) > 1e-10:
                    raise ValueError("target qubit state is not normalized")
        return self


@dataclass(frozen=True)
class CostSpec:
    kind: str
    pairs: tuple[TrainingPair, ...]

    def __post_init__(self):
        if self.kind not in (COST_GLOBAL, COST_LOCAL):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == COST_LOCAL:
            for p in self.pairs:
                if p.target_qubit_states is None:
                    raise ValueError("local cost requires declared product targets")


def global_observable(pair: TrainingPair) -> np.ndarray:
    """1 - |target><target| on the output register."""
    phi = pair.target_vector
    return np.eye(phi.size, dtype=complex) - np.outer(phi, phi.conj())


def local_observable(pair: TrainingPair) -> np.ndarray:
    """1 - (1/n_out) sum_j |psi_j><psi_j| (x) identity on the other qubits."""
    if pair.target_qubit_states is None:
        raise ValueError("local observable requires a declared product target")
    n = pair.n_out
    dim = 2**n
    acc = np.zeros((dim, dim), dtype=complex)
    for j, s in enumerate(pair.target_qubit_states):
        acc += embed_operator(np.outer(s, s.conj()), [j], n)
    return np.eye(dim, dtype=complex) - acc / n


def cost_observable(pair: TrainingPair, kind: str) -> np.ndarray:
    return global_observable(pair) if kind == COST_GLOBAL else local_observable(pair)


# ---------------------------------------------------------------------------
# perceptron unitary sources
# ---------------------------------------------------------------------------

def _rotation(gamma: np.ndarray, theta: float, involutory: bool) -> np.ndarray:
    if involutory:
        dim = gamma.shape[0]
        return math.cos(theta / 2) * np.eye(dim, dtype=complex) - 1j * math.sin(theta / 2) * gamma
    return herm_expm(gamma, -theta / 2)


@dataclass(frozen=True)
class ShiftGate:
    """Unitary of the form left . exp(-i theta gamma / 2) . right.

    ``gamma`` is Hermitian; when it squares to the identity the rotation is
    assembled directly, which is what the two-point shift rule requires.
    """

    gamma: np.ndarray
    theta: float
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    @property
    def involutory(self) -> bool:
        g = self.gamma
        return bool(np.max(np.abs(g @ g - np.eye(g.shape[0]))) <= 1e-10)

    def matrix(self, theta: float | None = None) -> np.ndarray:
        t = self.theta if theta is None else theta
        u = _rotation(self.gamma, t, self.involutory)
        if self.right is not None:
            u = u @ self.right
        if self.left is not None:
            u = self.left @ u
        return u


@dataclass(frozen=True)
class RpqcGate:
    w: np.ndarray
    gamma: np.ndarray
    theta: float


@dataclass(frozen=True)
class RpqcUnitary:
    """Product of parameterized rotations and unparameterized blocks;
    gate 0 acts first."""

    gates: tuple[RpqcGate, ...]

    def matrix(self, overrides: dict[int, float] | None = None) -> np.ndarray:
        dim = self.gates[0].w.shape[0]
        u = np.eye(dim, dtype=complex)
        for k, g in enumerate(self.gates):
            theta = g.theta if overrides is None or k not in overrides else overrides[k]
            u = _rotation(g.gamma, theta, True) @ (g.w @ u)
        return u

    def factor_at(self, k: int) -> tuple[np.ndarray, RpqcGate, np.ndarray]:
        """Split the product as left . R_k(theta) . right around gate k."""
        dim = self.gates[0].w.shape[0]
        right = np.eye(dim, dtype=complex)
        for g in self.gates[:k]:
            right = _rotation(g.gamma, g.theta, True) @ (g.w @ right)
        right = self.gates[k].w @ right
        left = np.eye(dim, dtype=complex)
        for g in self.gates[k + 1 :]:
            left = _rotation(g.gamma, g.theta, True) @ (g.w @ left)
        return left, self.gates[k], right


_SWAP_OUT = (embed_operator(SWAP2, [0, 2], 3), embed_operator(SWAP2, [1, 2], 3))


@dataclass(frozen=True)
class BrickV1:
    """m=2 brick perceptron: a two-qubit block on the input pair followed by a
    swap of one input (``swap_local`` = 0 or 1) onto the output qubit.

    Offset-0 layers swap the first input out, offset-1 layers the second; that
    places every block-bearing perceptron at an odd 1-based output index, so
    the family-wide "odd j first" order always runs a block before any swap
    that would disturb its inputs.
    """

    wblock: "np.ndarray | ShiftGate"
    swap_local: int = 0

    def block_matrix(self, theta: float | None = None) -> np.ndarray:
        if isinstance(self.wblock, ShiftGate):
            return self.wblock.matrix(theta)
        return self.wblock

    def matrix(self, theta: float | None = None) -> np.ndarray:
        return _SWAP_OUT[self.swap_local] @ kron(ID2, self.block_matrix(theta))


def materialize(unitary, theta: float | None = None) -> np.ndarray:
    """Resolve any perceptron unitary source to a concrete matrix."""
    if isinstance(unitary, np.ndarray):
        return unitary
    if isinstance(unitary, (ShiftGate, BrickV1)):
        return unitary.matrix(theta)
    if isinstance(unitary, RpqcUnitary):
        return unitary.matrix()
    raise TypeError(f"unknown unitary source {type(unitary)!r}")


# ---------------------------------------------------------------------------
# network topology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Perceptron:
    """Perceptron (l, j): unitary on in_targets of layer l-1 plus output qubit
    j of layer l. Local qubit i of the unitary is in_targets[i]; the last
    local qubit is the output."""

    layer: int
    out_index: int
    in_targets: tuple[int, ...]
    unitary: object

    @property
    def num_qubits(self) -> int:
        return len(self.in_targets) + 1


@dataclass(frozen=True)
class NetworkSpec:
    """DQNN topology with a total, explicit application order."""

    layer_widths: tuple[int, ...]
    perceptrons: tuple[Perceptron, ...]
    family: str = "custom"

    @property
    def n_in(self) -> int:
        return self.layer_widths[0]

    @property
    def n_out(self) -> int:
        return self.layer_widths[-1]

    @property
    def num_perceptron_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def total_qubits(self) -> int:
        return sum(self.layer_widths)

    def layer_perceptrons(self, layer: int) -> list[Perceptron]:
        return [p for p in self.perceptrons if p.layer == layer]

    def validate(self) -> "NetworkSpec":
        for l in range(1, len(self.layer_widths)):
            outs = sorted(p.out_index for p in self.layer_perceptrons(l))
            if outs != list(range(self.layer_widths[l])):
                raise ValueError(
                    f"layer {l}: output qubits {outs} not covered exactly once"
                )
            for p in self.layer_perceptrons(l):
                if any(t < 0 or t >= self.layer_widths[l - 1] for t in p.in_targets):
                    raise ValueError(f"perceptron ({l},{p.out_index}) input targets out of range")
                mat = materialize(p.unitary)
                if mat.shape != (2**p.num_qubits, 2**p.num_qubits):
                    raise ValueError(f"perceptron ({l},{p.out_index}) unitary has wrong shape")
                if not is_unitary(mat):
                    raise ValueError(f"perceptron ({l},{p.out_index}) matrix is not unitary")
        return self


def replace_perceptron(spec: NetworkSpec, index: int, unitary) -> NetworkSpec:
    ps = list(spec.perceptrons)
    ps[index] = replace(ps[index], unitary=unitary)
    return replace(spec, perceptrons=tuple(ps))


# ---------------------------------------------------------------------------
# forward evaluation
# ---------------------------------------------------------------------------

def forward(spec: NetworkSpec, rho_in: QuantumState) -> QuantumState:
    """Dissipative forward pass on a sliding register of two adjacent layers."""
    if rho_in.num_qubits != spec.n_in:
        raise ValueError(
            f"input has {rho_in.num_qubits} qubits, network expects {spec.n_in}"
        )
    state = rho_in.density()
    widths = spec.layer_widths
    cur = widths[0]
    for l in range(1, len(widths)):
        nl = widths[l]
        wn = cur + nl
        window = np.zeros((2**wn, 2**wn), dtype=complex)
        window[: 2**cur, : 2**cur] = state  # fresh layer qubits start in |0...0>
        for p in spec.layer_perceptrons(l):
            targets = list(p.in_targets) + [cur + p.out_index]
            window = apply_unitary_mat(window, materialize(p.unitary), targets, wn)
        state = partial_trace_mat(window, range(cur, wn), wn)
        cur = nl
    return QuantumState(spec.n_out, matrix=state)


def _layer_offsets(widths: Sequence[int]) -> list[int]:
    offs = [0]
    for w in widths[:-1]:
        offs.append(offs[-1] + w)
    return offs


def global_targets(spec: NetworkSpec, p: Perceptron) -> list[int]:
    offs = _layer_offsets(spec.layer_widths)
    return [offs[p.layer - 1] + t for t in p.in_targets] + [offs[p.layer] + p.out_index]


def full_register_unitary(spec: NetworkSpec) -> np.ndarray:
    """Ordered product of all perceptrons embedded on the full register
    (brute-force oracle; exponential in total qubit count)."""
    n = spec.total_qubits
    v = np.eye(2**n, dtype=complex)
    for p in spec.perceptrons:
        v = embed_operator(materialize(p.unitary), global_targets(spec, p), n) @ v
    return v


def forward_full_register(spec: NetworkSpec, rho_in: QuantumState) -> QuantumState:
    """One-shot forward on the full register; oracle for :func:`forward`."""
    n = spec.total_qubits
    rho = np.zeros((2**n, 2**n), dtype=complex)
    d_in = 2**spec.n_in
    rho[:d_in, :d_in] = rho_in.density()
    v = full_register_unitary(spec)
    rho = v @ rho @ v.conj().T
    keep = range(n - spec.n_out, n)
    return QuantumState(spec.n_out, matrix=partial_trace_mat(rho, keep, n))


def run_statevector(spec: NetworkSpec, input_vector: np.ndarray) -> np.ndarray:
    """Evolve a pure input through all perceptrons on the full register.

    Valid because discarded qubits are never reused and the cost observable is
    lifted with the identity on them, so the trace can be deferred to the end.
    """
    n = spec.total_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[: input_vector.size] = input_vector
    for p in spec.perceptrons:
        psi = apply_unitary_vec(psi, materialize(p.unitary), global_targets(spec, p), n)
    return psi


def _cost_x_statevector(spec: NetworkSpec, pair: TrainingPair, kind: str) -> float:
    psi = run_statevector(spec, pair.input_vector)
    return _observable_cost_from_state(psi, spec.total_qubits, spec.n_out, pair, kind)


def _observable_cost_from_state(
    psi: np.ndarray, n: int, n_out: int, pair: TrainingPair, kind: str
) -> float:
    # output qubits are the top n_out qubits of the register
    if kind == COST_GLOBAL:
        mat = psi.reshape(2**n_out, -1)
        amps = pair.target_vector.conj() @ mat
        return 1.0 - float(np.real(np.vdot(amps, amps)))
    rest = n - n_out
    probs = 0.0
    for j, s in enumerate(pair.target_qubit_states):
        q = rest + j
        t = psi.reshape((2,) * n)
        contracted = np.tensordot(s.conj(), t, axes=([0], [n - 1 - q]))
        probs += float(np.real(np.vdot(contracted, contracted)))
    return 1.0 - probs / n_out


def cost(spec: NetworkSpec, cspec: CostSpec, method: str = "auto") -> float:
    """Average cost over the training pairs.

    ``method`` picks the evaluation route: "density" runs the sliding-window
    forward pass and takes Tr[O rho_out]; "statevector" evolves the pure input
    on the full register (pure inputs only); "auto" chooses statevector when
    it applies. Both routes agree to 1e-10 and tests pin that.
    """
    if method == "auto":
        method = "statevector" if spec.total_qubits <= 16 else "density"
    total = 0.0
    for pair in cspec.pairs:
        if method == "statevector":
            cx = _cost_x_statevector(spec, pair, cspec.kind)
        else:
            rho_out = forward(spec, QuantumState(spec.n_in, vector=pair.input_vector))
            cx = expectation(rho_out, cost_observable(pair, cspec.kind), validate=False)
        if cx < -1e-9 or cx > 1 + 1e-9:
            raise ValueError(f"cost {cx} outside [0, 1]; simulator invariant violated")
        total += cx
    return total / len(cspec.pairs)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_swap_network(widths: Sequence[int]) -> NetworkSpec:
    """Perfect identity channel: every perceptron a bare SWAP (unparameterized)."""
    widths = tuple(widths)
    if len(set(widths)) != 1:
        raise ValueError("swap network requires equal layer widths")
    ps = [
        Perceptron(layer=l, out_index=j, in_targets=(j,), unitary=SWAP2)
        for l in range(1, len(widths))
        for j in range(widths[l])
    ]
    return NetworkSpec(widths, tuple(ps), family="custom")


TOY_GAMMA = kron(PAULI_Y, ID2)  # Y on the output (second) qubit of the perceptron


def build_toy_network(n: int, angles: Sequence[float]) -> NetworkSpec:
    """m=1 toy family: each perceptron is a SWAP followed by Ry(theta) on the
    output qubit; angles are independent per perceptron."""
    if len(angles) != n:
        raise ValueError("need one angle per perceptron")
    ps = [
        Perceptron(
            layer=1,
            out_index=j,
            in_targets=(j,),
            unitary=ShiftGate(gamma=TOY_GAMMA, theta=float(angles[j]), right=SWAP2),
        )
        for j in range(n)
    ]
    return NetworkSpec((n, n), tuple(ps), family=LOCAL_M1)


def build_global_deep_haar(n: int, gen: np.random.Generator, probe_out: int = 0) -> NetworkSpec:
    """No-hidden-layer global-perceptron network with Haar factors.

    The probed perceptron is A . R(theta=0) . B with A, B independently Haar
    on n+1 qubits; the other perceptrons are single Haar unitaries. This
    samples the design assumptions directly instead of compiling a circuit.
    """
    from .ensembles import haar_unitary

    dim = 2 ** (n + 1)
    gamma = kron(PAULI_Y, np.eye(2**n, dtype=complex))  # Y on the output qubit
    ps = []
    for j in range(n):
        if j == probe_out:
            unitary = ShiftGate(
                gamma=gamma,
                theta=0.0,
                left=haar_unitary(dim, gen),
                right=haar_unitary(dim, gen),
            )
        else:
            unitary = haar_unitary(dim, gen)
        ps.append(Perceptron(layer=1, out_index=j, in_targets=tuple(range(n)), unitary=unitary))
    return NetworkSpec((n, n), tuple(ps), family=GLOBAL_DEEP)


def default_depth(n: int) -> int:
    return 4 * (n + 1) ** 2


def build_global_deep_circuit(
    n: int, gen: np.random.Generator, eta: int | None = None
) -> NetworkSpec:
    """Gate-sequence form of the global family: eta blocks per perceptron, each
    an entangling Haar block followed by a single-qubit Pauli rotation with a
    random axis and random angle."""
    from .ensembles import haar_unitary

    if eta is None:
        eta = default_depth(n)
    k = n + 1
    dim = 2**k
    from .linalg import PAULI_X, PAULI_Z

    pool = [PAULI_X, PAULI_Y, PAULI_Z]
    ps = []
    for j in range(n):
        gates = []
        for _ in range(eta):
            w = haar_unitary(dim, gen)
            axis = pool[int(gen.integers(0, 3))]
            qubit = int(gen.integers(0, k))
            gamma = embed_operator(axis, [qubit], k)
            theta = float(gen.uniform(0.0, 2 * np.pi))
            gates.append(RpqcGate(w=w, gamma=gamma, theta=theta))
        ps.append(
            Perceptron(
                layer=1, out_index=j, in_targets=tuple(range(n)), unitary=RpqcUnitary(tuple(gates))
            )
        )
    return NetworkSpec((n, n), tuple(ps), family=GLOBAL_DEEP)


def brick_block_positions(n: int, layer: int) -> list[int]:
    """Starting input qubit of each two-qubit block in a brick layer; odd
    layers pair (0,1),(2,3),..., even layers shift by one with open ends."""
    offset = 0 if layer % 2 == 1 else 1
    return list(range(offset, n - 1, 2))


def build_brick_network(
    n: int,
    num_layers: int,
    gen: np.random.Generator,
    probe_first_block: bool = False,
) -> NetworkSpec:
    """m=2 brick family on even n: each layer applies W blocks on disjoint
    input pairs (offset alternating per layer, open boundaries) and transfers
    everything to the next register; the rest of each layer is plain SWAP."""
    from .ensembles import haar_unitary

    if n % 2 != 0 or n < 2:
        raise ValueError("brick family is defined for even widths only")
    ps = []
    for l in range(1, num_layers + 1):
        swap_local = 0 if l % 2 == 1 else 1
        layer_ps = []
        block_outs = set()
        for start in brick_block_positions(n, l):
            if probe_first_block and l == 1 and start == brick_block_positions(n, 1)[0]:
                wsrc = ShiftGate(
                    gamma=kron(ID2, PAULI_Y),  # Y on the first qubit of the block
                    theta=0.0,
                    left=haar_unitary(4, gen),
                    right=haar_unitary(4, gen),
                )
            else:
                wsrc = haar_unitary(4, gen)
            out = start + swap_local
            block_outs.add(out)
            layer_ps.append(
                Perceptron(
                    layer=l,
                    out_index=out,
                    in_targets=(start, start + 1),
                    unitary=BrickV1(wsrc, swap_local=swap_local),
                )
            )
        for j in range(n):
            if j not in block_outs:
                layer_ps.append(Perceptron(layer=l, out_index=j, in_targets=(j,), unitary=SWAP2))
        # 1-based odd j (0-based even out_index) first, ascending within parity
        layer_ps.sort(key=lambda p: (p.out_index % 2, p.out_index))
        ps.extend(layer_ps)
    widths = tuple([n] * (num_layers + 1))
    return NetworkSpec(widths, tuple(ps), family=LOCAL_M2)


# ---------------------------------------------------------------------------
# hardware-efficient mapping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HardwareEfficientCircuit:
    """Flat layered circuit on n qubits equivalent to a brick DQNN; two DQNN
    perceptron layers collapse into one full (two-offset) circuit layer."""

    num_qubits: int
    placements: tuple[tuple[object, tuple[int, int]], ...]
    dqnn_layers: int

    @property
    def num_layers(self) -> int:
        return math.ceil(self.dqnn_layers / 2)

    def cost(self, cspec: CostSpec) -> float:
        total = 0.0
        n = self.num_qubits
        for pair in cspec.pairs:
            psi = pair.input_vector
            for block, (q0, q1) in self.placements:
                mat = block.matrix() if isinstance(block, ShiftGate) else block
                psi = apply_unitary_vec(psi, mat, [q0, q1], n)
            cx = _observable_cost_from_state(psi, n, n, pair, cspec.kind)
            total += cx
        return total / len(cspec.pairs)


def map_to_hardware_efficient(spec: NetworkSpec) -> HardwareEfficientCircuit:
    """Extract the flat circuit whose cost matches the brick DQNN exactly.

    Every brick layer moves the live state one register over while applying
    its W blocks, so the dissipative network equals the same blocks applied
    in place on a single n-qubit register.
    """
    if spec.family != LOCAL_M2:
        raise ValueError(f"hardware-efficient mapping is defined for {LOCAL_M2!r} networks")
    n = spec.n_in
    placements = []
    for l in range(1, spec.num_perceptron_layers + 1):
        for p in sorted(spec.layer_perceptrons(l), key=lambda p: p.out_index):
            if isinstance(p.unitary, BrickV1):
                placements.append((p.unitary.wblock, (p.in_targets[0], p.in_targets[1])))
    return HardwareEfficientCircuit(
        num_qubits=n,
        placements=tuple(placements),
        dqnn_layers=spec.num_perceptron_layers,
    )
