"""Gradients for both training schemes: two-point shift rule and central
finite differences for circuit angles, and the commutator-trace derivative of
the step parameter for matrix-flow updates.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import numpy as np

from .dqnn import (
    BrickV1,
    CostSpec,
    NetworkSpec,
    Perceptron,
    RpqcUnitary,
    ShiftGate,
    cost,
    cost_observable,
    global_targets,
    materialize,
    replace_perceptron,
)
from .linalg import apply_unitary_vec, embed_operator, herm_expm, is_hermitian


@dataclass(frozen=True)
class RpqcParameterRef:
    """Names one rotation angle: perceptron (layer, out_index), gate index
    within its product (0 for single-rotation sources)."""

    layer: int
    out_index: int
    gate_index: int = 0


def _find_perceptron(spec: NetworkSpec, ref: RpqcParameterRef) -> tuple[int, Perceptron]:
    for i, p in enumerate(spec.perceptrons):
        if p.layer == ref.layer and p.out_index == ref.out_index:
            return i, p
    raise ValueError(f"no perceptron ({ref.layer}, {ref.out_index}) in network")


def probed_theta(spec: NetworkSpec, ref: RpqcParameterRef) -> float:
    _, p = _find_perceptron(spec, ref)
    if isinstance(p.unitary, ShiftGate):
        return p.unitary.theta
    if isinstance(p.unitary, BrickV1) and isinstance(p.unitary.wblock, ShiftGate):
        return p.unitary.wblock.theta
    if isinstance(p.unitary, RpqcUnitary):
        return p.unitary.gates[ref.gate_index].theta
    raise ValueError("referenced perceptron carries no rotation angle")


def with_theta(spec: NetworkSpec, ref: RpqcParameterRef, theta: float) -> NetworkSpec:
    """Copy of the network with the referenced angle replaced."""
    i, p = _find_perceptron(spec, ref)
    u = p.unitary
    if isinstance(u, ShiftGate):
        return replace_perceptron(spec, i, replace(u, theta=theta))
    if isinstance(u, BrickV1) and isinstance(u.wblock, ShiftGate):
        return replace_perceptron(spec, i, replace(u, wblock=replace(u.wblock, theta=theta)))
    if isinstance(u, RpqcUnitary):
        gates = list(u.gates)
        gates[ref.gate_index] = replace(gates[ref.gate_index], theta=theta)
        return replace_perceptron(spec, i, RpqcUnitary(tuple(gates)))
    raise ValueError("referenced perceptron carries no rotation angle")


def _probe_generator(spec: NetworkSpec, ref: RpqcParameterRef) -> np.ndarray:
    _, p = _find_perceptron(spec, ref)
    u = p.unitary
    if isinstance(u, ShiftGate):
        return u.gamma
    if isinstance(u, BrickV1) and isinstance(u.wblock, ShiftGate):
        return u.wblock.gamma
    if isinstance(u, RpqcUnitary):
        return u.gates[ref.gate_index].gamma
    raise ValueError("referenced perceptron carries no rotation angle")


def _is_involutory(g: np.ndarray) -> bool:
    return bool(np.max(np.abs(g @ g - np.eye(g.shape[0]))) <= 1e-10)


def grad_theta_shift(
    spec: NetworkSpec,
    cspec: CostSpec,
    ref: RpqcParameterRef,
    method: str = "auto",
) -> float:
    """Exact derivative via the two-point rule [C(t+pi/2) - C(t-pi/2)] / 2.

    Requires a generator with +-1 spectrum; other Hermitian generators fall
    back to central finite differences.
    """
    gamma = _probe_generator(spec, ref)
    if not _is_involutory(gamma):
        return grad_theta_fd(spec, cspec, ref, step=1e-5, method=method)
    theta = probed_theta(spec, ref)
    c_plus = cost(with_theta(spec, ref, theta + np.pi / 2), cspec, method=method)
    c_minus = cost(with_theta(spec, ref, theta - np.pi / 2), cspec, method=method)
    return 0.5 * (c_plus - c_minus)


def grad_theta_fd(
    spec: NetworkSpec,
    cspec: CostSpec,
    ref: RpqcParameterRef,
    step: float = 1e-4,
    method: str = "auto",
) -> float:
    """Central difference [C(t+h) - C(t-h)] / (2h); oracle for the shift rule."""
    if step <= 0:
        raise ValueError("step must be positive")
    theta = probed_theta(spec, ref)
    c_plus = cost(with_theta(spec, ref, theta + step), cspec, method=method)
    c_minus = cost(with_theta(spec, ref, theta - step), cspec, method=method)
    return (c_plus - c_minus) / (2 * step)


def grad_theta_commutator(
    spec: NetworkSpec, cspec: CostSpec, ref: RpqcParameterRef
) -> float:
    """Cross-check identity: assemble the derivative as a commutator trace on
    the full register instead of differencing costs.

    With rho_hat the register state just after the probed rotation and O_hat
    the observable pulled back through everything applied later,
    dC/dtheta = (i/2N) sum_x Tr[rho_hat [Gamma, O_hat]].
    """
    idx, probed = _find_perceptron(spec, ref)
    n = spec.total_qubits
    targets = global_targets(spec, probed)
    u = probed.unitary
    if isinstance(u, ShiftGate):
        left_loc, gamma_loc, right_loc = u.left, u.gamma, u.right
        theta = u.theta
    elif isinstance(u, RpqcUnitary):
        left_loc, gate, right_loc = u.factor_at(ref.gate_index)
        gamma_loc, theta = gate.gamma, gate.theta
    elif isinstance(u, BrickV1) and isinstance(u.wblock, ShiftGate):
        from .dqnn import _SWAP_OUT
        from .linalg import ID2, kron

        w = u.wblock
        left_loc = _SWAP_OUT[u.swap_local] @ kron(ID2, w.left if w.left is not None else np.eye(4))
        gamma_loc = kron(ID2, w.gamma)
        right_loc = kron(ID2, w.right if w.right is not None else np.eye(4))
        theta = w.theta
    else:
        raise ValueError("referenced perceptron carries no rotation angle")

    dim = 2**probed.num_qubits
    eye = np.eye(dim, dtype=complex)
    rot = ShiftGate(gamma=gamma_loc, theta=theta).matrix()
    below_loc = rot @ (right_loc if right_loc is not None else eye)
    above_loc = left_loc if left_loc is not None else eye

    gamma_full = embed_operator(gamma_loc, targets, n)
    total = 0.0
    for pair in cspec.pairs:
        psi = np.zeros(2**n, dtype=complex)
        psi[: pair.input_vector.size] = pair.input_vector
        for p in spec.perceptrons[:idx]:
            psi = apply_unitary_vec(psi, materialize(p.unitary), global_targets(spec, p), n)
        psi = apply_unitary_vec(psi, below_loc, targets, n)
        rho_hat = np.outer(psi, psi.conj())
        obs = embed_operator(cost_observable(pair, cspec.kind), range(n - spec.n_out, n), n)
        above = embed_operator(above_loc, targets, n)
        for p in spec.perceptrons[idx + 1 :]:
            above = embed_operator(materialize(p.unitary), global_targets(spec, p), n) @ above
        o_hat = above.conj().T @ obs @ above
        val = 0.5j * np.trace(rho_hat @ (gamma_full @ o_hat - o_hat @ gamma_full))
        total += val.real
    return total / len(cspec.pairs)


# ---------------------------------------------------------------------------
# parameter matrix multiplication
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixFlowState:
    """Per-perceptron unitaries V(s) and generators H for the simultaneous
    update V(s + eps) = exp(i eps H) V(s)."""

    network: NetworkSpec
    generators: tuple[np.ndarray, ...]
    s: float = 0.0

    def __post_init__(self):
        if len(self.generators) != len(self.network.perceptrons):
            raise ValueError("one generator per perceptron required")
        for h, p in zip(self.generators, self.network.perceptrons):
            if h.shape != (2**p.num_qubits, 2**p.num_qubits):
                raise ValueError("generator dimension does not match its perceptron")
            if not is_hermitian(h, atol=1e-10):
                raise ValueError("generators must be Hermitian")

    def unitarity_drift(self) -> float:
        worst = 0.0
        for p in self.network.perceptrons:
            u = materialize(p.unitary)
            worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))))
        return worst


def update_step(flow: MatrixFlowState, epsilon: float) -> MatrixFlowState:
    """One simultaneous update of every perceptron; s advances by epsilon."""
    if epsilon == 0.0:
        return flow
    ps = []
    for p, h in zip(flow.network.perceptrons, flow.generators):
        u = herm_expm(h, epsilon) @ materialize(p.unitary)
        ps.append(replace(p, unitary=u))
    net = replace(flow.network, perceptrons=tuple(ps))
    return MatrixFlowState(network=net, generators=flow.generators, s=flow.s + epsilon)


def flow_cost(flow: MatrixFlowState, cspec: CostSpec, method: str = "auto") -> float:
    return cost(flow.network, cspec, method=method)


def grad_s(flow: MatrixFlowState, cspec: CostSpec, method: str = "auto") -> float:
    """dC/ds: for every perceptron, the trace of its generator against the
    commutator of the forward-propagated state with the backward-propagated
    observable, summed over perceptrons and averaged over pairs.
    """
    spec = flow.network
    if method == "auto":
        method = "statevector" if spec.total_qubits <= 16 else "density"
    if method == "statevector":
        return _grad_s_statevector(flow, cspec)
    return _grad_s_density(flow, cspec)


def _grad_s_statevector(flow: MatrixFlowState, cspec: CostSpec) -> float:
    spec = flow.network
    n = spec.total_qubits
    n_out = spec.n_out
    mats = [materialize(p.unitary) for p in spec.perceptrons]
    targs = [global_targets(spec, p) for p in spec.perceptrons]
    total = 0.0
    for pair in cspec.pairs:
        obs = cost_observable(pair, cspec.kind)
        psi = np.zeros(2**n, dtype=complex)
        psi[: pair.input_vector.size] = pair.input_vector
        for j in range(len(mats)):
            psi = apply_unitary_vec(psi, mats[j], targs[j], n)
            # b carries the generator insertion, a the plain forward state
            b = apply_unitary_vec(psi, flow.generators[j], targs[j], n)
            a = psi
            for k in range(j + 1, len(mats)):
                a = apply_unitary_vec(a, mats[k], targs[k], n)
                b = apply_unitary_vec(b, mats[k], targs[k], n)
            z = _observable_bracket(a, b, obs, n, n_out)
            total += -2.0 * z.imag
    return total / len(cspec.pairs)


def _observable_bracket(a: np.ndarray, b: np.ndarray, obs: np.ndarray, n: int, n_out: int) -> complex:
    # <a| (1 (x) obs) |b> with obs on the top n_out qubits
    am = a.reshape(2**n_out, -1)
    bm = b.reshape(2**n_out, -1)
    return complex(np.einsum("ik,ij,jk->", am.conj(), obs, bm))


def _grad_s_density(flow: MatrixFlowState, cspec: CostSpec) -> float:
    spec = flow.network
    n = spec.total_qubits
    mats = [materialize(p.unitary) for p in spec.perceptrons]
    targs = [global_targets(spec, p) for p in spec.perceptrons]
    total = 0.0
    for pair in cspec.pairs:
        obs = embed_operator(cost_observable(pair, cspec.kind), range(n - spec.n_out, n), n)
        rho = np.zeros((2**n, 2**n), dtype=complex)
        d_in = pair.input_vector.size
        rho[:d_in, :d_in] = np.outer(pair.input_vector, pair.input_vector.conj())
        # o_tilde[j] = observable pulled back through perceptrons after j
        o_tilde = obs
        pulled = [None] * len(mats)
        for j in range(len(mats) - 1, -1, -1):
            pulled[j] = o_tilde
            o_tilde = _conjugate_by(o_tilde, mats[j], targs[j], n, adjoint=True)
        for j in range(len(mats)):
            rho = _conjugate_by(rho, mats[j], targs[j], n, adjoint=False)
            h_full = embed_operator(flow.generators[j], targs[j], n)
            comm = rho @ pulled[j] - pulled[j] @ rho
            total += (1j * np.trace(h_full @ comm)).real
    return total / len(cspec.pairs)


def _conjugate_by(mat: np.ndarray, u: np.ndarray, targets, n: int, adjoint: bool) -> np.ndarray:
    from .linalg import apply_unitary_mat

    return apply_unitary_mat(mat, u.conj().T if adjoint else u, targets, n)


def grad_s_fd(flow: MatrixFlowState, cspec: CostSpec, epsilon: float, method: str = "auto") -> float:
    """Forward difference (C(s+eps) - C(s)) / eps through update_step."""
    c0 = flow_cost(flow, cspec, method=method)
    c1 = flow_cost(update_step(flow, epsilon), cspec, method=method)
    return (c1 - c0) / epsilon
