"""Shift rule vs finite differences vs the commutator-trace identity, and the
step derivative of the simultaneous-update scheme."""
import dataclasses

import numpy as np
import pytest

from plateau_lab import dqnn, gradients as gr, linalg as la
from plateau_lab.ensembles import (
    RngStream,
    haar_unitary,
    sample_identity_task_pair,
    sample_pauli_hermitian,
    sample_product_training_pair,
)


def toy_setup(theta, kind="global"):
    net = dqnn.build_toy_network(1, [theta])
    pair = dqnn.TrainingPair.from_bits(np.array([1, 0], dtype=complex), [0])
    return net, dqnn.CostSpec(kind, (pair,)), gr.RpqcParameterRef(1, 0)


def fixed_flow(n, seed):
    gen = RngStream(seed, 0).generator()
    dim = 2 ** (n + 1)
    ps = tuple(
        dqnn.Perceptron(1, j, tuple(range(n)), haar_unitary(dim, gen)) for j in range(n)
    )
    net = dqnn.NetworkSpec((n, n), ps, family="global-deep")
    hs = tuple(sample_pauli_hermitian(n + 1, 2.0 ** (n + 1), gen) for _ in range(n))
    pair = sample_product_training_pair(n, n, gen)
    return gr.MatrixFlowState(network=net, generators=hs), pair


class TestShiftRule:
    def test_toy_closed_form_zero(self):
        net, cs, ref = toy_setup(0.0)
        assert gr.grad_theta_shift(net, cs, ref) == pytest.approx(0.0, abs=1e-12)

    def test_toy_closed_form_half(self):
        # dC/dtheta = sin(theta)/2
        net, cs, ref = toy_setup(np.pi / 2)
        assert gr.grad_theta_shift(net, cs, ref) == pytest.approx(0.5, abs=1e-12)

    def test_toy_generic_angle(self):
        net, cs, ref = toy_setup(1.234)
        assert gr.grad_theta_shift(net, cs, ref) == pytest.approx(np.sin(1.234) / 2, abs=1e-12)

    def test_flat_landscape_at_global_minimum(self):
        net = dqnn.build_toy_network(2, [0.0, 0.0])
        pair = dqnn.TrainingPair.from_bits(la.QuantumState.basis([0, 0]).vector, [0, 0])
        cs = dqnn.CostSpec("global", (pair,))
        assert gr.grad_theta_shift(net, cs, gr.RpqcParameterRef(1, 1)) == pytest.approx(
            0.0, abs=1e-12
        )

    @pytest.mark.parametrize("family", ["toy", "global-circuit", "brick"])
    def test_shift_matches_fd_across_families(self, family):
        step = 1e-4
        tol = max(1e-6, 10 * step**2)
        count = 0
        for i in range(50):
            gen = RngStream(ord(family[0]), i).generator()
            if family == "toy":
                n = 1 + i % 3
                net = dqnn.build_toy_network(n, gen.uniform(0, 2 * np.pi, n))
                pair = sample_identity_task_pair(n, gen)
                ref = gr.RpqcParameterRef(1, i % n)
            elif family == "global-circuit":
                n = 1 + i % 2
                net = dqnn.build_global_deep_circuit(n, gen, eta=3)
                pair = sample_product_training_pair(n, n, gen)
                ref = gr.RpqcParameterRef(1, i % n, gate_index=i % 3)
            else:
                n = 2
                net = dqnn.build_brick_network(n, 2, gen, probe_first_block=True)
                pair = sample_product_training_pair(n, n, gen)
                ref = gr.RpqcParameterRef(1, 0)
            cs = dqnn.CostSpec("global" if i % 2 == 0 else "local", (pair,))
            g = gr.grad_theta_shift(net, cs, ref)
            fd = gr.grad_theta_fd(net, cs, ref, step)
            assert abs(g - fd) <= tol, (family, i, g, fd)
            count += 1
        assert count == 50

    def test_fd_taylor_remainder_scaling(self):
        net, cs, ref = toy_setup(0.9)
        g = gr.grad_theta_shift(net, cs, ref)
        for h in (1e-2, 1e-3):
            assert abs(gr.grad_theta_fd(net, cs, ref, h) - g) <= 10 * h**2

    def test_fd_on_constant_cost(self):
        net = dqnn.build_swap_network((1, 1))
        # attach an angle by replacing with a zero-rotation toy perceptron
        net = dqnn.build_toy_network(1, [0.0])
        pair = dqnn.TrainingPair.from_bits(np.array([1, 0], dtype=complex), [0])
        cs = dqnn.CostSpec("global", (pair,))
        # landscape is flat at the minimum: central difference stays tiny
        assert abs(gr.grad_theta_fd(net, cs, gr.RpqcParameterRef(1, 0), 1e-4)) <= 1e-8

    def test_odd_symmetry_in_theta(self):
        for theta in (0.3, 1.0):
            net_p, cs, ref = toy_setup(theta)
            net_m, _, _ = toy_setup(-theta)
            gp = gr.grad_theta_shift(net_p, cs, ref)
            gm = gr.grad_theta_shift(net_m, cs, ref)
            assert gp == pytest.approx(-gm, abs=1e-12)

    def test_fd_step_must_be_positive(self):
        net, cs, ref = toy_setup(0.1)
        with pytest.raises(ValueError):
            gr.grad_theta_fd(net, cs, ref, 0.0)

    def test_non_involutory_generator_falls_back_to_fd(self):
        # a generator without a +-1 spectrum is outside the shift rule; the
        # shift entry point silently delegates to central differences
        gamma = la.kron(np.diag([1.0, 3.0]).astype(complex), la.ID2)
        p = dqnn.Perceptron(1, 0, (0,), dqnn.ShiftGate(gamma=gamma, theta=0.4, right=la.SWAP2))
        net = dqnn.NetworkSpec((1, 1), (p,), family="custom")
        pair = dqnn.TrainingPair.from_bits(np.array([1, 0], dtype=complex), [1])
        cs = dqnn.CostSpec("global", (pair,))
        ref = gr.RpqcParameterRef(1, 0)
        g = gr.grad_theta_shift(net, cs, ref)
        assert g == pytest.approx(gr.grad_theta_fd(net, cs, ref, 1e-5), abs=1e-7)


class TestCommutatorIdentity:
    def test_two_qubit_instance(self):
        # the derivative assembled as a commutator trace equals the shift value
        gen = RngStream(21, 0).generator()
        net = dqnn.build_global_deep_haar(1, gen)
        pair = sample_product_training_pair(1, 1, gen)
        for kind in ("global", "local"):
            cs = dqnn.CostSpec(kind, (pair,))
            ref = gr.RpqcParameterRef(1, 0)
            a = gr.grad_theta_shift(net, cs, ref)
            b = gr.grad_theta_commutator(net, cs, ref)
            assert abs(a - b) <= 1e-9

    def test_gate_sequence_instance(self):
        gen = RngStream(22, 0).generator()
        net = dqnn.build_global_deep_circuit(1, gen, eta=4)
        pair = sample_product_training_pair(1, 1, gen)
        cs = dqnn.CostSpec("global", (pair,))
        for k in range(4):
            ref = gr.RpqcParameterRef(1, 0, gate_index=k)
            assert abs(
                gr.grad_theta_shift(net, cs, ref) - gr.grad_theta_commutator(net, cs, ref)
            ) <= 1e-9


class TestMatrixFlow:
    def test_zero_generators_zero_derivative(self):
        flow, pair = fixed_flow(2, seed=31)
        zeros = tuple(np.zeros_like(h) for h in flow.generators)
        flow0 = gr.MatrixFlowState(network=flow.network, generators=zeros)
        assert gr.grad_s(flow0, dqnn.CostSpec("global", (pair,))) == 0.0

    def test_statevector_matches_density_path(self):
        flow, pair = fixed_flow(2, seed=32)
        for kind in ("global", "local"):
            cs = dqnn.CostSpec(kind, (pair,))
            a = gr.grad_s(flow, cs, method="statevector")
            b = gr.grad_s(flow, cs, method="density")
            assert abs(a - b) < 1e-10

    def test_fd_consistency_with_ratio(self):
        for seed in range(5):
            flow, pair = fixed_flow(1 + seed % 3, seed=40 + seed)
            cs = dqnn.CostSpec("global" if seed % 2 else "local", (pair,))
            g = gr.grad_s(flow, cs)
            e1 = abs(gr.grad_s_fd(flow, cs, 1e-3) - g)
            e2 = abs(gr.grad_s_fd(flow, cs, 1e-4) - g)
            # first-order error shrinks linearly in epsilon
            assert e1 < 1e-10 or e2 <= e1 / 5 + 1e-12

    def test_single_perceptron_analytic(self):
        # n=1, H = X on the output qubit: d/ds Tr[O e^{isH} V rho V^dag e^{-isH}]
        # at s=0 expanded by hand as i Tr[H [V rho V^dag, O]]
        gen = RngStream(33, 0).generator()
        v = haar_unitary(4, gen)
        h = la.kron(la.PAULI_X, la.ID2)  # X on the output qubit of the pair
        ps = (dqnn.Perceptron(1, 0, (0,), v),)
        net = dqnn.NetworkSpec((1, 1), ps, family="global-deep")
        pair = sample_product_training_pair(1, 1, gen)
        flow = gr.MatrixFlowState(network=net, generators=(h,))
        cs = dqnn.CostSpec("global", (pair,))
        rho_full = np.zeros((4, 4), dtype=complex)
        rho_full[:2, :2] = np.outer(pair.input_vector, pair.input_vector.conj())
        obs = la.embed_operator(dqnn.global_observable(pair), [1], 2)
        vrv = v @ rho_full @ v.conj().T
        hand = (1j * np.trace(h @ (vrv @ obs - obs @ vrv))).real
        assert gr.grad_s(flow, cs) == pytest.approx(hand, abs=1e-12)

    def test_linearity_in_each_generator(self):
        flow, pair = fixed_flow(2, seed=34)
        cs = dqnn.CostSpec("global", (pair,))
        n = len(flow.generators)
        parts = []
        for j in range(n):
            only_j = tuple(
                flow.generators[i] if i == j else np.zeros_like(flow.generators[i])
                for i in range(n)
            )
            parts.append(gr.grad_s(gr.MatrixFlowState(network=flow.network, generators=only_j), cs))
            doubled = tuple(
                2 * flow.generators[i] if i == j else np.zeros_like(flow.generators[i])
                for i in range(n)
            )
            assert gr.grad_s(
                gr.MatrixFlowState(network=flow.network, generators=doubled), cs
            ) == pytest.approx(2 * parts[-1], abs=1e-12)
        assert sum(parts) == pytest.approx(gr.grad_s(flow, cs), abs=1e-10)


class TestUpdateStep:
    def test_zero_epsilon_is_identity(self):
        flow, _ = fixed_flow(2, seed=35)
        assert gr.update_step(flow, 0.0) is flow

    def test_one_parameter_group(self):
        flow, _ = fixed_flow(2, seed=36)
        one = gr.update_step(flow, 0.4)
        half = gr.update_step(gr.update_step(flow, 0.2), 0.2)
        for pa, pb in zip(one.network.perceptrons, half.network.perceptrons):
            assert np.max(np.abs(dqnn.materialize(pa.unitary) - dqnn.materialize(pb.unitary))) < 1e-10
        assert one.s == pytest.approx(half.s)

    def test_unitarity_drift_after_many_steps(self):
        flow, _ = fixed_flow(1, seed=37)
        for _ in range(1000):
            flow = gr.update_step(flow, 1e-3)
        assert flow.unitarity_drift() < 1e-8

    def test_fd_of_cost_through_update_step(self):
        flow, pair = fixed_flow(2, seed=38)
        cs = dqnn.CostSpec("global", (pair,))
        g = gr.grad_s(flow, cs)
        fd = gr.grad_s_fd(flow, cs, 1e-5)
        assert abs(fd - g) < 1e-3 * max(1.0, abs(g))

    def test_generator_validation(self):
        flow, _ = fixed_flow(1, seed=39)
        with pytest.raises(ValueError):
            gr.MatrixFlowState(network=flow.network, generators=(np.eye(2, dtype=complex),))
