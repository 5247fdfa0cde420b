"""The simultaneous-update scheme: V <- exp(i eps H) V for every perceptron.

All perceptrons move at once, driven by Hermitian generators expanded in the
Pauli-string basis with Tr[H^2] pinned to 2^(n+1). The derivative of the cost
in the step parameter is a sum of commutator traces, one per perceptron; we
check it against a forward difference through the actual update, then take a
few descent steps to watch the cost move.

Run:  python demos/05_matrix_flow_step.py
"""
import numpy as np

from plateau_lab import dqnn, gradients as gr
from plateau_lab.ensembles import (
    RngStream,
    haar_unitary,
    sample_pauli_hermitian,
    sample_product_training_pair,
)

n = 3
gen = RngStream(2024, 0).generator()
dim = 2 ** (n + 1)

perceptrons = tuple(
    dqnn.Perceptron(1, j, tuple(range(n)), haar_unitary(dim, gen)) for j in range(n)
)
network = dqnn.NetworkSpec((n, n), perceptrons, family="global-deep")
generators = tuple(sample_pauli_hermitian(n + 1, 2.0 ** (n + 1), gen) for _ in range(n))
flow = gr.MatrixFlowState(network=network, generators=generators)

pair = sample_product_training_pair(n, n, gen)
cspec = dqnn.CostSpec("global", (pair,))

g = gr.grad_s(flow, cspec)
for eps in (1e-2, 1e-3, 1e-4):
    fd = gr.grad_s_fd(flow, cspec, eps)
    print(f"eps={eps:7.0e}  forward diff {fd:+.6f}  vs dC/ds {g:+.6f}  "
          f"gap {abs(fd - g):.2e}")

print("\na few steps against the gradient sign:")
for step in range(6):
    c = gr.flow_cost(flow, cspec)
    g = gr.grad_s(flow, cspec)
    print(f"  s={flow.s:+.3f}  C={c:.6f}  dC/ds={g:+.5f}  "
          f"unitarity drift={flow.unitarity_drift():.1e}")
    flow = gr.update_step(flow, -0.05 * np.sign(g))
