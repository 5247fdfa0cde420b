"""The m=2 brick network is exactly a layered two-qubit-block circuit.

Each brick layer applies Haar two-qubit blocks on alternating input pairs and
swaps the live state onto the next register, so the dissipative network and
the flat n-qubit circuit built from the same blocks give identical costs; two
dissipative layers collapse into one full (two-offset) circuit layer. The
check below is exact, not statistical.

Run:  python demos/04_brick_to_flat_circuit.py
"""
import numpy as np

from plateau_lab import dqnn
from plateau_lab.ensembles import RngStream, sample_product_training_pair

worst = 0.0
for i in range(50):
    gen = RngStream(99, i).generator()
    layers = 1 + i % 4
    network = dqnn.build_brick_network(4, layers, gen)
    pair = sample_product_training_pair(4, 4, gen)
    kind = "global" if i % 2 == 0 else "local"
    cspec = dqnn.CostSpec(kind, (pair,))
    c_dissipative = dqnn.cost(network, cspec, method="density")
    flat = dqnn.map_to_hardware_efficient(network)
    c_flat = flat.cost(cspec)
    worst = max(worst, abs(c_dissipative - c_flat))
    if i < 5:
        print(
            f"draw {i}: layers={layers} ({flat.num_layers} circuit layer(s)) "
            f"C_dissipative={c_dissipative:.12f}  C_flat={c_flat:.12f}"
        )

print(f"\nmax |C_dissipative - C_flat| over 50 draws: {worst:.3g}")
assert worst < 1e-10
